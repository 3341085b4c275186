// Copyright 2026  The adpit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "adpit/core.hpp"
#include "adpit/errors.hpp"
#include "adpit/inference.hpp"
#include "adpit/io.hpp"
#include "adpit/metrics.hpp"
#include "adpit/model.hpp"
#include "adpit/permutations.hpp"
#include "adpit/pit_loss.hpp"
#include "adpit/synth.hpp"
#include "adpit/train.hpp"
