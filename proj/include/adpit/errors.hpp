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

#include <stdexcept>
#include <string>

namespace adpit {

// Input outside the mathematical domain of an operation (angles out of
// range, zero-norm vectors, M > N, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// More simultaneous events than the output format can hold, or a track count
// beyond what exhaustive enumeration supports.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Mismatched shapes or otherwise inconsistent arguments.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed files and I/O failures. The message carries the file context.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adpit
