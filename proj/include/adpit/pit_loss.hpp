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

// Frame-level PIT losses for the multi-ACCDOA format.
//
//   non-class-wise:  L = 1/T  sum_t  min_a  1/(NC) sum_{n,c} MSE(P*_a, P^)
//   class-wise:      L = 1/(CT) sum_{c,t} min_a 1/N sum_n MSE(P*_a, P^)
//
// MSE is the mean over the three Cartesian components. Class-wise PIT and
// class-wise ADPIT share the formula and differ only in their assignment sets.
// Ties go to the lowest assignment index in generation order. The gradient
// holds the argmin assignment fixed.

#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "adpit/core.hpp"
#include "adpit/permutations.hpp"

namespace adpit {

struct LossOptions {
  int threads = 1;
  bool with_gradient = true;
};

struct LossReport {
  double loss = 0.0;
  PitVariant variant = PitVariant::ClassWiseAdpit;
  // Argmin per (c, t) cell at index c * T + t for the class-wise variants, per
  // frame t for the non-class-wise variant.
  std::vector<Assignment> chosen;
  std::vector<int> chosen_index;
  AccdoaGrid gradient;
};

namespace detail {

inline double squared_error(const Direction& target, const Direction& pred) {
  const double dx = target.x - pred.x;
  const double dy = target.y - pred.y;
  const double dz = target.z - pred.z;
  return dx * dx + dy * dy + dz * dz;
}

inline void check_reference(const AccdoaGrid& predictions, const EncodedReference& reference) {
  if (!predictions.same_shape(reference.grid))
    throw ContractError("prediction shape " + predictions.shape_string() + " does not match reference shape " +
                        reference.grid.shape_string());
  const auto& g = reference.grid;
  if (reference.occupied.size() != static_cast<std::size_t>(g.n_tracks()) * g.n_classes() * g.n_frames() ||
      reference.activity.n_classes() != g.n_classes() || reference.activity.n_frames() != g.n_frames())
    throw ContractError("reference occupancy/activity shape does not match its grid");
}

// Runs body(t) for every frame, split into contiguous frame ranges.
template <typename Body>
void for_each_frame(int n_frames, int threads, Body&& body) {
  if (threads <= 1 || n_frames < 2) {
    for (int t = 0; t < n_frames; ++t) body(t);
    return;
  }
  const int workers = std::min(threads, n_frames);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n_frames) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n_frames) * (w + 1) / workers);
    pool.emplace_back([&body, begin, end] {
      for (int t = begin; t < end; ++t) body(t);
    });
  }
}

// Per-track target of an assignment within one class-wise cell.
inline Direction cell_target(const Assignment& a, int n, const std::vector<Direction>& targets) {
  return a[n] == kZeroTarget ? Direction{} : targets[a[n]];
}

struct JointEvent {
  int class_id;
  Direction direction;
};

}  // namespace detail

inline LossReport pit_loss(const AccdoaGrid& predictions, const EncodedReference& reference, PitVariant variant,
                           const LossOptions& options = {}) {
  detail::check_reference(predictions, reference);
  const int N = predictions.n_tracks();
  const int C = predictions.n_classes();
  const int T = predictions.n_frames();
  const PermutationTable table(variant, N);

  LossReport report;
  report.variant = variant;
  if (options.with_gradient) report.gradient = AccdoaGrid(N, C, T);
  const double grad_scale = T > 0 ? 2.0 / (3.0 * N * C * T) : 0.0;

  if (variant == PitVariant::NonClassWise) {
    report.chosen.resize(T);
    report.chosen_index.assign(T, 0);
    std::vector<double> frame_loss(T, 0.0);
    std::vector<std::string> errors(T);
    detail::for_each_frame(T, options.threads, [&](int t) {
      std::vector<detail::JointEvent> events;
      for (int c = 0; c < C; ++c) {
        int count = 0;
        for (int n = 0; n < N; ++n)
          if (reference.is_occupied(n, c, t)) {
            events.push_back({c, reference.grid.vector(n, c, t)});
            ++count;
          }
        if (count != reference.activity(c, t)) {
          errors[t] = "reference activity count disagrees with occupancy at class " + std::to_string(c) +
                      ", frame " + std::to_string(t);
          return;
        }
      }
      if (static_cast<int>(events.size()) > N) {
        errors[t] = "frame " + std::to_string(t) + " has " + std::to_string(events.size()) +
                    " active events; non-class-wise PIT holds " + std::to_string(N);
        return;
      }
      const auto& assignments = table.for_targets(static_cast<int>(events.size()));
      double best = 0.0;
      int best_index = -1;
      for (std::size_t k = 0; k < assignments.size(); ++k) {
        const Assignment& a = assignments[k];
        double sum = 0.0;
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            Direction target;
            if (a[n] != kZeroTarget && events[a[n]].class_id == c) target = events[a[n]].direction;
            sum += detail::squared_error(target, predictions.vector(n, c, t)) / 3.0;
          }
        const double l = sum / (static_cast<double>(N) * C);
        if (best_index < 0 || l < best) {
          best = l;
          best_index = static_cast<int>(k);
        }
      }
      frame_loss[t] = best;
      report.chosen_index[t] = best_index;
      report.chosen[t] = assignments[best_index];
      if (options.with_gradient) {
        const Assignment& a = assignments[best_index];
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            Direction target;
            if (a[n] != kZeroTarget && events[a[n]].class_id == c) target = events[a[n]].direction;
            report.gradient.set_vector(n, c, t, (predictions.vector(n, c, t) - target) * grad_scale);
          }
      }
    });
    for (const auto& e : errors)
      if (!e.empty()) throw CapacityError(e);
    double total = 0.0;
    for (int t = 0; t < T; ++t) total += frame_loss[t];
    report.loss = T > 0 ? total / T : 0.0;
    return report;
  }

  // Class-wise PIT and class-wise ADPIT.
  report.chosen.resize(static_cast<std::size_t>(C) * T);
  report.chosen_index.assign(static_cast<std::size_t>(C) * T, 0);
  std::vector<double> cell_loss(static_cast<std::size_t>(C) * T, 0.0);
  std::vector<std::string> errors(T);
  detail::for_each_frame(T, options.threads, [&](int t) {
    for (int c = 0; c < C; ++c) {
      const auto targets = reference.targets(c, t);
      if (static_cast<int>(targets.size()) != reference.activity(c, t)) {
        errors[t] = "reference activity count disagrees with occupancy at class " + std::to_string(c) +
                    ", frame " + std::to_string(t);
        return;
      }
      const auto& assignments = table.for_targets(static_cast<int>(targets.size()));
      double best = 0.0;
      int best_index = -1;
      for (std::size_t k = 0; k < assignments.size(); ++k) {
        double sum = 0.0;
        for (int n = 0; n < N; ++n)
          sum += detail::squared_error(detail::cell_target(assignments[k], n, targets),
                                       predictions.vector(n, c, t)) /
                 3.0;
        const double l = sum / N;
        if (best_index < 0 || l < best) {
          best = l;
          best_index = static_cast<int>(k);
        }
      }
      const std::size_t cell = static_cast<std::size_t>(c) * T + t;
      cell_loss[cell] = best;
      report.chosen_index[cell] = best_index;
      report.chosen[cell] = assignments[best_index];
      if (options.with_gradient)
        for (int n = 0; n < N; ++n)
          report.gradient.set_vector(
              n, c, t,
              (predictions.vector(n, c, t) - detail::cell_target(assignments[best_index], n, targets)) *
                  grad_scale);
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ContractError(e);
  double total = 0.0;
  for (double l : cell_loss) total += l;
  report.loss = T > 0 ? total / (static_cast<double>(C) * T) : 0.0;
  return report;
}

inline AccdoaGrid pit_loss_gradient(const AccdoaGrid& predictions, const EncodedReference& reference,
                                    PitVariant variant, int threads = 1) {
  return pit_loss(predictions, reference, variant, {threads, true}).gradient;
}

// Plain MSE against a fixed target grid, reduced per (c, t) cell in the same
// order as the class-wise losses.
inline double mse_loss(const AccdoaGrid& predictions, const AccdoaGrid& target, AccdoaGrid* gradient = nullptr) {
  if (!predictions.same_shape(target))
    throw ContractError("prediction shape " + predictions.shape_string() + " does not match target shape " +
                        target.shape_string());
  const int N = predictions.n_tracks();
  const int C = predictions.n_classes();
  const int T = predictions.n_frames();
  if (gradient) *gradient = AccdoaGrid(N, C, T);
  const double grad_scale = T > 0 ? 2.0 / (3.0 * N * C * T) : 0.0;
  double total = 0.0;
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (int n = 0; n < N; ++n) {
        sum += detail::squared_error(target.vector(n, c, t), predictions.vector(n, c, t)) / 3.0;
        if (gradient)
          gradient->set_vector(n, c, t, (predictions.vector(n, c, t) - target.vector(n, c, t)) * grad_scale);
      }
      total += sum / N;
    }
  return T > 0 ? total / (static_cast<double>(C) * T) : 0.0;
}

}  // namespace adpit
