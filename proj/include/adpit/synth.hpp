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

// Deterministic synthetic SELD scenes.
//
// Events get a random class, onset and duration, and are either static or move
// along a great circle at one of the configured angular speeds. Frame features
// are the sum over active events of (class embedding) * (embedding of the
// quantized direction), plus Gaussian noise. Embeddings depend only on the
// world seed, so every scene of one world shares them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "adpit/core.hpp"
#include "adpit/io.hpp"

namespace adpit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent child seed for stream `stream` of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master;
  splitmix64(s);
  s ^= stream * 0xD1B54A32D192ED03ULL;
  return splitmix64(s);
}

// mt19937_64 output is fixed by the standard; the distributions below are
// written out so results do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive range, rejection sampled.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return lo + static_cast<int>(x % span);
  }
  bool bernoulli(double p) { return uniform() < p; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do u1 = uniform();
    while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SceneConfig {
  int n_classes = 12;
  int n_frames = 200;
  int max_overlap = 3;
  double same_class_overlap_prob = 0.3;
  std::vector<double> move_speeds_deg_per_s{10.0, 20.0, 40.0};
  double moving_prob = 0.5;
  std::uint64_t seed = 0;

  int feature_dim = 64;
  double noise_std = 0.05;
  double frame_period_s = 0.1;
  int min_event_frames = 5;
  int max_event_frames = 30;
  int n_events = 0;  // 0: one event per 8 frames
  double min_elevation_deg = -40.0;
  double max_elevation_deg = 40.0;
  // Concurrent same-class events stay at least this far apart.
  double min_same_class_separation_deg = 45.0;
  double quantization_deg = 10.0;
  // Frequency scale of the random Fourier direction embedding.
  double direction_feature_scale = 2.0;

  void validate() const {
    if (n_classes < 1) throw ContractError("scene config: n_classes must be >= 1");
    if (n_frames < 1) throw ContractError("scene config: n_frames must be >= 1");
    if (max_overlap < 1) throw ContractError("scene config: max_overlap must be >= 1");
    if (!(same_class_overlap_prob >= 0.0 && same_class_overlap_prob <= 1.0))
      throw ContractError("scene config: same_class_overlap_prob must lie in [0, 1]");
    if (!(moving_prob >= 0.0 && moving_prob <= 1.0))
      throw ContractError("scene config: moving_prob must lie in [0, 1]");
    if (move_speeds_deg_per_s.empty()) throw ContractError("scene config: no move speeds");
    if (feature_dim < 1) throw ContractError("scene config: feature_dim must be >= 1");
    if (min_event_frames < 1 || max_event_frames < min_event_frames)
      throw ContractError("scene config: bad event duration range");
    if (!(min_elevation_deg >= -90.0 && max_elevation_deg <= 90.0 && min_elevation_deg <= max_elevation_deg))
      throw ContractError("scene config: bad elevation range");
    if (!(quantization_deg > 0.0)) throw ContractError("scene config: quantization must be positive");
    if (!(noise_std >= 0.0)) throw ContractError("scene config: noise_std must be >= 0");
  }
};

struct SceneEvent {
  int class_id = 0;
  int source_id = 0;
  int onset = 0;
  int n_frames = 0;  // active on [onset, onset + n_frames)
  Direction start;
  Direction rotation_axis;     // unit, orthogonal to start; unused when static
  double speed_deg_per_frame = 0.0;

  int end() const { return onset + n_frames; }
  bool active(int t) const { return t >= onset && t < end(); }
  Direction at(int t) const {
    if (speed_deg_per_frame == 0.0) return start;
    const double theta = deg_to_rad(speed_deg_per_frame * (t - onset));
    const Direction d = start * std::cos(theta) + cross(rotation_axis, start) * std::sin(theta);
    return d.normalized();
  }
};

struct Scene {
  int n_frames = 0;
  std::vector<SceneEvent> events;
  std::vector<EventAnnotation> annotations;  // sorted by (frame, class, source)
  FeatureMatrix features;
};

inline Direction quantize_direction(const Direction& d, double step_deg) {
  const Angles a = angles_from_direction(d);
  const double az = std::clamp(std::round(a.azimuth_deg / step_deg) * step_deg, -180.0, 180.0);
  const double el = std::clamp(std::round(a.elevation_deg / step_deg) * step_deg, -90.0, 90.0);
  return direction_from_angles(az, el);
}

class SyntheticWorld {
 public:
  explicit SyntheticWorld(SceneConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(derive_seed(cfg_.seed, 0));
    const int F = cfg_.feature_dim;
    class_embedding_.resize(static_cast<std::size_t>(cfg_.n_classes) * F);
    for (auto& v : class_embedding_) v = rng.normal();
    frequencies_.resize(static_cast<std::size_t>(F));
    phases_.resize(static_cast<std::size_t>(F));
    for (int j = 0; j < F; ++j) {
      frequencies_[j] = Direction{rng.normal(), rng.normal(), rng.normal()} * cfg_.direction_feature_scale;
      phases_[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }

  const SceneConfig& config() const { return cfg_; }

  // Scene `index` of this world; identical (config, index) -> identical scene.
  Scene generate_scene(std::uint64_t index) const {
    const auto& cfg = cfg_;
    if (cfg.n_frames < cfg.min_event_frames)
      throw CapacityError("scene of " + std::to_string(cfg.n_frames) + " frames cannot hold an event of " +
                          std::to_string(cfg.min_event_frames) + " frames");
    if (cfg.same_class_overlap_prob > 0.0 && cfg.max_overlap < 2)
      throw CapacityError("same-class overlaps requested with max_overlap < 2");

    Rng rng(derive_seed(cfg.seed, index + 1));
    const int target = cfg.n_events > 0 ? cfg.n_events : std::max(1, cfg.n_frames / 8);
    Scene scene;
    scene.n_frames = cfg.n_frames;
    const int max_attempts = 50 * target;
    for (int attempt = 0; attempt < max_attempts && static_cast<int>(scene.events.size()) < target; ++attempt) {
      SceneEvent ev;
      const int longest = std::min(cfg.max_event_frames, cfg.n_frames);
      ev.n_frames = rng.uniform_int(cfg.min_event_frames, longest);
      const bool same_class = !scene.events.empty() && rng.bernoulli(cfg.same_class_overlap_prob);
      if (same_class) {
        const auto& other = scene.events[rng.uniform_int(0, static_cast<int>(scene.events.size()) - 1)];
        ev.class_id = other.class_id;
        const int lo = std::max(0, other.onset - ev.n_frames + 1);
        const int hi = std::min(cfg.n_frames - ev.n_frames, other.end() - 1);
        if (lo > hi) continue;
        ev.onset = rng.uniform_int(lo, hi);
      } else {
        ev.class_id = rng.uniform_int(0, cfg.n_classes - 1);
        ev.onset = rng.uniform_int(0, cfg.n_frames - ev.n_frames);
      }
      ev.source_id = static_cast<int>(scene.events.size());
      bool placed = false;
      for (int retry = 0; retry < 10 && !placed; ++retry) {
        sample_trajectory(rng, ev);
        placed = fits(scene, ev, /*allow_same_class=*/same_class);
      }
      if (placed) scene.events.push_back(ev);
    }
    if (scene.events.empty()) throw CapacityError("could not place any event under the overlap constraints");

    for (int t = 0; t < cfg.n_frames; ++t)
      for (const auto& ev : scene.events)
        if (ev.active(t)) scene.annotations.push_back({t, ev.class_id, ev.source_id, ev.at(t)});
    std::sort(scene.annotations.begin(), scene.annotations.end(), [](const auto& l, const auto& r) {
      if (l.frame != r.frame) return l.frame < r.frame;
      if (l.class_id != r.class_id) return l.class_id < r.class_id;
      return l.source_id < r.source_id;
    });
    scene.features = synthesize_features(scene, rng);
    return scene;
  }

  // Feature vector of a single event of class c at direction d, without noise.
  std::vector<double> event_feature(int class_id, const Direction& d) const {
    const int F = cfg_.feature_dim;
    const Direction q = quantize_direction(d, cfg_.quantization_deg);
    std::vector<double> f(F);
    for (int j = 0; j < F; ++j)
      f[j] = class_embedding_[static_cast<std::size_t>(class_id) * F + j] * std::numbers::sqrt2 *
             std::cos(frequencies_[j].dot(q) + phases_[j]);
    return f;
  }

 private:
  void sample_trajectory(Rng& rng, SceneEvent& ev) const {
    const double az = rng.uniform(-180.0, 180.0);
    const double el = rng.uniform(cfg_.min_elevation_deg, cfg_.max_elevation_deg);
    ev.start = direction_from_angles(az, el);
    ev.speed_deg_per_frame = 0.0;
    ev.rotation_axis = {};
    if (rng.bernoulli(cfg_.moving_prob)) {
      const auto& speeds = cfg_.move_speeds_deg_per_s;
      const double speed = speeds[rng.uniform_int(0, static_cast<int>(speeds.size()) - 1)];
      ev.speed_deg_per_frame = speed * cfg_.frame_period_s;
      // Random heading in the tangent plane at the start direction.
      Direction east = cross(Direction{0, 0, 1}, ev.start);
      if (east.norm() < 1e-9) east = {0, 1, 0};
      east = east.normalized();
      const Direction north = cross(ev.start, east);
      const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Direction tangent = east * std::cos(heading) + north * std::sin(heading);
      ev.rotation_axis = cross(ev.start, tangent).normalized();
    }
  }

  bool fits(const Scene& scene, const SceneEvent& ev, bool allow_same_class) const {
    for (int t = ev.onset; t < ev.end(); ++t) {
      int active = 1;
      for (const auto& other : scene.events) {
        if (!other.active(t)) continue;
        ++active;
        if (other.class_id != ev.class_id) continue;
        if (!allow_same_class) return false;
        if (angle_between(other.at(t), ev.at(t)) < cfg_.min_same_class_separation_deg) return false;
      }
      if (active > cfg_.max_overlap) return false;
    }
    return true;
  }

  FeatureMatrix synthesize_features(const Scene& scene, Rng& rng) const {
    const int F = cfg_.feature_dim;
    FeatureMatrix fm{F, scene.n_frames, std::vector<double>(static_cast<std::size_t>(F) * scene.n_frames, 0.0)};
    for (const auto& a : scene.annotations) {
      const auto f = event_feature(a.class_id, a.direction);
      auto row = fm.frame(a.frame);
      for (int j = 0; j < F; ++j) row[j] += f[j];
    }
    for (auto& v : fm.values) v += cfg_.noise_std * rng.normal();
    return fm;
  }

  SceneConfig cfg_;
  std::vector<double> class_embedding_;  // C x F
  std::vector<Direction> frequencies_;   // F
  std::vector<double> phases_;           // F
};

inline Scene generate_scene(const SceneConfig& cfg) { return SyntheticWorld(cfg).generate_scene(0); }

// Fraction of annotation rows that sit in a (frame, class) cell with two or
// more events.
inline double same_class_overlap_fraction(std::span<const EventAnnotation> annotations) {
  if (annotations.empty()) return 0.0;
  std::map<std::pair<int, int>, int> counts;
  for (const auto& a : annotations) ++counts[{a.frame, a.class_id}];
  std::size_t overlapped = 0;
  for (const auto& a : annotations)
    if (counts[{a.frame, a.class_id}] >= 2) ++overlapped;
  return static_cast<double>(overlapped) / static_cast<double>(annotations.size());
}

}  // namespace adpit
