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

// Training the toy model on synthetic scenes and the single- vs multi-ACCDOA
// comparison.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adpit/core.hpp"
#include "adpit/inference.hpp"
#include "adpit/metrics.hpp"
#include "adpit/model.hpp"
#include "adpit/pit_loss.hpp"
#include "adpit/synth.hpp"

namespace adpit {

enum class OutputFormat { Single, Multi };

inline OutputFormat parse_format(std::string_view s) {
  if (s == "single") return OutputFormat::Single;
  if (s == "multi") return OutputFormat::Multi;
  throw ContractError("unknown output format '" + std::string(s) + "' (expected single or multi)");
}

struct TrainConfig {
  OutputFormat format = OutputFormat::Multi;
  PitVariant variant = PitVariant::ClassWiseAdpit;
  int n_tracks = 3;
  int hidden = 128;
  int epochs = 20;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  InferenceConfig inference;
  MatchConfig match;
  int threads = 1;
  bool validate_each_epoch = true;

  int tracks() const { return format == OutputFormat::Single ? 1 : n_tracks; }
  std::string label() const {
    return format == OutputFormat::Single ? "single" : "multi-" + std::string(variant_name(variant));
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<StratifiedScores> validation;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
};

inline ToyModel make_model(const TrainConfig& cfg, int feature_dim, int n_classes) {
  ToyModel model(ModelShape{feature_dim, cfg.hidden, cfg.tracks(), n_classes});
  model.initialize(derive_seed(cfg.seed, 0x6d6f64656cULL));
  return model;
}

namespace detail {

// All frames of a scene list laid end to end.
struct FramePool {
  FeatureMatrix features;
  EncodedReference multi;   // used by the multi format
  AccdoaGrid single;        // used by the single format
};

inline FramePool pool_frames(std::span<const Scene> scenes, int n_classes, const TrainConfig& cfg) {
  FramePool pool;
  std::vector<EventAnnotation> all;
  int offset = 0;
  int dim = scenes.empty() ? 0 : scenes.front().features.dim;
  for (const auto& s : scenes) {
    if (s.features.dim != dim) throw ContractError("scenes disagree on feature dimension");
    for (auto a : s.annotations) {
      a.frame += offset;
      all.push_back(a);
    }
    offset += s.n_frames;
  }
  pool.features = {dim, offset, {}};
  pool.features.values.reserve(static_cast<std::size_t>(dim) * offset);
  for (const auto& s : scenes)
    pool.features.values.insert(pool.features.values.end(), s.features.values.begin(), s.features.values.end());
  if (cfg.format == OutputFormat::Single)
    pool.single = encode_single_accdoa(all, n_classes, offset).grid;
  else
    pool.multi = encode_multi_accdoa(all, cfg.n_tracks, n_classes, offset);
  return pool;
}

inline EncodedReference gather_reference(const EncodedReference& ref, std::span<const int> frames) {
  const int N = ref.grid.n_tracks(), C = ref.grid.n_classes(), B = static_cast<int>(frames.size());
  EncodedReference out{AccdoaGrid(N, C, B), std::vector<std::uint8_t>(static_cast<std::size_t>(N) * C * B, 0),
                       FrameActivityIndex(C, B)};
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      out.activity(c, b) = ref.activity(c, frames[b]);
      for (int n = 0; n < N; ++n) {
        out.grid.set_vector(n, c, b, ref.grid.vector(n, c, frames[b]));
        out.set_occupied(n, c, b, ref.is_occupied(n, c, frames[b]));
      }
    }
  return out;
}

inline AccdoaGrid gather_grid(const AccdoaGrid& grid, std::span<const int> frames) {
  AccdoaGrid out(grid.n_tracks(), grid.n_classes(), static_cast<int>(frames.size()));
  for (int b = 0; b < static_cast<int>(frames.size()); ++b)
    for (int c = 0; c < grid.n_classes(); ++c)
      for (int n = 0; n < grid.n_tracks(); ++n) out.set_vector(n, c, b, grid.vector(n, c, frames[b]));
  return out;
}

}  // namespace detail

// Loss and parameter gradient of the model on a set of pooled frames.
inline double batch_loss_and_gradient(const ToyModel& model, const detail::FramePool& pool,
                                      std::span<const int> frames, const TrainConfig& cfg,
                                      std::span<double> grad) {
  const auto& shape = model.shape();
  const int B = static_cast<int>(frames.size());
  std::vector<ToyModel::Activations> acts(B);
  AccdoaGrid pred(shape.n_tracks, shape.n_classes, B);
  for (int b = 0; b < B; ++b) {
    model.forward(pool.features.frame(frames[b]), acts[b]);
    model.write_frame(acts[b].y, pred, b);
  }
  double loss = 0.0;
  AccdoaGrid dgrid;
  if (cfg.format == OutputFormat::Single) {
    loss = mse_loss(pred, detail::gather_grid(pool.single, frames), &dgrid);
  } else {
    auto report = pit_loss(pred, detail::gather_reference(pool.multi, frames), cfg.variant, {cfg.threads, true});
    loss = report.loss;
    dgrid = std::move(report.gradient);
  }
  std::vector<double> dy(shape.output_dim());
  for (int b = 0; b < B; ++b) {
    model.read_frame(dgrid, b, dy);
    model.backward(pool.features.frame(frames[b]), acts[b], dy, grad);
  }
  return loss;
}

// Predicted events of one scene, after unification.
inline std::vector<EventAnnotation> predict_events(const ToyModel& model, const FeatureMatrix& features,
                                                   const InferenceConfig& cfg) {
  const auto events = infer(model.predict(features), cfg);
  return to_annotations(events);
}

// Matches predictions to references scene by scene; frames are offset so
// cells and ER segments never straddle scenes.
inline std::vector<CellMatch> match_scenes(const ToyModel& model, std::span<const Scene> scenes,
                                           const InferenceConfig& icfg, const MatchConfig& mcfg) {
  std::vector<CellMatch> cells;
  int offset = 0;
  for (const auto& s : scenes) {
    const auto preds = predict_events(model, s.features, icfg);
    auto scene_cells = match_cells(s.annotations, preds);
    for (auto& c : scene_cells) {
      c.frame += offset;
      cells.push_back(std::move(c));
    }
    offset += (s.n_frames + mcfg.segment_frames - 1) / mcfg.segment_frames * mcfg.segment_frames;
  }
  return cells;
}

inline StratifiedScores evaluate_model(const ToyModel& model, std::span<const Scene> scenes,
                                       const InferenceConfig& icfg, const MatchConfig& mcfg) {
  const auto cells = match_scenes(model, scenes, icfg, mcfg);
  return stratified_scores(cells, mcfg);
}

// Mini-batch Adam training. Single-threaded updates; identical inputs give an
// identical trajectory.
inline TrainingLog train(ToyModel& model, std::span<const Scene> train_scenes, std::span<const Scene> val_scenes,
                         const TrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw ContractError("bad epoch count or batch size");
  if (model.shape().n_tracks != cfg.tracks())
    throw ContractError("model has " + std::to_string(model.shape().n_tracks) + " tracks, format needs " +
                        std::to_string(cfg.tracks()));
  const int C = model.shape().n_classes;
  const auto pool = detail::pool_frames(train_scenes, C, cfg);
  if (pool.features.dim != model.shape().input_dim && pool.features.n_frames > 0)
    throw ContractError("feature dimension does not match model input");

  Adam adam(model.parameters().size(), cfg.learning_rate);
  Rng rng(derive_seed(cfg.seed, 0x7368756666ULL));
  std::vector<int> order(pool.features.n_frames);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.parameters().size());

  TrainingLog log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with the portable generator.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const int> frames(order.data() + begin, end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss = batch_loss_and_gradient(model, pool, frames, cfg, grad);
      if (!std::isfinite(loss))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                              std::to_string(begin));
      weighted += loss * static_cast<double>(frames.size());
      adam.step(model.parameters(), grad);
    }
    EpochLog entry{epoch, order.empty() ? 0.0 : weighted / static_cast<double>(order.size()), std::nullopt};
    if (cfg.validate_each_epoch && !val_scenes.empty())
      entry.validation = evaluate_model(model, val_scenes, cfg.inference, cfg.match);
    log.epochs.push_back(std::move(entry));
  }
  return log;
}

inline void write_training_log(std::ostream& out, const TrainConfig& cfg, const TrainingLog& log) {
  out << "# training " << cfg.label() << " tracks=" << cfg.tracks() << " epochs=" << cfg.epochs
      << " lr=" << format_double(cfg.learning_rate) << " batch=" << cfg.batch_size << " seed=" << cfg.seed << '\n';
  for (const auto& e : log.epochs) {
    out << "epoch=" << e.epoch << " loss=" << format_metric(e.train_loss, 8);
    if (e.validation) {
      const auto& v = *e.validation;
      out << " er20=" << format_metric(v.overall.er20, 4) << " f20=" << format_metric(v.overall.f20, 4)
          << " le_cd=" << format_metric(v.overall.le_cd, 3) << " lr_cd=" << format_metric(v.overall.lr_cd, 4)
          << " e_seld=" << format_metric(v.overall.e_seld, 4)
          << " lr_cd_ov=" << format_metric(v.same_class_overlap.lr_cd, 4)
          << " lr_cd_no_ov=" << format_metric(v.no_same_class_overlap.lr_cd, 4);
    }
    out << '\n';
  }
}

struct CompareConfig {
  SceneConfig scene;
  int n_train_scenes = 40;
  int n_val_scenes = 10;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

// Settings used by the `compare` command and the acceptance run: four
// classes, so each class sees enough same-class overlaps, and 30 epochs,
// which keeps five seeds of four formats within a few CPU minutes.
inline CompareConfig toy_compare_config() {
  CompareConfig cfg;
  cfg.scene.n_classes = 4;
  cfg.scene.same_class_overlap_prob = 0.2;
  cfg.train.epochs = 30;
  return cfg;
}

struct FormatResult {
  std::string label;
  StratifiedScores scores;
  std::optional<double> lr_exactly_two;    // cells with exactly 2 same-class refs
  std::optional<double> lr_exactly_three;  // cells with exactly 3
  double final_loss = 0.0;
  bool recall_bound_holds = true;  // single format: LR on k-event cells <= 1/k
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<FormatResult> formats;  // single, nonclass, class, adpit
};

struct CompareReport {
  std::vector<SeedResult> seeds;
};

inline std::vector<TrainConfig> comparison_runs(const TrainConfig& base) {
  std::vector<TrainConfig> runs;
  TrainConfig single = base;
  single.format = OutputFormat::Single;
  runs.push_back(single);
  for (PitVariant v : {PitVariant::NonClassWise, PitVariant::ClassWise, PitVariant::ClassWiseAdpit}) {
    TrainConfig multi = base;
    multi.format = OutputFormat::Multi;
    multi.variant = v;
    runs.push_back(multi);
  }
  return runs;
}

inline FormatResult evaluate_run(const ToyModel& model, std::span<const Scene> val, const TrainConfig& cfg,
                                 double final_loss) {
  const auto cells = match_scenes(model, val, cfg.inference, cfg.match);
  FormatResult r;
  r.label = cfg.label();
  r.scores = stratified_scores(cells, cfg.match);
  r.lr_exactly_two = stratum_scores(cells, [](int m) { return m == 2; }).lr_cd;
  r.lr_exactly_three = stratum_scores(cells, [](int m) { return m == 3; }).lr_cd;
  r.final_loss = final_loss;
  if (cfg.format == OutputFormat::Single) {
    for (int k = 2; k <= 3; ++k) {
      const auto s = stratum_scores(cells, [k](int m) { return m == k; });
      if (s.lr_cd && *s.lr_cd > 1.0 / k + 1e-12) r.recall_bound_holds = false;
    }
  }
  return r;
}

template <typename Progress>
CompareReport compare_formats(const CompareConfig& cfg, Progress&& progress) {
  CompareReport report;
  for (std::uint64_t seed : cfg.seeds) {
    SceneConfig scene_cfg = cfg.scene;
    scene_cfg.seed = seed;
    const SyntheticWorld world(scene_cfg);
    std::vector<Scene> train_scenes, val_scenes;
    for (int i = 0; i < cfg.n_train_scenes; ++i) train_scenes.push_back(world.generate_scene(i));
    for (int i = 0; i < cfg.n_val_scenes; ++i) val_scenes.push_back(world.generate_scene(1'000'000 + i));

    SeedResult sr{seed, {}};
    for (TrainConfig run : comparison_runs(cfg.train)) {
      run.seed = seed;
      run.validate_each_epoch = false;
      ToyModel model = make_model(run, scene_cfg.feature_dim, scene_cfg.n_classes);
      const auto log = train(model, train_scenes, {}, run);
      sr.formats.push_back(evaluate_run(model, val_scenes, run, log.epochs.empty() ? 0.0 : log.epochs.back().train_loss));
      progress(sr.formats.back(), seed);
    }
    report.seeds.push_back(std::move(sr));
  }
  return report;
}

inline CompareReport compare_formats(const CompareConfig& cfg) {
  return compare_formats(cfg, [](const FormatResult&, std::uint64_t) {});
}

inline void write_compare_report(std::ostream& out, const CompareReport& report) {
  out << "# format comparison on synthetic scenes (LR_CD ov: cells with >= 2 same-class events)\n";
  out << "# seed  format          ER20    F20     LE_CD   LR_CD   E_SELD  LR_ov   LR_no_ov  LR_k2   loss\n";
  for (const auto& s : report.seeds)
    for (const auto& f : s.formats) {
      char line[256];
      std::snprintf(line, sizeof line, "# %-5llu %-15s %-7s %-7s %-7s %-7s %-7s %-7s %-9s %-7s %.6f\n",
                    static_cast<unsigned long long>(s.seed), f.label.c_str(),
                    format_metric(f.scores.overall.er20, 3).c_str(), format_metric(f.scores.overall.f20, 3).c_str(),
                    format_metric(f.scores.overall.le_cd, 2).c_str(),
                    format_metric(f.scores.overall.lr_cd, 3).c_str(),
                    format_metric(f.scores.overall.e_seld, 3).c_str(),
                    format_metric(f.scores.same_class_overlap.lr_cd, 3).c_str(),
                    format_metric(f.scores.no_same_class_overlap.lr_cd, 3).c_str(),
                    format_metric(f.lr_exactly_two, 3).c_str(), f.final_loss);
      out << line;
    }
  for (const auto& s : report.seeds)
    for (const auto& f : s.formats) {
      const std::string p = "seed" + std::to_string(s.seed) + "." + f.label + ".";
      out << p << "er20=" << format_metric(f.scores.overall.er20) << '\n'
          << p << "f20=" << format_metric(f.scores.overall.f20) << '\n'
          << p << "le_cd=" << format_metric(f.scores.overall.le_cd) << '\n'
          << p << "lr_cd=" << format_metric(f.scores.overall.lr_cd) << '\n'
          << p << "e_seld=" << format_metric(f.scores.overall.e_seld) << '\n'
          << p << "lr_cd_ov_same_class=" << format_metric(f.scores.same_class_overlap.lr_cd) << '\n'
          << p << "lr_cd_no_ov_same_class=" << format_metric(f.scores.no_same_class_overlap.lr_cd) << '\n'
          << p << "lr_cd_exactly_2=" << format_metric(f.lr_exactly_two) << '\n'
          << p << "final_loss=" << format_metric(f.final_loss, 8) << '\n';
      if (f.label == "single") out << p << "recall_bound_holds=" << (f.recall_bound_holds ? 1 : 0) << '\n';
    }
}

}  // namespace adpit
