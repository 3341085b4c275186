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

// Command-line front end: scene generation, encoding, loss evaluation,
// training, inference, evaluation, permutation listing and the format
// comparison.
//
// Exit status: 0 success, 1 usage error, 2 data or contract error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adpit/adpit.hpp"

namespace fs = std::filesystem;
using namespace adpit;

namespace {

void add_scene_options(CLI::App* cmd, SceneConfig& sc) {
  cmd->add_option("--classes", sc.n_classes, "Number of event classes")->capture_default_str();
  cmd->add_option("--frames", sc.n_frames, "Frames per scene")->capture_default_str();
  cmd->add_option("--max-overlap", sc.max_overlap, "Maximum simultaneous events")->capture_default_str();
  cmd->add_option("--same-class-prob", sc.same_class_overlap_prob, "Probability of a same-class overlap")
      ->capture_default_str();
  cmd->add_option("--moving-prob", sc.moving_prob, "Probability an event moves")->capture_default_str();
  cmd->add_option("--feature-dim", sc.feature_dim, "Feature dimension")->capture_default_str();
  cmd->add_option("--noise", sc.noise_std, "Feature noise standard deviation")->capture_default_str();
  cmd->add_option("--events", sc.n_events, "Events per scene (0: frames / 8)")->capture_default_str();
}

void add_inference_options(CLI::App* cmd, InferenceConfig& ic) {
  cmd->add_option("--activity-threshold", ic.activity_threshold, "Activity threshold")->capture_default_str();
  cmd->add_option("--unify-deg", ic.unify_angle_deg, "Unification angle threshold (degrees)")
      ->capture_default_str();
}

std::string scene_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d", index);
  return buf;
}

std::vector<Scene> load_scene_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");
  std::vector<fs::path> feats;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".feat") feats.push_back(entry.path());
  std::sort(feats.begin(), feats.end());
  if (feats.empty()) throw DataError("no .feat files in '" + dir + "'");
  std::vector<Scene> scenes;
  for (const auto& f : feats) {
    Scene s;
    s.features = read_features_file(f.string());
    s.n_frames = s.features.n_frames;
    auto csv = f;
    csv.replace_extension(".csv");
    s.annotations = read_annotations_file(csv.string());
    for (const auto& a : s.annotations)
      if (a.frame >= s.n_frames) throw DataError(csv.string() + ": frame beyond feature length");
    scenes.push_back(std::move(s));
  }
  return scenes;
}

// Writes to the named file, or stdout when the name is empty.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<Scene> generate_scenes(const SceneConfig& sc, int count, std::uint64_t first_index) {
  const SyntheticWorld world(sc);
  std::vector<Scene> scenes;
  for (int i = 0; i < count; ++i) scenes.push_back(world.generate_scene(first_index + static_cast<std::uint64_t>(i)));
  return scenes;
}

constexpr std::uint64_t kValidationIndexBase = 1'000'000;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-ACCDOA / ADPIT toolkit for sound event localization and detection"};
  app.require_subcommand(1);
  app.allow_extras(false);

  int threads = 1;
  std::uint64_t seed = 0;

  // gen-synth
  SceneConfig gen_scene;
  std::string gen_out;
  int gen_count = 10;
  std::uint64_t gen_first = 0;
  auto* gen = app.add_subcommand("gen-synth", "Write synthetic scenes (annotation CSV + feature dump)");
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  gen->add_option("--scenes", gen_count, "Number of scenes")->capture_default_str();
  gen->add_option("--first-index", gen_first, "Index of the first scene within the world")->capture_default_str();
  gen->add_option("--seed", seed, "World seed")->capture_default_str();
  add_scene_options(gen, gen_scene);

  // encode
  std::string enc_ann, enc_out, enc_format = "multi";
  int enc_tracks = 3, enc_classes = 12, enc_frames = 0;
  auto* enc = app.add_subcommand("encode", "Encode an annotation CSV as an ACCDOA reference grid");
  enc->add_option("--ann", enc_ann, "Annotation CSV")->required();
  enc->add_option("--out", enc_out, "Output grid file")->required();
  enc->add_option("--format", enc_format, "single or multi")->capture_default_str();
  enc->add_option("--tracks", enc_tracks, "Tracks for the multi format")->capture_default_str();
  enc->add_option("--classes", enc_classes, "Number of classes")->capture_default_str();
  enc->add_option("--frames", enc_frames, "Number of frames (0: as many as annotated)")->capture_default_str();

  // loss-eval
  std::string le_pred, le_ref, le_variant = "class";
  auto* lossc = app.add_subcommand("loss-eval", "PIT loss of a prediction grid against reference annotations");
  lossc->add_option("--pred", le_pred, "Prediction grid file")->required();
  lossc->add_option("--ref", le_ref, "Reference annotation CSV")->required();
  lossc->add_option("--variant", le_variant, "nonclass, class or adpit")->capture_default_str();
  lossc->add_option("--threads", threads, "Worker threads")->capture_default_str();

  // train
  SceneConfig tr_scene;
  TrainConfig tr_cfg;
  std::string tr_format = "multi", tr_pit = "adpit", tr_out, tr_log, tr_data, tr_val;
  int tr_train_scenes = 20, tr_val_scenes = 5;
  auto* trainc = app.add_subcommand("train", "Train the toy model");
  trainc->add_option("--format", tr_format, "single or multi")->capture_default_str();
  trainc->add_option("--pit", tr_pit, "nonclass, class or adpit (multi format)")->capture_default_str();
  trainc->add_option("--tracks", tr_cfg.n_tracks, "Tracks of the multi format")->capture_default_str();
  trainc->add_option("--hidden", tr_cfg.hidden, "Hidden layer width")->capture_default_str();
  trainc->add_option("--epochs", tr_cfg.epochs, "Epochs")->capture_default_str();
  trainc->add_option("--lr", tr_cfg.learning_rate, "Learning rate")->capture_default_str();
  trainc->add_option("--batch", tr_cfg.batch_size, "Mini-batch size in frames")->capture_default_str();
  trainc->add_option("--seed", seed, "Seed for data, initialization and shuffling")->capture_default_str();
  trainc->add_option("--out", tr_out, "Checkpoint output")->required();
  trainc->add_option("--log", tr_log, "Training log output (default stdout)");
  trainc->add_option("--data-dir", tr_data, "Training scenes written by gen-synth (default: generate)");
  trainc->add_option("--val-dir", tr_val, "Validation scenes written by gen-synth");
  trainc->add_option("--train-scenes", tr_train_scenes, "Generated training scenes")->capture_default_str();
  trainc->add_option("--val-scenes", tr_val_scenes, "Generated validation scenes")->capture_default_str();
  trainc->add_option("--threads", threads, "Worker threads for loss evaluation")->capture_default_str();
  add_scene_options(trainc, tr_scene);
  add_inference_options(trainc, tr_cfg.inference);

  // infer
  InferenceConfig inf_cfg;
  std::string inf_grid, inf_model, inf_features, inf_out;
  auto* inferc = app.add_subcommand("infer", "Decode and unify a grid (or model output) into annotation CSV");
  auto* grid_opt = inferc->add_option("--grid", inf_grid, "Prediction grid file");
  auto* model_opt = inferc->add_option("--model", inf_model, "Model checkpoint");
  inferc->add_option("--features", inf_features, "Feature file for --model")->needs(model_opt);
  inferc->add_option("--out", inf_out, "Output annotation CSV")->required();
  grid_opt->excludes(model_opt);
  add_inference_options(inferc, inf_cfg);

  // eval
  MatchConfig ev_cfg;
  std::string ev_ref, ev_pred, ev_out;
  auto* evalc = app.add_subcommand("eval", "SELD metrics of predictions against references");
  evalc->add_option("--ref", ev_ref, "Reference annotation CSV")->required();
  evalc->add_option("--pred", ev_pred, "Predicted annotation CSV")->required();
  evalc->add_option("--spatial-deg", ev_cfg.spatial_threshold_deg, "Spatial threshold (degrees)")
      ->capture_default_str();
  evalc->add_option("--segment-frames", ev_cfg.segment_frames, "Frames per error-rate segment")
      ->capture_default_str();
  evalc->add_option("--out", ev_out, "Report output (default stdout)");

  // perms
  int pm_n = 3, pm_m = 2;
  std::string pm_variant = "adpit";
  bool pm_raw = false;
  auto* permc = app.add_subcommand("perms", "List the assignment set of one (class, frame) cell");
  permc->add_option("--n", pm_n, "Tracks")->capture_default_str();
  permc->add_option("--m", pm_m, "Active same-class targets")->capture_default_str();
  permc->add_option("--variant", pm_variant, "nonclass, class or adpit")->capture_default_str();
  permc->add_flag("--raw", pm_raw, "Also list the raw (pre-deduplication) ADPIT assignments");

  // compare
  CompareConfig cmp = toy_compare_config();
  std::string cmp_out;
  auto* cmpc = app.add_subcommand("compare", "Train single- and multi-ACCDOA models on the same data and compare");
  cmpc->add_option("--seeds", cmp.seeds, "Seeds")->delimiter(',')->capture_default_str();
  cmpc->add_option("--train-scenes", cmp.n_train_scenes, "Training scenes per seed")->capture_default_str();
  cmpc->add_option("--val-scenes", cmp.n_val_scenes, "Validation scenes per seed")->capture_default_str();
  cmpc->add_option("--epochs", cmp.train.epochs, "Epochs")->capture_default_str();
  cmpc->add_option("--hidden", cmp.train.hidden, "Hidden layer width")->capture_default_str();
  cmpc->add_option("--lr", cmp.train.learning_rate, "Learning rate")->capture_default_str();
  cmpc->add_option("--out", cmp_out, "Report output (default stdout)");
  cmpc->add_option("--threads", threads, "Worker threads for loss evaluation")->capture_default_str();
  add_scene_options(cmpc, cmp.scene);
  add_inference_options(cmpc, cmp.train.inference);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      gen_scene.seed = seed;
      fs::create_directories(gen_out);
      const SyntheticWorld world(gen_scene);
      for (int i = 0; i < gen_count; ++i) {
        const Scene s = world.generate_scene(gen_first + static_cast<std::uint64_t>(i));
        const std::string stem = (fs::path(gen_out) / scene_stem(static_cast<int>(gen_first) + i)).string();
        write_annotations_file(stem + ".csv", s.annotations);
        write_features_file(stem + ".feat", s.features);
      }
      std::cout << "scenes=" << gen_count << " dir=" << gen_out << '\n';
    } else if (*enc) {
      const auto ann = read_annotations_file(enc_ann);
      const int frames = enc_frames > 0 ? enc_frames : frames_spanned(ann);
      const OutputFormat format = parse_format(enc_format);
      if (format == OutputFormat::Single) {
        const auto e = encode_single_accdoa(ann, enc_classes, frames);
        write_grid_file(enc_out, e.grid);
        std::cout << "shape=" << e.grid.shape_string() << " dropped=" << e.dropped << '\n';
      } else {
        const auto e = encode_multi_accdoa(ann, enc_tracks, enc_classes, frames);
        write_grid_file(enc_out, e.grid);
        std::cout << "shape=" << e.grid.shape_string() << '\n';
      }
    } else if (*lossc) {
      const auto pred = read_grid_file(le_pred);
      const auto ann = read_annotations_file(le_ref);
      const auto ref = encode_multi_accdoa(ann, pred.n_tracks(), pred.n_classes(), pred.n_frames());
      const auto report = pit_loss(pred, ref, parse_variant(le_variant), {threads, false});
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12f", report.loss);
      std::cout << "variant=" << le_variant << '\n' << "loss=" << buf << '\n';
    } else if (*trainc) {
      tr_cfg.format = parse_format(tr_format);
      tr_cfg.variant = parse_variant(tr_pit);
      tr_cfg.seed = seed;
      tr_cfg.threads = threads;
      tr_scene.seed = seed;
      std::vector<Scene> train_scenes, val_scenes;
      if (!tr_data.empty()) {
        train_scenes = load_scene_dir(tr_data);
        if (!tr_val.empty()) val_scenes = load_scene_dir(tr_val);
      } else {
        train_scenes = generate_scenes(tr_scene, tr_train_scenes, 0);
        val_scenes = generate_scenes(tr_scene, tr_val_scenes, kValidationIndexBase);
      }
      int n_classes = tr_scene.n_classes;
      for (const auto& s : train_scenes)
        for (const auto& a : s.annotations) n_classes = std::max(n_classes, a.class_id + 1);
      ToyModel model = make_model(tr_cfg, train_scenes.front().features.dim, n_classes);
      const auto log = train(model, train_scenes, val_scenes, tr_cfg);
      save_checkpoint_file(tr_out, model);
      emit(tr_log, [&](std::ostream& out) { write_training_log(out, tr_cfg, log); });
    } else if (*inferc) {
      AccdoaGrid grid;
      if (!inf_grid.empty()) {
        grid = read_grid_file(inf_grid);
      } else if (!inf_model.empty()) {
        if (inf_features.empty()) throw ContractError("--model needs --features");
        grid = load_checkpoint_file(inf_model).predict(read_features_file(inf_features));
      } else {
        throw ContractError("infer needs --grid or --model/--features");
      }
      UnifyStats stats;
      const auto events = infer(grid, inf_cfg, &stats);
      write_annotations_file(inf_out, to_annotations(events));
      std::cout << "events=" << events.size() << " cancellations=" << stats.cancellations << '\n';
    } else if (*evalc) {
      ev_cfg.validate();
      const auto refs = read_annotations_file(ev_ref);
      const auto preds = read_annotations_file(ev_pred);
      const auto scores = stratified_scores(refs, preds, ev_cfg);
      emit(ev_out, [&](std::ostream& out) { write_report(out, scores, ev_cfg); });
    } else if (*permc) {
      const PitVariant v = parse_variant(pm_variant);
      const auto distinct = generate_assignments(v, pm_n, pm_m);
      if (v == PitVariant::ClassWiseAdpit) {
        std::cout << "K=" << permutation_count_adpit(pm_n, pm_m) << ", distinct=" << distinct.size() << '\n';
      } else {
        std::cout << "distinct=" << distinct.size() << '\n';
      }
      for (std::size_t i = 0; i < distinct.size(); ++i) std::cout << i << ": " << format_assignment(distinct[i]) << '\n';
      if (pm_raw && v == PitVariant::ClassWiseAdpit) {
        std::cout << "# raw assignments (* marks a duplicated target)\n";
        const auto raw = raw_adpit_assignments(pm_n, pm_m);
        for (std::size_t i = 0; i < raw.size(); ++i) {
          std::cout << "raw " << i << ":";
          for (int n = 0; n < pm_n; ++n) {
            std::cout << ' ';
            if (raw[i].targets[n] == kZeroTarget)
              std::cout << '-';
            else
              std::cout << raw[i].targets[n] << (raw[i].duplicated[n] ? "*" : "");
          }
          std::cout << '\n';
        }
      }
    } else if (*cmpc) {
      cmp.train.threads = threads;
      const auto report = compare_formats(cmp, [](const FormatResult& f, std::uint64_t s) {
        std::cerr << "seed " << s << " " << f.label << " done\n";
      });
      emit(cmp_out, [&](std::ostream& out) { write_compare_report(out, report); });
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
