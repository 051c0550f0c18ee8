/* Copyright 2026 The fkcd Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "fkcd/errors.hpp"
#include "fkcd/io_util.hpp"
#include "fkcd/kernels.hpp"
#include "fkcd/metrics.hpp"
#include "fkcd/model.hpp"
#include "fkcd/regions.hpp"
#include "fkcd/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A bad or missing input file; reported with exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename F>
auto read_input(const std::string& path, F&& reader) {
  try {
    return reader(path);
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void print_resolved(const std::string& command, const json& resolved) {
  std::cout << json{{"command", command}, {"config", resolved}}.dump(2) << std::endl;
}

void write_json(const std::string& path, const json& j) {
  if (!path.empty()) fkcd::write_file_atomic(path, j.dump(2) + "\n");
}

fkcd::ModelConfig resolve_model(const std::string& config_path) {
  return config_path.empty() ? fkcd::toy_config()
                             : read_input(config_path, [](const std::string& p) {
                                 return fkcd::load_config(p);
                               });
}

json load_json(const std::string& path) {
  return read_input(path, [](const std::string& p) { return json::parse(fkcd::read_file(p)); });
}

// Regular *.pgm files in a directory, keyed and sorted by filename.
std::map<std::string, fs::path> list_masks(const std::string& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir + ": not a directory");
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      out.emplace(entry.path().filename().string(), entry.path());
    }
  }
  return out;
}

// ---- infer ----

struct InferArgs {
  std::string config, weights, t1, t2, out, prob_out, diff_out, gt;
  std::uint64_t seed = 42;
};

int run_infer(const InferArgs& a) {
  const auto config = resolve_model(a.config);
  json resolved = config;
  resolved["weights"] = a.weights;
  resolved["seed"] = a.seed;
  print_resolved("infer", resolved);
  if (!a.diff_out.empty() && a.gt.empty()) {
    throw std::invalid_argument("--diff-out requires --gt");
  }

  const auto img1 = read_input(a.t1, [](const std::string& p) { return fkcd::read_image(p); });
  const auto img2 = read_input(a.t2, [](const std::string& p) { return fkcd::read_image(p); });
  if (img1.height != img2.height || img1.width != img2.width) {
    throw fkcd::ShapeError("t1 is " + std::to_string(img1.height) + "x" +
                           std::to_string(img1.width) + " but t2 is " +
                           std::to_string(img2.height) + "x" + std::to_string(img2.width));
  }
  config.validate_for_input(img1.height, img1.width);

  fkcd::ChangeDetector<float> model(config, a.seed);
  if (!a.weights.empty()) fkcd::load_weights_into(model.weights(), a.weights);
  const auto out = model.forward(fkcd::image_to_tensor<float>(img1),
                                 fkcd::image_to_tensor<float>(img2), fkcd::Mode::kEval);
  const auto mask = fkcd::tensor_to_mask(out.binary);
  fkcd::write_mask(a.out, mask);
  if (!a.prob_out.empty()) fkcd::write_image(a.prob_out, fkcd::tensor_to_gray(out.probabilities));
  if (!a.diff_out.empty()) {
    const auto gt = read_input(a.gt, [](const std::string& p) { return fkcd::read_mask(p); });
    fkcd::write_image(a.diff_out, fkcd::render_diff_map(fkcd::diff_map(mask, gt)));
    std::cout << fkcd::metrics_report(fkcd::confusion(mask, gt)).dump(2) << std::endl;
  }
  std::cout << "changed pixels: " << mask.count() << " of " << mask.pixels.size() << std::endl;
  return 0;
}

// ---- train-toy ----

struct TrainArgs {
  std::string config, data_spec, train_config, weights_out, report, dataset_dir;
  std::optional<std::int64_t> epochs, batch_size;
  std::optional<double> lr;
  std::uint64_t seed = 42;
};

int run_train(const TrainArgs& a) {
  const auto config = resolve_model(a.config);
  fkcd::SyntheticSpec spec;
  if (!a.data_spec.empty()) spec = load_json(a.data_spec).get<fkcd::SyntheticSpec>();
  auto tc = fkcd::toy_train_config();
  if (!a.train_config.empty()) tc = load_json(a.train_config).get<fkcd::TrainConfig>();
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.lr) tc.learning_rate = *a.lr;
  spec.validate();
  tc.validate();
  print_resolved("train-toy", {{"model", config}, {"data", spec}, {"train", tc}, {"seed", a.seed}});

  const auto dataset = fkcd::generate(spec);
  if (!a.dataset_dir.empty()) fkcd::save_dataset(dataset, a.dataset_dir);
  fkcd::ChangeDetector<float> model(config, a.seed);
  const auto result = fkcd::train(model, tc, dataset, [](const fkcd::EpochRecord& e) {
    std::cout << "epoch " << e.epoch << " loss " << e.train_loss << " val_f1 " << e.val_f1
              << " (" << e.seconds << " s)" << std::endl;
  });
  if (!a.weights_out.empty()) fkcd::save_weights(model.weights(), a.weights_out);
  auto report = fkcd::train_report(result);
  report["dataset_hash"] = fkcd::dataset_hash(dataset);
  write_json(a.report, report);
  std::cout << "best val_f1 " << result.best_val_f1 << std::endl;
  return 0;
}

// ---- eval ----

int run_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& report) {
  print_resolved("eval", {{"pred", pred_dir}, {"gt", gt_dir}, {"report", report}});
  const auto preds = list_masks(pred_dir);
  const auto gts = list_masks(gt_dir);
  if (preds.empty()) throw InputError(pred_dir + ": no .pgm masks found");
  for (const auto& [name, path] : preds) {
    if (!gts.count(name)) throw InputError("missing ground truth for " + path.string());
  }
  for (const auto& [name, path] : gts) {
    if (!preds.count(name)) throw InputError("missing prediction for " + path.string());
  }
  fkcd::Confusion total;
  json files = json::array();
  for (const auto& [name, path] : preds) {
    const auto reader = [](const std::string& p) { return fkcd::read_mask(p); };
    const auto pred = read_input(path.string(), reader);
    const auto gt = read_input(gts.at(name).string(), reader);
    const auto c = fkcd::confusion(pred, gt);
    total += c;
    auto row = fkcd::metrics_report(c);
    row["name"] = name;
    files.push_back(row);
  }
  auto out = fkcd::metrics_report(total);
  out["files"] = files;
  write_json(report, out);
  std::cout << fkcd::metrics_report(total).dump(2) << std::endl;
  return 0;
}

// ---- analyze ----

int run_analyze(const std::string& dir, std::int64_t threshold, const std::string& report) {
  print_resolved("analyze", {{"masks", dir}, {"threshold", threshold}, {"report", report}});
  if (threshold < 0) throw std::invalid_argument("--threshold must be non-negative");
  std::vector<fkcd::NamedMask> masks;
  for (const auto& [name, path] : list_masks(dir)) {
    masks.push_back({name, read_input(path.string(),
                                      [](const std::string& p) { return fkcd::read_mask(p); })});
  }
  if (masks.empty()) throw InputError(dir + ": no .pgm masks found");
  const auto summary = fkcd::dataset_summary(masks, threshold);
  const auto j = fkcd::summary_report(summary);
  write_json(report, j);
  std::cout << json{{"few", j["few"]}, {"many", j["many"]}}.dump(2) << std::endl;
  return 0;
}

// ---- params ----

int run_params(const std::string& config_path, std::int64_t input, const std::string& report) {
  const auto config = resolve_model(config_path);
  json resolved = config;
  resolved["input"] = input;
  print_resolved("params", resolved);
  const auto params = fkcd::count_params(config);
  const auto flops = fkcd::estimate_flops(config, input, input);
  json modules = json::array();
  for (const auto& m : params.modules) modules.push_back({{"module", m.module}, {"params", m.count}});
  json flop_modules = json::object();
  for (const auto& m : flops.modules) {
    flop_modules[m.module] = flop_modules.value(m.module, std::int64_t{0}) + m.count;
  }
  const json out{{"params", {{"total", params.total}, {"modules", modules}}},
                 {"flops",
                  {{"input", {input, input}},
                   {"total", flops.total()},
                   {"conv", flops.conv},
                   {"dense", flops.dense},
                   {"attention", flops.attention},
                   {"elementwise", flops.elementwise},
                   {"modules", flop_modules}}}};
  write_json(report, out);
  for (const auto& m : params.modules) std::cout << m.module << "\t" << m.count << "\n";
  std::cout << "total params\t" << params.total << "\n"
            << "FLOPs at " << input << "x" << input << "\t" << flops.total() << " (conv "
            << flops.conv << ", dense " << flops.dense << ", attention " << flops.attention
            << ", elementwise " << flops.elementwise << ")" << std::endl;
  return 0;
}

// ---- ablate ----

int run_ablate(const std::string& spec_path, const std::string& report) {
  const json spec = spec_path.empty() ? json::object() : load_json(spec_path);
  fkcd::ModelConfig base = fkcd::toy_config();
  if (spec.contains("model")) base = spec.at("model").get<fkcd::ModelConfig>();
  fkcd::SyntheticSpec data;
  if (spec.contains("data")) data = spec.at("data").get<fkcd::SyntheticSpec>();
  fkcd::TrainConfig tc;
  if (spec.contains("train")) tc = spec.at("train").get<fkcd::TrainConfig>();
  const auto seed = spec.value("seed", std::uint64_t{42});
  auto arms = fkcd::ablation_arms(base);
  if (spec.contains("arms")) {
    const auto wanted = spec.at("arms").get<std::vector<std::string>>();
    std::vector<fkcd::AblationArm> picked;
    for (const auto& name : wanted) {
      auto it = std::find_if(arms.begin(), arms.end(), [&](const auto& a) { return a.name == name; });
      if (it == arms.end()) throw std::invalid_argument("unknown ablation arm '" + name + "'");
      picked.push_back(*it);
    }
    arms = picked;
  }
  base.validate();
  data.validate();
  tc.validate();
  json arm_names = json::array();
  for (const auto& a : arms) arm_names.push_back(a.name);
  print_resolved("ablate",
                 {{"model", base}, {"data", data}, {"train", tc}, {"seed", seed}, {"arms", arm_names}});
  const auto dataset = fkcd::generate(data);
  const auto rows = fkcd::ablation_run(arms, dataset, tc, seed,
                                       [](const std::string& arm, const fkcd::EpochRecord& e) {
                                         std::cout << arm << " epoch " << e.epoch << " loss "
                                                   << e.train_loss << " val_f1 " << e.val_f1
                                                   << std::endl;
                                       });
  const auto out = fkcd::ablation_report(rows);
  write_json(report, out);
  for (const auto& r : rows) {
    std::cout << r.arm << "\tparams " << r.params << "\tbest_f1 " << r.best_val_f1 << "\n";
  }
  std::cout << std::flush;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lightweight bitemporal change detection"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Kernel threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict a change mask for an image pair");
  infer_cmd->add_option("--config", infer.config, "Model config JSON (default: toy config)");
  infer_cmd->add_option("--weights", infer.weights, "Weight file (default: seeded initialisation)");
  infer_cmd->add_option("--t1", infer.t1, "Image at time 1 (PGM/PPM)")->required();
  infer_cmd->add_option("--t2", infer.t2, "Image at time 2 (PGM/PPM)")->required();
  infer_cmd->add_option("--out", infer.out, "Binary mask output (PGM)")->required();
  infer_cmd->add_option("--prob-out", infer.prob_out, "Probability map output (PGM)");
  infer_cmd->add_option("--diff-out", infer.diff_out, "TP/TN/FP/FN colour map (PPM), needs --gt");
  infer_cmd->add_option("--gt", infer.gt, "Ground-truth mask for --diff-out");
  infer_cmd->add_option("--seed", infer.seed, "Initialisation seed");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-toy", "Train on generated synthetic pairs");
  train_cmd->add_option("--config", train.config, "Model config JSON (default: toy config)");
  train_cmd->add_option("--data", train.data_spec, "Synthetic data spec JSON");
  train_cmd->add_option("--train", train.train_config, "Training config JSON");
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--lr", train.lr);
  train_cmd->add_option("--seed", train.seed, "Initialisation seed");
  train_cmd->add_option("--weights-out", train.weights_out, "Write trained weights");
  train_cmd->add_option("--report", train.report, "Write per-epoch JSON report");
  train_cmd->add_option("--dataset-dir", train.dataset_dir, "Also persist the dataset here");

  std::string pred_dir, gt_dir, eval_report;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval_cmd->add_option("--pred", pred_dir)->required();
  eval_cmd->add_option("--gt", gt_dir)->required();
  eval_cmd->add_option("--report", eval_report);

  std::string masks_dir, analyze_report;
  std::int64_t threshold = fkcd::kDefaultRegionThreshold;
  auto* analyze_cmd = app.add_subcommand("analyze", "Change-region statistics of a mask set");
  analyze_cmd->add_option("--masks", masks_dir)->required();
  analyze_cmd->add_option("--threshold", threshold, "Few/many region boundary");
  analyze_cmd->add_option("--report", analyze_report);

  std::string params_config, params_report;
  std::int64_t input = 256;
  auto* params_cmd = app.add_subcommand("params", "Parameter and FLOP accounting");
  params_cmd->add_option("--config", params_config, "Model config JSON (default: toy config)");
  params_cmd->add_option("--input", input, "Square input size")->check(CLI::PositiveNumber);
  params_cmd->add_option("--report", params_report);

  std::string ablate_spec, ablate_report;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train the ablation arms on one dataset");
  ablate_cmd->add_option("--spec", ablate_spec, "Ablation spec JSON {model, data, train, seed, arms}");
  ablate_cmd->add_option("--report", ablate_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) fkcd::kernels::set_num_threads(threads);
    if (*infer_cmd) return run_infer(infer);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(pred_dir, gt_dir, eval_report);
    if (*analyze_cmd) return run_analyze(masks_dir, threshold, analyze_report);
    if (*params_cmd) return run_params(params_config, input, params_report);
    if (*ablate_cmd) return run_ablate(ablate_spec, ablate_report);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const fkcd::FormatError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid JSON: " << e.what() << std::endl;
    return 1;
  } catch (const std::invalid_argument& e) {  // ConfigError, ShapeError
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}
