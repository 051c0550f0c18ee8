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

#include "fkcd/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "fkcd/errors.hpp"

namespace fkcd {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (learning_rate < 0) throw ConfigError("learning_rate must be non-negative");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw ConfigError("betas must be in [0, 1)");
  if (eps <= 0) throw ConfigError("eps must be positive");
  if (train_count < 1 || val_count < 0) throw ConfigError("invalid train/val split sizes");
}

TrainConfig toy_train_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.stop_at_f1 = 0.9;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},   {"learning_rate", c.learning_rate},
       {"epochs", c.epochs},           {"weight_decay", c.weight_decay},
       {"betas", {c.beta1, c.beta2}},  {"eps", c.eps},
       {"seed", c.seed},               {"train_count", c.train_count},
       {"val_count", c.val_count},     {"stop_at_f1", c.stop_at_f1}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  d.batch_size = j.value("batch_size", d.batch_size);
  d.learning_rate = j.value("learning_rate", d.learning_rate);
  d.epochs = j.value("epochs", d.epochs);
  d.weight_decay = j.value("weight_decay", d.weight_decay);
  if (j.contains("betas")) {
    const auto& b = j.at("betas");
    if (!b.is_array() || b.size() != 2) throw ConfigError("betas must be [beta1, beta2]");
    d.beta1 = b[0].get<double>();
    d.beta2 = b[1].get<double>();
  }
  d.eps = j.value("eps", d.eps);
  d.seed = j.value("seed", d.seed);
  d.train_count = j.value("train_count", d.train_count);
  d.val_count = j.value("val_count", d.val_count);
  d.stop_at_f1 = j.value("stop_at_f1", d.stop_at_f1);
  c = d;
}

template <Real T>
AdamW<T>::AdamW(std::vector<Tensor<T>> params, double lr, double beta1, double beta2, double eps,
                double weight_decay)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      decay_(weight_decay) {
  for (const auto& p : params_) {
    m_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
  }
}

template <Real T>
void AdamW<T>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
      const double wk = static_cast<double>(w[k]);
      w[k] = static_cast<T>(wk - lr_ * (update + decay_ * wk));
    }
  }
}

template <Real T>
void AdamW<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class AdamW<float>;
template class AdamW<double>;

DataSplit split_dataset(const SyntheticDataset& dataset, const TrainConfig& config) {
  const auto needed = static_cast<std::size_t>(config.train_count + config.val_count);
  if (dataset.samples.size() < needed) {
    throw ConfigError("dataset has " + std::to_string(dataset.samples.size()) +
                      " samples, split needs " + std::to_string(needed));
  }
  DataSplit s;
  for (std::size_t i = 0; i < needed; ++i) {
    (i < static_cast<std::size_t>(config.train_count) ? s.train : s.val)
        .push_back(&dataset.samples[i]);
  }
  return s;
}

template <Real T>
Batch<T> make_batch(const std::vector<const SyntheticSample*>& samples) {
  std::vector<const Image*> t1, t2;
  for (const auto* s : samples) {
    t1.push_back(&s->t1);
    t2.push_back(&s->t2);
  }
  Batch<T> b{images_to_tensor<T>(t1), images_to_tensor<T>(t2), {}};
  const std::int64_t n = b.t1.dim(0), h = b.t1.dim(2), w = b.t1.dim(3);
  std::vector<T> gt;
  gt.reserve(static_cast<std::size_t>(n * h * w));
  for (const auto* s : samples) {
    for (auto v : s->gt.pixels) gt.push_back(static_cast<T>(v));
  }
  b.gt = Tensor<T>({n, 1, h, w}, std::move(gt));
  return b;
}

template <Real T>
double train_step(ChangeDetector<T>& model, AdamW<T>& optimizer, const Batch<T>& batch) {
  GradientTape<T> tape;
  const auto out = model.forward(batch.t1, batch.t2, Mode::kTrain);
  const auto loss = bce_with_logits(out.logits, batch.gt);
  const double value = static_cast<double>(loss.item());
  if (!std::isfinite(value)) {
    const auto culprit = tape.first_non_finite();
    throw NumericError("non-finite training loss " + std::to_string(value) +
                       "; first non-finite tensor: " + culprit.value_or("loss"));
  }
  optimizer.zero_grad();
  tape.backward(loss);
  optimizer.step();
  return value;
}

template <Real T>
Confusion evaluate(const ChangeDetector<T>& model, const std::vector<const SyntheticSample*>& samples,
                   std::int64_t batch_size) {
  Confusion total;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const SyntheticSample*> chunk(samples.begin() + static_cast<std::ptrdiff_t>(start),
                                              samples.begin() + static_cast<std::ptrdiff_t>(end));
    const auto batch = make_batch<T>(chunk);
    const auto out = model.forward(batch.t1, batch.t2, Mode::kEval);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      total += confusion(tensor_to_mask(out.binary, static_cast<std::int64_t>(i)), chunk[i]->gt);
    }
  }
  return total;
}

template <Real T>
TrainResult train(ChangeDetector<T>& model, const TrainConfig& config,
                  const SyntheticDataset& dataset, const EpochCallback& on_epoch) {
  config.validate();
  const DataSplit split = split_dataset(dataset, config);
  AdamW<T> optimizer(model.weights().parameters(), config.learning_rate, config.beta1,
                     config.beta2, config.eps, config.weight_decay);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(split.train.size());
  TrainResult result;
  for (std::int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::int64_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      // Train-mode BN needs more than one value per channel.
      if (end - start < 2 && start > 0) break;
      std::vector<const SyntheticSample*> chunk;
      for (auto i = start; i < end; ++i) chunk.push_back(split.train[order[i]]);
      loss_sum += train_step(model, optimizer, make_batch<T>(chunk));
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (!split.val.empty()) {
      rec.val_confusion = evaluate(model, split.val, config.batch_size);
      rec.val_f1 = metrics(rec.val_confusion).f1;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(rec);
    result.best_val_f1 = std::max(result.best_val_f1, rec.val_f1);
    result.final_val_f1 = rec.val_f1;
    if (on_epoch) on_epoch(rec);
    if (rec.val_f1 >= config.stop_at_f1) break;
  }
  return result;
}

template Batch<float> make_batch<float>(const std::vector<const SyntheticSample*>&);
template Batch<double> make_batch<double>(const std::vector<const SyntheticSample*>&);
template double train_step(ChangeDetector<float>&, AdamW<float>&, const Batch<float>&);
template double train_step(ChangeDetector<double>&, AdamW<double>&, const Batch<double>&);
template Confusion evaluate(const ChangeDetector<float>&, const std::vector<const SyntheticSample*>&,
                            std::int64_t);
template Confusion evaluate(const ChangeDetector<double>&,
                            const std::vector<const SyntheticSample*>&, std::int64_t);
template TrainResult train(ChangeDetector<float>&, const TrainConfig&, const SyntheticDataset&,
                           const EpochCallback&);
template TrainResult train(ChangeDetector<double>&, const TrainConfig&, const SyntheticDataset&,
                           const EpochCallback&);

std::vector<AblationArm> ablation_arms(const ModelConfig& base) {
  std::vector<AblationArm> arms;
  arms.push_back({"full", base});
  auto no_edm = base;
  no_edm.use_edm = false;
  arms.push_back({"w/o EDM", no_edm});
  auto no_swsa = base;
  no_swsa.use_swsa = false;
  arms.push_back({"w/o SWSA", no_swsa});
  auto no_egsa = base;
  no_egsa.use_egsa = false;
  arms.push_back({"w/o EGSA", no_egsa});
  return arms;
}

std::vector<AblationRow> ablation_run(
    const std::vector<AblationArm>& arms, const SyntheticDataset& dataset,
    const TrainConfig& config, std::uint64_t model_seed,
    const std::function<void(const std::string&, const EpochRecord&)>& on_epoch) {
  const std::string hash = dataset_hash(dataset);
  std::vector<AblationRow> rows;
  for (const auto& arm : arms) {
    ChangeDetector<float> model(arm.config, model_seed);
    EpochCallback cb;
    if (on_epoch) cb = [&](const EpochRecord& r) { on_epoch(arm.name, r); };
    const auto result = train(model, config, dataset, cb);
    AblationRow row;
    row.arm = arm.name;
    row.params = count_params(arm.config).total;
    row.best_val_f1 = result.best_val_f1;
    row.final_val_f1 = result.final_val_f1;
    row.dataset_hash = hash;
    row.flags = {{"use_edm", arm.config.use_edm},
                 {"use_swsa", arm.config.use_swsa},
                 {"use_egsa", arm.config.use_egsa},
                 {"use_four_stages", arm.config.use_four_stages},
                 {"full_projections", arm.config.full_projections}};
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json train_report(const TrainResult& result) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_f1", e.val_f1},
                      {"val", metrics_report(e.val_confusion)},
                      {"seconds", e.seconds}});
  }
  return {{"epochs", epochs},
          {"best_val_f1", result.best_val_f1},
          {"final_val_f1", result.final_val_f1}};
}

nlohmann::json ablation_report(const std::vector<AblationRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"arm", r.arm},
                   {"params", r.params},
                   {"best_val_f1", r.best_val_f1},
                   {"final_val_f1", r.final_val_f1},
                   {"dataset_hash", r.dataset_hash},
                   {"flags", r.flags}});
  }
  return {{"arms", arr}};
}

}  // namespace fkcd
