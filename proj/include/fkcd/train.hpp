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

#ifndef FKCD_TRAIN_HPP_
#define FKCD_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fkcd/metrics.hpp"
#include "fkcd/model.hpp"
#include "fkcd/synthetic.hpp"

namespace fkcd {

struct TrainConfig {
  std::int64_t batch_size = 32;
  double learning_rate = 5e-4;
  std::int64_t epochs = 60;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 42;  // shuffling
  std::int64_t train_count = 200;
  std::int64_t val_count = 50;
  // Stop after the first epoch whose validation F1 reaches this value (> 1 disables).
  double stop_at_f1 = 2.0;

  void validate() const;
};

// Small-batch preset for the 64x64 toy run on a CPU.
TrainConfig toy_train_config();

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Adam with decoupled weight decay:
// p -= lr * (m_hat / (sqrt(v_hat) + eps) + decay * p).
template <Real T>
class AdamW {
 public:
  AdamW(std::vector<Tensor<T>> params, double lr, double beta1, double beta2, double eps,
        double weight_decay);

  // Parameters without a gradient buffer are skipped.
  void step();
  void zero_grad();
  std::int64_t steps() const { return t_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_, decay_;
  std::int64_t t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0;  // mean over batches
  Confusion val_confusion;
  double val_f1 = 0;
  double seconds = 0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  double best_val_f1 = 0;
  double final_val_f1 = 0;
};

// Split into the first train_count samples and the following val_count samples.
struct DataSplit {
  std::vector<const SyntheticSample*> train;
  std::vector<const SyntheticSample*> val;
};
DataSplit split_dataset(const SyntheticDataset& dataset, const TrainConfig& config);

// Stacks T1, T2 and ground truth of a batch.
template <Real T>
struct Batch {
  Tensor<T> t1, t2, gt;
};
template <Real T>
Batch<T> make_batch(const std::vector<const SyntheticSample*>& samples);

// One optimizer step on a batch; returns the loss. Throws NumericError naming
// the first non-finite tensor when the loss is not finite.
template <Real T>
double train_step(ChangeDetector<T>& model, AdamW<T>& optimizer, const Batch<T>& batch);

// Eval-mode micro-averaged confusion over samples.
template <Real T>
Confusion evaluate(const ChangeDetector<T>& model, const std::vector<const SyntheticSample*>& samples,
                   std::int64_t batch_size);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains the model in place with train-mode BN and validates in eval mode
// after each epoch.
template <Real T>
TrainResult train(ChangeDetector<T>& model, const TrainConfig& config,
                  const SyntheticDataset& dataset, const EpochCallback& on_epoch = {});

struct AblationArm {
  std::string name;
  ModelConfig config;
};

// full, w/o EDM (plain distance), w/o SWSA, w/o EGSA.
std::vector<AblationArm> ablation_arms(const ModelConfig& base);

struct AblationRow {
  std::string arm;
  std::int64_t params = 0;
  double best_val_f1 = 0;
  double final_val_f1 = 0;
  std::string dataset_hash;
  nlohmann::json flags;
};

// Trains every arm from the same model seed on the same dataset.
std::vector<AblationRow> ablation_run(const std::vector<AblationArm>& arms,
                                      const SyntheticDataset& dataset, const TrainConfig& config,
                                      std::uint64_t model_seed,
                                      const std::function<void(const std::string&, const EpochRecord&)>&
                                          on_epoch = {});

nlohmann::json train_report(const TrainResult& result);
nlohmann::json ablation_report(const std::vector<AblationRow>& rows);

}  // namespace fkcd

#endif  // FKCD_TRAIN_HPP_
