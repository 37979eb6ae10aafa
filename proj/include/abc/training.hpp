#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "abc/metrics.hpp"
#include "abc/model.hpp"
#include "abc/rng.hpp"
#include "abc/shapeworld.hpp"

namespace abc {

inline constexpr std::size_t kNoTarget = std::numeric_limits<std::size_t>::max();

// One QA item prepared for the model: cached feature map, encoded question,
// and the answer both as a string and (when it exists in the model's answer
// dictionary) as a class index.
struct Example {
  Tensor features;
  std::vector<std::size_t> token_ids;
  std::size_t target = kNoTarget;
  std::string answer;
  shapeworld::Category category = shapeworld::Category::Object;
  std::vector<std::pair<std::size_t, std::size_t>> gt_cells;
};

// QA records plus their feature maps, as read from a dataset directory.
struct LoadedSplit {
  std::vector<shapeworld::QaItem> items;
  std::vector<Tensor> features;
};

LoadedSplit load_split(const std::filesystem::path& dataset_dir,
                       const std::string& jsonl_name, const ModelConfig& config);

std::vector<Example> prepare_examples(const Model& model,
                                      const LoadedSplit& split);

// Adadelta accumulators, one pair per parameter tensor, in parameter order.
struct OptimizerState {
  double rho = 0.95;
  double epsilon = 1e-6;
  double lr_scale = 1.0;
  std::vector<Eigen::ArrayXd> avg_sq_grad;    // E[g^2]
  std::vector<Eigen::ArrayXd> avg_sq_update;  // E[dx^2]

  static OptimizerState for_params(
      const std::vector<std::pair<std::string, Tensor>>& params, double rho,
      double epsilon, double lr_scale);
};

// One adadelta update from the gradients currently held by the parameters:
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       <- x + lr_scale * dx
void adadelta_step(OptimizerState& state,
                   const std::vector<std::pair<std::string, Tensor>>& params);

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
  double rho = 0.95;
  double epsilon = 1e-6;
  ModelConfig model;
};

// Draws every weight from a scaled uniform distribution (biases zero,
// embeddings uniform in [-0.08, 0.08]), then rescales each projection layer
// in up to max_passes rounds until its pre-activation standard deviation over
// the calibration examples lies in [0.9, 1.1]. Throws NumericError when the
// activations are not finite or a layer cannot be normalized.
void init_params(Model& model, const std::vector<Example>& calibration,
                 Rng& rng, std::size_t max_passes = 10);

struct EpochRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochRow> history;
  double initial_loss = 0.0;
};

using EpochCallback = std::function<void(const Model&, const EpochRow&)>;

// Minibatch adadelta over uniformly resampled examples; deterministic for a
// fixed seed. Loss is averaged per item; gradients are cleared per batch.
// Aborts with NumericError if the loss stops being finite.
TrainResult train(Model& model, const TrainConfig& config,
                  const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set,
                  const EpochCallback& per_epoch = {});

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochRow>& history);

struct Evaluation {
  EvalReport report;
  std::vector<std::string> predictions;
  // Attention mass on the first ground-truth cell, per item.
  std::vector<double> gt_attention_mass;
};

// Runs the model over every example and scores it. jobs > 1 fans the forward
// passes out over threads; results are identical to the serial run.
Evaluation evaluate(const Model& model, const std::vector<Example>& examples,
                    const Taxonomy& taxonomy, std::size_t jobs = 1);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace abc
