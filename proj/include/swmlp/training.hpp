#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swmlp/association.hpp"
#include "swmlp/neuralnet.hpp"

namespace swmlp {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;  // shuffling stream; model init has its own seed
  int patience = 10;       // non-improving epochs tolerated before stopping

  std::vector<std::string> problems() const;
};

std::string serialize_train_config(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig parse_train_config(const std::string& json_text, const std::string& source_name = "<memory>");

/// Adam moments (empty for SGD) and the step counter.
struct OptimizerState {
  std::vector<nn::DenseLayer> first_moment;
  std::vector<nn::DenseLayer> second_moment;
  std::uint64_t step = 0;
};

/// SGD: p ← p − lr·g. Adam: bias-corrected moment update.
/// Throws std::invalid_argument on shape mismatch, DivergenceError on a non-finite gradient.
void optimizer_step(std::vector<nn::DenseLayer*> params, const nn::GradientSet& grads,
                    OptimizerState& state, const OptimizerConfig& hyper);
void optimizer_step(nn::Model& model, const nn::GradientSet& grads, OptimizerState& state,
                    const OptimizerConfig& hyper);

/// Seed for stream `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);
std::vector<AssociatedSample> shuffle_samples(std::vector<AssociatedSample> samples, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean squared error over the epoch's mini-batches
  double val_rmse = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;

  double best_val_rmse() const { return epochs.at(best_epoch).val_rmse; }
  bool operator==(const TrainHistory&) const = default;
};

std::string serialize_history(const TrainHistory& h);
TrainHistory parse_history(const std::string& json_text, const std::string& source_name = "<memory>");

struct TrainResult {
  nn::Model model;  // parameters of the best validation epoch
  TrainHistory history;
};

/// Mean squared error of a regression loss over one batch, plus the gradient
/// of that loss w.r.t. the parameters.
struct BatchStep {
  double loss = 0.0;
  nn::GradientSet grads;
};
BatchStep batch_gradient(const nn::Model& m, const nn::StreamBatch& batch);

/// Pooled RMSE over the samples, evaluated in construction order.
double sample_rmse(const nn::Model& m, std::span<const AssociatedSample> samples);
std::vector<double> predict_samples(const nn::Model& m, std::span<const AssociatedSample> samples);

/// Mini-batch training with per-epoch reshuffling (stream derive_seed(cfg.seed, epoch)),
/// MSE loss and model selection on validation RMSE.
TrainResult train(nn::Model initial, std::span<const AssociatedSample> train_samples,
                  std::span<const AssociatedSample> val_samples, const TrainConfig& cfg);

}  // namespace swmlp
