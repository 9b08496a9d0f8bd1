#include "swmlp/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "swmlp/errors.hpp"

namespace swmlp {

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (epochs < 1) out.push_back("epochs must be >= 1");
  if (batch_size < 1) out.push_back("batch_size must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) out.push_back("learning_rate must be > 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) out.push_back("beta1 must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) out.push_back("beta2 must lie in [0, 1)");
  if (!(optimizer.epsilon > 0.0)) out.push_back("adam epsilon must be > 0");
  if (patience < 0) out.push_back("patience must be >= 0");
  return out;
}

std::string serialize_train_config(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["optimizer"] = cfg.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
  j["learning_rate"] = cfg.optimizer.learning_rate;
  j["beta1"] = cfg.optimizer.beta1;
  j["beta2"] = cfg.optimizer.beta2;
  j["adam_epsilon"] = cfg.optimizer.epsilon;
  j["seed"] = cfg.seed;
  j["patience"] = cfg.patience;
  return j.dump();
}

TrainConfig parse_train_config(const std::string& json_text, const std::string& source_name) {
  TrainConfig cfg;
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "optimizer") {
        const auto name = value.get<std::string>();
        if (name == "adam") cfg.optimizer.kind = OptimizerKind::Adam;
        else if (name == "sgd") cfg.optimizer.kind = OptimizerKind::Sgd;
        else throw ParseError(source_name, 1, "unknown optimizer '" + name + "'");
      } else if (key == "learning_rate") cfg.optimizer.learning_rate = value.get<double>();
      else if (key == "beta1") cfg.optimizer.beta1 = value.get<double>();
      else if (key == "beta2") cfg.optimizer.beta2 = value.get<double>();
      else if (key == "adam_epsilon") cfg.optimizer.epsilon = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "patience") cfg.patience = value.get<int>();
      else throw ParseError(source_name, 1, "unknown training config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source_name, 1, e.what());
  }
  if (auto p = cfg.problems(); !p.empty()) throw ValidationError(std::move(p));
  return cfg;
}

std::string serialize_history(const TrainHistory& h) {
  nlohmann::ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["early_stopped"] = h.early_stopped;
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_rmse", e.val_rmse}});
  return j.dump(2) + "\n";
}

TrainHistory parse_history(const std::string& json_text, const std::string& source_name) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    TrainHistory h;
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    h.early_stopped = j.at("early_stopped").get<bool>();
    for (const auto& e : j.at("epochs"))
      h.epochs.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                          e.at("val_rmse").get<double>()});
    if (h.epochs.empty() || h.best_epoch >= h.epochs.size())
      throw ParseError(source_name, 1, "history has no epoch " + std::to_string(h.best_epoch));
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source_name, 1, e.what());
  }
}

namespace {

bool same_shape(const nn::DenseLayer& a, const nn::DenseLayer& b) {
  return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
         a.bias.size() == b.bias.size();
}

}  // namespace

void optimizer_step(std::vector<nn::DenseLayer*> params, const nn::GradientSet& grads,
                    OptimizerState& state, const OptimizerConfig& hyper) {
  if (params.size() != grads.blocks.size())
    throw std::invalid_argument("optimizer_step: " + std::to_string(grads.blocks.size()) +
                                " gradient blocks for " + std::to_string(params.size()) + " parameter blocks");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!same_shape(*params[i], grads.blocks[i]))
      throw std::invalid_argument("optimizer_step: shape mismatch in block " + std::to_string(i));
    if (!grads.blocks[i].weights.allFinite() || !grads.blocks[i].bias.allFinite())
      throw DivergenceError("non-finite gradient in block " + std::to_string(i));
  }

  const double lr = hyper.learning_rate;
  if (hyper.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->weights -= lr * grads.blocks[i].weights;
      params[i]->bias -= lr * grads.blocks[i].bias;
    }
    ++state.step;
    return;
  }

  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->inputs(), p->outputs());
      state.second_moment.emplace_back(p->inputs(), p->outputs());
    }
  }
  if (state.first_moment.size() != params.size())
    throw std::invalid_argument("optimizer_step: state does not match the parameters");

  ++state.step;
  const double b1 = hyper.beta1, b2 = hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.epsilon);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i]->weights, state.first_moment[i].weights, state.second_moment[i].weights,
           grads.blocks[i].weights);
    update(params[i]->bias, state.first_moment[i].bias, state.second_moment[i].bias, grads.blocks[i].bias);
  }
}

void optimizer_step(nn::Model& model, const nn::GradientSet& grads, OptimizerState& state,
                    const OptimizerConfig& hyper) {
  std::visit(
      [&](auto& m) {
        optimizer_step(m.blocks(), grads, state, hyper);
        ++m.revision;
      },
      model);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<AssociatedSample> shuffle_samples(std::vector<AssociatedSample> samples, std::uint64_t seed) {
  const auto order = shuffled_order(samples.size(), seed);
  std::vector<AssociatedSample> out;
  out.reserve(samples.size());
  for (std::size_t i : order) out.push_back(std::move(samples[i]));
  return out;
}

BatchStep batch_gradient(const nn::Model& m, const nn::StreamBatch& batch) {
  const auto n = static_cast<double>(batch.labels.size());
  BatchStep out;
  const auto finish = [&](const nn::RowVector& pred) {
    const nn::RowVector err = pred - batch.labels;
    out.loss = err.squaredNorm() / n;
    return nn::RowVector(2.0 * err / n);
  };
  if (const auto* sw = std::get_if<nn::SwmlpModel>(&m)) {
    nn::SwmlpTape tape;
    const auto upstream = finish(nn::swmlp_forward(*sw, batch.x, tape));
    out.grads = nn::swmlp_backward(*sw, tape, upstream);
  } else {
    const auto& bl = std::get<nn::BaselineMlp>(m);
    nn::BaselineTape tape;
    const auto upstream = finish(nn::baseline_forward(bl, batch.x[2], tape));
    out.grads = nn::baseline_backward(bl, tape, upstream);
  }
  return out;
}

std::vector<double> predict_samples(const nn::Model& m, std::span<const AssociatedSample> samples) {
  constexpr std::size_t kChunk = 4096;
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const auto chunk = samples.subspan(start, std::min(kChunk, samples.size() - start));
    const auto pred = nn::predict_batch(m, nn::make_batch(chunk));
    out.insert(out.end(), pred.data(), pred.data() + pred.size());
  }
  return out;
}

double sample_rmse(const nn::Model& m, std::span<const AssociatedSample> samples) {
  if (samples.empty()) throw std::invalid_argument("sample_rmse: no samples");
  const auto pred = predict_samples(m, samples);
  double sq = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double e = pred[i] - samples[i].label;
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(samples.size()));
}

TrainResult train(nn::Model initial, std::span<const AssociatedSample> train_samples,
                  std::span<const AssociatedSample> val_samples, const TrainConfig& cfg) {
  if (auto p = cfg.problems(); !p.empty()) throw ValidationError(std::move(p));
  if (train_samples.empty()) throw std::invalid_argument("train: empty training set");
  if (val_samples.empty()) throw std::invalid_argument("train: empty validation set");

  nn::Model model = std::move(initial);
  TrainResult result{model, {}};
  OptimizerState state;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_order(train_samples.size(), derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto idx = std::span(order).subspan(start, std::min(batch, order.size() - start));
      const BatchStep step = batch_gradient(model, nn::make_batch(train_samples, idx));
      if (!std::isfinite(step.loss))
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                              ", batch starting at " + std::to_string(start));
      loss_sum += step.loss * static_cast<double>(idx.size());
      optimizer_step(model, step.grads, state, cfg.optimizer);
    }

    const double val = sample_rmse(model, val_samples);
    if (!std::isfinite(val))
      throw DivergenceError("non-finite validation RMSE at epoch " + std::to_string(epoch));
    result.history.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()), val});

    if (val < best) {
      best = val;
      stale = 0;
      result.model = model;
      result.history.best_epoch = result.history.epochs.size() - 1;
    } else if (++stale > cfg.patience) {
      result.history.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace swmlp
