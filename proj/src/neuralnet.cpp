#include "swmlp/neuralnet.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace swmlp::nn {

std::string_view activation_name(Activation a) {
  return a == Activation::Relu ? "relu" : "identity";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "identity" || name == "linear") return Activation::Identity;
  return std::nullopt;
}

Matrix activate(const Matrix& z, Activation a) {
  if (a == Activation::Identity) return z;
  return z.cwiseMax(0.0);
}

Matrix activation_slope(const Matrix& z, Activation a) {
  if (a == Activation::Identity) return Matrix::Ones(z.rows(), z.cols());
  return (z.array() > 0.0).cast<double>().matrix();
}

std::vector<DenseLayer*> SwmlpModel::blocks() {
  std::vector<DenseLayer*> out{&embed[0], &embed[1], &embed[2], &shared};
  for (auto& l : head) out.push_back(&l);
  return out;
}

std::vector<const DenseLayer*> SwmlpModel::blocks() const {
  std::vector<const DenseLayer*> out{&embed[0], &embed[1], &embed[2], &shared};
  for (const auto& l : head) out.push_back(&l);
  return out;
}

std::vector<DenseLayer*> BaselineMlp::blocks() {
  std::vector<DenseLayer*> out;
  for (auto& l : layers) out.push_back(&l);
  return out;
}

std::vector<const DenseLayer*> BaselineMlp::blocks() const {
  std::vector<const DenseLayer*> out;
  for (const auto& l : layers) out.push_back(&l);
  return out;
}

std::string_view architecture_name(Architecture a) {
  return a == Architecture::Swmlp ? "swmlp" : "baseline";
}

Architecture architecture_of(const Model& m) {
  return std::holds_alternative<SwmlpModel>(m) ? Architecture::Swmlp : Architecture::Baseline;
}

GradientSet zero_gradients(const std::vector<const DenseLayer*>& blocks) {
  GradientSet g;
  for (const auto* b : blocks) g.blocks.emplace_back(b->inputs(), b->outputs());
  return g;
}

double init_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

DenseLayer init_layer(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  DenseLayer l(in, out);
  std::uniform_real_distribution<double> u(-init_bound(in, out), init_bound(in, out));
  for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) l.weights(r, c) = u(rng);
  return l;
}

std::vector<DenseLayer> init_stack(Eigen::Index input, std::mt19937_64& rng) {
  std::vector<DenseLayer> out;
  Eigen::Index in = input;
  for (int w : kHeadWidths) {
    out.push_back(init_layer(in, w, rng));
    in = w;
  }
  out.push_back(init_layer(in, 1, rng));
  return out;
}

Matrix stack_forward(const std::vector<DenseLayer>& layers, Activation act, const Matrix& x,
                     StackTape& tape) {
  tape.inputs.assign(layers.size(), Matrix());
  tape.pre.assign(layers.size(), Matrix());
  Matrix cur = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    tape.inputs[i] = cur;
    tape.pre[i] = layers[i].forward(cur);
    cur = i + 1 < layers.size() ? activate(tape.pre[i], act) : tape.pre[i];
  }
  return cur;
}

// Writes gradients of `layers` into out[offset..] and returns d(loss)/d(input).
Matrix stack_backward(const std::vector<DenseLayer>& layers, Activation act, const StackTape& tape,
                      const RowVector& upstream, std::vector<DenseLayer>& out, std::size_t offset) {
  Matrix delta = upstream;
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (k + 1 < layers.size()) delta = delta.cwiseProduct(activation_slope(tape.pre[k], act));
    out[offset + k].weights.noalias() = delta * tape.inputs[k].transpose();
    out[offset + k].bias = delta.rowwise().sum();
    delta = layers[k].weights.transpose() * delta;
  }
  return delta;
}

Matrix column(const FeatureVector& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void check_tape(const void* tape_model, std::uint64_t tape_rev, const void* model,
                std::uint64_t rev, Eigen::Index batch, Eigen::Index upstream) {
  if (tape_model != model) throw std::logic_error("tape belongs to a different model");
  if (tape_rev != rev) throw std::logic_error("stale tape: model parameters changed since forward");
  if (batch != upstream)
    throw std::logic_error("upstream has " + std::to_string(upstream) + " entries, tape batch is " +
                           std::to_string(batch));
}

}  // namespace

SwmlpModel init_swmlp(std::uint64_t seed, Activation act) {
  std::mt19937_64 rng(seed);
  SwmlpModel m;
  m.activation = act;
  for (auto& e : m.embed) e = init_layer(static_cast<Eigen::Index>(kFeatureCount), kEmbedWidth, rng);
  m.shared = init_layer(kEmbedWidth, kSharedWidth, rng);
  m.head = init_stack(kStreams * kSharedWidth, rng);
  return m;
}

BaselineMlp init_baseline(std::uint64_t seed, Activation act) {
  std::mt19937_64 rng(seed);
  BaselineMlp m;
  m.activation = act;
  m.layers = init_stack(static_cast<Eigen::Index>(kFeatureCount), rng);
  return m;
}

Model init_model(std::uint64_t seed, Architecture arch, Activation act) {
  if (arch == Architecture::Swmlp) return init_swmlp(seed, act);
  return init_baseline(seed, act);
}

StreamBatch make_batch(std::span<const AssociatedSample> samples) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return make_batch(samples, order);
}

StreamBatch make_batch(std::span<const AssociatedSample> samples, std::span<const std::size_t> order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  const auto d = static_cast<Eigen::Index>(kFeatureCount);
  StreamBatch b;
  for (auto& x : b.x) x.resize(d, n);
  b.labels.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& s = samples[order[static_cast<std::size_t>(c)]];
    for (Eigen::Index r = 0; r < d; ++r) {
      b.x[0](r, c) = s.context_a[static_cast<std::size_t>(r)];
      b.x[1](r, c) = s.context_b[static_cast<std::size_t>(r)];
      b.x[2](r, c) = s.target[static_cast<std::size_t>(r)];
    }
    b.labels(c) = s.label;
  }
  return b;
}

RowVector swmlp_forward(const SwmlpModel& m, const std::array<Matrix, kStreams>& x, SwmlpTape& tape) {
  for (const auto& xs : x)
    if (xs.rows() != static_cast<Eigen::Index>(kFeatureCount) || xs.cols() != x[0].cols())
      throw std::invalid_argument("swmlp_forward: each stream must be 8 x batch");
  tape.model = &m;
  tape.revision = m.revision;
  const Eigen::Index batch = x[0].cols();
  Matrix concat(kStreams * kSharedWidth, batch);
  for (int s = 0; s < kStreams; ++s) {
    tape.input[s] = x[s];
    tape.embed_pre[s] = m.embed[s].forward(x[s]);
    tape.embed_out[s] = activate(tape.embed_pre[s], m.activation);
    tape.shared_pre[s] = m.shared_for_stream(s).forward(tape.embed_out[s]);
    tape.shared_out[s] = activate(tape.shared_pre[s], m.activation);
    concat.middleRows(s * kSharedWidth, kSharedWidth) = tape.shared_out[s];
  }
  return stack_forward(m.head, m.activation, concat, tape.head);
}

double swmlp_forward(const SwmlpModel& m, const AssociatedSample& s, SwmlpTape& tape) {
  std::array<Matrix, kStreams> x{column(s.context_a), column(s.context_b), column(s.target)};
  return swmlp_forward(m, x, tape)(0);
}

double swmlp_predict(const SwmlpModel& m, const AssociatedSample& s) {
  SwmlpTape tape;
  return swmlp_forward(m, s, tape);
}

GradientSet swmlp_backward(const SwmlpModel& m, const SwmlpTape& tape, const RowVector& upstream) {
  check_tape(tape.model, tape.revision, &m, m.revision, tape.batch(), upstream.size());
  GradientSet g = zero_gradients(m.blocks());
  constexpr std::size_t kShared = 3, kHead = 4;
  const Matrix d_concat = stack_backward(m.head, m.activation, tape.head, upstream, g.blocks, kHead);

  g.shared_streams.assign(kStreams, DenseLayer(kEmbedWidth, kSharedWidth));
  for (int s = 0; s < kStreams; ++s) {
    const Matrix d_shared_pre = d_concat.middleRows(s * kSharedWidth, kSharedWidth)
                                    .cwiseProduct(activation_slope(tape.shared_pre[s], m.activation));
    g.shared_streams[s].weights.noalias() = d_shared_pre * tape.embed_out[s].transpose();
    g.shared_streams[s].bias = d_shared_pre.rowwise().sum();

    const Matrix d_embed_pre = (m.shared.weights.transpose() * d_shared_pre)
                                   .cwiseProduct(activation_slope(tape.embed_pre[s], m.activation));
    g.blocks[s].weights.noalias() = d_embed_pre * tape.input[s].transpose();
    g.blocks[s].bias = d_embed_pre.rowwise().sum();
  }
  // One parameter set serves all three streams, so its gradient is the sum.
  g.blocks[kShared].weights = g.shared_streams[0].weights + g.shared_streams[1].weights +
                              g.shared_streams[2].weights;
  g.blocks[kShared].bias = g.shared_streams[0].bias + g.shared_streams[1].bias + g.shared_streams[2].bias;
  return g;
}

GradientSet swmlp_backward(const SwmlpModel& m, const SwmlpTape& tape, double upstream) {
  return swmlp_backward(m, tape, RowVector::Constant(1, upstream));
}

RowVector baseline_forward(const BaselineMlp& m, const Matrix& x, BaselineTape& tape) {
  if (x.rows() != static_cast<Eigen::Index>(kFeatureCount))
    throw std::invalid_argument("baseline_forward: input must be 8 x batch");
  tape.model = &m;
  tape.revision = m.revision;
  return stack_forward(m.layers, m.activation, x, tape.stack);
}

double baseline_forward(const BaselineMlp& m, const FeatureVector& v, BaselineTape& tape) {
  return baseline_forward(m, column(v), tape)(0);
}

double baseline_predict(const BaselineMlp& m, const FeatureVector& v) {
  BaselineTape tape;
  return baseline_forward(m, v, tape);
}

GradientSet baseline_backward(const BaselineMlp& m, const BaselineTape& tape, const RowVector& upstream) {
  check_tape(tape.model, tape.revision, &m, m.revision, tape.batch(), upstream.size());
  GradientSet g = zero_gradients(m.blocks());
  stack_backward(m.layers, m.activation, tape.stack, upstream, g.blocks, 0);
  return g;
}

GradientSet baseline_backward(const BaselineMlp& m, const BaselineTape& tape, double upstream) {
  return baseline_backward(m, tape, RowVector::Constant(1, upstream));
}

double predict(const Model& m, const AssociatedSample& s) {
  if (const auto* sw = std::get_if<SwmlpModel>(&m)) return swmlp_predict(*sw, s);
  return baseline_predict(std::get<BaselineMlp>(m), s.target);
}

RowVector predict_batch(const Model& m, const StreamBatch& batch) {
  if (const auto* sw = std::get_if<SwmlpModel>(&m)) {
    SwmlpTape tape;
    return swmlp_forward(*sw, batch.x, tape);
  }
  BaselineTape tape;
  return baseline_forward(std::get<BaselineMlp>(m), batch.x[2], tape);
}

}  // namespace swmlp::nn
