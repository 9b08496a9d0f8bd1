#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "swmlp/association.hpp"
#include "swmlp/features.hpp"

namespace swmlp::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { Relu, Identity };

std::string_view activation_name(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

Matrix activate(const Matrix& z, Activation a);
/// Elementwise derivative at the pre-activation. ReLU'(0) is taken as 0.
Matrix activation_slope(const Matrix& z, Activation a);

/// y = W x + b, weights stored out × in.
struct DenseLayer {
  Matrix weights;
  Vector bias;

  DenseLayer() = default;
  DenseLayer(Eigen::Index in, Eigen::Index out) : weights(Matrix::Zero(out, in)), bias(Vector::Zero(out)) {}

  Eigen::Index inputs() const { return weights.cols(); }
  Eigen::Index outputs() const { return weights.rows(); }
  Eigen::Index parameter_count() const { return weights.size() + bias.size(); }

  /// Column-batched: x is in × B.
  Matrix forward(const Matrix& x) const { return (weights * x).colwise() + bias; }

  bool operator==(const DenseLayer& o) const {
    return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() &&
           bias.size() == o.bias.size() && weights == o.weights && bias == o.bias;
  }
};

inline constexpr std::array<int, 5> kHeadWidths{64, 128, 64, 32, 16};
inline constexpr int kEmbedWidth = 32;
inline constexpr int kSharedWidth = 16;
inline constexpr int kStreams = 3;

/// Shared-weight MLP over a (context_a, context_b, target) triplet.
///
/// Each stream s passes through its own embedding embed[s] (8→32), then through
/// the one shared layer (32→16); the three 16-wide outputs are concatenated and
/// regressed by head: 48→64→128→64→32→16 and a 16→1 linear output. The
/// activation follows every layer except the output.
struct SwmlpModel {
  std::array<DenseLayer, kStreams> embed;
  DenseLayer shared;
  std::vector<DenseLayer> head;
  Activation activation = Activation::Relu;
  std::uint64_t revision = 0;  // bumped on every parameter update

  /// The layer stream s applies after its embedding. All streams return the same object.
  const DenseLayer& shared_for_stream(int /*stream*/) const { return shared; }

  /// Canonical parameter order: embed 1..3, shared, head layers.
  std::vector<DenseLayer*> blocks();
  std::vector<const DenseLayer*> blocks() const;

  /// Parameters and activation; the revision counter is ignored.
  bool operator==(const SwmlpModel& o) const {
    return embed == o.embed && shared == o.shared && head == o.head && activation == o.activation;
  }
};

/// Pointwise regressor: 8→64 then the SWMLP head widths 128, 64, 32, 16 and a 16→1 output.
struct BaselineMlp {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::Relu;
  std::uint64_t revision = 0;

  std::vector<DenseLayer*> blocks();
  std::vector<const DenseLayer*> blocks() const;

  bool operator==(const BaselineMlp& o) const { return layers == o.layers && activation == o.activation; }
};

using Model = std::variant<SwmlpModel, BaselineMlp>;

enum class Architecture { Swmlp, Baseline };
std::string_view architecture_name(Architecture a);
Architecture architecture_of(const Model& m);

/// Gradient blocks in the owning model's canonical order.
struct GradientSet {
  std::vector<DenseLayer> blocks;
  /// SWMLP only: the shared layer's gradient split by the stream it flowed through.
  /// Their sum is the shared block.
  std::vector<DenseLayer> shared_streams;
};

GradientSet zero_gradients(const std::vector<const DenseLayer*>& blocks);

/// Bound of the uniform initialization: sqrt(6 / (fan_in + fan_out)).
double init_bound(Eigen::Index fan_in, Eigen::Index fan_out);

/// Weights uniform in ±init_bound, biases zero.
SwmlpModel init_swmlp(std::uint64_t seed, Activation act = Activation::Relu);
BaselineMlp init_baseline(std::uint64_t seed, Activation act = Activation::Relu);
Model init_model(std::uint64_t seed, Architecture arch, Activation act = Activation::Relu);

/// Cached activations of one forward pass through a plain layer stack.
struct StackTape {
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

struct SwmlpTape {
  const SwmlpModel* model = nullptr;
  std::uint64_t revision = 0;
  std::array<Matrix, kStreams> input, embed_pre, embed_out, shared_pre, shared_out;
  StackTape head;

  Eigen::Index batch() const { return input[0].cols(); }
};

struct BaselineTape {
  const BaselineMlp* model = nullptr;
  std::uint64_t revision = 0;
  StackTape stack;

  Eigen::Index batch() const { return stack.inputs.empty() ? 0 : stack.inputs[0].cols(); }
};

/// Stream inputs of a batch: columns are samples, rows the 8 features.
struct StreamBatch {
  std::array<Matrix, kStreams> x;
  RowVector labels;
};

/// Streams 1, 2, 3 are context_a, context_b, target.
StreamBatch make_batch(std::span<const AssociatedSample> samples);
StreamBatch make_batch(std::span<const AssociatedSample> samples, std::span<const std::size_t> order);

RowVector swmlp_forward(const SwmlpModel& m, const std::array<Matrix, kStreams>& x, SwmlpTape& tape);
/// Scalar speed for one triplet, with the tape needed for swmlp_backward.
double swmlp_forward(const SwmlpModel& m, const AssociatedSample& s, SwmlpTape& tape);
double swmlp_predict(const SwmlpModel& m, const AssociatedSample& s);

/// Gradient of sum_b upstream[b] * prediction[b]. Throws std::logic_error on a stale tape.
GradientSet swmlp_backward(const SwmlpModel& m, const SwmlpTape& tape, const RowVector& upstream);
GradientSet swmlp_backward(const SwmlpModel& m, const SwmlpTape& tape, double upstream);

/// Baseline input is the target slot only (PAT kept).
RowVector baseline_forward(const BaselineMlp& m, const Matrix& x, BaselineTape& tape);
double baseline_forward(const BaselineMlp& m, const FeatureVector& v, BaselineTape& tape);
double baseline_predict(const BaselineMlp& m, const FeatureVector& v);

GradientSet baseline_backward(const BaselineMlp& m, const BaselineTape& tape, const RowVector& upstream);
GradientSet baseline_backward(const BaselineMlp& m, const BaselineTape& tape, double upstream);

/// Prediction for a sample with whichever input slots the architecture uses.
double predict(const Model& m, const AssociatedSample& s);
RowVector predict_batch(const Model& m, const StreamBatch& batch);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_block = 0;
  Eigen::Index worst_index = 0;  // flat index within the block: weights (column-major) then bias
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t parameters = 0;
  std::size_t kink_refinements = 0;  // re-probes with a smaller step, see below
};

/// Central differences (f(θ+ε) − f(θ−ε)) / 2ε for every parameter against the
/// analytic gradient. The perturbed outputs are evaluated in difference form,
/// carrying f(θ±ε) − f(θ) through the network, so cancellation does not swamp
/// small derivatives. Error per parameter: |a − n| / max(1e-8, |a| + |n|).
/// A parameter whose ±ε step carries some ReLU pre-activation across zero is
/// re-probed with ε/10, ε/100, ... (up to ε·1e-6): the difference quotient
/// straddling a kink estimates neither one-sided derivative.
GradCheckReport gradient_check_report(const Model& m, const AssociatedSample& s, double epsilon);
double gradient_check(const Model& m, const AssociatedSample& s, double epsilon);

}  // namespace swmlp::nn
