#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "swmlp/neuralnet.hpp"

namespace swmlp::nn {

namespace {

// Columns whose perturbation moved some ReLU pre-activation across the kink.
using Crossings = std::vector<char>;

// act(z + dz) − act(z), evaluated so that the result carries no cancellation
// error when both points lie on the same linear piece.
double act_delta(double z, double dz, Activation a, char& crossed) {
  if (a == Activation::Identity) return dz;
  const double zp = z + dz;
  if (z > 0.0 && zp > 0.0) return dz;
  if (z <= 0.0 && zp <= 0.0) return 0.0;
  crossed = 1;
  return std::max(zp, 0.0) - std::max(z, 0.0);
}

Matrix act_delta(const Vector& z, const Matrix& dz, Activation a, Crossings& crossed) {
  Matrix out(dz.rows(), dz.cols());
  for (Eigen::Index c = 0; c < dz.cols(); ++c)
    for (Eigen::Index r = 0; r < dz.rows(); ++r) out(r, c) = act_delta(z(r), dz(r, c), a, crossed[c]);
  return out;
}

// One perturbation per column: pre-activation unit `row` moves by `shift`.
struct UnitShifts {
  std::vector<Eigen::Index> row;
  std::vector<double> shift;

  std::size_t size() const { return row.size(); }
  UnitShifts scaled(double f) const {
    UnitShifts n = *this;
    for (auto& s : n.shift) s *= f;
    return n;
  }
  UnitShifts select(const std::vector<std::size_t>& idx) const {
    UnitShifts n;
    for (std::size_t i : idx) {
      n.row.push_back(row[i]);
      n.shift.push_back(shift[i]);
    }
    return n;
  }
};

// Shifts of every parameter of `layer` whose input is `x`, in flat order
// (weights column-major, then bias): W(r,c) ± ε moves unit r by ±ε·x(c).
UnitShifts layer_shifts(const DenseLayer& layer, const Vector& x, double eps) {
  UnitShifts u;
  for (Eigen::Index c = 0; c < layer.inputs(); ++c)
    for (Eigen::Index r = 0; r < layer.outputs(); ++r) {
      u.row.push_back(r);
      u.shift.push_back(eps * x(c));
    }
  for (Eigen::Index r = 0; r < layer.outputs(); ++r) {
    u.row.push_back(r);
    u.shift.push_back(eps);
  }
  return u;
}

// Output change given the change of layer k's pre-activation (one column per perturbation).
RowVector stack_tail(const std::vector<DenseLayer>& layers, Activation act, const StackTape& tape,
                     std::size_t k, Matrix dz, Crossings& crossed) {
  for (std::size_t j = k; j + 1 < layers.size(); ++j) {
    const Matrix da = act_delta(tape.pre[j].col(0), dz, act, crossed);
    dz = layers[j + 1].weights * da;
  }
  return dz;
}

// Output change for unit shifts applied at layer k's pre-activation.
RowVector stack_from_units(const std::vector<DenseLayer>& layers, Activation act, const StackTape& tape,
                           std::size_t k, const UnitShifts& u, Crossings& crossed) {
  const auto n = static_cast<Eigen::Index>(u.size());
  if (k + 1 == layers.size()) {
    RowVector out(n);
    for (Eigen::Index p = 0; p < n; ++p) out(p) = u.shift[static_cast<std::size_t>(p)];
    return out;
  }
  const Matrix& w_next = layers[k + 1].weights;
  Matrix dz(w_next.rows(), n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto i = static_cast<std::size_t>(p);
    const double da = act_delta(tape.pre[k](u.row[i], 0), u.shift[i], act, crossed[i]);
    dz.col(p) = w_next.col(u.row[i]) * da;
  }
  return stack_tail(layers, act, tape, k + 1, std::move(dz), crossed);
}

Vector flatten(const DenseLayer& g) {
  Vector v(g.parameter_count());
  v.head(g.weights.size()) = Eigen::Map<const Vector>(g.weights.data(), g.weights.size());
  v.tail(g.bias.size()) = g.bias;
  return v;
}

void accumulate(GradCheckReport& rep, std::size_t block, const Vector& analytic, const Vector& numeric) {
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic(i), n = numeric(i);
    const double err = std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
    if (rep.parameters == 0 || err > rep.max_relative_error) {
      rep.max_relative_error = err;
      rep.worst_block = block;
      rep.worst_index = i;
      rep.worst_analytic = a;
      rep.worst_numeric = n;
    }
    ++rep.parameters;
  }
}

// Output change for the selected parameters of one block, each moved by `step`
// times its unit perturbation. Marks columns that crossed a kink.
using Probe = std::function<RowVector(const std::vector<std::size_t>&, double step, Crossings&)>;

// Central differences for `n` parameters. A parameter whose ±step moves any
// ReLU across its kink is re-probed with a step ten times smaller, at most
// kMaxRefinements times; the last estimate is kept either way.
Vector central_differences(const Probe& probe, std::size_t n, double eps, GradCheckReport& rep) {
  constexpr int kMaxRefinements = 6;
  Vector numeric(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = i;
  double step = eps;
  for (int round = 0; !pending.empty(); ++round) {
    Crossings crossed(pending.size(), 0);
    const RowVector plus = probe(pending, step, crossed);
    const RowVector minus = probe(pending, -step, crossed);
    std::vector<std::size_t> again;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      numeric(static_cast<Eigen::Index>(pending[j])) = (plus(j) - minus(j)) / (2.0 * step);
      if (crossed[j] && round < kMaxRefinements) again.push_back(pending[j]);
    }
    rep.kink_refinements += again.size();
    pending = std::move(again);
    step /= 10.0;
  }
  return numeric;
}

void check_stack(const std::vector<DenseLayer>& layers, Activation act, const StackTape& tape,
                 const GradientSet& g, std::size_t first_block, double eps, GradCheckReport& rep) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const UnitShifts unit = layer_shifts(layers[k], tape.inputs[k].col(0), 1.0);
    const Probe probe = [&](const std::vector<std::size_t>& idx, double step, Crossings& crossed) {
      return stack_from_units(layers, act, tape, k, unit.select(idx).scaled(step), crossed);
    };
    accumulate(rep, first_block + k, flatten(g.blocks[first_block + k]),
               central_differences(probe, unit.size(), eps, rep));
  }
}

GradCheckReport check_swmlp(const SwmlpModel& m, const AssociatedSample& s, double eps) {
  SwmlpTape tape;
  swmlp_forward(m, s, tape);
  const GradientSet g = swmlp_backward(m, tape, 1.0);
  const Activation act = m.activation;
  const Matrix& w_head0 = m.head.front().weights;

  GradCheckReport rep;

  // Embeddings: stream st only.
  for (int st = 0; st < kStreams; ++st) {
    const UnitShifts unit = layer_shifts(m.embed[st], tape.input[st].col(0), 1.0);
    const Probe probe = [&](const std::vector<std::size_t>& idx, double step, Crossings& crossed) {
      const UnitShifts u = unit.select(idx).scaled(step);
      const auto n = static_cast<Eigen::Index>(u.size());
      Matrix d_shared_pre(kSharedWidth, n);
      for (Eigen::Index p = 0; p < n; ++p) {
        const auto i = static_cast<std::size_t>(p);
        const double da = act_delta(tape.embed_pre[st](u.row[i], 0), u.shift[i], act, crossed[i]);
        d_shared_pre.col(p) = m.shared.weights.col(u.row[i]) * da;
      }
      const Matrix d_shared_out = act_delta(tape.shared_pre[st].col(0), d_shared_pre, act, crossed);
      Matrix dz = w_head0.middleCols(st * kSharedWidth, kSharedWidth) * d_shared_out;
      return stack_tail(m.head, act, tape.head, 0, std::move(dz), crossed);
    };
    accumulate(rep, static_cast<std::size_t>(st), flatten(g.blocks[st]),
               central_differences(probe, unit.size(), eps, rep));
  }

  // Shared layer: one parameter moves all three streams at once.
  {
    std::array<UnitShifts, kStreams> unit;
    for (int st = 0; st < kStreams; ++st) unit[st] = layer_shifts(m.shared, tape.embed_out[st].col(0), 1.0);
    const Probe probe = [&](const std::vector<std::size_t>& idx, double step, Crossings& crossed) {
      const auto n = static_cast<Eigen::Index>(idx.size());
      Matrix dz = Matrix::Zero(w_head0.rows(), n);
      for (Eigen::Index p = 0; p < n; ++p)
        for (int st = 0; st < kStreams; ++st) {
          const std::size_t i = idx[static_cast<std::size_t>(p)];
          const auto r = unit[st].row[i];
          const double da = act_delta(tape.shared_pre[st](r, 0), step * unit[st].shift[i], act,
                                      crossed[static_cast<std::size_t>(p)]);
          dz.col(p) += w_head0.col(st * kSharedWidth + r) * da;
        }
      return stack_tail(m.head, act, tape.head, 0, std::move(dz), crossed);
    };
    accumulate(rep, 3, flatten(g.blocks[3]), central_differences(probe, unit[0].size(), eps, rep));
  }

  check_stack(m.head, act, tape.head, g, 4, eps, rep);
  return rep;
}

GradCheckReport check_baseline(const BaselineMlp& m, const AssociatedSample& s, double eps) {
  BaselineTape tape;
  baseline_forward(m, s.target, tape);
  const GradientSet g = baseline_backward(m, tape, 1.0);
  GradCheckReport rep;
  check_stack(m.layers, m.activation, tape.stack, g, 0, eps, rep);
  return rep;
}

}  // namespace

GradCheckReport gradient_check_report(const Model& m, const AssociatedSample& s, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
  if (const auto* sw = std::get_if<SwmlpModel>(&m)) return check_swmlp(*sw, s, epsilon);
  return check_baseline(std::get<BaselineMlp>(m), s, epsilon);
}

double gradient_check(const Model& m, const AssociatedSample& s, double epsilon) {
  return gradient_check_report(m, s, epsilon).max_relative_error;
}

}  // namespace swmlp::nn
