#include "gyronn/kernels.hpp"

#include <algorithm>
#include <vector>

#include <omp.h>

#include "gyronn/errors.hpp"

namespace gyronn {

void Dataset::validate() const {
  if (inputs.cols() == 0) throw ValidationError("dataset: empty");
  if (targets.cols() != inputs.cols())
    throw DimensionError("dataset: inputs and targets disagree on sample count");
  if (!inputs.allFinite() || !targets.allFinite()) throw ValidationError("dataset: non-finite values");
}

namespace {

void check(const Mlp& net, const Dataset& data, SampleOrder order) {
  data.validate();
  if (data.inputs.rows() != net.input_width() || data.targets.rows() != net.output_width())
    throw DimensionError("dataset does not match network dimensions");
  if (!order.empty() && static_cast<Eigen::Index>(order.size()) != data.size())
    throw DimensionError("sample order has wrong length");
}

inline Eigen::Index sample_at(SampleOrder order, Eigen::Index i) {
  return order.empty() ? i : order[static_cast<std::size_t>(i)];
}

// Chunks are combined in waves of this many so that partial Hessians never
// exceed kWave * P^2 doubles of scratch.
constexpr Eigen::Index kWave = 16;

struct Partial {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  double sq = 0.0;
};

void accumulate_chunk(const Mlp& net, const Dataset& data, SampleOrder order, Eigen::Index begin,
                      Eigen::Index end, bool want_hessian, Partial& part) {
  const Eigen::Index out = net.output_width(), params = net.parameter_count();
  const Eigen::Index rows = (end - begin) * out;
  Eigen::MatrixXd jac(rows, params);
  Eigen::VectorXd resid(rows);
  ForwardCache cache;
  Eigen::MatrixXd js(out, params);
  for (Eigen::Index i = begin; i < end; ++i) {
    const Eigen::Index s = sample_at(order, i);
    forward_with_cache(net, data.inputs.col(s), cache);
    output_jacobian(net, cache, js);
    const Eigen::Index r0 = (i - begin) * out;
    jac.middleRows(r0, out) = js;
    resid.segment(r0, out) = data.targets.col(s) - cache.output();
  }
  part.sq = resid.squaredNorm();
  part.gradient = -(jac.transpose() * resid);
  if (want_hessian) {
    part.hessian.setZero(params, params);
    part.hessian.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
  }
}

NormalEquations accumulate_parallel(const Mlp& net, const Dataset& data, SampleOrder order,
                                    bool want_hessian) {
  check(net, data, order);
  const Eigen::Index n = data.size(), params = net.parameter_count();
  const Eigen::Index chunks = (n + kChunkSize - 1) / kChunkSize;
  NormalEquations ne;
  ne.gradient = Eigen::VectorXd::Zero(params);
  if (want_hessian) ne.hessian = Eigen::MatrixXd::Zero(params, params);
  double sq = 0.0;
  std::vector<Partial> parts(static_cast<std::size_t>(std::min(kWave, chunks)));
  for (Eigen::Index wave = 0; wave < chunks; wave += kWave) {
    const Eigen::Index count = std::min(kWave, chunks - wave);
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index c = 0; c < count; ++c) {
      const Eigen::Index begin = (wave + c) * kChunkSize;
      const Eigen::Index end = std::min(n, begin + kChunkSize);
      accumulate_chunk(net, data, order, begin, end, want_hessian,
                       parts[static_cast<std::size_t>(c)]);
    }
    for (Eigen::Index c = 0; c < count; ++c) {
      const Partial& p = parts[static_cast<std::size_t>(c)];
      sq += p.sq;
      ne.gradient += p.gradient;
      if (want_hessian) ne.hessian.triangularView<Eigen::Lower>() += p.hessian;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ne.loss = 0.5 * sq * inv_n;
  ne.gradient *= inv_n;
  if (want_hessian) {
    ne.hessian *= inv_n;
    ne.hessian.triangularView<Eigen::StrictlyUpper>() = ne.hessian.transpose();
  }
  return ne;
}

}  // namespace

double loss_serial(const Mlp& net, const Dataset& data, SampleOrder order) {
  check(net, data, order);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::Index s = sample_at(order, i);
    sq += (data.targets.col(s) - forward(net, data.inputs.col(s))).squaredNorm();
  }
  return 0.5 * sq / static_cast<double>(data.size());
}

double loss_parallel(const Mlp& net, const Dataset& data, SampleOrder order) {
  check(net, data, order);
  const Eigen::Index n = data.size();
  const Eigen::Index chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    double sq = 0.0;
    const Eigen::Index end = std::min(n, (c + 1) * kChunkSize);
    for (Eigen::Index i = c * kChunkSize; i < end; ++i) {
      const Eigen::Index s = sample_at(order, i);
      sq += (data.targets.col(s) - forward(net, data.inputs.col(s))).squaredNorm();
    }
    partial[static_cast<std::size_t>(c)] = sq;
  }
  double sq = 0.0;
  for (double p : partial) sq += p;
  return 0.5 * sq / static_cast<double>(n);
}

Eigen::VectorXd gradient_serial(const Mlp& net, const Dataset& data, SampleOrder order,
                                double* loss) {
  check(net, data, order);
  const Eigen::Index params = net.parameter_count();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::Index s = sample_at(order, i);
    const Eigen::MatrixXd jac = output_jacobian_wrt_weights(net, data.inputs.col(s));
    const Eigen::VectorXd e = data.targets.col(s) - forward(net, data.inputs.col(s));
    grad -= jac.transpose() * e;
    sq += e.squaredNorm();
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  if (loss) *loss = 0.5 * sq * inv_n;
  return grad * inv_n;
}

Eigen::VectorXd gradient_parallel(const Mlp& net, const Dataset& data, SampleOrder order,
                                  double* loss) {
  NormalEquations ne = accumulate_parallel(net, data, order, false);
  if (loss) *loss = ne.loss;
  return std::move(ne.gradient);
}

NormalEquations normal_equations_serial(const Mlp& net, const Dataset& data, SampleOrder order) {
  check(net, data, order);
  const Eigen::Index params = net.parameter_count();
  NormalEquations ne;
  ne.hessian = Eigen::MatrixXd::Zero(params, params);
  ne.gradient = Eigen::VectorXd::Zero(params);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::Index s = sample_at(order, i);
    const Eigen::MatrixXd jac = output_jacobian_wrt_weights(net, data.inputs.col(s));
    const Eigen::VectorXd e = data.targets.col(s) - forward(net, data.inputs.col(s));
    ne.hessian += jac.transpose() * jac;
    ne.gradient -= jac.transpose() * e;
    sq += e.squaredNorm();
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  ne.hessian *= inv_n;
  ne.gradient *= inv_n;
  ne.loss = 0.5 * sq * inv_n;
  return ne;
}

NormalEquations normal_equations_parallel(const Mlp& net, const Dataset& data, SampleOrder order) {
  return accumulate_parallel(net, data, order, true);
}

}  // namespace gyronn
