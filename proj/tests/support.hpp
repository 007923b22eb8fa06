#pragma once

#include <cmath>
#include <vector>

#include "gyronn/control.hpp"
#include "gyronn/kernels.hpp"
#include "gyronn/nn.hpp"
#include "gyronn/seeding.hpp"

namespace testing {

inline gyronn::PlantParams reference_plant() {
  gyronn::PlantParams p;
  p.H = 0.4;
  p.J_xp = 0.012;
  p.J_yp = 0.010;
  p.J_zp = 0.008;
  p.J_xi = 0.006;
  p.J_yi = 0.005;
  p.J_zi = 0.004;
  p.J_xe = 0.015;
  p.J_ye = 0.014;
  p.J_ze = 0.016;
  p.h = 0.02;
  p.h3 = 0.01;
  return p;
}

inline gyronn::RegulatorGain reference_gain(const gyronn::PlantParams& p = reference_plant()) {
  const gyronn::LinearModel lm = gyronn::linearize(p, gyronn::PlantState{});
  const std::vector<double> wn = {25.0, 30.0, 35.0};
  return gyronn::design_gain(lm, gyronn::damped_pole_pairs(wn, 0.7));
}

inline double uniform(std::uint64_t seed, std::uint64_t i, double lo, double hi) {
  return lo + (hi - lo) * gyronn::counter_uniform(seed, i);
}

inline Eigen::VectorXd random_vector(std::uint64_t seed, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(seed, static_cast<std::uint64_t>(i), -scale, scale);
  return v;
}

inline Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = uniform(seed, static_cast<std::uint64_t>(i), -scale, scale);
  return m;
}

/// Small random net: `layers` layers, widths in [1, max_width], hidden
/// activations chosen from the seed, purelin or the same kind on the output.
inline gyronn::Mlp random_net(std::uint64_t seed, int layers, int max_width = 8) {
  using gyronn::Activation;
  std::vector<int> sizes;
  for (int l = 0; l <= layers; ++l)
    sizes.push_back(1 + static_cast<int>(gyronn::counter_uniform(seed, 100 + l) * max_width));
  const Activation kinds[] = {Activation::tansig, Activation::logsig, Activation::purelin};
  std::vector<Activation> acts;
  for (int l = 0; l < layers; ++l)
    acts.push_back(kinds[static_cast<int>(gyronn::counter_uniform(seed, 200 + l) * 3) % 3]);
  // Wider init than the default so the nonlinearities are exercised.
  gyronn::Mlp net = gyronn::Mlp::random(sizes, acts, seed);
  return net.with_parameters(net.flatten() * 3.0);
}

inline gyronn::Dataset random_data(std::uint64_t seed, const gyronn::Mlp& net, Eigen::Index n) {
  gyronn::Dataset d;
  d.inputs = random_matrix(seed, net.input_width(), n, 2.0);
  d.targets = random_matrix(seed + 1, net.output_width(), n);
  return d;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace testing
