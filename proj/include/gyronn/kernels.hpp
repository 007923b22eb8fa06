#pragma once

// Batch accumulation over training samples. Each quantity has two
// implementations:
//   *_serial    straightforward per-sample loop, the reference;
//   *_parallel  OpenMP over fixed-size sample chunks. Chunk boundaries do not
//               depend on the thread count and partial sums are combined in
//               chunk order, so results are bitwise identical for any number
//               of threads.
// The two agree to rounding (~1e-12 relative), not bitwise.

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "gyronn/nn.hpp"

namespace gyronn {

/// Samples stored column-wise: inputs (in x N), targets (out x N).
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const { return inputs.cols(); }
  void validate() const;
};

/// Visiting order over samples; empty means 0..N-1.
using SampleOrder = std::span<const Eigen::Index>;

/// Gauss-Newton quantities of E = 1/(2N) sum |target - out|^2.
struct NormalEquations {
  Eigen::MatrixXd hessian;   ///< J^T J / N (full symmetric)
  Eigen::VectorXd gradient;  ///< dE/dtheta = -J^T e / N
  double loss = 0.0;
};

inline constexpr Eigen::Index kChunkSize = 256;

double loss_serial(const Mlp& net, const Dataset& data, SampleOrder order = {});
double loss_parallel(const Mlp& net, const Dataset& data, SampleOrder order = {});

Eigen::VectorXd gradient_serial(const Mlp& net, const Dataset& data, SampleOrder order = {},
                                double* loss = nullptr);
Eigen::VectorXd gradient_parallel(const Mlp& net, const Dataset& data, SampleOrder order = {},
                                  double* loss = nullptr);

NormalEquations normal_equations_serial(const Mlp& net, const Dataset& data,
                                        SampleOrder order = {});
NormalEquations normal_equations_parallel(const Mlp& net, const Dataset& data,
                                          SampleOrder order = {});

}  // namespace gyronn
