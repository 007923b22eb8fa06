#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gyronn/dynamics.hpp"

namespace gyronn {

enum class Activation { tansig, logsig, purelin };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

double activate(Activation a, double z);
/// Derivative expressed through the activation value y = f(z).
double activation_slope(Activation a, double y);

struct Layer {
  Eigen::MatrixXd weights;  ///< rows = units, cols = previous width
  Eigen::VectorXd bias;
  Activation activation = Activation::purelin;

  Eigen::Index parameter_count() const { return weights.size() + bias.size(); }
};

/// Feed-forward network x = f_n(W_n ... f_1(W_1 u + b_1) ... + b_n).
///
/// Parameters flatten layer-major; inside a layer the weights come first in
/// row-major order, then the biases.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  /// `sizes` = {input, hidden..., output}; one activation per layer.
  static Mlp random(std::span<const int> sizes, std::span<const Activation> activations,
                    std::uint64_t seed);

  Eigen::Index input_width() const;
  Eigen::Index output_width() const;
  Eigen::Index parameter_count() const;
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::VectorXd flatten() const;
  /// Copy with parameters replaced; throws DimensionError on size mismatch.
  Mlp with_parameters(const Eigen::VectorXd& theta) const;

 private:
  void validate() const;
  std::vector<Layer> layers_;
};

Eigen::VectorXd forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& window);

struct ForwardCache {
  std::vector<Eigen::VectorXd> pre;   ///< W a + b per layer
  std::vector<Eigen::VectorXd> post;  ///< post[0] is the input, post[l+1] layer l output

  const Eigen::VectorXd& output() const { return post.back(); }
};

Eigen::VectorXd forward_with_cache(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& window,
                                   ForwardCache& cache);

/// Reverse-mode d output / d theta written into `jac` (output_width x P).
void output_jacobian(const Mlp& net, const ForwardCache& cache, Eigen::Ref<Eigen::MatrixXd> jac);

Eigen::MatrixXd output_jacobian_wrt_weights(const Mlp& net,
                                            const Eigen::Ref<const Eigen::VectorXd>& window);

/// Memory unit: keeps the current measurement and `memory_depth` previous
/// ones. Windows are ordered newest first; unfilled slots read as zero.
class TappedDelayBuffer {
 public:
  TappedDelayBuffer(int memory_depth, int channels);

  Eigen::VectorXd push(const Eigen::Ref<const Eigen::VectorXd>& sample);
  Eigen::VectorXd window() const;
  void reset();

  int memory_depth() const { return depth_; }
  int channels() const { return channels_; }
  int fill_count() const { return static_cast<int>(history_.size()); }
  int window_width() const { return channels_ * (depth_ + 1); }

 private:
  int depth_;
  int channels_;
  std::deque<Eigen::VectorXd> history_;  // front = newest
};

/// Per-component affine standardization z = (v - mean) / std.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static Standardizer identity(Eigen::Index n);
  Eigen::Index size() const { return mean.size(); }
};

/// A trained network together with everything it needs at run time:
/// which measurements feed it, how deep its memory is, and the input and
/// output scaling applied around the raw Mlp.
struct NetworkRecord {
  Mlp net;
  int memory_depth = 0;
  ChannelList channels;
  Standardizer input;   ///< per measurement channel (shared by all delays)
  Standardizer output;  ///< per network output

  void validate() const;
  Eigen::VectorXd standardize_window(const Eigen::Ref<const Eigen::VectorXd>& window) const;
  /// Raw window in, physical units out.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& window) const;
};

void save_network(std::ostream& out, const NetworkRecord& rec);
NetworkRecord load_network(std::istream& in);
void save_network_file(const std::string& path, const NetworkRecord& rec);
NetworkRecord load_network_file(const std::string& path);

}  // namespace gyronn
