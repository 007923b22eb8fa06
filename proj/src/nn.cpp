#include "gyronn/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "gyronn/csv.hpp"
#include "gyronn/errors.hpp"
#include "gyronn/seeding.hpp"

namespace gyronn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tansig: return "tansig";
    case Activation::logsig: return "logsig";
    case Activation::purelin: return "purelin";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "tansig") return Activation::tansig;
  if (name == "logsig") return Activation::logsig;
  if (name == "purelin") return Activation::purelin;
  throw ValidationError("unknown activation '" + name + "'");
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tansig: return std::tanh(z);
    case Activation::logsig: return 1.0 / (1.0 + std::exp(-z));
    case Activation::purelin: return z;
  }
  return z;
}

double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::tansig: return 1.0 - y * y;
    case Activation::logsig: return y * (1.0 - y);
    case Activation::purelin: return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) { validate(); }

void Mlp::validate() const {
  if (layers_.empty()) throw DimensionError("mlp: needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
      throw DimensionError("mlp: empty weight matrix in layer " + std::to_string(l + 1));
    if (layer.bias.size() != layer.weights.rows())
      throw DimensionError("mlp: bias size mismatch in layer " + std::to_string(l + 1));
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
      throw DimensionError("mlp: layer " + std::to_string(l + 1) + " does not chain");
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw ValidationError("mlp: non-finite parameter in layer " + std::to_string(l + 1));
  }
}

Mlp Mlp::random(std::span<const int> sizes, std::span<const Activation> activations,
                std::uint64_t seed) {
  if (sizes.size() < 2 || activations.size() + 1 != sizes.size())
    throw DimensionError("mlp: need {input, ..., output} sizes and one activation per layer");
  std::vector<Layer> layers;
  std::uint64_t counter = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], units = sizes[l + 1];
    if (fan_in <= 0 || units <= 0) throw DimensionError("mlp: layer sizes must be positive");
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer;
    layer.activation = activations[l];
    layer.weights.resize(units, fan_in);
    layer.bias.resize(units);
    for (int r = 0; r < units; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.weights(r, c) = (counter_uniform(seed, counter++) - 0.5) * scale;
    for (int r = 0; r < units; ++r) layer.bias[r] = (counter_uniform(seed, counter++) - 0.5) * scale;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Eigen::Index Mlp::input_width() const { return layers_.empty() ? 0 : layers_.front().weights.cols(); }
Eigen::Index Mlp::output_width() const { return layers_.empty() ? 0 : layers_.back().weights.rows(); }

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd theta(parameter_count());
  Eigen::Index k = 0;
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) theta[k++] = l.weights(r, c);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) theta[k++] = l.bias[r];
  }
  return theta;
}

Mlp Mlp::with_parameters(const Eigen::VectorXd& theta) const {
  if (theta.size() != parameter_count())
    throw DimensionError("mlp: parameter vector has " + std::to_string(theta.size()) +
                         " entries, expected " + std::to_string(parameter_count()));
  std::vector<Layer> layers = layers_;
  Eigen::Index k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = theta[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = theta[k++];
  }
  return Mlp(std::move(layers));
}

// ---------------------------------------------------------------------------
// Forward pass and derivatives

namespace {

void check_window(const Mlp& net, Eigen::Index n) {
  if (n != net.input_width())
    throw DimensionError("forward: window has " + std::to_string(n) + " entries, network expects " +
                         std::to_string(net.input_width()));
}

void apply_activation(Activation a, Eigen::VectorXd& v) {
  if (a == Activation::purelin) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = activate(a, v[i]);
}

}  // namespace

Eigen::VectorXd forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& window) {
  check_window(net, window.size());
  Eigen::VectorXd a = window;
  for (const auto& layer : net.layers()) {
    Eigen::VectorXd z = layer.weights * a + layer.bias;
    apply_activation(layer.activation, z);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward_with_cache(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& window,
                                   ForwardCache& cache) {
  check_window(net, window.size());
  const auto& layers = net.layers();
  cache.pre.resize(layers.size());
  cache.post.resize(layers.size() + 1);
  cache.post[0] = window;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cache.pre[l] = layers[l].weights * cache.post[l] + layers[l].bias;
    cache.post[l + 1] = cache.pre[l];
    apply_activation(layers[l].activation, cache.post[l + 1]);
  }
  return cache.post.back();
}

void output_jacobian(const Mlp& net, const ForwardCache& cache, Eigen::Ref<Eigen::MatrixXd> jac) {
  const auto& layers = net.layers();
  const Eigen::Index out = net.output_width();
  if (jac.rows() != out || jac.cols() != net.parameter_count())
    throw DimensionError("output_jacobian: destination has wrong shape");

  // delta(i, r) = d out_i / d pre_r of the current layer.
  std::vector<Eigen::Index> offset(layers.size());
  Eigen::Index acc = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offset[l] = acc;
    acc += layers[l].parameter_count();
  }

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(out, out);
  for (Eigen::Index i = 0; i < out; ++i)
    delta(i, i) = activation_slope(layers.back().activation, cache.post.back()[i]);

  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = layers[l];
    const Eigen::VectorXd& a_prev = cache.post[l];
    const Eigen::Index units = layer.weights.rows(), fan_in = layer.weights.cols();
    Eigen::Index k = offset[l];
    for (Eigen::Index r = 0; r < units; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) jac.col(k++) = delta.col(r) * a_prev[c];
    for (Eigen::Index r = 0; r < units; ++r) jac.col(k++) = delta.col(r);

    if (l == 0) break;
    Eigen::MatrixXd next = delta * layer.weights;  // out x fan_in
    const Activation prev_act = layers[l - 1].activation;
    for (Eigen::Index c = 0; c < fan_in; ++c) next.col(c) *= activation_slope(prev_act, a_prev[c]);
    delta = std::move(next);
  }
}

Eigen::MatrixXd output_jacobian_wrt_weights(const Mlp& net,
                                            const Eigen::Ref<const Eigen::VectorXd>& window) {
  ForwardCache cache;
  forward_with_cache(net, window, cache);
  Eigen::MatrixXd jac(net.output_width(), net.parameter_count());
  output_jacobian(net, cache, jac);
  return jac;
}

// ---------------------------------------------------------------------------
// Tapped delay buffer

TappedDelayBuffer::TappedDelayBuffer(int memory_depth, int channels)
    : depth_(memory_depth), channels_(channels) {
  if (memory_depth < 0) throw ValidationError("tapped delay: memory depth must be >= 0");
  if (channels <= 0) throw ValidationError("tapped delay: channels must be > 0");
}

Eigen::VectorXd TappedDelayBuffer::push(const Eigen::Ref<const Eigen::VectorXd>& sample) {
  if (sample.size() != channels_)
    throw DimensionError("tapped delay: sample has " + std::to_string(sample.size()) +
                         " channels, expected " + std::to_string(channels_));
  history_.push_front(sample);
  if (static_cast<int>(history_.size()) > depth_ + 1) history_.pop_back();
  return window();
}

Eigen::VectorXd TappedDelayBuffer::window() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(window_width());
  for (std::size_t d = 0; d < history_.size(); ++d)
    w.segment(static_cast<Eigen::Index>(d) * channels_, channels_) = history_[d];
  return w;
}

void TappedDelayBuffer::reset() { history_.clear(); }

// ---------------------------------------------------------------------------
// Network record and serialization

Standardizer Standardizer::identity(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
}

void NetworkRecord::validate() const {
  const auto channels_n = static_cast<Eigen::Index>(channels.size());
  if (channels.empty()) throw ValidationError("network record: no measurement channels");
  if (memory_depth < 0) throw ValidationError("network record: negative memory depth");
  if (net.input_width() != channels_n * (memory_depth + 1))
    throw DimensionError("network record: input width " + std::to_string(net.input_width()) +
                         " != channels x (memory_depth + 1)");
  if (input.size() != channels_n) throw DimensionError("network record: input scaling size");
  if (output.size() != net.output_width()) throw DimensionError("network record: output scaling size");
  if ((input.std.array() <= 0.0).any() || (output.std.array() <= 0.0).any())
    throw ValidationError("network record: scaling std must be > 0");
}

Eigen::VectorXd NetworkRecord::standardize_window(
    const Eigen::Ref<const Eigen::VectorXd>& window) const {
  const auto c = static_cast<Eigen::Index>(channels.size());
  if (window.size() != c * (memory_depth + 1)) throw DimensionError("network record: window width");
  Eigen::VectorXd z(window.size());
  for (Eigen::Index i = 0; i < window.size(); ++i)
    z[i] = (window[i] - input.mean[i % c]) / input.std[i % c];
  return z;
}

Eigen::VectorXd NetworkRecord::evaluate(const Eigen::Ref<const Eigen::VectorXd>& window) const {
  const Eigen::VectorXd y = forward(net, standardize_window(window));
  return output.mean + output.std.cwiseProduct(y);
}

namespace {

constexpr const char* kMagic = "gyronn-network";
constexpr int kFormatVersion = 1;

void write_vector(std::ostream& out, const char* key, const Eigen::VectorXd& v) {
  out << key;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
  out << '\n';
}

std::vector<std::string> tokens_for(std::istream& in, const std::string& key) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head != key)
      throw ValidationError("network file: expected '" + key + "', found '" + head + "'");
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    return toks;
  }
  throw ValidationError("network file: unexpected end, expected '" + key + "'");
}

Eigen::VectorXd parse_vector(const std::vector<std::string>& toks, Eigen::Index expected,
                             const std::string& key) {
  if (static_cast<Eigen::Index>(toks.size()) != expected)
    throw ValidationError("network file: '" + key + "' has " + std::to_string(toks.size()) +
                          " values, expected " + std::to_string(expected));
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v[i] = parse_double(toks[static_cast<std::size_t>(i)]);
  return v;
}

int parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("network file: bad integer '" + s + "'");
  }
}

}  // namespace

// Layout (version 1):
//   gyronn-network 1
//   sizes <in> <h1> ... <out>
//   activations <f1> ... <fn>
//   memory_depth <m>
//   channels <name> ...
//   input_mean / input_std / output_mean / output_std <values>
//   then per layer: `w <row values>` once per row, followed by `b <values>`
void save_network(std::ostream& out, const NetworkRecord& rec) {
  rec.validate();
  const auto& layers = rec.net.layers();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "sizes " << rec.net.input_width();
  for (const auto& l : layers) out << ' ' << l.weights.rows();
  out << "\nactivations";
  for (const auto& l : layers) out << ' ' << to_string(l.activation);
  out << "\nmemory_depth " << rec.memory_depth << "\nchannels";
  for (int c : rec.channels) out << ' ' << channel_name(c);
  out << '\n';
  write_vector(out, "input_mean", rec.input.mean);
  write_vector(out, "input_std", rec.input.std);
  write_vector(out, "output_mean", rec.output.mean);
  write_vector(out, "output_std", rec.output.std);
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      write_vector(out, "w", l.weights.row(r).transpose());
    write_vector(out, "b", l.bias);
  }
}

NetworkRecord load_network(std::istream& in) {
  const auto magic = tokens_for(in, kMagic);
  if (magic.size() != 1 || parse_int(magic[0]) != kFormatVersion)
    throw ValidationError("network file: unsupported format version");
  std::vector<int> sizes;
  for (const auto& t : tokens_for(in, "sizes")) sizes.push_back(parse_int(t));
  const auto acts = tokens_for(in, "activations");
  if (sizes.size() < 2 || acts.size() + 1 != sizes.size())
    throw ValidationError("network file: sizes/activations mismatch");
  NetworkRecord rec;
  const auto depth = tokens_for(in, "memory_depth");
  if (depth.size() != 1) throw ValidationError("network file: bad memory_depth");
  rec.memory_depth = parse_int(depth[0]);
  rec.channels = parse_channels(tokens_for(in, "channels"));
  const auto nc = static_cast<Eigen::Index>(rec.channels.size());
  rec.input.mean = parse_vector(tokens_for(in, "input_mean"), nc, "input_mean");
  rec.input.std = parse_vector(tokens_for(in, "input_std"), nc, "input_std");
  rec.output.mean = parse_vector(tokens_for(in, "output_mean"), sizes.back(), "output_mean");
  rec.output.std = parse_vector(tokens_for(in, "output_std"), sizes.back(), "output_std");
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer;
    layer.activation = parse_activation(acts[l]);
    layer.weights.resize(sizes[l + 1], sizes[l]);
    for (int r = 0; r < sizes[l + 1]; ++r)
      layer.weights.row(r) = parse_vector(tokens_for(in, "w"), sizes[l], "w").transpose();
    layer.bias = parse_vector(tokens_for(in, "b"), sizes[l + 1], "b");
    layers.push_back(std::move(layer));
  }
  rec.net = Mlp(std::move(layers));
  rec.validate();
  return rec;
}

void save_network_file(const std::string& path, const NetworkRecord& rec) {
  auto out = open_output(path);
  save_network(out, rec);
}

NetworkRecord load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open network file '" + path + "'");
  return load_network(in);
}

}  // namespace gyronn
