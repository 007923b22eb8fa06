#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gyronn/errors.hpp"
#include "gyronn/nn.hpp"
#include "support.hpp"

using namespace gyronn;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Per-neuron scalar recomputation, no Eigen products.
Eigen::VectorXd naive_forward(const Mlp& net, const Eigen::VectorXd& u) {
  std::vector<double> a(u.data(), u.data() + u.size());
  for (const Layer& l : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(l.weights.rows()));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      double z = l.bias[i];
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) z += l.weights(i, j) * a[static_cast<std::size_t>(j)];
      double y = z;
      if (l.activation == Activation::tansig) y = std::tanh(z);
      if (l.activation == Activation::logsig) y = 1.0 / (1.0 + std::exp(-z));
      next[static_cast<std::size_t>(i)] = y;
    }
    a = std::move(next);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

Eigen::MatrixXd fd_jacobian(const Mlp& net, const Eigen::VectorXd& u, double h = 1e-6) {
  const Eigen::VectorXd theta = net.flatten();
  Eigen::MatrixXd J(net.output_width(), theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    J.col(k) = (forward(net.with_parameters(tp), u) - forward(net.with_parameters(tm), u)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("tapped-delay buffer ordering, zero prefill and depth 0") {
  TappedDelayBuffer b(2, 1);
  CHECK(b.window_width() == 3);
  CHECK(b.push(vec({5})) == vec({5, 0, 0}));
  b.reset();
  b.push(vec({1}));
  b.push(vec({2}));
  CHECK(b.push(vec({3})) == vec({3, 2, 1}));
  CHECK(b.push(vec({4})) == vec({4, 3, 2}));
  CHECK(b.fill_count() == 3);

  TappedDelayBuffer m(0, 2);
  CHECK(m.push(vec({7, 8})) == vec({7, 8}));
  CHECK(m.push(vec({1, 2})) == vec({1, 2}));

  TappedDelayBuffer two(1, 2);
  two.push(vec({1, 2}));
  CHECK(two.push(vec({3, 4})) == vec({3, 4, 1, 2}));
  CHECK_THROWS_AS(two.push(vec({1})), DimensionError);
}

TEST_CASE("identity network and logsig at zero") {
  Layer id{Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), Activation::purelin};
  const Mlp net({id});
  const Eigen::VectorXd u = vec({1.5, -2, 0.25, 9});
  CHECK(forward(net, u) == u);

  Layer z{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::logsig};
  const Eigen::VectorXd y = forward(Mlp({z}), vec({4, -7}));
  CHECK(y == Eigen::VectorXd::Constant(3, 0.5));
}

TEST_CASE("forward matches a per-neuron oracle") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::vector<int> sizes = {5, 4, 3};
    const std::vector<Activation> acts = {seed % 2 ? Activation::logsig : Activation::tansig,
                                          Activation::purelin};
    const Mlp net = Mlp::random(sizes, acts, seed);
    const Eigen::VectorXd u = testing::random_vector(seed + 7, 5, 2.0);
    CHECK((forward(net, u) - naive_forward(net, u)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward dimension checks") {
  const std::vector<int> sizes = {3, 2};
  const std::vector<Activation> acts = {Activation::purelin};
  const Mlp net = Mlp::random(sizes, acts, 1);
  CHECK_THROWS_AS(forward(net, vec({1, 2})), DimensionError);
  Layer a{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), Activation::tansig};
  Layer b{Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1), Activation::purelin};
  CHECK_THROWS_AS(Mlp({a, b}), DimensionError);
  Layer bad{Eigen::MatrixXd::Constant(1, 1, std::nan("")), Eigen::VectorXd::Zero(1),
            Activation::purelin};
  CHECK_THROWS_AS(Mlp({bad}), ValidationError);
}

TEST_CASE("forward_with_cache agrees with forward and stores pre-activations") {
  const std::vector<int> sizes = {5, 3, 2};
  const std::vector<Activation> acts = {Activation::tansig, Activation::purelin};
  const Mlp net = Mlp::random(sizes, acts, 11);
  const Eigen::VectorXd u = testing::random_vector(3, 5);
  ForwardCache cache;
  const Eigen::VectorXd y = forward_with_cache(net, u, cache);
  CHECK(y == forward(net, u));
  const Layer& l0 = net.layers()[0];
  CHECK(cache.pre[0] == l0.weights * u + l0.bias);
  CHECK(cache.output() == y);
  CHECK(cache.post[0] == u);
}

TEST_CASE("activation ranges and slopes") {
  for (int i = -50; i <= 50; ++i) {
    const double z = 0.37 * i;
    const double t = activate(Activation::tansig, z);
    const double s = activate(Activation::logsig, z);
    CHECK(t >= -1.0);
    CHECK(t <= 1.0);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    if (std::abs(z) < 15) {
      CHECK(std::abs(t) < 1.0);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }
    for (Activation a : {Activation::tansig, Activation::logsig, Activation::purelin}) {
      if (std::abs(z) > 8) continue;
      const double h = 1e-5;
      const double fd = (activate(a, z + h) - activate(a, z - h)) / (2 * h);
      CHECK(std::abs(activation_slope(a, activate(a, z)) - fd) < 1e-7);
    }
  }
  CHECK(parse_activation("tansig") == Activation::tansig);
  CHECK(to_string(Activation::logsig) == "logsig");
  CHECK_THROWS_AS(parse_activation("relu"), ValidationError);
}

TEST_CASE("output Jacobian matches central differences on a 2-3-2 net") {
  const std::vector<int> sizes = {2, 3, 2};
  const std::vector<Activation> acts = {Activation::tansig, Activation::purelin};
  const Mlp net = Mlp::random(sizes, acts, 5);
  const Eigen::VectorXd u = vec({0.3, -0.8});
  const Eigen::MatrixXd J = output_jacobian_wrt_weights(net, u);
  CHECK(J.rows() == 2);
  CHECK(J.cols() == net.parameter_count());
  CHECK((J - fd_jacobian(net, u)).norm() <= 1e-5 * J.norm());
}

TEST_CASE("Jacobian property: 1-3 layers, all activations, 120 seeded nets") {
  int checked = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const int layers = 1 + static_cast<int>(seed % 3);
    const Mlp net = testing::random_net(seed, layers);
    const Eigen::VectorXd u = testing::random_vector(seed + 999, net.input_width(), 1.5);
    const Eigen::MatrixXd J = output_jacobian_wrt_weights(net, u);
    const Eigen::MatrixXd F = fd_jacobian(net, u);
    const double rel = (J - F).norm() / std::max(J.norm(), 1e-12);
    worst = std::max(worst, rel);
    ++checked;
  }
  CHECK(checked == 120);
  CHECK(worst < 1e-5);
}

TEST_CASE("Jacobian special cases of a purelin single layer") {
  Layer l{testing::random_matrix(2, 3, 4), testing::random_vector(9, 3), Activation::purelin};
  const Mlp net({l});
  const Eigen::MatrixXd J = output_jacobian_wrt_weights(net, vec({1, 2, 3, 4}));
  // Bias block follows the 3x4 weights.
  CHECK(J.rightCols(3) == Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd J0 = output_jacobian_wrt_weights(net, Eigen::VectorXd::Zero(4));
  CHECK(J0.leftCols(12) == Eigen::MatrixXd::Zero(3, 12));
  // Row-major weights: d y_1 / d W(1, 2) sits at column 1 * 4 + 2.
  CHECK(J(1, 6) == 3.0);
  CHECK(J(0, 6) == 0.0);
}

TEST_CASE("flatten and with_parameters round-trip exactly") {
  const Mlp net = testing::random_net(77, 3);
  const Eigen::VectorXd theta = net.flatten();
  const Mlp again = net.with_parameters(theta);
  CHECK(again.flatten() == theta);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK(again.layers()[l].weights == net.layers()[l].weights);
    CHECK(again.layers()[l].bias == net.layers()[l].bias);
  }
  CHECK_THROWS_AS(net.with_parameters(Eigen::VectorXd::Zero(theta.size() + 1)), DimensionError);
  const std::vector<int> sizes = {3, 2};
  const std::vector<Activation> acts = {Activation::tansig};
  const Mlp small = Mlp::random(sizes, acts, 5);
  const Eigen::VectorXd t = small.flatten();
  CHECK(small.layers()[0].weights(0, 1) == t[1]);
  CHECK(small.layers()[0].weights(1, 0) == t[3]);
  CHECK(small.layers()[0].bias[1] == t[7]);
}

TEST_CASE("random init is seeded and scaled by fan-in") {
  const std::vector<int> sizes = {16, 4, 6};
  const std::vector<Activation> acts = {Activation::tansig, Activation::purelin};
  const Mlp a = Mlp::random(sizes, acts, 3);
  const Mlp b = Mlp::random(sizes, acts, 3);
  const Mlp c = Mlp::random(sizes, acts, 4);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  CHECK(a.layers()[0].weights.cwiseAbs().maxCoeff() <= 0.5 / 4.0);
  CHECK(a.layers()[1].weights.cwiseAbs().maxCoeff() <= 0.5 / 2.0);
}

TEST_CASE("network records serialize exactly") {
  NetworkRecord rec;
  rec.net = testing::random_net(21, 2);
  const auto in = rec.net.input_width();
  rec.channels = {0};
  rec.memory_depth = static_cast<int>(in) - 1;
  rec.input = Standardizer{Eigen::VectorXd::Constant(1, 0.1 / 3.0), Eigen::VectorXd::Constant(1, 1.0 / 7.0)};
  rec.output = Standardizer{testing::random_vector(1, rec.net.output_width(), 1e-3),
                            testing::random_vector(2, rec.net.output_width()).cwiseAbs().array() + 1e-4};
  std::stringstream ss;
  save_network(ss, rec);
  const NetworkRecord back = load_network(ss);
  CHECK(back.net.flatten() == rec.net.flatten());
  CHECK(back.input.mean == rec.input.mean);
  CHECK(back.input.std == rec.input.std);
  CHECK(back.output.mean == rec.output.mean);
  CHECK(back.output.std == rec.output.std);
  CHECK(back.channels == rec.channels);
  CHECK(back.memory_depth == rec.memory_depth);
  const Eigen::VectorXd w = testing::random_vector(8, in);
  CHECK(back.evaluate(w) == rec.evaluate(w));

  std::stringstream bad("gyronn-network 99\n");
  CHECK_THROWS_AS(load_network(bad), ValidationError);
}

TEST_CASE("NetworkRecord applies per-channel input scaling and output scaling") {
  NetworkRecord rec;
  Layer id{Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), Activation::purelin};
  rec.net = Mlp({id});
  rec.channels = {0, 3};
  rec.memory_depth = 1;
  rec.input = Standardizer{vec({1, 10}), vec({2, 4})};
  rec.output = Standardizer{vec({0, 0, 0, 5}), vec({1, 1, 1, 2})};
  const Eigen::VectorXd z = rec.standardize_window(vec({3, 18, 5, 2}));
  CHECK(z == vec({1, 2, 2, -2}));
  CHECK(rec.evaluate(vec({3, 18, 5, 2})) == vec({1, 2, 2, 1}));
  rec.memory_depth = 2;
  CHECK_THROWS_AS(rec.validate(), ValidationError);
}
