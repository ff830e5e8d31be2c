#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "jamrl/neural.hpp"

using namespace jamrl;

namespace {

const std::vector<int> kQNetWidths{2, 200, 200, 4};

double mse(const MlpNetwork& net, const std::vector<std::vector<double>>& xs,
           const std::vector<std::vector<double>>& ys) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto out = net.forward(xs[i]);
    for (std::size_t k = 0; k < out.size(); ++k, ++n) s += (out[k] - ys[i][k]) * (out[k] - ys[i][k]);
  }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("network construction") {
  Rng rng(1);
  const auto net = MlpNetwork::create(kQNetWidths, InitRule::GlorotUniform, rng);
  CHECK(net.widths() == kQNetWidths);
  CHECK(net.parameter_count() == 2 * 200 + 200 + 200 * 200 + 200 + 200 * 4 + 4);
  CHECK(net.layers()[0].activation == Activation::Relu);
  CHECK(net.layers()[2].activation == Activation::Identity);
  const double limit = std::sqrt(6.0 / (200 + 200));
  for (double w : net.layers()[1].weights) CHECK(std::abs(w) <= limit);
  for (double b : net.layers()[1].biases) CHECK(b == 0.0);

  const std::vector<int> bad{2, 3, 5};
  const std::vector<Activation> three{Activation::Relu, Activation::Relu, Activation::Identity};
  CHECK_THROWS_AS(MlpNetwork::create(bad, three, InitRule::GlorotUniform, rng), DimensionError);
  const std::vector<Activation> relu_out{Activation::Relu, Activation::Relu};
  CHECK_THROWS_AS(MlpNetwork::create(bad, relu_out, InitRule::GlorotUniform, rng), DimensionError);
}

TEST_CASE("zero-initialized network is the zero function") {
  Rng rng(1);
  const std::vector<int> widths{2, 4};
  const auto net = MlpNetwork::create(widths, InitRule::Zero, rng);
  for (double a : {-1.0, 0.0, 0.7}) {
    const std::vector<double> x{a, 1.0 - a};
    for (double y : net.forward(x)) CHECK(y == 0.0);
  }
}

TEST_CASE("identity layer forwards its input") {
  Rng rng(1);
  const std::vector<int> widths{3, 3};
  auto net = MlpNetwork::create(widths, InitRule::Zero, rng);
  for (int i = 0; i < 3; ++i) net.layers()[0].w(i, i) = 1.0;
  const std::vector<double> x{0.25, -1.5, 3.0};
  CHECK(net.forward(x) == x);
  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(net.forward(wrong), DimensionError);
}

TEST_CASE("relu zeroes negative pre-activations") {
  Rng rng(1);
  const std::vector<int> widths{2, 3, 1};
  auto net = MlpNetwork::create(widths, InitRule::Zero, rng);
  for (double& b : net.layers()[0].biases) b = -1.0;
  const std::vector<double> x{0.1, 0.2};
  const auto trace = net.forward_trace(x);
  for (double v : trace.post[0]) CHECK(v == 0.0);
}

TEST_CASE("forward is deterministic and matches the stored fixture") {
  Rng rng(2024);
  const auto net = MlpNetwork::create(kQNetWidths, InitRule::GlorotUniform, rng);
  const std::vector<double> x{0.3, 0.7};
  const auto y = net.forward(x);
  CHECK(y == net.forward(x));
  const std::vector<double> golden{-0.014196443208339831, -0.0029419753171635757,
                                   0.056329410824043906, -0.04957877556169918};
  REQUIRE(y.size() == golden.size());
  for (std::size_t k = 0; k < y.size(); ++k) CHECK(y[k] == doctest::Approx(golden[k]).epsilon(1e-12));
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
  Rng rng(3);
  const auto net = MlpNetwork::create(kQNetWidths, InitRule::GlorotUniform, rng);
  const std::vector<double> x{0.5, 0.5};
  const std::vector<double> g(4, 0.0);
  const auto grads = net.backward(x, g);
  for (const auto& layer : grads.weights) {
    for (double v : layer) CHECK(v == 0.0);
  }
  for (const auto& layer : grads.biases) {
    for (double v : layer) CHECK(v == 0.0);
  }
}

TEST_CASE("linear layer weight gradient is the outer product") {
  Rng rng(4);
  const std::vector<int> widths{3, 2};
  const auto net = MlpNetwork::create(widths, InitRule::GlorotUniform, rng);
  const std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -0.7};
  const auto grads = net.backward(x, g);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(grads.weights[0][r * 3 + c] == doctest::Approx(g[r] * x[c]));
    CHECK(grads.biases[0][r] == doctest::Approx(g[r]));
  }
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t i = 0; i < 25; ++i) {
    const auto r = gradcheck::random_case(i);
    CAPTURE(i);
    CHECK(r.parameters > 0);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("accumulated gradients equal the sum of per-sample gradients") {
  Rng rng(8);
  const std::vector<int> widths{2, 5, 4};
  const auto net = MlpNetwork::create(widths, InitRule::GlorotUniform, rng);
  const std::vector<double> x1{0.1, 0.9}, x2{-0.4, 0.3}, g{1.0, 0.0, -0.5, 0.25};
  auto acc = net.zero_gradients();
  net.accumulate_gradients(net.forward_trace(x1), g, acc);
  net.accumulate_gradients(net.forward_trace(x2), g, acc);
  auto sum = net.backward(x1, g);
  sum.add(net.backward(x2, g));
  CHECK(acc.weights == sum.weights);
  CHECK(acc.biases == sum.biases);
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  Rng rng(5);
  auto net = MlpNetwork::create(kQNetWidths, InitRule::GlorotUniform, rng);
  const auto before = net;
  AdamOptimizer opt(net, {});
  opt.step(net, net.zero_gradients());
  CHECK(net == before);
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam step descends a scalar quadratic") {
  Rng rng(6);
  const std::vector<int> widths{1, 1};
  auto net = MlpNetwork::create(widths, InitRule::Zero, rng);
  net.layers()[0].weights[0] = 2.0;
  const std::vector<double> x{1.0};
  // loss = (w x + b)^2, dloss/dy = 2 y
  auto loss = [&] { return std::pow(net.forward(x)[0], 2); };
  const double before = loss();
  AdamOptimizer opt(net, {});
  const std::vector<double> g{2.0 * net.forward(x)[0]};
  opt.step(net, net.backward(x, g));
  CHECK(loss() < before);
}

TEST_CASE("adam regresses a small network onto a fixed random teacher") {
  Rng rng(7);
  const std::vector<int> widths{2, 32, 32, 4};
  auto net = MlpNetwork::create(widths, InitRule::GlorotUniform, rng);
  const auto teacher = MlpNetwork::create(widths, InitRule::GlorotUniform, rng);
  std::vector<std::vector<double>> xs(32), ys(32);
  for (std::size_t i = 0; i < 32; ++i) {
    xs[i] = {rng.uniform(), rng.uniform()};
    ys[i] = teacher.forward(xs[i]);
  }
  AdamOptimizer opt(net, {});
  const double initial = mse(net, xs, ys);
  for (int epoch = 0; epoch < 500; ++epoch) {
    auto grads = net.zero_gradients();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto trace = net.forward_trace(xs[i]);
      std::vector<double> g(4);
      for (std::size_t k = 0; k < 4; ++k) g[k] = 2.0 * (trace.output()[k] - ys[i][k]) / (4.0 * 32.0);
      net.accumulate_gradients(trace, g, grads);
    }
    opt.step(net, grads);
    REQUIRE(net.all_finite());
  }
  const double final = mse(net, xs, ys);
  MESSAGE("mse " << initial << " -> " << final);
  CHECK(final < 1e-3);
}

TEST_CASE("weight snapshots round-trip bit-exactly") {
  Rng rng(9);
  const auto net = MlpNetwork::create(kQNetWidths, InitRule::GlorotUniform, rng);
  std::stringstream buf;
  net.save(buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "JAMRLMLP");
  const auto back = MlpNetwork::load(buf);
  CHECK(back == net);
  std::stringstream again;
  back.save(again);
  CHECK(again.str() == bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS(MlpNetwork::load(truncated));
  std::stringstream garbage("NOTANET!");
  CHECK_THROWS(MlpNetwork::load(garbage));
}
