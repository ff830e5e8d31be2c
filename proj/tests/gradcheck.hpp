#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "jamrl/neural.hpp"

namespace gradcheck {

struct Report {
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

inline double objective(const jamrl::MlpNetwork& net, const std::vector<double>& x,
                        const std::vector<double>& g) {
  const auto y = net.forward(x);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * g[i];
  return s;
}

inline double rel_error(double a, double b) {
  const double denom = std::abs(a) + std::abs(b);
  return denom < 1e-10 ? 0.0 : std::abs(a - b) / denom;
}

// Central differences of dot(forward(x), g) against backward().
inline Report compare(jamrl::MlpNetwork net, const std::vector<double>& x,
                      const std::vector<double>& g, double h = 1e-5) {
  const auto grads = net.backward(x, g);
  Report r;
  auto probe = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = objective(net, x, g);
    p = saved - h;
    const double down = objective(net, x, g);
    p = saved;
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, (up - down) / (2.0 * h)));
    ++r.parameters;
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (std::size_t k = 0; k < layer.weights.size(); ++k) probe(layer.weights[k], grads.weights[l][k]);
    for (std::size_t k = 0; k < layer.biases.size(); ++k) probe(layer.biases[k], grads.biases[l][k]);
  }
  return r;
}

// Case `i` of the seeded family: 1 to 3 hidden layers of width 2..9.
inline Report random_case(std::uint64_t i) {
  jamrl::Rng rng(jamrl::derive_seed(0x6772616400ULL, i));
  std::vector<int> widths{2 + static_cast<int>(rng.below(3))};
  const std::size_t hidden = 1 + rng.below(3);
  for (std::size_t k = 0; k < hidden; ++k) widths.push_back(2 + static_cast<int>(rng.below(8)));
  widths.push_back(4);
  auto net = jamrl::MlpNetwork::create(widths, jamrl::InitRule::GlorotUniform, rng);
  for (auto& layer : net.layers()) {
    for (double& b : layer.biases) b = rng.uniform() * 0.2 - 0.1;
  }
  std::vector<double> x(static_cast<std::size_t>(widths.front()));
  for (double& v : x) v = rng.uniform() * 2.0 - 1.0;
  std::vector<double> g(4);
  for (double& v : g) v = rng.uniform() * 2.0 - 1.0;
  return compare(std::move(net), x, g);
}

}  // namespace gradcheck
