#include "jamrl/neural.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

namespace jamrl {

namespace {

constexpr std::array<char, 8> kMagic{'J', 'A', 'M', 'R', 'L', 'M', 'L', 'P'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kMaxWidth = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::ostream& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

std::uint64_t get_bytes(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("weight snapshot: truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_bytes(in, 4)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

void check_input(const MlpNetwork& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_width()) {
    throw DimensionError("input has width " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(net.input_width()));
  }
}

}  // namespace

void ParameterGradients::add(const ParameterGradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
  }
}

void ParameterGradients::scale(double factor) {
  for (auto& w : weights) {
    for (double& x : w) x *= factor;
  }
  for (auto& b : biases) {
    for (double& x : b) x *= factor;
  }
}

MlpNetwork MlpNetwork::create(std::span<const int> widths, std::span<const Activation> activations,
                              InitRule init, Rng& rng) {
  if (widths.size() < 2) throw DimensionError("network needs at least an input and an output width");
  if (activations.size() + 1 != widths.size()) {
    throw DimensionError("expected " + std::to_string(widths.size() - 1) + " activations, got " +
                         std::to_string(activations.size()));
  }
  if (activations.back() != Activation::Identity) {
    throw DimensionError("output layer must use the identity activation");
  }
  for (int w : widths) {
    if (w < 1) throw DimensionError("layer widths must be positive");
  }

  MlpNetwork net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    layer.activation = activations[l];
    layer.weights.assign(static_cast<std::size_t>(layer.in) * layer.out, 0.0);
    layer.biases.assign(static_cast<std::size_t>(layer.out), 0.0);
    if (init == InitRule::GlorotUniform) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      for (double& w : layer.weights) w = limit * (2.0 * rng.uniform() - 1.0);
    }
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

MlpNetwork MlpNetwork::create(std::span<const int> widths, InitRule init, Rng& rng) {
  std::vector<Activation> acts(widths.size() > 0 ? widths.size() - 1 : 0, Activation::Relu);
  if (!acts.empty()) acts.back() = Activation::Identity;
  return create(widths, acts, init, rng);
}

ForwardTrace MlpNetwork::forward_trace(std::span<const double> x) const {
  check_input(*this, x);
  ForwardTrace trace;
  trace.input.assign(x.begin(), x.end());
  const std::vector<double>* in = &trace.input;
  for (const DenseLayer& layer : layers_) {
    std::vector<double> z(layer.biases);
    for (int r = 0; r < layer.out; ++r) {
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      double acc = 0.0;
      for (int c = 0; c < layer.in; ++c) acc += row[c] * (*in)[c];
      z[r] += acc;
    }
    std::vector<double> a = z;
    if (layer.activation == Activation::Relu) {
      for (double& v : a) v = std::max(v, 0.0);
    }
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(a));
    in = &trace.post.back();
  }
  return trace;
}

std::vector<double> MlpNetwork::forward(std::span<const double> x) const {
  check_input(*this, x);
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (const DenseLayer& layer : layers_) {
    next.assign(layer.biases.begin(), layer.biases.end());
    for (int r = 0; r < layer.out; ++r) {
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      double acc = 0.0;
      for (int c = 0; c < layer.in; ++c) acc += row[c] * cur[c];
      next[r] += acc;
    }
    if (layer.activation == Activation::Relu) {
      for (double& v : next) v = std::max(v, 0.0);
    }
    std::swap(cur, next);
  }
  return cur;
}

ParameterGradients MlpNetwork::zero_gradients() const {
  ParameterGradients g;
  for (const DenseLayer& layer : layers_) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.biases.emplace_back(layer.biases.size(), 0.0);
  }
  return g;
}

ParameterGradients MlpNetwork::backward(std::span<const double> x,
                                        std::span<const double> grad_output) const {
  return backward(forward_trace(x), grad_output);
}

ParameterGradients MlpNetwork::backward(const ForwardTrace& trace,
                                        std::span<const double> grad_output) const {
  ParameterGradients g = zero_gradients();
  accumulate_gradients(trace, grad_output, g);
  return g;
}

void MlpNetwork::accumulate_gradients(const ForwardTrace& trace, std::span<const double> grad_output,
                                      ParameterGradients& into) const {
  if (static_cast<int>(grad_output.size()) != output_width()) {
    throw DimensionError("grad_output has width " + std::to_string(grad_output.size()) +
                         ", network outputs " + std::to_string(output_width()));
  }
  if (trace.pre.size() != layers_.size() || into.weights.size() != layers_.size()) {
    throw DimensionError("trace or gradient buffer does not match the network");
  }
  std::vector<double> delta(grad_output.begin(), grad_output.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    if (layer.activation == Activation::Relu) {
      for (int r = 0; r < layer.out; ++r) {
        if (trace.pre[l][r] <= 0.0) delta[r] = 0.0;
      }
    }
    const std::vector<double>& in = l == 0 ? trace.input : trace.post[l - 1];
    auto& gw = into.weights[l];
    for (int r = 0; r < layer.out; ++r) {
      into.biases[l][r] += delta[r];
      if (delta[r] == 0.0) continue;
      double* row = gw.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) row[c] += delta[r] * in[c];
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(layer.in), 0.0);
    for (int r = 0; r < layer.out; ++r) {
      if (delta[r] == 0.0) continue;
      const double* row = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) prev[c] += row[c] * delta[r];
    }
    delta = std::move(prev);
  }
}

std::vector<int> MlpNetwork::widths() const {
  std::vector<int> w;
  if (layers_.empty()) return w;
  w.push_back(layers_.front().in);
  for (const DenseLayer& layer : layers_) w.push_back(layer.out);
  return w;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weights.size() + layer.biases.size();
  return n;
}

bool MlpNetwork::all_finite() const {
  for (const DenseLayer& layer : layers_) {
    for (double w : layer.weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer.biases) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

// Layout (all integers and reals little-endian):
//   8 bytes  magic "JAMRLMLP"
//   u32      format version (1)
//   u32      layer count L
//   u32[L+1] widths, input first
//   u8[L]    activations (0 = relu, 1 = identity)
//   per layer: f64[out*in] weights row-major, then f64[out] biases
void MlpNetwork::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(layers_.size()));
  for (int w : widths()) put_u32(out, static_cast<std::uint32_t>(w));
  for (const DenseLayer& layer : layers_) out.put(static_cast<char>(layer.activation));
  for (const DenseLayer& layer : layers_) {
    for (double w : layer.weights) put_f64(out, w);
    for (double b : layer.biases) put_f64(out, b);
  }
  if (!out) throw std::runtime_error("weight snapshot: write failed");
}

MlpNetwork MlpNetwork::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("weight snapshot: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion) {
    throw std::runtime_error("weight snapshot: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(in);
  if (count == 0 || count > 64) throw std::runtime_error("weight snapshot: bad layer count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i <= count; ++i) {
    const std::uint32_t w = get_u32(in);
    if (w == 0 || w > kMaxWidth) throw std::runtime_error("weight snapshot: bad width");
    widths.push_back(static_cast<int>(w));
  }
  std::vector<Activation> acts;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto a = get_bytes(in, 1);
    if (a > 1) throw std::runtime_error("weight snapshot: bad activation code");
    acts.push_back(static_cast<Activation>(a));
  }
  Rng unused(0);
  MlpNetwork net = create(widths, acts, InitRule::Zero, unused);
  for (DenseLayer& layer : net.layers_) {
    for (double& w : layer.weights) w = get_f64(in);
    for (double& b : layer.biases) b = get_f64(in);
  }
  return net;
}

AdamOptimizer::AdamOptimizer(const MlpNetwork& net, AdamConfig config)
    : config_(config), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void AdamOptimizer::step(MlpNetwork& net, const ParameterGradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  auto update = [&](std::vector<double>& params, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, grads.weights[l], m_.weights[l], v_.weights[l]);
    update(layers[l].biases, grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

}  // namespace jamrl
