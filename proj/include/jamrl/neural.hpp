#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "jamrl/random.hpp"

namespace jamrl {

enum class Activation : std::uint8_t { Relu = 0, Identity = 1 };

enum class InitRule {
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)).
  GlorotUniform,
  Zero,
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// out x in weights stored row-major, one bias per output.
struct DenseLayer {
  int in = 0;
  int out = 0;
  Activation activation = Activation::Identity;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(int row, int col) { return weights[static_cast<std::size_t>(row) * in + col]; }
  double w(int row, int col) const { return weights[static_cast<std::size_t>(row) * in + col]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Gradients laid out exactly like the network's parameters.
struct ParameterGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  void add(const ParameterGradients& other);
  void scale(double factor);
};

/// Per-layer pre-activations and outputs kept by forward_trace for backward.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;

  const std::vector<double>& output() const { return post.back(); }
};

/// Fully connected feedforward network of 64-bit reals.
class MlpNetwork {
 public:
  MlpNetwork() = default;

  /// widths has one more entry than activations; the last activation must be
  /// Identity. Biases start at zero.
  static MlpNetwork create(std::span<const int> widths, std::span<const Activation> activations,
                           InitRule init, Rng& rng);

  /// Hidden layers use Relu, the output layer Identity.
  static MlpNetwork create(std::span<const int> widths, InitRule init, Rng& rng);

  std::vector<double> forward(std::span<const double> x) const;
  ForwardTrace forward_trace(std::span<const double> x) const;

  /// Gradient of dot(output, grad_output) with respect to every parameter.
  ParameterGradients backward(std::span<const double> x, std::span<const double> grad_output) const;
  ParameterGradients backward(const ForwardTrace& trace, std::span<const double> grad_output) const;

  /// Adds the gradients of one traced sample into `into`.
  void accumulate_gradients(const ForwardTrace& trace, std::span<const double> grad_output,
                            ParameterGradients& into) const;

  ParameterGradients zero_gradients() const;

  int input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_width() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::vector<int> widths() const;
  std::size_t parameter_count() const;
  bool all_finite() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Binary snapshot, see snapshot format in README.
  void save(std::ostream& out) const;
  static MlpNetwork load(std::istream& in);

  friend bool operator==(const MlpNetwork&, const MlpNetwork&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive moment estimation with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const MlpNetwork& net, AdamConfig config);

  void step(MlpNetwork& net, const ParameterGradients& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  ParameterGradients m_;
  ParameterGradients v_;
};

}  // namespace jamrl
