#pragma once

// Dense feed-forward networks with exact backpropagation and first-order
// optimizers. Weights live in one flat vector, laid out layer by layer as a
// row-major (output x input) matrix followed by the bias vector.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ces/rng.hpp"

namespace ces {

enum class Activation { tanh, relu, linear };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::linear;

  std::size_t parameter_count() const { return input_dim * output_dim + output_dim; }
  bool operator==(const LayerSpec&) const = default;
};

// Activations of every layer for one input, kept for the backward pass.
struct ForwardTrace {
  // values[0] is the input, values[l + 1] the post-activation of layer l.
  std::vector<std::vector<double>> values;

  std::span<const double> output() const { return values.back(); }
};

struct Gradients {
  std::vector<double> weight_grad;
  std::vector<double> input_grad;
};

class Network {
 public:
  Network() = default;
  // Zero-initialised network; throws if the layer chain is inconsistent.
  explicit Network(std::vector<LayerSpec> layers);
  Network(std::vector<LayerSpec> layers, std::vector<double> weights);

  // Multilayer perceptron with identical hidden activations.
  static Network mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                     std::size_t output_dim, Activation hidden_activation,
                     Activation output_activation);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().input_dim; }
  std::size_t output_dim() const { return layers_.back().output_dim; }
  std::size_t parameter_count() const { return weights_.size(); }

  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  void set_weights(std::span<const double> weights);

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  void init_uniform(Rng& rng);

  std::vector<double> forward(std::span<const double> input) const;
  ForwardTrace forward_trace(std::span<const double> input) const;

  // Gradients of (upstream . output) with respect to weights and input.
  Gradients backward(std::span<const double> input, std::span<const double> upstream) const;

  // Same as backward() but reuses a trace and accumulates the weight gradient
  // into weight_grad (which must have parameter_count() entries). Returns the
  // input gradient.
  std::vector<double> backward_accumulate(const ForwardTrace& trace,
                                          std::span<const double> upstream,
                                          std::span<double> weight_grad) const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> weights_;
};

enum class OptimizerKind { sgd, adam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  static OptimizerState sgd(double learning_rate);
  static OptimizerState adam(double learning_rate, std::size_t parameter_count);
};

// Descent step w <- w - update(grad). Throws std::domain_error and leaves
// both arguments untouched if grad has a non-finite entry.
void optimizer_step(OptimizerState& state, Network& net, std::span<const double> grad);

// Same update applied to a bare parameter span.
void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> grad);

// Weight files: 8-byte magic, u64 little-endian header length, JSON header
// (layer specs, seed, count), then `count` little-endian float64 values.
void save_network(const std::filesystem::path& path, const Network& net, std::uint64_t seed = 0);
Network load_network(const std::filesystem::path& path, std::uint64_t* seed = nullptr);

// Same container for an arbitrary flat array with a free-form JSON header.
void save_array(const std::filesystem::path& path, std::span<const double> values,
                const std::string& header_json);
std::vector<double> load_array(const std::filesystem::path& path, std::string* header_json = nullptr);

}  // namespace ces
