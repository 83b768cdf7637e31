#include "ces/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ces {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::linear: return x;
  }
  return x;
}

// Derivative expressed through the post-activation value y.
double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
  }
}

}  // namespace

Network::Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("Network: no layers");
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = layers_[l];
    if (spec.input_dim == 0 || spec.output_dim == 0) {
      throw std::invalid_argument("Network: layer dimensions must be positive");
    }
    if (l > 0 && layers_[l - 1].output_dim != spec.input_dim) {
      throw std::invalid_argument("Network: layer " + std::to_string(l) +
                                  " input does not match previous output");
    }
    offsets_.push_back(total);
    total += spec.parameter_count();
  }
  weights_.assign(total, 0.0);
}

Network::Network(std::vector<LayerSpec> layers, std::vector<double> weights)
    : Network(std::move(layers)) {
  set_weights(weights);
}

Network Network::mlp(std::size_t input_dim, std::span<const std::size_t> hidden,
                     std::size_t output_dim, Activation hidden_activation,
                     Activation output_activation) {
  std::vector<LayerSpec> layers;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    layers.push_back({in, h, hidden_activation});
    in = h;
  }
  layers.push_back({in, output_dim, output_activation});
  return Network(std::move(layers));
}

void Network::set_weights(std::span<const double> weights) {
  check_dim(weights.size(), weights_.size(), "Network::set_weights");
  for (double w : weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("Network::set_weights: non-finite weight");
  }
  weights_.assign(weights.begin(), weights.end());
}

void Network::init_uniform(Rng& rng) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layers_[l].input_dim));
    const std::size_t begin = offsets_[l];
    const std::size_t end = begin + layers_[l].parameter_count();
    for (std::size_t i = begin; i < end; ++i) weights_[i] = rng.uniform(-bound, bound);
  }
}

ForwardTrace Network::forward_trace(std::span<const double> input) const {
  check_dim(input.size(), input_dim(), "Network::forward");
  ForwardTrace trace;
  trace.values.reserve(layers_.size() + 1);
  trace.values.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = layers_[l];
    const double* w = weights_.data() + offsets_[l];
    const double* b = w + spec.input_dim * spec.output_dim;
    const std::vector<double>& x = trace.values.back();
    std::vector<double> y(spec.output_dim);
    for (std::size_t o = 0; o < spec.output_dim; ++o) {
      const double* row = w + o * spec.input_dim;
      double acc = b[o];
      for (std::size_t i = 0; i < spec.input_dim; ++i) acc += row[i] * x[i];
      y[o] = activate(spec.activation, acc);
    }
    trace.values.push_back(std::move(y));
  }
  return trace;
}

std::vector<double> Network::forward(std::span<const double> input) const {
  ForwardTrace trace = forward_trace(input);
  return std::move(trace.values.back());
}

std::vector<double> Network::backward_accumulate(const ForwardTrace& trace,
                                                 std::span<const double> upstream,
                                                 std::span<double> weight_grad) const {
  check_dim(upstream.size(), output_dim(), "Network::backward upstream");
  check_dim(weight_grad.size(), weights_.size(), "Network::backward weight_grad");
  check_dim(trace.values.size(), layers_.size() + 1, "Network::backward trace");

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerSpec& spec = layers_[l];
    const std::vector<double>& x = trace.values[l];
    const std::vector<double>& y = trace.values[l + 1];
    const double* w = weights_.data() + offsets_[l];
    double* gw = weight_grad.data() + offsets_[l];
    double* gb = gw + spec.input_dim * spec.output_dim;

    for (std::size_t o = 0; o < spec.output_dim; ++o) delta[o] *= activation_slope(spec.activation, y[o]);

    std::vector<double> delta_in(spec.input_dim, 0.0);
    for (std::size_t o = 0; o < spec.output_dim; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * spec.input_dim;
      double* grow = gw + o * spec.input_dim;
      for (std::size_t i = 0; i < spec.input_dim; ++i) {
        grow[i] += d * x[i];
        delta_in[i] += d * row[i];
      }
      gb[o] += d;
    }
    delta = std::move(delta_in);
  }
  return delta;
}

Gradients Network::backward(std::span<const double> input, std::span<const double> upstream) const {
  check_dim(input.size(), input_dim(), "Network::backward input");
  check_dim(upstream.size(), output_dim(), "Network::backward upstream");
  Gradients g;
  g.weight_grad.assign(weights_.size(), 0.0);
  g.input_grad = backward_accumulate(forward_trace(input), upstream, g.weight_grad);
  return g;
}

OptimizerState OptimizerState::sgd(double learning_rate) {
  OptimizerState s;
  s.kind = OptimizerKind::sgd;
  s.learning_rate = learning_rate;
  return s;
}

OptimizerState OptimizerState::adam(double learning_rate, std::size_t parameter_count) {
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = learning_rate;
  s.first_moment.assign(parameter_count, 0.0);
  s.second_moment.assign(parameter_count, 0.0);
  return s;
}

void optimizer_step(OptimizerState& state, std::span<double> params, std::span<const double> grad) {
  check_dim(grad.size(), params.size(), "optimizer_step");
  for (double g : grad) {
    if (!std::isfinite(g)) throw std::domain_error("optimizer_step: non-finite gradient entry");
  }
  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= state.learning_rate * grad[i];
    ++state.step_count;
    return;
  }
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  check_dim(state.first_moment.size(), params.size(), "optimizer_step first moment");
  check_dim(state.second_moment.size(), params.size(), "optimizer_step second moment");

  const std::uint64_t t = state.step_count + 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  state.step_count = t;
}

void optimizer_step(OptimizerState& state, Network& net, std::span<const double> grad) {
  optimizer_step(state, net.weights(), grad);
}

namespace {

constexpr char kMagic[8] = {'C', 'E', 'S', 'F', '6', '4', 'v', '1'};

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("truncated array file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void save_array(const std::filesystem::path& path, std::span<const double> values,
                const std::string& header_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64_le(out, header_json.size());
  out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
  for (double v : values) write_u64_le(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> load_array(const std::filesystem::path& path, std::string* header_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path.string() + ": not a float64 array file");
  }
  const std::uint64_t header_len = read_u64_le(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("truncated header in " + path.string());
  const auto meta = nlohmann::json::parse(header);
  const std::uint64_t count = meta.at("count").get<std::uint64_t>();
  std::vector<double> values(count);
  for (auto& v : values) v = std::bit_cast<double>(read_u64_le(in));
  if (header_json) *header_json = std::move(header);
  return values;
}

void save_network(const std::filesystem::path& path, const Network& net, std::uint64_t seed) {
  nlohmann::json header;
  header["kind"] = "network";
  header["seed"] = seed;
  header["count"] = net.parameter_count();
  auto& layers = header["layers"] = nlohmann::json::array();
  for (const LayerSpec& l : net.layers()) {
    layers.push_back({{"in", l.input_dim}, {"out", l.output_dim},
                      {"activation", std::string(to_string(l.activation))}});
  }
  save_array(path, net.weights(), header.dump());
}

Network load_network(const std::filesystem::path& path, std::uint64_t* seed) {
  std::string header_text;
  std::vector<double> weights = load_array(path, &header_text);
  const auto header = nlohmann::json::parse(header_text);
  std::vector<LayerSpec> layers;
  for (const auto& l : header.at("layers")) {
    layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                      parse_activation(l.at("activation").get<std::string>())});
  }
  if (seed) *seed = header.value("seed", std::uint64_t{0});
  return Network(std::move(layers), std::move(weights));
}

}  // namespace ces
