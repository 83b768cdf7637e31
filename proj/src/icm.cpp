#include "ces/icm.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

namespace ces {

namespace {

void check_transition(const IcmParams& icm, const Transition& t) {
  if (t.state.size() != icm.state_dim() || t.next_state.size() != icm.state_dim() ||
      t.action.size() != icm.action_dim()) {
    throw std::invalid_argument("ICM: transition dimensions do not match the module");
  }
}

std::vector<double> normalized_input(const IcmParams& icm, std::span<const double> state) {
  if (state.size() != icm.state_dim()) throw std::invalid_argument("ICM: state dimension mismatch");
  std::vector<double> x(state.begin(), state.end());
  if (!icm.input_scale.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - icm.input_offset[i]) * icm.input_scale[i];
  }
  return x;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::size_t IcmParams::parameter_count() const {
  return encoder.parameter_count() + forward_model.parameter_count() + inverse_model.parameter_count();
}

std::vector<double> IcmParams::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const Network* n : {&encoder, &forward_model, &inverse_model}) {
    p.insert(p.end(), n->weights().begin(), n->weights().end());
  }
  return p;
}

void IcmParams::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw std::invalid_argument("IcmParams: parameter count mismatch");
  std::size_t off = 0;
  for (Network* n : {&encoder, &forward_model, &inverse_model}) {
    n->set_weights(params.subspan(off, n->parameter_count()));
    off += n->parameter_count();
  }
}

IcmParams make_icm(const IcmConfig& config, Rng& rng) {
  if (config.beta < 0.0 || config.beta > 1.0) throw std::invalid_argument("ICM: beta must be in [0, 1]");
  if (!(config.eta > 0.0)) throw std::invalid_argument("ICM: eta must be positive");
  const std::size_t hidden[] = {config.hidden, config.hidden};
  IcmParams icm;
  icm.encoder = Network::mlp(config.state_dim, hidden, config.feature_dim, Activation::tanh, Activation::linear);
  icm.forward_model = Network::mlp(config.feature_dim + config.action_dim, hidden, config.feature_dim,
                                   Activation::tanh, Activation::linear);
  icm.inverse_model = Network::mlp(2 * config.feature_dim, hidden, config.action_dim, Activation::tanh,
                                   Activation::linear);
  icm.encoder.init_uniform(rng);
  icm.forward_model.init_uniform(rng);
  icm.inverse_model.init_uniform(rng);
  icm.beta = config.beta;
  icm.eta = config.eta;
  icm.optimizers = {OptimizerState::adam(config.learning_rate, icm.encoder.parameter_count()),
                    OptimizerState::adam(config.learning_rate, icm.forward_model.parameter_count()),
                    OptimizerState::adam(config.learning_rate, icm.inverse_model.parameter_count())};
  return icm;
}

void use_maze_normalization(IcmParams& icm, const Maze& maze) {
  if (icm.state_dim() != kStateDim) throw std::invalid_argument("ICM: state dimension is not the maze's");
  icm.input_offset.assign(maze.observation_offset().begin(), maze.observation_offset().end());
  icm.input_scale.assign(maze.observation_scale().begin(), maze.observation_scale().end());
}

std::vector<double> encode(const IcmParams& icm, std::span<const double> state) {
  return icm.encoder.forward(normalized_input(icm, state));
}

double forward_loss(const IcmParams& icm, const Transition& t) {
  check_transition(icm, t);
  const std::vector<double> z = encode(icm, t.state);
  const std::vector<double> z_next = encode(icm, t.next_state);
  const std::vector<double> pred = icm.forward_model.forward(concat(z, t.action));
  return l2(pred, z_next);
}

double inverse_loss(const IcmParams& icm, const Transition& t) {
  check_transition(icm, t);
  const std::vector<double> z = encode(icm, t.state);
  const std::vector<double> z_next = encode(icm, t.next_state);
  const std::vector<double> a_hat = icm.inverse_model.forward(concat(z, z_next));
  return l2(a_hat, t.action);
}

double curiosity_bonus(const IcmParams& icm, const Transition& t) {
  return 0.5 * icm.eta * forward_loss(icm, t);
}

double icm_loss(const IcmParams& icm, std::span<const Transition* const> batch) {
  if (batch.empty()) throw std::invalid_argument("icm_loss: empty batch");
  double total = 0.0;
  for (const Transition* t : batch) {
    total += (1.0 - icm.beta) * inverse_loss(icm, *t) + icm.beta * forward_loss(icm, *t);
  }
  return total / static_cast<double>(batch.size());
}

double icm_loss(const IcmParams& icm, std::span<const Transition> batch) {
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.size());
  for (const Transition& t : batch) ptrs.push_back(&t);
  return icm_loss(icm, ptrs);
}

double icm_loss_gradient(const IcmParams& icm, std::span<const Transition* const> batch,
                         std::span<double> grad) {
  if (batch.empty()) throw std::invalid_argument("icm_loss_gradient: empty batch");
  if (grad.size() != icm.parameter_count()) throw std::invalid_argument("icm_loss_gradient: bad gradient size");
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t ne = icm.encoder.parameter_count();
  const std::size_t nf = icm.forward_model.parameter_count();
  std::span<double> g_enc = grad.subspan(0, ne);
  std::span<double> g_fwd = grad.subspan(ne, nf);
  std::span<double> g_inv = grad.subspan(ne + nf);
  const std::size_t fd = icm.feature_dim();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const double beta = icm.beta;

  double total = 0.0;
  std::vector<double> up_f(fd), up_i(icm.action_dim()), g_z(fd), g_zn(fd);
  for (const Transition* tp : batch) {
    const Transition& t = *tp;
    check_transition(icm, t);
    const ForwardTrace enc = icm.encoder.forward_trace(normalized_input(icm, t.state));
    const ForwardTrace enc_next = icm.encoder.forward_trace(normalized_input(icm, t.next_state));
    const std::span<const double> z = enc.output();
    const std::span<const double> zn = enc_next.output();
    const ForwardTrace fwd = icm.forward_model.forward_trace(concat(z, t.action));
    const ForwardTrace inv = icm.inverse_model.forward_trace(concat(z, zn));

    const std::span<const double> pred = fwd.output();
    const std::span<const double> a_hat = inv.output();
    const double lf = l2(pred, zn);
    const double li = l2(a_hat, t.action);
    total += (1.0 - beta) * li + beta * lf;

    // d||e||/de = e / ||e||, taken as zero at an exact prediction.
    const double cf = lf > 0.0 ? beta * inv_b / lf : 0.0;
    const double ci = li > 0.0 ? (1.0 - beta) * inv_b / li : 0.0;
    for (std::size_t k = 0; k < fd; ++k) up_f[k] = cf * (pred[k] - zn[k]);
    for (std::size_t k = 0; k < up_i.size(); ++k) up_i[k] = ci * (a_hat[k] - t.action[k]);

    const std::vector<double> gin_f = icm.forward_model.backward_accumulate(fwd, up_f, g_fwd);
    const std::vector<double> gin_i = icm.inverse_model.backward_accumulate(inv, up_i, g_inv);
    for (std::size_t k = 0; k < fd; ++k) {
      g_z[k] = gin_f[k] + gin_i[k];
      g_zn[k] = gin_i[fd + k] - up_f[k];
    }
    icm.encoder.backward_accumulate(enc, g_z, g_enc);
    icm.encoder.backward_accumulate(enc_next, g_zn, g_enc);
  }
  return total * inv_b;
}

std::vector<double> forward_errors(const IcmParams& icm, const Trajectory& trajectory) {
  std::vector<double> errors;
  if (trajectory.empty()) return errors;
  errors.reserve(trajectory.size());
  std::vector<double> z = encode(icm, trajectory.transitions.front().state);
  const std::vector<double>* previous = nullptr;
  for (const Transition& t : trajectory.transitions) {
    check_transition(icm, t);
    // Chained trajectories reuse the previous encoding.
    if (previous != nullptr && *previous != t.state) z = encode(icm, t.state);
    previous = &t.next_state;
    std::vector<double> z_next = encode(icm, t.next_state);
    const std::vector<double> pred = icm.forward_model.forward(concat(z, t.action));
    errors.push_back(l2(pred, z_next));
    z = std::move(z_next);
  }
  return errors;
}

std::vector<double> train_icm(IcmParams& icm, const ReplayBuffer& buffer, const IcmTrainOptions& options,
                              Rng& rng) {
  if (options.epochs < 1) throw std::invalid_argument("train_icm: epochs must be >= 1");
  if (options.batch_size == 0) throw std::invalid_argument("train_icm: batch size must be positive");
  std::vector<double> history;
  if (buffer.empty()) {
    std::clog << "warning: train_icm called with an empty replay buffer; skipping\n";
    return history;
  }
  const std::size_t n = buffer.size();
  const std::size_t batches_full = (n + options.batch_size - 1) / options.batch_size;
  const std::size_t batches = options.max_batches_per_epoch == 0
                                  ? batches_full
                                  : std::min(batches_full, options.max_batches_per_epoch);
  const std::size_t needed = std::min(n, batches * options.batch_size);

  const std::size_t ne = icm.encoder.parameter_count();
  const std::size_t nf = icm.forward_model.parameter_count();
  std::vector<double> grad(icm.parameter_count());
  std::vector<const Transition*> batch;
  history.reserve(static_cast<std::size_t>(options.epochs));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const std::vector<std::size_t> order = sample_without_replacement(n, needed, rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < needed; start += options.batch_size) {
      const std::size_t end = std::min(needed, start + options.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&buffer[order[i]]);
      const double loss = icm_loss_gradient(icm, batch, grad);
      loss_sum += loss * static_cast<double>(end - start);
      const std::span<const double> g(grad);
      optimizer_step(icm.optimizers[0], icm.encoder, g.subspan(0, ne));
      optimizer_step(icm.optimizers[1], icm.forward_model, g.subspan(ne, nf));
      optimizer_step(icm.optimizers[2], icm.inverse_model, g.subspan(ne + nf));
    }
    history.push_back(loss_sum / static_cast<double>(needed));
  }
  return history;
}

namespace {

nlohmann::json optimizer_json(const OptimizerState& s) {
  return {{"kind", s.kind == OptimizerKind::adam ? "adam" : "sgd"},
          {"learning_rate", s.learning_rate},
          {"beta1", s.beta1},
          {"beta2", s.beta2},
          {"epsilon", s.epsilon},
          {"step_count", s.step_count}};
}

OptimizerState optimizer_from_json(const nlohmann::json& j) {
  OptimizerState s;
  s.kind = j.at("kind").get<std::string>() == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.step_count = j.at("step_count").get<std::uint64_t>();
  return s;
}

constexpr const char* kNetNames[3] = {"encoder", "forward", "inverse"};

}  // namespace

void save_icm(const std::filesystem::path& dir, const IcmParams& icm) {
  std::filesystem::create_directories(dir);
  const Network* nets[3] = {&icm.encoder, &icm.forward_model, &icm.inverse_model};
  nlohmann::json manifest;
  manifest["beta"] = icm.beta;
  manifest["eta"] = icm.eta;
  manifest["input_offset"] = icm.input_offset;
  manifest["input_scale"] = icm.input_scale;
  for (int k = 0; k < 3; ++k) {
    const std::string name = kNetNames[k];
    save_network(dir / (name + ".bin"), *nets[k]);
    const OptimizerState& opt = icm.optimizers[k];
    manifest["optimizers"][name] = optimizer_json(opt);
    if (opt.kind == OptimizerKind::adam) {
      const std::string header = nlohmann::json{{"kind", "moment"}, {"count", opt.first_moment.size()}}.dump();
      save_array(dir / (name + ".m1.bin"), opt.first_moment, header);
      save_array(dir / (name + ".m2.bin"), opt.second_moment, header);
    }
  }
  std::ofstream(dir / "icm.json") << manifest.dump(2) << '\n';
}

IcmParams load_icm(const std::filesystem::path& dir) {
  std::ifstream in(dir / "icm.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "icm.json").string());
  const nlohmann::json manifest = nlohmann::json::parse(in);
  IcmParams icm;
  icm.beta = manifest.at("beta").get<double>();
  icm.eta = manifest.at("eta").get<double>();
  icm.input_offset = manifest.at("input_offset").get<std::vector<double>>();
  icm.input_scale = manifest.at("input_scale").get<std::vector<double>>();
  Network* nets[3] = {&icm.encoder, &icm.forward_model, &icm.inverse_model};
  for (int k = 0; k < 3; ++k) {
    const std::string name = kNetNames[k];
    *nets[k] = load_network(dir / (name + ".bin"));
    OptimizerState opt = optimizer_from_json(manifest.at("optimizers").at(name));
    if (opt.kind == OptimizerKind::adam) {
      opt.first_moment = load_array(dir / (name + ".m1.bin"));
      opt.second_moment = load_array(dir / (name + ".m2.bin"));
    }
    icm.optimizers[k] = std::move(opt);
  }
  return icm;
}

}  // namespace ces
