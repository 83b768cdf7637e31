#pragma once

// Intrinsic Curiosity Module: an encoder phi mapping states to features, a
// forward model F(phi(s), a) -> phi(s') and an inverse model
// I(phi(s), phi(s')) -> a, trained jointly on
//   L = (1 - beta) * ||I(phi(s), phi(s')) - a|| + beta * ||F(phi(s), a) - phi(s')||.
// Both norms are plain (unsquared) l2 norms.

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ces/maze.hpp"
#include "ces/replay_buffer.hpp"
#include "ces/rng.hpp"
#include "ces/tensor.hpp"

namespace ces {

struct IcmConfig {
  std::size_t state_dim = kStateDim;
  std::size_t action_dim = kActionDim;
  std::size_t feature_dim = 32;
  std::size_t hidden = 64;  // two hidden tanh layers per network
  double beta = 0.2;
  double eta = 1.0;
  double learning_rate = 1e-4;
};

struct IcmParams {
  Network encoder;
  Network forward_model;
  Network inverse_model;
  double beta = 0.2;
  double eta = 1.0;
  // One optimizer state per network: encoder, forward, inverse.
  std::array<OptimizerState, 3> optimizers;
  // Encoder input normalisation, (s - offset) * scale. Empty means identity.
  std::vector<double> input_offset;
  std::vector<double> input_scale;

  std::size_t state_dim() const { return encoder.input_dim(); }
  std::size_t feature_dim() const { return encoder.output_dim(); }
  std::size_t action_dim() const { return inverse_model.output_dim(); }
  std::size_t parameter_count() const;

  // Concatenated [encoder, forward, inverse] weights.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
};

// Randomly initialised ICM with adam optimizers.
IcmParams make_icm(const IcmConfig& config, Rng& rng);
// Normalise encoder inputs the same way policies see this maze.
void use_maze_normalization(IcmParams& icm, const Maze& maze);

std::vector<double> encode(const IcmParams& icm, std::span<const double> state);

double forward_loss(const IcmParams& icm, const Transition& t);
double inverse_loss(const IcmParams& icm, const Transition& t);
// (eta / 2) * forward_loss; independent of the inverse model.
double curiosity_bonus(const IcmParams& icm, const Transition& t);

// Mean over the batch of (1 - beta) * L_I + beta * L_F. Throws on an empty batch.
double icm_loss(const IcmParams& icm, std::span<const Transition> batch);
double icm_loss(const IcmParams& icm, std::span<const Transition* const> batch);

// Loss and its gradient with respect to parameters() (same layout).
double icm_loss_gradient(const IcmParams& icm, std::span<const Transition* const> batch,
                         std::span<double> grad);

// Forward-model error ||F(phi(s_t), a_t) - phi(s_{t+1})|| for every step,
// encoding each state of the trajectory once.
std::vector<double> forward_errors(const IcmParams& icm, const Trajectory& trajectory);

struct IcmTrainOptions {
  int epochs = 64;
  std::size_t batch_size = 128;
  // Minibatches per epoch; 0 means a full shuffled pass over the buffer.
  std::size_t max_batches_per_epoch = 0;
};

// Runs the configured epochs; each epoch shuffles the buffer and takes one
// optimizer step per minibatch on all three networks. Returns the mean
// minibatch loss of every epoch (measured before each step). An empty buffer
// is a no-op that returns an empty history.
std::vector<double> train_icm(IcmParams& icm, const ReplayBuffer& buffer,
                              const IcmTrainOptions& options, Rng& rng);

// Checkpoint: encoder.bin, forward.bin, inverse.bin, moment arrays and
// icm.json (beta, eta, optimizer settings, step counts, normalisation).
void save_icm(const std::filesystem::path& dir, const IcmParams& icm);
IcmParams load_icm(const std::filesystem::path& dir);

}  // namespace ces
