#pragma once

#include <cstdint>
#include <utility>

#include "argos/models/network.hpp"

namespace argos::models {

enum class OptimizerKind : std::uint8_t { Momentum, Adam };

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t hidden = 64;
  std::size_t latent = 16;
  std::size_t min_samples = 100;
};

// Objective evaluated over the full dataset before the first and after the
// last update, with the same noise realization both times.
struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
};

struct TrainedNetwork {
  DenseNetwork network;
  TrainReport report;
};

struct TrainedVae {
  DenseNetwork network;
  VaeHead head;
  TrainReport report;
};

// All trainers throw DataError when data has fewer than cfg.min_samples
// columns and TrainingError when the loss becomes non-finite. Results are a
// pure function of (data, cfg). Parameters are rounded to float32 at the end.
TrainedNetwork train_ae(const FeatureMatrix& data, const TrainConfig& cfg);

// Inputs are corrupted as clamp(x + N(0, noise_sigma^2), 0, 1) with fresh
// noise per presentation; the target is the clean x.
TrainedNetwork train_dae(const FeatureMatrix& data, const TrainConfig& cfg, double noise_sigma);

// beta = 0 is accepted and yields the stochastic AE limit.
TrainedVae train_vae(const FeatureMatrix& data, const TrainConfig& cfg, double beta);

// Element-wise corruption used by the DAE, exposed for tests.
FeatureMatrix corrupt(const FeatureMatrix& clean, double noise_sigma, Rng& rng);

}  // namespace argos::models
