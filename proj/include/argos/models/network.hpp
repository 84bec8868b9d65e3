#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "argos/random.hpp"

namespace argos::models {

// Samples are stored column-wise: a batch of B vectors of width D is D x B.
using FeatureMatrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { Linear = 0, Relu = 1, Sigmoid = 2 };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Linear;

  std::size_t inputs() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

struct LayerGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Feed-forward stack. The autoencoder shape is [D, h, z, h, D] with ReLU on
// the h layers, a linear code layer and a sigmoid output.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  explicit DenseNetwork(std::vector<DenseLayer> layers);

  static DenseNetwork autoencoder(std::size_t input_width, std::size_t hidden, std::size_t latent, Rng& rng);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t latent_width() const;

  FeatureMatrix forward(const FeatureMatrix& batch) const;
  Eigen::VectorXd forward(std::span<const double> x) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  // Flat order: per layer, weights column-major, then bias.
  double parameter(std::size_t index) const;
  void set_parameter(std::size_t index, double value);

  bool all_finite() const;
  // Rounds every parameter to float32 precision so that serialization is lossless.
  void round_to_float();

 private:
  std::vector<DenseLayer> layers_;
};

// Log-variance projection of the VAE encoder; the mean projection is the
// network's code layer, so mean-latent inference is a plain forward pass.
struct VaeHead {
  DenseLayer logvar;
};

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

FeatureMatrix apply_layer(const DenseLayer& layer, const FeatureMatrix& input);
void activate(Activation activation, FeatureMatrix& values);

// Throws std::invalid_argument on length mismatch.
double mse(std::span<const double> x, std::span<const double> x_hat);

// KL(N(mu, exp(logvar)) || N(0, I)) summed over dimensions; logvar is clamped.
double kl_gaussian(std::span<const double> mu, std::span<const double> logvar);

struct LossValue {
  double total = 0.0;
  double reconstruction = 0.0;  // batch mean of per-vector MSE
  double kl = 0.0;              // batch mean of per-vector KL
};

// Mean over the batch of mse(target, net(input)). When `gradient` is non-null
// it receives dLoss/dparameters for every layer.
LossValue reconstruction_loss(const DenseNetwork& net, const FeatureMatrix& input, const FeatureMatrix& target,
                              std::vector<LayerGradient>* gradient);

// VAE objective with a caller-supplied standard-normal draw `eta` (latent x B):
// mean over the batch of mse(x, decode(mu + exp(logvar/2) * eta)) + beta * KL.
LossValue vae_loss(const DenseNetwork& net, const VaeHead& head, const FeatureMatrix& input,
                   const FeatureMatrix& eta, double beta, std::vector<LayerGradient>* net_gradient,
                   LayerGradient* head_gradient);

}  // namespace argos::models
