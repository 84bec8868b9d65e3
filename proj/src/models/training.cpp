#include "argos/models/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "argos/errors.hpp"

namespace argos::models {

namespace {

struct ParameterBlock {
  double* value;
  const double* gradient;
  std::size_t size;
};

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(const std::vector<ParameterBlock>& blocks) {
    if (first_.size() != blocks.size()) {
      first_.clear();
      second_.clear();
      for (const auto& b : blocks) {
        first_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size)));
        second_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size)));
      }
    }
    ++steps_;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto n = static_cast<Eigen::Index>(blocks[i].size);
      Eigen::Map<Eigen::VectorXd> value(blocks[i].value, n);
      const Eigen::Map<const Eigen::VectorXd> grad(blocks[i].gradient, n);
      if (cfg_.optimizer == OptimizerKind::Momentum) {
        first_[i] = cfg_.momentum * first_[i] - cfg_.learning_rate * grad;
        value += first_[i];
      } else {
        constexpr double kBeta1 = 0.9;
        constexpr double kBeta2 = 0.999;
        constexpr double kEps = 1e-8;
        first_[i] = kBeta1 * first_[i] + (1.0 - kBeta1) * grad;
        second_[i] = kBeta2 * second_[i] + (1.0 - kBeta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
        value.array() -= cfg_.learning_rate * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + kEps);
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Eigen::VectorXd> first_;
  std::vector<Eigen::VectorXd> second_;
  long steps_ = 0;
};

void append_blocks(std::vector<ParameterBlock>& blocks, DenseLayer& layer, const LayerGradient& grad) {
  blocks.push_back({layer.weight.data(), grad.weight.data(), static_cast<std::size_t>(layer.weight.size())});
  blocks.push_back({layer.bias.data(), grad.bias.data(), static_cast<std::size_t>(layer.bias.size())});
}

void check_data(const FeatureMatrix& data, const TrainConfig& cfg) {
  if (static_cast<std::size_t>(data.cols()) < cfg.min_samples) {
    throw DataError("training needs at least " + std::to_string(cfg.min_samples) + " vectors, got " +
                    std::to_string(data.cols()));
  }
  if (data.rows() == 0) throw DataError("training vectors have zero width");
  if (cfg.batch_size == 0 || cfg.epochs < 0) throw ConfigError("invalid batch size or epoch count");
  if (!data.allFinite()) throw DataError("training data contains non-finite values");
}

// Starts the sigmoid output at the per-feature mean so that always-zero
// features begin near zero instead of 0.5.
void init_output_bias(DenseNetwork& net, const FeatureMatrix& data) {
  const Eigen::VectorXd mean = data.rowwise().mean();
  auto& bias = net.layers().back().bias;
  for (Eigen::Index i = 0; i < bias.size(); ++i) {
    const double p = std::clamp(mean[i], 1e-3, 1.0 - 1e-3);
    bias[i] = std::log(p / (1.0 - p));
  }
}

void shuffle(std::vector<Eigen::Index>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
}

FeatureMatrix gather(const FeatureMatrix& data, const std::vector<Eigen::Index>& order, std::size_t begin,
                     std::size_t end) {
  FeatureMatrix batch(data.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) batch.col(static_cast<Eigen::Index>(j - begin)) = data.col(order[j]);
  return batch;
}

FeatureMatrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  FeatureMatrix eta(rows, cols);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = rng.normal();
  return eta;
}

[[noreturn]] void fail_non_finite(const char* model, int epoch, std::size_t batch, double loss) {
  std::ostringstream msg;
  msg << model << " training diverged: loss=" << loss << " at epoch " << epoch << ", batch " << batch;
  throw TrainingError(msg.str());
}

constexpr std::uint64_t kEvalStream = 0x5EEDEFA1ULL;

// Shared loop for the AE and DAE; noise_sigma = 0 trains the plain AE.
TrainedNetwork train_reconstruction(const FeatureMatrix& data, const TrainConfig& cfg, double noise_sigma,
                                    const char* name) {
  check_data(data, cfg);
  Rng rng(cfg.seed);
  DenseNetwork net = DenseNetwork::autoencoder(static_cast<std::size_t>(data.rows()), cfg.hidden, cfg.latent, rng);
  init_output_bias(net, data);

  auto evaluate = [&]() {
    Rng eval_rng(cfg.seed ^ kEvalStream);
    const FeatureMatrix input = noise_sigma > 0.0 ? corrupt(data, noise_sigma, eval_rng) : data;
    return reconstruction_loss(net, input, data, nullptr).total;
  };

  TrainedNetwork result;
  result.report.initial_loss = evaluate();
  Optimizer optimizer(cfg);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<LayerGradient> grad;
  std::vector<ParameterBlock> blocks;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const FeatureMatrix target = gather(data, order, begin, end);
      const FeatureMatrix input = noise_sigma > 0.0 ? corrupt(target, noise_sigma, rng) : target;
      const LossValue loss = reconstruction_loss(net, input, target, &grad);
      if (!std::isfinite(loss.total)) fail_non_finite(name, epoch, b, loss.total);
      blocks.clear();
      for (std::size_t l = 0; l < grad.size(); ++l) append_blocks(blocks, net.layers()[l], grad[l]);
      optimizer.step(blocks);
    }
  }

  net.round_to_float();
  if (!net.all_finite()) throw TrainingError(std::string(name) + " training produced non-finite parameters");
  result.report.final_loss = evaluate();
  if (!std::isfinite(result.report.final_loss)) fail_non_finite(name, cfg.epochs, 0, result.report.final_loss);
  result.report.epochs = cfg.epochs;
  result.network = std::move(net);
  return result;
}

}  // namespace

FeatureMatrix corrupt(const FeatureMatrix& clean, double noise_sigma, Rng& rng) {
  FeatureMatrix noisy(clean.rows(), clean.cols());
  for (Eigen::Index i = 0; i < clean.size(); ++i) {
    noisy.data()[i] = std::clamp(clean.data()[i] + noise_sigma * rng.normal(), 0.0, 1.0);
  }
  return noisy;
}

TrainedNetwork train_ae(const FeatureMatrix& data, const TrainConfig& cfg) {
  return train_reconstruction(data, cfg, 0.0, "AE");
}

TrainedNetwork train_dae(const FeatureMatrix& data, const TrainConfig& cfg, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw ConfigError("DAE noise_sigma must be positive");
  return train_reconstruction(data, cfg, noise_sigma, "DAE");
}

TrainedVae train_vae(const FeatureMatrix& data, const TrainConfig& cfg, double beta) {
  if (!(beta >= 0.0)) throw ConfigError("VAE beta must be nonnegative");
  check_data(data, cfg);
  Rng rng(cfg.seed);
  DenseNetwork net = DenseNetwork::autoencoder(static_cast<std::size_t>(data.rows()), cfg.hidden, cfg.latent, rng);
  init_output_bias(net, data);
  VaeHead head;
  {
    // Small weights and a negative bias start the posterior narrow.
    auto& lv = head.logvar;
    lv.activation = Activation::Linear;
    lv.weight.resize(static_cast<Eigen::Index>(cfg.latent), static_cast<Eigen::Index>(cfg.hidden));
    const double limit = std::sqrt(6.0 / static_cast<double>(cfg.hidden + cfg.latent)) * 0.1;
    for (Eigen::Index i = 0; i < lv.weight.size(); ++i) lv.weight.data()[i] = rng.uniform(-limit, limit);
    lv.bias = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.latent), -4.0);
  }

  const Eigen::Index latent = static_cast<Eigen::Index>(cfg.latent);
  auto evaluate = [&]() {
    Rng eval_rng(cfg.seed ^ kEvalStream);
    const FeatureMatrix eta = standard_normal(latent, data.cols(), eval_rng);
    return vae_loss(net, head, data, eta, beta, nullptr, nullptr).total;
  };

  TrainedVae result;
  result.report.initial_loss = evaluate();
  Optimizer optimizer(cfg);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<LayerGradient> grad;
  LayerGradient head_grad;
  std::vector<ParameterBlock> blocks;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const FeatureMatrix input = gather(data, order, begin, end);
      const FeatureMatrix eta = standard_normal(latent, input.cols(), rng);
      const LossValue loss = vae_loss(net, head, input, eta, beta, &grad, &head_grad);
      if (!std::isfinite(loss.total)) fail_non_finite("VAE", epoch, b, loss.total);
      blocks.clear();
      for (std::size_t l = 0; l < grad.size(); ++l) append_blocks(blocks, net.layers()[l], grad[l]);
      append_blocks(blocks, head.logvar, head_grad);
      optimizer.step(blocks);
    }
  }

  net.round_to_float();
  head.logvar.weight = head.logvar.weight.cast<float>().cast<double>();
  head.logvar.bias = head.logvar.bias.cast<float>().cast<double>();
  if (!net.all_finite() || !head.logvar.weight.allFinite() || !head.logvar.bias.allFinite()) {
    throw TrainingError("VAE training produced non-finite parameters");
  }
  result.report.final_loss = evaluate();
  if (!std::isfinite(result.report.final_loss)) fail_non_finite("VAE", cfg.epochs, 0, result.report.final_loss);
  result.report.epochs = cfg.epochs;
  result.network = std::move(net);
  result.head = std::move(head);
  return result;
}

}  // namespace argos::models
