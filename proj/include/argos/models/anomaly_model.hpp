#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "argos/core_types.hpp"
#include "argos/models/isolation_forest.hpp"
#include "argos/models/network.hpp"
#include "argos/models/training.hpp"

namespace argos::models {

enum class ModelType : std::uint8_t { Ae = 1, Dae = 2, Vae = 3, IsolationForest = 4 };

std::string_view to_string(ModelType type);
std::optional<ModelType> parse_model_type(std::string_view text);
inline bool is_autoencoder_family(ModelType type) { return type != ModelType::IsolationForest; }

// Trained scorer; immutable after construction and safe to share across threads.
class AnomalyModel {
 public:
  virtual ~AnomalyModel() = default;

  virtual ModelType type() const = 0;
  virtual std::size_t input_width() const = 0;
  // Reconstruction MSE for the autoencoders, s(x) for the forest.
  // Throws std::invalid_argument on width mismatch.
  virtual double score(std::span<const double> x) const = 0;
  virtual void serialize(std::vector<std::uint8_t>& out) const = 0;

  std::vector<double> score_all(const FeatureMatrix& data) const;
};

class AutoencoderModel final : public AnomalyModel {
 public:
  AutoencoderModel(ModelType type, DenseNetwork network, std::optional<VaeHead> head = std::nullopt);

  ModelType type() const override { return type_; }
  std::size_t input_width() const override { return network_.input_width(); }
  double score(std::span<const double> x) const override;
  void serialize(std::vector<std::uint8_t>& out) const override;

  const DenseNetwork& network() const { return network_; }
  const std::optional<VaeHead>& head() const { return head_; }

 private:
  ModelType type_;
  DenseNetwork network_;
  std::optional<VaeHead> head_;
};

class IsolationForestModel final : public AnomalyModel {
 public:
  explicit IsolationForestModel(IsolationForest forest) : forest_(std::move(forest)) {}

  ModelType type() const override { return ModelType::IsolationForest; }
  std::size_t input_width() const override { return forest_.input_width(); }
  double score(std::span<const double> x) const override { return forest_.score(x); }
  void serialize(std::vector<std::uint8_t>& out) const override;

  const IsolationForest& forest() const { return forest_; }

 private:
  IsolationForest forest_;
};

struct ModelConfig {
  ModelType type = ModelType::Vae;
  TrainConfig train;
  double dae_noise_sigma = 0.05;
  double vae_beta = 1e-4;
  std::size_t tree_count = 100;
  std::size_t subsample_size = 256;
};

struct TrainedModel {
  std::shared_ptr<const AnomalyModel> model;
  TrainReport report;
};

// The forest uses min(subsample_size, |data|) points per tree.
TrainedModel train_model(const FeatureMatrix& data, const ModelConfig& cfg);

struct Threshold {
  double tau = 0.0;
  double percentile = 99.9;
  std::size_t fitted_on = 0;
};

inline constexpr double kThresholdPercentile = 99.9;
inline constexpr std::size_t kMinThresholdSamples = 100;

// Linear interpolation between order statistics at rank p/100 * (n - 1).
double percentile(std::vector<double> values, double p);

// Throws DataError when fewer than 100 training vectors are supplied.
Threshold fit_threshold(const AnomalyModel& model, const FeatureMatrix& train_data,
                        double pct = kThresholdPercentile);

FeatureMatrix to_matrix(std::span<const TelemetryVector> vectors);

// Registry, model and threshold persisted together so that feature layout and
// decision boundary can never drift apart.
struct ModelBundle {
  CellRegistry registry;
  std::shared_ptr<const AnomalyModel> model;
  Threshold threshold;
};

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle);
// Throws DataError on malformed or unsupported input.
ModelBundle deserialize_bundle(std::span<const std::uint8_t> bytes);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace argos::models
