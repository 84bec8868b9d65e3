#include "argos/models/anomaly_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "argos/errors.hpp"
#include "argos/text_util.hpp"

namespace argos::models {

namespace {

constexpr std::uint8_t kBundleMagic[4] = {'A', 'R', 'G', 'M'};
constexpr std::uint8_t kBundleVersion = 1;

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  // Rejects element counts the remaining input cannot possibly hold.
  void expect_room(std::uint64_t count, std::size_t min_element_size) {
    if (count * min_element_size > in_.size() - pos_) fail("element count exceeds model size");
  }
  bool at_end() const { return pos_ == in_.size(); }
  [[noreturn]] void fail(const std::string& why) const {
    throw DataError("model bundle: " + why + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) fail("truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_layer(ByteWriter& w, const DenseLayer& layer) {
  w.u32(static_cast<std::uint32_t>(layer.inputs()));
  w.u32(static_cast<std::uint32_t>(layer.outputs()));
  w.u8(static_cast<std::uint8_t>(layer.activation));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f32(layer.weight(r, c));
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f32(layer.bias[r]);
}

DenseLayer read_layer(ByteReader& r) {
  const std::uint32_t in = r.u32();
  const std::uint32_t out = r.u32();
  const std::uint8_t act = r.u8();
  if (act > 2) r.fail("unknown activation");
  if (in == 0 || out == 0) r.fail("zero-width layer");
  r.expect_room(static_cast<std::uint64_t>(in) * out + out, 4);
  DenseLayer layer;
  layer.activation = static_cast<Activation>(act);
  layer.weight.resize(out, in);
  layer.bias.resize(out);
  for (std::uint32_t row = 0; row < out; ++row) {
    for (std::uint32_t col = 0; col < in; ++col) layer.weight(row, col) = r.f32();
  }
  for (std::uint32_t row = 0; row < out; ++row) layer.bias[row] = r.f32();
  if (!layer.weight.allFinite() || !layer.bias.allFinite()) r.fail("non-finite parameter");
  return layer;
}

std::shared_ptr<const AnomalyModel> read_model(ByteReader& r, ModelType type) {
  if (is_autoencoder_family(type)) {
    const std::uint32_t count = r.u32();
    if (count != 4) r.fail("autoencoder must have 4 layers");
    std::vector<DenseLayer> layers;
    for (std::uint32_t i = 0; i < count; ++i) layers.push_back(read_layer(r));
    std::optional<VaeHead> head;
    const std::uint8_t has_head = r.u8();
    if (has_head > 1) r.fail("bad head flag");
    if (has_head) head = VaeHead{read_layer(r)};
    try {
      return std::make_shared<AutoencoderModel>(type, DenseNetwork(std::move(layers)), std::move(head));
    } catch (const std::invalid_argument& e) {
      r.fail(e.what());
    }
  }

  const std::uint32_t width = r.u32();
  const std::uint32_t subsample = r.u32();
  const std::uint32_t tree_count = r.u32();
  if (width == 0 || subsample == 0 || tree_count == 0) r.fail("empty forest");
  r.expect_room(tree_count, 4);
  std::vector<IsolationTree> trees(tree_count);
  for (auto& tree : trees) {
    const std::uint32_t nodes = r.u32();
    if (nodes == 0) r.fail("empty tree");
    r.expect_room(nodes, 28);
    tree.nodes.resize(nodes);
    for (std::uint32_t i = 0; i < nodes; ++i) {
      auto& node = tree.nodes[i];
      node.attribute = static_cast<std::int32_t>(r.u32());
      node.split = r.f64();
      node.left = r.u32();
      node.right = r.u32();
      node.size = r.u32();
      node.depth = r.u32();
      if (!node.is_leaf()) {
        // Pre-order storage: children always follow their parent.
        if (node.attribute >= static_cast<std::int32_t>(width) || node.left <= i || node.right <= i ||
            node.left >= nodes || node.right >= nodes || !std::isfinite(node.split)) {
          r.fail("corrupt tree node");
        }
      }
    }
  }
  return std::make_shared<IsolationForestModel>(IsolationForest(std::move(trees), subsample, width));
}

}  // namespace

std::string_view to_string(ModelType type) {
  switch (type) {
    case ModelType::Ae:
      return "ae";
    case ModelType::Dae:
      return "dae";
    case ModelType::Vae:
      return "vae";
    case ModelType::IsolationForest:
      return "iforest";
  }
  return "?";
}

std::optional<ModelType> parse_model_type(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "ae") return ModelType::Ae;
  if (lower == "dae") return ModelType::Dae;
  if (lower == "vae") return ModelType::Vae;
  if (lower == "iforest" || lower == "if") return ModelType::IsolationForest;
  return std::nullopt;
}

std::vector<double> AnomalyModel::score_all(const FeatureMatrix& data) const {
  std::vector<double> scores(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    scores[static_cast<std::size_t>(c)] = score(std::span<const double>(data.col(c).data(), data.rows()));
  }
  return scores;
}

AutoencoderModel::AutoencoderModel(ModelType type, DenseNetwork network, std::optional<VaeHead> head)
    : type_(type), network_(std::move(network)), head_(std::move(head)) {
  if (!is_autoencoder_family(type)) throw std::invalid_argument("AutoencoderModel: not an autoencoder type");
  if (network_.layers().empty() || network_.input_width() != network_.output_width()) {
    throw std::invalid_argument("AutoencoderModel: output width must equal input width");
  }
}

double AutoencoderModel::score(std::span<const double> x) const {
  if (x.size() != input_width()) {
    throw std::invalid_argument("model expects width " + std::to_string(input_width()) + ", got " +
                                std::to_string(x.size()));
  }
  const Eigen::VectorXd reconstruction = network_.forward(x);
  return mse(x, std::span<const double>(reconstruction.data(), static_cast<std::size_t>(reconstruction.size())));
}

void AutoencoderModel::serialize(std::vector<std::uint8_t>& out) const {
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(network_.layers().size()));
  for (const auto& layer : network_.layers()) write_layer(w, layer);
  w.u8(head_ ? 1 : 0);
  if (head_) write_layer(w, head_->logvar);
}

void IsolationForestModel::serialize(std::vector<std::uint8_t>& out) const {
  ByteWriter w(out);
  w.u32(static_cast<std::uint32_t>(forest_.input_width()));
  w.u32(static_cast<std::uint32_t>(forest_.subsample_size()));
  w.u32(static_cast<std::uint32_t>(forest_.tree_count()));
  for (const auto& tree : forest_.trees()) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      w.u32(static_cast<std::uint32_t>(node.attribute));
      w.f64(node.split);
      w.u32(node.left);
      w.u32(node.right);
      w.u32(node.size);
      w.u32(node.depth);
    }
  }
}

TrainedModel train_model(const FeatureMatrix& data, const ModelConfig& cfg) {
  TrainedModel out;
  switch (cfg.type) {
    case ModelType::Ae: {
      auto trained = train_ae(data, cfg.train);
      out.report = trained.report;
      out.model = std::make_shared<AutoencoderModel>(ModelType::Ae, std::move(trained.network));
      break;
    }
    case ModelType::Dae: {
      auto trained = train_dae(data, cfg.train, cfg.dae_noise_sigma);
      out.report = trained.report;
      out.model = std::make_shared<AutoencoderModel>(ModelType::Dae, std::move(trained.network));
      break;
    }
    case ModelType::Vae: {
      auto trained = train_vae(data, cfg.train, cfg.vae_beta);
      out.report = trained.report;
      out.model = std::make_shared<AutoencoderModel>(ModelType::Vae, std::move(trained.network),
                                                     std::move(trained.head));
      break;
    }
    case ModelType::IsolationForest: {
      if (static_cast<std::size_t>(data.cols()) < cfg.train.min_samples) {
        throw DataError("training needs at least " + std::to_string(cfg.train.min_samples) + " vectors");
      }
      const std::size_t psi = std::min(cfg.subsample_size, static_cast<std::size_t>(data.cols()));
      out.model = std::make_shared<IsolationForestModel>(train_iforest(data, cfg.tree_count, psi, cfg.train.seed));
      break;
    }
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(rank));
  const std::size_t upper = std::min(lower + 1, values.size() - 1);
  const double fraction = rank - static_cast<double>(lower);
  return values[lower] + fraction * (values[upper] - values[lower]);
}

Threshold fit_threshold(const AnomalyModel& model, const FeatureMatrix& train_data, double pct) {
  if (static_cast<std::size_t>(train_data.cols()) < kMinThresholdSamples) {
    throw DataError("threshold fitting needs at least 100 training vectors");
  }
  Threshold t;
  t.percentile = pct;
  t.fitted_on = static_cast<std::size_t>(train_data.cols());
  t.tau = std::max(0.0, percentile(model.score_all(train_data), pct));
  return t;
}

FeatureMatrix to_matrix(std::span<const TelemetryVector> vectors) {
  if (vectors.empty()) return FeatureMatrix(0, 0);
  const auto width = static_cast<Eigen::Index>(vectors.front().features.size());
  FeatureMatrix m(width, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    if (static_cast<Eigen::Index>(vectors[c].features.size()) != width) {
      throw DataError("telemetry vectors have inconsistent widths");
    }
    m.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(vectors[c].features.data(), width);
  }
  return m;
}

std::vector<std::uint8_t> serialize_bundle(const ModelBundle& bundle) {
  if (!bundle.model) throw std::invalid_argument("bundle has no model");
  std::vector<std::uint8_t> out;
  ByteWriter w(out);
  for (auto b : kBundleMagic) w.u8(b);
  w.u8(kBundleVersion);
  w.u8(static_cast<std::uint8_t>(bundle.model->type()));
  const std::string registry = bundle.registry.serialize();
  w.u32(static_cast<std::uint32_t>(registry.size()));
  out.insert(out.end(), registry.begin(), registry.end());
  w.f64(bundle.threshold.tau);
  w.f64(bundle.threshold.percentile);
  w.u64(bundle.threshold.fitted_on);
  bundle.model->serialize(out);
  return out;
}

ModelBundle deserialize_bundle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (auto b : kBundleMagic) {
    if (r.u8() != b) r.fail("not a model bundle");
  }
  if (r.u8() != kBundleVersion) r.fail("unsupported bundle version");
  const std::uint8_t type = r.u8();
  if (type < 1 || type > 4) r.fail("unknown model type");
  const std::uint32_t registry_len = r.u32();
  const auto registry_bytes = r.bytes(registry_len);

  ModelBundle bundle;
  bundle.registry = CellRegistry::parse(
      std::string_view(reinterpret_cast<const char*>(registry_bytes.data()), registry_bytes.size()));
  bundle.threshold.tau = r.f64();
  bundle.threshold.percentile = r.f64();
  bundle.threshold.fitted_on = static_cast<std::size_t>(r.u64());
  if (!(bundle.threshold.tau >= 0.0) || !std::isfinite(bundle.threshold.tau)) r.fail("invalid threshold");
  bundle.model = read_model(r, static_cast<ModelType>(type));
  if (!r.at_end()) r.fail("trailing bytes");
  if (bundle.model->input_width() != bundle.registry.feature_width()) {
    r.fail("model width does not match the registry");
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = serialize_bundle(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_bundle(bytes);
}

}  // namespace argos::models
