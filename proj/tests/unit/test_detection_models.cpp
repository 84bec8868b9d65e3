#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "argos/errors.hpp"
#include "argos/models/anomaly_model.hpp"
#include "oracles.hpp"

namespace argos::models {
namespace {

FeatureMatrix uniform_data(std::size_t width, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m(width, n);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform();
  }
  return m;
}

// Two latent factors mixed into `width` bounded features.
FeatureMatrix low_rank_data(std::size_t width, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m(width, n);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double w = static_cast<double>(i) / static_cast<double>(width);
      m(i, j) = 0.1 + 0.4 * (w * a + (1.0 - w) * b);
    }
  }
  return m;
}

FeatureMatrix constant_data(std::size_t width, std::size_t n) {
  FeatureMatrix m(width, n);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).setConstant(0.2 + 0.6 * static_cast<double>(i % 5) / 4.0);
  return m;
}

std::vector<double> column(const FeatureMatrix& m, Eigen::Index j) {
  return {m.col(j).data(), m.col(j).data() + m.rows()};
}

TEST(Mse, Examples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(mse(a, std::vector<double>{1, 1, 1}), 5.0 / 3.0);
  EXPECT_THROW(mse(a, std::vector<double>{1}), std::invalid_argument);
}

TEST(Kl, Examples) {
  EXPECT_EQ(kl_gaussian(std::vector<double>{0.0}, std::vector<double>{0.0}), 0.0);
  EXPECT_DOUBLE_EQ(kl_gaussian(std::vector<double>{1.0}, std::vector<double>{0.0}), 0.5);
}

TEST(Kl, NonnegativeEverywhere) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> mu(-5, 5), lv(-30, 30);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> m(4), l(4);
    for (int d = 0; d < 4; ++d) {
      m[d] = mu(g);
      l[d] = lv(g);
    }
    EXPECT_GE(kl_gaussian(m, l), 0.0);
  }
}

struct GradientProbe {
  std::size_t probes = 0;
  double worst = 0.0;
};

GradientProbe probe_network(DenseNetwork& net, const std::vector<LayerGradient>& grads,
                            const std::function<double()>& loss, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::size_t> pick(0, net.parameter_count() - 1);
  GradientProbe result;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t p = pick(g);
    const double numeric = oracle::central_difference([&] { return net.parameter(p); },
                                                      [&](double v) { net.set_parameter(p, v); }, loss, 1e-6);
    result.worst = std::max(result.worst, oracle::relative_error(oracle::flat_gradient(grads, p), numeric));
    ++result.probes;
  }
  return result;
}

TEST(Gradient, AutoencoderMatchesFiniteDifferences) {
  Rng rng(21);
  auto net = DenseNetwork::autoencoder(16, 8, 4, rng);
  const auto x = uniform_data(16, 6, 22);
  std::vector<LayerGradient> grads;
  reconstruction_loss(net, x, x, &grads);
  const auto probe =
      probe_network(net, grads, [&] { return reconstruction_loss(net, x, x, nullptr).total; }, 150, 23);
  EXPECT_EQ(probe.probes, 150u);
  EXPECT_LE(probe.worst, 1e-4);
}

TEST(Gradient, DenoisingMatchesFiniteDifferences) {
  Rng rng(31);
  auto net = DenseNetwork::autoencoder(16, 8, 4, rng);
  const auto clean = uniform_data(16, 6, 32);
  const auto noisy = corrupt(clean, 0.1, rng);
  std::vector<LayerGradient> grads;
  reconstruction_loss(net, noisy, clean, &grads);
  const auto probe =
      probe_network(net, grads, [&] { return reconstruction_loss(net, noisy, clean, nullptr).total; }, 150, 33);
  EXPECT_LE(probe.worst, 1e-4);
}

TEST(Gradient, VaeMatchesFiniteDifferences) {
  Rng rng(41);
  auto net = DenseNetwork::autoencoder(16, 8, 4, rng);
  VaeHead head{{Eigen::MatrixXd::Random(4, 8) * 0.3, Eigen::VectorXd::Random(4) * 0.1, Activation::Linear}};
  const auto x = uniform_data(16, 6, 42);
  FeatureMatrix eta(4, 6);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta.data()[i] = rng.normal();
  const double beta = 0.5;

  std::vector<LayerGradient> grads;
  LayerGradient head_grad;
  vae_loss(net, head, x, eta, beta, &grads, &head_grad);
  auto loss = [&] { return vae_loss(net, head, x, eta, beta, nullptr, nullptr).total; };
  const auto probe = probe_network(net, grads, loss, 150, 43);
  EXPECT_LE(probe.worst, 1e-4);

  std::mt19937_64 g(44);
  double worst = 0.0;
  const auto head_params = static_cast<std::size_t>(head.logvar.weight.size() + head.logvar.bias.size());
  for (std::size_t p = 0; p < head_params; ++p) {
    double* slot = p < static_cast<std::size_t>(head.logvar.weight.size())
                       ? head.logvar.weight.data() + p
                       : head.logvar.bias.data() + (p - head.logvar.weight.size());
    const double analytic = p < static_cast<std::size_t>(head.logvar.weight.size())
                                ? head_grad.weight.data()[p]
                                : head_grad.bias.data()[p - head.logvar.weight.size()];
    const double numeric =
        oracle::central_difference([&] { return *slot; }, [&](double v) { *slot = v; }, loss, 1e-6);
    worst = std::max(worst, oracle::relative_error(analytic, numeric));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Vae, ZeroBetaDropsKl) {
  Rng rng(51);
  auto net = DenseNetwork::autoencoder(8, 6, 3, rng);
  VaeHead head{{Eigen::MatrixXd::Random(3, 6), Eigen::VectorXd::Random(3), Activation::Linear}};
  const auto x = uniform_data(8, 4, 52);
  FeatureMatrix eta = FeatureMatrix::Zero(3, 4);
  const auto loss = vae_loss(net, head, x, eta, 0.0, nullptr, nullptr);
  EXPECT_GT(loss.kl, 0.0);
  EXPECT_EQ(loss.total, loss.reconstruction);
}

TEST(Dae, CorruptionClampsToUnitInterval) {
  Rng rng(61);
  const auto clean = uniform_data(16, 200, 62);
  const auto noisy = corrupt(clean, 0.5, rng);
  EXPECT_GE(noisy.minCoeff(), 0.0);
  EXPECT_LE(noisy.maxCoeff(), 1.0);
  EXPECT_GT((noisy - clean).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Dae, VanishingNoiseRecoversAeObjective) {
  Rng rng(63);
  auto net = DenseNetwork::autoencoder(16, 8, 4, rng);
  const auto clean = uniform_data(16, 50, 64);
  const auto noisy = corrupt(clean, 1e-12, rng);
  EXPECT_NEAR(reconstruction_loss(net, noisy, clean, nullptr).total,
              reconstruction_loss(net, clean, clean, nullptr).total, 1e-10);
}

TrainConfig small_config(int epochs) {
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = epochs;
  cfg.hidden = 16;
  cfg.latent = 4;
  return cfg;
}

double mean_score(const AnomalyModel& model, const FeatureMatrix& data) {
  const auto s = model.score_all(data);
  double sum = 0;
  for (double v : s) sum += v;
  return sum / static_cast<double>(s.size());
}

TEST(Train, AutoencoderLearnsConstantVector) {
  const auto data = constant_data(16, 200);
  ModelConfig cfg;
  cfg.type = ModelType::Ae;
  cfg.train = small_config(50);
  const auto trained = train_model(data, cfg);
  EXPECT_LT(trained.model->score(column(data, 0)), 1e-3);
}

TEST(Train, DenoisingLearnsConstantVector) {
  const auto data = constant_data(16, 200);
  ModelConfig cfg;
  cfg.type = ModelType::Dae;
  cfg.dae_noise_sigma = 0.1;
  cfg.train = small_config(50);
  const auto trained = train_model(data, cfg);
  EXPECT_LT(trained.model->score(column(data, 0)), 1e-2);
}

TEST(Train, VaeMeanCollapsesOnConstantVector) {
  const auto data = constant_data(16, 200);
  const auto cfg = small_config(100);
  const auto trained = train_vae(data, cfg, 1.0);
  const AutoencoderModel model(ModelType::Vae, trained.network, trained.head);
  EXPECT_LT(model.score(column(data, 0)), 1e-2);
  const auto& layers = trained.network.layers();
  FeatureMatrix h = data.col(0);
  for (std::size_t l = 0; l < 2; ++l) {
    h = apply_layer(layers[l], h);
    activate(layers[l].activation, h);
  }
  EXPECT_LT(h.cwiseAbs().maxCoeff(), 0.1) << h.transpose();
}

TEST(Train, DeterministicGivenSeed) {
  const auto data = low_rank_data(16, 150, 71);
  for (auto type : {ModelType::Ae, ModelType::Dae, ModelType::Vae, ModelType::IsolationForest}) {
    ModelConfig cfg;
    cfg.type = type;
    cfg.train = small_config(5);
    cfg.subsample_size = 64;
    const auto a = serialize_bundle({CellRegistry({{1, 1, Rat::Nr}, {1, 2, Rat::Nr}, {1, 3, Rat::Nr}}),
                                     train_model(data, cfg).model, {}});
    const auto b = serialize_bundle({CellRegistry({{1, 1, Rat::Nr}, {1, 2, Rat::Nr}, {1, 3, Rat::Nr}}),
                                     train_model(data, cfg).model, {}});
    EXPECT_EQ(a, b) << to_string(type);
  }
}

TEST(Train, LossDropsTenfoldOnLearnableData) {
  const auto data = low_rank_data(16, 400, 81);
  auto cfg = small_config(50);
  cfg.hidden = 64;
  const auto ae = train_ae(data, cfg);
  EXPECT_LE(ae.report.final_loss * 10.0, ae.report.initial_loss);
  const auto dae = train_dae(data, cfg, 0.05);
  EXPECT_LE(dae.report.final_loss * 10.0, dae.report.initial_loss);
  const auto vae = train_vae(data, cfg, 1e-4);
  EXPECT_LE(vae.report.final_loss * 10.0, vae.report.initial_loss);
}

TEST(Train, RejectsSmallCorpus) {
  const auto data = uniform_data(16, 99, 91);
  EXPECT_THROW(train_ae(data, small_config(1)), DataError);
  ModelConfig cfg;
  cfg.type = ModelType::IsolationForest;
  EXPECT_THROW(train_model(data, cfg), DataError);
}

TEST(Train, NonFiniteInputRejected) {
  auto data = uniform_data(16, 120, 92);
  data(3, 7) = std::nan("");
  EXPECT_THROW(train_ae(data, small_config(1)), DataError);
}

TEST(Train, NonFiniteLossAborts) {
  const FeatureMatrix data = uniform_data(16, 120, 93) * 1e300;
  EXPECT_THROW(train_ae(data, small_config(1)), TrainingError);
}

TEST(Score, PureAndWidthChecked) {
  const auto data = low_rank_data(16, 150, 101);
  ModelConfig cfg;
  cfg.type = ModelType::Vae;
  cfg.train = small_config(3);
  const auto trained = train_model(data, cfg);
  const auto x = column(data, 4);
  EXPECT_EQ(trained.model->score(x), trained.model->score(x));
  EXPECT_GE(trained.model->score(x), 0.0);
  EXPECT_THROW(trained.model->score(std::vector<double>(15, 0.0)), std::invalid_argument);
}

TEST(Score, PerfectReconstructionIsZero) {
  DenseLayer identity{Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2), Activation::Linear};
  const AutoencoderModel model(ModelType::Ae, DenseNetwork({identity}));
  EXPECT_EQ(model.score(std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(Score, UnknownChannelScoresAboveBenignMedian) {
  // Slots 0..2 carry benign structure; slot 3 (the unknown slot) is always empty in training.
  const std::size_t width = 16;
  auto train = low_rank_data(width, 400, 111);
  train.bottomRows(4).setZero();
  auto probe = low_rank_data(width, 100, 112);
  probe.bottomRows(4).setZero();
  auto injected = probe;
  injected.row(12).setConstant(0.625);
  injected.row(13).setConstant(0.7);
  injected.row(14).setConstant(0.5);
  injected.row(15).setConstant(0.6);
  for (auto type : {ModelType::Ae, ModelType::Dae, ModelType::Vae}) {
    ModelConfig cfg;
    cfg.type = type;
    cfg.train = small_config(30);
    const auto model = train_model(train, cfg).model;
    auto benign = model->score_all(probe);
    std::nth_element(benign.begin(), benign.begin() + 50, benign.end());
    const double median = benign[50];
    for (double s : model->score_all(injected)) EXPECT_GT(s, median) << to_string(type);
  }
}

class ColumnZeroModel final : public AnomalyModel {
 public:
  ModelType type() const override { return ModelType::Ae; }
  std::size_t input_width() const override { return 1; }
  double score(std::span<const double> x) const override { return x[0]; }
  void serialize(std::vector<std::uint8_t>&) const override {}
};

TEST(Threshold, PercentileExamples) {
  std::vector<double> ramp(1000);
  for (int i = 0; i < 1000; ++i) ramp[i] = i + 1;
  EXPECT_NEAR(percentile(ramp, 99.9), 999.001, 1e-9);
  EXPECT_EQ(percentile(std::vector<double>(200, 0.37), 99.9), 0.37);
  EXPECT_EQ(percentile({5.0, 1.0}, 0.0), 1.0);
  EXPECT_EQ(percentile({5.0, 1.0}, 100.0), 5.0);
}

TEST(Threshold, FitOnRampAndConstant) {
  FeatureMatrix ramp(1, 1000);
  for (int i = 0; i < 1000; ++i) ramp(0, i) = 1000 - i;
  const auto t = fit_threshold(ColumnZeroModel{}, ramp);
  EXPECT_NEAR(t.tau, 999.001, 1e-9);
  EXPECT_EQ(t.fitted_on, 1000u);
  EXPECT_EQ(t.percentile, 99.9);
  const FeatureMatrix flat = FeatureMatrix::Constant(1, 150, 0.25);
  EXPECT_EQ(fit_threshold(ColumnZeroModel{}, flat).tau, 0.25);
  EXPECT_THROW(fit_threshold(ColumnZeroModel{}, FeatureMatrix::Zero(1, 99)), DataError);
}

TEST(Threshold, CalibrationBound) {
  std::mt19937_64 g(121);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = std::uniform_int_distribution<int>(100, 5000)(g);
    FeatureMatrix scores(1, n);
    std::lognormal_distribution<double> dist(0.0, 1.5);
    for (int i = 0; i < n; ++i) scores(0, i) = dist(g);
    if (trial % 4 == 0) scores.rightCols(n / 2).setConstant(1.0);
    const double tau = fit_threshold(ColumnZeroModel{}, scores).tau;
    EXPECT_GE(tau, 0.0);
    const auto above = (scores.array() > tau).count();
    EXPECT_LE(static_cast<double>(above) / n, 0.001 + 1.0 / n);
  }
}

std::vector<std::vector<double>> as_points(const FeatureMatrix& m) {
  std::vector<std::vector<double>> points;
  for (Eigen::Index j = 0; j < m.cols(); ++j) points.push_back(column(m, j));
  return points;
}

TEST(Forest, MatchesBruteForceConstruction) {
  std::mt19937_64 g(131);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto n = std::uniform_int_distribution<std::size_t>(2, 64)(g);
    const auto width = std::uniform_int_distribution<std::size_t>(1, 5)(g);
    FeatureMatrix data(width, n);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      // Coarse values so ties and constant attributes occur.
      data.data()[i] = std::uniform_int_distribution<int>(0, 6)(g) / 6.0;
    }
    const auto psi = std::uniform_int_distribution<std::size_t>(1, n)(g);
    const auto trees = std::uniform_int_distribution<std::size_t>(1, 4)(g);
    const auto forest = train_iforest(data, trees, psi, seed);
    const auto points = as_points(data);
    const oracle::BruteForest brute(points, trees, psi, seed);
    for (const auto& x : points) EXPECT_EQ(forest.score(x), brute.score(x)) << "seed " << seed;
    const std::vector<double> outside(width, 2.0);
    EXPECT_EQ(forest.score(outside), brute.score(outside)) << "seed " << seed;
  }
}

TEST(Forest, NormalizerMatchesHarmonicSeries) {
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  for (std::size_t n : {3u, 10u, 256u}) {
    EXPECT_DOUBLE_EQ(average_path_length(n), oracle::BruteForest::normalizer(n));
  }
}

TEST(Forest, RepeatedPointScoresIdentically) {
  const FeatureMatrix data = FeatureMatrix::Constant(3, 50, 0.4);
  const auto forest = train_iforest(data, 20, 32, 7);
  const double s = forest.score(column(data, 0));
  for (Eigen::Index j = 1; j < data.cols(); ++j) EXPECT_EQ(forest.score(column(data, j)), s);
  for (const auto& tree : forest.trees()) EXPECT_EQ(tree.nodes.size(), 1u);
}

TEST(Forest, OutlierHasMaximalScore) {
  Rng rng(141);
  FeatureMatrix data(2, 60);
  for (Eigen::Index j = 0; j < 59; ++j) {
    data(0, j) = rng.normal(0.0, 0.05);
    data(1, j) = rng.normal(0.0, 0.05);
  }
  data(0, 59) = 3.0;
  data(1, 59) = 3.0;
  const auto forest = train_iforest(data, 100, 60, 5);
  double best = 0.0;
  Eigen::Index arg = -1;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double s = forest.score(column(data, j));
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    if (s > best) {
      best = s;
      arg = j;
    }
  }
  EXPECT_EQ(arg, 59);
}

TEST(Forest, StructuralInvariants) {
  const auto data = uniform_data(6, 500, 151);
  const auto forest = train_iforest(data, 30, 256, 9);
  EXPECT_EQ(forest.tree_count(), 30u);
  for (const auto& tree : forest.trees()) {
    EXPECT_LE(tree.height(), 8u);
    EXPECT_EQ(tree.nodes[0].size, 256u);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      EXPECT_EQ(tree.nodes[node.left].size + tree.nodes[node.right].size, node.size);
      EXPECT_GE(node.split, data.row(node.attribute).minCoeff());
      EXPECT_LE(node.split, data.row(node.attribute).maxCoeff());
    }
  }
}

TEST(Forest, SubsampleLimits) {
  const auto data = uniform_data(2, 10, 161);
  EXPECT_THROW(train_iforest(data, 5, 11, 1), DataError);
  EXPECT_THROW(train_iforest(data, 5, 0, 1), DataError);
  ModelConfig cfg;
  cfg.type = ModelType::IsolationForest;
  cfg.train.min_samples = 1;
  const auto trained = train_model(data, cfg);
  const auto* model = dynamic_cast<const IsolationForestModel*>(trained.model.get());
  ASSERT_NE(model, nullptr);
  EXPECT_EQ(model->forest().subsample_size(), 10u);
}

CellRegistry registry_of_width(std::size_t width) {
  std::vector<CellIdentity> cells;
  for (std::size_t i = 0; i + 1 < width / 4; ++i) cells.push_back({100, static_cast<std::uint16_t>(i), Rat::Nr});
  return CellRegistry(cells);
}

TEST(Bundle, RoundTripEveryModelType) {
  const auto data = low_rank_data(16, 150, 171);
  for (auto type : {ModelType::Ae, ModelType::Dae, ModelType::Vae, ModelType::IsolationForest}) {
    ModelConfig cfg;
    cfg.type = type;
    cfg.train = small_config(2);
    cfg.tree_count = 10;
    const auto model = train_model(data, cfg).model;
    const ModelBundle bundle{registry_of_width(16), model, fit_threshold(*model, data)};
    const auto bytes = serialize_bundle(bundle);
    const auto back = deserialize_bundle(bytes);
    EXPECT_EQ(back.registry, bundle.registry);
    EXPECT_EQ(back.model->type(), type);
    EXPECT_EQ(back.threshold.tau, bundle.threshold.tau);
    EXPECT_EQ(back.threshold.fitted_on, 150u);
    for (Eigen::Index j = 0; j < 20; ++j) EXPECT_EQ(back.model->score(column(data, j)), model->score(column(data, j)));
    EXPECT_EQ(serialize_bundle(back), bytes);
  }
}

TEST(Bundle, CorruptInputRejected) {
  const auto data = low_rank_data(16, 150, 181);
  ModelConfig cfg;
  cfg.type = ModelType::Vae;
  cfg.train = small_config(1);
  const auto model = train_model(data, cfg).model;
  const auto bytes = serialize_bundle({registry_of_width(16), model, fit_threshold(*model, data)});
  for (std::size_t cut = 0; cut < bytes.size(); cut += 7) {
    EXPECT_THROW(deserialize_bundle(std::span(bytes).first(cut)), DataError) << cut;
  }
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_bundle(bad), DataError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(deserialize_bundle(bad), DataError);
  EXPECT_THROW(deserialize_bundle(serialize_bundle({registry_of_width(20), model, {}})), DataError);

  std::mt19937_64 g(182);
  for (int i = 0; i < 2000; ++i) {
    bad = bytes;
    bad[std::uniform_int_distribution<std::size_t>(0, bad.size() - 1)(g)] = static_cast<std::uint8_t>(g());
    try {
      const auto b = deserialize_bundle(bad);
      EXPECT_EQ(b.model->input_width(), b.registry.feature_width());
    } catch (const DataError&) {
    }
  }
}

TEST(ModelType, Parsing) {
  EXPECT_EQ(parse_model_type("ae"), ModelType::Ae);
  EXPECT_EQ(parse_model_type("dae"), ModelType::Dae);
  EXPECT_EQ(parse_model_type("vae"), ModelType::Vae);
  EXPECT_EQ(parse_model_type("iforest"), ModelType::IsolationForest);
  EXPECT_FALSE(parse_model_type("svm"));
  EXPECT_EQ(to_string(ModelType::IsolationForest), "iforest");
}

}  // namespace
}  // namespace argos::models
