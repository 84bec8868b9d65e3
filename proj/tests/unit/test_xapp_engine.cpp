#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <queue>
#include <thread>

#include "argos/errors.hpp"
#include "argos/eval_harness.hpp"
#include "argos/xapp_engine.hpp"
#include "fixtures.hpp"

namespace argos {
namespace {

using fixture::meas;
using fixture::nr;

// Scores every vector with a fixed function of its features.
class StubModel final : public models::AnomalyModel {
 public:
  StubModel(std::size_t width, std::function<double(std::span<const double>)> fn)
      : width_(width), fn_(std::move(fn)) {}
  models::ModelType type() const override { return models::ModelType::Ae; }
  std::size_t input_width() const override { return width_; }
  double score(std::span<const double> x) const override {
    if (x.size() != width_) throw std::invalid_argument("stub: width mismatch");
    return fn_(x);
  }
  void serialize(std::vector<std::uint8_t>&) const override {}

 private:
  std::size_t width_;
  std::function<double(std::span<const double>)> fn_;
};

double feature_sum(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s;
}

models::TrainedModel stub_trainer(const models::FeatureMatrix& data, const models::ModelConfig&) {
  return {std::make_shared<StubModel>(static_cast<std::size_t>(data.rows()), feature_sum), {}};
}

const CellRegistry kRegistry({nr(10, 1), nr(10, 2)});

models::ModelBundle stub_bundle(double tau, std::function<double(std::span<const double>)> fn = feature_sum) {
  return {kRegistry, std::make_shared<StubModel>(kRegistry.feature_width(), std::move(fn)), {tau, 99.9, 100}};
}

kpm::RicIndication indication(const std::string& ue, std::uint32_t second, int count = 3,
                              CellIdentity cell = nr(10, 1), std::uint32_t sub = 1) {
  kpm::RicIndication ind;
  ind.subscription_id = sub;
  ind.ue_id = ue;
  ind.second_index = second;
  for (int i = 0; i < count; ++i) ind.measurements.push_back(kpm::to_wire(meas(cell, -90, second * 1000 + i * 200)));
  return ind;
}

EngineConfig config() {
  EngineConfig cfg;
  cfg.model.type = models::ModelType::Ae;
  return cfg;
}

TEST(Verdict, LineFormat) {
  Verdict v{"001010123456789", 42, 0.5, 0.25, 3, Decision::Anomaly};
  EXPECT_EQ(format_verdict(v), "001010123456789,42,0.5,0.25,3,ANOMALY");
  Verdict w{"u", 0, std::nan(""), std::nan(""), 0, Decision::Warmup};
  EXPECT_EQ(format_verdict(w), "u,0,NA,NA,0,WARMUP");
}

TEST(UeBuffer, EvictsOldestAtCapacity) {
  UeBuffer buffer("u", 3);
  for (int s = 0; s < 5; ++s) buffer.push({s, {}, false});
  ASSERT_EQ(buffer.size(), 3u);
  EXPECT_EQ(buffer.entries().front().second_index, 2);
  EXPECT_EQ(buffer.new_seconds(), 5u);
  buffer.mark_flagged(3);
  EXPECT_TRUE(buffer.entries()[1].flagged);
  buffer.reset_new_seconds();
  EXPECT_EQ(buffer.new_seconds(), 0u);
}

TEST(OnIndication, BelowThresholdIsLegitimate) {
  XappEngine engine(config(), stub_bundle(0.5, [](auto) { return 0.0; }));
  const auto v = engine.on_indication(indication("u", 0));
  ASSERT_TRUE(v);
  EXPECT_EQ(v->decision, Decision::Legitimate);
  EXPECT_EQ(v->generation, 1u);
}

TEST(OnIndication, AlphaEqualToTauIsLegitimate) {
  XappEngine engine(config(), stub_bundle(0.75, [](auto) { return 0.75; }));
  const auto v = engine.on_indication(indication("u", 0));
  ASSERT_TRUE(v);
  EXPECT_EQ(v->alpha, v->tau);
  EXPECT_EQ(v->decision, Decision::Legitimate);
  XappEngine above(config(), stub_bundle(0.75, [](auto) { return std::nextafter(0.75, 1.0); }));
  EXPECT_EQ(above.on_indication(indication("u", 0))->decision, Decision::Anomaly);
}

TEST(OnIndication, EmptySecondScoresZeroVector) {
  std::vector<double> seen;
  XappEngine engine(config(), stub_bundle(1.0, [&](std::span<const double> x) {
                      seen.assign(x.begin(), x.end());
                      return 0.0;
                    }));
  const auto v = engine.on_indication(indication("u", 7, 0));
  ASSERT_TRUE(v);
  EXPECT_EQ(seen, std::vector<double>(kRegistry.feature_width(), 0.0));
  EXPECT_EQ(v->second_index, 7);
}

TEST(OnIndication, UnknownSubscriptionDropped) {
  XappEngine engine(config(), stub_bundle(1.0));
  EXPECT_FALSE(engine.on_indication(indication("u", 0, 3, nr(10, 1), 9)));
  EXPECT_EQ(engine.counters().unknown_subscription, 1u);
  EXPECT_EQ(engine.buffer("u"), nullptr);
  engine.add_subscription(9);
  EXPECT_TRUE(engine.on_indication(indication("u", 0, 3, nr(10, 1), 9)));
}

TEST(OnIndication, SinkReceivesVerdictsInOrder) {
  XappEngine engine(config(), stub_bundle(1.0));
  std::vector<std::string> lines;
  engine.set_verdict_sink([&](const Verdict& v) { lines.push_back(format_verdict(v)); });
  for (std::uint32_t s = 0; s < 4; ++s) engine.on_indication(indication("u", s, static_cast<int>(s)));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].substr(0, 4), "u,0,");
  EXPECT_EQ(lines[3].substr(0, 4), "u,3,");
}

TEST(Bootstrap, WarmupUntilFirstModel) {
  auto cfg = config();
  XappEngine engine(cfg, stub_trainer);
  for (std::uint32_t s = 0; s < 5; ++s) {
    const auto v = engine.on_indication(indication("u", s));
    ASSERT_TRUE(v);
    EXPECT_EQ(v->decision, Decision::Warmup);
    EXPECT_EQ(v->generation, 0u);
    EXPECT_TRUE(std::isnan(v->alpha));
  }
  EXPECT_EQ(engine.generation(), 0u);
}

TEST(Retrain, NineSecondsDoNotTrigger) {
  int calls = 0;
  XappEngine engine(config(), stub_bundle(1.0), [&](const auto& d, const auto& c) {
    ++calls;
    return stub_trainer(d, c);
  });
  for (std::uint32_t s = 0; s < 5; ++s) engine.on_indication(indication("a", s));
  for (std::uint32_t s = 0; s < 4; ++s) engine.on_indication(indication("b", s));
  EXPECT_EQ(engine.pending_new_seconds(), 9u);
  EXPECT_FALSE(engine.maybe_retrain());
  EXPECT_EQ(calls, 0);
  engine.on_indication(indication("b", 4));
  engine.maybe_retrain();
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(engine.pending_new_seconds(), 0u);
}

TEST(Retrain, SummedSecondsSwapGeneration) {
  auto cfg = config();
  cfg.retraining_enabled = true;
  XappEngine engine(cfg, stub_bundle(1.0), stub_trainer);
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 50; ++s) {
    engine.on_indication(indication("a", s));
    engine.on_indication(indication("b", s));
  }
  EXPECT_FALSE(engine.maybe_retrain());
  engine.freeze_retraining(false);
  const auto gen = engine.maybe_retrain();
  ASSERT_TRUE(gen);
  EXPECT_EQ(*gen, 2u);
  EXPECT_EQ(engine.generation(), 2u);
  EXPECT_EQ(engine.counters().retrains, 1u);
  EXPECT_EQ(engine.snapshot()->threshold.fitted_on, 100u);
  for (std::uint32_t s = 50; s < 55; ++s) {
    engine.on_indication(indication("a", s));
    engine.on_indication(indication("b", s));
  }
  EXPECT_EQ(engine.maybe_retrain(), 3u);
}

TEST(Retrain, FailureKeepsPreviousSnapshot) {
  auto cfg = config();
  XappEngine engine(cfg, stub_bundle(1.0), stub_trainer);
  const auto before = engine.snapshot();
  for (std::uint32_t s = 0; s < 10; ++s) engine.on_indication(indication("a", s));
  // Ten vectors are too few for a threshold.
  EXPECT_FALSE(engine.maybe_retrain());
  EXPECT_EQ(engine.snapshot(), before);
  EXPECT_EQ(engine.counters().retrain_failures, 1u);
  EXPECT_NE(engine.last_retrain_error().find("100"), std::string::npos) << engine.last_retrain_error();
  EXPECT_EQ(engine.pending_new_seconds(), 0u);

  XappEngine throwing(cfg, stub_bundle(1.0), [](const auto&, const auto&) -> models::TrainedModel {
    throw TrainingError("loss became non-finite");
  });
  throwing.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 120; ++s) throwing.on_indication(indication("a", s));
  throwing.freeze_retraining(false);
  EXPECT_FALSE(throwing.maybe_retrain());
  EXPECT_EQ(throwing.generation(), 1u);
  EXPECT_EQ(throwing.last_retrain_error(), "loss became non-finite");
  EXPECT_EQ(throwing.on_indication(indication("a", 120))->generation, 1u);
}

TEST(Retrain, SeedRegistryAndUnion) {
  auto cfg = config();
  cfg.model.train.seed = 100;
  std::vector<std::uint64_t> seeds;
  std::vector<Eigen::Index> widths;
  XappEngine engine(cfg, stub_bundle(1.0), [&](const auto& d, const auto& c) {
    seeds.push_back(c.train.seed);
    widths.push_back(d.rows());
    return stub_trainer(d, c);
  });
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 110; ++s) engine.on_indication(indication("a", s, 2, s < 100 ? nr(10, 1) : nr(20, 5)));
  engine.freeze_retraining(false);
  ASSERT_EQ(engine.maybe_retrain(), 2u);
  EXPECT_EQ(seeds, std::vector<std::uint64_t>{102});
  // Previous registry {10/1, 10/2} plus the new cell 20/5.
  EXPECT_EQ(engine.snapshot()->registry.size(), 3u);
  EXPECT_EQ(widths.back(), 16);
  EXPECT_EQ(engine.training_union().size(), 110u);
}

TEST(Retrain, FlaggedSecondsEnterTrainingByDefault) {
  auto cfg = config();
  XappEngine engine(cfg, stub_bundle(0.2), stub_trainer);
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 20; ++s) engine.on_indication(indication("a", s, s % 4 == 0 ? 8 : 0));
  const auto data = engine.training_union();
  ASSERT_EQ(data.size(), 20u);
  std::size_t flagged = 0;
  for (const auto& entry : data) flagged += entry.flagged;
  EXPECT_EQ(flagged, 5u);

  cfg.exclude_flagged = true;
  XappEngine careful(cfg, stub_bundle(0.2), stub_trainer);
  careful.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 20; ++s) careful.on_indication(indication("a", s, s % 4 == 0 ? 8 : 0));
  const auto kept = careful.training_union();
  EXPECT_EQ(kept.size(), 15u);
  for (const auto& entry : kept) EXPECT_FALSE(entry.flagged);
}

TEST(Retrain, VerdictsDuringAsyncRetrainKeepOldGeneration) {
  auto cfg = config();
  cfg.async_retrain = true;
  std::promise<void> release;
  auto gate = release.get_future().share();
  std::promise<void> started;
  XappEngine engine(cfg, stub_bundle(1e9), [&](const auto& d, const auto& c) {
    started.set_value();
    gate.wait();
    return stub_trainer(d, c);
  });
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 100; ++s) engine.on_indication(indication("a", s));
  engine.freeze_retraining(false);
  EXPECT_FALSE(engine.maybe_retrain());
  started.get_future().wait();
  for (std::uint32_t s = 100; s < 120; ++s) {
    const auto v = engine.on_indication(indication("a", s));
    ASSERT_TRUE(v);
    EXPECT_EQ(v->generation, 1u);
    EXPECT_EQ(v->tau, 1e9);
  }
  release.set_value();
  engine.wait_for_retrain();
  EXPECT_EQ(engine.generation(), 2u);
  const auto v = engine.on_indication(indication("a", 120));
  EXPECT_EQ(v->generation, 2u);
  EXPECT_EQ(v->tau, engine.snapshot()->threshold.tau);
}

TEST(Retrain, TriggerDuringAsyncRetrainCarriesOver) {
  auto cfg = config();
  cfg.async_retrain = true;
  std::promise<void> release;
  auto gate = release.get_future().share();
  std::promise<void> started;
  std::atomic<int> calls{0};
  XappEngine engine(cfg, stub_bundle(1e9), [&](const auto& d, const auto& c) {
    if (calls++ == 0) {
      started.set_value();
      gate.wait();
    }
    return stub_trainer(d, c);
  });
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 100; ++s) engine.on_indication(indication("a", s));
  engine.freeze_retraining(false);
  engine.maybe_retrain();
  started.get_future().wait();
  for (std::uint32_t s = 100; s < 110; ++s) engine.on_indication(indication("a", s));
  EXPECT_FALSE(engine.maybe_retrain());
  EXPECT_EQ(engine.pending_new_seconds(), 10u);
  release.set_value();
  engine.wait_for_retrain();
  EXPECT_EQ(engine.generation(), 2u);
  engine.maybe_retrain();
  engine.wait_for_retrain();
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(engine.generation(), 3u);
  EXPECT_EQ(engine.pending_new_seconds(), 0u);
}

TEST(Deferral, WidthMismatchQueuesUntilSwap) {
  // A model built for a different registry cannot score; verdicts wait for a consistent snapshot.
  models::ModelBundle skewed{kRegistry, std::make_shared<StubModel>(8, feature_sum), {1.0, 99.9, 100}};
  XappEngine engine(config(), skewed, stub_trainer);
  std::vector<Verdict> sunk;
  engine.set_verdict_sink([&](const Verdict& v) { sunk.push_back(v); });
  engine.freeze_retraining(true);
  for (std::uint32_t s = 0; s < 100; ++s) EXPECT_FALSE(engine.on_indication(indication("a", s)));
  EXPECT_EQ(engine.counters().deferred, 100u);
  EXPECT_TRUE(sunk.empty());
  engine.freeze_retraining(false);
  ASSERT_EQ(engine.maybe_retrain(), 2u);
  ASSERT_EQ(sunk.size(), 100u);
  for (std::uint32_t s = 0; s < 100; ++s) {
    EXPECT_EQ(sunk[s].second_index, s);
    EXPECT_EQ(sunk[s].generation, 2u);
  }
  EXPECT_TRUE(engine.on_indication(indication("a", 100)));
}

TEST(Bootstrap, TrainingFalsePositiveRateAfterFirstRetrain) {
  const auto scenario = fixture::small_scenario(80, 2);
  const auto stream = generate_stream(scenario, scenario.propagation);
  auto cfg = config();
  cfg.model.train.epochs = 20;
  cfg.model.train.hidden = 16;
  cfg.model.train.latent = 4;
  models::FeatureMatrix trained_on;
  XappEngine engine(cfg, [&](const models::FeatureMatrix& d, const models::ModelConfig& c) {
    trained_on = d;
    return models::train_model(d, c);
  });
  std::size_t warmups = 0;
  for (const auto& ind : eval::indications_for(stream)) {
    const auto v = engine.on_indication(ind);
    warmups += v && v->decision == Decision::Warmup;
    if (engine.maybe_retrain()) break;
  }
  ASSERT_EQ(engine.generation(), 1u);
  EXPECT_EQ(warmups, 100u);
  const auto snap = engine.snapshot();
  const auto scores = snap->model->score_all(trained_on);
  const auto above = std::count_if(scores.begin(), scores.end(), [&](double a) { return a > snap->threshold.tau; });
  const double n = static_cast<double>(scores.size());
  EXPECT_LE(above / n, 0.001 + 1.0 / n);
}

// Replays `reports` through a NodeFeed on a worker thread, one channel per connection.
class ChannelHarness {
 public:
  ChannelHarness(std::span<const MeasurementReport> reports, int sever_after_sends)
      : feed_(node_, reports), sever_after_(sever_after_sends) {
    worker_ = std::thread([this] { serve_loop(); });
  }
  ~ChannelHarness() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    ready_.notify_all();
    worker_.join();
  }

  Connector connector() {
    return [this]() -> std::unique_ptr<Transport> {
      auto [xapp_end, node_end] = make_channel();
      {
        std::lock_guard lock(mutex_);
        handoff_.push(std::move(node_end));
      }
      ready_.notify_all();
      ++connections;
      return std::move(xapp_end);
    };
  }

  const NodeFeed& feed() const { return feed_; }
  std::atomic<int> connections{0};

 private:
  // Forwards to a channel endpoint and severs the link once after a fixed number of sends.
  class Severing final : public Transport {
   public:
    Severing(ChannelEndpoint& inner, int& budget) : inner_(inner), budget_(budget) {}
    void send(const kpm::WireMessage& m) override {
      if (budget_ == 0) {
        budget_ = -1;
        inner_.sever();
      }
      inner_.send(m);
      if (budget_ > 0) --budget_;
    }
    std::optional<kpm::WireMessage> receive() override { return inner_.receive(); }
    void close() override { inner_.close(); }

   private:
    ChannelEndpoint& inner_;
    int& budget_;
  };

  void serve_loop() {
    while (true) {
      std::unique_ptr<ChannelEndpoint> endpoint;
      {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return stopping_ || !handoff_.empty(); });
        if (handoff_.empty()) return;
        endpoint = std::move(handoff_.front());
        handoff_.pop();
      }
      if (feed_.finished()) {
        endpoint->close();
        continue;
      }
      Severing link(*endpoint, sever_after_);
      try {
        feed_.serve(link);
      } catch (const TransportError&) {
      }
    }
  }

  E2Node node_;
  NodeFeed feed_;
  int sever_after_;
  std::mutex mutex_;
  std::condition_variable ready_;
  std::queue<std::unique_ptr<ChannelEndpoint>> handoff_;
  bool stopping_ = false;
  std::thread worker_;
};

models::ModelBundle pretrained(const ScenarioConfig& scenario, std::uint64_t seed_offset) {
  auto train_scenario = scenario;
  train_scenario.seed += seed_offset;
  train_scenario.duration_s = 300;
  const auto reports = generate_stream(train_scenario, train_scenario.propagation);
  const auto registry = build_registry(reports);
  const auto matrix = models::to_matrix(eval::encode_indications(eval::indications_for(reports), registry));
  models::ModelConfig cfg;
  cfg.type = models::ModelType::Ae;
  cfg.train.epochs = 30;
  const auto trained = models::train_model(matrix, cfg);
  return {registry, trained.model, models::fit_threshold(*trained.model, matrix)};
}

TEST(Run, BenignStreamGivesOneVerdictPerSecond) {
  const auto scenario = fixture::small_scenario(100, 2);
  const auto stream = generate_stream(scenario, scenario.propagation);
  auto cfg = config();
  cfg.retraining_enabled = false;
  XappEngine engine(cfg, pretrained(scenario, 1000));
  std::map<std::string, std::vector<std::int64_t>> seconds;
  engine.set_verdict_sink([&](const Verdict& v) { seconds[v.ue_id].push_back(v.second_index); });
  ChannelHarness harness(stream, -1);
  const auto result = run_xapp(engine, harness.connector(), {0, 0});
  EXPECT_EQ(result.reconnects, 0);
  EXPECT_EQ(result.verdicts, 200u);
  ASSERT_EQ(seconds.size(), 2u);
  for (const auto& [ue, list] : seconds) {
    ASSERT_EQ(list.size(), 100u) << ue;
    for (std::size_t i = 0; i < list.size(); ++i) EXPECT_EQ(list[i], static_cast<std::int64_t>(i));
  }
}

TEST(Run, ReconnectsAfterLinkLoss) {
  const auto scenario = fixture::small_scenario(60, 2);
  const auto stream = generate_stream(scenario, scenario.propagation);
  auto cfg = config();
  cfg.retraining_enabled = false;
  XappEngine engine(cfg, pretrained(scenario, 1000));
  std::map<std::string, std::vector<std::int64_t>> seconds;
  engine.set_verdict_sink([&](const Verdict& v) { seconds[v.ue_id].push_back(v.second_index); });
  ChannelHarness harness(stream, 40);
  const auto result = run_xapp(engine, harness.connector(), {3, 0});
  EXPECT_EQ(result.reconnects, 1);
  EXPECT_EQ(harness.connections.load(), 2);
  EXPECT_TRUE(harness.feed().finished());
  for (const auto& [ue, list] : seconds) {
    ASSERT_FALSE(list.empty());
    EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
    EXPECT_EQ(std::adjacent_find(list.begin(), list.end()), list.end()) << "duplicate second";
    EXPECT_EQ(list.back(), 59);
    // Buffers survive the reconnect.
    EXPECT_EQ(engine.buffer(ue)->size(), list.size());
  }
}

TEST(Run, GivesUpAfterMaxReconnects) {
  auto cfg = config();
  XappEngine engine(cfg, stub_bundle(1.0));
  int attempts = 0;
  const Connector refuse = [&]() -> std::unique_ptr<Transport> {
    ++attempts;
    throw TransportError("connection refused");
  };
  EXPECT_THROW(run_xapp(engine, refuse, {2, 0}), TransportError);
  EXPECT_EQ(attempts, 3);
}

TEST(Run, TcpLoopback) {
  const auto scenario = fixture::small_scenario(30, 2);
  const auto stream = generate_stream(scenario, scenario.propagation);
  TcpListener listener(Endpoint{"127.0.0.1", 0});
  ASSERT_GT(listener.port(), 0);
  std::thread node_thread([&] {
    E2Node node;
    NodeFeed feed(node, stream);
    auto link = listener.accept();
    feed.serve(*link);
  });
  auto cfg = config();
  cfg.retraining_enabled = false;
  XappEngine engine(cfg, pretrained(scenario, 1000));
  const Endpoint endpoint{"127.0.0.1", listener.port()};
  const auto result = run_xapp(engine, [&] { return tcp_connect(endpoint); });
  node_thread.join();
  EXPECT_EQ(result.verdicts, 60u);
  EXPECT_EQ(result.reconnects, 0);
}

TEST(Run, EndpointParsing) {
  const auto a = parse_endpoint("127.0.0.1:9000");
  EXPECT_EQ(a.host, "127.0.0.1");
  EXPECT_EQ(a.port, 9000);
  EXPECT_EQ(parse_endpoint(":7").port, 7);
  EXPECT_THROW(parse_endpoint("nope"), ConfigError);
  EXPECT_THROW(parse_endpoint("h:99999"), ConfigError);
}

TEST(Run, A1WindowConcentratesAnomalies) {
  const auto scenario = fixture::small_scenario(120, 2);
  const auto adversary = fixture::a1_near_center(50, 80);
  const auto stream = generate_stream(scenario, scenario.propagation, &adversary);
  auto cfg = config();
  cfg.retraining_enabled = false;
  XappEngine engine(cfg, pretrained(scenario, 1000));
  const auto counts = eval::rogue_counts(stream);
  std::size_t inside = 0, outside = 0, window_seconds = 0, caught = 0;
  for (const auto& ind : eval::indications_for(stream)) {
    const auto v = engine.on_indication(ind);
    ASSERT_TRUE(v);
    const bool in_window = v->second_index >= 50 && v->second_index < 80;
    const auto it = counts.find({v->ue_id, v->second_index});
    const bool heavy = it != counts.end() && it->second >= 3;
    if (v->decision == Decision::Anomaly) (in_window ? inside : outside) += 1;
    if (heavy) {
      ++window_seconds;
      caught += v->decision == Decision::Anomaly;
    }
  }
  EXPECT_GT(window_seconds, 40u);
  EXPECT_GE(caught, window_seconds * 9 / 10);
  EXPECT_GE(inside, 10 * outside);
}

}  // namespace
}  // namespace argos
