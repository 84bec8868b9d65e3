#include "argos/xapp_engine.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>

#include "argos/errors.hpp"
#include "argos/stream_csv.hpp"

namespace argos {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double value) { return std::isnan(value) ? "NA" : format_double(value); }

}  // namespace

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::Legitimate:
      return "LEGITIMATE";
    case Decision::Anomaly:
      return "ANOMALY";
    case Decision::Warmup:
      return "WARMUP";
  }
  return "?";
}

std::string format_verdict(const Verdict& v) {
  std::string line = v.ue_id;
  line += ',';
  line += std::to_string(v.second_index);
  line += ',';
  line += format_number(v.alpha);
  line += ',';
  line += format_number(v.tau);
  line += ',';
  line += std::to_string(v.generation);
  line += ',';
  line += to_string(v.decision);
  return line;
}

UeBuffer::UeBuffer(std::string ue_id, std::size_t capacity) : ue_id_(std::move(ue_id)), capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("UeBuffer capacity must be positive");
}

void UeBuffer::push(BufferedSecond second) {
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(std::move(second));
  ++new_seconds_;
}

void UeBuffer::mark_flagged(std::int64_t second_index) {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->second_index == second_index) {
      it->flagged = true;
      return;
    }
  }
}

XappEngine::XappEngine(EngineConfig config, Trainer trainer)
    : config_(std::move(config)), trainer_(std::move(trainer)) {
  if (!trainer_) trainer_ = models::train_model;
  subscriptions_.insert(config_.subscription_id);
}

XappEngine::XappEngine(EngineConfig config, const models::ModelBundle& bundle, Trainer trainer)
    : XappEngine(std::move(config), std::move(trainer)) {
  if (!bundle.model) throw std::invalid_argument("pretrained mode needs a model");
  auto snap = std::make_shared<ModelSnapshot>();
  snap->registry = bundle.registry;
  snap->model = bundle.model;
  snap->threshold = bundle.threshold;
  snap->generation = 1;
  snapshot_ = std::move(snap);
}

XappEngine::~XappEngine() { wait_for_retrain(); }

void XappEngine::set_verdict_sink(VerdictSink sink) {
  std::lock_guard lock(state_mutex_);
  sink_ = std::move(sink);
}

void XappEngine::set_swap_observer(SwapObserver observer) {
  std::lock_guard lock(state_mutex_);
  observer_ = std::move(observer);
}

void XappEngine::add_subscription(std::uint32_t subscription_id) {
  std::lock_guard lock(state_mutex_);
  subscriptions_.insert(subscription_id);
}

void XappEngine::freeze_retraining(bool frozen) {
  std::lock_guard lock(state_mutex_);
  frozen_ = frozen;
}

std::shared_ptr<const ModelSnapshot> XappEngine::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::uint64_t XappEngine::generation() const {
  const auto snap = snapshot();
  return snap ? snap->generation : 0;
}

EngineCounters XappEngine::counters() const {
  std::lock_guard lock(state_mutex_);
  return counters_;
}

std::string XappEngine::last_retrain_error() const {
  std::lock_guard lock(state_mutex_);
  return last_error_;
}

std::size_t XappEngine::pending_new_seconds() const {
  std::lock_guard lock(state_mutex_);
  std::size_t total = 0;
  for (const auto& [ue, buffer] : buffers_) total += buffer.new_seconds();
  return total;
}

const UeBuffer* XappEngine::buffer(const std::string& ue_id) const {
  std::lock_guard lock(state_mutex_);
  const auto it = buffers_.find(ue_id);
  return it == buffers_.end() ? nullptr : &it->second;
}

std::vector<BufferedSecond> XappEngine::training_union() const {
  std::lock_guard lock(state_mutex_);
  return collect_locked();
}

std::vector<BufferedSecond> XappEngine::collect_locked() const {
  std::vector<BufferedSecond> data;
  for (const auto& [ue, buffer] : buffers_) {
    for (const auto& entry : buffer.entries()) {
      if (config_.exclude_flagged && entry.flagged) continue;
      data.push_back(entry);
    }
  }
  return data;
}

bool XappEngine::can_score(const ModelSnapshot* snap) {
  return snap != nullptr && snap->model && snap->model->input_width() == snap->registry.feature_width();
}

Verdict XappEngine::score_second(const ModelSnapshot* snap, const std::string& ue_id, std::int64_t second,
                                 const std::vector<CellMeasurement>& measurements) {
  const TelemetryVector vec = encode_second(ue_id, second, measurements, snap->registry);
  Verdict v;
  v.ue_id = ue_id;
  v.second_index = second;
  v.alpha = snap->model->score(vec.features);
  v.tau = snap->threshold.tau;
  v.generation = snap->generation;
  v.decision = v.alpha > v.tau ? Decision::Anomaly : Decision::Legitimate;
  return v;
}

std::optional<Verdict> XappEngine::on_indication(const kpm::RicIndication& indication) {
  std::lock_guard lock(state_mutex_);
  if (!subscriptions_.contains(indication.subscription_id)) {
    ++counters_.unknown_subscription;
    return std::nullopt;
  }
  ++counters_.indications;

  const auto second = static_cast<std::int64_t>(indication.second_index);
  BufferedSecond entry;
  entry.second_index = second;
  entry.measurements.reserve(indication.measurements.size());
  for (const auto& wire : indication.measurements) {
    CellMeasurement m = kpm::from_wire(wire);
    // The node windows by second, so anything else is a malformed indication.
    if (m.second() == second) entry.measurements.push_back(m);
  }

  auto [it, inserted] = buffers_.try_emplace(indication.ue_id, indication.ue_id, config_.buffer_capacity);
  UeBuffer& buffer = it->second;
  buffer.push(entry);

  const auto snap = snapshot();
  if (!snap) {
    Verdict warmup{indication.ue_id, second, kNaN, kNaN, 0, Decision::Warmup};
    if (sink_) sink_(warmup);
    return warmup;
  }

  auto& pending = deferred_[indication.ue_id];
  if (!pending.empty() || !can_score(snap.get())) {
    pending.push_back({second, std::move(entry.measurements)});
    ++counters_.deferred;
    return std::nullopt;
  }

  Verdict verdict = score_second(snap.get(), indication.ue_id, second, entry.measurements);
  if (verdict.decision == Decision::Anomaly) buffer.mark_flagged(second);
  if (sink_) sink_(verdict);
  return verdict;
}

std::shared_ptr<const ModelSnapshot> XappEngine::build_snapshot(const std::vector<BufferedSecond>& data,
                                                                const CellRegistry& previous,
                                                                std::uint64_t generation) {
  try {
    std::set<CellIdentity> cells(previous.cells().begin(), previous.cells().end());
    for (const auto& entry : data) {
      for (const auto& m : entry.measurements) cells.insert(m.cell);
    }
    CellRegistry registry(std::vector<CellIdentity>(cells.begin(), cells.end()));

    std::vector<TelemetryVector> vectors;
    vectors.reserve(data.size());
    for (const auto& entry : data) vectors.push_back(encode_second("", entry.second_index, entry.measurements, registry));
    const models::FeatureMatrix matrix = models::to_matrix(vectors);

    models::ModelConfig cfg = config_.model;
    cfg.train.seed = config_.model.train.seed + generation;
    auto trained = trainer_(matrix, cfg);
    if (!trained.model) throw TrainingError("trainer returned no model");

    auto snap = std::make_shared<ModelSnapshot>();
    snap->threshold = models::fit_threshold(*trained.model, matrix);
    snap->registry = std::move(registry);
    snap->model = std::move(trained.model);
    snap->generation = generation;
    return snap;
  } catch (const std::exception& e) {
    std::lock_guard lock(state_mutex_);
    ++counters_.retrain_failures;
    last_error_ = e.what();
    std::cerr << "retrain for generation " << generation << " failed: " << e.what() << "\n";
    return nullptr;
  }
}

void XappEngine::install(std::shared_ptr<const ModelSnapshot> snap) {
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = snap;
  }
  std::lock_guard lock(state_mutex_);
  ++counters_.retrains;
  if (observer_) observer_(*snap);
  if (!can_score(snap.get())) return;
  for (auto& [ue_id, pending] : deferred_) {
    while (!pending.empty()) {
      const auto& p = pending.front();
      Verdict verdict = score_second(snap.get(), ue_id, p.second_index, p.measurements);
      if (verdict.decision == Decision::Anomaly) {
        if (auto it = buffers_.find(ue_id); it != buffers_.end()) it->second.mark_flagged(p.second_index);
      }
      if (sink_) sink_(verdict);
      pending.pop_front();
    }
  }
}

std::optional<std::uint64_t> XappEngine::maybe_retrain() {
  std::unique_lock flight(retrain_mutex_, std::defer_lock);
  if (config_.async_retrain) {
    flight.lock();
    // Counters stay untouched while a retrain runs so the trigger carries over.
    if (retrain_in_flight_) return std::nullopt;
  }

  std::vector<BufferedSecond> data;
  {
    std::lock_guard lock(state_mutex_);
    if (!config_.retraining_enabled || frozen_) return std::nullopt;
    std::size_t total = 0;
    for (const auto& [ue, buffer] : buffers_) total += buffer.new_seconds();
    if (total < config_.retrain_new_seconds) return std::nullopt;
    data = collect_locked();
    for (auto& [ue, buffer] : buffers_) buffer.reset_new_seconds();
  }

  const auto current = snapshot();
  const CellRegistry previous = current ? current->registry : CellRegistry{};
  const std::uint64_t next = (current ? current->generation : 0) + 1;

  if (!config_.async_retrain) {
    auto snap = build_snapshot(data, previous, next);
    if (!snap) return std::nullopt;
    install(std::move(snap));
    return next;
  }

  if (worker_.joinable()) worker_.join();
  retrain_in_flight_ = true;
  worker_ = std::thread([this, data = std::move(data), previous, next]() {
    auto snap = build_snapshot(data, previous, next);
    if (snap) install(std::move(snap));
    std::lock_guard done(retrain_mutex_);
    retrain_in_flight_ = false;
  });
  return std::nullopt;
}

void XappEngine::wait_for_retrain() {
  std::thread worker;
  {
    std::lock_guard lock(retrain_mutex_);
    worker = std::move(worker_);
  }
  if (worker.joinable()) worker.join();
}

RunResult run_xapp(XappEngine& engine, const Connector& connect, const RunOptions& options) {
  RunResult result;
  std::uint32_t subscription_id = engine.config().subscription_id;
  while (true) {
    try {
      auto transport = connect();
      auto first = transport->receive();
      if (!first || !std::holds_alternative<kpm::SetupRequest>(*first)) {
        throw TransportError("expected SetupRequest from the E2 node");
      }
      transport->send(kpm::SetupResponse{true});
      transport->send(kpm::SubscriptionRequest{subscription_id, 1000});
      auto reply = transport->receive();
      const auto* response = reply ? std::get_if<kpm::SubscriptionResponse>(&*reply) : nullptr;
      if (response == nullptr || response->subscription_id != subscription_id || !response->accepted) {
        throw TransportError("subscription " + std::to_string(subscription_id) + " was not accepted");
      }
      engine.add_subscription(subscription_id);

      while (auto message = transport->receive()) {
        if (const auto* ind = std::get_if<kpm::RicIndication>(&*message)) {
          if (engine.on_indication(*ind)) ++result.verdicts;
          engine.maybe_retrain();
        }
      }
      engine.wait_for_retrain();
      return result;
    } catch (const TransportError& e) {
      if (result.reconnects >= options.max_reconnects) throw;
      ++result.reconnects;
      std::cerr << "transport lost (" << e.what() << "), reconnecting\n";
      std::this_thread::sleep_for(std::chrono::milliseconds(options.reconnect_delay_ms));
      ++subscription_id;
    }
  }
}

void NodeFeed::handshake(Transport& transport) {
  transport.send(node_.setup_request());
  auto response = transport.receive();
  const auto* setup = response ? std::get_if<kpm::SetupResponse>(&*response) : nullptr;
  if (setup == nullptr) throw TransportError("expected SetupResponse from the xApp");
  node_.on_setup_response(*setup);
  auto request = transport.receive();
  const auto* sub = request ? std::get_if<kpm::SubscriptionRequest>(&*request) : nullptr;
  if (sub == nullptr) throw TransportError("expected SubscriptionRequest from the xApp");
  const auto answer = node_.handle_subscription(*sub);
  transport.send(answer);
  if (!answer.accepted) throw TransportError("subscription rejected");
}

void NodeFeed::serve(Transport& transport) {
  handshake(transport);
  while (true) {
    while (!pending_.empty()) {
      transport.send(pending_.front());
      pending_.pop_front();
      ++sent_;
    }
    if (cursor_ < reports_.size()) {
      for (auto& ind : node_.on_report(reports_[cursor_++])) pending_.push_back(std::move(ind));
      continue;
    }
    if (!flushed_) {
      for (auto& ind : node_.flush_all()) pending_.push_back(std::move(ind));
      flushed_ = true;
      continue;
    }
    done_ = true;
    transport.close();
    return;
  }
}

}  // namespace argos
