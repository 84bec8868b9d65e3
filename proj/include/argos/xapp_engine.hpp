#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "argos/core_types.hpp"
#include "argos/e2_node.hpp"
#include "argos/kpm_codec.hpp"
#include "argos/models/anomaly_model.hpp"
#include "argos/transport.hpp"

namespace argos {

enum class Decision : std::uint8_t { Legitimate, Anomaly, Warmup };

std::string_view to_string(Decision decision);

struct Verdict {
  std::string ue_id;
  std::int64_t second_index = 0;
  double alpha = 0.0;  // NaN while warming up
  double tau = 0.0;    // NaN while warming up
  std::uint64_t generation = 0;
  Decision decision = Decision::Warmup;

  bool operator==(const Verdict&) const = default;
};

// "ue_id,second_index,alpha,tau,generation,decision"; NaN prints as NA.
std::string format_verdict(const Verdict& verdict);

struct BufferedSecond {
  std::int64_t second_index = 0;
  std::vector<CellMeasurement> measurements;
  bool flagged = false;
};

// Fixed-capacity ring of per-second measurement batches for one UE.
class UeBuffer {
 public:
  explicit UeBuffer(std::string ue_id, std::size_t capacity = 120);

  const std::string& ue_id() const { return ue_id_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t new_seconds() const { return new_seconds_; }
  const std::deque<BufferedSecond>& entries() const { return entries_; }

  void push(BufferedSecond second);
  void mark_flagged(std::int64_t second_index);
  void reset_new_seconds() { new_seconds_ = 0; }

 private:
  std::string ue_id_;
  std::size_t capacity_;
  std::deque<BufferedSecond> entries_;
  std::size_t new_seconds_ = 0;
};

// The unit that is swapped on retrain: registry, model and threshold always
// travel together under one generation number.
struct ModelSnapshot {
  CellRegistry registry;
  std::shared_ptr<const models::AnomalyModel> model;
  models::Threshold threshold;
  std::uint64_t generation = 0;
};

using Trainer = std::function<models::TrainedModel(const models::FeatureMatrix&, const models::ModelConfig&)>;

struct EngineConfig {
  models::ModelConfig model;
  std::size_t buffer_capacity = 120;
  std::size_t retrain_new_seconds = 10;  // summed over all UEs
  bool retraining_enabled = true;
  // Off by default: the union of all buffered seconds is used as-is.
  bool exclude_flagged = false;
  // Train on a worker thread; scoring continues on the old snapshot meanwhile.
  bool async_retrain = false;
  std::uint32_t subscription_id = 1;
};

struct EngineCounters {
  std::uint64_t indications = 0;
  std::uint64_t unknown_subscription = 0;
  std::uint64_t deferred = 0;
  std::uint64_t retrains = 0;
  std::uint64_t retrain_failures = 0;
};

class XappEngine {
 public:
  using VerdictSink = std::function<void(const Verdict&)>;
  using SwapObserver = std::function<void(const ModelSnapshot&)>;

  // Bootstrap mode: verdicts are WARMUP until the first successful retrain.
  explicit XappEngine(EngineConfig config, Trainer trainer = {});
  // Pretrained mode: starts at generation 1 with the bundle's model.
  XappEngine(EngineConfig config, const models::ModelBundle& bundle, Trainer trainer = {});
  ~XappEngine();

  XappEngine(const XappEngine&) = delete;
  XappEngine& operator=(const XappEngine&) = delete;

  const EngineConfig& config() const { return config_; }
  void set_verdict_sink(VerdictSink sink);
  void set_swap_observer(SwapObserver observer);

  // Buffers and scores one second. Returns the verdict for this indication
  // unless it was dropped or deferred. Deferred verdicts and the returned one
  // are also delivered to the sink, in per-UE order.
  std::optional<Verdict> on_indication(const kpm::RicIndication& indication);

  // Retrains when the summed new seconds reach the trigger. Returns the new
  // generation on a successful synchronous swap.
  std::optional<std::uint64_t> maybe_retrain();
  // Blocks until an in-flight asynchronous retrain has finished.
  void wait_for_retrain();

  std::shared_ptr<const ModelSnapshot> snapshot() const;
  std::uint64_t generation() const;
  EngineCounters counters() const;
  std::string last_retrain_error() const;
  std::size_t pending_new_seconds() const;
  const UeBuffer* buffer(const std::string& ue_id) const;
  // The seconds the next retrain would train on.
  std::vector<BufferedSecond> training_union() const;

  void freeze_retraining(bool frozen);
  // Indications are accepted only for registered subscription ids. The
  // configured id is registered at construction.
  void add_subscription(std::uint32_t subscription_id);

 private:
  struct PendingVerdict {
    std::int64_t second_index;
    std::vector<CellMeasurement> measurements;
  };

  static Verdict score_second(const ModelSnapshot* snap, const std::string& ue_id, std::int64_t second,
                              const std::vector<CellMeasurement>& measurements);
  static bool can_score(const ModelSnapshot* snap);
  std::vector<BufferedSecond> collect_locked() const;
  std::shared_ptr<const ModelSnapshot> build_snapshot(const std::vector<BufferedSecond>& data,
                                                      const CellRegistry& previous, std::uint64_t generation);
  void install(std::shared_ptr<const ModelSnapshot> snap);

  EngineConfig config_;
  Trainer trainer_;
  VerdictSink sink_;
  SwapObserver observer_;

  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const ModelSnapshot> snapshot_;

  mutable std::mutex state_mutex_;
  std::set<std::uint32_t> subscriptions_;
  std::map<std::string, UeBuffer> buffers_;
  std::map<std::string, std::deque<PendingVerdict>> deferred_;
  EngineCounters counters_;
  std::string last_error_;
  bool frozen_ = false;

  std::mutex retrain_mutex_;
  std::thread worker_;
  bool retrain_in_flight_ = false;
};

enum class EngineMode { Bootstrap, Pretrained };

struct RunOptions {
  int max_reconnects = 5;
  int reconnect_delay_ms = 200;
};

struct RunResult {
  std::uint64_t verdicts = 0;
  int reconnects = 0;
};

// Setup and subscription handshake followed by the indication loop until the
// node ends the stream. Link loss triggers reconnection with resubscription;
// buffers survive. Throws TransportError once reconnects are exhausted.
RunResult run_xapp(XappEngine& engine, const Connector& connect, const RunOptions& options = {});

// Node side: replays a report stream through an E2Node across one or more
// sessions. An indication is discarded only after it was sent.
class NodeFeed {
 public:
  NodeFeed(E2Node& node, std::span<const MeasurementReport> reports) : node_(node), reports_(reports) {}

  // Handshake, then stream until the reports are exhausted; closes the
  // transport at the end. Throws TransportError on link loss, after which
  // serve may be called again on a fresh transport.
  void serve(Transport& transport);
  bool finished() const { return done_; }
  std::uint64_t indications_sent() const { return sent_; }

 private:
  void handshake(Transport& transport);

  E2Node& node_;
  std::span<const MeasurementReport> reports_;
  std::size_t cursor_ = 0;
  std::deque<kpm::RicIndication> pending_;
  bool flushed_ = false;
  bool done_ = false;
  std::uint64_t sent_ = 0;
};

}  // namespace argos
