#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "argos/core_types.hpp"
#include "argos/kpm_codec.hpp"
#include "argos/models/anomaly_model.hpp"
#include "argos/radio_sim.hpp"
#include "argos/xapp_engine.hpp"

namespace argos::eval {

enum class AttackMode { A1, A2, Holdout };

std::string_view to_string(AttackMode mode);
std::optional<AttackMode> parse_attack_mode(std::string_view text);

// label = true (ANOMALOUS) iff rogue_count >= k.
std::vector<bool> label_seconds(std::span<const std::uint32_t> rogue_counts, std::uint32_t k);
std::vector<bool> label_seconds(std::span<const TelemetryVector> vectors, std::uint32_t k);

struct MetricReport {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  // nullopt where the denominator is zero (reported as NA).
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
  double train_time_s = 0.0;
  double infer_time_s = 0.0;
  double peak_memory_mb = 0.0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
};

// Throws std::invalid_argument on length mismatch or empty input.
MetricReport compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels);

struct ExperimentSpec {
  std::filesystem::path scenario;
  models::ModelType model = models::ModelType::Vae;
  AttackMode attack = AttackMode::A1;
  std::uint32_t k = 3;
  double split = 0.8;
  std::uint64_t seed = 1;
  std::optional<int> epochs;

  // Throws ConfigError.
  void validate() const;
};

// key = value lines: scenario, model, adversary, k, split, seed, epochs.
// A relative scenario path is resolved against `base_dir`.
ExperimentSpec parse_experiment_spec(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

// Every per-second indication the E2 node emits for `reports`, in emission order.
std::vector<kpm::RicIndication> indications_for(std::span<const MeasurementReport> reports);

// Per (ue, second) counts of rogue measurements, keyed the same way the node
// windows the stream.
struct SecondKey {
  std::string ue_id;
  std::int64_t second = 0;
  auto operator<=>(const SecondKey&) const = default;
};
std::map<SecondKey, std::uint32_t> rogue_counts(std::span<const MeasurementReport> reports);

// Encodes indications against `registry`, attaching rogue counts from `counts`.
std::vector<TelemetryVector> encode_indications(std::span<const kpm::RicIndication> indications,
                                                const CellRegistry& registry,
                                                const std::map<SecondKey, std::uint32_t>& counts = {});

struct ExperimentOutcome {
  MetricReport report;
  std::vector<Verdict> verdicts;
  std::vector<std::uint32_t> rogue_counts;  // aligned with verdicts
  models::TrainReport training;
  double tau = 0.0;
  std::size_t train_vectors = 0;
  std::size_t feature_width = 0;

  // Relabels the same predictions at a different k.
  MetricReport metrics_at(std::uint32_t k) const;
};

// Generates the stream, splits it, trains model and threshold on the training
// part, then runs the engine over the inference part with retraining frozen.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);
ExperimentOutcome run_experiment(const ExperimentSpec& spec, const ScenarioConfig& scenario);

// Deterministic columns only; timing and memory go through write_perf_csv.
void write_metrics_csv(std::ostream& out, const ExperimentSpec& spec, const MetricReport& report,
                       bool header = true);
void write_perf_csv(std::ostream& out, const ExperimentSpec& spec, const MetricReport& report, bool header = true);

struct SweepGrid {
  std::filesystem::path scenario;
  std::vector<models::ModelType> models;
  std::vector<std::uint32_t> ks;
  std::vector<AttackMode> attacks;
  double split = 0.8;
  std::uint64_t seed = 1;
  std::optional<int> epochs;
};

// key = value lines: scenario, models (comma list), k (comma list),
// adversary (comma list), split, seed, epochs.
SweepGrid parse_sweep_grid(std::string_view text, const std::filesystem::path& base_dir = {});
SweepGrid load_sweep_grid(const std::filesystem::path& path);

struct SweepRow {
  ExperimentSpec spec;
  std::optional<MetricReport> report;
  std::string error;
};

// Cross product models x attacks x ks. Each (model, attack) pair is trained
// and run once; its k rows relabel the same verdicts and share its timings.
// A failing pair records the error in its rows and the sweep continues.
std::vector<SweepRow> sweep(const SweepGrid& grid);
std::vector<SweepRow> sweep(const SweepGrid& grid, const ScenarioConfig& scenario);

void write_sweep_table(std::ostream& out, std::span<const SweepRow> rows);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

// Samples resident set size every interval and keeps the maximum.
class MemorySampler {
 public:
  explicit MemorySampler(std::chrono::milliseconds interval = std::chrono::milliseconds(100));
  ~MemorySampler();
  MemorySampler(const MemorySampler&) = delete;
  MemorySampler& operator=(const MemorySampler&) = delete;

  double stop();  // peak in MiB

 private:
  void sample();

  std::chrono::milliseconds interval_;
  std::atomic<bool> running_{true};
  std::atomic<std::uint64_t> peak_bytes_{0};
  std::mutex wake_mutex_;
  std::condition_variable wake_;
  std::thread thread_;
};

std::uint64_t resident_set_bytes();

}  // namespace argos::eval
