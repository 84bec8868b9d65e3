#include "argos/eval_harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "argos/e2_node.hpp"
#include "argos/errors.hpp"
#include "argos/scenario_io.hpp"
#include "argos/stream_csv.hpp"
#include "argos/text_util.hpp"

namespace argos::eval {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_metric(const std::optional<double>& value) {
  if (!value) return "NA";
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << *value;
  return out.str();
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, std::string_view text) {
  std::filesystem::path p{std::string(text)};
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& text, const std::string& key, Parse parse) {
  std::vector<T> out;
  for (auto part : split(text, ',')) {
    const auto value = parse(trim(part));
    if (!value) throw ConfigError("invalid entry '" + std::string(trim(part)) + "' in '" + key + "'");
    out.push_back(*value);
  }
  return out;
}

std::optional<std::uint32_t> parse_k(std::string_view text) { return parse_integer<std::uint32_t>(text); }

models::ModelType require_model(std::string_view text) {
  const auto type = models::parse_model_type(text);
  if (!type) throw ConfigError("unknown model '" + std::string(text) + "' (expected ae, dae, vae or iforest)");
  return *type;
}

AttackMode require_attack(std::string_view text) {
  const auto mode = parse_attack_mode(text);
  if (!mode) throw ConfigError("unknown adversary '" + std::string(text) + "' (expected a1, a2 or holdout)");
  return *mode;
}

}  // namespace

std::string_view to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::A1:
      return "a1";
    case AttackMode::A2:
      return "a2";
    case AttackMode::Holdout:
      return "holdout";
  }
  return "?";
}

std::optional<AttackMode> parse_attack_mode(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "a1") return AttackMode::A1;
  if (lower == "a2") return AttackMode::A2;
  if (lower == "holdout") return AttackMode::Holdout;
  return std::nullopt;
}

std::vector<bool> label_seconds(std::span<const std::uint32_t> rogue_counts, std::uint32_t k) {
  std::vector<bool> labels;
  labels.reserve(rogue_counts.size());
  for (auto count : rogue_counts) labels.push_back(count >= k);
  return labels;
}

std::vector<bool> label_seconds(std::span<const TelemetryVector> vectors, std::uint32_t k) {
  std::vector<bool> labels;
  labels.reserve(vectors.size());
  for (const auto& v : vectors) labels.push_back(v.rogue_count >= k);
  return labels;
}

MetricReport compute_metrics(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("compute_metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                                std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw std::invalid_argument("compute_metrics: no evaluated seconds");
  MetricReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i]) {
      ++(labels[i] ? r.tp : r.fp);
    } else {
      ++(labels[i] ? r.fn : r.tn);
    }
  }
  r.accuracy = ratio(r.tp + r.tn, r.total());
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.fpr = ratio(r.fp, r.fp + r.tn);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

void ExperimentSpec::validate() const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("split must lie in (0, 1)");
  if (epochs && *epochs < 0) throw ConfigError("epochs must be nonnegative");
}

ExperimentSpec parse_experiment_spec(std::string_view text, const std::filesystem::path& base_dir) {
  const auto sections = parse_key_value(text);
  if (sections.size() != 1) throw ConfigError("experiment spec takes no [sections]");
  const auto& root = sections.front();
  ExperimentSpec spec;
  spec.scenario = resolve(base_dir, root.require("scenario"));
  if (const auto* m = root.find("model")) spec.model = require_model(*m);
  if (const auto* a = root.find("adversary")) spec.attack = require_attack(*a);
  const auto k = root.get_int("k", spec.k);
  if (k < 1 || k > 1000) throw ConfigError("k must lie in [1, 1000]");
  spec.k = static_cast<std::uint32_t>(k);
  spec.split = root.get_double("split", spec.split);
  spec.seed = static_cast<std::uint64_t>(root.get_int("seed", static_cast<std::int64_t>(spec.seed)));
  if (root.find("epochs")) spec.epochs = static_cast<int>(root.get_int("epochs", 0));
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(read_text_file(path), path.parent_path());
}

std::vector<kpm::RicIndication> indications_for(std::span<const MeasurementReport> reports) {
  E2Node node;
  node.on_setup_response({true});
  node.handle_subscription({1, 1000});
  std::vector<kpm::RicIndication> out;
  for (const auto& report : reports) {
    for (auto& ind : node.on_report(report)) out.push_back(std::move(ind));
  }
  for (auto& ind : node.flush_all()) out.push_back(std::move(ind));
  return out;
}

std::map<SecondKey, std::uint32_t> rogue_counts(std::span<const MeasurementReport> reports) {
  std::map<SecondKey, std::uint32_t> counts;
  for (const auto& report : reports) {
    for (const auto& m : report.neighbors) {
      if (m.is_rogue) ++counts[{report.ue_id, m.second()}];
    }
  }
  return counts;
}

std::vector<TelemetryVector> encode_indications(std::span<const kpm::RicIndication> indications,
                                                const CellRegistry& registry,
                                                const std::map<SecondKey, std::uint32_t>& counts) {
  std::vector<TelemetryVector> vectors;
  vectors.reserve(indications.size());
  std::vector<CellMeasurement> measurements;
  for (const auto& ind : indications) {
    measurements.clear();
    for (const auto& w : ind.measurements) measurements.push_back(kpm::from_wire(w));
    auto vec = encode_second(ind.ue_id, ind.second_index, measurements, registry);
    const auto it = counts.find({ind.ue_id, static_cast<std::int64_t>(ind.second_index)});
    vec.rogue_count = it == counts.end() ? 0 : it->second;
    vectors.push_back(std::move(vec));
  }
  return vectors;
}

MetricReport ExperimentOutcome::metrics_at(std::uint32_t k) const {
  std::vector<bool> predictions;
  predictions.reserve(verdicts.size());
  for (const auto& v : verdicts) predictions.push_back(v.decision == Decision::Anomaly);
  MetricReport r = compute_metrics(predictions, label_seconds(rogue_counts, k));
  r.train_time_s = report.train_time_s;
  r.infer_time_s = report.infer_time_s;
  r.peak_memory_mb = report.peak_memory_mb;
  return r;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  return run_experiment(spec, load_scenario(spec.scenario));
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const ScenarioConfig& base) {
  spec.validate();
  MemorySampler memory;

  ScenarioConfig scenario = base;
  scenario.seed = spec.seed;
  StreamSplit split;
  if (spec.attack == AttackMode::Holdout) {
    if (!scenario.holdout_cell) throw ConfigError("scenario defines no holdout cell");
    const auto stream = generate_stream(scenario, scenario.propagation, nullptr);
    split = holdout_split(stream, *scenario.holdout_cell, spec.split);
    // Reintroduced at inference, the withheld cell plays the rogue role.
    for (auto& report : split.infer) {
      for (auto& m : report.neighbors) m.is_rogue = m.cell == *scenario.holdout_cell;
    }
  } else {
    const auto mode = spec.attack == AttackMode::A1 ? AdversaryMode::A1 : AdversaryMode::A2;
    const AdversaryConfig* adversary = scenario.find_adversary(mode);
    if (!adversary) throw ConfigError("scenario defines no " + std::string(to_string(mode)) + " adversary");
    const auto stream = generate_stream(scenario, scenario.propagation, adversary);
    split = time_split(stream, spec.split);
    split.train = strip_rogue(split.train);
  }
  if (split.train.empty() || split.infer.empty()) throw DataError("split leaves an empty training or inference part");

  const CellRegistry registry = build_registry(split.train);
  const auto train_ind = indications_for(split.train);
  const auto train_vectors = encode_indications(train_ind, registry);
  const models::FeatureMatrix train_matrix = models::to_matrix(train_vectors);

  models::ModelConfig cfg;
  cfg.type = spec.model;
  cfg.train.seed = spec.seed;
  if (spec.epochs) cfg.train.epochs = *spec.epochs;

  ExperimentOutcome outcome;
  const auto train_start = Clock::now();
  auto trained = models::train_model(train_matrix, cfg);
  const auto threshold = models::fit_threshold(*trained.model, train_matrix);
  outcome.report.train_time_s = seconds_since(train_start);
  outcome.training = trained.report;
  outcome.tau = threshold.tau;
  outcome.train_vectors = train_vectors.size();
  outcome.feature_width = registry.feature_width();

  const auto infer_ind = indications_for(split.infer);
  const auto counts = rogue_counts(split.infer);

  EngineConfig engine_cfg;
  engine_cfg.model = cfg;
  engine_cfg.retraining_enabled = false;
  XappEngine engine(engine_cfg, models::ModelBundle{registry, trained.model, threshold});
  outcome.verdicts.reserve(infer_ind.size());

  const auto infer_start = Clock::now();
  for (const auto& ind : infer_ind) {
    if (auto verdict = engine.on_indication(ind)) outcome.verdicts.push_back(std::move(*verdict));
  }
  outcome.report.infer_time_s = seconds_since(infer_start);
  if (outcome.verdicts.size() != infer_ind.size()) throw DataError("engine withheld verdicts during evaluation");

  outcome.rogue_counts.reserve(outcome.verdicts.size());
  for (const auto& v : outcome.verdicts) {
    const auto it = counts.find({v.ue_id, v.second_index});
    outcome.rogue_counts.push_back(it == counts.end() ? 0 : it->second);
  }
  outcome.report.peak_memory_mb = memory.stop();
  outcome.report = outcome.metrics_at(spec.k);
  return outcome;
}

void write_metrics_csv(std::ostream& out, const ExperimentSpec& spec, const MetricReport& r, bool header) {
  if (header) out << "model,adversary,k,split,seed,tp,tn,fp,fn,accuracy,precision,recall,f1,fpr\n";
  out << models::to_string(spec.model) << ',' << to_string(spec.attack) << ',' << spec.k << ','
      << format_double(spec.split) << ',' << spec.seed << ',' << r.tp << ',' << r.tn << ',' << r.fp << ','
      << r.fn << ',' << format_metric(r.accuracy) << ',' << format_metric(r.precision) << ','
      << format_metric(r.recall) << ',' << format_metric(r.f1) << ',' << format_metric(r.fpr) << '\n';
}

void write_perf_csv(std::ostream& out, const ExperimentSpec& spec, const MetricReport& r, bool header) {
  if (header) out << "model,adversary,k,train_time_s,infer_time_s,peak_memory_mb\n";
  out << models::to_string(spec.model) << ',' << to_string(spec.attack) << ',' << spec.k << ','
      << format_metric(r.train_time_s) << ',' << format_metric(r.infer_time_s) << ','
      << format_metric(r.peak_memory_mb) << '\n';
}

SweepGrid parse_sweep_grid(std::string_view text, const std::filesystem::path& base_dir) {
  const auto sections = parse_key_value(text);
  if (sections.size() != 1) throw ConfigError("sweep grid takes no [sections]");
  const auto& root = sections.front();
  SweepGrid grid;
  grid.scenario = resolve(base_dir, root.require("scenario"));
  grid.models = parse_list<models::ModelType>(root.require("models"), "models", models::parse_model_type);
  grid.ks = parse_list<std::uint32_t>(root.require("k"), "k", parse_k);
  grid.attacks = parse_list<AttackMode>(root.find("adversary") ? *root.find("adversary") : std::string("a1"),
                                        "adversary", parse_attack_mode);
  grid.split = root.get_double("split", grid.split);
  grid.seed = static_cast<std::uint64_t>(root.get_int("seed", static_cast<std::int64_t>(grid.seed)));
  if (root.find("epochs")) grid.epochs = static_cast<int>(root.get_int("epochs", 0));
  for (auto k : grid.ks) {
    if (k < 1) throw ConfigError("k must be at least 1");
  }
  return grid;
}

SweepGrid load_sweep_grid(const std::filesystem::path& path) {
  return parse_sweep_grid(read_text_file(path), path.parent_path());
}

std::vector<SweepRow> sweep(const SweepGrid& grid) { return sweep(grid, load_scenario(grid.scenario)); }

std::vector<SweepRow> sweep(const SweepGrid& grid, const ScenarioConfig& scenario) {
  if (grid.models.empty() || grid.ks.empty() || grid.attacks.empty()) throw ConfigError("sweep grid is empty");
  std::vector<SweepRow> rows;
  for (auto model : grid.models) {
    for (auto attack : grid.attacks) {
      ExperimentSpec spec;
      spec.scenario = grid.scenario;
      spec.model = model;
      spec.attack = attack;
      spec.k = grid.ks.front();
      spec.split = grid.split;
      spec.seed = grid.seed;
      spec.epochs = grid.epochs;
      std::optional<ExperimentOutcome> outcome;
      std::string error;
      try {
        outcome = run_experiment(spec, scenario);
      } catch (const std::exception& e) {
        error = e.what();
      }
      for (auto k : grid.ks) {
        SweepRow row;
        row.spec = spec;
        row.spec.k = k;
        if (outcome) {
          row.report = outcome->metrics_at(k);
        } else {
          row.error = error;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_sweep_table(std::ostream& out, std::span<const SweepRow> rows) {
  out << std::left << std::setw(8) << "model" << std::setw(9) << "attack" << std::setw(4) << "k" << std::right
      << std::setw(10) << "accuracy" << std::setw(11) << "precision" << std::setw(9) << "recall" << std::setw(9)
      << "f1" << std::setw(9) << "fpr" << std::setw(10) << "train_s" << std::setw(10) << "infer_s" << std::setw(9)
      << "mem_mb" << '\n';
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("NA");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  for (const auto& row : rows) {
    out << std::left << std::setw(8) << models::to_string(row.spec.model) << std::setw(9)
        << to_string(row.spec.attack) << std::setw(4) << row.spec.k << std::right;
    if (!row.report) {
      out << "  FAILED: " << row.error << '\n';
      continue;
    }
    const auto& r = *row.report;
    out << std::setw(10) << cell(r.accuracy) << std::setw(11) << cell(r.precision) << std::setw(9)
        << cell(r.recall) << std::setw(9) << cell(r.f1) << std::setw(9) << cell(r.fpr) << std::setw(10)
        << cell(r.train_time_s) << std::setw(10) << cell(r.infer_time_s) << std::setw(9)
        << cell(r.peak_memory_mb) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "model,adversary,k,status,tp,tn,fp,fn,accuracy,precision,recall,f1,fpr,train_time_s,infer_time_s,"
         "peak_memory_mb,error\n";
  for (const auto& row : rows) {
    out << models::to_string(row.spec.model) << ',' << to_string(row.spec.attack) << ',' << row.spec.k << ',';
    if (!row.report) {
      std::string error = row.error;
      std::replace(error.begin(), error.end(), ',', ';');
      out << "failed,,,,,,,,,,,,," << error << '\n';
      continue;
    }
    const auto& r = *row.report;
    out << "ok," << r.tp << ',' << r.tn << ',' << r.fp << ',' << r.fn << ',' << format_metric(r.accuracy) << ','
        << format_metric(r.precision) << ',' << format_metric(r.recall) << ',' << format_metric(r.f1) << ','
        << format_metric(r.fpr) << ',' << format_metric(r.train_time_s) << ',' << format_metric(r.infer_time_s)
        << ',' << format_metric(r.peak_memory_mb) << ",\n";
  }
}

std::uint64_t resident_set_bytes() {
  std::ifstream statm("/proc/self/statm");
  std::uint64_t size = 0;
  std::uint64_t resident = 0;
  if (!(statm >> size >> resident)) return 0;
  return resident * static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));
}

MemorySampler::MemorySampler(std::chrono::milliseconds interval) : interval_(interval) {
  sample();
  thread_ = std::thread([this] {
    std::unique_lock lock(wake_mutex_);
    while (running_) {
      wake_.wait_for(lock, interval_, [this] { return !running_; });
      sample();
    }
  });
}

MemorySampler::~MemorySampler() { stop(); }

void MemorySampler::sample() {
  const std::uint64_t now = resident_set_bytes();
  std::uint64_t peak = peak_bytes_.load();
  while (now > peak && !peak_bytes_.compare_exchange_weak(peak, now)) {
  }
}

double MemorySampler::stop() {
  {
    std::lock_guard lock(wake_mutex_);
    running_ = false;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
  sample();
  return static_cast<double>(peak_bytes_.load()) / (1024.0 * 1024.0);
}

}  // namespace argos::eval
