#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "argos/e2_node.hpp"
#include "argos/errors.hpp"
#include "argos/eval_harness.hpp"
#include "argos/models/anomaly_model.hpp"
#include "argos/radio_sim.hpp"
#include "argos/scenario_io.hpp"
#include "argos/stream_csv.hpp"
#include "argos/transport.hpp"
#include "argos/xapp_engine.hpp"

namespace {

using namespace argos;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output stream that is either a file or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw DataError("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

models::ModelType model_type(const std::string& text) {
  const auto type = models::parse_model_type(text);
  if (!type) throw UsageError("--model must be one of ae, dae, vae, iforest");
  return *type;
}

eval::AttackMode attack_mode(const std::string& text) {
  const auto mode = eval::parse_attack_mode(text);
  if (!mode) throw UsageError("--adversary must be one of a1, a2, holdout");
  return *mode;
}

std::vector<MeasurementReport> load_reports(const std::string& input) {
  auto ingested = ingest_csv(input);
  if (ingested.clamped_values > 0) {
    std::cerr << "warning: clamped " << ingested.clamped_values << " out-of-range values in " << input << "\n";
  }
  return std::move(ingested.reports);
}

struct SimulateArgs {
  std::string scenario;
  std::string adversary = "none";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig scenario = load_scenario(args.scenario);
  if (args.seed) scenario.seed = *args.seed;
  const AdversaryConfig* adversary = nullptr;
  if (args.adversary == "a1" || args.adversary == "a2") {
    adversary = scenario.find_adversary(args.adversary == "a1" ? AdversaryMode::A1 : AdversaryMode::A2);
    if (!adversary) throw DataError("scenario defines no " + args.adversary + " adversary");
  } else if (args.adversary != "none") {
    throw UsageError("simulate --adversary must be none, a1 or a2");
  }
  const auto stream = generate_stream(scenario, scenario.propagation, adversary);
  Output out(args.out);
  write_stream_csv(out.stream(), stream);
  return 0;
}

struct TrainArgs {
  std::string input;
  std::string model = "vae";
  std::uint64_t seed = 1;
  std::optional<int> epochs;
  std::string out;
};

int run_train(const TrainArgs& args) {
  const auto reports = strip_rogue(load_reports(args.input));
  const CellRegistry registry = build_registry(reports);
  const auto vectors = eval::encode_indications(eval::indications_for(reports), registry);
  const auto matrix = models::to_matrix(vectors);

  models::ModelConfig cfg;
  cfg.type = model_type(args.model);
  cfg.train.seed = args.seed;
  if (args.epochs) cfg.train.epochs = *args.epochs;
  auto trained = models::train_model(matrix, cfg);
  const auto threshold = models::fit_threshold(*trained.model, matrix);
  models::save_bundle({registry, trained.model, threshold}, args.out);
  std::cout << "model=" << models::to_string(cfg.type) << " vectors=" << vectors.size()
            << " width=" << registry.feature_width() << " tau=" << format_double(threshold.tau)
            << " loss=" << format_double(trained.report.initial_loss) << "->"
            << format_double(trained.report.final_loss) << "\n";
  return 0;
}

struct EngineArgs {
  std::string bundle;
  std::string model = "vae";
  std::uint64_t seed = 1;
  bool exclude_flagged = false;
  bool freeze = false;
  std::string out;
};

std::unique_ptr<XappEngine> make_engine(const EngineArgs& args) {
  EngineConfig cfg;
  cfg.model.type = model_type(args.model);
  cfg.model.train.seed = args.seed;
  cfg.exclude_flagged = args.exclude_flagged;
  cfg.retraining_enabled = !args.freeze;
  if (args.bundle.empty()) return std::make_unique<XappEngine>(cfg);
  const auto bundle = models::load_bundle(args.bundle);
  cfg.model.type = bundle.model->type();
  return std::make_unique<XappEngine>(cfg, bundle);
}

int run_detect(const EngineArgs& args, const std::string& input) {
  auto engine = make_engine(args);
  Output out(args.out);
  engine->set_verdict_sink([&](const Verdict& v) { out.stream() << format_verdict(v) << '\n'; });
  for (const auto& ind : eval::indications_for(load_reports(input))) {
    engine->on_indication(ind);
    engine->maybe_retrain();
  }
  engine->wait_for_retrain();
  const auto c = engine->counters();
  std::cerr << "indications=" << c.indications << " retrains=" << c.retrains
            << " retrain_failures=" << c.retrain_failures << " generation=" << engine->generation() << "\n";
  return 0;
}

int run_xapp_cmd(const EngineArgs& args, const std::string& connect, int max_reconnects) {
  auto engine = make_engine(args);
  Output out(args.out);
  engine->set_verdict_sink([&](const Verdict& v) { out.stream() << format_verdict(v) << std::endl; });
  const Endpoint endpoint = parse_endpoint(connect);
  RunOptions options;
  options.max_reconnects = max_reconnects;
  const auto result = run_xapp(*engine, [&] { return tcp_connect(endpoint); }, options);
  std::cerr << "verdicts=" << result.verdicts << " reconnects=" << result.reconnects
            << " generation=" << engine->generation() << "\n";
  return 0;
}

int run_e2node_cmd(const std::string& listen, const std::string& input) {
  const auto reports = load_reports(input);
  TcpListener listener(parse_endpoint(listen));
  std::cerr << "listening on port " << listener.port() << "\n";
  E2Node node;
  NodeFeed feed(node, reports);
  while (!feed.finished()) {
    auto transport = listener.accept();
    try {
      feed.serve(*transport);
    } catch (const TransportError& e) {
      std::cerr << "session ended: " << e.what() << "\n";
    }
  }
  std::cerr << "indications=" << feed.indications_sent() << " late=" << node.late_arrivals() << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string spec;
  std::optional<std::string> model;
  std::optional<std::string> adversary;
  std::optional<std::uint32_t> k;
  std::optional<double> split;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string perf_out;
};

int run_evaluate(const EvaluateArgs& args) {
  auto spec = eval::load_experiment_spec(args.spec);
  if (args.model) spec.model = model_type(*args.model);
  if (args.adversary) spec.attack = attack_mode(*args.adversary);
  if (args.k) spec.k = *args.k;
  if (args.split) spec.split = *args.split;
  if (args.seed) spec.seed = *args.seed;
  spec.validate();
  const auto outcome = eval::run_experiment(spec);
  Output out(args.out);
  eval::write_metrics_csv(out.stream(), spec, outcome.report);
  if (!args.perf_out.empty()) {
    Output perf(args.perf_out);
    eval::write_perf_csv(perf.stream(), spec, outcome.report);
  } else {
    eval::write_perf_csv(std::cerr, spec, outcome.report);
  }
  return 0;
}

int run_sweep(const std::string& grid_path, const std::string& csv_path) {
  const auto grid = eval::load_sweep_grid(grid_path);
  const auto rows = eval::sweep(grid);
  eval::write_sweep_table(std::cout, rows);
  if (!csv_path.empty()) {
    Output csv(csv_path);
    eval::write_sweep_csv(csv.stream(), rows);
  }
  for (const auto& row : rows) {
    if (!row.report) return kExitData;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rogue base station detection over O-RAN telemetry"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a measurement stream CSV from a scenario");
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--adversary", sim.adversary, "none, a1 or a2");
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("-o,--out", sim.out, "Output CSV (default stdout)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and threshold on a benign stream CSV");
  train_cmd->add_option("--input", train.input, "Stream CSV")->required();
  train_cmd->add_option("--model", train.model, "ae, dae, vae or iforest");
  train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("-o,--out", train.out, "Model bundle output")->required();

  EngineArgs detect_args;
  std::string detect_input;
  auto* detect = app.add_subcommand("detect", "Score a stream CSV and print verdicts");
  detect->add_option("--bundle", detect_args.bundle, "Pretrained model bundle (omit for bootstrap mode)");
  detect->add_option("--input", detect_input, "Stream CSV")->required();
  detect->add_option("--model", detect_args.model, "Model type used for retraining in bootstrap mode");
  detect->add_option("--seed", detect_args.seed, "Retraining seed");
  detect->add_flag("--exclude-flagged", detect_args.exclude_flagged, "Leave flagged seconds out of retraining");
  detect->add_flag("--freeze", detect_args.freeze, "Disable retraining");
  detect->add_option("-o,--out", detect_args.out, "Verdict output (default stdout)");

  std::string listen;
  std::string node_input;
  auto* e2node = app.add_subcommand("e2node", "Serve a stream CSV as an E2 node over TCP");
  e2node->add_option("--listen", listen, "host:port")->required();
  e2node->add_option("--input", node_input, "Stream CSV")->required();

  EngineArgs xapp_args;
  std::string connect;
  int max_reconnects = 5;
  auto* xapp = app.add_subcommand("xapp", "Connect to an E2 node and emit verdicts");
  xapp->add_option("--connect", connect, "host:port")->required();
  xapp->add_option("--bundle", xapp_args.bundle, "Pretrained model bundle (omit for bootstrap mode)");
  xapp->add_option("--model", xapp_args.model, "Model type used for retraining in bootstrap mode");
  xapp->add_option("--seed", xapp_args.seed, "Retraining seed");
  xapp->add_flag("--exclude-flagged", xapp_args.exclude_flagged, "Leave flagged seconds out of retraining");
  xapp->add_flag("--freeze", xapp_args.freeze, "Disable retraining");
  xapp->add_option("--max-reconnects", max_reconnects, "Reconnect attempts before giving up");
  xapp->add_option("-o,--out", xapp_args.out, "Verdict output (default stdout)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Run one experiment and print its metrics CSV");
  evaluate->add_option("--spec", ev.spec, "Experiment spec file")->required();
  evaluate->add_option("--model", ev.model, "Override the model");
  evaluate->add_option("--adversary", ev.adversary, "Override the adversary mode");
  evaluate->add_option("--k", ev.k, "Override the labeling threshold");
  evaluate->add_option("--split", ev.split, "Override the train fraction");
  evaluate->add_option("--seed", ev.seed, "Override the seed");
  evaluate->add_option("-o,--out", ev.out, "Metrics CSV (default stdout)");
  evaluate->add_option("--perf-out", ev.perf_out, "Timing and memory CSV (default stderr)");

  std::string grid;
  std::string sweep_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a model x k x adversary grid");
  sweep_cmd->add_option("--grid", grid, "Sweep grid file")->required();
  sweep_cmd->add_option("-o,--out", sweep_csv, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*train_cmd) return run_train(train);
    if (*detect) return run_detect(detect_args, detect_input);
    if (*e2node) return run_e2node_cmd(listen, node_input);
    if (*xapp) return run_xapp_cmd(xapp_args, connect, max_reconnects);
    if (*evaluate) return run_evaluate(ev);
    if (*sweep_cmd) return run_sweep(grid, sweep_csv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
