#include "nol/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "nol/errors.hpp"
#include "nol/eval.hpp"
#include "nol/learner.hpp"
#include "nol/regret.hpp"
#include "nol/report.hpp"

namespace nol {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct DataFlags {
  std::string path;
  std::string synth;
  std::string format = "svmlight";
  std::string label_column;
  std::uint64_t seed = 0;
  std::string task;
};

void add_data_flags(CLI::App& cmd, DataFlags& f) {
  auto* data = cmd.add_option("--data", f.path, "Input file");
  auto* synth = cmd.add_option("--synth", f.synth, "Generator spec, e.g. figure1:s=1,T=1000");
  data->excludes(synth);
  cmd.add_option("--format", f.format, "Input format")->check(CLI::IsMember({"svmlight", "csv"}));
  cmd.add_option("--label-column", f.label_column, "Label column of a csv file (default: last)");
  cmd.add_option("--seed", f.seed, "Seed for generators and permutations");
  cmd.add_option("--task", f.task, "binary|multiclass|regression (default from the loss)")
      ->check(CLI::IsMember({"binary", "multiclass", "regression"}));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  if (out.empty()) throw std::invalid_argument("empty list '" + text + "'");
  return out;
}

struct LoadedData {
  Dataset examples;
  DatasetEcho echo;
};

LoadedData load_data(const DataFlags& f) {
  LoadedData loaded;
  if (!f.synth.empty()) {
    loaded.examples = synth_from_spec(f.synth, f.seed);
    loaded.echo.source = "synth:" + f.synth;
    loaded.echo.digest = dataset_digest(loaded.examples);
  } else if (!f.path.empty()) {
    std::ifstream file(f.path, std::ios::binary);
    if (!file) throw DataError("cannot open '" + f.path + "'");
    const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    std::istringstream in(bytes);
    if (f.format == "csv") {
      DelimitedOptions options;
      if (!f.label_column.empty()) options.label_column = f.label_column;
      loaded.examples = read_delimited(in, options).examples;
    } else {
      loaded.examples = read_svmlight(in);
    }
    loaded.echo.source = f.path;
    loaded.echo.digest = content_digest(bytes);
  } else {
    throw std::invalid_argument("one of --data or --synth is required");
  }
  if (loaded.examples.empty()) throw DataError("no examples in input");
  loaded.echo.examples = loaded.examples.size();
  loaded.echo.dimension = dimension_of(loaded.examples);
  return loaded;
}

Task resolve_task(const DataFlags& f, const Loss& loss) {
  if (!f.task.empty()) return parse_task(f.task);
  return loss.requires_signed_label() ? Task::binary : Task::regression;
}

// Binary data labelled {0, 1} is mapped to {-1, +1} for the margin losses.
void prepare_labels(Dataset& data, Task task, const Loss& loss, std::ostream& err) {
  if (task != Task::binary || !loss.requires_signed_label()) return;
  bool signed_labels = true;
  for (const auto& ex : data)
    if (ex.label() != 1.0 && ex.label() != -1.0) signed_labels = false;
  if (signed_labels) return;
  data = zero_one_to_signed(data);
  err << "warning: mapped {0, 1} labels to {-1, +1}\n";
}

double parse_grid_value(const std::string& text) {
  std::size_t used = 0;
  const auto caret = text.find('^');
  try {
    if (caret != std::string::npos) {
      const double base = std::stod(text.substr(0, caret), &used);
      if (used != caret) throw std::invalid_argument(text);
      const std::string exponent = text.substr(caret + 1);
      const double e = std::stod(exponent, &used);
      if (used != exponent.size()) throw std::invalid_argument(text);
      return std::pow(base, e);
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed eta grid value '" + text + "'");
  }
}

std::vector<double> parse_eta_grid(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {parse_grid_value(text)};
  return eta_grid(parse_grid_value(text.substr(0, dots)), parse_grid_value(text.substr(dots + 2)));
}

void emit(const nlohmann::json& report, const std::string& path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + path + "'");
  file << text;
}

struct TrainFlags {
  DataFlags data;
  std::string learner = "nag";
  std::string loss = "squared";
  double eta = 1.0;
  std::string eta_decay = "none";
  std::string normalize = "none";
  std::optional<double> clip_c;
  std::string report;
  std::size_t trace_every = 1;
  bool emit_state = false;
  std::string warm_start;
};

LearnerState read_warm_start(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
  return state_from_json(j.contains("state") ? j.at("state") : j);
}

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  LoadedData loaded = load_data(f.data);
  LearnerConfig config;
  config.kind = parse_learner_kind(f.learner);
  config.eta = f.eta;
  config.eta_decay = parse_eta_decay(f.eta_decay);
  config.clip_to_c = f.clip_c;
  config.validate();
  const Loss loss = Loss::parse(f.loss);
  const Task task = resolve_task(f.data, loss);
  const NormalizeMode mode = parse_normalize_mode(f.normalize);
  if (f.trace_every == 0) throw std::invalid_argument("--trace-every must be positive");
  prepare_labels(loaded.examples, task, loss, err);
  const Dataset data = prenormalize(loaded.examples, mode).data;

  RunReport report;
  report.config = {config, loss, mode, task, f.data.seed, loaded.echo, !f.warm_start.empty()};
  report.trace_stride = f.trace_every;

  std::vector<double> losses;
  if (task == Task::multiclass) {
    if (!f.warm_start.empty() || f.emit_state)
      throw std::invalid_argument("--warm-start and --emit-state need a single-learner task");
    const ProgressiveResult r = progressive_validation(config, loss, data, {task, std::nullopt});
    losses = r.training_loss;
    report.average_loss = r.average_training_loss;
    report.average_metric = r.average_metric;
    report.final_state = r.final_state;
  } else {
    Learner learner(config, loss);
    if (!f.warm_start.empty()) learner.restore(read_warm_start(f.warm_start));
    const RunResult run = run_stream(learner, data);
    losses = run.losses;
    report.average_loss = run.average_loss;
    report.final_state = run.summary();
    const double scale = task == Task::regression ? regression_loss_scale(data) : 1.0;
    double metric = 0.0;
    for (std::size_t t = 0; t < data.size(); ++t) {
      const double y = data[t].label();
      const double p = run.predictions[t];
      metric += task == Task::regression ? (p - y) * (p - y) / scale : zero_one_loss(p, y);
    }
    report.average_metric = metric / static_cast<double>(data.size());
    if (f.emit_state) report.state = run.final_state;
  }
  for (std::size_t t = 0; t < losses.size(); t += f.trace_every) report.trace.push_back(losses[t]);
  report.elapsed_seconds = seconds_since(start);
  emit(to_json(report), f.report, out);
  return kExitOk;
}

struct SweepFlags {
  DataFlags data;
  std::string learners = "nag,adagrad";
  std::string loss = "hinge";
  std::string grid = "2^-20..2^6";
  std::string eta_decay = "none";
  std::string normalize = "none";
  std::optional<double> clip_c;
  std::string report;
  std::string plot_data;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  LoadedData loaded = load_data(f.data);
  SweepSpec spec;
  spec.learners.clear();
  for (const auto& name : split_list(f.learners)) spec.learners.push_back(parse_learner_kind(name));
  spec.normalizations.clear();
  for (const auto& name : split_list(f.normalize)) spec.normalizations.push_back(parse_normalize_mode(name));
  spec.etas = parse_eta_grid(f.grid);
  spec.loss = Loss::parse(f.loss);
  spec.task = resolve_task(f.data, spec.loss);
  spec.eta_decay = parse_eta_decay(f.eta_decay);
  spec.clip_to_c = f.clip_c;
  spec.validate();
  prepare_labels(loaded.examples, spec.task, spec.loss, err);

  const ComparisonReport report = sweep(spec, loaded.examples);
  for (const SweepCell& cell : report.cells)
    for (const CurvePoint& p : cell.curve)
      if (p.status != "ok")
        err << "warning: " << to_string(cell.learner) << " at eta " << p.eta << ": " << p.status << "\n";
  if (!f.plot_data.empty()) {
    std::ofstream csv(f.plot_data, std::ios::binary);
    if (!csv) throw DataError("cannot write '" + f.plot_data + "'");
    write_eta_curves_csv(csv, report);
  }
  SweepEcho echo{spec, f.data.seed, loaded.echo, seconds_since(start)};
  emit(to_json(report, echo), f.report, out);
  return kExitOk;
}

struct RegretFlags {
  std::string check;
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  double radius = 1.0;
  std::size_t dimension = 5;
  std::size_t count = 1000;
  double delta = 0.1;
  double nu = 0.5;
  std::string losses = "squared,hinge";
  bool constant_conditioner = false;
  std::size_t oracle_iterations = 100000;
  std::size_t oracle_restarts = 5;
  std::string report;
};

int cmd_regret(const RegretFlags& f, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  SuiteOptions options;
  options.check = parse_bound_check(f.check);
  options.instances = f.instances;
  options.seed = f.seed;
  options.radius = f.radius;
  options.max_dimension = f.dimension;
  options.max_count = f.count;
  options.delta = f.delta;
  options.nu = f.nu;
  options.constant_conditioner = f.constant_conditioner;
  options.oracle.iterations = f.oracle_iterations;
  options.oracle.restarts = f.oracle_restarts;
  options.losses.clear();
  for (const auto& name : split_list(f.losses)) options.losses.push_back(Loss::parse(name));
  if (!(options.radius > 0.0)) throw std::invalid_argument("-C must be positive");
  if (options.max_dimension == 0 || options.max_count == 0)
    throw std::invalid_argument("--d and --T must be positive");
  if (!(options.delta > 0.0 && options.delta < 1.0) || !(options.nu > 0.0 && options.nu < 1.0))
    throw std::invalid_argument("--delta and --nu must lie in (0, 1)");
  if (options.constant_conditioner && options.check != BoundCheck::descent)
    throw std::invalid_argument("--constant-conditioner applies to --check lemma1 only");

  const SuiteResult result = run_bound_suite(options);
  for (const BoundReport& r : result.reports)
    for (const std::string& w : r.warnings) err << "warning: instance " << r.instance << ": " << w << "\n";
  emit(to_json(result, {options, seconds_since(start)}), f.report, out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scale-invariant online linear learning"};
  app.name("nol");
  app.require_subcommand(1);

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Progressive run of one learner");
  add_data_flags(*train_cmd, train.data);
  train_cmd->add_option("--learner", train.learner)->check(CLI::IsMember({"ng", "nag", "snag", "adagrad", "sgd"}));
  train_cmd->add_option("--loss", train.loss)->check(CLI::IsMember({"squared", "hinge", "logistic"}));
  train_cmd->add_option("--eta", train.eta);
  train_cmd->add_option("--eta-decay", train.eta_decay)->check(CLI::IsMember({"none", "inverse_sqrt_t"}));
  train_cmd->add_option("--normalize", train.normalize)->check(CLI::IsMember({"none", "maxnorm", "sqnorm"}));
  train_cmd->add_option("--clip-c", train.clip_c, "Truncate predictions to [-C, C]");
  train_cmd->add_option("--report", train.report, "Write the report here instead of stdout");
  train_cmd->add_option("--trace-every", train.trace_every, "Keep every k-th progressive loss");
  train_cmd->add_flag("--emit-state", train.emit_state, "Include the full learner state");
  train_cmd->add_option("--warm-start", train.warm_start, "Start from the state in a report");

  SweepFlags sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Learning-rate sweep and comparison");
  add_data_flags(*sweep_cmd, sw.data);
  sweep_cmd->add_option("--learners", sw.learners, "Comma-separated learners");
  sweep_cmd->add_option("--loss", sw.loss)->check(CLI::IsMember({"squared", "hinge", "logistic"}));
  sweep_cmd->add_option("--eta-grid", sw.grid, "LO..HI, powers of two; values like 2^-3 or 0.125");
  sweep_cmd->add_option("--eta-decay", sw.eta_decay)->check(CLI::IsMember({"none", "inverse_sqrt_t"}));
  sweep_cmd->add_option("--normalize", sw.normalize, "Comma-separated none|maxnorm|sqnorm");
  sweep_cmd->add_option("--clip-c", sw.clip_c);
  sweep_cmd->add_option("--report", sw.report);
  sweep_cmd->add_option("--plot-data", sw.plot_data, "CSV of every (learner, eta, loss)");

  RegretFlags rg;
  auto* regret_cmd = app.add_subcommand("regret", "Bound-check suites on random instances");
  regret_cmd->add_option("--check", rg.check)->required()->check(CLI::IsMember({"lemma1", "thm1", "thm2", "cor1"}));
  regret_cmd->add_option("--instances", rg.instances);
  regret_cmd->add_option("--seed", rg.seed);
  regret_cmd->add_option("-C,--radius", rg.radius, "Comparator bound");
  regret_cmd->add_option("--d", rg.dimension, "Maximum dimension (exact for cor1)");
  regret_cmd->add_option("--T", rg.count, "Maximum stream length");
  regret_cmd->add_option("--delta", rg.delta);
  regret_cmd->add_option("--nu", rg.nu);
  regret_cmd->add_option("--loss", rg.losses, "Comma-separated losses, cycled over instances");
  regret_cmd->add_flag("--constant-conditioner", rg.constant_conditioner);
  regret_cmd->add_option("--oracle-iterations", rg.oracle_iterations);
  regret_cmd->add_option("--oracle-restarts", rg.oracle_restarts);
  regret_cmd->add_option("--report", rg.report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'nol --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train, out, err);
    if (*sweep_cmd) return cmd_sweep(sw, out, err);
    return cmd_regret(rg, out, err);
  } catch (const NumericFault& e) {
    err << "numeric fault: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace nol
