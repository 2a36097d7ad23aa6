#include "nol/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "nol/errors.hpp"

namespace nol {

using nlohmann::json;

namespace {

// JSON has no inf/NaN; they become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers(std::span<const double> xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

json optional_number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

json to_json(const DatasetEcho& d) {
  return {{"source", d.source}, {"digest", d.digest}, {"examples", d.examples}, {"dimension", d.dimension}};
}

json to_json(const StateSummary& s) {
  return {{"nonzero_weights", s.nonzero_weights}, {"normalizer", number(s.normalizer)}, {"examples", s.examples}};
}

std::string format_csv_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string dataset_digest(std::span<const SparseExample> data) {
  std::ostringstream out;
  write_svmlight(out, data);
  return content_digest(out.str());
}

json to_json(const LearnerState& state) {
  json coords = json::array();
  for (std::size_t i = 0; i < state.capacity(); ++i) {
    if (state.weights[i] == 0.0 && state.scale[i] == 0.0 && state.grad_sq[i] == 0.0 && state.sigma[i] == 0.0)
      continue;
    coords.push_back({i, state.weights[i], state.scale[i], state.grad_sq[i], state.sigma[i]});
  }
  return {{"dimension", state.capacity()},
          {"normalizer", state.normalizer},
          {"examples", state.examples},
          {"coordinates", std::move(coords)}};
}

LearnerState state_from_json(const json& j) {
  try {
    LearnerState state;
    const auto dim = j.at("dimension").get<std::size_t>();
    state.weights.assign(dim, 0.0);
    state.scale.assign(dim, 0.0);
    state.grad_sq.assign(dim, 0.0);
    state.sigma.assign(dim, 0.0);
    state.normalizer = j.at("normalizer").get<double>();
    state.examples = j.at("examples").get<std::uint64_t>();
    for (const auto& c : j.at("coordinates")) {
      if (!c.is_array() || c.size() != 5) throw DataError("state coordinate must be [index, w, s, G, sigma]");
      const auto i = c[0].get<std::size_t>();
      if (i >= dim) throw DataError("state coordinate index " + std::to_string(i) + " out of range");
      state.weights[i] = c[1].get<double>();
      state.scale[i] = c[2].get<double>();
      state.grad_sq[i] = c[3].get<double>();
      state.sigma[i] = c[4].get<double>();
    }
    return state;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed learner state: ") + e.what());
  }
}

json to_json(const RunReport& r) {
  const auto& c = r.config;
  json config = {{"learner", to_string(c.learner.kind)},
                 {"loss", c.loss.name()},
                 {"eta", c.learner.eta},
                 {"eta_decay", to_string(c.learner.eta_decay)},
                 {"clip_c", optional_number(c.learner.clip_to_c)},
                 {"normalization", to_string(c.normalization)},
                 {"task", to_string(c.task)},
                 {"seed", c.seed},
                 {"warm_start", c.warm_start},
                 {"dataset", to_json(c.dataset)}};
  json out = {{"schema_version", kReportSchemaVersion},
              {"kind", "run"},
              {"config", std::move(config)},
              {"trace", {{"stride", r.trace_stride}, {"loss", numbers(r.trace)}}},
              {"average_loss", number(r.average_loss)},
              {"average_metric", number(r.average_metric)},
              {"final_state", to_json(r.final_state)},
              {"timing", {{"elapsed_seconds", r.elapsed_seconds}}}};
  if (r.state) out["state"] = to_json(*r.state);
  return out;
}

json to_json(const ComparisonReport& report, const SweepEcho& echo) {
  const SweepSpec& s = echo.spec;
  json learners = json::array();
  for (LearnerKind k : s.learners) learners.push_back(to_string(k));
  json modes = json::array();
  for (NormalizeMode m : s.normalizations) modes.push_back(to_string(m));
  json config = {{"learners", std::move(learners)},
                 {"normalizations", std::move(modes)},
                 {"etas", numbers(s.etas)},
                 {"loss", s.loss.name()},
                 {"task", to_string(s.task)},
                 {"eta_decay", to_string(s.eta_decay)},
                 {"clip_c", optional_number(s.clip_to_c)},
                 {"seed", echo.seed},
                 {"dataset", to_json(echo.dataset)}};
  json cells = json::array();
  for (const SweepCell& cell : report.cells) {
    json curve = json::array();
    for (const CurvePoint& p : cell.curve)
      curve.push_back({{"eta", p.eta}, {"loss", number(p.loss)}, {"status", p.status}});
    cells.push_back({{"learner", to_string(cell.learner)},
                     {"normalization", to_string(cell.normalization)},
                     {"eta_star", optional_number(cell.eta_star)},
                     {"best_loss", number(cell.best_loss)},
                     {"curve", std::move(curve)}});
  }
  json pairs = json::array();
  for (const PairVerdict& p : report.pairs) {
    const auto& v = p.verdict;
    pairs.push_back({{"cell_a", p.cell_a},
                     {"cell_b", p.cell_b},
                     {"interval_a", {v.a.lower, v.a.upper}},
                     {"interval_b", {v.b.lower, v.b.upper}},
                     {"significant", v.significant}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "sweep"},
          {"config", std::move(config)},
          {"cells", std::move(cells)},
          {"pairs", std::move(pairs)},
          {"timing", {{"elapsed_seconds", echo.elapsed_seconds}}}};
}

json to_json(const BoundReport& r) {
  json details = json::object();
  for (const auto& [key, value] : r.details) details[key] = number(value);
  return {{"check", r.check},
          {"instance", r.instance},
          {"seed", r.seed},
          {"empirical_regret", number(r.empirical_regret)},
          {"bound", number(r.bound_value)},
          {"slack", number(r.slack)},
          {"passed", r.passed},
          {"components", numbers(r.components)},
          {"delta", numbers(r.delta)},
          {"tau", r.tau ? json(*r.tau) : json(nullptr)},
          {"comparator", numbers(r.comparator)},
          {"details", std::move(details)},
          {"warnings", r.warnings}};
}

json to_json(const SuiteResult& result, const SuiteEcho& echo) {
  const SuiteOptions& o = echo.options;
  json losses = json::array();
  for (const Loss& l : o.losses) losses.push_back(l.name());
  json config = {{"check", to_string(o.check)},
                 {"instances", o.instances},
                 {"seed", o.seed},
                 {"radius", o.radius},
                 {"losses", std::move(losses)},
                 {"max_dimension", o.max_dimension},
                 {"max_count", o.max_count},
                 {"constant_conditioner", o.constant_conditioner},
                 {"delta", o.delta},
                 {"nu", o.nu},
                 {"oracle_iterations", o.oracle.iterations},
                 {"oracle_restarts", o.oracle.restarts}};
  json reports = json::array();
  for (const BoundReport& r : result.reports) reports.push_back(to_json(r));
  const SuiteSummary& s = result.summary;
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "regret"},
          {"config", std::move(config)},
          {"reports", std::move(reports)},
          {"summary",
           {{"instances", s.instances},
            {"failures", s.failures},
            {"min_slack", number(s.min_slack)},
            {"tau", s.tau ? json(*s.tau) : json(nullptr)}}},
          {"timing", {{"elapsed_seconds", echo.elapsed_seconds}}}};
}

void write_eta_curves_csv(std::ostream& out, const ComparisonReport& report) {
  out << "learner,eta,loss\n";
  for (const SweepCell& cell : report.cells)
    for (const CurvePoint& p : cell.curve) {
      out << to_string(cell.learner) << ',' << format_csv_number(p.eta) << ',';
      if (std::isfinite(p.loss)) out << format_csv_number(p.loss);
      out << '\n';
    }
}

void write_scale_curves_csv(std::ostream& out, std::span<const ScaleCurvePoint> points) {
  out << "learner,s,loss\n";
  for (const ScaleCurvePoint& p : points) {
    out << to_string(p.learner) << ',' << format_csv_number(p.scale) << ',';
    if (std::isfinite(p.loss)) out << format_csv_number(p.loss);
    out << '\n';
  }
}

}  // namespace nol
