#include "nol/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "nol/errors.hpp"
#include "nol/parallel.hpp"

namespace nol {

double zero_one_loss(double prediction, double label) {
  if (prediction > 0.0 && label > 0.0) return 0.0;
  if (prediction < 0.0 && label < 0.0) return 0.0;
  return 1.0;
}

namespace {

ProgressiveResult run_single(const LearnerConfig& config, Loss loss,
                             std::span<const SparseExample> data, const ProgressiveOptions& options) {
  ProgressiveResult result;
  double scale = 1.0;
  if (options.task == Task::regression)
    scale = options.regression_scale ? *options.regression_scale : regression_loss_scale(data);
  if (!(scale > 0.0)) throw std::invalid_argument("regression loss scale must be positive");

  Learner learner(config, loss);
  const RunResult run = run_stream(learner, data);
  result.predictions = run.predictions;
  result.training_loss = run.losses;
  result.metric.reserve(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double y = data[t].label();
    const double p = run.predictions[t];
    result.metric.push_back(options.task == Task::regression ? (p - y) * (p - y) / scale
                                                             : zero_one_loss(p, y));
  }
  result.final_state = run.summary();
  return result;
}

ProgressiveResult run_one_against_all(const LearnerConfig& config, Loss loss,
                                      std::span<const SparseExample> data) {
  if (!loss.requires_signed_label())
    throw std::invalid_argument("multiclass reduction needs a classification loss");
  std::map<double, std::size_t> classes;
  for (const auto& ex : data) classes.emplace(ex.label(), 0);
  std::size_t id = 0;
  for (auto& [label, slot] : classes) slot = id++;
  if (classes.size() < 2) throw DataError("multiclass data needs at least two classes");

  std::vector<Learner> learners(classes.size(), Learner(config, loss));
  ProgressiveResult result;
  result.predictions.reserve(data.size());
  result.training_loss.reserve(data.size());
  result.metric.reserve(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const std::size_t truth = classes.at(data[t].label());
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_class = 0;
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < learners.size(); ++c) {
      Observation obs;
      try {
        obs = learners[c].observe(data[t].with_label(c == truth ? 1.0 : -1.0));
      } catch (const NumericFault& e) {
        throw NumericFault("example " + std::to_string(t) + ": " + e.what(), e.coordinate());
      }
      loss_sum += obs.loss;
      if (obs.prediction > best_score) {
        best_score = obs.prediction;
        best_class = c;
      }
    }
    result.predictions.push_back(static_cast<double>(best_class));
    result.training_loss.push_back(loss_sum);
    result.metric.push_back(best_class == truth ? 0.0 : 1.0);
  }
  StateSummary summary;
  for (const auto& l : learners) {
    summary.nonzero_weights += l.state().nonzero_weights();
    summary.normalizer += l.state().normalizer;
  }
  summary.examples = data.size();
  result.final_state = summary;
  return result;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

ProgressiveResult progressive_validation(const LearnerConfig& config, Loss loss,
                                         std::span<const SparseExample> data,
                                         const ProgressiveOptions& options) {
  if (data.empty()) throw DataError("progressive validation needs at least one example");
  ProgressiveResult result = options.task == Task::multiclass
                                 ? run_one_against_all(config, loss, data)
                                 : run_single(config, loss, data, options);
  result.average_training_loss = mean(result.training_loss);
  result.average_metric = mean(result.metric);
  return result;
}

std::vector<double> eta_grid(double lo, double hi, double base) {
  if (!(lo > 0.0) || !(hi >= lo) || !(base > 1.0))
    throw std::invalid_argument("eta grid needs 0 < lo <= hi and base > 1");
  std::vector<double> grid;
  const auto first = static_cast<long>(std::ceil(std::log(lo) / std::log(base) - 1e-9));
  const auto last = static_cast<long>(std::floor(std::log(hi) / std::log(base) + 1e-9));
  for (long k = first; k <= last; ++k) grid.push_back(std::pow(base, static_cast<double>(k)));
  if (grid.empty()) throw std::invalid_argument("eta grid is empty");
  return grid;
}

std::vector<double> default_eta_grid() { return eta_grid(std::ldexp(1.0, -20), 64.0); }

void SweepSpec::validate() const {
  if (etas.empty()) throw std::invalid_argument("eta grid is empty");
  for (std::size_t k = 1; k < etas.size(); ++k)
    if (!(etas[k] > etas[k - 1])) throw std::invalid_argument("eta grid must be strictly increasing");
  if (learners.empty()) throw std::invalid_argument("no learners to sweep");
  if (normalizations.empty()) throw std::invalid_argument("no normalization modes");
}

ComparisonReport sweep(const SweepSpec& spec, std::span<const SparseExample> data) {
  spec.validate();
  std::vector<Dataset> variants;
  for (NormalizeMode mode : spec.normalizations) variants.push_back(prenormalize(data, mode).data);

  ProgressiveOptions options;
  options.task = spec.task;
  if (spec.task == Task::regression) options.regression_scale = regression_loss_scale(data);

  const std::size_t per_cell = spec.etas.size();
  const std::size_t cells = spec.normalizations.size() * spec.learners.size();
  struct Job {
    double loss = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::vector<double> metric;
  };
  std::vector<Job> jobs(cells * per_cell);

  parallel_for(jobs.size(), [&](std::size_t j) {
    const std::size_t cell = j / per_cell;
    const std::size_t mode = cell / spec.learners.size();
    LearnerConfig config;
    config.kind = spec.learners[cell % spec.learners.size()];
    config.eta = spec.etas[j % per_cell];
    config.clip_to_c = spec.clip_to_c;
    if (config.kind == LearnerKind::ng || config.kind == LearnerKind::sgd) config.eta_decay = spec.eta_decay;
    Job& job = jobs[j];
    try {
      ProgressiveResult r = progressive_validation(config, spec.loss, variants[mode], options);
      if (!std::isfinite(r.average_metric)) {
        job.status = "non_finite";
        return;
      }
      job.loss = r.average_metric;
      job.metric = std::move(r.metric);
    } catch (const NumericFault&) {
      job.status = "numeric_fault";
    } catch (const std::exception&) {
      job.status = "error";
    }
  });

  ComparisonReport report;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    SweepCell sc;
    sc.normalization = spec.normalizations[cell / spec.learners.size()];
    sc.learner = spec.learners[cell % spec.learners.size()];
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < per_cell; ++k) {
      const Job& job = jobs[cell * per_cell + k];
      sc.curve.push_back({spec.etas[k], job.loss, job.status});
      if (job.status == "ok" && (!best || job.loss < jobs[cell * per_cell + *best].loss)) best = k;
    }
    if (best) {
      sc.eta_star = spec.etas[*best];
      sc.best_loss = jobs[cell * per_cell + *best].loss;
      sc.best_metric = std::move(jobs[cell * per_cell + *best].metric);
    } else {
      sc.best_loss = std::numeric_limits<double>::quiet_NaN();
    }
    report.cells.push_back(std::move(sc));
  }

  // Regression metrics can exceed 1 early in a run; the bound needs [0, 1].
  auto bounded = [](const std::vector<double>& v) {
    std::vector<double> out(v);
    for (double& x : out) x = std::clamp(x, 0.0, 1.0);
    return out;
  };
  for (std::size_t a = 0; a < report.cells.size(); ++a)
    for (std::size_t b = a + 1; b < report.cells.size(); ++b) {
      const SweepCell& ca = report.cells[a];
      const SweepCell& cb = report.cells[b];
      if (ca.normalization != cb.normalization || !ca.eta_star || !cb.eta_star) continue;
      report.pairs.push_back({a, b, significance(bounded(ca.best_metric), bounded(cb.best_metric))});
    }
  return report;
}

double bernoulli_kl(double p, double q) {
  auto term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
  };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

ConfidenceInterval kl_confidence_interval(double mean, std::size_t n, double tail_probability) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw std::invalid_argument("mean must lie in [0, 1]");
  if (!(tail_probability > 0.0 && tail_probability < 1.0))
    throw std::invalid_argument("tail probability must lie in (0, 1)");
  if (n == 0) return {0.0, 1.0};
  const double budget = std::log(1.0 / tail_probability) / static_cast<double>(n);
  auto search = [&](double inside, double outside) {
    // inside satisfies the KL budget, outside does not (or is the boundary).
    if (bernoulli_kl(mean, outside) <= budget) return outside;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (bernoulli_kl(mean, mid) <= budget ? inside : outside) = mid;
    }
    return inside;
  };
  return {search(mean, 0.0), search(mean, 1.0)};
}

SignificanceVerdict significance(std::span<const double> losses_a, std::span<const double> losses_b,
                                 double failure_probability) {
  if (losses_a.size() != losses_b.size())
    throw std::invalid_argument("loss sequences differ in length");
  auto average = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("losses must lie in [0, 1]");
      s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const double tail = failure_probability / 4.0;
  SignificanceVerdict verdict;
  verdict.a = kl_confidence_interval(average(losses_a), losses_a.size(), tail);
  verdict.b = kl_confidence_interval(average(losses_b), losses_b.size(), tail);
  verdict.significant = verdict.a.upper < verdict.b.lower || verdict.b.upper < verdict.a.lower;
  return verdict;
}

}  // namespace nol
