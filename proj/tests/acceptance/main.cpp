// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit status 1 if any
// criterion fails. Tolerances and limits are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "nol/conditioner.hpp"
#include "nol/dataset.hpp"
#include "nol/errors.hpp"
#include "nol/eval.hpp"
#include "nol/learner.hpp"
#include "nol/loss.hpp"
#include "nol/regret.hpp"
#include "projection_oracle.hpp"

using namespace nol;

namespace {

constexpr double kInvarianceTolerance = 1e-9;
constexpr double kFigureVariation = 0.02;
constexpr double kFigureDegradation = 0.5;
constexpr double kProjectionTolerance = 1e-6;
constexpr double kIdempotenceTolerance = 1e-9;
constexpr double kRescaleTolerance = 1e-12;
constexpr double kClosedFormTolerance = 1e-9;
constexpr double kFiniteDifferenceTolerance = 1e-6;

struct Outcome {
  enum Status { pass, fail, skip } status = fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

LearnerConfig make(LearnerKind kind, double eta) {
  LearnerConfig c;
  c.kind = kind;
  c.eta = eta;
  return c;
}

// 1. Prediction traces of the normalized learners survive power-of-two
// rescaling; AdaGrad and SGD do not.
Outcome scale_invariance() {
  const std::vector<Loss> losses{Loss(LossKind::squared), Loss(LossKind::hinge), Loss(LossKind::logistic)};
  const std::vector<LearnerKind> kinds{LearnerKind::ng, LearnerKind::nag, LearnerKind::snag, LearnerKind::adagrad,
                                       LearnerKind::sgd};
  std::vector<std::size_t> mismatches(kinds.size(), 0);
  std::size_t cases = 0;
  double worst_normalized = 0.0;
  for (std::uint64_t stream = 0; stream < 20; ++stream) {
    const Loss loss = losses[stream % losses.size()];
    const std::size_t d = 1 + stream % 20;
    const Dataset base = test::random_stream(1000 + stream, d, 2000, loss);
    for (std::uint64_t k = 0; k < 5; ++k) {
      const Dataset scaled = apply_scaling(base, test::power_of_two_scaling(50 * stream + k, d));
      ++cases;
      for (std::size_t j = 0; j < kinds.size(); ++j) {
        const bool normalized = j < 3;
        // Small enough that the unscaled baselines stay finite.
        const LearnerConfig c = make(kinds[j], normalized ? 0.5 : kinds[j] == LearnerKind::adagrad ? 1e-3 : 1e-6);
        const RunResult a = run_stream(c, loss, base);
        double gap = 0.0;
        try {
          const RunResult b = run_stream(c, loss, scaled);
          for (std::size_t t = 0; t < base.size(); ++t)
            gap = std::max(gap, std::abs(a.predictions[t] - b.predictions[t]) /
                                    std::max(std::abs(a.predictions[t]), std::numeric_limits<double>::min()));
        } catch (const NumericFault&) {
          gap = std::numeric_limits<double>::infinity();
        }
        // Both traces start at 0; an all-zero pair has no gap.
        if (gap > kInvarianceTolerance) ++mismatches[j];
        if (normalized) worst_normalized = std::max(worst_normalized, gap);
      }
    }
  }
  const bool ok = mismatches[0] == 0 && mismatches[1] == 0 && mismatches[2] == 0 && mismatches[3] >= 1 &&
                  mismatches[4] >= 1;
  return verdict(ok, fmt("%zu cases; mismatches ng=%zu nag=%zu snag=%zu adagrad=%zu sgd=%zu; worst normalized gap %.3g",
                         cases, mismatches[0], mismatches[1], mismatches[2], mismatches[3], mismatches[4],
                         worst_normalized));
}

// 2. One feature rescaled by s: NAG's progressive loss stays flat across s,
// AdaGrad's degrades away from s = 1.
Outcome figure_one() {
  const std::size_t count = 10000;
  const std::uint64_t seed = 1;
  SweepSpec spec;
  spec.learners = {LearnerKind::nag, LearnerKind::adagrad};
  spec.loss = Loss(LossKind::hinge);
  const ComparisonReport tuned = sweep(spec, synth_figure1(1.0, count, seed));
  const double eta_nag = *tuned.cells[0].eta_star;
  const double eta_ada = *tuned.cells[1].eta_star;
  std::vector<double> nag, ada;
  std::string curve;
  for (int e = -3; e <= 3; ++e) {
    const Dataset data = synth_figure1(std::pow(10.0, e), count, seed);
    nag.push_back(
        progressive_validation(make(LearnerKind::nag, eta_nag), Loss(LossKind::hinge), data, {}).average_metric);
    ada.push_back(
        progressive_validation(make(LearnerKind::adagrad, eta_ada), Loss(LossKind::hinge), data, {}).average_metric);
    curve += fmt(" s=1e%d:%.4f/%.4f", e, nag.back(), ada.back());
  }
  const auto [lo, hi] = std::minmax_element(nag.begin(), nag.end());
  const double variation = (*hi - *lo) / *lo;
  const double at_one = ada[3];
  const bool ok = variation < kFigureVariation && ada.front() >= (1 + kFigureDegradation) * at_one &&
                  ada.back() >= (1 + kFigureDegradation) * at_one;
  return verdict(ok, fmt("eta nag=%g adagrad=%g; nag variation %.4f; nag/adagrad 0-1 loss:", eta_nag, eta_ada,
                         variation) +
                         curve);
}

// 3. Bound suites on random instances plus the constant-scale closed form.
Outcome bound_suites() {
  std::string detail;
  bool ok = true;
  auto run = [&](BoundCheck check, std::size_t instances, std::vector<Loss> losses, std::size_t max_count) {
    SuiteOptions o;
    o.check = check;
    o.instances = instances;
    o.seed = 2024;
    o.losses = std::move(losses);
    o.max_count = max_count;
    const SuiteResult r = run_bound_suite(o);
    ok = ok && r.summary.failures == 0 && r.summary.instances == instances;
    detail += fmt("%s %zu/%zu min slack %.4g; ", std::string(to_string(check)).c_str(),
                  instances - r.summary.failures, instances, r.summary.min_slack);
  };
  run(BoundCheck::descent, 100, {Loss(LossKind::squared)}, 500);
  run(BoundCheck::transductive, 50, {Loss(LossKind::squared), Loss(LossKind::hinge)}, 1000);
  run(BoundCheck::streaming, 50, {Loss(LossKind::squared), Loss(LossKind::hinge)}, 1000);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    InstanceSpec spec;
    spec.constant_scale = true;
    spec.max_count = 300;
    spec.seed = 7000 + seed;
    spec.loss = seed % 2 ? Loss(LossKind::hinge) : Loss(LossKind::squared);
    const BoundReport r = check_streaming_bound(random_instance(spec), spec.loss, 1.0);
    const double expected = r.details.at("closed_form_unit_ratio");
    worst = std::max(worst, std::abs(r.bound_value - expected) / expected);
    ok = ok && std::all_of(r.delta.begin(), r.delta.end(), [](double d) { return d == 1.0; });
  }
  ok = ok && worst <= kClosedFormTolerance;
  return verdict(ok, detail + fmt("constant-scale closed form worst relative gap %.3g", worst));
}

// 4. Warm-up length and the quantile bound over random permutations.
Outcome warm_up() {
  const std::uint64_t tau = warmup_length(10, 0.1, 0.5);
  const Dataset data = test::random_stream(77, 10, 1000, Loss(LossKind::squared), 0.5);
  const QuantileTrial trial = permutation_quantile_trial(data, 0.1, 0.5, 500, 11);
  const bool ok = tau == 10 && trial.permutations == 500 && trial.passed;
  return verdict(ok, fmt("tau=%llu; %zu/%zu permutations exceed the quantile bound (rate %.4f, allowed %.4f)",
                         static_cast<unsigned long long>(tau), trial.violations, trial.permutations,
                         trial.violation_rate, trial.allowed_rate));
}

// 5. Projection against brute-force grid search.
Outcome projection() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_gap = 0.0, worst_repeat = 0.0, worst_excess = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng() % 3;
    std::vector<double> m(d), a(d), wp(d);
    for (std::size_t i = 0; i < d; ++i) {
      m[i] = std::pow(10.0, u(rng));
      a[i] = std::pow(10.0, u(rng));
      wp[i] = 3.0 * u(rng) / m[i];
    }
    const ComparatorBall ball{EnclosingBox(m), 0.5 + std::abs(u(rng)), trial % 2 ? 2 : 1};
    const auto w = project(wp, a, ball);
    const auto grid = test::grid_projection(wp, a, ball);
    worst_gap = std::max(worst_gap, std::abs(test::metric_distance(w, wp, a) - test::metric_distance(grid, wp, a)));
    worst_excess = std::max(worst_excess, ball.norm(w) - ball.radius);
    const auto again = project(w, a, ball);
    for (std::size_t i = 0; i < d; ++i) worst_repeat = std::max(worst_repeat, std::abs(again[i] - w[i]));
  }
  const bool ok = worst_gap <= kProjectionTolerance && worst_repeat <= kIdempotenceTolerance && worst_excess <= 1e-9;
  return verdict(ok, fmt("200 instances; worst A-distance gap %.3g, idempotence %.3g, norm excess %.3g", worst_gap,
                         worst_repeat, worst_excess));
}

// 6. The closed-form conditioner minimizes the minimax objective and its
// bound ignores coordinate rescaling.
Outcome hindsight() {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t decreases = 0, perturbations = 0;
  double worst_rescale = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng() % 6;
    const std::size_t count = 20 + rng() % 80;
    Dataset data;
    std::vector<double> deriv;
    std::vector<double> magnitude(d);
    for (double& s : magnitude) s = std::pow(10.0, 2.0 * u(rng));
    for (std::size_t t = 0; t < count; ++t) {
      std::vector<Feature> f;
      for (std::size_t i = 0; i < d; ++i) f.push_back({i, magnitude[i] * u(rng)});
      data.emplace_back(std::move(f), 0.0);
      deriv.push_back(u(rng));
    }
    const double c = 0.1 + 2.0 * std::abs(u(rng));
    const auto g = gradient_sq_sums(data, deriv);
    const EnclosingBox box = EnclosingBox::from_data(data);
    const auto a = hindsight_conditioner(g, box, c);
    const double best = hindsight_objective(a, g, box, c);
    for (std::size_t i = 0; i < d; ++i)
      for (double f : {0.9, 1.1}) {
        auto p = a;
        p[i] *= f;
        ++perturbations;
        if (hindsight_objective(p, g, box, c) < best) ++decreases;
      }
    std::vector<double> scale(d);
    for (double& s : scale) s = std::pow(10.0, 3.0 * u(rng));
    const Dataset scaled = apply_scaling(data, scale);
    const double before = hindsight_regret_bound(g, box, c);
    const double after = hindsight_regret_bound(gradient_sq_sums(scaled, deriv), EnclosingBox::from_data(scaled), c);
    worst_rescale = std::max(worst_rescale, std::abs(before - after) / before);
  }
  const bool ok = decreases == 0 && worst_rescale <= kRescaleTolerance;
  return verdict(ok, fmt("%zu/%zu perturbations decrease the objective; worst rescale gap %.3g", decreases,
                         perturbations, worst_rescale));
}

// 7. Loss derivatives and per-weight gradients against central differences.
Outcome gradients() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  double worst = 0.0;
  std::size_t checked = 0;
  for (LossKind k : {LossKind::squared, LossKind::hinge, LossKind::logistic}) {
    const Loss loss(k);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t d = 1 + rng() % 5;
      std::vector<Feature> f;
      std::vector<double> w(d);
      for (std::size_t i = 0; i < d; ++i) {
        f.push_back({i, 2.0 * u(rng)});
        w[i] = 2.0 * u(rng);
      }
      const double y = loss.requires_signed_label() ? (rng() % 2 ? 1.0 : -1.0) : 3.0 * u(rng);
      const SparseExample x(std::move(f), y);
      const double p = predict(w, x);
      if (k == LossKind::hinge && std::abs(p * y - 1.0) <= 1e-3) continue;
      const double derivative = loss.eval(p, y).derivative;
      const double fd = (loss.value(p + h, y) - loss.value(p - h, y)) / (2 * h);
      worst = std::max(worst, std::abs(derivative - fd) / std::max(1.0, std::abs(derivative)));
      const SparseVector g = per_coordinate_gradient(derivative, x);
      for (std::size_t j = 0; j < g.size(); ++j) {
        const std::size_t i = g[j].index;
        const double gi = g[j].value;
        // Keep the perturbed prediction on the same side of the kink.
        if (k == LossKind::hinge && std::abs(p * y - 1.0) <= 1e-3 + 2 * h * std::abs(x.features()[j].value)) continue;
        auto plus = w, minus = w;
        plus[i] += h;
        minus[i] -= h;
        const double fdw = (loss.value(predict(plus, x), y) - loss.value(predict(minus, x), y)) / (2 * h);
        worst = std::max(worst, std::abs(gi - fdw) / std::max(1.0, std::abs(gi)));
      }
      ++checked;
    }
  }
  return verdict(worst <= kFiniteDifferenceTolerance,
                 fmt("%zu points over three losses; worst relative error %.3g", checked, worst));
}

// 8. Tuned learning rates across datasets whose feature scales differ by
// six orders of magnitude.
Outcome eta_range() {
  std::vector<double> nag, ada;
  std::string detail;
  for (const auto& [lo, hi] : std::vector<std::pair<double, double>>{{-3, -3}, {-3, 0}, {0, 0}, {0, 3}, {3, 3}}) {
    LinearSynthSpec s;
    s.dimension = 5;
    s.count = 2000;
    s.min_log10_scale = lo;
    s.max_log10_scale = hi;
    s.task = Task::regression;
    s.seed = 3;
    SweepSpec spec;
    spec.learners = {LearnerKind::nag, LearnerKind::adagrad};
    spec.loss = Loss(LossKind::squared);
    spec.task = Task::regression;
    const ComparisonReport r = sweep(spec, synth_linear(s));
    nag.push_back(r.cells[0].eta_star.value_or(std::nan("")));
    ada.push_back(r.cells[1].eta_star.value_or(std::nan("")));
    detail += fmt(" [1e%g,1e%g]:%g/%g", lo, hi, nag.back(), ada.back());
  }
  const bool nag_ok = std::all_of(nag.begin(), nag.end(), [](double e) { return e >= 0.01 && e <= 16.0; });
  const auto [lo, hi] = std::minmax_element(ada.begin(), ada.end());
  const double span = std::log10(*hi / *lo);
  return verdict(nag_ok && span >= 4.0,
                 fmt("adagrad eta* spans %.2f decades; eta* nag/adagrad per scale range:", span) + detail);
}

// 9. Optional multiclass run on the UCI Shuttle data when it is present.
Outcome shuttle() {
  std::filesystem::path path = std::filesystem::path(NOL_DATA_DIR) / "shuttle.svm";
  if (const char* env = std::getenv("NOL_SHUTTLE")) path = env;
  if (!std::filesystem::exists(path)) return {Outcome::skip, "no data at " + path.string()};
  std::ifstream in(path);
  const Dataset data = read_svmlight(in);
  SweepSpec spec;
  spec.learners = {LearnerKind::nag, LearnerKind::adagrad};
  spec.loss = Loss(LossKind::hinge);
  spec.task = Task::multiclass;
  const ComparisonReport r = sweep(spec, data);
  const double nag = r.cells[0].best_loss, ada = r.cells[1].best_loss;
  return verdict(nag <= 0.05 && nag < ada, fmt("%zu examples; best 0-1 loss nag %.4f (eta %g), adagrad %.4f (eta %g)",
                                               data.size(), nag, r.cells[0].eta_star.value_or(0.0), ada,
                                               r.cells[1].eta_star.value_or(0.0)));
}

struct Criterion {
  const char* name;
  double limit_seconds;  // 0 when untimed
  std::function<Outcome()> run;
};

}  // namespace

// With arguments, runs only the criteria whose numbers are listed.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<Criterion> criteria{
      {"1 scale invariance", 30.0, scale_invariance},
      {"2 single-feature rescaling", 60.0, figure_one},
      {"3 bound suites", 300.0, bound_suites},
      {"4 warm-up and quantile bound", 60.0, warm_up},
      {"5 projection vs grid search", 0.0, projection},
      {"6 hindsight conditioner optimality", 0.0, hindsight},
      {"7 finite-difference gradients", 0.0, gradients},
      {"8 tuned learning-rate range", 0.0, eta_range},
      {"9 shuttle multiclass (optional)", 300.0, shuttle},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const std::string number(c.name, std::strchr(c.name, ' '));
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status != Outcome::skip && c.limit_seconds > 0.0 && seconds > c.limit_seconds) {
      o.status = Outcome::fail;
      o.detail += fmt("; over the %.0f s limit", c.limit_seconds);
    }
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
    std::printf("%s  %-36s %7.2fs  %s\n", tag, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Outcome::fail;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
