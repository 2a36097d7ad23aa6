#include "nol/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "nol/errors.hpp"
#include "nol/parallel.hpp"

namespace nol {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double lookup(std::span<const double> v, std::size_t i) { return i < v.size() ? v[i] : 0.0; }

std::vector<double> densify(const SparseVector& sparse, std::size_t dimension) {
  std::vector<double> dense(dimension, 0.0);
  for (const Feature& f : sparse) dense[f.index] = f.value;
  return dense;
}

/// The hindsight problem in u = S^{-1/2} w: features divided by their box
/// extent, restricted to coordinates with data.
class UnitProblem {
 public:
  UnitProblem(std::span<const SparseExample> data, Loss loss, const ComparatorBall& ball)
      : loss_(loss), radius_(ball.radius), q_(ball.q), dimension_(dimension_of(data)) {
    if (!(ball.radius > 0.0)) throw std::invalid_argument("comparator ball is empty");
    if (ball.q != 1 && ball.q != 2) throw std::invalid_argument("ball norm index must be 1 or 2");
    std::vector<std::size_t> slot(dimension_, kNone);
    for (std::size_t i = 0; i < dimension_; ++i)
      if (ball.box.seen(i)) {
        slot[i] = coords_.size();
        coords_.push_back(i);
        extent_.push_back(ball.box.max_abs(i));
      }
    const std::size_t k = coords_.size();
    rows_.assign(data.size() * k, 0.0);
    labels_.reserve(data.size());
    for (std::size_t t = 0; t < data.size(); ++t) {
      for (const Feature& f : data[t].features()) {
        if (slot[f.index] == kNone)
          throw std::invalid_argument("data has a feature outside the comparator box");
        rows_[t * k + slot[f.index]] = f.value / extent_[slot[f.index]];
      }
      labels_.push_back(data[t].label());
    }
    if (loss.kind() == LossKind::squared) {
      gram_.assign(k * k, 0.0);
      moment_.assign(k, 0.0);
      for (std::size_t t = 0; t < labels_.size(); ++t) {
        const double* x = &rows_[t * k];
        for (std::size_t a = 0; a < k; ++a) {
          moment_[a] += labels_[t] * x[a];
          for (std::size_t b = 0; b < k; ++b) gram_[a * k + b] += x[a] * x[b];
        }
        label_sq_ += labels_[t] * labels_[t];
      }
    }
  }

  std::size_t size() const { return coords_.size(); }
  double radius() const { return radius_; }
  int q() const { return q_; }

  // Total loss at u; gradient written to grad when non-null.
  double evaluate(std::span<const double> u, std::vector<double>* grad) const {
    const std::size_t k = coords_.size();
    if (grad) grad->assign(k, 0.0);
    if (loss_.kind() == LossKind::squared) {
      double value = label_sq_;
      for (std::size_t a = 0; a < k; ++a) {
        double qa = 0.0;
        for (std::size_t b = 0; b < k; ++b) qa += gram_[a * k + b] * u[b];
        value += u[a] * qa - 2.0 * moment_[a] * u[a];
        if (grad) (*grad)[a] = 2.0 * (qa - moment_[a]);
      }
      return std::max(0.0, value);
    }
    double value = 0.0;
    for (std::size_t t = 0; t < labels_.size(); ++t) {
      const double* x = &rows_[t * k];
      double pred = 0.0;
      for (std::size_t a = 0; a < k; ++a) pred += x[a] * u[a];
      const LossEval e = loss_.eval(pred, labels_[t]);
      value += e.value;
      if (grad && e.derivative != 0.0)
        for (std::size_t a = 0; a < k; ++a) (*grad)[a] += e.derivative * x[a];
    }
    return value;
  }

  std::vector<double> project(std::span<const double> v) const {
    if (q_ == 1) return project_weighted_l1(v, std::vector<double>(v.size(), 1.0), radius_);
    double sq = 0.0;
    for (double x : v) sq += x * x;
    std::vector<double> out(v.begin(), v.end());
    if (sq > radius_ * radius_) {
      const double f = radius_ / std::sqrt(sq);
      for (double& x : out) x *= f;
    }
    return out;
  }

  std::vector<double> to_weights(std::span<const double> u) const {
    std::vector<double> w(dimension_, 0.0);
    for (std::size_t a = 0; a < coords_.size(); ++a) w[coords_[a]] = u[a] / extent_[a];
    return w;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  Loss loss_;
  double radius_;
  int q_;
  std::size_t dimension_;
  std::vector<std::size_t> coords_;
  std::vector<double> extent_;
  std::vector<double> rows_;
  std::vector<double> labels_;
  std::vector<double> gram_;
  std::vector<double> moment_;
  double label_sq_ = 0.0;
};

std::vector<double> random_point_in_ball(std::size_t k, double radius, int q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(k);
  double norm = 0.0;
  for (double& x : v) {
    x = normal(rng);
    norm += q == 1 ? std::abs(x) : x * x;
  }
  if (q == 2) norm = std::sqrt(norm);
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(std::max<std::size_t>(k, 1)));
  for (double& x : v) x = norm > 0.0 ? x * r / norm : 0.0;
  return v;
}

BoundReport finish_against_oracle(BoundReport report, const RegretLedger& ledger,
                                  std::span<const SparseExample> data, Loss loss, double radius,
                                  const SubgradientOptions& oracle) {
  const ComparatorBall ball{EnclosingBox::from_data(data), radius, 1};
  const HindsightSolution best = best_in_hindsight_subgradient(data, loss, ball, oracle);
  report.empirical_regret = empirical_regret(ledger, loss, best.weights);
  const double widened = report.empirical_regret + kOracleTolerance * std::abs(best.total_loss);
  report.slack = report.bound_value - widened;
  report.passed = report.slack >= -kBoundTolerance;
  report.details["comparator_loss"] = best.total_loss;
  report.details["learner_loss"] = report.empirical_regret + best.total_loss;
  report.details["widened_regret"] = widened;
  report.details["rounds"] = static_cast<double>(ledger.rounds.size());
  report.details["dimension"] = static_cast<double>(ledger.dimension);
  const auto terms = per_round_regret(ledger, loss, best.weights);
  report.details["max_round_regret"] = terms.empty() ? 0.0 : *std::max_element(terms.begin(), terms.end());
  report.comparator = best.weights;
  return report;
}

}  // namespace

Dataset permuted(std::span<const SparseExample> data, std::uint64_t seed) {
  Dataset out(data.begin(), data.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = out.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(out[i - 1], out[pick(rng)]);
  }
  return out;
}

Dataset adversarial_stream(std::span<const SparseExample> base, const AdversaryConfig& config) {
  Dataset scaled = apply_scaling(base, config.hidden_scale);
  switch (config.order) {
    case StreamOrder::as_is:
      return scaled;
    case StreamOrder::worst_first: {
      auto magnitude = [](const SparseExample& x) {
        double m = 0.0;
        for (const Feature& f : x.features()) m = std::max(m, std::abs(f.value));
        return m;
      };
      std::stable_sort(scaled.begin(), scaled.end(), [&](const SparseExample& a, const SparseExample& b) {
        return magnitude(a) < magnitude(b);
      });
      return scaled;
    }
    case StreamOrder::random_permutation:
      return permuted(scaled, config.seed);
  }
  return scaled;
}

std::vector<double> RegretLedger::grad_sq() const {
  std::vector<double> sums(dimension, 0.0);
  for (const auto& r : rounds)
    for (const Feature& g : r.gradient()) sums[g.index] += g.value * g.value;
  return sums;
}

EnclosingBox RegretLedger::box() const {
  EnclosingBox box;
  box.resize(dimension);
  for (const auto& r : rounds) box.observe(r.example);
  return box;
}

Dataset RegretLedger::examples() const {
  Dataset out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.example);
  return out;
}

RegretLedger run_conditioned(std::span<const SparseExample> data, Loss loss,
                             const ConditionedRunOptions& options) {
  const std::size_t d = dimension_of(data);
  EnclosingBox full = EnclosingBox::from_data(data);
  full.resize(d);

  DiagonalConditioner conditioner = [&] {
    switch (options.recipe) {
      case ConditionerRecipe::streaming:
        return DiagonalConditioner::streaming(options.radius, options.eta);
      case ConditionerRecipe::transductive:
        return DiagonalConditioner::transductive(options.radius, options.eta, full);
      case ConditionerRecipe::hindsight:
        return DiagonalConditioner::fixed(options.fixed_diagonal);
    }
    throw std::logic_error("unknown recipe");
  }();

  RegretLedger ledger;
  ledger.dimension = d;
  ledger.projected = options.project;
  ledger.rounds.reserve(data.size());
  std::vector<double> w(d, 0.0);

  for (const SparseExample& x : data) {
    LedgerRound round;
    round.example = x;
    round.weights = w;
    double prediction = predict(w, x);
    if (options.clip_to_c) prediction = std::clamp(prediction, -*options.clip_to_c, *options.clip_to_c);
    const LossEval e = loss.eval(prediction, x.label());
    round.prediction = prediction;
    round.loss = e.value;
    round.derivative = e.derivative;

    const SparseVector g = per_coordinate_gradient(e.derivative, x);
    const std::span<const double> a = conditioner.step(g, x);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > 0.0) round.conditioner.push_back({i, a[i]});

    for (const Feature& gi : g) {
      const double ai = lookup(a, gi.index);
      if (ai > 0.0) w[gi.index] -= gi.value / ai;
    }
    if (options.project) {
      const bool running = options.recipe == ConditionerRecipe::streaming;
      ComparatorBall ball{running ? conditioner.box() : full, options.radius, 1};
      w = nol::project(w, a, ball);
    }
    for (std::size_t i = 0; i < d; ++i)
      if (!std::isfinite(w[i])) throw NumericFault("non-finite conditioned weight", i);
    ledger.rounds.push_back(std::move(round));
  }
  ledger.final_weights = std::move(w);
  return ledger;
}

double total_loss(std::span<const SparseExample> data, Loss loss, std::span<const double> w) {
  double sum = 0.0;
  for (const auto& x : data) sum += loss.value(predict(w, x), x.label());
  return sum;
}

HindsightSolution best_in_hindsight_grid(std::span<const SparseExample> data, Loss loss,
                                         const ComparatorBall& ball, double step_fraction) {
  const UnitProblem problem(data, loss, ball);
  const std::size_t k = problem.size();
  if (k > 3) throw std::invalid_argument("grid oracle supports at most three coordinates");
  if (!(step_fraction > 0.0)) throw std::invalid_argument("grid step must be positive");

  const double step = step_fraction * ball.radius;
  const auto steps = static_cast<long>(std::floor(1.0 / step_fraction + 1e-9));
  std::vector<double> u(k, 0.0);
  std::vector<double> best_u(k, 0.0);
  double best = problem.evaluate(u, nullptr);

  // Enumerate integer points n with ||n||_q <= steps, one axis at a time.
  std::vector<long> n(k, 0);
  auto remaining = [&](std::size_t axis) {
    double used = 0.0;
    for (std::size_t a = 0; a < axis; ++a)
      used += ball.q == 1 ? std::abs(static_cast<double>(n[a]))
                          : static_cast<double>(n[a]) * static_cast<double>(n[a]);
    const double s = static_cast<double>(steps);
    return ball.q == 1 ? s - used : std::sqrt(std::max(0.0, s * s - used));
  };
  auto recurse = [&](auto&& self, std::size_t axis) -> void {
    if (axis == k) {
      for (std::size_t a = 0; a < k; ++a) u[a] = static_cast<double>(n[a]) * step;
      const double v = problem.evaluate(u, nullptr);
      if (v < best) {
        best = v;
        best_u = u;
      }
      return;
    }
    const auto limit = static_cast<long>(std::floor(remaining(axis) + 1e-9));
    for (long m = -limit; m <= limit; ++m) {
      n[axis] = m;
      self(self, axis + 1);
    }
    n[axis] = 0;
  };
  if (k > 0) recurse(recurse, 0);

  HindsightSolution solution;
  solution.weights = problem.to_weights(best_u);
  solution.total_loss = total_loss(data, loss, solution.weights);
  return solution;
}

HindsightSolution best_in_hindsight_subgradient(std::span<const SparseExample> data, Loss loss,
                                                const ComparatorBall& ball,
                                                const SubgradientOptions& options) {
  const UnitProblem problem(data, loss, ball);
  const std::size_t k = problem.size();
  std::mt19937_64 rng(options.seed);

  std::vector<double> best_u(k, 0.0);
  double best = problem.evaluate(best_u, nullptr);
  std::vector<double> grad;
  std::vector<double> next(k);
  const double c = options.step_scale * ball.radius;

  for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1) && k > 0; ++r) {
    std::vector<double> u = r == 0 ? std::vector<double>(k, 0.0)
                                   : random_point_in_ball(k, ball.radius, ball.q, rng);
    for (std::size_t it = 1; it <= options.iterations; ++it) {
      const double value = problem.evaluate(u, &grad);
      if (value < best) {
        best = value;
        best_u = u;
      }
      double gn = 0.0;
      for (double g : grad) gn += g * g;
      gn = std::sqrt(gn);
      if (gn == 0.0) break;
      const double alpha = c / std::sqrt(static_cast<double>(it));
      for (std::size_t a = 0; a < k; ++a) next[a] = u[a] - alpha * grad[a] / gn;
      u = problem.project(next);
    }
    const double value = problem.evaluate(u, nullptr);
    if (value < best) {
      best = value;
      best_u = u;
    }
  }

  HindsightSolution solution;
  solution.weights = problem.to_weights(best_u);
  solution.total_loss = total_loss(data, loss, solution.weights);
  return solution;
}

std::vector<double> per_round_regret(const RegretLedger& ledger, Loss loss,
                                     std::span<const double> comparator) {
  std::vector<double> terms;
  terms.reserve(ledger.rounds.size());
  for (const auto& r : ledger.rounds)
    terms.push_back(r.loss - loss.value(predict(comparator, r.example), r.example.label()));
  return terms;
}

double empirical_regret(const RegretLedger& ledger, Loss loss, std::span<const double> comparator) {
  const auto terms = per_round_regret(ledger, loss, comparator);
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

double max_round_regret(Loss loss, double radius, double max_abs_label) {
  if (loss.kind() == LossKind::squared) return 4.0 * radius * std::max(radius, max_abs_label);
  return radius + 1.0;
}

double transductive_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                                 double radius) {
  return 2.0 * kSqrt2 * hindsight_regret_bound(grad_sq, box, radius);
}

double scale_growth_factor(double delta) {
  return (1.0 + 6.0 * delta + delta * delta) / (2.0 * kSqrt2);
}

double streaming_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                              std::span<const double> delta, double radius) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grad_sq.size(); ++i) {
    if (!box.seen(i) || grad_sq[i] == 0.0) continue;
    sum += std::sqrt(grad_sq[i]) / box.max_abs(i) * scale_growth_factor(lookup(delta, i));
  }
  return radius * sum;
}

std::vector<double> first_sight_ratios(std::span<const SparseExample> data) {
  const std::size_t d = dimension_of(data);
  std::vector<double> first(d, 0.0);
  std::vector<double> max(d, 0.0);
  for (const auto& x : data)
    for (const Feature& f : x.features()) {
      const double a = std::abs(f.value);
      if (first[f.index] == 0.0) first[f.index] = a;
      max[f.index] = std::max(max[f.index], a);
    }
  std::vector<double> ratio(d, 1.0);
  for (std::size_t i = 0; i < d; ++i)
    if (first[i] > 0.0) ratio[i] = max[i] / first[i];
  return ratio;
}

BoundReport check_descent_inequality(const RegretLedger& ledger, Loss loss,
                                     std::span<const double> comparator) {
  if (ledger.projected) throw std::invalid_argument("descent inequality needs an unprojected ledger");
  if (!ledger.conditioner_logged) throw std::invalid_argument("ledger is missing conditioner snapshots");
  const std::size_t d = ledger.dimension;
  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < std::min(d, comparator.size()); ++i) w[i] = comparator[i];
  for (std::size_t i = d; i < comparator.size(); ++i)
    if (comparator[i] != 0.0) throw std::invalid_argument("comparator has weight outside the data");

  auto quad = [&](std::span<const double> a_hi, std::span<const double> a_lo,
                  std::span<const double> point) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = point[i] - w[i];
      s += (lookup(a_hi, i) - lookup(a_lo, i)) * diff * diff;
    }
    return s;
  };

  BoundReport report;
  report.check = "lemma1";
  if (ledger.rounds.empty()) {
    report.passed = true;
    return report;
  }

  const std::vector<double> none;
  std::vector<double> a_prev = densify(ledger.rounds.front().conditioner, d);
  double initial = quad(a_prev, none, ledger.rounds.front().weights);
  double middle = 0.0;
  double middle_w_t = 0.0;
  double gradient_term = 0.0;
  for (std::size_t t = 0; t < ledger.rounds.size(); ++t) {
    const auto& r = ledger.rounds[t];
    std::vector<double> a = densify(r.conditioner, d);
    if (t > 0) {
      middle += quad(a, a_prev, r.weights);
      middle_w_t += quad(a, a_prev, ledger.rounds[t - 1].weights);
    }
    for (const Feature& g : r.gradient())
      if (a[g.index] > 0.0) gradient_term += g.value * g.value / a[g.index];
    a_prev = std::move(a);
  }

  report.empirical_regret = empirical_regret(ledger, loss, w);
  report.bound_value = initial + middle + gradient_term;
  report.slack = report.bound_value - 2.0 * report.empirical_regret;
  report.passed = report.slack >= -kBoundTolerance;
  report.details["initial_term"] = initial;
  report.details["middle_sum"] = middle;
  report.details["middle_sum_w_t"] = middle_w_t;
  report.details["gradient_sum"] = gradient_term;
  report.details["twice_regret"] = 2.0 * report.empirical_regret;
  report.details["rounds"] = static_cast<double>(ledger.rounds.size());
  return report;
}

BoundReport check_transductive_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                     const SubgradientOptions& oracle) {
  ConditionedRunOptions options;
  options.recipe = ConditionerRecipe::transductive;
  options.radius = radius;
  options.eta = kSqrt2;
  options.project = true;
  const RegretLedger ledger = run_conditioned(data, loss, options);
  const auto grad_sq = ledger.grad_sq();
  const EnclosingBox box = ledger.box();

  BoundReport report;
  report.check = "thm1";
  report.bound_value = transductive_regret_bound(grad_sq, box, radius);
  for (std::size_t i = 0; i < grad_sq.size(); ++i)
    report.components.push_back(
        box.seen(i) ? 2.0 * kSqrt2 * radius * std::sqrt(grad_sq[i]) / box.max_abs(i) : 0.0);
  return finish_against_oracle(std::move(report), ledger, data, loss, radius, oracle);
}

BoundReport check_streaming_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                  const SubgradientOptions& oracle) {
  ConditionedRunOptions options;
  options.recipe = ConditionerRecipe::streaming;
  options.radius = radius;
  options.eta = kSqrt2;
  options.project = true;
  const RegretLedger ledger = run_conditioned(data, loss, options);
  const auto grad_sq = ledger.grad_sq();
  const EnclosingBox box = ledger.box();

  BoundReport report;
  report.check = "thm2";
  report.delta = first_sight_ratios(data);
  report.delta.resize(grad_sq.size(), 1.0);
  report.bound_value = streaming_regret_bound(grad_sq, box, report.delta, radius);
  for (std::size_t i = 0; i < grad_sq.size(); ++i)
    report.components.push_back(box.seen(i) && grad_sq[i] > 0.0
                                    ? radius * std::sqrt(grad_sq[i]) / box.max_abs(i) *
                                          scale_growth_factor(report.delta[i])
                                    : 0.0);
  report.details["closed_form_unit_ratio"] = transductive_regret_bound(grad_sq, box, radius);
  return finish_against_oracle(std::move(report), ledger, data, loss, radius, oracle);
}

std::uint64_t warmup_length(std::size_t dimension, double delta, double nu) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in (0, 1)");
  if (dimension == 0) throw std::invalid_argument("dimension must be positive");
  const double raw = std::log(static_cast<double>(dimension) / delta) / nu;
  return static_cast<std::uint64_t>(std::max(0.0, std::ceil(raw)));
}

double nearest_rank_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sequence");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

PermutationQuantities permutation_quantities(std::size_t dimension, double delta, double nu,
                                             std::span<const SparseExample> stream) {
  PermutationQuantities q;
  q.tau = warmup_length(dimension, delta, nu);
  q.vacuous = q.tau >= stream.size();
  const std::size_t d = std::max(dimension, dimension_of(stream));
  std::vector<double> max_all(d, 0.0);
  std::vector<double> max_warm(d, 0.0);
  std::vector<std::vector<double>> column(d, std::vector<double>(stream.size(), 0.0));
  for (std::size_t t = 0; t < stream.size(); ++t)
    for (const Feature& f : stream[t].features()) {
      const double a = std::abs(f.value);
      column[f.index][t] = a;
      max_all[f.index] = std::max(max_all[f.index], a);
      if (t < q.tau) max_warm[f.index] = std::max(max_warm[f.index], a);
    }
  for (std::size_t i = 0; i < d; ++i) {
    const double quantile = stream.empty() ? 0.0 : nearest_rank_quantile(column[i], 1.0 - nu);
    q.quantile.push_back(quantile);
    q.delta_bound.push_back(quantile > 0.0 ? max_all[i] / quantile : kInf);
    if (max_all[i] == 0.0)
      q.delta.push_back(1.0);
    else
      q.delta.push_back(max_warm[i] > 0.0 ? max_all[i] / max_warm[i] : kInf);
  }
  return q;
}

QuantileTrial permutation_quantile_trial(std::span<const SparseExample> data, double delta,
                                         double nu, std::size_t permutations, std::uint64_t seed) {
  const std::size_t d = dimension_of(data);
  QuantileTrial trial;
  trial.permutations = permutations;
  for (std::size_t p = 0; p < permutations; ++p) {
    const Dataset stream = permuted(data, mix_seed(seed, p));
    const PermutationQuantities q = permutation_quantities(d, delta, nu, stream);
    for (std::size_t i = 0; i < q.delta.size(); ++i)
      if (q.delta[i] > q.delta_bound[i]) {
        ++trial.violations;
        break;
      }
  }
  const double n = static_cast<double>(std::max<std::size_t>(permutations, 1));
  trial.violation_rate = static_cast<double>(trial.violations) / n;
  trial.allowed_rate = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / n);
  trial.passed = trial.violation_rate <= trial.allowed_rate;
  return trial;
}

BoundReport check_permutation_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                    double delta, double nu, std::uint64_t seed,
                                    const SubgradientOptions& oracle) {
  const Dataset stream = permuted(data, seed);
  ConditionedRunOptions options;
  options.recipe = ConditionerRecipe::streaming;
  options.radius = radius;
  options.eta = kSqrt2;
  options.project = true;
  options.clip_to_c = radius;
  const RegretLedger ledger = run_conditioned(stream, loss, options);
  const auto grad_sq = ledger.grad_sq();
  const EnclosingBox box = ledger.box();
  const std::size_t d = std::max<std::size_t>(ledger.dimension, 1);
  const PermutationQuantities q = permutation_quantities(d, delta, nu, stream);

  double max_label = 0.0;
  for (const auto& x : stream) max_label = std::max(max_label, std::abs(x.label()));
  const double r_max = max_round_regret(loss, radius, max_label);

  BoundReport report;
  report.check = "cor1";
  report.tau = q.tau;
  report.delta = q.delta;
  report.bound_value =
      static_cast<double>(q.tau) * r_max + streaming_regret_bound(grad_sq, box, q.delta, radius);
  for (std::size_t i = 0; i < grad_sq.size(); ++i)
    report.components.push_back(box.seen(i) && grad_sq[i] > 0.0
                                    ? radius * std::sqrt(grad_sq[i]) / box.max_abs(i) *
                                          scale_growth_factor(q.delta[i])
                                    : 0.0);
  report.details["r_max"] = r_max;
  for (std::size_t i = 0; i < q.delta_bound.size(); ++i)
    report.details["delta_bound_" + std::to_string(i)] = q.delta_bound[i];
  if (q.vacuous) report.warnings.push_back("tau >= T: bound is vacuous at this scale");

  return finish_against_oracle(std::move(report), ledger, stream, loss, radius, oracle);
}

Dataset random_instance(const InstanceSpec& spec) {
  if (spec.max_dimension == 0 || spec.min_count == 0 || spec.max_count < spec.min_count)
    throw std::invalid_argument("invalid instance spec");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick_d(std::clamp<std::size_t>(spec.min_dimension, 1, spec.max_dimension),
                                                    spec.max_dimension);
  std::uniform_int_distribution<std::size_t> pick_t(spec.min_count, spec.max_count);
  std::uniform_real_distribution<double> exponent(-3.0, 3.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t d = pick_d(rng);
  const std::size_t count = pick_t(rng);
  std::vector<double> scale(d);
  std::vector<double> w_true(d);
  for (std::size_t i = 0; i < d; ++i) {
    scale[i] = std::pow(10.0, exponent(rng));
    w_true[i] = normal(rng);
  }

  Dataset data;
  data.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    std::vector<Feature> features;
    double signal = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (coin(rng) >= 0.7) continue;
      double z = unif(rng);
      if (spec.constant_scale) z = z < 0.0 ? -1.0 : 1.0;
      signal += w_true[i] * z;
      features.push_back({i, z * scale[i]});
    }
    const double noisy = signal + 0.1 * normal(rng);
    const double y = spec.loss.requires_signed_label() ? (noisy >= 0.0 ? 1.0 : -1.0) : noisy;
    data.emplace_back(std::move(features), y);
  }
  return data;
}

std::string_view to_string(BoundCheck check) {
  switch (check) {
    case BoundCheck::descent: return "lemma1";
    case BoundCheck::transductive: return "thm1";
    case BoundCheck::streaming: return "thm2";
    case BoundCheck::permutation: return "cor1";
  }
  return "?";
}

BoundCheck parse_bound_check(std::string_view name) {
  if (name == "lemma1") return BoundCheck::descent;
  if (name == "thm1") return BoundCheck::transductive;
  if (name == "thm2") return BoundCheck::streaming;
  if (name == "cor1") return BoundCheck::permutation;
  throw std::invalid_argument("unknown check '" + std::string(name) + "'");
}

SuiteResult run_bound_suite(const SuiteOptions& options) {
  if (options.losses.empty()) throw std::invalid_argument("suite needs at least one loss");
  SuiteResult result;
  result.reports.resize(options.instances);

  parallel_for(options.instances, [&](std::size_t k) {
    const std::uint64_t seed = mix_seed(options.seed, k);
    InstanceSpec spec;
    spec.loss = options.losses[k % options.losses.size()];
    spec.max_dimension = options.max_dimension;
    if (options.check == BoundCheck::permutation) spec.min_dimension = options.max_dimension;
    spec.max_count = options.max_count;
    spec.min_count = std::min<std::size_t>(spec.min_count, options.max_count);
    spec.seed = seed;
    const Dataset data = random_instance(spec);
    SubgradientOptions oracle = options.oracle;
    oracle.seed = mix_seed(seed, 1);

    BoundReport report;
    switch (options.check) {
      case BoundCheck::descent: {
        ConditionedRunOptions run;
        run.recipe = ConditionerRecipe::streaming;
        run.radius = options.radius;
        run.project = false;
        if (options.constant_conditioner) {
          const RegretLedger pilot = run_conditioned(data, spec.loss, run);
          run.recipe = ConditionerRecipe::hindsight;
          run.fixed_diagonal = hindsight_conditioner(pilot.grad_sq(), pilot.box(), options.radius);
        }
        const RegretLedger ledger = run_conditioned(data, spec.loss, run);
        std::mt19937_64 rng(mix_seed(seed, 2));
        const EnclosingBox box = ledger.box();
        std::vector<double> u = random_point_in_ball(ledger.dimension, options.radius, 1, rng);
        std::vector<double> comparator(ledger.dimension, 0.0);
        for (std::size_t i = 0; i < ledger.dimension; ++i)
          if (box.seen(i)) comparator[i] = u[i] / box.max_abs(i);
        report = check_descent_inequality(ledger, spec.loss, comparator);
        break;
      }
      case BoundCheck::transductive:
        report = check_transductive_bound(data, spec.loss, options.radius, oracle);
        break;
      case BoundCheck::streaming:
        report = check_streaming_bound(data, spec.loss, options.radius, oracle);
        break;
      case BoundCheck::permutation:
        report = check_permutation_bound(data, spec.loss, options.radius, options.delta, options.nu,
                                         mix_seed(seed, 3), oracle);
        break;
    }
    report.instance = k;
    report.seed = seed;
    report.details["loss_kind"] = static_cast<double>(spec.loss.kind());
    result.reports[k] = std::move(report);
  });

  result.summary.instances = options.instances;
  result.summary.min_slack = kInf;
  for (const auto& r : result.reports) {
    if (!r.passed) ++result.summary.failures;
    result.summary.min_slack = std::min(result.summary.min_slack, r.slack);
  }
  if (options.check == BoundCheck::permutation)
    result.summary.tau = warmup_length(options.max_dimension, options.delta, options.nu);
  if (options.instances == 0) result.summary.min_slack = 0.0;
  return result;
}

}  // namespace nol
