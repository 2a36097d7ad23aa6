#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nol/conditioner.hpp"
#include "nol/dataset.hpp"
#include "nol/loss.hpp"
#include "nol/sparse.hpp"

namespace nol {

// Relative tolerance between the two hindsight oracles; empirical regret is
// widened by this fraction of the comparator loss before bounds are checked.
inline constexpr double kOracleTolerance = 1e-3;
// Absolute slack below which a bound check fails.
inline constexpr double kBoundTolerance = 1e-6;

enum class StreamOrder { as_is, worst_first, random_permutation };

/// The scaling adversary: a hidden positive diagonal applied to a base stream
/// before any round, followed by an ordering policy.
struct AdversaryConfig {
  std::vector<double> hidden_scale;
  StreamOrder order = StreamOrder::as_is;
  std::uint64_t seed = 0;
};

Dataset adversarial_stream(std::span<const SparseExample> base, const AdversaryConfig& config);

// Uniformly random permutation (Fisher-Yates on a seeded mt19937_64).
Dataset permuted(std::span<const SparseExample> data, std::uint64_t seed);

struct LedgerRound {
  SparseExample example;
  double prediction = 0.0;
  double loss = 0.0;
  double derivative = 0.0;
  // Nonzero entries of A_t.
  SparseVector conditioner;
  // w_t, the weights used for the prediction.
  std::vector<double> weights;

  // g_t = derivative * x_t on the support.
  SparseVector gradient() const { return per_coordinate_gradient(derivative, example); }
};

struct RegretLedger {
  std::size_t dimension = 0;
  bool projected = false;
  bool conditioner_logged = true;
  std::vector<LedgerRound> rounds;
  std::vector<double> final_weights;

  std::vector<double> grad_sq() const;
  EnclosingBox box() const;
  Dataset examples() const;
};

struct ConditionedRunOptions {
  ConditionerRecipe recipe = ConditionerRecipe::streaming;
  double radius = 1.0;
  double eta = 1.4142135623730951;
  bool project = true;
  std::optional<double> clip_to_c;
  // Used when recipe == hindsight.
  std::vector<double> fixed_diagonal;
};

/// w_{t+1} = Pi(w_t - A_t^{-1} g_t) from w_1 = 0. The projection uses the q=1
/// ball of the full-pass box for the transductive and fixed recipes and of
/// the running box for the streaming recipe.
RegretLedger run_conditioned(std::span<const SparseExample> data, Loss loss,
                             const ConditionedRunOptions& options);

double total_loss(std::span<const SparseExample> data, Loss loss, std::span<const double> w);

struct HindsightSolution {
  std::vector<double> weights;
  double total_loss = 0.0;
};

// Exhaustive grid in u = S^{-1/2} w with spacing step_fraction * C; at most
// three coordinates with data.
HindsightSolution best_in_hindsight_grid(std::span<const SparseExample> data, Loss loss,
                                         const ComparatorBall& ball, double step_fraction = 1e-3);

struct SubgradientOptions {
  std::size_t iterations = 100000;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  // Step size is step_scale * C / sqrt(k) along the normalized subgradient.
  double step_scale = 1.0;
};

// Projected subgradient descent in u-space keeping the best iterate; the
// first restart starts at 0, the rest at random feasible points.
HindsightSolution best_in_hindsight_subgradient(std::span<const SparseExample> data, Loss loss,
                                                const ComparatorBall& ball,
                                                const SubgradientOptions& options = {});

// sum_t loss(yhat_t, y_t) - sum_t loss(w^T x_t, y_t).
double empirical_regret(const RegretLedger& ledger, Loss loss, std::span<const double> comparator);

// Per-round terms of empirical_regret.
std::vector<double> per_round_regret(const RegretLedger& ledger, Loss loss,
                                     std::span<const double> comparator);

// Largest single-round regret with predictions truncated to [-C, C]:
// C + 1 for hinge and logistic, 4 C max(C, max |y|) for squared.
double max_round_regret(Loss loss, double radius, double max_abs_label);

struct BoundReport {
  std::string check;
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  double empirical_regret = 0.0;
  double bound_value = 0.0;
  double slack = 0.0;
  bool passed = false;
  // Per-coordinate bound terms.
  std::vector<double> components;
  std::vector<double> delta;
  std::optional<std::uint64_t> tau;
  // Hindsight comparator the regret was measured against, when one was used.
  std::vector<double> comparator;
  std::map<std::string, double> details;
  std::vector<std::string> warnings;
};

// C * sum_i sqrt(S_ii G_i) scaled by 2 sqrt(2).
double transductive_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                                 double radius);

// Per-coordinate growth factor (1 + 6 delta + delta^2) / (2 sqrt 2).
double scale_growth_factor(double delta);

// C * sum_i sqrt(G_i) / m_i * scale_growth_factor(delta_i).
double streaming_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                              std::span<const double> delta, double radius);

// delta_i = max_t |x_ti| / |x_{t0,i}|, t0 the first round feature i is nonzero.
// Coordinates never nonzero get 1.
std::vector<double> first_sight_ratios(std::span<const SparseExample> data);

/// Checks 2 R_T(w) <= (w_1 - w)^T A_1 (w_1 - w)
///                   + sum_{t<T} (w_{t+1} - w)^T (A_{t+1} - A_t) (w_{t+1} - w)
///                   + sum_t g_t^T A_t^{-1} g_t
/// on an unprojected ledger. The printed variant of the middle sum, pairing
/// w_t with A_{t+1} - A_t, is reported in details as "middle_sum_w_t".
BoundReport check_descent_inequality(const RegretLedger& ledger, Loss loss,
                                     std::span<const double> comparator);

// Two-pass run with the full-pass conditioner, eta = sqrt 2 and projection.
BoundReport check_transductive_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                     const SubgradientOptions& oracle = {});

// Single pass with the running-box conditioner, eta = sqrt 2 and projection
// onto the running ball.
BoundReport check_streaming_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                  const SubgradientOptions& oracle = {});

// ceil(ln(d / delta) / nu).
std::uint64_t warmup_length(std::size_t dimension, double delta, double nu);

// Smallest v among values with at least ceil(level * n) values <= v.
double nearest_rank_quantile(std::vector<double> values, double level);

struct PermutationQuantities {
  std::uint64_t tau = 0;
  // max_{t<=T} |x_ti| / max_{t<=tau} |x_ti|; +inf if unseen in the warm-up.
  std::vector<double> delta;
  // Quantile({|x_ti|}_t, 1 - nu) over all rounds, zeros included.
  std::vector<double> quantile;
  // max_t |x_ti| / quantile_i; +inf when the quantile is 0.
  std::vector<double> delta_bound;
  bool vacuous = false;  // tau >= T
};

PermutationQuantities permutation_quantities(std::size_t dimension, double delta, double nu,
                                             std::span<const SparseExample> stream);

struct QuantileTrial {
  std::size_t permutations = 0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  // delta + 3 binomial standard deviations.
  double allowed_rate = 0.0;
  bool passed = false;
};

// Fraction of random permutations where some delta_i exceeds its quantile
// bound.
QuantileTrial permutation_quantile_trial(std::span<const SparseExample> data, double delta,
                                         double nu, std::size_t permutations, std::uint64_t seed);

// Streaming run on a random permutation with predictions truncated to [-C, C];
// bound is tau * R_max plus the streaming bound with warm-up ratios.
BoundReport check_permutation_bound(std::span<const SparseExample> data, Loss loss, double radius,
                                    double delta, double nu, std::uint64_t seed,
                                    const SubgradientOptions& oracle = {});

/// Random lab instance: d uniform in [min_dimension, max_dimension], T uniform in
/// [min_count, max_count], a hidden scale 10^U(-3,3) per feature, features
/// present with probability 0.7. Hinge and logistic instances get {-1,+1}
/// labels from a noisy linear rule.
struct InstanceSpec {
  std::size_t min_dimension = 1;
  std::size_t max_dimension = 5;
  std::size_t min_count = 50;
  std::size_t max_count = 1000;
  Loss loss{LossKind::squared};
  // Every nonzero |x_ti| equals the coordinate's hidden scale.
  bool constant_scale = false;
  std::uint64_t seed = 0;
};

Dataset random_instance(const InstanceSpec& spec);

enum class BoundCheck { descent, transductive, streaming, permutation };

std::string_view to_string(BoundCheck check);
BoundCheck parse_bound_check(std::string_view name);

struct SuiteOptions {
  BoundCheck check = BoundCheck::transductive;
  std::size_t instances = 10;
  std::uint64_t seed = 0;
  double radius = 1.0;
  std::vector<Loss> losses{Loss(LossKind::squared), Loss(LossKind::hinge)};
  // The permutation check uses exactly this many features.
  std::size_t max_dimension = 5;
  std::size_t max_count = 1000;
  // Descent check only: replace the streaming conditioner by a fixed one.
  bool constant_conditioner = false;
  // Permutation check only.
  double delta = 0.1;
  double nu = 0.5;
  SubgradientOptions oracle;
};

struct SuiteSummary {
  std::size_t instances = 0;
  std::size_t failures = 0;
  double min_slack = 0.0;
  std::optional<std::uint64_t> tau;
};

struct SuiteResult {
  std::vector<BoundReport> reports;
  SuiteSummary summary;
};

// Instances run in parallel; instance k uses seed (options.seed, k) and loss
// options.losses[k % size].
SuiteResult run_bound_suite(const SuiteOptions& options);

}  // namespace nol
