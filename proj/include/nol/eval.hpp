#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nol/dataset.hpp"
#include "nol/learner.hpp"
#include "nol/loss.hpp"

namespace nol {

/// Progressive validation: every example is scored before it is learned.
///
/// `metric` is the per-example evaluation loss: 0-1 loss for binary and
/// multiclass tasks (a zero prediction counts as an error), and squared loss
/// divided by the regression loss scale for regression. `training_loss` is the
/// loss the learner optimizes.
struct ProgressiveResult {
  std::vector<double> predictions;
  std::vector<double> training_loss;
  std::vector<double> metric;
  double average_training_loss = 0.0;
  double average_metric = 0.0;
  StateSummary final_state;
};

struct ProgressiveOptions {
  Task task = Task::binary;
  // Required for regression; computed from the data when absent.
  std::optional<double> regression_scale;
};

/// Binary and regression tasks run a single learner. Multiclass runs one
/// learner per class (labels are class ids) on +-1 targets, all sharing the
/// config, and predicts the argmax raw score; the training loss reported is
/// the sum over the per-class learners.
ProgressiveResult progressive_validation(const LearnerConfig& config, Loss loss,
                                         std::span<const SparseExample> data,
                                         const ProgressiveOptions& options);

// Powers of base in [lo, hi], ascending.
std::vector<double> eta_grid(double lo, double hi, double base = 2.0);

// Default sweep range 2^-20 .. 2^6.
std::vector<double> default_eta_grid();

struct CurvePoint {
  double eta = 0.0;
  // NaN when the run failed.
  double loss = 0.0;
  std::string status = "ok";
};

struct SweepCell {
  LearnerKind learner = LearnerKind::nag;
  NormalizeMode normalization = NormalizeMode::none;
  std::vector<CurvePoint> curve;
  std::optional<double> eta_star;
  double best_loss = 0.0;
  // Per-example metric of the run at eta_star.
  std::vector<double> best_metric;
};

struct SweepSpec {
  std::vector<double> etas = default_eta_grid();
  std::vector<LearnerKind> learners{LearnerKind::nag, LearnerKind::adagrad};
  std::vector<NormalizeMode> normalizations{NormalizeMode::none};
  Loss loss{LossKind::hinge};
  Task task = Task::binary;
  EtaDecay eta_decay = EtaDecay::none;
  std::optional<double> clip_to_c;

  void validate() const;
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
};

struct SignificanceVerdict {
  ConfidenceInterval a;
  ConfidenceInterval b;
  bool significant = false;
};

struct PairVerdict {
  std::size_t cell_a = 0;
  std::size_t cell_b = 0;
  SignificanceVerdict verdict;
};

struct ComparisonReport {
  std::vector<SweepCell> cells;
  std::vector<PairVerdict> pairs;
};

/// Runs every (normalization, learner, eta) cell, in parallel, and picks
/// eta* as the first grid point attaining the minimum average metric. A cell
/// whose run throws is recorded with its status and skipped for eta*.
/// Pairs compare every two cells sharing a normalization.
ComparisonReport sweep(const SweepSpec& spec, std::span<const SparseExample> data);

// Two-sided interval on a Bernoulli-type mean from the relative entropy
// Chernoff bound: all q with n KL(mean || q) <= ln(1 / tail_probability).
ConfidenceInterval kl_confidence_interval(double mean, std::size_t n, double tail_probability);

// Bernoulli relative entropy KL(p || q).
double bernoulli_kl(double p, double q);

/// Intervals for both sequences at total failure probability
/// failure_probability (split evenly over the four tails); significant iff
/// they are disjoint. Losses must lie in [0, 1] and the lengths must match.
SignificanceVerdict significance(std::span<const double> losses_a, std::span<const double> losses_b,
                                 double failure_probability = 0.1);

// Zero-one loss of a signed prediction: 0 when sign(prediction) == label.
double zero_one_loss(double prediction, double label);

}  // namespace nol
