#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nol/loss.hpp"
#include "nol/sparse.hpp"

namespace nol {

enum class LearnerKind { ng, nag, snag, adagrad, sgd };

enum class EtaDecay { none, inverse_sqrt_t };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);

// "none" or "inverse_sqrt_t".
std::string_view to_string(EtaDecay decay);
EtaDecay parse_eta_decay(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::nag;
  double eta = 1.0;
  // Only meaningful for NG and SGD; the adaptive rules decay through G.
  EtaDecay eta_decay = EtaDecay::none;
  // Truncate predictions to [-C, C] before they reach the loss.
  std::optional<double> clip_to_c;

  // Throws std::invalid_argument on a negative/non-finite eta, non-positive
  // clip or a decay flag on a kind that does not support it.
  void validate() const;
};

/// Per-coordinate learner state.
///
/// `scale` is the running max |x_i| for NG/NAG and the running sum of x_i^2
/// for sNAG. `sigma` is only used by sNAG and holds the root second moment
/// the weight is currently expressed in. `grad_sq` accumulates g_i^2 for the
/// adaptive rules. `normalizer` is the global N and `examples` counts observe
/// calls.
struct LearnerState {
  std::vector<double> weights;
  std::vector<double> scale;
  std::vector<double> grad_sq;
  std::vector<double> sigma;
  double normalizer = 0.0;
  std::uint64_t examples = 0;

  std::size_t capacity() const { return weights.size(); }
  std::size_t nonzero_weights() const;

  friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

struct Observation {
  double prediction = 0.0;  // clipped when clipping is enabled
  double loss = 0.0;
  double derivative = 0.0;
};

/// Online linear learner behind a single observe/update interface. Each call
/// runs the scale pass, predicts, accumulates N and applies the update.
class Learner {
 public:
  Learner(LearnerConfig config, Loss loss);

  Observation observe(const SparseExample& example);

  // Prediction with the current weights, no state change.
  double predict(const SparseExample& example) const;

  const LearnerState& state() const { return state_; }
  const LearnerConfig& config() const { return config_; }
  const Loss& loss() const { return loss_; }

  // Warm restart. The state's vectors must have equal length.
  void restore(LearnerState state);

 private:
  void ensure_capacity(std::size_t dimension);
  double clip(double prediction) const;

  LearnerConfig config_;
  Loss loss_;
  LearnerState state_;
};

struct StateSummary {
  std::size_t nonzero_weights = 0;
  double normalizer = 0.0;
  std::uint64_t examples = 0;
};

struct RunResult {
  std::vector<double> predictions;
  std::vector<double> losses;
  double average_loss = 0.0;
  LearnerState final_state;

  StateSummary summary() const;
};

// Progressive run: fold observe over the stream. Errors are rethrown with the
// failing example index in the message.
RunResult run_stream(const LearnerConfig& config, Loss loss,
                     std::span<const SparseExample> stream);

// Continue from an existing learner.
RunResult run_stream(Learner& learner, std::span<const SparseExample> stream);

}  // namespace nol
