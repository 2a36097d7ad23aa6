#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nol/dataset.hpp"
#include "nol/eval.hpp"
#include "nol/learner.hpp"
#include "nol/regret.hpp"

namespace nol {

inline constexpr int kReportSchemaVersion = 1;

// Where the examples came from and a digest of their content.
struct DatasetEcho {
  std::string source;
  std::string digest;
  std::size_t examples = 0;
  std::size_t dimension = 0;
};

struct RunConfigEcho {
  LearnerConfig learner;
  Loss loss{LossKind::squared};
  NormalizeMode normalization = NormalizeMode::none;
  Task task = Task::binary;
  std::uint64_t seed = 0;
  DatasetEcho dataset;
  bool warm_start = false;
};

struct RunReport {
  RunConfigEcho config;
  // Every trace_stride-th progressive loss, starting with the first.
  std::vector<double> trace;
  std::size_t trace_stride = 1;
  double average_loss = 0.0;
  // 0-1 loss for classification, scaled squared loss for regression.
  double average_metric = 0.0;
  StateSummary final_state;
  double elapsed_seconds = 0.0;
  // Present when the caller asked for the full state.
  std::optional<LearnerState> state;
};

// Digest of the svmlight rendering of the examples.
std::string dataset_digest(std::span<const SparseExample> data);

nlohmann::json to_json(const LearnerState& state);
// Throws DataError on a malformed state object.
LearnerState state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunReport& report);

struct SweepEcho {
  SweepSpec spec;
  std::uint64_t seed = 0;
  DatasetEcho dataset;
  double elapsed_seconds = 0.0;
};

nlohmann::json to_json(const ComparisonReport& report, const SweepEcho& echo);

nlohmann::json to_json(const BoundReport& report);

struct SuiteEcho {
  SuiteOptions options;
  double elapsed_seconds = 0.0;
};

nlohmann::json to_json(const SuiteResult& result, const SuiteEcho& echo);

// CSV "learner,eta,loss", one row per curve point; failed points have an
// empty loss.
void write_eta_curves_csv(std::ostream& out, const ComparisonReport& report);

struct ScaleCurvePoint {
  LearnerKind learner = LearnerKind::nag;
  double scale = 1.0;
  double loss = 0.0;
};

// CSV "learner,s,loss".
void write_scale_curves_csv(std::ostream& out, std::span<const ScaleCurvePoint> points);

}  // namespace nol
