#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nol/sparse.hpp"

namespace nol {

using Dataset = std::vector<SparseExample>;

enum class Task { binary, multiclass, regression };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

// "label idx:val idx:val ...", indices strictly increasing, '#' starts a
// comment. Zero values are dropped.
SparseExample parse_svmlight_line(std::string_view line, std::size_t line_number = 1);

// Inverse of parse_svmlight_line; values are written with round-trip precision.
std::string to_svmlight_line(const SparseExample& example);

// Blank and comment-only lines are skipped.
Dataset read_svmlight(std::istream& in);
void write_svmlight(std::ostream& out, std::span<const SparseExample> data);

struct DelimitedOptions {
  // 0 picks ',' or '\t' from the header row.
  char delimiter = 0;
  // Defaults to the last column.
  std::optional<std::string> label_column;
};

struct DelimitedDataset {
  Dataset examples;
  // Name of every feature index: numeric columns keep their header name,
  // one-hot features are "column=value".
  std::vector<std::string> feature_names;
};

/// Delimited text with a header row. Numeric columns map to one feature each,
/// in column order; a column holding any non-numeric value is one-hot
/// expanded after all numeric columns, categories indexed by first
/// appearance. Empty cells and "?" are missing and produce no feature.
DelimitedDataset read_delimited(std::istream& in, const DelimitedOptions& options = {});

// {0, 1} -> {-1, +1}. Other labels raise DataError.
Dataset zero_one_to_signed(std::span<const SparseExample> data);

enum class NormalizeMode { none, maxnorm, sqnorm };

std::string_view to_string(NormalizeMode mode);
NormalizeMode parse_normalize_mode(std::string_view name);

/// Per-coordinate divisors from a statistics pass. maxnorm uses max |x_i|;
/// sqnorm uses sqrt(sum_t x_ti^2 / T) over all T rows, zeros included.
/// A zero divisor leaves the coordinate unchanged.
struct NormalizerStats {
  NormalizeMode mode = NormalizeMode::none;
  std::vector<double> divisor;

  static NormalizerStats compute(std::span<const SparseExample> data, NormalizeMode mode);
  SparseExample apply(const SparseExample& example) const;
  Dataset apply(std::span<const SparseExample> data) const;
};

struct Prenormalized {
  NormalizerStats stats;
  Dataset data;
};

Prenormalized prenormalize(std::span<const SparseExample> data, NormalizeMode mode);

// (max_t y_t - min_t y_t)^2. Throws DataError when all labels are equal.
double regression_loss_scale(std::span<const SparseExample> data);

// x_ti <- D_i x_ti; coordinates past the end of D are left unchanged.
Dataset apply_scaling(std::span<const SparseExample> data, std::span<const double> scale);

/// Two-dimensional stream with x uniform on [-1, 1]^2 and y = sign(x_0 + x_1)
/// (ties to +1), then feature 0 multiplied by s. The base draw depends only on
/// the seed.
Dataset synth_figure1(double s, std::size_t count, std::uint64_t seed);

/// Linear-model data with per-feature magnitudes 10^e, e spread evenly over
/// [min_log10_scale, max_log10_scale]. Regression labels are w^T z + noise on
/// the unscaled draw z; classification labels are its sign.
struct LinearSynthSpec {
  std::size_t dimension = 5;
  std::size_t count = 1000;
  double min_log10_scale = 0.0;
  double max_log10_scale = 0.0;
  double noise = 0.1;
  // Probability that a feature is present in an example.
  double density = 1.0;
  Task task = Task::regression;
  std::uint64_t seed = 1;
};

Dataset synth_linear(const LinearSynthSpec& spec);

// Parses "figure1:s=1,T=1000" or "linear:d=5,T=1000,lo=-3,hi=3,noise=0.1,
// density=1,task=regression". The seed comes from the caller.
Dataset synth_from_spec(std::string_view spec, std::uint64_t seed);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_digest(std::string_view bytes);

}  // namespace nol
