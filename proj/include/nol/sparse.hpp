#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nol {

struct Feature {
  std::size_t index = 0;
  double value = 0.0;

  friend bool operator==(const Feature&, const Feature&) = default;
};

// Sparse vector with strictly increasing indices. Unlike SparseExample it may
// hold explicit zeros (e.g. the gradient of an example with zero derivative).
using SparseVector = std::vector<Feature>;

/// One labeled observation. Construction validates the feature list: indices
/// must be strictly increasing and values finite; zero values are dropped.
class SparseExample {
 public:
  SparseExample() = default;
  SparseExample(std::vector<Feature> features, double label);

  std::span<const Feature> features() const { return features_; }
  double label() const { return label_; }
  bool empty() const { return features_.empty(); }

  // One past the largest index, 0 for an empty example.
  std::size_t dimension() const {
    return features_.empty() ? 0 : features_.back().index + 1;
  }

  SparseExample with_label(double label) const;

  friend bool operator==(const SparseExample&, const SparseExample&) = default;

 private:
  std::vector<Feature> features_;
  double label_ = 0.0;
};

// Sum of w_i * x_i over the support of x. Indices past the end of w read as 0.
// Throws NumericFault if a weight on the support is not finite.
double predict(std::span<const double> weights, const SparseExample& x);

// g_i = derivative * x_i on the support of x.
SparseVector per_coordinate_gradient(double derivative, const SparseExample& x);

// Largest dimension over a dataset.
std::size_t dimension_of(std::span<const SparseExample> data);

}  // namespace nol
