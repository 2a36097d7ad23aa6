#include "nol/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nol/errors.hpp"

namespace nol {

SparseExample::SparseExample(std::vector<Feature> features, double label) : label_(label) {
  if (!std::isfinite(label)) throw DataError("non-finite label");
  features_.reserve(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    const Feature& f = features[k];
    if (!std::isfinite(f.value))
      throw DataError("non-finite value at feature index " + std::to_string(f.index));
    if (k > 0 && f.index <= features[k - 1].index)
      throw DataError("feature indices must be strictly increasing (index " +
                      std::to_string(f.index) + ")");
    if (f.value != 0.0) features_.push_back(f);
  }
}

SparseExample SparseExample::with_label(double label) const {
  SparseExample copy = *this;
  if (!std::isfinite(label)) throw DataError("non-finite label");
  copy.label_ = label;
  return copy;
}

double predict(std::span<const double> weights, const SparseExample& x) {
  double sum = 0.0;
  for (const Feature& f : x.features()) {
    if (f.index >= weights.size()) continue;
    const double w = weights[f.index];
    if (!std::isfinite(w))
      throw NumericFault("non-finite weight at coordinate " + std::to_string(f.index), f.index);
    sum += w * f.value;
  }
  if (!std::isfinite(sum)) throw NumericFault("non-finite prediction");
  return sum;
}

SparseVector per_coordinate_gradient(double derivative, const SparseExample& x) {
  if (!std::isfinite(derivative)) throw NumericFault("non-finite loss derivative");
  SparseVector g;
  g.reserve(x.features().size());
  for (const Feature& f : x.features()) g.push_back({f.index, derivative * f.value});
  return g;
}

std::size_t dimension_of(std::span<const SparseExample> data) {
  std::size_t d = 0;
  for (const auto& ex : data) d = std::max(d, ex.dimension());
  return d;
}

}  // namespace nol
