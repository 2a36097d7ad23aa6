#include "nol/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nol/errors.hpp"

namespace nol {

namespace {

void require_signed(double label) {
  if (label != 1.0 && label != -1.0)
    throw InvalidLabel("classification label must be -1 or +1, got " + std::to_string(label));
}

}  // namespace

LossEval Loss::eval(double prediction, double label) const {
  switch (kind_) {
    case LossKind::squared: {
      const double r = prediction - label;
      return {r * r, 2.0 * r};
    }
    case LossKind::hinge: {
      require_signed(label);
      const double margin = label * prediction;
      if (margin < 1.0) return {1.0 - margin, -label};
      return {0.0, 0.0};
    }
    case LossKind::logistic: {
      require_signed(label);
      const double m = label * prediction;
      // ln(1 + e^-m) = max(0, -m) + ln(1 + e^-|m|)
      const double value = std::max(0.0, -m) + std::log1p(std::exp(-std::abs(m)));
      // d/dm = -1 / (1 + e^m)
      const double dm = m >= 0.0 ? -std::exp(-m) / (1.0 + std::exp(-m)) : -1.0 / (1.0 + std::exp(m));
      return {value, label * dm};
    }
  }
  throw std::logic_error("unknown loss kind");
}

std::string_view Loss::name() const {
  switch (kind_) {
    case LossKind::squared: return "squared";
    case LossKind::hinge: return "hinge";
    case LossKind::logistic: return "logistic";
  }
  return "?";
}

Loss Loss::parse(std::string_view name) {
  if (name == "squared") return Loss(LossKind::squared);
  if (name == "hinge") return Loss(LossKind::hinge);
  if (name == "logistic") return Loss(LossKind::logistic);
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

}  // namespace nol
