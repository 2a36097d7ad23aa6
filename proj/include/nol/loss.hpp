#pragma once

#include <string>
#include <string_view>

namespace nol {

enum class LossKind { squared, hinge, logistic };

struct LossEval {
  double value = 0.0;
  double derivative = 0.0;  // d loss / d prediction
};

/// Convex loss of a scalar prediction. Hinge and logistic require labels in
/// {-1, +1}; squared accepts any finite label.
class Loss {
 public:
  constexpr explicit Loss(LossKind kind = LossKind::squared) : kind_(kind) {}

  LossKind kind() const { return kind_; }
  bool requires_signed_label() const { return kind_ != LossKind::squared; }

  // Hinge subgradient at the kink y*yhat == 1 is 0.
  LossEval eval(double prediction, double label) const;
  double value(double prediction, double label) const { return eval(prediction, label).value; }

  std::string_view name() const;
  static Loss parse(std::string_view name);

  friend bool operator==(const Loss&, const Loss&) = default;

 private:
  LossKind kind_;
};

}  // namespace nol
