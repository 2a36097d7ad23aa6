#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nol/sparse.hpp"

namespace nol {

/// Axis-aligned box enclosing the observed inputs: m_i = max |x_i|. The
/// implied diagonal constraint matrix has S_ii = 1 / m_i^2 on coordinates
/// seen nonzero; unseen coordinates have no S_ii.
class EnclosingBox {
 public:
  EnclosingBox() = default;
  explicit EnclosingBox(std::vector<double> max_abs);

  static EnclosingBox from_data(std::span<const SparseExample> data);

  void observe(const SparseExample& x);

  std::size_t dimension() const { return max_abs_.size(); }
  bool seen(std::size_t i) const { return i < max_abs_.size() && max_abs_[i] > 0.0; }
  double max_abs(std::size_t i) const { return i < max_abs_.size() ? max_abs_[i] : 0.0; }
  std::optional<double> s_ii(std::size_t i) const;
  std::span<const double> max_abs() const { return max_abs_; }

  void resize(std::size_t dimension);

 private:
  std::vector<double> max_abs_;
};

/// { w : ||S^{-1/2} w||_q <= C }, q in {1, 2}. With S_ii = 1/m_i^2 the
/// constraint reads (sum_i (m_i |w_i|)^q)^{1/q} <= C. Coordinates outside
/// the box support must be zero.
struct ComparatorBall {
  EnclosingBox box;
  double radius = 1.0;
  int q = 1;

  // ||S^{-1/2} w||_q over the support; +inf if w is nonzero off the support.
  double norm(std::span<const double> w) const;
  bool contains(std::span<const double> w, double tolerance = 1e-9) const;
};

enum class ConditionerRecipe { hindsight, transductive, streaming };

/// Diagonal conditioner A_t driving w_{t+1} = w_t - A_t^{-1} g_t.
///
/// streaming:    A_ii = sqrt(sum_j g_ji^2) * max_{j<=t} |x_ji| / (C eta)
/// transductive: A_ii = sqrt(sum_j g_ji^2 / S_ii) / (C eta), S from a full pass
/// hindsight:    a fixed A, e.g. from hindsight_conditioner
///
/// Entries are zero while a coordinate has no gradient mass; callers skip
/// those coordinates.
class DiagonalConditioner {
 public:
  static DiagonalConditioner streaming(double radius, double eta);
  static DiagonalConditioner transductive(double radius, double eta, EnclosingBox full_pass);
  static DiagonalConditioner fixed(std::vector<double> diagonal);

  // Records x_t and g_t, then returns the current A_t.
  std::span<const double> step(const SparseVector& gradient, const SparseExample& x);

  ConditionerRecipe recipe() const { return recipe_; }
  std::span<const double> diagonal() const { return diagonal_; }
  std::span<const double> grad_sq() const { return grad_sq_; }
  const EnclosingBox& box() const { return box_; }

 private:
  DiagonalConditioner(ConditionerRecipe recipe, double radius, double eta);
  void resize(std::size_t dimension);
  void refresh(std::size_t i);

  ConditionerRecipe recipe_;
  double radius_ = 1.0;
  double eta_ = 1.0;
  EnclosingBox box_;
  std::vector<double> grad_sq_;
  std::vector<double> diagonal_;
};

// A*_ii = sqrt(grad_sq_i / S_ii) / C; zero where grad_sq_i = 0 or the box has
// no S_ii.
std::vector<double> hindsight_conditioner(std::span<const double> grad_sq,
                                          const EnclosingBox& box, double radius);

// C * sum_i sqrt(S_ii * grad_sq_i).
double hindsight_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                              double radius);

// 0.5 * sum_i (A_ii C^2 S_ii + grad_sq_i / A_ii), the worst case over the
// comparator class of the fixed-conditioner regret bound. Coordinates without
// gradient mass or S_ii contribute nothing; A_ii <= 0 elsewhere gives +inf.
double hindsight_objective(std::span<const double> diagonal, std::span<const double> grad_sq,
                           const EnclosingBox& box, double radius);

// Per-coordinate sums of squared gradients g_ti = derivative_t * x_ti.
std::vector<double> gradient_sq_sums(std::span<const SparseExample> data,
                                     std::span<const double> derivatives);

/// argmin_{w in ball} (w - w')^T A (w - w').
///
/// q = 1 is solved exactly in u = S^{-1/2} w by sort-and-threshold on the
/// metric diag(A S); q = 2 by bisection on the Lagrange multiplier, returning
/// the feasible end of the bracket. Coordinates with A_ii = 0 are left as is
/// and their constraint mass is charged against the radius. Coordinates off
/// the box support are set to zero. A feasible w' is returned unchanged.
std::vector<double> project(std::span<const double> w_prime, std::span<const double> diagonal,
                            const ComparatorBall& ball);

// Weighted L1-ball projection: argmin sum_i a_i (u_i - v_i)^2 s.t.
// sum_i |u_i| <= radius, all a_i > 0.
std::vector<double> project_weighted_l1(std::span<const double> v, std::span<const double> a,
                                        double radius);

// Same for the L2 ball sum_i u_i^2 <= radius^2.
std::vector<double> project_weighted_l2(std::span<const double> v, std::span<const double> a,
                                        double radius);

}  // namespace nol
