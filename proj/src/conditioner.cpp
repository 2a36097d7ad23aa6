#include "nol/conditioner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace nol {

EnclosingBox::EnclosingBox(std::vector<double> max_abs) : max_abs_(std::move(max_abs)) {
  for (double m : max_abs_)
    if (!(m >= 0.0) || !std::isfinite(m))
      throw std::invalid_argument("box extents must be finite and nonnegative");
}

EnclosingBox EnclosingBox::from_data(std::span<const SparseExample> data) {
  EnclosingBox box;
  for (const auto& x : data) box.observe(x);
  return box;
}

void EnclosingBox::resize(std::size_t dimension) {
  if (dimension > max_abs_.size()) max_abs_.resize(dimension, 0.0);
}

void EnclosingBox::observe(const SparseExample& x) {
  resize(x.dimension());
  for (const Feature& f : x.features())
    max_abs_[f.index] = std::max(max_abs_[f.index], std::abs(f.value));
}

std::optional<double> EnclosingBox::s_ii(std::size_t i) const {
  if (!seen(i)) return std::nullopt;
  return 1.0 / (max_abs_[i] * max_abs_[i]);
}

double ComparatorBall::norm(std::span<const double> w) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (!box.seen(i)) return std::numeric_limits<double>::infinity();
    const double u = box.max_abs(i) * std::abs(w[i]);
    acc += q == 1 ? u : u * u;
  }
  return q == 1 ? acc : std::sqrt(acc);
}

bool ComparatorBall::contains(std::span<const double> w, double tolerance) const {
  return norm(w) <= radius + tolerance;
}

DiagonalConditioner::DiagonalConditioner(ConditionerRecipe recipe, double radius, double eta)
    : recipe_(recipe), radius_(radius), eta_(eta) {
  if (!(radius > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("conditioner radius and eta must be positive");
}

DiagonalConditioner DiagonalConditioner::streaming(double radius, double eta) {
  return DiagonalConditioner(ConditionerRecipe::streaming, radius, eta);
}

DiagonalConditioner DiagonalConditioner::transductive(double radius, double eta,
                                                      EnclosingBox full_pass) {
  DiagonalConditioner c(ConditionerRecipe::transductive, radius, eta);
  c.box_ = std::move(full_pass);
  c.resize(c.box_.dimension());
  return c;
}

DiagonalConditioner DiagonalConditioner::fixed(std::vector<double> diagonal) {
  for (double a : diagonal)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw std::invalid_argument("conditioner entries must be finite and nonnegative");
  DiagonalConditioner c(ConditionerRecipe::hindsight, 1.0, 1.0);
  c.grad_sq_.assign(diagonal.size(), 0.0);
  c.diagonal_ = std::move(diagonal);
  return c;
}

void DiagonalConditioner::resize(std::size_t dimension) {
  if (dimension > grad_sq_.size()) grad_sq_.resize(dimension, 0.0);
  if (dimension > diagonal_.size()) diagonal_.resize(dimension, 0.0);
}

void DiagonalConditioner::refresh(std::size_t i) {
  const double scale = recipe_ == ConditionerRecipe::transductive || recipe_ == ConditionerRecipe::streaming
                           ? box_.max_abs(i)
                           : 0.0;
  diagonal_[i] = std::sqrt(grad_sq_[i]) * scale / (radius_ * eta_);
}

std::span<const double> DiagonalConditioner::step(const SparseVector& gradient,
                                                  const SparseExample& x) {
  if (recipe_ == ConditionerRecipe::hindsight) return diagonal_;
  if (recipe_ == ConditionerRecipe::streaming) box_.observe(x);
  resize(std::max(x.dimension(), gradient.empty() ? 0 : gradient.back().index + 1));
  for (const Feature& g : gradient) grad_sq_[g.index] += g.value * g.value;
  if (recipe_ == ConditionerRecipe::streaming) {
    // The running max moves only on x's support, the gradient mass only on
    // the gradient's support; both are subsets of x's support.
    for (const Feature& f : x.features()) refresh(f.index);
  } else {
    for (const Feature& g : gradient) refresh(g.index);
  }
  return diagonal_;
}

std::vector<double> hindsight_conditioner(std::span<const double> grad_sq,
                                          const EnclosingBox& box, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  std::vector<double> a(grad_sq.size(), 0.0);
  for (std::size_t i = 0; i < grad_sq.size(); ++i) {
    if (!box.seen(i) || grad_sq[i] == 0.0) continue;
    a[i] = std::sqrt(grad_sq[i]) * box.max_abs(i) / radius;
  }
  return a;
}

double hindsight_regret_bound(std::span<const double> grad_sq, const EnclosingBox& box,
                              double radius) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grad_sq.size(); ++i) {
    if (!box.seen(i) || grad_sq[i] == 0.0) continue;
    sum += std::sqrt(grad_sq[i]) / box.max_abs(i);
  }
  return radius * sum;
}

double hindsight_objective(std::span<const double> diagonal, std::span<const double> grad_sq,
                           const EnclosingBox& box, double radius) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grad_sq.size(); ++i) {
    if (!box.seen(i) || grad_sq[i] == 0.0) continue;
    const double a = i < diagonal.size() ? diagonal[i] : 0.0;
    if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
    const double s = *box.s_ii(i);
    sum += a * radius * radius * s + grad_sq[i] / a;
  }
  return 0.5 * sum;
}

std::vector<double> gradient_sq_sums(std::span<const SparseExample> data,
                                     std::span<const double> derivatives) {
  if (data.size() != derivatives.size())
    throw std::invalid_argument("one derivative per example required");
  std::vector<double> sums(dimension_of(data), 0.0);
  for (std::size_t t = 0; t < data.size(); ++t)
    for (const Feature& f : data[t].features()) {
      const double g = derivatives[t] * f.value;
      sums[f.index] += g * g;
    }
  return sums;
}

std::vector<double> project_weighted_l1(std::span<const double> v, std::span<const double> a,
                                        double radius) {
  if (v.size() != a.size()) throw std::invalid_argument("metric and point differ in length");
  double l1 = 0.0;
  for (double x : v) l1 += std::abs(x);
  std::vector<double> u(v.begin(), v.end());
  if (l1 <= radius) return u;
  if (radius <= 0.0) {
    std::fill(u.begin(), u.end(), 0.0);
    return u;
  }

  // Coordinate i is active while lambda < 2 a_i |v_i|; on the active set
  // sum_i (|v_i| - lambda / (2 a_i)) = radius.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) order.push_back(i);
  std::vector<double> breakpoint(v.size(), 0.0);
  for (std::size_t i : order) breakpoint[i] = 2.0 * a[i] * std::abs(v[i]);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return breakpoint[x] > breakpoint[y] || (breakpoint[x] == breakpoint[y] && x < y);
  });

  double abs_sum = 0.0;
  double inv_sum = 0.0;
  double lambda = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    abs_sum += std::abs(v[i]);
    inv_sum += 1.0 / (2.0 * a[i]);
    lambda = (abs_sum - radius) / inv_sum;
    const double next = k + 1 < order.size() ? breakpoint[order[k + 1]] : 0.0;
    if (lambda >= next) break;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double magnitude = std::max(0.0, std::abs(v[i]) - lambda / (2.0 * a[i]));
    u[i] = std::copysign(magnitude, v[i]);
  }
  return u;
}

std::vector<double> project_weighted_l2(std::span<const double> v, std::span<const double> a,
                                        double radius) {
  if (v.size() != a.size()) throw std::invalid_argument("metric and point differ in length");
  double sq = 0.0;
  for (double x : v) sq += x * x;
  std::vector<double> u(v.begin(), v.end());
  if (sq <= radius * radius) return u;
  if (radius <= 0.0) {
    std::fill(u.begin(), u.end(), 0.0);
    return u;
  }

  auto shrunk = [&](double mu) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = a[i] * v[i] / (a[i] + mu);
    return out;
  };
  auto sq_norm = [](const std::vector<double>& x) {
    return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
  };

  const double a_max = *std::max_element(a.begin(), a.end());
  double lo = 0.0;
  double hi = a_max * std::sqrt(sq) / radius;
  while (sq_norm(shrunk(hi)) > radius * radius) hi *= 2.0;
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (sq_norm(shrunk(mid)) > radius * radius)
      lo = mid;
    else
      hi = mid;
  }
  return shrunk(hi);
}

std::vector<double> project(std::span<const double> w_prime, std::span<const double> diagonal,
                            const ComparatorBall& ball) {
  if (ball.q != 1 && ball.q != 2) throw std::invalid_argument("ball norm index must be 1 or 2");
  if (!(ball.radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  std::vector<double> w(w_prime.begin(), w_prime.end());
  if (ball.norm(w) <= ball.radius) return w;

  const EnclosingBox& box = ball.box;
  std::vector<std::size_t> free;
  double fixed_mass = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!box.seen(i)) {
      w[i] = 0.0;
      continue;
    }
    const double a = i < diagonal.size() ? diagonal[i] : 0.0;
    if (a > 0.0) {
      free.push_back(i);
    } else {
      const double u = box.max_abs(i) * std::abs(w[i]);
      fixed_mass += ball.q == 1 ? u : u * u;
    }
  }
  if (free.empty()) return w;

  const double budget = ball.q == 1 ? std::max(0.0, ball.radius - fixed_mass)
                                    : std::sqrt(std::max(0.0, ball.radius * ball.radius - fixed_mass));
  std::vector<double> v(free.size());
  std::vector<double> metric(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t i = free[k];
    const double m = box.max_abs(i);
    v[k] = m * w[i];
    metric[k] = diagonal[i] / (m * m);
  }
  const std::vector<double> u =
      ball.q == 1 ? project_weighted_l1(v, metric, budget) : project_weighted_l2(v, metric, budget);
  for (std::size_t k = 0; k < free.size(); ++k) {
    const std::size_t i = free[k];
    if (u[k] != v[k]) w[i] = u[k] / box.max_abs(i);
  }
  return w;
}

}  // namespace nol
