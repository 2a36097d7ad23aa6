#include <doctest.h>

#include <cmath>
#include <random>

#include "projection_oracle.hpp"
#include "nol/conditioner.hpp"
#include "nol/dataset.hpp"

using namespace nol;

namespace {

const double kRoot2 = std::sqrt(2.0);

EnclosingBox unit_box(std::size_t d) { return EnclosingBox(std::vector<double>(d, 1.0)); }

}  // namespace

TEST_SUITE("conditioners") {
  TEST_CASE("enclosing box") {
    EnclosingBox box;
    box.observe(SparseExample({{1, -3.0}}, 0.0));
    box.observe(SparseExample({{0, 0.5}, {1, 2.0}}, 0.0));
    CHECK(box.dimension() == 2);
    CHECK(box.max_abs(1) == 3.0);
    CHECK(box.max_abs(7) == 0.0);
    CHECK(box.s_ii(0) == 4.0);
    CHECK(!box.s_ii(5));
    CHECK(!box.seen(5));
    CHECK_THROWS_AS(EnclosingBox(std::vector<double>{-1.0}), std::invalid_argument);
  }

  TEST_CASE("ball norm") {
    ComparatorBall ball{EnclosingBox(std::vector<double>{2.0, 0.0, 1.0}), 1.0, 1};
    CHECK(ball.norm(std::vector<double>{0.25, 0.0, -0.5}) == 1.0);
    CHECK(ball.contains(std::vector<double>{0.25, 0.0, -0.5}));
    CHECK(std::isinf(ball.norm(std::vector<double>{0.0, 1e-9, 0.0})));
    ball.q = 2;
    CHECK(ball.norm(std::vector<double>{0.0, 0.0, 3.0}) == 3.0);
    CHECK(ball.norm(std::vector<double>{1.5, 0.0, 4.0}) == 5.0);
  }

  TEST_CASE("hindsight conditioner") {
    const EnclosingBox box(std::vector<double>{2.0});
    CHECK(hindsight_conditioner(std::vector<double>{25.0}, box, 1.0)[0] == 10.0);
    CHECK(hindsight_conditioner(std::vector<double>{25.0}, box, 2.0)[0] == 5.0);
    CHECK(hindsight_conditioner(std::vector<double>{0.0}, box, 1.0)[0] == 0.0);
    // Unseen coordinate excluded.
    const auto a = hindsight_conditioner(std::vector<double>{25.0, 9.0}, box, 1.0);
    CHECK(a[1] == 0.0);
  }

  TEST_CASE("hindsight bound") {
    const EnclosingBox box(std::vector<double>{2.0});
    CHECK(hindsight_regret_bound(std::vector<double>{25.0}, box, 1.0) == 2.5);
    CHECK(hindsight_regret_bound(std::vector<double>{25.0, 25.0}, EnclosingBox(std::vector<double>{2.0, 2.0}), 1.0) == 5.0);
    CHECK(hindsight_regret_bound(std::vector<double>{0.0}, box, 1.0) == 0.0);
  }

  TEST_CASE("gradient square sums") {
    const Dataset data{SparseExample({{0, 1.0}}, 0.0), SparseExample({{0, 2.0}, {1, 1.0}}, 0.0)};
    const auto g = gradient_sq_sums(data, std::vector<double>{3.0, 2.0});
    CHECK(g[0] == 25.0);
    CHECK(g[1] == 4.0);
    CHECK_THROWS(gradient_sq_sums(data, std::vector<double>{1.0}));
  }

  TEST_CASE("streaming conditioner steps") {
    auto c = DiagonalConditioner::streaming(1.0, kRoot2);
    auto a = c.step({{0, -4.0}}, SparseExample({{0, 2.0}}, 1.0));
    CHECK(a[0] == doctest::Approx(8.0 / kRoot2).epsilon(1e-15));
    a = c.step({{0, 3.0}}, SparseExample({{0, 1.0}}, 1.0));
    CHECK(a[0] == doctest::Approx(10.0 / kRoot2).epsilon(1e-15));
    CHECK(a[0] == doctest::Approx(7.07107).epsilon(1e-6));
    auto z = DiagonalConditioner::streaming(1.0, kRoot2);
    CHECK(z.step({{0, 0.0}}, SparseExample({{0, 2.0}}, 1.0))[0] == 0.0);
  }

  TEST_CASE("transductive conditioner steps") {
    auto c = DiagonalConditioner::transductive(1.0, kRoot2, EnclosingBox(std::vector<double>{2.0}));
    CHECK(c.step({{0, -4.0}}, SparseExample({{0, 2.0}}, 1.0))[0] == doctest::Approx(8.0 / kRoot2).epsilon(1e-15));
    auto later = DiagonalConditioner::transductive(1.0, kRoot2, EnclosingBox(std::vector<double>{4.0}));
    CHECK(later.step({{0, -4.0}}, SparseExample({{0, 2.0}}, 1.0))[0] == doctest::Approx(16.0 / kRoot2).epsilon(1e-15));
    auto z = DiagonalConditioner::transductive(1.0, kRoot2, EnclosingBox(std::vector<double>{4.0}));
    CHECK(z.step({{0, 0.0}}, SparseExample({{0, 2.0}}, 1.0))[0] == 0.0);
  }

  TEST_CASE("fixed conditioner ignores the data") {
    auto c = DiagonalConditioner::fixed({3.0, 0.5});
    CHECK(c.step({{0, 9.0}}, SparseExample({{0, 9.0}}, 0.0))[0] == 3.0);
    CHECK(c.diagonal()[1] == 0.5);
    CHECK_THROWS(DiagonalConditioner::fixed({-1.0}));
  }

  TEST_CASE("streaming conditioner is nondecreasing") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto c = DiagonalConditioner::streaming(1.5, kRoot2);
    std::vector<double> prev(4, 0.0);
    for (int t = 0; t < 500; ++t) {
      std::vector<Feature> f;
      for (std::size_t i = 0; i < 4; ++i)
        if (rng() % 3) f.push_back({i, std::pow(10.0, static_cast<double>(i)) * u(rng)});
      const SparseExample x(f, 0.0);
      const auto a = c.step(per_coordinate_gradient(u(rng), x), x);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] >= prev[i]);
        prev[i] = a[i];
      }
    }
  }

  TEST_CASE("hindsight conditioner minimizes the worst-case objective") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t d = 1 + rng() % 5;
      std::vector<double> g(d), m(d);
      for (std::size_t i = 0; i < d; ++i) {
        g[i] = u(rng) * u(rng);
        m[i] = u(rng);
      }
      const EnclosingBox box(m);
      const double c = u(rng);
      const auto a = hindsight_conditioner(g, box, c);
      const double best = hindsight_objective(a, g, box, c);
      // At the optimum the objective equals the bound.
      CHECK(best == doctest::Approx(hindsight_regret_bound(g, box, c)).epsilon(1e-12));
      for (std::size_t i = 0; i < d; ++i)
        for (double f : {0.9, 1.1}) {
          auto p = a;
          p[i] *= f;
          CHECK(hindsight_objective(p, g, box, c) > best);
        }
    }
  }

  TEST_CASE("hindsight bound is invariant to coordinate rescaling") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      Dataset data;
      std::vector<double> deriv;
      for (int t = 0; t < 50; ++t) {
        data.emplace_back(std::vector<Feature>{{0, u(rng)}, {1, 3.0 * u(rng)}, {2, 0.1 * u(rng)}}, 0.0);
        deriv.push_back(u(rng));
      }
      std::vector<double> scale{std::pow(10.0, 3 * u(rng)), std::pow(10.0, 3 * u(rng)), std::pow(10.0, 3 * u(rng))};
      const Dataset scaled = apply_scaling(data, scale);
      const double a = hindsight_regret_bound(gradient_sq_sums(data, deriv), EnclosingBox::from_data(data), 1.0);
      const double b = hindsight_regret_bound(gradient_sq_sums(scaled, deriv), EnclosingBox::from_data(scaled), 1.0);
      CHECK(std::abs(a - b) <= 1e-12 * a);
    }
  }

  TEST_CASE("l2 data constraint bound chain") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t d = 1 + rng() % 6;
      std::vector<double> m(d);
      for (double& x : m) x = std::pow(10.0, 2 * u(rng));
      const std::size_t n = 20 + rng() % 80;
      Dataset data;
      std::vector<double> deriv;
      double deriv_sq = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> z(d);
        double norm = 0.0;
        for (double& x : z) {
          x = u(rng);
          norm += x * x;
        }
        norm = std::sqrt(norm) * (1.0 + std::abs(u(rng)));
        std::vector<Feature> f;
        for (std::size_t i = 0; i < d; ++i) f.push_back({i, m[i] * z[i] / norm});
        data.emplace_back(f, 0.0);
        deriv.push_back(3 * u(rng));
        deriv_sq += deriv.back() * deriv.back();
      }
      const double lhs = hindsight_regret_bound(gradient_sq_sums(data, deriv), EnclosingBox(m), 1.0);
      CHECK(lhs <= std::sqrt(static_cast<double>(d)) * std::sqrt(deriv_sq) + 1e-9);
    }
  }

  TEST_CASE("projection examples") {
    ComparatorBall ball{unit_box(2), 1.0, 1};
    auto w = project(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 1.0}, ball);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.0));
    w = project(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 4.0}, ball);
    CHECK(w[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.6).epsilon(1e-12));
    const std::vector<double> inside{0.25, -0.25};
    CHECK(project(inside, std::vector<double>{3.0, 0.1}, ball) == inside);
    ball.q = 2;
    const std::vector<double> inside2{0.3, -0.4};
    CHECK(project(inside2, std::vector<double>{3.0, 0.1}, ball) == inside2);
  }

  TEST_CASE("projection agrees with the grid oracle on the worked example") {
    const ComparatorBall ball{unit_box(2), 1.0, 1};
    const std::vector<double> wp{2.0, 1.0}, a{1.0, 4.0};
    const auto exact = project(wp, a, ball);
    const auto grid = test::grid_projection(wp, a, ball);
    CHECK(std::abs(test::metric_distance(exact, wp, a) - test::metric_distance(grid, wp, a)) <= 1e-6);
  }

  TEST_CASE("projection handles pinned coordinates") {
    // Coordinate 1 is off the box support and goes to 0; coordinate 2 has
    // A = 0, stays put and uses up part of the radius.
    const ComparatorBall ball{EnclosingBox(std::vector<double>{1.0, 0.0, 2.0}), 1.0, 1};
    const auto w = project(std::vector<double>{3.0, 5.0, 0.25}, std::vector<double>{1.0, 1.0, 0.0}, ball);
    CHECK(w[1] == 0.0);
    CHECK(w[2] == 0.25);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(project(std::vector<double>{1.0}, std::vector<double>{1.0}, ComparatorBall{unit_box(1), 1.0, 3}),
                    std::invalid_argument);
  }

  TEST_CASE("projection is feasible, optimal and idempotent") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t d = 1 + rng() % 3;
      std::vector<double> m(d), a(d), wp(d);
      for (std::size_t i = 0; i < d; ++i) {
        m[i] = std::pow(10.0, 0.5 * u(rng));
        a[i] = std::pow(10.0, u(rng));
        wp[i] = 3.0 * u(rng) / m[i];
      }
      const ComparatorBall ball{EnclosingBox(m), 0.5 + std::abs(u(rng)), trial % 2 ? 2 : 1};
      const auto w = project(wp, a, ball);
      CHECK(ball.norm(w) <= ball.radius + 1e-9);
      const auto grid = test::grid_projection(wp, a, ball);
      CHECK(test::metric_distance(w, wp, a) <= test::metric_distance(grid, wp, a) + 1e-6);
      const auto again = project(w, a, ball);
      for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(again[i] - w[i]) <= 1e-9);
    }
  }

  TEST_CASE("weighted l1 projection by sort and threshold") {
    const auto u = project_weighted_l1(std::vector<double>{2.0, 1.0}, std::vector<double>{1.0, 4.0}, 1.0);
    CHECK(u[0] == doctest::Approx(0.4));
    CHECK(u[1] == doctest::Approx(0.6));
    CHECK_THROWS(project_weighted_l1(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}, 1.0));
  }
}
