#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "idfield/quadrature.hpp"

using namespace idfield;

TEST_CASE("tensor quadrature integrates smooth 1d functions") {
  Box box{Interval{0.0, 2.0}};
  auto res = tensor_quad([](const Vec& s) { return std::exp(-2.0 * s[0]); }, box);
  double exact = (1.0 - std::exp(-4.0)) / 2.0;
  REQUIRE(res.converged);
  REQUIRE(res.value == Catch::Approx(exact).epsilon(1e-10));
  REQUIRE(std::abs(res.value - exact) <= 10 * res.abs_error + 1e-12);
}

TEST_CASE("tensor quadrature handles 2d products") {
  Box box{Interval{0.0, 1.0}, Interval{-1.0, 1.0}};
  auto res = tensor_quad([](const Vec& s) { return s[0] * s[0] * std::cos(s[1]); }, box);
  double exact = (1.0 / 3.0) * 2.0 * std::sin(1.0);
  REQUIRE(res.value == Catch::Approx(exact).epsilon(1e-9));
}

TEST_CASE("vector-valued integrands work and report errors") {
  Box box{Interval{0.0, 1.0}};
  auto res = tensor_quad(
      [](const Vec& s) {
        Vec v(2);
        v << s[0], std::exp(s[0]);
        return v;
      },
      box);
  REQUIRE(res.value[0] == Catch::Approx(0.5).epsilon(1e-11));
  REQUIRE(res.value[1] == Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
}

TEST_CASE("degenerate boxes integrate to zero") {
  Box box{Interval{1.0, 1.0}};
  auto res = tensor_quad([](const Vec& s) { return s[0] + 3.0; }, box);
  REQUIRE(res.value == 0.0);
}

TEST_CASE("split quadrature is exact across a kink") {
  // |s| on [-1, 2], kink at 0
  auto cuts = std::vector<std::vector<double>>{axis_cuts({-1.0, 2.0}, {0.0})};
  auto res = tensor_quad_split([](const Vec& s) { return std::abs(s[0]); }, cuts);
  REQUIRE(res.value == Catch::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("axis cuts clamp marks to the interval") {
  auto cuts = axis_cuts({0.0, 1.0}, {-5.0, 0.25, 0.75, 9.0});
  REQUIRE(cuts == std::vector<double>{0.0, 0.25, 0.75, 1.0});
}

TEST_CASE("growing window probe flags divergent integrands") {
  auto diverging = [](double r) { return 2.0 * r; };       // ∫ 1 over [-r, r]
  auto converging = [](double r) { return 1.0 - std::exp(-r); };
  REQUIRE_FALSE(growing_window_probe(diverging, 1.0, 8).finite);
  REQUIRE(growing_window_probe(converging, 1.0, 8).finite);
}

TEST_CASE("pairwise sum matches sequential sum") {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + static_cast<double>(i));
  double seq = 0.0;
  for (double x : v) seq += x;
  REQUIRE(pairwise_sum(v) == Catch::Approx(seq).epsilon(1e-13));
}
