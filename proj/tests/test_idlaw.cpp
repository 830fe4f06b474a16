#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>

#include "idfield/distinguished_log.hpp"
#include "idfield/triplet.hpp"

using namespace idfield;
using Catch::Approx;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

CharTriplet random_atomic_triplet(RngStream& rng, int d) {
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  Mat sigma = a * a.transpose();
  Vec gamma(d);
  for (int i = 0; i < d; ++i) gamma[i] = rng.uniform(-1.0, 1.0);
  int natoms = 1 + static_cast<int>(rng.uniform() * 5.0);
  std::vector<Atom> atoms;
  for (int k = 0; k < natoms; ++k) {
    Vec p(d);
    do {
      for (int i = 0; i < d; ++i) p[i] = rng.uniform(-3.0, 3.0);
    } while (p.norm() < 0.1);
    atoms.push_back({p, rng.uniform(0.05, 1.5)});
  }
  return {gamma, sigma, LevyMeasure::atomic(d, std::move(atoms))};
}

}  // namespace

TEST_CASE("cumulant of elementary triplets") {
  REQUIRE(cumulant1(CharTriplet::gaussian1(1.0), 1.0) == Complex(-0.5, 0.0));
  REQUIRE(cumulant1(CharTriplet::drift(v1(2.0)), 1.0) == Complex(0.0, 2.0));

  // single atom at 1, mass 1, no drift compensation in gamma
  CharTriplet atom(Vec::Zero(1), Mat::Zero(1, 1), LevyMeasure::atomic(1, {{v1(1.0), 1.0}}));
  Complex pi_val = cumulant1(atom, M_PI);
  REQUIRE(pi_val.real() == Approx(-2.0).margin(1e-14));
  REQUIRE(pi_val.imag() == Approx(-M_PI).margin(1e-14));
}

TEST_CASE("characteristic function values") {
  CharTriplet gauss = CharTriplet::gaussian1(1.0);
  REQUIRE(charfn(gauss, v1(0.0)) == Complex(1.0, 0.0));
  REQUIRE(charfn(gauss, v1(1.0)).real() == Approx(std::exp(-0.5)).epsilon(1e-14));

  CharTriplet cp = CharTriplet::compound_poisson1(1.0, 1.0);
  Complex expected = std::exp(Complex(std::cos(1.0) - 1.0, std::sin(1.0)));
  REQUIRE(std::abs(charfn(cp, v1(1.0)) - expected) < 1e-14);
  REQUIRE(std::abs(charfn(cp, v1(1.0))) == Approx(std::exp(std::cos(1.0) - 1.0)).epsilon(1e-13));
}

TEST_CASE("charfn bounds and conjugate symmetry over random triplets") {
  RngStream rng(20240811);
  for (int rep = 0; rep < 25; ++rep) {
    int d = 1 + static_cast<int>(rng.uniform() * 3.0);
    CharTriplet t = random_atomic_triplet(rng, d);
    Vec theta(d);
    for (int i = 0; i < d; ++i) theta[i] = rng.uniform(-4.0, 4.0);
    Complex plus = charfn(t, theta);
    Complex minus = charfn(t, Vec(-theta));
    REQUIRE(std::abs(plus) <= 1.0 + 1e-12);
    REQUIRE(std::abs(plus - std::conj(minus)) < 1e-12);
  }
}

TEST_CASE("convolution adds triplets and multiplies charfns") {
  CharTriplet cp1 = CharTriplet::compound_poisson1(1.0, 1.0);
  CharTriplet zero = CharTriplet::zero(1);
  CharTriplet same = convolve(cp1, zero);
  for (double th : {-2.0, -0.5, 0.0, 1.0, 3.0})
    REQUIRE(std::abs(charfn(same, v1(th)) - charfn(cp1, v1(th))) < 1e-15);

  CharTriplet cp2 = CharTriplet::compound_poisson1(2.0, 1.0);
  CharTriplet merged = convolve(cp1, cp2);
  auto atoms = merged.levy().atoms();
  REQUIRE(atoms);
  REQUIRE(atoms->atoms().size() == 1);
  REQUIRE(atoms->atoms()[0].mass == Approx(3.0));

  CharTriplet g1 = CharTriplet::gaussian1(1.0);
  CharTriplet g2 = CharTriplet::gaussian1(2.0);
  CharTriplet g3 = convolve(g1, g2);
  REQUIRE(g3.sigma()(0, 0) == Approx(3.0));
  for (int k = 0; k < 10; ++k) {
    double th = -2.0 + 0.45 * k;
    Complex lhs = charfn(g3, v1(th));
    Complex rhs = charfn(g1, v1(th)) * charfn(g2, v1(th));
    REQUIRE(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("convolve is commutative and associative through charfns") {
  RngStream rng(77);
  CharTriplet a = random_atomic_triplet(rng, 2);
  CharTriplet b = random_atomic_triplet(rng, 2);
  CharTriplet c = random_atomic_triplet(rng, 2);
  Vec theta = vec2(0.7, -1.3);
  Complex ab_c = charfn(convolve(convolve(a, b), c), theta);
  Complex a_bc = charfn(convolve(a, convolve(b, c)), theta);
  Complex ba_c = charfn(convolve(convolve(b, a), c), theta);
  REQUIRE(std::abs(ab_c - a_bc) < 1e-9);
  REQUIRE(std::abs(ab_c - ba_c) < 1e-9);
}

TEST_CASE("linear map: identity, rescaling, projection") {
  CharTriplet t(vec2(0.3, -0.2), Mat::Identity(2, 2),
                LevyMeasure::atomic(2, {{vec2(2.0 * M_PI, 0.0), 1.0}}));
  CharTriplet same = linear_map(t, Mat::Identity(2, 2));
  REQUIRE(std::abs(charfn(same, vec2(0.4, 1.0)) - charfn(t, vec2(0.4, 1.0))) < 1e-12);

  Mat half = Mat::Zero(2, 2);
  half(0, 0) = 0.5;
  half(1, 1) = 1.0;
  CharTriplet mapped = linear_map(t, half);
  auto atoms = mapped.levy().atoms();
  REQUIRE(atoms);
  REQUIRE(atoms->atoms().size() == 1);
  REQUIRE(atoms->atoms()[0].point[0] == Approx(M_PI));
  REQUIRE(atoms->atoms()[0].point[1] == 0.0);

  Mat proj(1, 2);
  proj << 1.0, 0.0;
  CharTriplet t2(Vec::Zero(2), Mat::Zero(2, 2), LevyMeasure::atomic(2, {{vec2(1.0, 2.0), 1.0}}));
  auto projected = linear_map(t2, proj).levy().atoms();
  REQUIRE(projected);
  REQUIRE(projected->atoms().size() == 1);
  REQUIRE(projected->atoms()[0].point[0] == Approx(1.0));
}

TEST_CASE("linear map matches charfn at pulled-back arguments") {
  RngStream rng(4242);
  for (int rep = 0; rep < 10; ++rep) {
    CharTriplet t = random_atomic_triplet(rng, 2);
    Mat m(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m(i, j) = rng.uniform(-1.5, 1.5);
    CharTriplet mapped = linear_map(t, m);
    for (int k = 0; k < 5; ++k) {
      Vec theta = vec2(rng.uniform(-2, 2), rng.uniform(-2, 2));
      Complex lhs = charfn(mapped, theta);
      Complex rhs = charfn(t, Vec(m.transpose() * theta));
      REQUIRE(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("linear map composes") {
  RngStream rng(11);
  CharTriplet t = random_atomic_triplet(rng, 3);
  Mat a = Mat::Random(3, 3), b = Mat::Random(2, 3);
  CharTriplet two_step = linear_map(linear_map(t, a), b);
  CharTriplet one_step = linear_map(t, Mat(b * a));
  for (int k = 0; k < 6; ++k) {
    Vec theta = vec2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    REQUIRE(std::abs(charfn(two_step, theta) - charfn(one_step, theta)) < 1e-9);
  }
}

TEST_CASE("pushforward images at the origin are dropped") {
  Mat proj(1, 2);
  proj << 1.0, 0.0;
  CharTriplet t(Vec::Zero(2), Mat::Zero(2, 2), LevyMeasure::atomic(2, {{vec2(0.0, 3.0), 2.0}}));
  int dropped = 0;
  CharTriplet mapped = linear_map(t, proj, &dropped);
  REQUIRE(dropped == 1);
  auto atoms = mapped.levy().atoms();
  REQUIRE(atoms);
  REQUIRE(atoms->empty());
}

TEST_CASE("triplet invariants are enforced") {
  Mat bad(1, 1);
  bad << -1.0;
  REQUIRE_THROWS_AS(CharTriplet(Vec::Zero(1), bad, LevyMeasure::zero(1)), std::invalid_argument);
  REQUIRE_THROWS_AS(LevyMeasure::atomic(1, {{v1(0.0), 1.0}}), std::invalid_argument);
  REQUIRE_THROWS_AS(LevyMeasure::atomic(1, {{v1(1.0), -0.5}}), std::invalid_argument);
}

TEST_CASE("scan for atoms on the 2-pi lattice") {
  auto none = scan_atoms_2pi(LevyMeasure::atomic(2, {{vec2(1.0, 1.0), 1.0}}));
  REQUIRE(none.applicable);
  REQUIRE(none.offending.empty());

  auto one = scan_atoms_2pi(
      LevyMeasure::atomic(2, {{vec2(2.0 * M_PI, 1.0), 1.0}, {vec2(1.0, 1.0), 1.0}}));
  REQUIRE(one.offending.size() == 1);
  REQUIRE(one.offending[0].point[0] == Approx(2.0 * M_PI));

  auto both = scan_atoms_2pi(LevyMeasure::atomic(2, {{vec2(4.0 * M_PI, 2.0 * M_PI), 3.0}}));
  REQUIRE(both.offending.size() == 1);

  ParametricSpec spec;
  spec.dim = 1;
  spec.density = [](const Vec& x) { return std::exp(-x[0] * x[0]); };
  spec.support = {Interval{-5.0, 5.0}};
  auto parametric = scan_atoms_2pi(LevyMeasure::parametric(spec));
  REQUIRE_FALSE(parametric.applicable);
  REQUIRE(parametric.atomless_declared);
  REQUIRE(parametric.offending.empty());
}

TEST_CASE("admissible rescaling leaves the excluded lattice") {
  LevyMeasure clean = LevyMeasure::atomic(1, {{v1(1.0), 1.0}});
  REQUIRE(find_admissible_scale(clean, 7).isApprox(Vec::Ones(1)));

  LevyMeasure on_lattice = LevyMeasure::atomic(1, {{v1(2.0 * M_PI), 1.0}});
  Vec a = find_admissible_scale(on_lattice, 7);
  REQUIRE(a[0] != 0.0);
  Mat m = a.asDiagonal();
  REQUIRE(scan_atoms_2pi(on_lattice.mapped(m)).offending.empty());
  // deterministic in the seed
  REQUIRE(find_admissible_scale(on_lattice, 7).isApprox(a));

  LevyMeasure two = LevyMeasure::atomic(1, {{v1(2.0 * M_PI), 1.0}, {v1(4.0 * M_PI), 0.5}});
  Vec a2 = find_admissible_scale(two, 99);
  REQUIRE(scan_atoms_2pi(two.mapped(Mat(a2.asDiagonal()))).offending.empty());
}

TEST_CASE("rescaling property over random atom sets") {
  RngStream rng(314159);
  for (int rep = 0; rep < 20; ++rep) {
    int d = 1 + static_cast<int>(rng.uniform() * 2.0);
    int n = 1 + static_cast<int>(rng.uniform() * 4.0);
    std::vector<Atom> atoms;
    for (int k = 0; k < n; ++k) {
      Vec p(d);
      for (int i = 0; i < d; ++i) {
        // mix lattice and non-lattice coordinates, keep them nonzero
        p[i] = (rng.uniform() < 0.4) ? 2.0 * M_PI * (1 + static_cast<int>(rng.uniform() * 3))
                                     : rng.uniform(0.2, 5.0);
      }
      atoms.push_back({p, rng.uniform(0.1, 2.0)});
    }
    LevyMeasure q = LevyMeasure::atomic(d, std::move(atoms));
    Vec a = find_admissible_scale(q, 1000 + rep);
    REQUIRE(scan_atoms_2pi(q.mapped(Mat(a.asDiagonal()))).offending.empty());
  }
}

TEST_CASE("distinguished logarithm tracks winding phases") {
  // pure drift: phi(r) = exp(20 i r) winds past the principal branch
  auto log20 = track_log([](double r) { return std::exp(Complex(0.0, 20.0 * r)); });
  REQUIRE(log20.value.imag() == Approx(20.0).epsilon(1e-10));
  REQUIRE(log20.value.real() == Approx(0.0).margin(1e-10));

  CharTriplet cp = CharTriplet::compound_poisson1(1.0, 1.0);
  auto cp_log = track_log([&](double r) { return charfn(cp, v1(r * 1.0)); });
  Complex expected = cumulant1(cp, 1.0);
  REQUIRE(std::abs(cp_log.value - expected) < 1e-12);
}

TEST_CASE("distinguished logarithm refuses near-vanishing moduli") {
  CharTriplet wide = CharTriplet::gaussian1(200.0);
  REQUIRE_THROWS_AS(track_log([&](double r) { return charfn(wide, v1(r)); }), BranchTrackingError);
}

TEST_CASE("complex-argument cumulant on subordinator triplets") {
  CharTriplet poisson = CharTriplet::compound_poisson1(1.0, 1.0);
  Complex at = cumulant_complex(poisson, Complex(-1.0, 0.0)).value;
  REQUIRE(at.real() == Approx(std::exp(-1.0) - 1.0).epsilon(1e-14));
  REQUIRE(at.imag() == Approx(0.0).margin(1e-14));
  // consistency with the real-argument cumulant at w = i theta
  Complex via_w = cumulant_complex(poisson, Complex(0.0, 0.7)).value;
  REQUIRE(std::abs(via_w - cumulant1(poisson, 0.7)) < 1e-13);
}
