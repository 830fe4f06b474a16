#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "idfield/levy_measure.hpp"
#include "idfield/numeric.hpp"
#include "idfield/quadrature.hpp"

namespace idfield {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// An infinitely divisible law as its characteristic triplet: drift gamma,
/// Gaussian covariance sigma, and Levy measure (truncation function
/// 1_{[0,1]}(||x||)). The universal currency of the library.
class CharTriplet {
 public:
  CharTriplet(Vec gamma, Mat sigma, LevyMeasure levy)
      : dim_(static_cast<int>(gamma.size())),
        gamma_(std::move(gamma)),
        sigma_(std::move(sigma)),
        levy_(std::move(levy)) {
    if (sigma_.rows() != dim_ || sigma_.cols() != dim_)
      throw std::invalid_argument("sigma must be d x d");
    if (levy_.dim() != dim_) throw std::invalid_argument("levy measure dimension mismatch");
    double scale = abs_norm(sigma_);
    if (abs_norm(Mat(sigma_ - sigma_.transpose())) > 1e-10 * std::max(1.0, scale))
      throw std::invalid_argument("sigma must be symmetric");
    if (min_eigenvalue(sigma_) < -1e-10 * std::max(1.0, scale))
      throw std::invalid_argument("sigma must be positive semidefinite");
    auto mass = levy_.integrability_mass();
    if (!std::isfinite(mass.value) || !mass.converged)
      throw std::invalid_argument("levy measure fails ∫ min(1,||x||^2) < ∞");
  }

  int dim() const { return dim_; }
  const Vec& gamma() const { return gamma_; }
  const Mat& sigma() const { return sigma_; }
  const LevyMeasure& levy() const { return levy_; }

  static CharTriplet zero(int d) {
    return {Vec::Zero(d), Mat::Zero(d, d), LevyMeasure::zero(d)};
  }
  static CharTriplet gaussian(Mat sigma) {
    int d = static_cast<int>(sigma.rows());
    return {Vec::Zero(d), std::move(sigma), LevyMeasure::zero(d)};
  }
  static CharTriplet gaussian1(double variance) {
    return gaussian(Mat::Constant(1, 1, variance));
  }
  static CharTriplet drift(Vec gamma) {
    int d = static_cast<int>(gamma.size());
    return {std::move(gamma), Mat::Zero(d, d), LevyMeasure::zero(d)};
  }

  /// Compound Poisson without drift: E e^{i<θ,X>} = exp(Σ λ_j (e^{i<θ,x_j>}-1)).
  /// The stored gamma cancels the small-jump compensation.
  static CharTriplet compound_poisson(int d, std::vector<Atom> atoms) {
    Vec comp = Vec::Zero(d);
    for (const auto& a : atoms)
      if (a.point.norm() <= 1.0) comp += a.mass * a.point;
    return {comp, Mat::Zero(d, d), LevyMeasure::atomic(d, std::move(atoms))};
  }
  static CharTriplet compound_poisson1(double rate, double jump) {
    return compound_poisson(1, {{Vec::Constant(1, jump), rate}});
  }

  /// Same ID family with gamma, sigma and the Levy measure all scaled by c.
  CharTriplet scaled(double c) const {
    if (c < 0) throw std::invalid_argument("negative triplet scale");
    return {Vec(c * gamma_), Mat(c * sigma_), levy_.scaled(c)};
  }

 private:
  int dim_;
  Vec gamma_;
  Mat sigma_;
  LevyMeasure levy_;
};

/// Levy-Khintchine integrand e^{i<θ,x>} - 1 - i<θ,x> 1_{[0,1]}(||x||).
inline Complex lk_integrand(const Vec& theta, const Vec& x) {
  double dot = theta.dot(x);
  Complex e = std::polar(1.0, dot);
  Complex v = e - 1.0;
  if (x.norm() <= 1.0) v -= Complex(0.0, dot);
  return v;
}

/// Cumulant transform ψ(θ) = i<γ,θ> - (1/2)<θ,Σθ> + ∫ lk(θ,x) Q(dx).
/// Exact finite sum for atomic Levy parts.
inline QuadResult<Complex> cumulant_checked(const CharTriplet& t, const Vec& theta,
                                            QuadOptions opt = {}) {
  if (theta.size() != t.dim()) throw std::invalid_argument("cumulant: theta dimension mismatch");
  auto jump = t.levy().integrate([&](const Vec& x) { return lk_integrand(theta, x); }, opt);
  jump.value += Complex(0.0, t.gamma().dot(theta)) - 0.5 * theta.dot(t.sigma() * theta);
  return jump;
}

inline Complex cumulant(const CharTriplet& t, const Vec& theta) {
  return cumulant_checked(t, theta).value;
}

inline Complex charfn(const CharTriplet& t, const Vec& theta) {
  return std::exp(cumulant(t, theta));
}

inline Complex cumulant1(const CharTriplet& t, double theta) {
  return cumulant(t, Vec::Constant(1, theta));
}

/// Cumulant with a complex scalar argument w (d = 1), Re(w) <= 0:
/// ψ_c(w) = γw + (1/2)σw² + ∫ (e^{wx} - 1 - wx 1_{[0,1]}(|x|)) Q(dx),
/// so that ψ_c(iθ) is the usual cumulant. Used as the Laplace-type
/// exponent of subordinators evaluated at cumulants of other laws.
inline QuadResult<Complex> cumulant_complex(const CharTriplet& t, Complex w, QuadOptions opt = {}) {
  if (t.dim() != 1) throw std::invalid_argument("cumulant_complex is defined for d = 1");
  if (w.real() > 1e-12) throw std::invalid_argument("cumulant_complex requires Re(w) <= 0");
  auto jump = t.levy().integrate(
      [&](const Vec& x) {
        Complex e = std::exp(w * x[0]);
        Complex v = e - 1.0;
        if (std::abs(x[0]) <= 1.0) v -= w * x[0];
        return v;
      },
      opt);
  jump.value += t.gamma()[0] * w + 0.5 * t.sigma()(0, 0) * w * w;
  return jump;
}

/// Convolution of independent ID laws: all triplet parts add.
inline CharTriplet convolve(const CharTriplet& a, const CharTriplet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("convolve: dimension mismatch");
  return {Vec(a.gamma() + b.gamma()), Mat(a.sigma() + b.sigma()), a.levy().plus(b.levy())};
}

/// Law of M X for X ~ t: Gaussian part M Σ M', Levy part the pushforward
/// (images at the origin dropped), drift recompensated so that the
/// characteristic function is exactly θ -> charfn(t, M'θ).
inline CharTriplet linear_map(const CharTriplet& t, const Mat& M, int* dropped_atoms = nullptr) {
  if (M.cols() != t.dim()) throw std::invalid_argument("linear_map: matrix dimension mismatch");
  const int q = static_cast<int>(M.rows());
  Vec gamma = M * t.gamma();
  auto correction = t.levy().integrate([&](const Vec& x) -> Vec {
    Vec y = M * x;
    double in_new = (y.norm() <= 1.0 && y.norm() > 1e-12) ? 1.0 : 0.0;
    double in_old = (x.norm() <= 1.0) ? 1.0 : 0.0;
    return Vec(y * (in_new - in_old));
  });
  gamma += correction.value;
  Mat sigma = M * t.sigma() * M.transpose();
  LevyMeasure levy = t.levy().mapped(M, dropped_atoms);
  (void)q;
  return {std::move(gamma), std::move(sigma), std::move(levy)};
}

// ---- atoms on the 2π lattice ---------------------------------------------

struct Scan2PiResult {
  std::vector<Atom> offending;
  bool applicable = true;        // an exact atom list was scanned
  bool atomless_declared = false;  // no list, but atomlessness is declared
};

inline bool coordinate_on_2pi_lattice(double y, double tol = 1e-12) {
  double k = std::round(y / kTwoPi);
  return std::abs(y - k * kTwoPi) <= tol;
}

/// Atoms with some coordinate in 2πZ (0 included, per the defining set).
/// Parametric measures declared atomless scan empty with applicable=false.
inline Scan2PiResult scan_atoms_2pi(const LevyMeasure& q, double tol = 1e-12) {
  Scan2PiResult out;
  auto atoms = q.atoms();
  if (!atoms) {
    out.applicable = false;
    out.atomless_declared = q.atomless_declared();
    return out;
  }
  for (const auto& a : atoms->atoms()) {
    for (long j = 0; j < a.point.size(); ++j) {
      if (coordinate_on_2pi_lattice(a.point[j], tol)) {
        out.offending.push_back(a);
        break;
      }
    }
  }
  return out;
}

/// A diagonal rescaling a (all coordinates nonzero) outside the excluded
/// set Z = {z : z_j = 2πk / y_j ∀j, k ∈ Z, y an atom}: accepted exactly when
/// the rescaled atom list has no coordinate on the 2π lattice. Deterministic
/// in the seed; randomized proposals, bounded retries.
inline Vec find_admissible_scale(const LevyMeasure& q, std::uint64_t seed, int max_proposals = 1000) {
  auto atoms = q.atoms();
  if (!atoms) throw std::invalid_argument("find_admissible_scale requires an atomic measure");
  const int d = q.dim();
  RngStream rng(splitmix64(seed ^ 0x5ca1ab1e0ddba11ull));
  auto admissible = [&](const Vec& a) {
    for (const auto& at : atoms->atoms())
      for (long j = 0; j < at.point.size(); ++j)
        if (coordinate_on_2pi_lattice(a[j] * at.point[j])) return false;
    return true;
  };
  Vec ones = Vec::Ones(d);
  if (admissible(ones)) return ones;
  for (int k = 0; k < max_proposals; ++k) {
    Vec a(d);
    for (int j = 0; j < d; ++j) a[j] = rng.uniform(0.5, 1.5);
    if (admissible(a)) return a;
  }
  throw std::runtime_error(
      "find_admissible_scale: no admissible rescaling found after bounded retries "
      "(an atom coordinate equal to zero makes every diagonal scale inadmissible)");
}

}  // namespace idfield
