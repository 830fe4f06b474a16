#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "idfield/basis.hpp"
#include "idfield/kernel.hpp"
#include "idfield/quadrature.hpp"
#include "idfield/triplet.hpp"

namespace idfield {

/// Quadrature policy for integrals over S x R^l (and over jumps, when the
/// basis Levy measure is parametric).
struct QuadSpec {
  QuadOptions s_options;
  QuadOptions x_options;
  double tail_budget = 1e-4;      // relative neglected tail for decaying kernels
  double marginal_levy_h = 0.05;  // s-cell size of the v_int representation

  static QuadSpec defaults_for(int l) {
    QuadSpec q;
    if (l == 1) {
      q.s_options.rel_tol = 1e-11;
      q.s_options.base_panels = 32;
      q.s_options.max_levels = 10;
    } else {
      q.s_options.rel_tol = 1e-7;
      q.s_options.base_panels = 24;
      q.s_options.max_levels = 5;
      q.marginal_levy_h = 0.2;
    }
    q.x_options.rel_tol = 1e-10;
    q.x_options.base_panels = 32;
    q.x_options.max_levels = 6;
    return q;
  }
};

/// Mixed moving average model: X_t = ∫_S ∫_{R^l} f(A, t-s) Λ(dA, ds).
struct MmaModel {
  Kernel kernel;
  GeneratingQuadruple quadruple;
  QuadSpec quad;

  MmaModel(Kernel k, GeneratingQuadruple q, std::optional<QuadSpec> spec = std::nullopt)
      : kernel(std::move(k)),
        quadruple(std::move(q)),
        quad(spec ? *spec : QuadSpec::defaults_for(kernel.l())) {
    if (kernel.d() != quadruple.base.dim())
      throw std::invalid_argument("kernel jump dimension must match basis dimension");
    if (kernel.l() != quadruple.spatial_dim)
      throw std::invalid_argument("kernel and basis disagree on spatial dimension");
    if (kernel.components() != 1 && kernel.components() != quadruple.mixing.size())
      throw std::invalid_argument("kernel components must match the mixing space (or broadcast)");
  }

  int q() const { return kernel.q(); }
  int d() const { return kernel.d(); }
  int l() const { return kernel.l(); }
};

struct PairAtom {
  Vec x0, xt;
  double mass = 0.0;
};

/// Joint law structure of (X_0, X_t): Gaussian cross-covariance Σ(t) and an
/// evaluator for ∫ g(x, y) dQ_{0t}. Evaluated functionals must vanish when
/// either argument is zero (all the diagnostics used here do).
struct JointPair {
  Vec lag;
  Mat gauss_cross;
  std::function<QuadResult<double>(const std::function<double(const Vec&, const Vec&)>&)> levy_real;
  std::function<QuadResult<Complex>(const std::function<Complex(const Vec&, const Vec&)>&)> levy_complex;
  std::optional<std::vector<PairAtom>> atoms;  // exact, when representable
};

struct IntegrabilityCondition {
  double value = 0.0;
  bool finite = true;
  double error = 0.0;
};

struct IntegrabilityReport {
  IntegrabilityCondition drift_compensation;  // ∫∫ || fγ + ∫ fx(1-1) dQ ||
  IntegrabilityCondition gaussian_energy;     // ∫∫ || f Σ f' ||
  IntegrabilityCondition jump_integral;       // ∫∫∫ min(1, ||fx||^2)
  bool integrable() const {
    return drift_compensation.finite && gaussian_energy.finite && jump_integral.finite;
  }
};

struct MarginalTriplet {
  CharTriplet triplet;
  double quadrature_error = 0.0;      // gamma/sigma error estimate
  double levy_discretization = 0.0;   // declared s-cell size of the v_int representation
};

namespace detail {

/// Per-component integration geometry.
struct CompGeom {
  bool constant = false;
  Mat value;  // const-box value
  Box eff;    // finite integration box
};

inline CompGeom comp_geom(const Kernel& k, int a, double tail_budget) {
  const auto& c = k.component(a);
  CompGeom g;
  if (c.const_value) {
    g.constant = true;
    g.value = *c.const_value;
    g.eff = c.support.clip;
  } else {
    g.eff = c.support.effective_box(k.l(), tail_budget);
  }
  return g;
}

inline std::vector<std::vector<double>> cuts_for(const Box& box, const std::vector<double>& marks_per_axis) {
  std::vector<std::vector<double>> cuts(box.size());
  for (std::size_t a = 0; a < box.size(); ++a) cuts[a] = axis_cuts(box[a], marks_per_axis);
  return cuts;
}

inline std::vector<std::vector<double>> cuts_for_pair(const Box& box, const Vec& lag) {
  std::vector<std::vector<double>> cuts(box.size());
  for (std::size_t a = 0; a < box.size(); ++a)
    cuts[a] = axis_cuts(box[a], {0.0, lag[static_cast<long>(a)]});
  return cuts;
}

}  // namespace detail

/// Integral over S x R^l of a matrix-valued function of f(A, s):
/// Σ_A π_A ∫ point_fn(f(A,s)) ds. Exact for piecewise-constant kernels.
template <class PointFn>
auto mma_marginal_integral(const MmaModel& m, PointFn&& point_fn)
    -> QuadResult<plain_value_t<decltype(point_fn(std::declval<const Mat&>()))>> {
  using T = plain_value_t<decltype(point_fn(std::declval<const Mat&>()))>;
  QuadResult<T> total;
  bool first = true;
  for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
    double pi_a = m.quadruple.mixing.weight(a);
    auto geom = detail::comp_geom(m.kernel, a, m.quad.tail_budget);
    QuadResult<T> part;
    if (geom.constant) {
      part.value = point_fn(geom.value) * (pi_a * box_volume(geom.eff));
    } else {
      auto cuts = detail::cuts_for(geom.eff, {0.0});
      part = tensor_quad_split([&](const Vec& s) { return point_fn(m.kernel.eval(a, s)); }, cuts,
                               m.quad.s_options);
      part.value = part.value * pi_a;
      part.abs_error *= pi_a;
    }
    if (first) {
      total = part;
      first = false;
    } else {
      total.value = total.value + part.value;
      total.abs_error += part.abs_error;
      total.evaluations += part.evaluations;
      total.converged = total.converged && part.converged;
    }
  }
  return total;
}

/// Integral over S x R^l of a function of the pair (f(A,-s), f(A,t-s)),
/// restricted to the overlap where both factors can be nonzero. The point
/// function must vanish when either matrix argument is zero.
template <class PairPointFn>
auto mma_pair_integral(const MmaModel& m, const Vec& lag, PairPointFn&& point_fn)
    -> QuadResult<plain_value_t<decltype(point_fn(std::declval<const Mat&>(), std::declval<const Mat&>()))>> {
  using T = plain_value_t<decltype(point_fn(std::declval<const Mat&>(), std::declval<const Mat&>()))>;
  QuadResult<T> total;
  const Mat zero_val = Mat::Zero(m.q(), m.d());
  total.value = point_fn(zero_val, zero_val) * 0.0;
  for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
    double pi_a = m.quadruple.mixing.weight(a);
    auto geom = detail::comp_geom(m.kernel, a, m.quad.tail_budget);
    Box supp0 = box_negate(geom.eff);
    Box suppt = box_shift(supp0, lag);
    Box overlap = box_intersect(supp0, suppt);
    if (box_empty(overlap)) continue;
    QuadResult<T> part;
    if (geom.constant) {
      part.value = point_fn(geom.value, geom.value) * (pi_a * box_volume(overlap));
    } else {
      auto cuts = detail::cuts_for_pair(overlap, lag);
      part = tensor_quad_split(
          [&](const Vec& s) { return point_fn(m.kernel.eval(a, Vec(-s)), m.kernel.eval(a, Vec(lag - s))); },
          cuts, m.quad.s_options);
      part.value = part.value * pi_a;
      part.abs_error *= pi_a;
    }
    total.value = total.value + part.value;
    total.abs_error += part.abs_error;
    total.evaluations += part.evaluations;
    total.converged = total.converged && part.converged;
  }
  return total;
}

/// Gaussian cross-covariance Σ(t) = ∫_S ∫ f(A,-s) Σ f(A,t-s)' ds π(dA).
inline QuadResult<Mat> mma_gauss_cross(const MmaModel& m, const Vec& lag) {
  const Mat& sigma = m.quadruple.base.sigma();
  if (abs_norm(sigma) == 0.0) {
    QuadResult<Mat> r;
    r.value = Mat::Zero(m.q(), m.q());
    return r;
  }
  return mma_pair_integral(m, lag,
                           [&](const Mat& u, const Mat& v) { return Mat(u * sigma * v.transpose()); });
}

/// ∫ g(x0, xt) dQ_{0t} for the MMA pair measure; exact in the jump variable
/// for atomic bases.
template <class G>
auto mma_levy_pair(const MmaModel& m, const Vec& lag, G&& g)
    -> QuadResult<plain_value_t<decltype(g(std::declval<const Vec&>(), std::declval<const Vec&>()))>> {
  using T = plain_value_t<decltype(g(std::declval<const Vec&>(), std::declval<const Vec&>()))>;
  const auto& levy = m.quadruple.base.levy();
  double inner_error = 0.0;
  auto res = mma_pair_integral(m, lag, [&](const Mat& u, const Mat& v) -> T {
    auto inner = levy.integrate([&](const Vec& x) -> T { return g(Vec(u * x), Vec(v * x)); },
                                m.quad.x_options);
    if (inner.abs_error > inner_error) inner_error = inner.abs_error;
    return inner.value;
  });
  // fold a representative jump-quadrature error into the estimate
  double footprint = 0.0;
  for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
    auto geom = detail::comp_geom(m.kernel, a, m.quad.tail_budget);
    footprint += m.quadruple.mixing.weight(a) * box_volume(geom.eff);
  }
  res.abs_error += inner_error * footprint;
  return res;
}

/// Exact pair-measure atoms for piecewise-constant kernels over atomic
/// bases, including the single-leg masses where one coordinate is zero.
inline std::optional<std::vector<PairAtom>> mma_pair_atoms(const MmaModel& m, const Vec& lag) {
  if (!m.kernel.finite_value_set()) return std::nullopt;
  auto atoms = m.quadruple.base.levy().atoms();
  if (!atoms) return std::nullopt;
  std::vector<PairAtom> out;
  for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
    double pi_a = m.quadruple.mixing.weight(a);
    auto geom = detail::comp_geom(m.kernel, a, m.quad.tail_budget);
    Box supp0 = box_negate(geom.eff);
    Box suppt = box_shift(supp0, lag);
    double vol0 = box_volume(supp0);
    double ov = box_volume(box_intersect(supp0, suppt));
    double leg0 = vol0 - ov, legt = vol0 - ov;
    for (const auto& atom : atoms->atoms()) {
      Vec y = geom.value * atom.point;
      if (y.norm() <= 1e-12) continue;
      Vec zero = Vec::Zero(y.size());
      if (ov > 0) out.push_back({y, y, atom.mass * pi_a * ov});
      if (leg0 > 0) out.push_back({y, zero, atom.mass * pi_a * leg0});
      if (legt > 0) out.push_back({zero, y, atom.mass * pi_a * legt});
    }
  }
  return out;
}

inline JointPair mma_joint_pair(const std::shared_ptr<const MmaModel>& m, const Vec& lag) {
  JointPair jp;
  jp.lag = lag;
  jp.gauss_cross = mma_gauss_cross(*m, lag).value;
  jp.levy_real = [m, lag](const std::function<double(const Vec&, const Vec&)>& g) {
    return mma_levy_pair(*m, lag, g);
  };
  jp.levy_complex = [m, lag](const std::function<Complex(const Vec&, const Vec&)>& g) {
    return mma_levy_pair(*m, lag, g);
  };
  jp.atoms = mma_pair_atoms(*m, lag);
  return jp;
}

/// Cumulant of the marginal X_0: ∫_S ∫ ψ(f(A,s)'θ) ds π(dA).
inline QuadResult<Complex> mma_marginal_cumulant(const MmaModel& m, const Vec& theta) {
  const auto& base = m.quadruple.base;
  return mma_marginal_integral(
      m, [&](const Mat& f) { return cumulant(base, Vec(f.transpose() * theta)); });
}

/// Joint-minus-marginals cumulant of (X_0, X_t):
/// ∫∫ [ψ(f(A,-s)'θ1 + f(A,t-s)'θ2) - ψ(f(A,-s)'θ1) - ψ(f(A,t-s)'θ2)].
/// The integrand vanishes unless both kernel factors are nonzero, so the
/// integral runs over the support overlap and inherits its decay.
inline QuadResult<Complex> mma_excess_cumulant(const MmaModel& m, const Vec& lag, const Vec& th1,
                                               const Vec& th2) {
  const auto& base = m.quadruple.base;
  return mma_pair_integral(m, lag, [&](const Mat& u, const Mat& v) -> Complex {
    Vec a = u.transpose() * th1;
    Vec b = v.transpose() * th2;
    return cumulant(base, Vec(a + b)) - cumulant(base, a) - cumulant(base, b);
  });
}

/// The three integrability conditions for the MMA integral, evaluated as
/// displayed: drift-compensation norm, Gaussian energy, and jump integral.
/// Kernels with no declared decay are probed on growing windows and flagged
/// non-integrable when the window increments do not die out.
inline IntegrabilityReport check_integrability(const MmaModel& m) {
  const auto& base = m.quadruple.base;
  const auto& levy = base.levy();

  auto cond1_point = [&](const Mat& f) -> double {
    Vec drift = f * base.gamma();
    auto corr = levy.integrate(
        [&](const Vec& x) -> Vec {
          Vec y = f * x;
          double in_new = (y.norm() <= 1.0) ? 1.0 : 0.0;
          double in_old = (x.norm() <= 1.0) ? 1.0 : 0.0;
          return Vec(y * (in_new - in_old));
        },
        m.quad.x_options);
    return (drift + corr.value).norm();
  };
  auto cond2_point = [&](const Mat& f) -> double { return frobenius(f * base.sigma() * f.transpose()); };
  auto cond3_point = [&](const Mat& f) -> double {
    return levy
        .integrate([&](const Vec& x) { return std::min(1.0, (f * x).squaredNorm()); },
                   m.quad.x_options)
        .value;
  };

  IntegrabilityReport rep;
  if (!m.kernel.has_unbounded_component()) {
    auto c1 = mma_marginal_integral(m, cond1_point);
    auto c2 = mma_marginal_integral(m, cond2_point);
    auto c3 = mma_marginal_integral(m, cond3_point);
    rep.drift_compensation = {c1.value, std::isfinite(c1.value), c1.abs_error + m.quad.tail_budget * std::abs(c1.value)};
    rep.gaussian_energy = {c2.value, std::isfinite(c2.value), c2.abs_error + m.quad.tail_budget * std::abs(c2.value)};
    rep.jump_integral = {c3.value, std::isfinite(c3.value), c3.abs_error + m.quad.tail_budget * std::abs(c3.value)};
    return rep;
  }

  // growing-window probe for kernels with no declared decay
  auto probe_condition = [&](auto&& point_fn) -> IntegrabilityCondition {
    auto on_window = [&](double r) {
      QuadOptions opt = m.quad.s_options;
      opt.max_levels = std::min(opt.max_levels, 4);
      double acc = 0.0;
      for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
        Box window(static_cast<std::size_t>(m.l()), Interval{-r, r});
        Box clipped = box_intersect(window, m.kernel.component(a).support.clip);
        if (box_empty(clipped)) continue;
        auto part = tensor_quad([&](const Vec& s) { return point_fn(m.kernel.eval(a, s)); }, clipped, opt);
        acc += m.quadruple.mixing.weight(a) * part.value;
      }
      return acc;
    };
    auto probe = growing_window_probe(on_window, 1.0, 8);
    IntegrabilityCondition cond;
    cond.finite = probe.finite;
    cond.value = probe.finite ? probe.value : std::numeric_limits<double>::infinity();
    cond.error = std::abs(probe.last_increment);
    return cond;
  };
  rep.drift_compensation = probe_condition(cond1_point);
  rep.gaussian_energy = probe_condition(cond2_point);
  rep.jump_integral = probe_condition(cond3_point);
  return rep;
}

/// Characteristic triplet (γ_int, Σ_int, v_int) of X_0. The Levy part is
/// exact for piecewise-constant kernels (a pushforward of the basis
/// measure); smooth kernels get a midpoint-cell representation whose cell
/// size is recorded, never treated as exact.
inline MarginalTriplet mma_marginal_triplet(const MmaModel& m) {
  const auto& base = m.quadruple.base;
  const auto& levy = base.levy();

  auto gamma_res = mma_marginal_integral(m, [&](const Mat& f) -> Vec {
    Vec drift = f * base.gamma();
    auto corr = levy.integrate(
        [&](const Vec& x) -> Vec {
          Vec y = f * x;
          double in_new = (y.norm() <= 1.0) ? 1.0 : 0.0;
          double in_old = (x.norm() <= 1.0) ? 1.0 : 0.0;
          return Vec(y * (in_new - in_old));
        },
        m.quad.x_options);
    return Vec(drift + corr.value);
  });
  auto sigma_res = mma_marginal_integral(
      m, [&](const Mat& f) { return Mat(f * base.sigma() * f.transpose()); });

  // v_int(B) = ∫∫∫ 1_B(f(A,s)x) Q(dx) ds π(dA)
  std::vector<LevyMeasure> parts;
  double disc = 0.0;
  for (int a = 0; a < m.quadruple.mixing.size(); ++a) {
    double pi_a = m.quadruple.mixing.weight(a);
    auto geom = detail::comp_geom(m.kernel, a, m.quad.tail_budget);
    if (geom.constant) {
      double mass = pi_a * box_volume(geom.eff);
      if (mass > 0.0 && abs_norm(geom.value) > 0.0) {
        int dropped = 0;
        LevyMeasure piece = levy.mapped(geom.value, &dropped).scaled(mass);
        auto am = piece.atoms();
        if (!am || !am->empty()) parts.push_back(std::move(piece));
      }
    } else {
      disc = std::max(disc, m.quad.marginal_levy_h);
      const int l = m.l();
      std::vector<long> counts(static_cast<std::size_t>(l));
      long total = 1;
      for (int ax = 0; ax < l; ++ax) {
        counts[static_cast<std::size_t>(ax)] =
            std::max<long>(1, std::lround(geom.eff[static_cast<std::size_t>(ax)].length() / m.quad.marginal_levy_h));
        total *= counts[static_cast<std::size_t>(ax)];
      }
      std::vector<long> idx(static_cast<std::size_t>(l), 0);
      for (long flat = 0; flat < total; ++flat) {
        Vec center(l);
        double vol = 1.0;
        for (int ax = 0; ax < l; ++ax) {
          const auto& iv = geom.eff[static_cast<std::size_t>(ax)];
          double step = iv.length() / static_cast<double>(counts[static_cast<std::size_t>(ax)]);
          center[ax] = iv.lo + step * (idx[static_cast<std::size_t>(ax)] + 0.5);
          vol *= step;
        }
        Mat f = m.kernel.eval(a, center);
        if (abs_norm(f) > 0.0) {
          int dropped = 0;
          LevyMeasure piece = levy.mapped(f, &dropped).scaled(pi_a * vol);
          auto am = piece.atoms();
          if (!am || !am->empty()) parts.push_back(std::move(piece));
        }
        int ax = 0;
        for (; ax < l; ++ax) {
          if (++idx[static_cast<std::size_t>(ax)] < counts[static_cast<std::size_t>(ax)]) break;
          idx[static_cast<std::size_t>(ax)] = 0;
        }
      }
    }
  }
  LevyMeasure v_int = parts.empty() ? LevyMeasure::zero(m.q())
                      : parts.size() == 1 ? std::move(parts.front())
                                          : LevyMeasure::mixture(std::move(parts));
  // collapse mixtures of atomic pieces into one exact list
  if (auto atoms = v_int.atoms()) v_int = LevyMeasure(*atoms);

  MarginalTriplet out{CharTriplet(gamma_res.value, sigma_res.value, std::move(v_int)),
                      gamma_res.abs_error + sigma_res.abs_error, disc};
  return out;
}

}  // namespace idfield
