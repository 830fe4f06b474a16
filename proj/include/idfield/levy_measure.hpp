#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "idfield/numeric.hpp"
#include "idfield/quadrature.hpp"
#include "idfield/rng.hpp"

namespace idfield {

struct Atom {
  Vec point;
  double mass = 0.0;
};

/// Finitely many weighted points away from the origin; the exactly
/// computable case, all integrals are finite sums.
class AtomicMeasure {
 public:
  AtomicMeasure(int dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
      if (a.point.size() != dim_) throw std::invalid_argument("atom dimension mismatch");
      if (!(a.mass > 0.0)) throw std::invalid_argument("atom masses must be positive");
      if (a.point.norm() == 0.0) throw std::invalid_argument("Levy atoms must avoid the origin");
    }
  }

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  template <class G>
  auto integrate(G&& g) const -> plain_value_t<decltype(g(std::declval<const Vec&>()))> {
    using T = plain_value_t<decltype(g(std::declval<const Vec&>()))>;
    if (atoms_.empty()) return g(Vec::Zero(dim_)) * 0.0;
    return pairwise_sum<T>(atoms_.size(), [&](std::size_t i) -> T {
      return g(atoms_[i].point) * atoms_[i].mass;
    });
  }

  AtomicMeasure scaled(double c) const {
    auto out = atoms_;
    for (auto& a : out) a.mass *= c;
    return {dim_, std::move(out)};
  }

  /// Image under M; points landing within `origin_tol` of 0 are dropped.
  AtomicMeasure mapped(const Mat& M, double origin_tol = 1e-12, int* dropped = nullptr) const {
    std::vector<Atom> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) {
      Vec y = M * a.point;
      if (y.norm() <= origin_tol) {
        if (dropped) ++*dropped;
        continue;
      }
      out.push_back({std::move(y), a.mass});
    }
    return {static_cast<int>(M.rows()), merge_points(std::move(out))};
  }

  /// Union of atom lists, masses at coordinatewise-equal points combined.
  AtomicMeasure merged(const AtomicMeasure& other) const {
    auto all = atoms_;
    all.insert(all.end(), other.atoms_.begin(), other.atoms_.end());
    return {dim_, merge_points(std::move(all))};
  }

 private:
  static std::vector<Atom> merge_points(std::vector<Atom> in) {
    std::vector<Atom> out;
    for (auto& a : in) {
      bool found = false;
      for (auto& b : out) {
        if (b.point.size() == a.point.size() && (b.point.array() == a.point.array()).all()) {
          b.mass += a.mass;
          found = true;
          break;
        }
      }
      if (!found) out.push_back(std::move(a));
    }
    return out;
  }

  int dim_;
  std::vector<Atom> atoms_;
};

/// Density-based measure on a declared quadrature window. The small-jump
/// ball ||x|| <= eps is excluded from jump sampling and from quadrature;
/// the declared near-zero mass bound is added to every error estimate.
struct ParametricSpec {
  int dim = 1;
  std::function<double(const Vec&)> density;
  Box support;
  double small_jump_eps = 1e-3;
  double near_zero_mass_bound = 0.0;
  std::function<Vec(RngStream&)> sampler;  // draws Q|{||x||>eps}, normalized
  int panels = 256;
  enum class SmallJumps { drop, gaussian } small_jumps = SmallJumps::drop;
  bool atomless = true;
};

class ParametricMeasure {
 public:
  explicit ParametricMeasure(ParametricSpec spec) : spec_(std::move(spec)) {
    if (!spec_.density) throw std::invalid_argument("parametric measure needs a density");
    if (static_cast<int>(spec_.support.size()) != spec_.dim)
      throw std::invalid_argument("parametric support dimension mismatch");
    QuadOptions opt = quad_options();
    jump_rate_ = tensor_quad([&](const Vec& x) { return masked_density(x); }, spec_.support, opt).value;
    comp_small_ = tensor_quad(
                      [&](const Vec& x) -> Vec {
                        double w = masked_density(x);
                        return (x.norm() <= 1.0 ? Vec(x * w) : Vec(Vec::Zero(spec_.dim)));
                      },
                      spec_.support, opt)
                      .value;
    if (spec_.small_jumps == ParametricSpec::SmallJumps::gaussian) {
      Box ball(spec_.dim, Interval{-spec_.small_jump_eps, spec_.small_jump_eps});
      small_cov_ = tensor_quad(
                       [&](const Vec& x) -> Mat {
                         double r = x.norm();
                         double w = (r > 0 && r <= spec_.small_jump_eps) ? spec_.density(x) : 0.0;
                         return Mat(x * x.transpose() * w);
                       },
                       ball, opt)
                       .value;
    }
  }

  const ParametricSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  double jump_rate() const { return jump_rate_; }
  const Vec& small_compensation() const { return comp_small_; }  // ∫_{eps<||x||<=1} x Q(dx)
  const Mat& small_jump_cov() const { return small_cov_; }

  template <class G>
  auto integrate(G&& g, QuadOptions opt) const
      -> QuadResult<plain_value_t<decltype(g(std::declval<const Vec&>()))>> {
    auto res = tensor_quad(
        [&](const Vec& x) {
          double w = masked_density(x);
          return g(x) * w;
        },
        spec_.support, opt);
    res.abs_error += spec_.near_zero_mass_bound;
    return res;
  }

  QuadOptions quad_options() const {
    QuadOptions opt;
    opt.base_panels = spec_.panels / 4 > 8 ? spec_.panels / 4 : 8;
    opt.max_levels = 6;
    opt.rel_tol = 1e-10;
    return opt;
  }

 private:
  double masked_density(const Vec& x) const {
    double r = x.norm();
    if (r <= spec_.small_jump_eps) return 0.0;
    return spec_.density(x);
  }

  ParametricSpec spec_;
  double jump_rate_ = 0.0;
  Vec comp_small_;
  Mat small_cov_;
};

/// Levy measure representation: atomic list, parametric density,
/// pushforward wrapper, or a finite mixture of these.
class LevyMeasure {
 public:
  static LevyMeasure zero(int dim) { return LevyMeasure(AtomicMeasure(dim, {})); }
  static LevyMeasure atomic(int dim, std::vector<Atom> atoms) {
    return LevyMeasure(AtomicMeasure(dim, std::move(atoms)));
  }
  static LevyMeasure parametric(ParametricSpec spec) {
    return LevyMeasure(ParametricMeasure(std::move(spec)));
  }
  static LevyMeasure mixture(std::vector<LevyMeasure> parts) {
    if (parts.empty()) throw std::invalid_argument("mixture needs components");
    int d = parts.front().dim();
    for (const auto& p : parts)
      if (p.dim() != d) throw std::invalid_argument("mixture dimension mismatch");
    return LevyMeasure(Mixture{std::move(parts)});
  }

  explicit LevyMeasure(AtomicMeasure m) : repr_(std::move(m)) {}
  explicit LevyMeasure(ParametricMeasure m) : repr_(std::move(m)) {}

  int dim() const {
    return std::visit(
        [](const auto& r) -> int {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure> || std::is_same_v<R, ParametricMeasure>)
            return r.dim();
          else if constexpr (std::is_same_v<R, Pushforward>)
            return static_cast<int>(r.map.rows());
          else
            return r.parts.front().dim();
        },
        repr_);
  }

  bool is_atomic() const { return std::holds_alternative<AtomicMeasure>(repr_); }

  /// Exact atom list when the measure is representable that way
  /// (atomic, pushforward of atomic, mixture of such).
  std::optional<AtomicMeasure> atoms() const {
    if (const auto* a = std::get_if<AtomicMeasure>(&repr_)) return *a;
    if (const auto* p = std::get_if<Pushforward>(&repr_)) {
      auto base = p->base->atoms();
      if (!base) return std::nullopt;
      return base->mapped(p->map);
    }
    if (const auto* m = std::get_if<Mixture>(&repr_)) {
      std::optional<AtomicMeasure> acc;
      for (const auto& part : m->parts) {
        auto a = part.atoms();
        if (!a) return std::nullopt;
        acc = acc ? acc->merged(*a) : *a;
      }
      return acc;
    }
    return std::nullopt;
  }

  /// True when the measure carries no atoms by construction or declaration.
  bool atomless_declared() const {
    return std::visit(
        [](const auto& r) -> bool {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>)
            return r.empty();
          else if constexpr (std::is_same_v<R, ParametricMeasure>)
            return r.spec().atomless;
          else if constexpr (std::is_same_v<R, Pushforward>)
            return r.base->atomless_declared();
          else {
            for (const auto& p : r.parts)
              if (!p.atomless_declared()) return false;
            return true;
          }
        },
        repr_);
  }

  template <class G>
  auto integrate(G&& g, QuadOptions opt = {}) const
      -> QuadResult<plain_value_t<decltype(g(std::declval<const Vec&>()))>> {
    using T = plain_value_t<decltype(g(std::declval<const Vec&>()))>;
    return std::visit(
        [&](const auto& r) -> QuadResult<T> {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>) {
            QuadResult<T> res;
            res.value = r.integrate(g);
            res.evaluations = static_cast<long>(r.atoms().size());
            return res;
          } else if constexpr (std::is_same_v<R, ParametricMeasure>) {
            return r.integrate(g, opt);
          } else if constexpr (std::is_same_v<R, Pushforward>) {
            const Mat& M = r.map;
            return r.base->integrate(
                [&](const Vec& x) {
                  Vec y = M * x;
                  return (y.norm() <= 1e-12) ? T(g(y) * 0.0) : T(g(y));
                },
                opt);
          } else {
            QuadResult<T> acc;
            bool first = true;
            for (const auto& p : r.parts) {
              auto part = p.integrate(g, opt);
              if (first) {
                acc = part;
                first = false;
              } else {
                acc.value = acc.value + part.value;
                acc.abs_error += part.abs_error;
                acc.evaluations += part.evaluations;
                acc.converged = acc.converged && part.converged;
              }
            }
            return acc;
          }
        },
        repr_);
  }

  /// ∫ min(1, ||x||^2) dQ — the defining integrability requirement.
  QuadResult<double> integrability_mass() const {
    return integrate([](const Vec& x) { return std::min(1.0, x.squaredNorm()); });
  }

  LevyMeasure scaled(double c) const {
    if (c < 0) throw std::invalid_argument("negative measure scale");
    return std::visit(
        [&](const auto& r) -> LevyMeasure {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>) {
            return c == 0.0 ? zero(r.dim()) : LevyMeasure(r.scaled(c));
          } else if constexpr (std::is_same_v<R, ParametricMeasure>) {
            ParametricSpec s = r.spec();
            auto base_density = s.density;
            s.density = [base_density, c](const Vec& x) { return c * base_density(x); };
            s.near_zero_mass_bound *= c;
            return LevyMeasure(ParametricMeasure(std::move(s)));
          } else if constexpr (std::is_same_v<R, Pushforward>) {
            Pushforward p{std::make_shared<LevyMeasure>(r.base->scaled(c)), r.map};
            return LevyMeasure(std::move(p));
          } else {
            std::vector<LevyMeasure> parts;
            parts.reserve(r.parts.size());
            for (const auto& q : r.parts) parts.push_back(q.scaled(c));
            return mixture(std::move(parts));
          }
        },
        repr_);
  }

  /// Image measure under M. Atomic lists map exactly; other representations
  /// get a pushforward wrapper.
  LevyMeasure mapped(const Mat& M, int* dropped = nullptr) const {
    if (M.cols() != dim()) throw std::invalid_argument("pushforward matrix dimension mismatch");
    if (const auto* a = std::get_if<AtomicMeasure>(&repr_)) return LevyMeasure(a->mapped(M, 1e-12, dropped));
    return LevyMeasure(Pushforward{std::make_shared<LevyMeasure>(*this), M});
  }

  /// Measure addition. Two atomic lists merge; anything else becomes a mixture.
  LevyMeasure plus(const LevyMeasure& other) const {
    if (dim() != other.dim()) throw std::invalid_argument("measure dimension mismatch");
    const auto* a = std::get_if<AtomicMeasure>(&repr_);
    const auto* b = std::get_if<AtomicMeasure>(&other.repr_);
    if (a && b) {
      if (a->empty()) return other;
      if (b->empty()) return *this;
      return LevyMeasure(a->merged(*b));
    }
    if (a && a->empty()) return other;
    if (b && b->empty()) return *this;
    return mixture({*this, other});
  }

  // ---- jump sampling ------------------------------------------------------

  /// Total jump intensity reachable by the sampler (atoms: full mass;
  /// parametric: mass beyond the small-jump radius).
  double jump_rate() const {
    return std::visit(
        [&](const auto& r) -> double {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>) {
            double s = 0.0;
            for (const auto& a : r.atoms()) s += a.mass;
            return s;
          } else if constexpr (std::is_same_v<R, ParametricMeasure>) {
            return r.jump_rate();
          } else if constexpr (std::is_same_v<R, Pushforward>) {
            return r.base->jump_rate();
          } else {
            double s = 0.0;
            for (const auto& p : r.parts) s += p.jump_rate();
            return s;
          }
        },
        repr_);
  }

  bool can_sample() const {
    return std::visit(
        [&](const auto& r) -> bool {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>)
            return true;
          else if constexpr (std::is_same_v<R, ParametricMeasure>)
            return static_cast<bool>(r.spec().sampler);
          else if constexpr (std::is_same_v<R, Pushforward>)
            return r.base->can_sample();
          else {
            for (const auto& p : r.parts)
              if (!p.can_sample()) return false;
            return true;
          }
        },
        repr_);
  }

  /// Compound-Poisson jump draws at intensity scale m. For parametric parts
  /// only jumps with ||x|| > eps are produced (declared truncation).
  void sample_jumps(double m, RngStream& rng, std::vector<Vec>& out) const {
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>) {
            for (const auto& a : r.atoms()) {
              long n = rng.poisson(m * a.mass);
              for (long i = 0; i < n; ++i) out.push_back(a.point);
            }
          } else if constexpr (std::is_same_v<R, ParametricMeasure>) {
            if (!r.spec().sampler) throw std::invalid_argument("parametric measure has no sampler");
            long n = rng.poisson(m * r.jump_rate());
            for (long i = 0; i < n; ++i) {
              Vec x;
              int tries = 0;
              do {
                x = r.spec().sampler(rng);
                if (++tries > 10000) throw std::runtime_error("parametric sampler stuck below small-jump radius");
              } while (x.norm() <= r.spec().small_jump_eps);
              out.push_back(std::move(x));
            }
          } else if constexpr (std::is_same_v<R, Pushforward>) {
            std::vector<Vec> base;
            r.base->sample_jumps(m, rng, base);
            for (auto& x : base) {
              Vec y = r.map * x;
              if (y.norm() > 1e-12) out.push_back(std::move(y));
            }
          } else {
            for (const auto& p : r.parts) p.sample_jumps(m, rng, out);
          }
        },
        repr_);
  }

  /// ∫_{||x||<=1} x Q(dx) over the sampled part of the measure (atoms: all
  /// atoms inside the unit ball; parametric: eps < ||x|| <= 1). Used to
  /// compensate drift when sampling.
  Vec sampled_compensation() const {
    return std::visit(
        [&](const auto& r) -> Vec {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AtomicMeasure>) {
            Vec s = Vec::Zero(r.dim());
            for (const auto& a : r.atoms())
              if (a.point.norm() <= 1.0) s += a.mass * a.point;
            return s;
          } else if constexpr (std::is_same_v<R, ParametricMeasure>) {
            return r.small_compensation();
          } else if constexpr (std::is_same_v<R, Pushforward>) {
            // compensation must be computed in mapped coordinates
            const Mat& M = r.map;
            return r.base
                ->integrate([&](const Vec& x) -> Vec {
                  Vec y = M * x;
                  return (y.norm() > 1e-12 && y.norm() <= 1.0) ? y : Vec(Vec::Zero(M.rows()));
                })
                .value;
          } else {
            Vec s = Vec::Zero(dim());
            for (const auto& p : r.parts) s += p.sampled_compensation();
            return s;
          }
        },
        repr_);
  }

  /// Covariance of dropped small jumps, when Gaussian replacement is on.
  Mat small_jump_gaussian_cov() const {
    return std::visit(
        [&](const auto& r) -> Mat {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, ParametricMeasure>) {
            if (r.spec().small_jumps == ParametricSpec::SmallJumps::gaussian) return r.small_jump_cov();
            return Mat::Zero(r.dim(), r.dim());
          } else if constexpr (std::is_same_v<R, Mixture>) {
            Mat s = Mat::Zero(dim(), dim());
            for (const auto& p : r.parts) s += p.small_jump_gaussian_cov();
            return s;
          } else {
            return Mat::Zero(dim(), dim());
          }
        },
        repr_);
  }

 private:
  struct Pushforward {
    std::shared_ptr<const LevyMeasure> base;
    Mat map;
  };
  struct Mixture {
    std::vector<LevyMeasure> parts;
  };

  explicit LevyMeasure(Pushforward p) : repr_(std::move(p)) {}
  explicit LevyMeasure(Mixture m) : repr_(std::move(m)) {}

  std::variant<AtomicMeasure, ParametricMeasure, Pushforward, Mixture> repr_;
};

}  // namespace idfield
