#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "idfield/numeric.hpp"
#include "idfield/quadrature.hpp"

namespace idfield {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Declared support of one kernel component: a finite box (exact zero
/// outside), an exponentially decaying envelope ||f(A,s)|| <= coeff
/// e^{-rate ||s||} on a clip region, or unbounded with no declared decay.
struct KernelSupport {
  enum class Kind { box, exp_decay, unbounded };
  Kind kind = Kind::box;
  Box clip;            // finite for box; may carry ±inf edges otherwise
  double rate = 0.0;   // exp_decay envelope rate
  double coeff = 1.0;  // exp_decay envelope constant

  static KernelSupport finite_box(Box b) { return {Kind::box, std::move(b), 0.0, 0.0}; }
  static KernelSupport exponential(int l, double rate, double coeff, Box clip = {}) {
    if (clip.empty()) clip.assign(static_cast<std::size_t>(l), Interval{-kInf, kInf});
    return {Kind::exp_decay, std::move(clip), rate, coeff};
  }
  static KernelSupport no_decay(int l) {
    return {Kind::unbounded, Box(static_cast<std::size_t>(l), Interval{-kInf, kInf}), 0.0, 0.0};
  }

  bool contains(const Vec& s) const {
    for (long a = 0; a < s.size(); ++a)
      if (s[a] < clip[static_cast<std::size_t>(a)].lo || s[a] > clip[static_cast<std::size_t>(a)].hi)
        return false;
    return true;
  }

  /// Radius beyond which the squared envelope integrates to at most
  /// rel_budget of its total, from the declared decay metadata.
  double tail_radius(int l, double rel_budget) const {
    if (kind != Kind::exp_decay) throw std::logic_error("tail_radius needs a declared decay rate");
    double r = std::log(1.0 / rel_budget) / (2.0 * rate);
    for (int it = 0; it < 3; ++it)
      r = (std::log(1.0 / rel_budget) + (l - 1) * std::log1p(2.0 * rate * std::max(0.0, r))) / (2.0 * rate);
    return r + 1.0 / rate;
  }

  /// Finite integration box covering the support up to the tail budget.
  Box effective_box(int l, double rel_budget) const {
    if (kind == Kind::box) return clip;
    if (kind == Kind::unbounded)
      throw std::invalid_argument("kernel has unbounded support and no declared decay");
    double r = tail_radius(l, rel_budget);
    Box ball(static_cast<std::size_t>(l), Interval{-r, r});
    return box_intersect(ball, clip);
  }
};

/// Measurable f : S x R^l -> q x d matrices with declared support and value
/// metadata. Evaluation returns exactly zero outside the declared support.
class Kernel {
 public:
  struct Component {
    KernelSupport support;
    std::function<Mat(const Vec&)> eval;  // unused when const_value is set
    std::optional<Mat> const_value;       // kernel value on the box
  };

  Kernel(int q, int d, int l, std::vector<Component> components)
      : q_(q), d_(d), l_(l), comp_(std::move(components)) {
    if (comp_.empty()) throw std::invalid_argument("kernel needs at least one component");
    for (auto& c : comp_) {
      if (static_cast<int>(c.support.clip.size()) != l_)
        throw std::invalid_argument("kernel support dimension mismatch");
      if (c.const_value) {
        if (c.const_value->rows() != q_ || c.const_value->cols() != d_)
          throw std::invalid_argument("kernel value shape mismatch");
        if (c.support.kind != KernelSupport::Kind::box)
          throw std::invalid_argument("piecewise-constant kernels need a finite box");
      } else if (!c.eval) {
        throw std::invalid_argument("kernel component needs an evaluator or a constant value");
      }
    }
  }

  int q() const { return q_; }
  int d() const { return d_; }
  int l() const { return l_; }
  int components() const { return static_cast<int>(comp_.size()); }
  const Component& component(int a) const { return comp_.at(static_cast<std::size_t>(a % components())); }

  Mat eval(int a, const Vec& s) const {
    const auto& c = component(a);
    if (!c.support.contains(s)) return Mat::Zero(q_, d_);
    if (c.const_value) return *c.const_value;
    return c.eval(s);
  }

  /// True when every component takes a single matrix value on a finite box;
  /// enables the exact (closed-form overlap) integration paths, and makes
  /// marginal Levy atoms exactly representable.
  bool finite_value_set() const {
    for (const auto& c : comp_)
      if (!c.const_value) return false;
    return true;
  }

  /// Slowest declared decay across components, if all declare one; the
  /// field decorrelates beyond this length scale.
  std::optional<double> decorrelation_length() const {
    double len = 0.0;
    for (const auto& c : comp_) {
      switch (c.support.kind) {
        case KernelSupport::Kind::box: {
          double diam = 0.0;
          for (const auto& iv : c.support.clip) diam = std::max(diam, iv.length());
          len = std::max(len, diam);
          break;
        }
        case KernelSupport::Kind::exp_decay:
          len = std::max(len, 1.0 / c.support.rate);
          break;
        case KernelSupport::Kind::unbounded:
          return std::nullopt;
      }
    }
    return len;
  }

  bool has_unbounded_component() const {
    for (const auto& c : comp_)
      if (c.support.kind == KernelSupport::Kind::unbounded) return true;
    return false;
  }

  // ---- builders -----------------------------------------------------------

  /// f(s) = V on the box, zero outside.
  static Kernel indicator(Mat value, Box box) {
    int q = static_cast<int>(value.rows()), d = static_cast<int>(value.cols());
    int l = static_cast<int>(box.size());
    Component c{KernelSupport::finite_box(std::move(box)), nullptr, std::move(value)};
    return Kernel(q, d, l, {std::move(c)});
  }

  /// One component per mixing element, each a constant matrix on its box.
  static Kernel indicator_mixture(std::vector<std::pair<Mat, Box>> pieces) {
    if (pieces.empty()) throw std::invalid_argument("indicator_mixture needs pieces");
    int q = static_cast<int>(pieces.front().first.rows());
    int d = static_cast<int>(pieces.front().first.cols());
    int l = static_cast<int>(pieces.front().second.size());
    std::vector<Component> comps;
    for (auto& [value, box] : pieces)
      comps.push_back({KernelSupport::finite_box(std::move(box)), nullptr, std::move(value)});
    return Kernel(q, d, l, std::move(comps));
  }

  /// Causal scalar-profile kernel in one dimension: f(s) = V e^{-rate s} for
  /// s >= 0, zero for s < 0.
  static Kernel causal_exp(double rate, Mat value) {
    int q = static_cast<int>(value.rows()), d = static_cast<int>(value.cols());
    Box clip{Interval{0.0, kInf}};
    double coeff = abs_norm(value);
    Component c{KernelSupport::exponential(1, rate, coeff, std::move(clip)),
                [rate, value](const Vec& s) { return Mat(value * std::exp(-rate * s[0])); },
                std::nullopt};
    return Kernel(q, d, 1, {std::move(c)});
  }

  /// Radial kernel f(s) = V e^{-rate ||s||} in l dimensions.
  static Kernel radial_exp(int l, double rate, Mat value) {
    int q = static_cast<int>(value.rows()), d = static_cast<int>(value.cols());
    double coeff = abs_norm(value);
    Component c{KernelSupport::exponential(l, rate, coeff),
                [rate, value](const Vec& s) { return Mat(value * std::exp(-rate * s.norm())); },
                std::nullopt};
    return Kernel(q, d, l, {std::move(c)});
  }

  /// Constant kernel with no decay (not integrable against most bases);
  /// exists for divergence-detection paths.
  static Kernel constant_everywhere(int l, Mat value) {
    int q = static_cast<int>(value.rows()), d = static_cast<int>(value.cols());
    Component c{KernelSupport::no_decay(l), [value](const Vec&) { return value; }, std::nullopt};
    return Kernel(q, d, l, {std::move(c)});
  }

  static Kernel zero(int q, int d, int l) {
    Box box(static_cast<std::size_t>(l), Interval{0.0, 1.0});
    return indicator(Mat::Zero(q, d), std::move(box));
  }

 private:
  int q_, d_, l_;
  std::vector<Component> comp_;
};

}  // namespace idfield
