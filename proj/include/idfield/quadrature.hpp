#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "idfield/numeric.hpp"

namespace idfield {

struct Interval {
  double lo = 0.0, hi = 0.0;
  double length() const { return hi - lo; }
  bool degenerate() const { return !(hi > lo); }
};

/// Axis-aligned product of intervals in R^l.
using Box = std::vector<Interval>;

inline double box_volume(const Box& b) {
  double v = 1.0;
  for (const auto& iv : b) v *= std::max(0.0, iv.length());
  return v;
}

inline bool box_empty(const Box& b) {
  for (const auto& iv : b)
    if (iv.degenerate()) return true;
  return b.empty();
}

inline Box box_intersect(const Box& a, const Box& b) {
  Box out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = {std::max(a[i].lo, b[i].lo), std::min(a[i].hi, b[i].hi)};
  return out;
}

inline Box box_hull(const Box& a, const Box& b) {
  Box out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = {std::min(a[i].lo, b[i].lo), std::max(a[i].hi, b[i].hi)};
  return out;
}

inline Box box_shift(const Box& b, const Vec& t) {
  Box out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = {b[i].lo + t[static_cast<long>(i)], b[i].hi + t[static_cast<long>(i)]};
  return out;
}

/// s-box mapped through s -> -s.
inline Box box_negate(const Box& b) {
  Box out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = {-b[i].hi, -b[i].lo};
  return out;
}

struct QuadOptions {
  double rel_tol = 1.0e-9;
  double abs_tol = 1.0e-14;
  int base_panels = 16;   // panels per axis at the coarsest level
  int max_levels = 12;    // dyadic refinements
  long max_evals = 200000000;
};

template <class T>
struct QuadResult {
  T value;
  double abs_error = 0.0;
  bool converged = true;
  long evaluations = 0;
};

namespace detail {

template <class F>
auto trapezoid_level(F&& f, const Box& box, long panels, long* evals)
    -> plain_value_t<decltype(f(std::declval<const Vec&>()))> {
  const int l = static_cast<int>(box.size());
  std::vector<long> idx(l, 0);
  Vec s(l);
  using T = plain_value_t<decltype(f(std::declval<const Vec&>()))>;
  bool first = true;
  T acc{};
  double weight_scale = 1.0;
  for (const auto& iv : box) weight_scale *= iv.length() / static_cast<double>(panels);
  while (true) {
    double w = 1.0;
    for (int a = 0; a < l; ++a) {
      s[a] = box[a].lo + (box[a].hi - box[a].lo) * (static_cast<double>(idx[a]) / static_cast<double>(panels));
      if (idx[a] == 0 || idx[a] == panels) w *= 0.5;
    }
    T term = f(s) * (w * weight_scale);
    if (first) {
      acc = term;
      first = false;
    } else {
      acc = acc + term;
    }
    ++*evals;
    int a = 0;
    for (; a < l; ++a) {
      if (++idx[a] <= panels) break;
      idx[a] = 0;
    }
    if (a == l) break;
  }
  return acc;
}

}  // namespace detail

/// Tensor trapezoid over a box with one Richardson step per dyadic
/// refinement; stops when two successive extrapolants agree to tolerance.
/// The reported abs_error is the difference of the last two extrapolants.
template <class F>
auto tensor_quad(F&& f, const Box& box, const QuadOptions& opt = {})
    -> QuadResult<plain_value_t<decltype(f(std::declval<const Vec&>()))>> {
  using T = plain_value_t<decltype(f(std::declval<const Vec&>()))>;
  QuadResult<T> res;
  if (box_empty(box)) {
    Vec probe(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) probe[static_cast<long>(i)] = box[i].lo;
    res.value = f(probe) * 0.0;
    return res;
  }
  long panels = opt.base_panels;
  T coarse = detail::trapezoid_level(f, box, panels, &res.evaluations);
  T extrap_prev{};
  bool have_prev = false;
  for (int level = 1; level <= opt.max_levels; ++level) {
    panels *= 2;
    double per_axis_cost = std::pow(static_cast<double>(panels + 1), static_cast<double>(box.size()));
    if (res.evaluations + static_cast<long>(per_axis_cost) > opt.max_evals) {
      res.converged = false;
      break;
    }
    T fine = detail::trapezoid_level(f, box, panels, &res.evaluations);
    T extrap = (fine * 4.0 - coarse) * (1.0 / 3.0);
    if (have_prev) {
      double diff = abs_norm(static_cast<T>(extrap - extrap_prev));
      res.value = extrap;
      res.abs_error = diff;
      if (diff <= std::max(opt.abs_tol, opt.rel_tol * abs_norm(extrap))) return res;
    } else {
      res.value = extrap;
      res.abs_error = abs_norm(static_cast<T>(extrap - coarse));
    }
    extrap_prev = extrap;
    have_prev = true;
    coarse = fine;
  }
  res.converged = false;
  return res;
}

/// Sorted interior breakpoints clipped to [lo, hi]; used to split an axis at
/// kernel-support edges so each sub-box sees a smooth integrand.
inline std::vector<double> axis_cuts(const Interval& iv, std::vector<double> marks) {
  std::vector<double> cuts{iv.lo};
  std::sort(marks.begin(), marks.end());
  for (double m : marks)
    if (m > iv.lo + 1e-14 && m < iv.hi - 1e-14 && m - cuts.back() > 1e-14) cuts.push_back(m);
  cuts.push_back(iv.hi);
  return cuts;
}

/// Integrate over a box split along per-axis cut lists (from axis_cuts).
template <class F>
auto tensor_quad_split(F&& f, const std::vector<std::vector<double>>& cuts, const QuadOptions& opt = {})
    -> QuadResult<plain_value_t<decltype(f(std::declval<const Vec&>()))>> {
  using T = plain_value_t<decltype(f(std::declval<const Vec&>()))>;
  const int l = static_cast<int>(cuts.size());
  std::vector<std::size_t> idx(l, 0);
  QuadResult<T> total;
  bool first = true;
  while (true) {
    Box sub(l);
    for (int a = 0; a < l; ++a) sub[a] = {cuts[a][idx[a]], cuts[a][idx[a] + 1]};
    auto part = tensor_quad(f, sub, opt);
    if (first) {
      total = part;
      first = false;
    } else {
      total.value = total.value + part.value;
      total.abs_error += part.abs_error;
      total.evaluations += part.evaluations;
      total.converged = total.converged && part.converged;
    }
    int a = 0;
    for (; a < l; ++a) {
      if (++idx[a] + 1 < cuts[a].size()) break;
      idx[a] = 0;
    }
    if (a == l) break;
  }
  return total;
}

/// Divergence probe on doubling windows: reports the running total and
/// whether the window-to-window increments die out.
struct WindowProbe {
  double value = 0.0;
  bool finite = true;
  double last_increment = 0.0;
};

template <class F>
WindowProbe growing_window_probe(F&& value_on_window, double r0, int doublings,
                                 double decay_ratio = 0.6) {
  WindowProbe probe;
  double prev = value_on_window(r0);
  double prev_inc = -1.0;
  double r = r0;
  for (int k = 1; k <= doublings; ++k) {
    r *= 2.0;
    double cur = value_on_window(r);
    double inc = cur - prev;
    if (k == doublings) {
      probe.value = cur;
      probe.last_increment = inc;
      double scale = std::max(1.0, std::abs(cur));
      if (prev_inc >= 0.0 && inc > decay_ratio * prev_inc && inc > 1e-10 * scale) probe.finite = false;
    }
    prev = cur;
    prev_inc = std::max(0.0, inc);
  }
  return probe;
}

}  // namespace idfield
