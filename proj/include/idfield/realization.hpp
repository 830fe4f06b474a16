#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "idfield/numeric.hpp"
#include "idfield/quadrature.hpp"

namespace idfield {

/// Simulation request: lattice resolution h over a window, evaluation
/// points, replicate countBoxand the root seed.
struct SimPlan {
  std::vector<Vec> t_points;
  int replicates = 1;
  Box window;
  Vec h;
  std::uint64_t seed = 1;
};

/// Sampled field values on a grid of t-points, replicate-indexed, with the
/// discretization provenance needed to reproduce or audit the draw.
class FieldRealization {
 public:
  FieldRealization(std::vector<Vec> t_points, int q, int replicates, std::uint64_t seed, Vec h,
                   Box window, double truncation_budget)
      : t_points_(std::move(t_points)),
        q_(q),
        replicates_(replicates),
        seed_(seed),
        h_(std::move(h)),
        window_(std::move(window)),
        truncation_budget_(truncation_budget),
        values_(static_cast<std::size_t>(replicates_) * t_points_.size() * static_cast<std::size_t>(q_), 0.0) {}

  int q() const { return q_; }
  int replicates() const { return replicates_; }
  const std::vector<Vec>& t_points() const { return t_points_; }
  std::uint64_t seed() const { return seed_; }
  const Vec& resolution() const { return h_; }
  const Box& window() const { return window_; }
  double truncation_budget() const { return truncation_budget_; }

  double* slot(int replicate, std::size_t ti) {
    return values_.data() + (static_cast<std::size_t>(replicate) * t_points_.size() + ti) * q_;
  }
  Eigen::Map<const Vec> value(int replicate, std::size_t ti) const {
    return {values_.data() + (static_cast<std::size_t>(replicate) * t_points_.size() + ti) * q_,
            q_};
  }

  /// Index of a t-point, or -1 when the grid does not cover it.
  long index_of(const Vec& t, double tol = 1e-9) const {
    for (std::size_t i = 0; i < t_points_.size(); ++i)
      if ((t_points_[i] - t).cwiseAbs().maxCoeff() <= tol) return static_cast<long>(i);
    return -1;
  }

  /// CSV export: replicate, t coordinates, value components.
  void write_csv(std::ostream& os) const {
    const int l = t_points_.empty() ? 0 : static_cast<int>(t_points_.front().size());
    os << "replicate";
    for (int a = 0; a < l; ++a) os << ",t" << (a + 1);
    for (int c = 0; c < q_; ++c) os << ",x" << (c + 1);
    os << "\n";
    for (int m = 0; m < replicates_; ++m)
      for (std::size_t ti = 0; ti < t_points_.size(); ++ti) {
        os << m;
        for (int a = 0; a < l; ++a) os << "," << format_g17(t_points_[ti][a]);
        auto v = value(m, ti);
        for (int c = 0; c < q_; ++c) os << "," << format_g17(v[c]);
        os << "\n";
      }
  }

  /// Little-endian binary cache (magic, dims, t grid, values, provenance).
  void write_cache(std::ostream& os) const {
    auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    os.write("IDFRLZ1\n", 8);
    const std::uint64_t l = t_points_.empty() ? 0 : static_cast<std::uint64_t>(t_points_.front().size());
    put_u64(static_cast<std::uint64_t>(replicates_));
    put_u64(t_points_.size());
    put_u64(static_cast<std::uint64_t>(q_));
    put_u64(l);
    put_u64(seed_);
    put_f64(truncation_budget_);
    for (long a = 0; a < h_.size(); ++a) put_f64(h_[a]);
    for (const auto& iv : window_) {
      put_f64(iv.lo);
      put_f64(iv.hi);
    }
    for (const auto& t : t_points_)
      for (long a = 0; a < t.size(); ++a) put_f64(t[a]);
    os.write(reinterpret_cast<const char*>(values_.data()),
             static_cast<std::streamsize>(values_.size() * sizeof(double)));
  }

  static FieldRealization read_cache(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (std::string(magic, 8) != "IDFRLZ1\n") throw std::runtime_error("bad realization cache header");
    auto get_u64 = [&] {
      std::uint64_t v;
      is.read(reinterpret_cast<char*>(&v), 8);
      return v;
    };
    auto get_f64 = [&] {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      return v;
    };
    int replicates = static_cast<int>(get_u64());
    std::size_t nt = get_u64();
    int q = static_cast<int>(get_u64());
    int l = static_cast<int>(get_u64());
    std::uint64_t seed = get_u64();
    double budget = get_f64();
    Vec h(l);
    for (int a = 0; a < l; ++a) h[a] = get_f64();
    Box window(static_cast<std::size_t>(l));
    for (auto& iv : window) {
      iv.lo = get_f64();
      iv.hi = get_f64();
    }
    std::vector<Vec> ts(nt, Vec(l));
    for (auto& t : ts)
      for (int a = 0; a < l; ++a) t[a] = get_f64();
    FieldRealization out(std::move(ts), q, replicates, seed, std::move(h), std::move(window), budget);
    is.read(reinterpret_cast<char*>(out.values_.data()),
            static_cast<std::streamsize>(out.values_.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated realization cache");
    return out;
  }

 private:
  std::vector<Vec> t_points_;
  int q_;
  int replicates_;
  std::uint64_t seed_;
  Vec h_;
  Box window_;
  double truncation_budget_;
  std::vector<double> values_;
};

}  // namespace idfield
