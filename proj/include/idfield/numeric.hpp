#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace idfield {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when a diagnostic cannot run because a theorem hypothesis fails
/// for the given model (e.g. Levy atoms on the excluded lattice).
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when phase tracking of a characteristic function loses the
/// continuous branch (modulus passes too close to zero).
class BranchTrackingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a requested lag or point is not covered by a simulated grid.
class GridCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- scalar/type helpers ------------------------------------------------

/// Concrete storable type behind a possibly-lazy Eigen expression.
template <class T, class = void>
struct plain_value {
  using type = std::decay_t<T>;
};
template <class T>
struct plain_value<T, std::void_t<typename std::decay_t<T>::PlainObject>> {
  using type = typename std::decay_t<T>::PlainObject;
};
template <class T>
using plain_value_t = typename plain_value<T>::type;

inline double abs_norm(double x) { return std::abs(x); }
inline double abs_norm(const Complex& z) { return std::abs(z); }
template <class Derived>
double abs_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline double frobenius(const Mat& m) { return m.norm(); }

/// Minimum eigenvalue of a symmetric matrix (symmetrized first).
inline double min_eigenvalue(const Mat& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

// ---- deterministic reductions -------------------------------------------

/// Pairwise (tree) sum of f(0..n-1). Deterministic order, low roundoff.
template <class T, class F>
T pairwise_sum(std::size_t n, F&& f) {
  if (n == 0) throw std::invalid_argument("pairwise_sum: empty range");
  if (n <= 8) {
    T acc = f(std::size_t{0});
    for (std::size_t i = 1; i < n; ++i) acc = acc + f(i);
    return acc;
  }
  std::size_t half = n / 2;
  T left = pairwise_sum<T>(half, f);
  T right = pairwise_sum<T>(n - half, [&](std::size_t i) { return f(i + half); });
  return left + right;
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum<T>(v.size(), [&](std::size_t i) { return v[i]; });
}

// ---- parallel loop -------------------------------------------------------

inline unsigned worker_count() {
  if (const char* env = std::getenv("IDFIELD_THREADS")) {
    long n = std::atol(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1u;
}

/// Index-parallel loop. Results must be written to disjoint slots so the
/// outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& body, std::size_t min_grain = 16) {
  unsigned workers = worker_count();
  if (n == 0) return;
  if (workers <= 1 || n < 2 * min_grain) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, (n + min_grain - 1) / min_grain));
  std::vector<std::thread> pool;
  pool.reserve(used);
  std::size_t chunk = (n + used - 1) / used;
  std::exception_ptr error;
  std::mutex error_mu;
  for (unsigned w = 0; w < used; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- hashing and text output --------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

/// Fixed 17-significant-digit rendering; round-trips IEEE doubles.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace idfield
