#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "idfield/rng.hpp"
#include "idfield/triplet.hpp"

namespace idfield {

/// Finite discrete mixing space S = {A_1,...,A_K} with probability weights.
class MixingSpace {
 public:
  explicit MixingSpace(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw std::invalid_argument("mixing space needs at least one element");
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0)) throw std::invalid_argument("mixing weights must be positive");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixing weights must sum to 1");
  }
  static MixingSpace trivial() { return MixingSpace({1.0}); }

  int size() const { return static_cast<int>(weights_.size()); }
  double weight(int i) const { return weights_.at(static_cast<std::size_t>(i)); }

 private:
  std::vector<double> weights_;
};

/// (γ, Σ, Q, π) of a time-homogeneous factorisable Levy basis on S x R^l:
/// the increment over a cell B has cumulant ψ(θ) Π(B) with Π = π ⊗ Lebesgue.
struct GeneratingQuadruple {
  CharTriplet base;
  MixingSpace mixing;
  int spatial_dim = 1;

  GeneratingQuadruple(CharTriplet base_, MixingSpace mixing_, int l)
      : base(std::move(base_)), mixing(std::move(mixing_)), spatial_dim(l) {
    if (l < 1) throw std::invalid_argument("spatial dimension must be >= 1");
  }
};

/// Law of the basis increment over a set of product measure `cell_measure`:
/// every triplet component scales linearly.
inline CharTriplet cell_law(const GeneratingQuadruple& q, double cell_measure) {
  if (cell_measure < 0) throw std::invalid_argument("cell measure must be nonnegative");
  return q.base.scaled(cell_measure);
}

struct Cell {
  int mixing_index = 0;
  Box bounds;
  Vec center;
  double measure = 0.0;  // π(A) * volume(bounds)
};

/// Disjoint cells (A_i x spatial box) tiling a window at resolution h.
class CellPartition {
 public:
  CellPartition(Box window, Vec resolution, const MixingSpace& mixing)
      : window_(std::move(window)), resolution_(std::move(resolution)) {
    const int l = static_cast<int>(window_.size());
    if (resolution_.size() != l) throw std::invalid_argument("resolution dimension mismatch");
    std::vector<long> counts(l);
    long total = 1;
    for (int a = 0; a < l; ++a) {
      if (!(resolution_[a] > 0)) throw std::invalid_argument("cell edge lengths must be positive");
      counts[a] = std::max<long>(1, std::lround(window_[a].length() / resolution_[a]));
      total *= counts[a];
    }
    cells_.reserve(static_cast<std::size_t>(total) * mixing.size());
    std::vector<long> idx(l, 0);
    for (long flat = 0; flat < total; ++flat) {
      Box bounds(l);
      Vec center(l);
      double vol = 1.0;
      for (int a = 0; a < l; ++a) {
        double step = window_[a].length() / static_cast<double>(counts[a]);
        bounds[a] = {window_[a].lo + step * idx[a], window_[a].lo + step * (idx[a] + 1)};
        center[a] = 0.5 * (bounds[a].lo + bounds[a].hi);
        vol *= step;
      }
      for (int m = 0; m < mixing.size(); ++m)
        cells_.push_back({m, bounds, center, mixing.weight(m) * vol});
      int a = 0;
      for (; a < l; ++a) {
        if (++idx[a] < counts[a]) break;
        idx[a] = 0;
      }
    }
  }

  const Box& window() const { return window_; }
  const Vec& resolution() const { return resolution_; }
  const std::vector<Cell>& cells() const { return cells_; }

 private:
  Box window_;
  Vec resolution_;
  std::vector<Cell> cells_;
};

/// Draws increments of the basis over cells. Everything that does not depend
/// on the cell measure is precomputed once; a draw at measure m is then
/// m*γ_eff + sqrt(m) L z + jumps at intensity scale m.
class CellSampler {
 public:
  explicit CellSampler(const CharTriplet& unit_law)
      : dim_(unit_law.dim()),
        gamma_eff_(unit_law.gamma() - unit_law.levy().sampled_compensation()),
        levy_(unit_law.levy()) {
    if (!levy_.can_sample())
      throw std::invalid_argument("Levy measure is not samplable (parametric sampler missing)");
    if (abs_norm(unit_law.sigma()) > 0.0) {
      Eigen::LLT<Mat> llt(unit_law.sigma() + 1e-14 * abs_norm(unit_law.sigma()) * Mat::Identity(dim_, dim_));
      chol_ = llt.matrixL();
      has_gauss_ = true;
    }
    Mat small = levy_.small_jump_gaussian_cov();
    if (abs_norm(small) > 0.0) {
      Eigen::LLT<Mat> llt(small + 1e-14 * abs_norm(small) * Mat::Identity(dim_, dim_));
      small_chol_ = llt.matrixL();
      has_small_ = true;
    }
  }

  int dim() const { return dim_; }

  Vec draw(double measure, RngStream& rng) const {
    Vec x = measure * gamma_eff_;
    double root = std::sqrt(measure);
    if (has_gauss_) {
      Vec z(dim_);
      for (int i = 0; i < dim_; ++i) z[i] = rng.gaussian();
      x += root * (chol_ * z);
    }
    if (has_small_) {
      Vec z(dim_);
      for (int i = 0; i < dim_; ++i) z[i] = rng.gaussian();
      x += root * (small_chol_ * z);
    }
    jumps_scratch_.clear();
    levy_.sample_jumps(measure, rng, jumps_scratch_);
    for (const auto& j : jumps_scratch_) x += j;
    return x;
  }

 private:
  int dim_;
  Vec gamma_eff_;
  LevyMeasure levy_;
  Mat chol_, small_chol_;
  bool has_gauss_ = false, has_small_ = false;
  static thread_local std::vector<Vec> jumps_scratch_;
};

inline thread_local std::vector<Vec> CellSampler::jumps_scratch_;

/// One draw from the ID law with the given triplet (unit measure).
inline Vec sample_id_increment(const CharTriplet& law, RngStream& rng) {
  return CellSampler(law).draw(1.0, rng);
}

/// Independent increments for every cell of the partition, deterministic in
/// the seed: the stream of cell i at replicate r depends only on
/// (seed, i, r), never on evaluation order.
inline std::vector<Vec> sample_increments(const GeneratingQuadruple& q, const CellPartition& part,
                                          std::uint64_t seed, std::uint64_t replicate = 0) {
  CellSampler sampler(q.base);
  const auto& cells = part.cells();
  std::vector<Vec> out(cells.size());
  RngStream root(seed);
  parallel_for(cells.size(), [&](std::size_t i) {
    RngStream stream = root.derive(0x1dce11ull, i, replicate);
    out[i] = sampler.draw(cells[i].measure, stream);
  }, 256);
  return out;
}

}  // namespace idfield
