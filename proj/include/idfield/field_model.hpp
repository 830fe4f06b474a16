#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idfield/mma.hpp"
#include "idfield/realization.hpp"

namespace idfield {

/// A stationary ID random field exposed through the joint law of (X_0, X_t):
/// marginal triplet and cumulant, Gaussian cross-covariance, pair Levy
/// functionals, and simulation. Implementations are immutable and safe to
/// share across workers.
class FieldModel {
 public:
  virtual ~FieldModel() = default;

  virtual int value_dim() const = 0;   // q
  virtual int domain_dim() const = 0;  // l
  virtual std::string describe() const = 0;

  virtual const MarginalTriplet& marginal() const = 0;
  virtual QuadResult<Complex> marginal_cumulant(const Vec& theta) const = 0;

  /// log E e^{i(<θ1,X_0> + <θ2,X_t>)} - log E e^{i<θ1,X_0>} - log E e^{i<θ2,X_0>}.
  virtual QuadResult<Complex> excess_cumulant(const Vec& lag, const Vec& th1, const Vec& th2) const = 0;

  virtual JointPair joint_pair(const Vec& lag) const = 0;

  /// Exact atom list of the marginal Levy measure, when representable.
  virtual std::optional<AtomicMeasure> marginal_atoms() const = 0;
  /// True when the marginal Levy measure carries no atoms by construction.
  virtual bool marginal_atomless_declared() const = 0;

  /// Length scale beyond which the field decorrelates, when the kernel
  /// declares one. Constant-type fields return nullopt.
  virtual std::optional<double> decorrelation_length() const = 0;

  virtual FieldRealization simulate(const SimPlan& plan) const = 0;
};

using FieldModelPtr = std::shared_ptr<const FieldModel>;

/// Joint cumulant of (X_0, X_t) at (θ1, θ2).
inline QuadResult<Complex> joint_cumulant(const FieldModel& model, const Vec& lag, const Vec& th1,
                                          const Vec& th2) {
  auto a = model.marginal_cumulant(th1);
  auto b = model.marginal_cumulant(th2);
  auto c = model.excess_cumulant(lag, th1, th2);
  c.value += a.value + b.value;
  c.abs_error += a.abs_error + b.abs_error;
  c.converged = c.converged && a.converged && b.converged;
  return c;
}

// ---- lattice simulation ----------------------------------------------------

/// Per-cell increment source; draws depend only on (cell, replicate, root),
/// never on evaluation order.
class CellIncrementSampler {
 public:
  virtual ~CellIncrementSampler() = default;
  virtual int dim() const = 0;
  virtual Vec draw(double measure, std::uint64_t cell, std::uint64_t replicate,
                   const RngStream& root) const = 0;
};

class BasisIncrementSampler final : public CellIncrementSampler {
 public:
  explicit BasisIncrementSampler(const CharTriplet& unit_law) : sampler_(unit_law) {}
  int dim() const override { return sampler_.dim(); }
  Vec draw(double measure, std::uint64_t cell, std::uint64_t replicate,
           const RngStream& root) const override {
    RngStream stream = root.derive(0x1dce11ull, cell, replicate);
    return sampler_.draw(measure, stream);
  }

 private:
  CellSampler sampler_;
};

/// Discretized stochastic integral X_t ≈ Σ_cells f(A, t - s_cell) ΔΛ_cell.
/// One basis realization is shared by all t within a replicate.
inline FieldRealization simulate_mma_lattice(const Kernel& kernel, const MixingSpace& mixing,
                                             const CellIncrementSampler& sampler, const SimPlan& plan,
                                             double tail_budget) {
  const int l = kernel.l();
  const int q = kernel.q();
  const int d = kernel.d();
  if (static_cast<int>(plan.window.size()) != l || plan.h.size() != l)
    throw std::invalid_argument("simulation window/resolution dimension mismatch");
  if (plan.replicates < 1) throw std::invalid_argument("need at least one replicate");

  // window must cover the (possibly decay-truncated) kernel support at every t
  for (int a = 0; a < mixing.size(); ++a) {
    Box eff = kernel.component(a).support.effective_box(l, tail_budget);
    for (const auto& t : plan.t_points) {
      Box needed = box_shift(box_negate(eff), t);
      for (int ax = 0; ax < l; ++ax) {
        if (needed[static_cast<std::size_t>(ax)].lo < plan.window[static_cast<std::size_t>(ax)].lo - 1e-9 ||
            needed[static_cast<std::size_t>(ax)].hi > plan.window[static_cast<std::size_t>(ax)].hi + 1e-9)
          throw std::invalid_argument(
              "window/truncation violation: simulation window does not cover the kernel "
              "support shifted to every requested t");
      }
    }
  }

  CellPartition part(plan.window, plan.h, mixing);
  const auto& cells = part.cells();
  const std::size_t ncells = cells.size();
  const std::size_t nt = plan.t_points.size();

  // kernel weights per (t, cell), shared across replicates
  struct ActiveSet {
    std::vector<std::int32_t> cell;
    std::vector<double> coeff;  // q*d per entry, row-major
  };
  std::vector<ActiveSet> table(nt);
  std::vector<char> used(ncells, 0);
  parallel_for(nt, [&](std::size_t ti) {
    auto& act = table[ti];
    Vec s(l);
    for (std::size_t ci = 0; ci < ncells; ++ci) {
      const auto& cell = cells[ci];
      for (int ax = 0; ax < l; ++ax) s[ax] = plan.t_points[ti][ax] - cell.center[ax];
      Mat f = kernel.eval(cell.mixing_index, s);
      if (abs_norm(f) == 0.0) continue;
      act.cell.push_back(static_cast<std::int32_t>(ci));
      for (int r = 0; r < q; ++r)
        for (int c = 0; c < d; ++c) act.coeff.push_back(f(r, c));
      used[ci] = 1;
    }
  });

  FieldRealization out(plan.t_points, q, plan.replicates, plan.seed, plan.h, plan.window, tail_budget);
  RngStream root(plan.seed);
  parallel_for(static_cast<std::size_t>(plan.replicates), [&](std::size_t m) {
    std::vector<double> deltas(ncells * static_cast<std::size_t>(d), 0.0);
    for (std::size_t ci = 0; ci < ncells; ++ci) {
      if (!used[ci]) continue;
      Vec inc = sampler.draw(cells[ci].measure, ci, m, root);
      for (int c = 0; c < d; ++c) deltas[ci * d + c] = inc[c];
    }
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto& act = table[ti];
      double* dst = out.slot(static_cast<int>(m), ti);
      for (std::size_t e = 0; e < act.cell.size(); ++e) {
        const double* f = act.coeff.data() + e * static_cast<std::size_t>(q) * d;
        const double* dv = deltas.data() + static_cast<std::size_t>(act.cell[e]) * d;
        for (int r = 0; r < q; ++r) {
          double acc = 0.0;
          for (int c = 0; c < d; ++c) acc += f[r * d + c] * dv[c];
          dst[r] += acc;
        }
      }
    }
  }, 1);
  return out;
}

// ---- concrete models -------------------------------------------------------

/// Mixed moving average field. Construction verifies the integrability
/// conditions and fixes the marginal triplet.
class MmaFieldModel final : public FieldModel {
 public:
  explicit MmaFieldModel(MmaModel model, std::string name = "mma")
      : model_(std::make_shared<const MmaModel>(std::move(model))), name_(std::move(name)) {
    auto rep = check_integrability(*model_);
    if (!rep.integrable())
      throw std::invalid_argument("kernel is not integrable against the basis (" + name_ + ")");
    marginal_ = std::make_shared<const MarginalTriplet>(mma_marginal_triplet(*model_));
  }

  const MmaModel& model() const { return *model_; }

  int value_dim() const override { return model_->q(); }
  int domain_dim() const override { return model_->l(); }
  std::string describe() const override { return name_; }

  const MarginalTriplet& marginal() const override { return *marginal_; }
  QuadResult<Complex> marginal_cumulant(const Vec& theta) const override {
    return mma_marginal_cumulant(*model_, theta);
  }
  QuadResult<Complex> excess_cumulant(const Vec& lag, const Vec& th1, const Vec& th2) const override {
    return mma_excess_cumulant(*model_, lag, th1, th2);
  }
  JointPair joint_pair(const Vec& lag) const override { return mma_joint_pair(model_, lag); }

  std::optional<AtomicMeasure> marginal_atoms() const override {
    if (!model_->kernel.finite_value_set()) return std::nullopt;
    return marginal_->triplet.levy().atoms();
  }
  bool marginal_atomless_declared() const override {
    // a strictly-varying kernel spreads every basis atom along a curve
    if (!model_->kernel.finite_value_set()) return true;
    auto atoms = marginal_atoms();
    return atoms && atoms->empty();
  }
  std::optional<double> decorrelation_length() const override {
    return model_->kernel.decorrelation_length();
  }

  FieldRealization simulate(const SimPlan& plan) const override {
    BasisIncrementSampler sampler(model_->quadruple.base);
    return simulate_mma_lattice(model_->kernel, model_->quadruple.mixing, sampler, plan,
                                model_->quad.tail_budget);
  }

 private:
  std::shared_ptr<const MmaModel> model_;
  std::shared_ptr<const MarginalTriplet> marginal_;
  std::string name_;
};

/// X_t ≡ Z for a single ID draw Z: stationary, never mixing (unless
/// degenerate). The built-in negative control.
class ConstantFieldModel final : public FieldModel {
 public:
  ConstantFieldModel(CharTriplet law, int l, std::string name = "constant")
      : law_(std::make_shared<const CharTriplet>(std::move(law))),
        l_(l),
        name_(std::move(name)),
        marginal_{*law_, 0.0, 0.0} {}

  int value_dim() const override { return law_->dim(); }
  int domain_dim() const override { return l_; }
  std::string describe() const override { return name_; }

  const MarginalTriplet& marginal() const override { return marginal_; }
  QuadResult<Complex> marginal_cumulant(const Vec& theta) const override {
    return cumulant_checked(*law_, theta);
  }
  QuadResult<Complex> excess_cumulant(const Vec&, const Vec& th1, const Vec& th2) const override {
    auto ab = cumulant_checked(*law_, Vec(th1 + th2));
    auto a = cumulant_checked(*law_, th1);
    auto b = cumulant_checked(*law_, th2);
    ab.value -= a.value + b.value;
    ab.abs_error += a.abs_error + b.abs_error;
    return ab;
  }
  JointPair joint_pair(const Vec& lag) const override {
    JointPair jp;
    jp.lag = lag;
    jp.gauss_cross = law_->sigma();
    auto law = law_;
    jp.levy_real = [law](const std::function<double(const Vec&, const Vec&)>& g) {
      return law->levy().integrate([&](const Vec& x) { return g(x, x); });
    };
    jp.levy_complex = [law](const std::function<Complex(const Vec&, const Vec&)>& g) {
      return law->levy().integrate([&](const Vec& x) { return g(x, x); });
    };
    if (auto atoms = law_->levy().atoms()) {
      std::vector<PairAtom> pa;
      for (const auto& a : atoms->atoms()) pa.push_back({a.point, a.point, a.mass});
      jp.atoms = std::move(pa);
    }
    return jp;
  }

  std::optional<AtomicMeasure> marginal_atoms() const override { return law_->levy().atoms(); }
  bool marginal_atomless_declared() const override { return law_->levy().atomless_declared(); }
  std::optional<double> decorrelation_length() const override { return std::nullopt; }

  FieldRealization simulate(const SimPlan& plan) const override {
    FieldRealization out(plan.t_points, law_->dim(), plan.replicates, plan.seed,
                         plan.h.size() ? plan.h : Vec::Ones(l_),
                         plan.window.empty() ? Box(static_cast<std::size_t>(l_), Interval{0, 1}) : plan.window,
                         0.0);
    CellSampler sampler(*law_);
    RngStream root(plan.seed);
    parallel_for(static_cast<std::size_t>(plan.replicates), [&](std::size_t m) {
      RngStream stream = root.derive(0xc0475ull, m);
      Vec z = sampler.draw(1.0, stream);
      for (std::size_t ti = 0; ti < plan.t_points.size(); ++ti) {
        double* dst = out.slot(static_cast<int>(m), ti);
        for (int c = 0; c < law_->dim(); ++c) dst[c] = z[c];
      }
    }, 1);
    return out;
  }

 private:
  std::shared_ptr<const CharTriplet> law_;
  int l_;
  std::string name_;
  MarginalTriplet marginal_;
};

/// Sum of independent fields: triplets, cross-covariances and pair measures
/// all add.
class SumFieldModel final : public FieldModel {
 public:
  explicit SumFieldModel(std::vector<FieldModelPtr> parts, std::string name = "sum")
      : parts_(std::move(parts)), name_(std::move(name)) {
    if (parts_.empty()) throw std::invalid_argument("sum model needs components");
    for (const auto& p : parts_) {
      if (p->value_dim() != parts_.front()->value_dim() || p->domain_dim() != parts_.front()->domain_dim())
        throw std::invalid_argument("sum components must share q and l");
    }
    MarginalTriplet acc = parts_.front()->marginal();
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      const auto& mi = parts_[i]->marginal();
      acc = MarginalTriplet{convolve(acc.triplet, mi.triplet),
                            acc.quadrature_error + mi.quadrature_error,
                            std::max(acc.levy_discretization, mi.levy_discretization)};
    }
    marginal_ = std::make_shared<const MarginalTriplet>(std::move(acc));
  }

  const std::vector<FieldModelPtr>& components() const { return parts_; }

  int value_dim() const override { return parts_.front()->value_dim(); }
  int domain_dim() const override { return parts_.front()->domain_dim(); }
  std::string describe() const override { return name_; }

  const MarginalTriplet& marginal() const override { return *marginal_; }
  QuadResult<Complex> marginal_cumulant(const Vec& theta) const override {
    auto acc = parts_.front()->marginal_cumulant(theta);
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      auto r = parts_[i]->marginal_cumulant(theta);
      acc.value += r.value;
      acc.abs_error += r.abs_error;
      acc.converged = acc.converged && r.converged;
    }
    return acc;
  }
  QuadResult<Complex> excess_cumulant(const Vec& lag, const Vec& th1, const Vec& th2) const override {
    auto acc = parts_.front()->excess_cumulant(lag, th1, th2);
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      auto r = parts_[i]->excess_cumulant(lag, th1, th2);
      acc.value += r.value;
      acc.abs_error += r.abs_error;
      acc.converged = acc.converged && r.converged;
    }
    return acc;
  }
  JointPair joint_pair(const Vec& lag) const override {
    std::vector<JointPair> sub;
    sub.reserve(parts_.size());
    for (const auto& p : parts_) sub.push_back(p->joint_pair(lag));
    JointPair jp;
    jp.lag = lag;
    jp.gauss_cross = sub.front().gauss_cross;
    for (std::size_t i = 1; i < sub.size(); ++i) jp.gauss_cross += sub[i].gauss_cross;
    auto subs = std::make_shared<std::vector<JointPair>>(std::move(sub));
    jp.levy_real = [subs](const std::function<double(const Vec&, const Vec&)>& g) {
      auto acc = (*subs)[0].levy_real(g);
      for (std::size_t i = 1; i < subs->size(); ++i) {
        auto r = (*subs)[i].levy_real(g);
        acc.value += r.value;
        acc.abs_error += r.abs_error;
        acc.converged = acc.converged && r.converged;
      }
      return acc;
    };
    jp.levy_complex = [subs](const std::function<Complex(const Vec&, const Vec&)>& g) {
      auto acc = (*subs)[0].levy_complex(g);
      for (std::size_t i = 1; i < subs->size(); ++i) {
        auto r = (*subs)[i].levy_complex(g);
        acc.value += r.value;
        acc.abs_error += r.abs_error;
        acc.converged = acc.converged && r.converged;
      }
      return acc;
    };
    bool all_atoms = true;
    std::vector<PairAtom> atoms;
    for (const auto& s : *subs) {
      if (!s.atoms) {
        all_atoms = false;
        break;
      }
      atoms.insert(atoms.end(), s.atoms->begin(), s.atoms->end());
    }
    if (all_atoms) jp.atoms = std::move(atoms);
    return jp;
  }

  std::optional<AtomicMeasure> marginal_atoms() const override {
    std::optional<AtomicMeasure> acc;
    for (const auto& p : parts_) {
      auto a = p->marginal_atoms();
      if (!a) {
        if (!p->marginal_atomless_declared()) return std::nullopt;
        continue;
      }
      acc = acc ? acc->merged(*a) : *a;
    }
    if (!acc) acc = AtomicMeasure(value_dim(), {});
    return acc;
  }
  bool marginal_atomless_declared() const override {
    for (const auto& p : parts_)
      if (!p->marginal_atomless_declared()) return false;
    return true;
  }
  std::optional<double> decorrelation_length() const override {
    double len = 0.0;
    for (const auto& p : parts_) {
      auto d = p->decorrelation_length();
      if (!d) return std::nullopt;
      len = std::max(len, *d);
    }
    return len;
  }

  FieldRealization simulate(const SimPlan& plan) const override {
    FieldRealization out(plan.t_points, value_dim(), plan.replicates, plan.seed,
                         plan.h, plan.window, 0.0);
    for (std::size_t k = 0; k < parts_.size(); ++k) {
      SimPlan sub = plan;
      sub.seed = splitmix64(plan.seed ^ (0x50b0ull + k));
      FieldRealization r = parts_[k]->simulate(sub);
      for (int m = 0; m < plan.replicates; ++m)
        for (std::size_t ti = 0; ti < plan.t_points.size(); ++ti) {
          double* dst = out.slot(m, ti);
          auto v = r.value(m, ti);
          for (int c = 0; c < value_dim(); ++c) dst[c] += v[c];
        }
    }
    return out;
  }

 private:
  std::vector<FieldModelPtr> parts_;
  std::string name_;
  std::shared_ptr<const MarginalTriplet> marginal_;
};

/// The field M X_t for a fixed matrix M (e.g. the diagonal rescaling used to
/// escape Levy atoms on the 2π lattice).
class ScaledFieldModel final : public FieldModel {
 public:
  ScaledFieldModel(FieldModelPtr base, Mat map, std::string name = "scaled")
      : base_(std::move(base)), map_(std::move(map)), name_(std::move(name)) {
    if (map_.cols() != base_->value_dim())
      throw std::invalid_argument("scale matrix must accept the base field dimension");
    const auto& bm = base_->marginal();
    marginal_ = std::make_shared<const MarginalTriplet>(MarginalTriplet{
        linear_map(bm.triplet, map_), bm.quadrature_error, bm.levy_discretization});
  }

  int value_dim() const override { return static_cast<int>(map_.rows()); }
  int domain_dim() const override { return base_->domain_dim(); }
  std::string describe() const override { return name_; }

  const MarginalTriplet& marginal() const override { return *marginal_; }
  QuadResult<Complex> marginal_cumulant(const Vec& theta) const override {
    return base_->marginal_cumulant(Vec(map_.transpose() * theta));
  }
  QuadResult<Complex> excess_cumulant(const Vec& lag, const Vec& th1, const Vec& th2) const override {
    return base_->excess_cumulant(lag, Vec(map_.transpose() * th1), Vec(map_.transpose() * th2));
  }
  JointPair joint_pair(const Vec& lag) const override {
    JointPair base = base_->joint_pair(lag);
    JointPair jp;
    jp.lag = lag;
    jp.gauss_cross = map_ * base.gauss_cross * map_.transpose();
    Mat M = map_;
    auto inner = std::make_shared<JointPair>(std::move(base));
    jp.levy_real = [inner, M](const std::function<double(const Vec&, const Vec&)>& g) {
      return inner->levy_real([&](const Vec& x, const Vec& y) { return g(Vec(M * x), Vec(M * y)); });
    };
    jp.levy_complex = [inner, M](const std::function<Complex(const Vec&, const Vec&)>& g) {
      return inner->levy_complex([&](const Vec& x, const Vec& y) { return g(Vec(M * x), Vec(M * y)); });
    };
    if (inner->atoms) {
      std::vector<PairAtom> atoms;
      for (const auto& a : *inner->atoms) {
        Vec x = M * a.x0, y = M * a.xt;
        if (x.norm() <= 1e-12 && y.norm() <= 1e-12) continue;
        atoms.push_back({std::move(x), std::move(y), a.mass});
      }
      jp.atoms = std::move(atoms);
    }
    return jp;
  }

  std::optional<AtomicMeasure> marginal_atoms() const override {
    auto atoms = base_->marginal_atoms();
    if (!atoms) return std::nullopt;
    return atoms->mapped(map_);
  }
  bool marginal_atomless_declared() const override {
    bool invertible = map_.rows() == map_.cols() &&
                      std::abs(map_.determinant()) > 1e-12;
    return invertible && base_->marginal_atomless_declared();
  }
  std::optional<double> decorrelation_length() const override { return base_->decorrelation_length(); }

  FieldRealization simulate(const SimPlan& plan) const override {
    FieldRealization base = base_->simulate(plan);
    FieldRealization out(plan.t_points, value_dim(), plan.replicates, plan.seed, base.resolution(),
                         base.window(), base.truncation_budget());
    for (int m = 0; m < plan.replicates; ++m)
      for (std::size_t ti = 0; ti < plan.t_points.size(); ++ti) {
        Vec v = map_ * base.value(m, ti);
        double* dst = out.slot(m, ti);
        for (int c = 0; c < value_dim(); ++c) dst[c] = v[c];
      }
    return out;
  }

 private:
  FieldModelPtr base_;
  Mat map_;
  std::string name_;
  std::shared_ptr<const MarginalTriplet> marginal_;
};

}  // namespace idfield
