#pragma once

// Sparse-family verification and construction: the delta-sparseness check
// with the canonical witness, maximal-operator stopping families, symbol
// augmentation, the sharp grand maximal truncation operator, and the
// sparse-domination algorithm.

#include <cstdint>
#include <map>

#include "sparselab/forms.hpp"
#include "sparselab/operators.hpp"

namespace sparselab {

struct DominationConfig {
  double beta = 3.0;     // truncation dilation factor (>= 1)
  double c1 = 2.0;       // algorithm constant, >= 1
  double c2 = 4.0;       // Calderon-Zygmund height is 1/c2, >= 2
  int max_depth = -1;    // recursion cap; -1 means the lattice depth L
  int osc_pairs = 64;    // sampled pairs per oscillation; 0 = exhaustive
  double s = 2.0;        // oscillation exponent, max_i r_i < s
  uint64_t seed = 0;

  // Exceedance level per thresholded component.
  double lambda0(const ExponentConfig& cfg) const {
    size_t tau = std::max<size_t>(1, cfg.tau.size());
    double l = 1.0 / (6.0 * static_cast<double>(tau) *
                      (cfg.k_total() + 1) * c1 * c2);
    if (!(l > 0.0 && l < 1.0))
      throw std::invalid_argument("DominationConfig: lambda0 outside (0,1)");
    return l;
  }

  void validate(const ExponentConfig& cfg) const {
    if (!(beta >= 1.0))
      throw std::invalid_argument("DominationConfig: beta must be >= 1");
    if (!(c1 >= 1.0) || !(c2 >= 2.0))
      throw std::invalid_argument("DominationConfig: need c1 >= 1, c2 >= 2");
    double rmax = 0.0;
    for (double r : cfg.r) rmax = std::max(rmax, r);
    if (!(rmax < s))
      throw std::invalid_argument("DominationConfig: need max_i r_i < s");
    (void)lambda0(cfg);
  }
};

struct WeakTypeModulus {
  std::map<double, double> samples;  // lambda -> Phi(lambda)
};

struct VerifyReport {
  double delta_actual = 1.0;
  // Per finest cell (lattice coords): index into the sorted cube list of the
  // smallest family cube containing it, or -1.
  std::vector<int> owner;
  std::vector<DyadicCube> sorted_cubes;
  std::vector<double> witness_mass;  // mu(E_Q) per sorted cube
};

VerifyReport verify_sparse(const SparseFamily& s, const GridSpec& grid,
                           const Measure& mu);

struct StopResult {
  SparseFamily family;
  double c_stop = 0.0;
};

// Stopping-time family for the maximal operator: select Q when
// lambda_Q > a * lambda_P for the nearest selected ancestor P.
StopResult sparse_from_maximal(const std::vector<GridFunction>& f, double eta,
                               const std::vector<double>& r,
                               const GridSpec& grid, const Measure& mu,
                               double a);

inline double default_stopping_threshold(double eta,
                                         const std::vector<double>& r) {
  double e = eta + 1.0;
  for (double rj : r) e += 1.0 / rj;
  return std::pow(2.0, e);
}

struct AugmentResult {
  SparseFamily family;
  double c_aug = 0.0;
};

// Local-mean-oscillation augmentation of a sparse family for a symbol b.
AugmentResult augment_for_symbol(const SparseFamily& s, const GridFunction& b,
                                 const GridSpec& grid, const Measure& mu);

// Torus arc in lattice coordinates: cells start, start+1, ..., mod N.
struct LatArc {
  int start = 0;
  int len = 0;
};

// Centered beta-dilation of a cube, clipped to the whole space.
LatArc dilate_cube(const DyadicCube& q, double beta, const GridSpec& grid);

// Handle for operators the domination machinery can truncate and evaluate
// pointwise. Inputs are full grid functions; masked evaluation means the
// inputs are multiplied by the indicator of a lattice arc.
class TruncatableOperator {
 public:
  virtual ~TruncatableOperator() = default;
  virtual int arity() const = 0;
  virtual GridFunction apply(const std::vector<GridFunction>& f) const = 0;
  virtual double apply_at(int cell, const std::vector<GridFunction>& f)
      const = 0;
  // T(f * chi_arc)(cell) with every slot masked by the same arc.
  virtual double apply_at_masked(int cell, const std::vector<GridFunction>& f,
                                 const LatArc& arc) const;
  // Linear in its single slot (enables the truncation difference trick).
  virtual bool linear() const { return false; }
  // Multilinear in every slot (enables commutator expansion).
  virtual bool multilinear() const { return false; }
  const GridSpec& grid() const { return grid_; }
  const Measure& mu() const { return mu_; }

 protected:
  TruncatableOperator(const GridSpec& g, const Measure& m) : grid_(g), mu_(m) {}
  GridSpec grid_;
  Measure mu_;
};

// The discrete multilinear fractional integral as a truncatable handle.
class FracIntegralHandle : public TruncatableOperator {
 public:
  FracIntegralHandle(int m, double eta, const KernelSpec& spec,
                     const GridSpec& grid, const Measure& mu);
  int arity() const override { return m_; }
  bool linear() const override { return m_ == 1; }
  bool multilinear() const override { return true; }
  GridFunction apply(const std::vector<GridFunction>& f) const override;
  double apply_at(int cell, const std::vector<GridFunction>& f) const override;
  double apply_at_masked(int cell, const std::vector<GridFunction>& f,
                         const LatArc& arc) const override;

 private:
  double kernel1(int x, int y) const;  // m = 1 kernel between cells
  double ball(int x, int y) const;     // mu(B(x, d(x,y)))
  int m_;
  double eta_;
  KernelSpec spec_;
  ArcMeasure arc_;
  bool uniform_ = false;
  double density0_ = 1.0;
  std::vector<double> kt_;  // distance-indexed kernel row (uniform density)
};

// The dyadic maximal operator as a (sublinear) handle, for weak_modulus.
class MaximalHandle : public TruncatableOperator {
 public:
  MaximalHandle(double eta, std::vector<double> r, const GridSpec& grid,
                const Measure& mu)
      : TruncatableOperator(grid, mu), eta_(eta), r_(std::move(r)) {}
  int arity() const override { return static_cast<int>(r_.size()); }
  GridFunction apply(const std::vector<GridFunction>& f) const override {
    return dyadic_maximal(f, eta_, r_, grid_, mu_);
  }
  double apply_at(int cell, const std::vector<GridFunction>& f) const override {
    return apply(f)[cell];
  }

 private:
  double eta_;
  std::vector<double> r_;
};

// Sharp grand maximal truncation: at each cell, sup over containing cubes of
// the s-oscillation of T applied to the input truncated away from beta Q.
GridFunction grand_maximal_sharp(const TruncatableOperator& t,
                                 const std::vector<GridFunction>& f,
                                 const DominationConfig& dom);

struct DominateResult {
  SparseFamily family;
  double lhs = 0.0;
  double rhs = 0.0;
  double c_emp = 0.0;
  bool budget_ok = true;  // every node's children kept <= half the measure
  int nodes = 0;
};

// Sparse domination of the generalized commutator T^{b,k}_tau against the sum
// of higher-order sparse forms over the constructed family.
DominateResult dominate(const TruncatableOperator& t,
                        const std::vector<GridFunction>& f,
                        const GridFunction& g,
                        const std::vector<GridFunction>& b,
                        const ExponentConfig& cfg, const DominationConfig& dom);

// Empirical locally-weak-type modulus of G on a cube.
WeakTypeModulus weak_modulus(const TruncatableOperator& g,
                             const ExponentConfig& cfg, const DyadicCube& q,
                             const std::vector<GridFunction>& f,
                             const std::vector<double>& lambdas);

}  // namespace sparselab
