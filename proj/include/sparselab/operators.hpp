#pragma once

// Pointwise operators: the dyadic m-linear fractional r-type maximal
// operator, the discrete multilinear fractional integral, sparse operators
// and iterated weighted sparse averaging operators.

#include "sparselab/average.hpp"
#include "sparselab/exponents.hpp"

namespace sparselab {

// Kernel handling for the fractional integral.
struct KernelSpec {
  enum class DiagonalPolicy { kSkipSharedCell, kCapAtCellScale };
  DiagonalPolicy diagonal = DiagonalPolicy::kSkipSharedCell;
};

// Whether data-parallel kernels run their OpenMP loops; the serial setting is
// the reference configuration used by tests and the benchmark.
struct ExecPolicy {
  bool parallel = true;
};

// At each cell x: sup over the L+1 dyadic cubes containing x of
// mu(Q)^eta * prod_j avg(f_j, r_j, Q).
GridFunction dyadic_maximal(const std::vector<GridFunction>& f, double eta,
                            const std::vector<double>& r, const GridSpec& grid,
                            const Measure& mu, ExecPolicy exec = {});

// O(1) mu-measure of arcs and metric balls on the torus from a density
// prefix table (piecewise-constant density integrated exactly; the ball
// measure equals min(2*rad, 1) under Lebesgue).
class ArcMeasure {
 public:
  ArcMeasure(const GridSpec& grid, const Measure& mu) : n_(grid.cells()) {
    prefix_.assign(static_cast<size_t>(n_) + 1, 0.0);
    for (int i = 0; i < n_; ++i)
      prefix_[i + 1] = prefix_[i] + mu.density[i] / n_;
    total_ = prefix_[n_];
  }

  double total() const { return total_; }

  // Antiderivative of the (periodically extended) density at t.
  double cdf(double t) const {
    double k = std::floor(t);
    double frac = t - k;
    double scaled = frac * n_;
    int cell = std::min(n_ - 1, static_cast<int>(scaled));
    double inside =
        prefix_[cell] + (prefix_[cell + 1] - prefix_[cell]) * (scaled - cell);
    return k * total_ + inside;
  }

  // mu(B(x, rad)) for the closed metric ball around the point x.
  double ball(double x, double rad) const {
    if (2.0 * rad >= 1.0) return total_;
    return cdf(x + rad) - cdf(x - rad);
  }

 private:
  int n_;
  std::vector<double> prefix_;
  double total_ = 0.0;
};

// Convenience wrapper: mu(B(midpoint of cell c, rad)).
double ball_measure(int c, double rad, const GridSpec& grid,
                    const Measure& mu);

// Midpoint-rule evaluation of the multilinear fractional integral with kernel
// (sum_i mu(B(x, d(x, y_i))))^{eta - m}; m <= 2 only (O(N^{m+1}) cost).
GridFunction frac_integral(const std::vector<GridFunction>& f, double eta,
                           const KernelSpec& spec, const GridSpec& grid,
                           const Measure& mu, ExecPolicy exec = {});

// sum_{Q in S} mu(Q)^eta * prod_j avg(f_j, r_j, Q) * chi_Q.
GridFunction sparse_operator(const SparseFamily& s,
                             const std::vector<GridFunction>& f, double eta,
                             const std::vector<double>& r, const GridSpec& grid,
                             const Measure& mu);

// A_{S,v}(phi) = (sum_{Q in S} <phi>_{1,Q} chi_Q) * v, applied j times.
GridFunction sparse_avg_iterate(const SparseFamily& s, const GridFunction& phi,
                                const GridFunction& v, int j,
                                const GridSpec& grid, const Measure& mu);

// Pointwise margin of (sum lam_Q chi_Q)^p <= p * sum lam_Q chi_Q *
// (sum_{Q' subset Q} lam_{Q'} chi_{Q'})^{p-1}: returns the minimum over cells
// of (rhs - lhs) / max(lhs, floor).
double power_sum_margin(const std::vector<std::pair<DyadicCube, double>>& lam,
                        double p, const GridSpec& grid);

}  // namespace sparselab
