#pragma once

// Naive serial reference implementations. These recompute every average by
// direct summation with no caching and no parallelism; tests use them as
// oracles and the benchmark compares them against the production kernels.

#include "sparselab/average.hpp"

namespace sparselab::reference {

inline double naive_measure(const DyadicCube& q, const GridSpec& grid,
                            const Measure& mu) {
  double s = 0.0;
  int a = cube_begin_lat(grid, q);
  for (int p = a; p < a + cube_cells(grid, q); ++p)
    s += mu.density[lat_to_phys(grid, p)] / grid.cells();
  return s;
}

inline double naive_avg(const GridFunction& f, double r, const DyadicCube& q,
                        const GridSpec& grid, const Measure& mu) {
  int a = cube_begin_lat(grid, q);
  if (r == kInf) {
    double m = 0.0;
    for (int p = a; p < a + cube_cells(grid, q); ++p)
      m = std::max(m, std::fabs(f[lat_to_phys(grid, p)]));
    return m;
  }
  double s = 0.0;
  for (int p = a; p < a + cube_cells(grid, q); ++p) {
    int c = lat_to_phys(grid, p);
    s += std::pow(std::fabs(f[c]), r) * mu.density[c] / grid.cells();
  }
  return std::pow(s / naive_measure(q, grid, mu), 1.0 / r);
}

inline double naive_lp_norm(const GridFunction& f, double p,
                            const GridSpec& grid, const Measure& mu) {
  double s = 0.0;
  for (int c = 0; c < grid.cells(); ++c)
    s += std::pow(std::fabs(f[c]), p) * mu.density[c] / grid.cells();
  return std::pow(s, 1.0 / p);
}

// Brute-force maximal operator: per cell, scan all 2^{L+1}-1 cubes.
inline GridFunction bruteforce_dyadic_maximal(
    const std::vector<GridFunction>& f, double eta,
    const std::vector<double>& r, const GridSpec& grid, const Measure& mu) {
  GridFunction out(grid.cells());
  for (int p = 0; p < grid.cells(); ++p) {
    double best = 0.0;
    for (int k = 0; k <= grid.level; ++k) {
      DyadicCube q{k, p >> (grid.level - k)};
      double val = std::pow(naive_measure(q, grid, mu), eta);
      for (size_t i = 0; i < f.size(); ++i)
        val *= naive_avg(f[i], r[i], q, grid, mu);
      best = std::max(best, val);
    }
    out[lat_to_phys(grid, p)] = best;
  }
  return out;
}

// Naive per-cube accumulation of the sparse operator.
inline GridFunction naive_sparse_operator(const SparseFamily& s,
                                          const std::vector<GridFunction>& f,
                                          double eta,
                                          const std::vector<double>& r,
                                          const GridSpec& grid,
                                          const Measure& mu) {
  GridFunction out(grid.cells());
  std::vector<DyadicCube> cubes = s.cubes;
  std::sort(cubes.begin(), cubes.end());
  for (const auto& q : cubes) {
    double val = std::pow(naive_measure(q, grid, mu), eta);
    for (size_t i = 0; i < f.size(); ++i)
      val *= naive_avg(f[i], r[i], q, grid, mu);
    int a = cube_begin_lat(grid, q);
    for (int p = a; p < a + cube_cells(grid, q); ++p)
      out[lat_to_phys(grid, p)] += val;
  }
  return out;
}

}  // namespace sparselab::reference
