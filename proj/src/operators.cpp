#include "sparselab/operators.hpp"

#include <unordered_map>

namespace sparselab {

GridFunction dyadic_maximal(const std::vector<GridFunction>& f, double eta,
                            const std::vector<double>& r, const GridSpec& grid,
                            const Measure& mu, ExecPolicy exec) {
  if (f.empty() || f.size() != r.size())
    throw std::invalid_argument("dyadic_maximal: arity mismatch");
  const int m = static_cast<int>(f.size());
  const int n = grid.cells();
  Averager av(grid, mu);

  // Per-level cube values mu(Q)^eta * prod_j avg(f_j, r_j, Q).
  std::vector<std::vector<double>> lv(static_cast<size_t>(grid.level) + 1);
  for (int k = 0; k <= grid.level; ++k) {
    lv[k].resize(static_cast<size_t>(1) << k);
    for (int j = 0; j < (1 << k); ++j) {
      DyadicCube q{k, j};
      double val = std::pow(av.measure(q), eta);
      for (int i = 0; i < m; ++i) val *= av.avg(f[i], r[i], q);
      lv[k][j] = val;
    }
  }

  GridFunction out(n);
#pragma omp parallel for if (exec.parallel) schedule(static)
  for (int p = 0; p < n; ++p) {
    double best = 0.0;
    for (int k = 0; k <= grid.level; ++k)
      best = std::max(best, lv[k][p >> (grid.level - k)]);
    out[lat_to_phys(grid, p)] = best;
  }
  return out;
}

double ball_measure(int c, double rad, const GridSpec& grid,
                    const Measure& mu) {
  ArcMeasure arc(grid, mu);
  return arc.ball(cell_midpoint(grid, c), rad);
}

GridFunction frac_integral(const std::vector<GridFunction>& f, double eta,
                           const KernelSpec& spec, const GridSpec& grid,
                           const Measure& mu, ExecPolicy exec) {
  const int m = static_cast<int>(f.size());
  if (m < 1 || m > 2)
    throw std::invalid_argument(
        "frac_integral: only m <= 2 supported (cost is O(N^{m+1}))");
  if (!(eta >= 0.0 && eta < m))
    throw std::invalid_argument("frac_integral: eta must lie in [0, m)");
  const int n = grid.cells();
  const bool cap = spec.diagonal == KernelSpec::DiagonalPolicy::kCapAtCellScale;
  GridFunction out(n);
  ArcMeasure arc(grid, mu);

#pragma omp parallel for if (exec.parallel) schedule(static)
  for (int x = 0; x < n; ++x) {
    // Ball measure as a function of the target cell; diagonal handled per
    // policy (skip omits the term, cap substitutes the cell mass).
    std::vector<double> bm(static_cast<size_t>(n));
    std::vector<bool> diag(static_cast<size_t>(n), false);
    double xm = cell_midpoint(grid, x);
    for (int y = 0; y < n; ++y) {
      if (y == x) {
        diag[y] = true;
        bm[y] = mu.density[x] / n;
        continue;
      }
      bm[y] = arc.ball(xm, torus_distance(xm, cell_midpoint(grid, y)));
    }
    double acc = 0.0, comp = 0.0;
    auto add = [&](double term) {
      double yv = term - comp;
      double t = acc + yv;
      comp = (t - acc) - yv;
      acc = t;
    };
    if (m == 1) {
      for (int y = 0; y < n; ++y) {
        if (diag[y] && !cap) continue;
        add(std::pow(bm[y], eta - 1.0) * f[0][y] * mu.density[y] / n);
      }
    } else {
      for (int y1 = 0; y1 < n; ++y1) {
        if (diag[y1] && !cap) continue;
        double w1 = f[0][y1] * mu.density[y1] / n;
        if (w1 == 0.0) continue;
        for (int y2 = 0; y2 < n; ++y2) {
          if (diag[y2] && !cap) continue;
          add(std::pow(bm[y1] + bm[y2], eta - 2.0) * w1 * f[1][y2] *
              mu.density[y2] / n);
        }
      }
    }
    out[x] = acc;
  }
  return out;
}

GridFunction sparse_operator(const SparseFamily& s,
                             const std::vector<GridFunction>& f, double eta,
                             const std::vector<double>& r, const GridSpec& grid,
                             const Measure& mu) {
  if (f.empty() || f.size() != r.size())
    throw std::invalid_argument("sparse_operator: arity mismatch");
  Averager av(grid, mu);
  GridFunction out_lat(grid.cells());
  std::vector<DyadicCube> cubes = s.cubes;
  std::sort(cubes.begin(), cubes.end());
  for (const auto& q : cubes) {
    double val = std::pow(av.measure(q), eta);
    for (size_t i = 0; i < f.size(); ++i) val *= av.avg(f[i], r[i], q);
    int a = cube_begin_lat(grid, q);
    int b = a + cube_cells(grid, q);
    for (int p = a; p < b; ++p) out_lat[p] += val;
  }
  GridFunction out(grid.cells());
  for (int p = 0; p < grid.cells(); ++p)
    out[lat_to_phys(grid, p)] = out_lat[p];
  return out;
}

GridFunction sparse_avg_iterate(const SparseFamily& s, const GridFunction& phi,
                                const GridFunction& v, int j,
                                const GridSpec& grid, const Measure& mu) {
  if (j < 0) throw std::invalid_argument("sparse_avg_iterate: j must be >= 0");
  Averager av(grid, mu);
  GridFunction cur = phi;
  std::vector<DyadicCube> cubes = s.cubes;
  std::sort(cubes.begin(), cubes.end());
  for (int it = 0; it < j; ++it) {
    GridFunction next_lat(grid.cells());
    for (const auto& q : cubes) {
      double a = av.avg(cur, 1.0, q);
      int lo = cube_begin_lat(grid, q);
      int hi = lo + cube_cells(grid, q);
      for (int p = lo; p < hi; ++p) next_lat[p] += a;
    }
    GridFunction next(grid.cells());
    for (int p = 0; p < grid.cells(); ++p)
      next[lat_to_phys(grid, p)] = next_lat[p] * v[lat_to_phys(grid, p)];
    cur = next;
  }
  return cur;
}

double power_sum_margin(const std::vector<std::pair<DyadicCube, double>>& lam,
                        double p, const GridSpec& grid) {
  if (!(p >= 1.0))
    throw std::invalid_argument("power_sum_margin: p must be >= 1");
  // Aggregate coefficients per cube, bucketed by level for O(L) per cell.
  std::vector<std::unordered_map<int, double>> by_level(
      static_cast<size_t>(grid.level) + 1);
  for (const auto& [q, l] : lam) {
    check_cube(grid, q);
    if (!(l >= 0.0))
      throw std::invalid_argument("power_sum_margin: coefficients must be >= 0");
    by_level[q.level][q.index] += l;
  }
  double worst = kInf;
  for (int p_cell = 0; p_cell < grid.cells(); ++p_cell) {
    // lam_k = total coefficient of the level-k ancestor of this cell.
    std::vector<double> lam_k(static_cast<size_t>(grid.level) + 1, 0.0);
    for (int k = 0; k <= grid.level; ++k) {
      auto it = by_level[k].find(p_cell >> (grid.level - k));
      if (it != by_level[k].end()) lam_k[k] = it->second;
    }
    // suffix[k] = sum over cubes containing the cell at levels >= k, i.e. the
    // inner sum over Q' subset of the level-k ancestor.
    double total = 0.0;
    std::vector<double> suffix(static_cast<size_t>(grid.level) + 2, 0.0);
    for (int k = grid.level; k >= 0; --k) suffix[k] = suffix[k + 1] + lam_k[k];
    total = suffix[0];
    double lhs = std::pow(total, p);
    double rhs = 0.0;
    for (int k = 0; k <= grid.level; ++k)
      if (lam_k[k] > 0.0) rhs += lam_k[k] * std::pow(suffix[k], p - 1.0);
    rhs *= p;
    double margin = (rhs - lhs) / std::max(lhs, 1e-300);
    worst = std::min(worst, margin);
  }
  return worst;
}

}  // namespace sparselab
