#include "sparselab/sparsify.hpp"

#include <random>
#include <unordered_map>

namespace sparselab {

namespace {

uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t x = a + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

VerifyReport verify_sparse(const SparseFamily& s, const GridSpec& grid,
                           const Measure& mu) {
  grid.validate();
  mu.validate();
  VerifyReport rep;
  rep.sorted_cubes = s.cubes;
  std::sort(rep.sorted_cubes.begin(), rep.sorted_cubes.end());
  rep.sorted_cubes.erase(
      std::unique(rep.sorted_cubes.begin(), rep.sorted_cubes.end()),
      rep.sorted_cubes.end());
  const int n = grid.cells();
  rep.owner.assign(static_cast<size_t>(n), -1);
  // Increasing level order: deeper cubes overwrite, so every cell ends up
  // owned by the smallest family cube containing it. That assignment is the
  // canonical witness E_Q = Q \ union(strict sub-cubes).
  for (size_t idx = 0; idx < rep.sorted_cubes.size(); ++idx) {
    const auto& q = rep.sorted_cubes[idx];
    check_cube(grid, q);
    int a = cube_begin_lat(grid, q);
    for (int p = a; p < a + cube_cells(grid, q); ++p)
      rep.owner[p] = static_cast<int>(idx);
  }
  rep.witness_mass.assign(rep.sorted_cubes.size(), 0.0);
  for (int p = 0; p < n; ++p)
    if (rep.owner[p] >= 0)
      rep.witness_mass[rep.owner[p]] += mu.density[lat_to_phys(grid, p)] / n;
  Averager av(grid, mu);
  rep.delta_actual = 1.0;
  for (size_t idx = 0; idx < rep.sorted_cubes.size(); ++idx)
    rep.delta_actual =
        std::min(rep.delta_actual,
                 rep.witness_mass[idx] / av.measure(rep.sorted_cubes[idx]));
  return rep;
}

StopResult sparse_from_maximal(const std::vector<GridFunction>& f, double eta,
                               const std::vector<double>& r,
                               const GridSpec& grid, const Measure& mu,
                               double a) {
  if (!(a > 1.0))
    throw std::invalid_argument("sparse_from_maximal: threshold must be > 1");
  Averager av(grid, mu);
  auto lambda_of = [&](const DyadicCube& q) {
    double v = std::pow(av.measure(q), eta);
    for (size_t i = 0; i < f.size(); ++i) v *= av.avg(f[i], r[i], q);
    return v;
  };
  StopResult res;
  res.family.cubes.push_back(root_cube());
  // Depth-first walk; each cube compares against its nearest selected
  // ancestor's value.
  struct Item {
    DyadicCube q;
    double sel;
  };
  std::vector<Item> stack{{root_cube(), lambda_of(root_cube())}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.q.level == grid.level) continue;
    for (int c = 0; c < 2; ++c) {
      DyadicCube child{it.q.level + 1, 2 * it.q.index + c};
      double lam = lambda_of(child);
      double sel = it.sel;
      if (lam > a * it.sel) {
        res.family.cubes.push_back(child);
        sel = lam;
      }
      stack.push_back({child, sel});
    }
  }
  res.family.normalize();
  GridFunction mx = dyadic_maximal(f, eta, r, grid, mu);
  GridFunction sp = sparse_operator(res.family, f, eta, r, grid, mu);
  double c = 0.0;
  for (int i = 0; i < grid.cells(); ++i) {
    if (mx[i] == 0.0) continue;
    if (sp[i] == 0.0) {
      c = kInf;
      break;
    }
    c = std::max(c, mx[i] / sp[i]);
  }
  res.c_stop = c;
  return res;
}

AugmentResult augment_for_symbol(const SparseFamily& s, const GridFunction& b,
                                 const GridSpec& grid, const Measure& mu) {
  Averager av(grid, mu);
  AugmentResult res;
  res.family = s;
  res.family.normalize();

  bool constant = true;
  for (double x : b.v)
    if (x != b[0]) constant = false;
  if (constant) {
    res.c_aug = 0.0;
    return res;
  }

  // Mean of |b - c| over a cube for a fixed center c.
  auto osc_around = [&](const DyadicCube& q, double center) {
    int a = cube_begin_lat(grid, q);
    double sum = 0.0;
    for (int p = a; p < a + cube_cells(grid, q); ++p) {
      int cell = lat_to_phys(grid, p);
      sum += std::fabs(b[cell] - center) * mu.density[cell] / grid.cells();
    }
    return sum / av.measure(q);
  };

  // Stopping inside each family cube: select maximal R with
  // <|b - b_Q|>_{1,R} > 2 <|b - b_Q|>_{1,Q}, then restart from R.
  std::vector<DyadicCube> work = res.family.cubes;
  std::vector<DyadicCube> added;
  while (!work.empty()) {
    DyadicCube q = work.back();
    work.pop_back();
    double bq = av.mean(b, q);
    double base = osc_around(q, bq);
    if (base <= 0.0) continue;
    std::vector<DyadicCube> descend;
    if (q.level < grid.level)
      descend = {DyadicCube{q.level + 1, 2 * q.index},
                 DyadicCube{q.level + 1, 2 * q.index + 1}};
    while (!descend.empty()) {
      DyadicCube r = descend.back();
      descend.pop_back();
      if (osc_around(r, bq) > 2.0 * base) {
        added.push_back(r);
        work.push_back(r);  // restart the stopping relative to b_R inside R
        continue;
      }
      if (r.level < grid.level) {
        descend.push_back(DyadicCube{r.level + 1, 2 * r.index});
        descend.push_back(DyadicCube{r.level + 1, 2 * r.index + 1});
      }
    }
  }
  for (const auto& q : added) res.family.cubes.push_back(q);
  res.family.normalize();

  // Measured domination constant: |b(x) - b_Q| against the local sums of mean
  // oscillations over family cubes between x and Q.
  const auto& cubes = res.family.cubes;
  std::vector<double> bq_of(cubes.size()), osc_of(cubes.size());
  for (size_t i = 0; i < cubes.size(); ++i) {
    bq_of[i] = av.mean(b, cubes[i]);
    osc_of[i] = osc_around(cubes[i], bq_of[i]);
  }
  double c_aug = 0.0;
  for (int p = 0; p < grid.cells(); ++p) {
    int cell = lat_to_phys(grid, p);
    // Family cubes containing this cell, by increasing level.
    std::vector<size_t> chain;
    for (size_t i = 0; i < cubes.size(); ++i) {
      const auto& q = cubes[i];
      if ((p >> (grid.level - q.level)) == q.index) chain.push_back(i);
    }
    for (size_t ci = 0; ci < chain.size(); ++ci) {
      double num = std::fabs(b[cell] - bq_of[chain[ci]]);
      double den = 0.0;
      for (size_t cj = ci; cj < chain.size(); ++cj) den += osc_of[chain[cj]];
      if (den > 0.0)
        c_aug = std::max(c_aug, num / den);
      else if (num > 0.0)
        c_aug = kInf;
    }
  }
  res.c_aug = c_aug;
  return res;
}

LatArc dilate_cube(const DyadicCube& q, double beta, const GridSpec& grid) {
  int n = grid.cells();
  int len = cube_cells(grid, q);
  long long blen = std::llround(beta * len);
  if (blen >= n) return LatArc{0, n};
  int a = cube_begin_lat(grid, q);
  long long start = a + (len - blen) / 2;
  start = ((start % n) + n) % n;
  return LatArc{static_cast<int>(start), static_cast<int>(blen)};
}

double TruncatableOperator::apply_at_masked(int cell,
                                            const std::vector<GridFunction>& f,
                                            const LatArc& arc) const {
  std::vector<GridFunction> masked(f.size(),
                                   GridFunction(grid_.cells(), 0.0));
  for (size_t i = 0; i < f.size(); ++i)
    for (int o = 0; o < arc.len; ++o) {
      int c = lat_to_phys(grid_, (arc.start + o) % grid_.cells());
      masked[i][c] = f[i][c];
    }
  return apply_at(cell, masked);
}

FracIntegralHandle::FracIntegralHandle(int m, double eta,
                                       const KernelSpec& spec,
                                       const GridSpec& grid, const Measure& mu)
    : TruncatableOperator(grid, mu),
      m_(m),
      eta_(eta),
      spec_(spec),
      arc_(grid, mu) {
  if (m_ < 1 || m_ > 2)
    throw std::invalid_argument("FracIntegralHandle: m <= 2 only");
  if (!(eta_ >= 0.0 && eta_ < m_))
    throw std::invalid_argument("FracIntegralHandle: eta in [0, m)");
  uniform_ = true;
  density0_ = mu_.density[0];
  for (double x : mu_.density.v)
    if (x != density0_) uniform_ = false;
  if (uniform_ && m_ == 1) {
    int n = grid_.cells();
    kt_.assign(static_cast<size_t>(n / 2) + 1, 0.0);
    for (int dd = 1; dd <= n / 2; ++dd) {
      double bm = std::min(2.0 * dd / n, 1.0) * density0_;
      kt_[dd] = std::pow(bm, eta_ - 1.0);
    }
  }
}

double FracIntegralHandle::ball(int x, int y) const {
  double xm = cell_midpoint(grid_, x);
  return arc_.ball(xm, torus_distance(xm, cell_midpoint(grid_, y)));
}

double FracIntegralHandle::kernel1(int x, int y) const {
  if (!kt_.empty()) {
    int dd = std::abs(x - y);
    dd = std::min(dd, grid_.cells() - dd);
    return kt_[dd];
  }
  return std::pow(ball(x, y), eta_ - 1.0);
}

GridFunction FracIntegralHandle::apply(
    const std::vector<GridFunction>& f) const {
  return frac_integral(f, eta_, spec_, grid_, mu_);
}

double FracIntegralHandle::apply_at(int cell,
                                    const std::vector<GridFunction>& f) const {
  return apply_at_masked(cell, f, LatArc{0, grid_.cells()});
}

double FracIntegralHandle::apply_at_masked(int cell,
                                           const std::vector<GridFunction>& f,
                                           const LatArc& arc) const {
  if (static_cast<int>(f.size()) != m_)
    throw std::invalid_argument("FracIntegralHandle: arity mismatch");
  const int n = grid_.cells();
  const bool cap =
      spec_.diagonal == KernelSpec::DiagonalPolicy::kCapAtCellScale;
  double cellmass = mu_.density[cell] / n;
  if (m_ == 1) {
    double acc = 0.0;
    for (int o = 0; o < arc.len; ++o) {
      int y = lat_to_phys(grid_, (arc.start + o) % n);
      if (f[0][y] == 0.0) continue;
      double k;
      if (y == cell) {
        if (!cap) continue;
        k = std::pow(cellmass, eta_ - 1.0);
      } else {
        k = kernel1(cell, y);
      }
      acc += k * f[0][y] * mu_.density[y] / n;
    }
    return acc;
  }
  // m == 2: ball measures along the arc, then the double loop.
  std::vector<double> bm(static_cast<size_t>(arc.len));
  std::vector<int> ys(static_cast<size_t>(arc.len));
  for (int o = 0; o < arc.len; ++o) {
    int y = lat_to_phys(grid_, (arc.start + o) % n);
    ys[o] = y;
    bm[o] = (y == cell) ? cellmass : ball(cell, y);
  }
  double acc = 0.0;
  for (int o1 = 0; o1 < arc.len; ++o1) {
    if (ys[o1] == cell && !cap) continue;
    double w1 = f[0][ys[o1]] * mu_.density[ys[o1]] / n;
    if (w1 == 0.0) continue;
    for (int o2 = 0; o2 < arc.len; ++o2) {
      if (ys[o2] == cell && !cap) continue;
      acc += std::pow(bm[o1] + bm[o2], eta_ - 2.0) * w1 * f[1][ys[o2]] *
             mu_.density[ys[o2]] / n;
    }
  }
  return acc;
}

namespace {

// Mass-weighted cell sampling and exact pair enumeration within one cube.
class CubeCells {
 public:
  CubeCells(const DyadicCube& q, const GridSpec& grid, const Measure& mu)
      : grid_(grid), a_(cube_begin_lat(grid, q)), len_(cube_cells(grid, q)) {
    pre_.assign(static_cast<size_t>(len_) + 1, 0.0);
    for (int o = 0; o < len_; ++o)
      pre_[o + 1] =
          pre_[o] + mu.density[lat_to_phys(grid, a_ + o)] / grid.cells();
  }

  int count() const { return len_; }
  double mass(int o) const { return pre_[o + 1] - pre_[o]; }
  double total() const { return pre_[len_]; }
  int phys(int o) const { return lat_to_phys(grid_, a_ + o); }

  int draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, total());
    double t = u(rng);
    auto it = std::upper_bound(pre_.begin(), pre_.end(), t);
    int o = static_cast<int>(it - pre_.begin()) - 1;
    return std::clamp(o, 0, len_ - 1);
  }

 private:
  const GridSpec& grid_;
  int a_, len_;
  std::vector<double> pre_;
};

// s-oscillation of F over Q: (mu(Q)^{-2} double-int |F(x')-F(x'')|^s)^{1/s},
// exact when pairs == 0, otherwise estimated from sampled pairs with values
// memoized per cell.
double oscillation(const std::function<double(int)>& value,
                   const DyadicCube& q, const GridSpec& grid, const Measure& mu,
                   double s, int pairs, uint64_t seed) {
  CubeCells cc(q, grid, mu);
  std::vector<double> cache(static_cast<size_t>(cc.count()));
  std::vector<char> have(static_cast<size_t>(cc.count()), 0);
  auto val = [&](int o) {
    if (!have[o]) {
      cache[o] = value(cc.phys(o));
      have[o] = 1;
    }
    return cache[o];
  };
  if (pairs <= 0 || static_cast<long long>(cc.count()) * cc.count() <=
                        2LL * pairs) {
    double acc = 0.0;
    for (int o1 = 0; o1 < cc.count(); ++o1)
      for (int o2 = 0; o2 < cc.count(); ++o2)
        acc += std::pow(std::fabs(val(o1) - val(o2)), s) * cc.mass(o1) *
               cc.mass(o2);
    return std::pow(acc / (cc.total() * cc.total()), 1.0 / s);
  }
  std::mt19937_64 rng(seed);
  double acc = 0.0;
  for (int i = 0; i < pairs; ++i) {
    int o1 = cc.draw(rng);
    int o2 = cc.draw(rng);
    acc += std::pow(std::fabs(val(o1) - val(o2)), s);
  }
  return std::pow(acc / pairs, 1.0 / s);
}

uint64_t cube_id(const DyadicCube& q) {
  return (static_cast<uint64_t>(q.level) << 32) |
         static_cast<uint64_t>(q.index);
}

// F_Q = T(phi * chi_{X \ beta Q}) evaluated pointwise. When T is linear the
// difference trick F_Q = T(phi) - T(phi chi_{beta Q}) makes one evaluation
// cost O(|beta Q|) given the precomputed full image; otherwise the exclusion
// is materialized as masked input copies once per cube.
struct TruncatedEvaluator {
  const TruncatableOperator& t;
  const std::vector<GridFunction>& phi;
  const GridFunction* tfull = nullptr;  // T(phi) pointwise (linear fast path)

  std::function<double(int)> make(const LatArc& excl) const {
    if (tfull && t.arity() == 1 && t.linear()) {
      return [this, excl](int cell) {
        return (*tfull)[cell] - t.apply_at_masked(cell, phi, excl);
      };
    }
    // Slow path: explicit masked copies with the exclusion arc zeroed.
    auto masked = std::make_shared<std::vector<GridFunction>>(phi);
    const GridSpec& g = t.grid();
    for (auto& f : *masked)
      for (int o = 0; o < excl.len; ++o)
        f[lat_to_phys(g, (excl.start + o) % g.cells())] = 0.0;
    return [this, masked](int cell) { return t.apply_at(cell, *masked); };
  }
};

}  // namespace

GridFunction grand_maximal_sharp(const TruncatableOperator& t,
                                 const std::vector<GridFunction>& f,
                                 const DominationConfig& dom) {
  const GridSpec& grid = t.grid();
  const Measure& mu = t.mu();
  const int n = grid.cells();
  if (static_cast<int>(f.size()) != t.arity())
    throw std::invalid_argument("grand_maximal_sharp: arity mismatch");

  GridFunction tf = t.apply(f);
  TruncatedEvaluator ev{t, f, &tf};
  std::vector<std::vector<double>> osc(static_cast<size_t>(grid.level) + 1);
  for (int k = 0; k <= grid.level; ++k) {
    osc[k].resize(static_cast<size_t>(1) << k);
    for (int j = 0; j < (1 << k); ++j) {
      DyadicCube q{k, j};
      LatArc arc = dilate_cube(q, dom.beta, grid);
      if (arc.len >= n) {
        osc[k][j] = 0.0;  // truncation removes the whole space
        continue;
      }
      osc[k][j] = oscillation(ev.make(arc), q, grid, mu, dom.s, dom.osc_pairs,
                              mix(dom.seed, cube_id(q)));
    }
  }
  GridFunction out(n);
  for (int p = 0; p < n; ++p) {
    double best = 0.0;
    for (int k = 0; k <= grid.level; ++k)
      best = std::max(best, osc[k][p >> (grid.level - k)]);
    out[lat_to_phys(grid, p)] = best;
  }
  return out;
}

namespace {

// Smallest threshold v such that the mass of {value > v} stays within budget.
double quantile_threshold(const std::vector<double>& values,
                          const std::vector<double>& masses, double budget) {
  std::vector<int> idx(values.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return values[a] > values[b]; });
  double thr = values.empty() ? 0.0 : values[idx[0]];
  double cum = 0.0;  // mass strictly above the current candidate
  size_t i = 0;
  while (i < idx.size()) {
    double v = values[idx[i]];
    if (cum > budget) break;
    thr = v;  // exceedance of threshold v is exactly cum <= budget
    while (i < idx.size() && values[idx[i]] == v) cum += masses[idx[i++]];
  }
  return thr;
}

struct NodeContext {
  const TruncatableOperator* t;
  const std::vector<GridFunction>* f;
  const std::vector<GridFunction>* b;
  const ExponentConfig* cfg;
  const DominationConfig* dom;
  Averager* av;
  std::vector<std::vector<int>> tvecs;  // multi-indices t <= k over tau
  double lam0 = 0.0;
  int max_depth = 0;
  std::vector<DyadicCube> family;
  bool budget_ok = true;
  int nodes = 0;
};

// Mean of b over a lattice arc (mu-weighted).
double arc_mean(const GridFunction& b, const LatArc& arc, const GridSpec& grid,
                const Measure& mu) {
  double num = 0.0, den = 0.0;
  for (int o = 0; o < arc.len; ++o) {
    int c = lat_to_phys(grid, (arc.start + o) % grid.cells());
    num += b[c] * mu.density[c];
    den += mu.density[c];
  }
  return den > 0.0 ? num / den : 0.0;
}

// Restricted grand maximal truncation: values over the cells of P. Because
// phi is supported in beta P and Q >= P implies beta Q >= beta P, cubes
// containing P (P itself included) are annihilated by the truncation, so only
// the strict descendants of P contribute.
std::vector<double> msharp_on(const DyadicCube& p,
                              const std::vector<GridFunction>& phi,
                              const std::vector<double>& tphi,
                              NodeContext& ctx) {
  const GridSpec& grid = ctx.t->grid();
  const Measure& mu = ctx.t->mu();
  const int n = grid.cells();
  const int plen = cube_cells(grid, p);
  const int pa = cube_begin_lat(grid, p);
  GridFunction tfull(n, 0.0);
  const bool fast = ctx.t->arity() == 1 && ctx.t->linear();
  if (fast)
    for (int o = 0; o < plen; ++o) tfull[lat_to_phys(grid, pa + o)] = tphi[o];
  TruncatedEvaluator ev{*ctx.t, phi, fast ? &tfull : nullptr};

  // Oscillations for cubes strictly inside P, per level.
  std::vector<std::vector<double>> inner(
      static_cast<size_t>(grid.level - p.level) + 1);
  for (int k = p.level + 1; k <= grid.level; ++k) {
    int cnt = 1 << (k - p.level);
    int base = p.index << (k - p.level);
    inner[k - p.level].resize(static_cast<size_t>(cnt));
    for (int jj = 0; jj < cnt; ++jj) {
      DyadicCube q{k, base + jj};
      LatArc arc = dilate_cube(q, ctx.dom->beta, grid);
      if (arc.len >= n) continue;
      inner[k - p.level][jj] =
          oscillation(ev.make(arc), q, grid, mu, ctx.dom->s, ctx.dom->osc_pairs,
                      mix(ctx.dom->seed, cube_id(q)));
    }
  }

  std::vector<double> out(static_cast<size_t>(plen), 0.0);
  for (int o = 0; o < plen; ++o) {
    double best = 0.0;
    int cell_lat = pa + o;
    for (int k = p.level + 1; k <= grid.level; ++k) {
      int jj = (cell_lat >> (grid.level - k)) - (p.index << (k - p.level));
      best = std::max(best, inner[k - p.level][jj]);
    }
    out[o] = best;
  }
  return out;
}

// One-slot maximal operator values restricted to the cells of P (sup over all
// dyadic cubes containing the cell), from a local power prefix table.
std::vector<double> maximal_on(const DyadicCube& p, const GridFunction& f,
                               double r, NodeContext& ctx) {
  const GridSpec& grid = ctx.t->grid();
  const Measure& mu = ctx.t->mu();
  const int n = grid.cells();
  const int plen = cube_cells(grid, p);
  const int pa = cube_begin_lat(grid, p);
  std::vector<double> pre(static_cast<size_t>(n) + 1, 0.0);
  for (int o = 0; o < n; ++o) {
    int c = lat_to_phys(grid, o);
    pre[o + 1] = pre[o] + std::pow(std::fabs(f[c]), r) * mu.density[c] / n;
  }
  std::vector<double> out(static_cast<size_t>(plen), 0.0);
  for (int o = 0; o < plen; ++o) {
    int cell_lat = pa + o;
    double best = 0.0;
    for (int k = 0; k <= grid.level; ++k) {
      DyadicCube q{k, cell_lat >> (grid.level - k)};
      int a = cube_begin_lat(grid, q);
      int b = a + cube_cells(grid, q);
      best = std::max(best, (pre[b] - pre[a]) / ctx.av->measure(q));
    }
    out[o] = std::pow(best, 1.0 / r);
  }
  return out;
}

void dominate_node(const DyadicCube& p, int depth, NodeContext& ctx) {
  const GridSpec& grid = ctx.t->grid();
  const Measure& mu = ctx.t->mu();
  const int n = grid.cells();
  ctx.family.push_back(p);
  ctx.nodes++;
  if (depth >= ctx.max_depth || p.level >= grid.level) return;

  const int plen = cube_cells(grid, p);
  const int pa = cube_begin_lat(grid, p);
  LatArc arcP = dilate_cube(p, ctx.dom->beta, grid);

  std::vector<double> masses(static_cast<size_t>(plen));
  for (int o = 0; o < plen; ++o)
    masses[o] = mu.density[lat_to_phys(grid, pa + o)] / n;
  double mup = 0.0;
  for (double m : masses) mup += m;
  double budget = ctx.lam0 * mup;

  std::vector<char> omega(static_cast<size_t>(plen), 0);
  auto mark = [&](const std::vector<double>& vals) {
    double thr = quantile_threshold(vals, masses, budget);
    for (int o = 0; o < plen; ++o)
      if (vals[o] > thr) omega[o] = 1;
  };

  const auto& cfg = *ctx.cfg;
  for (const auto& tvec : ctx.tvecs) {
    // Twisted truncated inputs: (b_i - b_{i,betaP})^{t_i} f_i chi_{betaP}.
    std::vector<GridFunction> phi(*ctx.f);
    for (auto& fn : phi) {
      GridFunction cut(n, 0.0);
      for (int o = 0; o < arcP.len; ++o) {
        int c = lat_to_phys(grid, (arcP.start + o) % n);
        cut[c] = fn[c];
      }
      fn = cut;
    }
    for (size_t ti = 0; ti < cfg.tau.size(); ++ti) {
      int i = cfg.tau[ti];
      int tpow = tvec[ti];
      if (tpow == 0) continue;
      double bmean = arc_mean((*ctx.b)[i], arcP, grid, mu);
      for (int c = 0; c < n; ++c)
        phi[i][c] *= ipow((*ctx.b)[i][c] - bmean, tpow);
    }

    // (a) |T| of the twisted truncated inputs on P (values reused by (b)).
    std::vector<double> tphi(static_cast<size_t>(plen));
    for (int o = 0; o < plen; ++o)
      tphi[o] = ctx.t->apply_at_masked(lat_to_phys(grid, pa + o), phi, arcP);
    std::vector<double> tv(static_cast<size_t>(plen));
    for (int o = 0; o < plen; ++o) tv[o] = std::fabs(tphi[o]);
    mark(tv);

    // (b) sharp grand maximal truncation on P.
    mark(msharp_on(p, phi, tphi, ctx));

    // (c) auxiliary maximal operators per slot in tau.
    for (size_t ti = 0; ti < cfg.tau.size(); ++ti) {
      int i = cfg.tau[ti];
      mark(maximal_on(p, gf_abs(phi[i]), cfg.r[i], ctx));
      // Untwisted truncated slot.
      GridFunction cut(n, 0.0);
      for (int o = 0; o < arcP.len; ++o) {
        int c = lat_to_phys(grid, (arcP.start + o) % n);
        cut[c] = (*ctx.f)[i][c];
      }
      mark(maximal_on(p, gf_abs(cut), cfg.r[i], ctx));
    }
  }

  // Calderon-Zygmund selection of maximal sub-cubes where Omega(P) fills more
  // than 1/c2 of the cube.
  std::vector<double> opre(static_cast<size_t>(plen) + 1, 0.0);
  for (int o = 0; o < plen; ++o)
    opre[o + 1] = opre[o] + (omega[o] ? masses[o] : 0.0);
  std::vector<double> mpre(static_cast<size_t>(plen) + 1, 0.0);
  for (int o = 0; o < plen; ++o) mpre[o + 1] = mpre[o] + masses[o];

  std::vector<DyadicCube> selected;
  std::vector<DyadicCube> stack{p};
  while (!stack.empty()) {
    DyadicCube q = stack.back();
    stack.pop_back();
    int qa = cube_begin_lat(grid, q) - pa;
    int qlen = cube_cells(grid, q);
    double om = opre[qa + qlen] - opre[qa];
    double mq = mpre[qa + qlen] - mpre[qa];
    if (!(q == p) && om * ctx.dom->c2 > mq) {
      selected.push_back(q);
      continue;
    }
    if (q.level < grid.level) {
      stack.push_back(DyadicCube{q.level + 1, 2 * q.index});
      stack.push_back(DyadicCube{q.level + 1, 2 * q.index + 1});
    }
  }
  double child_mass = 0.0;
  for (const auto& q : selected) {
    int qa = cube_begin_lat(grid, q) - pa;
    child_mass += mpre[qa + cube_cells(grid, q)] - mpre[qa];
  }
  if (child_mass > 0.5 * mup * (1.0 + 1e-12)) ctx.budget_ok = false;
  std::sort(selected.begin(), selected.end());
  for (const auto& q : selected) dominate_node(q, depth + 1, ctx);
}

}  // namespace

DominateResult dominate(const TruncatableOperator& t,
                        const std::vector<GridFunction>& f,
                        const GridFunction& g,
                        const std::vector<GridFunction>& b,
                        const ExponentConfig& cfg,
                        const DominationConfig& dom) {
  cfg.validate();
  dom.validate(cfg);
  const GridSpec& grid = t.grid();
  const Measure& mu = t.mu();
  const int n = grid.cells();
  if (static_cast<int>(f.size()) != t.arity() || t.arity() != cfg.m)
    throw std::invalid_argument("dominate: arity mismatch");
  for (double x : g.v)
    if (x < 0.0) throw std::invalid_argument("dominate: g must be >= 0");

  DominateResult res;
  bool all_zero = true;
  for (const auto& fi : f)
    for (double x : fi.v)
      if (x != 0.0) all_zero = false;
  if (all_zero) {
    res.family.cubes.push_back(root_cube());
    return res;
  }

  bool twisted = false;
  for (int i : cfg.tau)
    if (cfg.k[i] > 0) twisted = true;
  if (twisted && !t.multilinear())
    throw std::invalid_argument(
        "dominate: commutator expansion needs a multilinear handle");

  Averager av(grid, mu);
  NodeContext ctx;
  ctx.t = &t;
  ctx.f = &f;
  ctx.b = &b;
  ctx.cfg = &cfg;
  ctx.dom = &dom;
  ctx.av = &av;
  ctx.lam0 = dom.lambda0(cfg);
  ctx.max_depth = dom.max_depth < 0 ? grid.level : dom.max_depth;

  // Multi-indices t <= k over tau.
  std::vector<int> cur(cfg.tau.size(), 0);
  while (true) {
    ctx.tvecs.push_back(cur);
    size_t pos = 0;
    while (pos < cur.size()) {
      if (cur[pos] < cfg.k[cfg.tau[pos]]) {
        cur[pos]++;
        std::fill(cur.begin(), cur.begin() + pos, 0);
        break;
      }
      pos++;
    }
    if (pos == cur.size()) break;
    if (cfg.tau.empty()) break;
  }
  if (cfg.tau.empty()) ctx.tvecs = {std::vector<int>{}};

  dominate_node(root_cube(), 0, ctx);

  res.budget_ok = ctx.budget_ok;
  res.nodes = ctx.nodes;
  res.family.cubes = ctx.family;
  res.family.normalize();

  // lhs = <|T^{b,k}_tau(f)|, g> via multilinear expansion of the commutator.
  GridFunction acc(n, 0.0);
  if (!twisted) {
    acc = t.apply(f);
  } else {
    std::vector<int> kk;
    for (int i : cfg.tau) kk.push_back(cfg.k[i]);
    std::vector<int> tp(cfg.tau.size(), 0);
    while (true) {
      std::vector<GridFunction> inputs = f;
      double csign = 1.0;
      for (size_t ti = 0; ti < cfg.tau.size(); ++ti) {
        int i = cfg.tau[ti];
        csign *= binom(kk[ti], tp[ti]) * ((tp[ti] % 2) ? -1.0 : 1.0);
        if (tp[ti] > 0)
          for (int c = 0; c < n; ++c)
            inputs[i][c] *= ipow(b[i][c], tp[ti]);
      }
      GridFunction out = t.apply(inputs);
      for (int c = 0; c < n; ++c) {
        double coef = csign;
        for (size_t ti = 0; ti < cfg.tau.size(); ++ti)
          coef *= ipow(b[cfg.tau[ti]][c], kk[ti] - tp[ti]);
        acc[c] += coef * out[c];
      }
      size_t pos = 0;
      while (pos < tp.size()) {
        if (tp[pos] < kk[pos]) {
          tp[pos]++;
          std::fill(tp.begin(), tp.begin() + pos, 0);
          break;
        }
        pos++;
      }
      if (pos == tp.size()) break;
    }
  }
  double lhs = 0.0;
  for (int c = 0; c < n; ++c)
    lhs += std::fabs(acc[c]) * g[c] * mu.density[c] / n;
  res.lhs = lhs;

  // rhs = sum over t <= k of the higher-order form over the family.
  double rhs = 0.0;
  for (const auto& tvec : ctx.tvecs) {
    ExponentConfig c2 = cfg;
    for (size_t ti = 0; ti < cfg.tau.size(); ++ti)
      c2.t[cfg.tau[ti]] = tvec[ti];
    FormInputs fi{f, g, b, c2, res.family, grid, mu};
    rhs += form_A(fi);
  }
  res.rhs = rhs;
  if (rhs == 0.0 && lhs > 0.0)
    throw std::runtime_error("dominate: construction failure (rhs = 0)");
  res.c_emp = rhs > 0.0 ? lhs / rhs : 0.0;
  return res;
}

WeakTypeModulus weak_modulus(const TruncatableOperator& g,
                             const ExponentConfig& cfg, const DyadicCube& q,
                             const std::vector<GridFunction>& f,
                             const std::vector<double>& lambdas) {
  const GridSpec& grid = g.grid();
  const Measure& mu = g.mu();
  const int n = grid.cells();
  check_cube(grid, q);
  for (double l : lambdas)
    if (!(l > 0.0 && l < 1.0))
      throw std::invalid_argument("weak_modulus: lambda values in (0,1)");
  Averager av(grid, mu);
  double denom = std::pow(av.measure(q), cfg.eta);
  for (size_t i = 0; i < f.size(); ++i) denom *= av.avg(f[i], cfg.r[i], q);
  // Apply G to f chi_Q.
  std::vector<GridFunction> cut(f.size(), GridFunction(n, 0.0));
  int a = cube_begin_lat(grid, q);
  for (size_t i = 0; i < f.size(); ++i)
    for (int o = 0; o < cube_cells(grid, q); ++o) {
      int c = lat_to_phys(grid, a + o);
      cut[i][c] = f[i][c];
    }
  GridFunction out = g.apply(cut);
  std::vector<double> vals, masses;
  for (int o = 0; o < cube_cells(grid, q); ++o) {
    int c = lat_to_phys(grid, a + o);
    vals.push_back(std::fabs(out[c]) / std::max(denom, 1e-300));
    masses.push_back(mu.density[c] / n);
  }
  double muq = av.measure(q);
  WeakTypeModulus wm;
  double prev = kInf;
  std::vector<double> ls = lambdas;
  std::sort(ls.begin(), ls.end());
  for (double l : ls) {
    double phi = quantile_threshold(vals, masses, l * muq);
    if (phi > prev + 1e-12)
      throw std::logic_error("weak_modulus: Phi must be non-increasing");
    prev = std::min(prev, phi);
    wm.samples[l] = phi;
  }
  return wm;
}

}  // namespace sparselab
