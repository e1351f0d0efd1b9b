#include "sparselab/normest.hpp"

#include <iostream>
#include <random>

namespace sparselab {

namespace {

// Search problem after the weighted norms are folded into densities.
struct Problem {
  std::function<double(const std::vector<GridFunction>&)> numerator;
  std::vector<double> slot_p;
  std::vector<GridFunction> slot_w;  // omega_j^{p_j}, multiplies the density
};

double slot_norm(const GridFunction& f, double p, const GridFunction& w,
                 const GridSpec& grid, const Measure& mu) {
  Measure m2{gf_mul(mu.density, w)};
  return lp_norm(f, p, grid, m2);
}

// Ratio of a candidate tuple, or -1 when the candidate is unusable.
double ratio_of(const Problem& pr, const std::vector<GridFunction>& cand,
                const GridSpec& grid, const Measure& mu) {
  double den = 1.0;
  for (size_t j = 0; j < cand.size(); ++j) {
    den *= slot_norm(cand[j], pr.slot_p[j], pr.slot_w[j], grid, mu);
    if (!(den > 0.0) || !std::isfinite(den)) return -1.0;
  }
  double num = pr.numerator(cand);
  if (!std::isfinite(num) || num < 0.0) {
    std::cerr << "norm_search: candidate discarded (non-finite value)\n";
    return -1.0;
  }
  return num / den;
}

std::vector<GridFunction> random_tuple(int arity, const GridSpec& grid,
                                       std::mt19937_64& rng, bool spike) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<GridFunction> out;
  for (int j = 0; j < arity; ++j) {
    if (spike) {
      double a = 0.9 * uni(rng);
      double c = std::ldexp(1.0, -static_cast<int>(rng() % 4));
      out.push_back(GridFunction::sample(grid, [&](double x) {
        return x < c ? std::pow(std::max(x, 1e-12), -a) : 0.0;
      }));
    } else {
      int lev = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::min(
                                                  5, grid.level - 1)));
      std::vector<double> vals(static_cast<size_t>(1) << lev);
      for (double& v : vals) v = std::exp(2.0 * (2.0 * uni(rng) - 1.0));
      GridFunction f(grid.cells());
      for (int p = 0; p < grid.cells(); ++p)
        f[lat_to_phys(grid, p)] = vals[p >> (grid.level - lev)];
      out.push_back(std::move(f));
    }
  }
  return out;
}

double norm_search(const Problem& pr, int arity, const GridSpec& grid,
                   const Measure& mu, const SearchConfig& sc,
                   const std::vector<std::vector<GridFunction>>& mandatory,
                   const std::vector<std::vector<GridFunction>>& extra) {
  sc.validate();
  grid.validate();
  mu.validate();

  // Homogeneity spot check in slot 0 (precondition of the search).
  {
    std::vector<GridFunction> ones(static_cast<size_t>(arity),
                                   GridFunction::constant(grid, 1.0));
    double n1 = pr.numerator(ones);
    ones[0] = GridFunction::constant(grid, 2.0);
    double n2 = pr.numerator(ones);
    if (std::isfinite(n1) && std::isfinite(n2) && n1 > 0.0 &&
        std::fabs(n2 / n1 - 2.0) > 1e-6)
      throw std::invalid_argument(
          "norm_search: evaluator is not 1-homogeneous in each slot");
  }

  double best = 0.0;
  std::vector<GridFunction> best_cand;
  auto consider = [&](const std::vector<GridFunction>& cand) {
    if (static_cast<int>(cand.size()) != arity)
      throw std::invalid_argument("norm_search: candidate arity mismatch");
    double r = ratio_of(pr, cand, grid, mu);
    if (r > best) {
      best = r;
      best_cand = cand;
    }
  };

  for (const auto& cand : extra) consider(cand);
  for (const auto& cand : mandatory) consider(cand);

  // Dyadic-cube indicators, shared across slots.
  int maxlev = std::min(sc.indicator_level, grid.level);
  for (int k = 0; k <= maxlev; ++k)
    for (int j = 0; j < (1 << k); ++j) {
      GridFunction ind(grid.cells(), 0.0);
      DyadicCube q{k, j};
      int a = cube_begin_lat(grid, q);
      for (int p = a; p < a + cube_cells(grid, q); ++p)
        ind[lat_to_phys(grid, p)] = 1.0;
      consider(std::vector<GridFunction>(static_cast<size_t>(arity), ind));
    }

  // Seeded random candidates: dyadic steps and power spikes, alternating.
  std::mt19937_64 rng(sc.seed);
  for (int t = 0; t < sc.trials; ++t)
    consider(random_tuple(arity, grid, rng, (t % 2) == 1));

  if (best_cand.empty()) return best;

  // Coordinate ascent: scale one dyadic block of one slot by 1/2 or 2; stop
  // after two full sweeps without improvement.
  int bl = std::min(sc.ascent_level, grid.level);
  int nblocks = 1 << bl;
  int idle_sweeps = 0;
  while (idle_sweeps < 2) {
    bool improved = false;
    for (int j = 0; j < arity; ++j)
      for (int blk = 0; blk < nblocks; ++blk)
        for (double fac : {0.5, 2.0}) {
          std::vector<GridFunction> cand = best_cand;
          int a = blk << (grid.level - bl);
          for (int p = a; p < a + (1 << (grid.level - bl)); ++p)
            cand[j][lat_to_phys(grid, p)] *= fac;
          double r = ratio_of(pr, cand, grid, mu);
          if (r > best * (1.0 + 1e-12)) {
            best = r;
            best_cand = std::move(cand);
            improved = true;
          }
        }
    idle_sweeps = improved ? 0 : idle_sweeps + 1;
  }
  return best;
}

Problem make_problem(const Evaluator& ev, const WeightTuple& w,
                     const ExponentConfig& cfg, const GridSpec& grid,
                     const Measure& mu, bool weak) {
  if (ev.arity != cfg.m ||
      static_cast<int>(w.components.size()) != cfg.m)
    throw std::invalid_argument("norm_search: arity mismatch");
  if (!ev.vec && !ev.scalar)
    throw std::invalid_argument("norm_search: evaluator has no body");
  if (weak && !ev.vec)
    throw std::invalid_argument(
        "weak_norm_search: requires a grid-function evaluator");
  Problem pr;
  for (int j = 0; j < cfg.m; ++j) {
    pr.slot_p.push_back(cfg.p[j]);
    pr.slot_w.push_back(gf_pow(w.components[j], cfg.p[j]));
  }
  Measure out_mu{gf_mul(mu.density, gf_pow(w.product(), cfg.q))};
  double q = cfg.q;
  if (ev.vec) {
    auto vec = ev.vec;
    if (weak)
      pr.numerator = [vec, q, grid, out_mu](
                         const std::vector<GridFunction>& cand) {
        return weak_quasinorm(vec(cand), q, grid, out_mu);
      };
    else
      pr.numerator = [vec, q, grid, out_mu](
                         const std::vector<GridFunction>& cand) {
        return lp_norm(vec(cand), q, grid, out_mu);
      };
  } else {
    auto sc = ev.scalar;
    pr.numerator = [sc](const std::vector<GridFunction>& cand) {
      return std::fabs(sc(cand));
    };
  }
  return pr;
}

// d = 1/r - 1/p as an averaging exponent; infinity when r == p.
double dual_slot_exponent(double r, double p) {
  double d = (r == kInf ? 0.0 : 1.0 / r) - (p == kInf ? 0.0 : 1.0 / p);
  if (std::fabs(d) < 1e-14) return kInf;
  if (d < 0.0)
    throw std::invalid_argument("norm_search: slot ordering r_j <= p_j violated");
  return 1.0 / d;
}

// The proof's per-cube extremal tuples f_j = omega_j^{-e_j/r_j} chi_Q over a
// deterministic cube set containing the argmax cubes of the per-cube
// characteristic.
std::vector<std::vector<GridFunction>> extremal_tuples(
    const WeightTuple& w, const ExponentConfig& cfg, const SearchConfig& sc,
    const GridSpec& grid, const Measure& mu) {
  std::vector<double> e(static_cast<size_t>(cfg.m));
  for (int j = 0; j < cfg.m; ++j) {
    e[j] = dual_slot_exponent(cfg.r[j], cfg.p[j]);
    if (e[j] == kInf) return {};  // borderline slot: no finite extremal
  }
  Averager av(grid, mu);
  std::vector<GridFunction> winv;
  for (int j = 0; j < cfg.m; ++j)
    winv.push_back(gf_pow(w.components[j], -1.0));

  std::vector<DyadicCube> cubes;
  for (int k = 0; k <= std::min(sc.indicator_level, grid.level); ++k)
    for (int j = 0; j < (1 << k); ++j) cubes.push_back(DyadicCube{k, j});
  // Top cubes of the per-cube characteristic, over the full lattice.
  std::vector<std::pair<double, DyadicCube>> scored;
  for (int k = 0; k <= grid.level; ++k)
    for (int j = 0; j < (1 << k); ++j) {
      DyadicCube q{k, j};
      double v = 1.0;
      for (int i = 0; i < cfg.m; ++i) v *= av.avg(winv[i], e[i], q);
      scored.emplace_back(v, q);
    }
  std::partial_sort(scored.begin(),
                    scored.begin() + std::min<size_t>(8, scored.size()),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first > b.first;
                    });
  for (size_t i = 0; i < std::min<size_t>(8, scored.size()); ++i)
    cubes.push_back(scored[i].second);

  std::vector<std::vector<GridFunction>> out;
  for (const auto& q : cubes) {
    std::vector<GridFunction> cand;
    for (int j = 0; j < cfg.m; ++j) {
      GridFunction f(grid.cells(), 0.0);
      int a = cube_begin_lat(grid, q);
      for (int p = a; p < a + cube_cells(grid, q); ++p) {
        int c = lat_to_phys(grid, p);
        f[c] = std::pow(w.components[j][c], -e[j] / cfg.r[j]);
      }
      cand.push_back(std::move(f));
    }
    out.push_back(std::move(cand));
  }
  return out;
}

// Stopping family of the maximal operator without the domination-constant
// bookkeeping of sparse_from_maximal.
SparseFamily stopping_family(const std::vector<GridFunction>& f, double eta,
                             const std::vector<double>& r, const GridSpec& grid,
                             const Measure& mu, double a) {
  Averager av(grid, mu);
  auto lambda_of = [&](const DyadicCube& q) {
    double v = std::pow(av.measure(q), eta);
    for (size_t i = 0; i < f.size(); ++i) v *= av.avg(f[i], r[i], q);
    return v;
  };
  SparseFamily fam;
  fam.cubes.push_back(root_cube());
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
        fam.cubes.push_back(child);
        sel = lam;
      }
      stack.push_back({child, sel});
    }
  }
  fam.normalize();
  return fam;
}

}  // namespace

double strong_norm_search(const Evaluator& ev, const WeightTuple& w,
                          const ExponentConfig& cfg, const SearchConfig& sc,
                          const GridSpec& grid, const Measure& mu,
                          const std::vector<std::vector<GridFunction>>& extra) {
  Problem pr = make_problem(ev, w, cfg, grid, mu, false);
  return norm_search(pr, ev.arity, grid, mu, sc, {}, extra);
}

double weak_norm_search(const Evaluator& ev, const WeightTuple& w,
                        const ExponentConfig& cfg, const SearchConfig& sc,
                        const GridSpec& grid, const Measure& mu,
                        const std::vector<std::vector<GridFunction>>& extra) {
  Problem pr = make_problem(ev, w, cfg, grid, mu, true);
  auto mand = extremal_tuples(w, cfg, sc, grid, mu);
  return norm_search(pr, ev.arity, grid, mu, sc, mand, extra);
}

ExponentConfig extended_config(const ExponentConfig& cfg) {
  cfg.validate();
  ExponentConfig e;
  e.m = cfg.m + 1;
  e.eta = 0.0;
  e.r = cfg.r;
  e.r.push_back(cfg.s_prime);
  e.s = kInf;
  e.s_prime = 1.0;
  e.p = cfg.p;
  e.p.push_back(holder_conjugate(cfg.q));
  e.q = 1.0 / (1.0 + cfg.eta);
  e.z = 1.0;
  e.k.assign(static_cast<size_t>(e.m), 0);
  e.t.assign(static_cast<size_t>(e.m), 0);
  e.tau.clear();
  e.tau_prime.clear();
  e.validate();
  return e;
}

MaximalEquivReport maximal_equiv_report(const WeightTuple& w,
                                        const ExponentConfig& cfg,
                                        const SearchConfig& sc,
                                        const GridSpec& grid) {
  cfg.validate();
  w.validate();
  Measure mu = Measure::lebesgue(grid);
  MaximalEquivReport rep;
  rep.char_const = multiweight_constant(w, cfg, grid).value;

  ExponentConfig ext = extended_config(cfg);
  WeightTuple wext = w.extended();
  std::vector<double> rext = ext.r;
  Evaluator ev;
  ev.arity = ext.m;
  ev.vec = [rext, grid, mu](const std::vector<GridFunction>& cand) {
    return dyadic_maximal(cand, 0.0, rext, grid, mu);
  };
  rep.weak_est = weak_norm_search(ev, wext, ext, sc, grid, mu);
  rep.strong_est = strong_norm_search(ev, wext, ext, sc, grid, mu);

  // Sparse-form estimate: the plain (m+1)-linear form over the stopping
  // family of the f-slots.
  ExponentConfig base = cfg;
  base.k.assign(static_cast<size_t>(cfg.m), 0);
  base.t.assign(static_cast<size_t>(cfg.m), 0);
  base.tau.clear();
  base.tau_prime.clear();
  double thr = default_stopping_threshold(cfg.eta, cfg.r);
  Evaluator form_ev;
  form_ev.arity = ext.m;
  form_ev.scalar = [base, thr, grid, mu](const std::vector<GridFunction>& cand) {
    std::vector<GridFunction> f(cand.begin(), cand.end() - 1);
    FormInputs in{f,
                  cand.back(),
                  std::vector<GridFunction>(
                      static_cast<size_t>(base.m),
                      GridFunction(grid.cells(), 0.0)),
                  base,
                  stopping_family(f, base.eta, base.r, grid, mu, thr),
                  grid,
                  mu};
    return plain_form(in, base.s_prime);
  };
  rep.form_est = strong_norm_search(form_ev, wext, ext, sc, grid, mu);

  if (rep.char_const > rep.weak_est * (1.0 + 1e-6))
    throw std::logic_error(
        "maximal_equiv_report: characteristic exceeds the weak-type estimate");
  rep.weak_ratio = rep.weak_est / rep.char_const;
  rep.strong_band =
      rep.strong_est / std::pow(rep.form_est, 1.0 + cfg.eta);
  return rep;
}

}  // namespace sparselab
