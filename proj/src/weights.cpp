#include "sparselab/weights.hpp"

namespace sparselab {

namespace {

// Visit all 2^{L+1}-1 dyadic cubes.
template <typename F>
void for_all_cubes(const GridSpec& grid, F&& fn) {
  for (int k = 0; k <= grid.level; ++k)
    for (int j = 0; j < (1 << k); ++j) fn(DyadicCube{k, j});
}

double conj(double x) { return holder_conjugate(x); }

}  // namespace

ApValue ap_constant(const GridFunction& w, double p, const GridSpec& grid) {
  if (p == 0.0 || p == 1.0)
    throw std::invalid_argument("ap_constant: p must avoid {0, 1}");
  if (p == kInf)
    throw std::invalid_argument("ap_constant: p must be finite");
  Measure leb = Measure::lebesgue(grid);
  Averager av(grid, leb);
  GridFunction wdual = gf_pow(w, 1.0 / (1.0 - p));
  double best = 0.0;
  for_all_cubes(grid, [&](const DyadicCube& q) {
    double v = av.mean(w, q) * std::pow(av.mean(wdual, q), p - 1.0);
    best = std::max(best, v);
  });
  ApValue out;
  out.value = best;
  out.formal = !(p > 1.0);
  return out;
}

namespace {

// Average exponent for one weight slot; d = 1/r - 1/p, with d == 0 read as
// the inf-average.
double slot_exponent(double r, double p) {
  double d = (r == kInf ? 0.0 : 1.0 / r) - (p == kInf ? 0.0 : 1.0 / p);
  if (std::fabs(d) < 1e-14) return kInf;
  if (d < 0.0)
    throw std::invalid_argument(
        "multiweight_constant: ordering (r,s) <= (p,q) violated");
  return 1.0 / d;
}

}  // namespace

MultiweightReport multiweight_constant(const WeightTuple& w,
                                       const ExponentConfig& cfg,
                                       const GridSpec& grid) {
  w.validate();
  if (static_cast<int>(w.components.size()) != cfg.m)
    throw std::invalid_argument("multiweight_constant: arity mismatch");
  Measure leb = Measure::lebesgue(grid);
  Averager av(grid, leb);

  // Definition evaluation.
  std::vector<GridFunction> inv;
  std::vector<double> ex;
  for (int j = 0; j < cfg.m; ++j) {
    inv.push_back(gf_pow(w.components[j], -1.0));
    ex.push_back(slot_exponent(cfg.r[j], cfg.p[j]));
  }
  GridFunction prod = w.product();
  double e_last = slot_exponent(cfg.q, cfg.s);  // 1/(1/q - 1/s), q <= s
  double def_val = 0.0;
  for_all_cubes(grid, [&](const DyadicCube& q) {
    double v = av.avg(prod, e_last, q);
    for (int j = 0; j < cfg.m; ++j) v *= av.avg(inv[j], ex[j], q);
    def_val = std::max(def_val, v);
  });

  // Remark rewriting: (m+1)-tuple with omega_{m+1} = omega^{-1},
  // r_{m+1} = s', p_{m+1} = q'.
  WeightTuple wext = w.extended();
  std::vector<double> ex2 = ex;
  ex2.push_back(slot_exponent(conj(cfg.s), conj(cfg.q)));
  double rem_val = 0.0;
  std::vector<GridFunction> inv2;
  for (const auto& c : wext.components) inv2.push_back(gf_pow(c, -1.0));
  for_all_cubes(grid, [&](const DyadicCube& q) {
    double v = 1.0;
    for (size_t j = 0; j < inv2.size(); ++j) v *= av.avg(inv2[j], ex2[j], q);
    rem_val = std::max(rem_val, v);
  });

  if (std::fabs(def_val - rem_val) > 1e-10 * std::max(def_val, 1.0))
    throw std::logic_error(
        "multiweight_constant: definition and (m+1)-product rewriting differ");
  return MultiweightReport{def_val, rem_val};
}

double theta_exponent(const ExponentConfig& cfg) {
  double qp = conj(cfg.q);
  if (!(cfg.s_prime < qp))
    throw std::invalid_argument("theta_exponent: requires s' < q'");
  double theta = qp / (qp - cfg.s_prime);
  for (int i = 0; i < cfg.m; ++i) {
    if (!(cfg.r[i] < cfg.p[i]))
      throw std::invalid_argument("theta_exponent: requires r_i < p_i");
    theta = std::max(theta, cfg.p[i] / (cfg.p[i] - cfg.r[i]));
  }
  return theta;
}

double bmo_norm(const GridFunction& b, double p,
                const std::optional<GridFunction>& nu, const GridSpec& grid,
                const Measure& mu) {
  if (!(p >= 1.0)) throw std::invalid_argument("bmo_norm: p must be >= 1");
  if (nu && p != 1.0)
    throw std::invalid_argument("bmo_norm: weighted variant requires p = 1");
  Averager av(grid, mu);
  const int n = grid.cells();
  double best = 0.0;
  for_all_cubes(grid, [&](const DyadicCube& q) {
    double bq = av.mean(b, q);
    int a = cube_begin_lat(grid, q);
    int hi = a + cube_cells(grid, q);
    double s = 0.0;
    for (int pos = a; pos < hi; ++pos) {
      int c = lat_to_phys(grid, pos);
      s += std::pow(std::fabs(b[c] - bq), p) * mu.density[c] / n;
    }
    double val;
    if (nu) {
      double nuq = 0.0;
      for (int pos = a; pos < hi; ++pos) {
        int c = lat_to_phys(grid, pos);
        nuq += (*nu)[c] * mu.density[c] / n;
      }
      val = (nuq > 0.0) ? s / nuq : 0.0;
    } else {
      val = std::pow(s / av.measure(q), 1.0 / p);
    }
    best = std::max(best, val);
  });
  return best;
}

namespace {

// The composite constant of the Bloom analysis: a product of (possibly
// formal) A_{x2} characteristics of power-combined weights.
double composite_constant(const GridFunction& w1, const GridFunction& w2,
                          const GridFunction& w3, double x1, double x2,
                          double x3, double x4, double x5, double gamma,
                          const GridSpec& grid, bool* formal) {
  auto ap = [&](const GridFunction& w) {
    ApValue v = ap_constant(w, x2, grid);
    if (v.formal) *formal = true;
    return v.value;
  };
  double outer = std::max(1.0, 1.0 / (x2 - 1.0));
  double first = std::pow(ap(gf_pow(w1, x3)), (x1 - 2.0) / 2.0) *
                 std::pow(ap(gf_pow(w2, x4 + x5)), x1 / 2.0);
  double mid = std::pow(ap(w2), outer);
  double last = std::pow(ap(gf_mul(gf_pow(w2, x3), gf_pow(w3, -std::fabs(x2)))),
                         (2.0 - gamma) * outer);
  return std::pow(first, outer) * mid * last;
}

}  // namespace

BloomReport bloom_derive(const ExponentConfig& cfg, const WeightTuple& u,
                         const WeightTuple& omega, BloomVariant variant,
                         const GridSpec& grid) {
  u.validate();
  omega.validate();
  if (static_cast<int>(u.components.size()) != cfg.m ||
      static_cast<int>(omega.components.size()) != cfg.m)
    throw std::invalid_argument("bloom_derive: arity mismatch");
  if (cfg.tau.empty())
    throw std::invalid_argument("bloom_derive: tau must be nonempty");

  BloomReport rep;
  int kk = cfg.tau_prime.empty() ? cfg.tau.back() : cfg.tau_prime.back();
  double kr = cfg.k[kk] * cfg.r[kk];
  if (kr == 0.0)
    throw std::invalid_argument("bloom_derive: k_k r_k must be positive");
  rep.a = static_cast<int>(std::floor(kr));
  rep.gamma_k = kr - (rep.a - 1);
  // a + gamma_k - 1 = k_k r_k.
  rep.nu = gf_pow(gf_mul(u.components[kk], gf_pow(omega.components[kk], -1.0)),
                  -cfg.r[kk] / kr);

  GridFunction v1 = u.product();
  GridFunction w = omega.product();

  std::vector<int> ell;  // tau \ tau'
  for (int i : cfg.tau)
    if (std::find(cfg.tau_prime.begin(), cfg.tau_prime.end(), i) ==
        cfg.tau_prime.end())
      ell.push_back(i);

  double sp = cfg.s_prime;
  double qp = conj(cfg.q);
  double exp_dual;  // s' multiple used on the dual side (s' or 2s')
  double gamma_dual;
  if (variant == BloomVariant::kMaximal) {
    double sumk = 0.0;
    for (int l : ell) sumk += cfg.k[l];
    double lsum = sp * sumk;
    if (lsum == 0.0)
      throw std::invalid_argument("bloom_derive: s' sum k_l must be positive");
    rep.big_l = static_cast<int>(std::floor(lsum));
    rep.gamma1 = lsum - (rep.big_l - 1);
    // gamma1 + L - 1 = s' sum k_l.
    rep.nu0 = gf_pow(gf_mul(v1, gf_pow(w, -(2.0 * rep.gamma1 - 3.0))),
                     sp / lsum);
    exp_dual = sp;
    gamma_dual = rep.gamma1;
  } else {
    if (ell.empty())
      throw std::invalid_argument("bloom_derive: tau \\ tau' must be nonempty");
    int i0 = ell.front();
    double lsum = 2.0 * cfg.k[i0] * sp;
    if (lsum == 0.0)
      throw std::invalid_argument("bloom_derive: 2 k_i0 s' must be positive");
    rep.big_l = static_cast<int>(std::floor(lsum));
    rep.gamma1 = lsum - (rep.big_l - 1);
    rep.nu0 = gf_pow(gf_mul(v1, gf_pow(w, -(2.0 * rep.gamma1 - 3.0))),
                     2.0 * sp / lsum);
    exp_dual = 2.0 * sp;
    gamma_dual = rep.gamma1;
  }

  // Per-index composite constants for i in tau'.
  for (int i : cfg.tau_prime) {
    double kri = cfg.k[i] * cfg.r[i];
    if (kri == 0.0)
      throw std::invalid_argument("bloom_derive: k_i r_i must be positive");
    int ai = static_cast<int>(std::floor(kri));
    double gi = kri - (ai - 1);
    GridFunction nui =
        gf_pow(gf_mul(u.components[i], gf_pow(omega.components[i], -1.0)),
               -cfg.r[i] / kri);
    double ci = composite_constant(
        u.components[i], omega.components[i], nui, ai, cfg.p[i] / cfg.r[i],
        cfg.p[i], cfg.p[i], -gi * cfg.p[i] / cfg.r[i], gi, grid, &rep.formal);
    rep.c_values.push_back(std::pow(ci, 1.0 / cfg.r[i]));
  }

  double cd = composite_constant(v1, w, rep.nu0, rep.big_l, -qp / exp_dual,
                                 -qp, qp * (3.0 - 2.0 * gamma_dual),
                                 -gamma_dual * qp / exp_dual, gamma_dual, grid,
                                 &rep.formal);
  rep.c_dual = std::pow(cd, 1.0 / sp);
  return rep;
}

double john_nirenberg_ratio(const GridFunction& b, const GridFunction& w,
                            double s, const GridSpec& grid, const Measure& mu) {
  if (!(s > 0.0))
    throw std::invalid_argument("john_nirenberg_ratio: s must be positive");
  double bmo1 = bmo_norm(b, 1.0, std::nullopt, grid, mu);
  if (bmo1 == 0.0) return 0.0;
  Averager av(grid, mu);
  const int n = grid.cells();
  double best = 0.0;
  for (int k = 0; k <= grid.level; ++k) {
    for (int j = 0; j < (1 << k); ++j) {
      DyadicCube q{k, j};
      double bq = av.mean(b, q);
      int a = cube_begin_lat(grid, q);
      int hi = a + cube_cells(grid, q);
      double num = 0.0, den = 0.0;
      for (int pos = a; pos < hi; ++pos) {
        int c = lat_to_phys(grid, pos);
        double mass = mu.density[c] / n;
        num += w[c] * std::pow(std::fabs(b[c] - bq), s) * mass;
        den += w[c] * mass;
      }
      if (den > 0.0) best = std::max(best, num / (den * std::pow(bmo1, s)));
    }
  }
  return best;
}

}  // namespace sparselab
