#include "sparselab/forms.hpp"

#include <functional>

namespace sparselab {

namespace {

// Deterministic compensated accumulator.
struct Kahan {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
};

// Weighted r-average over Q of a per-cell integrand (direct loop; the
// integrand depends on Q through the symbol means, so no prefix caching).
double cube_avg(const DyadicCube& q, const GridSpec& grid, const Measure& mu,
                double muq, double r,
                const std::function<double(int)>& value) {
  int a = cube_begin_lat(grid, q);
  int b = a + cube_cells(grid, q);
  if (r == kInf) {
    double m = 0.0;
    for (int p = a; p < b; ++p)
      m = std::max(m, std::fabs(value(lat_to_phys(grid, p))));
    return m;
  }
  Kahan acc;
  for (int p = a; p < b; ++p) {
    int c = lat_to_phys(grid, p);
    acc.add(std::pow(std::fabs(value(c)), r) * mu.density[c] / grid.cells());
  }
  return std::pow(acc.s / muq, 1.0 / r);
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

bool in_set(const std::vector<int>& set, int i) {
  return std::find(set.begin(), set.end(), i) != set.end();
}

}  // namespace

void FormInputs::validate() const {
  cfg.validate();
  grid.validate();
  mu.validate();
  if (static_cast<int>(f.size()) != cfg.m)
    throw std::invalid_argument("FormInputs: f arity mismatch");
  if (static_cast<int>(b.size()) != cfg.m)
    throw std::invalid_argument("FormInputs: b arity mismatch");
  int n = grid.cells();
  for (const auto& fi : f)
    if (fi.size() != n) throw std::invalid_argument("FormInputs: f size");
  for (const auto& bi : b)
    if (bi.size() != n) throw std::invalid_argument("FormInputs: b size");
  if (g.size() != n) throw std::invalid_argument("FormInputs: g size");
}

double plain_form(const FormInputs& in, double r_last) {
  in.validate();
  Averager av(in.grid, in.mu);
  std::vector<DyadicCube> cubes = in.s.cubes;
  std::sort(cubes.begin(), cubes.end());
  Kahan total;
  for (const auto& q : cubes) {
    double muq = av.measure(q);
    double term = std::pow(muq, in.cfg.eta + 1.0);
    for (int j = 0; j < in.cfg.m; ++j)
      term *= av.avg(in.f[j], in.cfg.r[j], q);
    term *= av.avg(in.g, r_last, q);
    total.add(term);
  }
  return total.s;
}

namespace {

// Shared skeleton of form_A / form_B and the per-cube reduction margin.
// For each cube evaluates:
//   A_Q  = prod_{i in tau} <|f_i| osc_i^{t_i}>_{r_i}
//            * <prod_{i in tau} osc_i^{k_i - t_i} |g|>_{s'}
//   B_Q(tau') = prod_{i in tau'} <osc_i^{k_i} |f_i|>_{r_i}
//            * prod_{i in tau \ tau'} <|f_i|>_{r_i}
//            * <prod_{i in tau \ tau'} osc_i^{k_i} |g|>_{s'}
// where osc_i = |b_i - b_{i,Q}|, times the common factor
// mu(Q)^{eta+1} prod_{j not in tau} <|f_j|>_{r_j}.
struct FormEngine {
  const FormInputs& in;
  Averager av;

  explicit FormEngine(const FormInputs& fi) : in(fi), av(fi.grid, fi.mu) {
    in.validate();
  }

  double common_factor(const DyadicCube& q, double muq) {
    double c = std::pow(muq, in.cfg.eta + 1.0);
    for (int j = 0; j < in.cfg.m; ++j)
      if (!in_set(in.cfg.tau, j)) c *= av.avg(in.f[j], in.cfg.r[j], q);
    return c;
  }

  std::vector<double> symbol_means(const DyadicCube& q) {
    std::vector<double> bq(static_cast<size_t>(in.cfg.m), 0.0);
    for (int i : in.cfg.tau) bq[i] = av.mean(in.b[i], q);
    return bq;
  }

  double a_term(const DyadicCube& q, double muq, const std::vector<double>& bq) {
    double term = 1.0;
    for (int i : in.cfg.tau) {
      int ti = in.cfg.t[i];
      term *= cube_avg(q, in.grid, in.mu, muq, in.cfg.r[i], [&](int c) {
        return std::fabs(in.f[i][c]) * ipow(std::fabs(in.b[i][c] - bq[i]), ti);
      });
    }
    term *= cube_avg(q, in.grid, in.mu, muq, in.cfg.s_prime, [&](int c) {
      double v = std::fabs(in.g[c]);
      for (int i : in.cfg.tau)
        v *= ipow(std::fabs(in.b[i][c] - bq[i]), in.cfg.k[i] - in.cfg.t[i]);
      return v;
    });
    return term;
  }

  double b_term(const DyadicCube& q, double muq, const std::vector<double>& bq,
                const std::vector<int>& tau_prime) {
    double term = 1.0;
    for (int i : in.cfg.tau) {
      if (in_set(tau_prime, i)) {
        term *= cube_avg(q, in.grid, in.mu, muq, in.cfg.r[i], [&](int c) {
          return ipow(std::fabs(in.b[i][c] - bq[i]), in.cfg.k[i]) *
                 std::fabs(in.f[i][c]);
        });
      } else {
        term *= av.avg(in.f[i], in.cfg.r[i], q);
      }
    }
    term *= cube_avg(q, in.grid, in.mu, muq, in.cfg.s_prime, [&](int c) {
      double v = std::fabs(in.g[c]);
      for (int i : in.cfg.tau)
        if (!in_set(tau_prime, i))
          v *= ipow(std::fabs(in.b[i][c] - bq[i]), in.cfg.k[i]);
      return v;
    });
    return term;
  }

  std::vector<DyadicCube> sorted_cubes() const {
    std::vector<DyadicCube> cubes = in.s.cubes;
    std::sort(cubes.begin(), cubes.end());
    return cubes;
  }
};

// All subsets of tau, in a fixed deterministic order.
std::vector<std::vector<int>> subsets_of(const std::vector<int>& tau) {
  std::vector<std::vector<int>> out;
  size_t n = tau.size();
  for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
    std::vector<int> sub;
    for (size_t i = 0; i < n; ++i)
      if (mask & (size_t{1} << i)) sub.push_back(tau[i]);
    out.push_back(std::move(sub));
  }
  return out;
}

}  // namespace

double form_A(const FormInputs& in) {
  FormEngine eng(in);
  Kahan total;
  for (const auto& q : eng.sorted_cubes()) {
    double muq = eng.av.measure(q);
    auto bq = eng.symbol_means(q);
    total.add(eng.common_factor(q, muq) * eng.a_term(q, muq, bq));
  }
  return total.s;
}

double form_B(const FormInputs& in) {
  FormEngine eng(in);
  Kahan total;
  for (const auto& q : eng.sorted_cubes()) {
    double muq = eng.av.measure(q);
    auto bq = eng.symbol_means(q);
    total.add(eng.common_factor(q, muq) *
              eng.b_term(q, muq, bq, in.cfg.tau_prime));
  }
  return total.s;
}

ReduceReport reduce_check(const FormInputs& in) {
  FormEngine eng(in);
  auto subs = subsets_of(in.cfg.tau);
  Kahan lhs, rhs;
  double worst = kInf;
  for (const auto& q : eng.sorted_cubes()) {
    double muq = eng.av.measure(q);
    auto bq = eng.symbol_means(q);
    double common = eng.common_factor(q, muq);
    double aq = eng.a_term(q, muq, bq);
    Kahan bsum;
    for (const auto& sub : subs) bsum.add(eng.b_term(q, muq, bq, sub));
    lhs.add(common * aq);
    rhs.add(common * bsum.s);
    double margin = (bsum.s - aq) / std::max(bsum.s, 1e-300);
    worst = std::min(worst, margin);
  }
  ReduceReport rep;
  rep.lhs = lhs.s;
  rep.rhs = rhs.s;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-10);
  rep.worst_cube_margin = (worst == kInf) ? 0.0 : worst;
  return rep;
}

}  // namespace sparselab
