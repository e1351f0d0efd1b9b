#include "sparselab/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace sparselab {

std::string AssertionFailure::json() const {
  std::ostringstream os;
  os << "{\"error\":\"assertion\",\"experiment\":\"" << experiment
     << "\",\"check\":\"" << check << "\",\"observed\":" << format_sig12(observed)
     << ",\"bound\":" << format_sig12(bound) << "}";
  return os.str();
}

std::string format_sig12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

std::string to_csv(const Table& t) {
  std::string out;
  for (size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_sig12(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const Table& t) {
  std::string out = "{\"name\":\"" + t.name + "\",\"columns\":[";
  for (size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += '"' + t.columns[i] + '"';
  }
  out += "],\"rows\":[";
  for (size_t j = 0; j < t.rows.size(); ++j) {
    if (j) out += ',';
    out += '[';
    for (size_t i = 0; i < t.rows[j].size(); ++i) {
      if (i) out += ',';
      out += format_sig12(t.rows[j][i]);
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, long long* out) {
  try {
    size_t pos = 0;
    *out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_list(const std::string& s, std::vector<double>* out) {
  out->clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v;
    if (!parse_double(trim(item), &v)) return false;
    out->push_back(v);
  }
  return !out->empty();
}

const std::set<std::string> kKnownKeys = {
    "experiment", "grid_l", "shift",  "seed", "out",    "format",
    "lambda",     "delta",  "big_j",  "trials", "eta",  "p",
    "r",          "q",      "s",      "sprime", "wdelta"};

const std::set<std::string> kExperiments = {
    "sharpness-k",   "sharpness-theta", "reduce-fuzz",
    "dominate-demo", "maximal-equiv",   "weights-report"};

}  // namespace

ExperimentConfig parse_config(
    const std::string& path,
    const std::map<std::string, std::string>& overrides) {
  std::vector<std::string> issues;
  std::map<std::string, std::string> kv;

  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) {
      issues.push_back("cannot read config file: " + path);
    } else {
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
          issues.push_back("line " + std::to_string(lineno) +
                           ": expected key=value");
          continue;
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      }
    }
  }
  for (const auto& [k, v] : overrides) kv[k] = v;

  for (const auto& [k, v] : kv)
    if (!kKnownKeys.count(k)) issues.push_back("unknown key: " + k);

  ExperimentConfig ec;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto get_int = [&](const char* key, long long lo, long long hi,
                     long long* out) {
    if (const std::string* s = get(key)) {
      long long v;
      if (!parse_int(*s, &v) || v < lo || v > hi)
        issues.push_back(std::string(key) + ": expected integer in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
      else
        *out = v;
    }
  };
  auto get_dbl = [&](const char* key, double* out) {
    if (const std::string* s = get(key)) {
      double v;
      if (!parse_double(*s, &v))
        issues.push_back(std::string(key) + ": expected a number");
      else
        *out = v;
    }
  };
  auto get_list = [&](const char* key, std::vector<double>* out) {
    if (const std::string* s = get(key)) {
      std::vector<double> v;
      if (!parse_list(*s, &v))
        issues.push_back(std::string(key) + ": expected a comma-separated list");
      else
        *out = v;
    }
  };

  if (const std::string* s = get("experiment")) {
    ec.experiment = *s;
    if (!kExperiments.count(ec.experiment))
      issues.push_back("experiment: unknown experiment '" + ec.experiment + "'");
  } else {
    issues.push_back("experiment: required");
  }
  long long tmp;
  tmp = ec.grid_l;
  get_int("grid_l", 4, 24, &tmp);
  ec.grid_l = static_cast<int>(tmp);
  get_dbl("shift", &ec.shift);
  tmp = static_cast<long long>(ec.seed);
  get_int("seed", 0, (1ll << 62), &tmp);
  ec.seed = static_cast<uint64_t>(tmp);
  if (const std::string* s = get("out")) ec.out_dir = *s;
  if (const std::string* s = get("format")) {
    ec.format = *s;
    if (ec.format != "csv" && ec.format != "json")
      issues.push_back("format: must be csv or json");
  }
  get_list("lambda", &ec.lambdas);
  get_list("delta", &ec.deltas);
  tmp = ec.big_j;
  get_int("big_j", 0, 24, &tmp);
  ec.big_j = static_cast<int>(tmp);
  tmp = ec.trials;
  get_int("trials", 1, 1000000, &tmp);
  ec.trials = static_cast<int>(tmp);
  get_dbl("eta", &ec.eta);
  get_list("p", &ec.p);
  get_list("r", &ec.r);
  get_dbl("q", &ec.q);
  get_dbl("s", &ec.s);
  get_dbl("sprime", &ec.sprime);
  get_dbl("wdelta", &ec.wdelta);

  if (!(ec.shift >= 0.0 && ec.shift < 1.0))
    issues.push_back("shift: must lie in [0, 1)");
  if (ec.J() < 0 || ec.J() > ec.grid_l)
    issues.push_back("big_j: truncation must lie in [0, grid_l]");
  for (double l : ec.lambdas)
    if (!(l > 0.0)) issues.push_back("lambda: values must be positive");
  for (double d : ec.deltas)
    if (!(d > 0.0 && d <= 0.125))
      issues.push_back("delta: values must lie in (0, 1/8]");
  if (!(ec.wdelta > 0.0 && ec.wdelta < 0.25))
    issues.push_back("wdelta: must lie in (0, 1/4)");

  // Exponent block: p, r, derived q, the strict ordering (r,s) < (p,q).
  if (ec.p.size() != ec.r.size()) {
    issues.push_back("p, r: must have the same length");
  } else {
    int m = static_cast<int>(ec.p.size());
    if (!(ec.eta >= 0.0 && ec.eta < m))
      issues.push_back("eta must lie in [0, m)");
    bool ok = true;
    for (double pj : ec.p)
      if (!(pj > 1.0)) {
        issues.push_back("each p_j must lie in (1, inf)");
        ok = false;
        break;
      }
    if (ok && ec.eta >= 0.0 && ec.eta < m) {
      if (ec.q == 0.0) {
        try {
          ec.q = ExponentConfig::derived_q(ec.p, ec.eta);
        } catch (const std::exception&) {
          issues.push_back("1/q = sum 1/p_i - eta violated (derived q <= 0)");
          ok = false;
        }
      } else {
        double inv = -ec.eta;
        for (double pj : ec.p) inv += 1.0 / pj;
        if (std::fabs(1.0 / ec.q - inv) > 1e-12)
          issues.push_back("1/q = sum 1/p_i - eta violated");
      }
      ExponentConfig cfg;
      cfg.m = m;
      cfg.eta = ec.eta;
      cfg.r = ec.r;
      cfg.s = ec.s;
      cfg.s_prime = ec.sprime;
      cfg.p = ec.p;
      cfg.q = ec.q > 0.0 ? ec.q : 1.0;
      cfg.k.assign(static_cast<size_t>(m), 0);
      cfg.t.assign(static_cast<size_t>(m), 0);
      for (const auto& msg : cfg.violations()) issues.push_back(msg);
      if (ok && !ordering_strict(ec.r, ec.s, ec.p, cfg.q))
        issues.push_back("ordering (r,s) < (p,q) violated");
    }
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return ec;
}

namespace {

void emit_table(const Table& t, const ExperimentConfig& ec) {
  std::string path = ec.out_dir + "/" + ec.experiment + "." + ec.format;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError({"cannot write output file: " + path});
  out << (ec.format == "json" ? to_json(t) : to_csv(t));
}

void require(bool cond, const std::string& exp, const std::string& check,
             double observed, double bound) {
  if (!cond) throw AssertionFailure(exp, check, observed, bound);
}

// Level-6 step function with i.i.d. values, sampled as a function of the
// continuum coordinate so refinements see the same underlying function.
GridFunction seeded_step(const GridSpec& grid, uint64_t seed, double lo,
                         double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  std::vector<double> vals(64);
  for (double& v : vals) v = uni(rng);
  return GridFunction::sample(grid, [&](double x) {
    return vals[std::min<size_t>(63, static_cast<size_t>(x * 64.0))];
  });
}

Table run_sharpness_k(const ExperimentConfig& ec) {
  GridSpec grid{ec.grid_l, ec.shift};
  grid.validate();
  Measure mu = Measure::lebesgue(grid);
  ExponentConfig cfg;
  cfg.m = 1;
  cfg.eta = 0.0;
  cfg.r = {2.0};
  cfg.s = kInf;
  cfg.s_prime = 2.0;
  cfg.p = {2.0};
  cfg.q = 2.0;
  cfg.k = {2};
  cfg.t = {1};
  cfg.tau = {0};
  cfg.validate();

  FormInputs in;
  in.f = {GridFunction::constant(grid, 1.0)};
  in.g = GridFunction::constant(grid, 1.0);
  in.cfg = cfg;
  in.s = SparseFamily::nested_chain(ec.J());
  in.grid = grid;
  in.mu = mu;

  Table t;
  t.name = "sharpness-k";
  t.columns = {"lambda", "value", "ratio"};
  std::vector<double> values;
  for (double lam : ec.lambdas) {
    in.b = {GridFunction::sample(grid, [&](double x) { return lam * x; })};
    double v = form_A(in);
    values.push_back(v);
    t.rows.push_back({lam, v, v / (2.0 * lam * lam / 21.0)});
  }
  emit_table(t, ec);
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    double expect =
        (ec.lambdas[i + 1] / ec.lambdas[i]) * (ec.lambdas[i + 1] / ec.lambdas[i]);
    double got = values[i + 1] / values[i];
    require(std::fabs(got / expect - 1.0) <= 1e-9, ec.experiment,
            "consecutive value ratios follow lambda^2 homogeneity", got, expect);
  }
  return t;
}

Table run_sharpness_theta(const ExperimentConfig& ec) {
  GridSpec grid{ec.grid_l, ec.shift};
  grid.validate();
  Measure mu = Measure::lebesgue(grid);
  ExponentConfig cfg;
  cfg.m = 1;
  cfg.eta = 0.0;
  cfg.r = {2.0};
  cfg.s = 4.0;
  cfg.s_prime = 4.0 / 3.0;
  cfg.p = {4.0};
  cfg.q = 4.0;
  cfg.k = {2};
  cfg.t = {1};
  cfg.tau = {0};
  cfg.validate();

  // Fixed test pair f1 = g = x^{-1/8}, symbol b = x, nested-chain family; the
  // higher-order form value itself is weight-free, so the delta-dependence is
  // carried entirely by the slot norms (each slot weighted by its own power
  // weight x^delta).
  FormInputs in;
  in.f = {GridFunction::sample(grid,
                               [](double x) { return std::pow(x, -0.125); })};
  in.g = in.f[0];
  in.b = {GridFunction::sample(grid, [](double x) { return x; })};
  in.cfg = cfg;
  in.s = SparseFamily::nested_chain(ec.J());
  in.grid = grid;
  in.mu = mu;
  double form = form_A(in);

  Table t;
  t.name = "sharpness-theta";
  t.columns = {"delta", "char_const", "form_value", "fitted_slope"};
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> rows;
  for (double delta : ec.deltas) {
    GridFunction w = GridFunction::sample(
        grid, [&](double x) { return std::pow(x, delta); });
    WeightTuple wt{{w}};
    double cc = multiweight_constant(wt, cfg, grid).value;
    Measure mu_f{gf_pow(w, 4.0)};
    Measure mu_g{gf_pow(w, 4.0 / 3.0)};
    double fv = form / (lp_norm(in.f[0], 4.0, grid, mu_f) *
                        lp_norm(in.g, 4.0 / 3.0, grid, mu_g));
    xs.push_back(std::log(cc));
    ys.push_back(std::log(fv));
    rows.push_back({delta, cc, fv, 0.0});
  }
  double xbar = 0.0, ybar = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= xs.size();
  ybar /= ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  for (auto& row : rows) {
    row[3] = slope;
    t.rows.push_back(row);
  }
  emit_table(t, ec);
  require(slope >= 1.6 && slope <= 2.4, ec.experiment,
          "fitted log-log slope in [1.6, 2.4]", slope, 2.0);
  return t;
}

Table run_reduce_fuzz(const ExperimentConfig& ec) {
  std::mt19937_64 rng(ec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  int passes = 0;
  double worst = kInf;
  for (int trial = 0; trial < ec.trials; ++trial) {
    GridSpec grid{4 + static_cast<int>(rng() % 4), 0.0};
    int n = grid.cells();
    int m = 1 + static_cast<int>(rng() % 3);
    ExponentConfig cfg;
    cfg.m = m;
    cfg.r.clear();
    cfg.p.clear();
    cfg.k.clear();
    cfg.t.clear();
    cfg.tau.clear();
    double invsum = 0.0;
    for (int j = 0; j < m; ++j) {
      double pj = 1.2 + 2.8 * uni(rng);
      double rj = 1.0 + 0.9 * (pj - 1.0) * uni(rng);
      cfg.p.push_back(pj);
      cfg.r.push_back(rj);
      invsum += 1.0 / pj;
      int kj = static_cast<int>(rng() % 4);
      cfg.k.push_back(kj);
      cfg.t.push_back(static_cast<int>(rng() % (kj + 1)));
      if (rng() % 2) cfg.tau.push_back(j);
    }
    cfg.eta = 0.9 * invsum * uni(rng);
    cfg.q = ExponentConfig::derived_q(cfg.p, cfg.eta);
    cfg.s = kInf;
    cfg.s_prime = 1.0 + 2.0 * uni(rng);
    cfg.validate();

    FormInputs in;
    in.cfg = cfg;
    in.grid = grid;
    GridFunction dens(n);
    for (int c = 0; c < n; ++c) dens[c] = std::exp(2.0 * uni(rng) - 1.0);
    in.mu = Measure::weighted(dens);
    for (int j = 0; j < m; ++j) {
      GridFunction fj(n), bj(n);
      for (int c = 0; c < n; ++c) {
        fj[c] = uni(rng);
        bj[c] = 2.0 * uni(rng) - 1.0;
      }
      in.f.push_back(std::move(fj));
      in.b.push_back(std::move(bj));
    }
    GridFunction g(n);
    for (int c = 0; c < n; ++c) g[c] = uni(rng);
    in.g = g;
    for (int k = 0; k <= grid.level; ++k)
      for (int j = 0; j < (1 << k); ++j)
        if (uni(rng) < 0.4) in.s.cubes.push_back(DyadicCube{k, j});
    if (in.s.cubes.empty()) in.s.cubes.push_back(root_cube());
    in.s.normalize();

    ReduceReport rep = reduce_check(in);
    if (rep.holds && rep.worst_cube_margin >= -1e-10) ++passes;
    worst = std::min(worst, rep.worst_cube_margin);
  }
  Table t;
  t.name = "reduce-fuzz";
  t.columns = {"trials", "passes", "worst_margin"};
  t.rows.push_back({static_cast<double>(ec.trials),
                    static_cast<double>(passes), worst});
  emit_table(t, ec);
  require(passes == ec.trials, ec.experiment,
          "reduction inequality holds on every trial",
          static_cast<double>(passes), static_cast<double>(ec.trials));
  require(worst >= -1e-10, ec.experiment, "worst per-cube margin >= -1e-10",
          worst, -1e-10);
  return t;
}

Table run_dominate_demo(const ExperimentConfig& ec) {
  ExponentConfig cfg;
  cfg.m = 1;
  cfg.eta = 0.3;
  cfg.r = {1.5};
  cfg.s = kInf;
  cfg.s_prime = 2.0;
  cfg.p = {3.0};
  cfg.q = ExponentConfig::derived_q(cfg.p, cfg.eta);
  cfg.k = {1};
  cfg.t = {0};
  cfg.tau = {0};
  cfg.validate();

  Table t;
  t.name = "dominate-demo";
  t.columns = {"level",  "family_size", "delta_actual", "lhs",
               "rhs",    "c_emp",       "budget_ok"};
  for (int level : {ec.grid_l - 2, ec.grid_l}) {
    GridSpec grid{level, ec.shift};
    grid.validate();
    Measure mu = Measure::lebesgue(grid);
    GridFunction f = seeded_step(grid, ec.seed, 0.2, 1.2);
    GridFunction g = seeded_step(grid, ec.seed + 1, 0.1, 1.1);
    GridFunction b = GridFunction::sample(grid, [](double x) {
      return 0.5 + 0.3 * std::sin(6.283185307179586 * x);
    });
    FracIntegralHandle op(1, cfg.eta, KernelSpec{}, grid, mu);
    DominationConfig dom;
    dom.seed = ec.seed;
    DominateResult res = dominate(op, {f}, g, {b}, cfg, dom);
    VerifyReport vr = verify_sparse(res.family, grid, mu);
    t.rows.push_back({static_cast<double>(level),
                      static_cast<double>(res.family.cubes.size()),
                      vr.delta_actual, res.lhs, res.rhs, res.c_emp,
                      res.budget_ok ? 1.0 : 0.0});
  }
  emit_table(t, ec);
  for (const auto& row : t.rows) {
    require(row[6] == 1.0, ec.experiment, "selection budget respected", row[6],
            1.0);
    require(row[2] >= 0.5 - 1e-12, ec.experiment,
            "constructed family is 1/2-sparse", row[2], 0.5);
  }
  return t;
}

Table run_maximal_equiv(const ExperimentConfig& ec) {
  GridSpec grid{ec.grid_l, ec.shift};
  grid.validate();
  ExponentConfig cfg;
  cfg.m = static_cast<int>(ec.p.size());
  cfg.eta = ec.eta;
  cfg.r = ec.r;
  cfg.s = ec.s;
  cfg.s_prime = ec.sprime;
  cfg.p = ec.p;
  cfg.q = ec.q;
  cfg.k.assign(static_cast<size_t>(cfg.m), 0);
  cfg.t.assign(static_cast<size_t>(cfg.m), 0);
  cfg.validate();

  WeightTuple w;
  for (int j = 0; j < cfg.m; ++j)
    w.components.push_back(GridFunction::sample(grid, [&](double x) {
      return std::pow(x, ec.wdelta / (j + 1));
    }));
  SearchConfig sc;
  sc.trials = 16;
  sc.seed = ec.seed;
  MaximalEquivReport rep = maximal_equiv_report(w, cfg, sc, grid);

  Table t;
  t.name = "maximal-equiv";
  t.columns = {"wdelta",   "char_const", "weak_est",   "strong_est",
               "form_est", "weak_ratio", "strong_band"};
  t.rows.push_back({ec.wdelta, rep.char_const, rep.weak_est, rep.strong_est,
                    rep.form_est, rep.weak_ratio, rep.strong_band});
  emit_table(t, ec);
  require(rep.char_const <= rep.weak_est * (1.0 + 1e-6), ec.experiment,
          "characteristic bounded by the weak-type estimate", rep.char_const,
          rep.weak_est);
  require(std::isfinite(rep.strong_band) && rep.strong_band > 0.0,
          ec.experiment, "strong/form band finite", rep.strong_band, 0.0);
  return t;
}

Table run_weights_report(const ExperimentConfig& ec) {
  GridSpec grid{ec.grid_l, ec.shift};
  grid.validate();
  Measure mu = Measure::lebesgue(grid);
  ExponentConfig cfg;
  cfg.m = 1;
  cfg.eta = 0.0;
  cfg.r = {2.0};
  cfg.s = 8.0;
  cfg.s_prime = 8.0 / 7.0;
  cfg.p = {4.0};
  cfg.q = 4.0;
  cfg.k = {1};
  cfg.t = {1};
  cfg.tau = {0};
  cfg.validate();

  GridFunction w = GridFunction::sample(
      grid, [&](double x) { return std::pow(x, ec.wdelta); });
  WeightTuple u{{w}};
  WeightTuple om{{GridFunction::sample(
      grid, [&](double x) { return std::pow(x, ec.wdelta / 2.0); })}};

  ApValue ap = ap_constant(w, cfg.p[0], grid);
  MultiweightReport mw = multiweight_constant(u, cfg, grid);
  double theta = theta_exponent(cfg);
  BloomReport bm = bloom_derive(cfg, u, om, BloomVariant::kMaximal, grid);
  BloomReport bh = bloom_derive(cfg, u, om, BloomVariant::kHolder, grid);
  GridFunction b = GridFunction::sample(grid, [](double x) {
    return std::sin(6.283185307179586 * x);
  });
  double bmo = bmo_norm(b, 2.0, std::nullopt, grid, mu);
  double jn = john_nirenberg_ratio(b, w, 2.0, grid, mu);

  Table t;
  t.name = "weights-report";
  t.columns = {"wdelta",      "ap_value",    "mw_value",    "mw_remark",
               "theta",       "blm_a",       "blm_gamma_k", "blm_big_l",
               "blm_gamma1",  "blm_c_dual",  "blh_big_l",   "blh_gamma1",
               "blh_c_dual",  "bmo_2",       "jn_ratio"};
  t.rows.push_back({ec.wdelta, ap.value, mw.value, mw.remark_value, theta,
                    static_cast<double>(bm.a), bm.gamma_k,
                    static_cast<double>(bm.big_l), bm.gamma1, bm.c_dual,
                    static_cast<double>(bh.big_l), bh.gamma1, bh.c_dual, bmo,
                    jn});
  emit_table(t, ec);
  require(std::fabs(mw.value - mw.remark_value) <=
              1e-10 * std::max(mw.value, 1.0),
          ec.experiment, "characteristic rewriting agreement", mw.remark_value,
          mw.value);
  return t;
}

}  // namespace

Table run_experiment(const ExperimentConfig& ec) {
  if (ec.experiment == "sharpness-k") return run_sharpness_k(ec);
  if (ec.experiment == "sharpness-theta") return run_sharpness_theta(ec);
  if (ec.experiment == "reduce-fuzz") return run_reduce_fuzz(ec);
  if (ec.experiment == "dominate-demo") return run_dominate_demo(ec);
  if (ec.experiment == "maximal-equiv") return run_maximal_equiv(ec);
  if (ec.experiment == "weights-report") return run_weights_report(ec);
  throw ConfigError({"experiment: unknown experiment '" + ec.experiment + "'"});
}

}  // namespace sparselab
