// Microbenchmark: production kernels (OpenMP on/off) against the naive
// reference implementations. Prints one row per kernel with wall times and
// the worst elementwise deviation between the variants.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "sparselab/operators.hpp"
#include "sparselab/reference.hpp"

using namespace sparselab;

namespace {

double time_of(const std::function<GridFunction()>& fn, int reps,
               GridFunction* out) {
  using clock = std::chrono::steady_clock;
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    auto t0 = clock::now();
    GridFunction r = fn();
    double dt = std::chrono::duration<double>(clock::now() - t0).count();
    best = std::min(best, dt);
    *out = std::move(r);
  }
  return best;
}

double max_dev(const GridFunction& a, const GridFunction& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i)
    d = std::max(d, std::fabs(a.v[i] - b.v[i]));
  return d;
}

GridFunction random_function(const GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.05, 2.0);
  GridFunction f(g.cells());
  for (double& x : f.v) x = uni(rng);
  return f;
}

}  // namespace

int main() {
  std::mt19937_64 rng(1);
  std::printf("%-28s %6s %12s %12s %12s\n", "kernel", "L", "parallel[s]",
              "serial[s]", "max dev");

  {
    GridSpec g{14, 0.0};
    Measure mu = Measure::lebesgue(g);
    std::vector<GridFunction> f{random_function(g, rng),
                                random_function(g, rng)};
    GridFunction par, ser;
    double tp = time_of(
        [&] { return dyadic_maximal(f, 0.25, {1.0, 2.0}, g, mu, {true}); }, 3,
        &par);
    double ts = time_of(
        [&] { return dyadic_maximal(f, 0.25, {1.0, 2.0}, g, mu, {false}); }, 3,
        &ser);
    std::printf("%-28s %6d %12.6f %12.6f %12.3e\n", "dyadic_maximal (m=2)",
                g.level, tp, ts, max_dev(par, ser));
  }

  {
    GridSpec g{11, 0.0};
    Measure mu = Measure::lebesgue(g);
    std::vector<GridFunction> f{random_function(g, rng)};
    KernelSpec ks;
    GridFunction par, ser;
    double tp = time_of(
        [&] { return frac_integral(f, 0.5, ks, g, mu, {true}); }, 3, &par);
    double ts = time_of(
        [&] { return frac_integral(f, 0.5, ks, g, mu, {false}); }, 3, &ser);
    std::printf("%-28s %6d %12.6f %12.6f %12.3e\n", "frac_integral (m=1)",
                g.level, tp, ts, max_dev(par, ser));
  }

  {
    // The brute-force reference is quadratic in the cell count; keep it small.
    GridSpec g{10, 0.0};
    Measure mu = Measure::lebesgue(g);
    std::vector<GridFunction> f{random_function(g, rng)};
    GridFunction fast, brute;
    double tp = time_of(
        [&] { return dyadic_maximal(f, 0.25, {1.5}, g, mu, {true}); }, 3,
        &fast);
    double tb = time_of(
        [&] {
          return reference::bruteforce_dyadic_maximal(f, 0.25, {1.5}, g, mu);
        },
        1, &brute);
    std::printf("%-28s %6d %12.6f %12.6f %12.3e\n",
                "maximal vs brute reference", g.level, tp, tb,
                max_dev(fast, brute));
  }

  return 0;
}
