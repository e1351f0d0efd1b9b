#pragma once

// Local averages over dyadic cubes and the norm zoo (L^p, weak quasi-norm,
// pointwise l^z family norms). Repeated (f, r) queries are served from
// per-(f, r) prefix-sum tables built lazily and cached by content hash.

#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "sparselab/grid.hpp"

namespace sparselab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Serves measures, averages and means over dyadic cubes for one (grid, mu)
// pair. Prefix sums are stored in lattice coordinates so that every cube is a
// contiguous range regardless of the lattice shift.
class Averager {
 public:
  Averager(const GridSpec& grid, const Measure& mu) : grid_(grid), mu_(mu) {
    grid_.validate();
    mu_.validate();
    n_ = grid_.cells();
    wprefix_.assign(static_cast<size_t>(n_) + 1, 0.0);
    for (int p = 0; p < n_; ++p)
      wprefix_[p + 1] = wprefix_[p] + mu_.density[lat_to_phys(grid_, p)] / n_;
  }

  const GridSpec& grid() const { return grid_; }
  const Measure& mu() const { return mu_; }

  double measure(const DyadicCube& q) const {
    check_cube(grid_, q);
    int a = cube_begin_lat(grid_, q);
    int b = a + cube_cells(grid_, q);
    return wprefix_[b] - wprefix_[a];
  }

  double total() const { return wprefix_[n_]; }

  // (mu(Q)^-1 int_Q |f|^r dmu)^{1/r}; r = infinity means max over cells of Q.
  double avg(const GridFunction& f, double r, const DyadicCube& q) {
    check_cube(grid_, q);
    if (f.size() != n_) throw std::invalid_argument("avg: size mismatch");
    if (r == kInf) {
      const auto& pyr = max_pyramid(f);
      return pyr[q.level][q.index];
    }
    if (!(r >= 1.0)) throw std::invalid_argument("avg: r must be >= 1 or inf");
    const auto& pre = power_prefix(f, r);
    int a = cube_begin_lat(grid_, q);
    int b = a + cube_cells(grid_, q);
    double m = wprefix_[b] - wprefix_[a];
    return std::pow((pre[b] - pre[a]) / m, 1.0 / r);
  }

  // mu(Q)^-1 int_Q b dmu (signed).
  double mean(const GridFunction& b, const DyadicCube& q) {
    check_cube(grid_, q);
    if (b.size() != n_) throw std::invalid_argument("mean: size mismatch");
    const auto& pre = signed_prefix(b);
    int a = cube_begin_lat(grid_, q);
    int bb = a + cube_cells(grid_, q);
    double m = wprefix_[bb] - wprefix_[a];
    return (pre[bb] - pre[a]) / m;
  }

 private:
  using Key = std::pair<uint64_t, uint64_t>;

  // Full content hashes are O(N); repeated queries on the same function are
  // served from a pointer-keyed memo guarded by a 64-probe fingerprint (any
  // contiguous in-place edit of >= N/64 cells perturbs a probe).
  static uint64_t fingerprint(const GridFunction& f) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t bits) {
      h ^= bits;
      h *= 1099511628211ull;
    };
    size_t n = f.v.size();
    mix(n);
    size_t stride = std::max<size_t>(1, n / 64);
    for (size_t i = 0; i < n; i += stride) {
      uint64_t bits;
      std::memcpy(&bits, &f.v[i], sizeof(bits));
      mix(bits);
    }
    if (n) {
      uint64_t bits;
      std::memcpy(&bits, &f.v[n - 1], sizeof(bits));
      mix(bits);
    }
    return h;
  }

  // Callers must hold cache_mutex_ or be externally synchronized; all uses
  // below take the lock around the memo access.
  uint64_t hash_of(const GridFunction& f) {
    const double* ptr = f.v.data();
    uint64_t fp = fingerprint(f);
    {
      std::lock_guard<std::mutex> lk(cache_mutex_);
      auto it = hash_memo_.find(ptr);
      if (it != hash_memo_.end() && it->second.first == fp)
        return it->second.second;
    }
    uint64_t h = f.content_hash();
    std::lock_guard<std::mutex> lk(cache_mutex_);
    hash_memo_[ptr] = {fp, h};
    return h;
  }

  const std::vector<double>& power_prefix(const GridFunction& f, double r) {
    uint64_t rbits;
    std::memcpy(&rbits, &r, sizeof(rbits));
    Key key{hash_of(f), rbits};
    {
      std::lock_guard<std::mutex> lk(cache_mutex_);
      auto it = prefix_cache_.find(key);
      if (it != prefix_cache_.end()) return *it->second;
    }
    auto tab = std::make_unique<std::vector<double>>(
        static_cast<size_t>(n_) + 1, 0.0);
    for (int p = 0; p < n_; ++p) {
      int c = lat_to_phys(grid_, p);
      (*tab)[p + 1] =
          (*tab)[p] + std::pow(std::fabs(f[c]), r) * mu_.density[c] / n_;
    }
    std::lock_guard<std::mutex> lk(cache_mutex_);
    auto [it, ok] = prefix_cache_.emplace(key, std::move(tab));
    return *it->second;
  }

  const std::vector<double>& signed_prefix(const GridFunction& b) {
    Key key{hash_of(b), ~0ull};
    {
      std::lock_guard<std::mutex> lk(cache_mutex_);
      auto it = prefix_cache_.find(key);
      if (it != prefix_cache_.end()) return *it->second;
    }
    auto tab = std::make_unique<std::vector<double>>(
        static_cast<size_t>(n_) + 1, 0.0);
    for (int p = 0; p < n_; ++p) {
      int c = lat_to_phys(grid_, p);
      (*tab)[p + 1] = (*tab)[p] + b[c] * mu_.density[c] / n_;
    }
    std::lock_guard<std::mutex> lk(cache_mutex_);
    auto [it, ok] = prefix_cache_.emplace(key, std::move(tab));
    return *it->second;
  }

  // pyr[k][j] = max over the cells of cube (k, j) of |f|.
  const std::vector<std::vector<double>>& max_pyramid(const GridFunction& f) {
    uint64_t key = hash_of(f);
    {
      std::lock_guard<std::mutex> lk(cache_mutex_);
      auto it = pyramid_cache_.find(key);
      if (it != pyramid_cache_.end()) return *it->second;
    }
    auto pyr = std::make_unique<std::vector<std::vector<double>>>(
        static_cast<size_t>(grid_.level) + 1);
    auto& p = *pyr;
    p[grid_.level].resize(static_cast<size_t>(n_));
    for (int q = 0; q < n_; ++q)
      p[grid_.level][q] = std::fabs(f[lat_to_phys(grid_, q)]);
    for (int k = grid_.level - 1; k >= 0; --k) {
      p[k].resize(static_cast<size_t>(1) << k);
      for (int j = 0; j < (1 << k); ++j)
        p[k][j] = std::max(p[k + 1][2 * j], p[k + 1][2 * j + 1]);
    }
    std::lock_guard<std::mutex> lk(cache_mutex_);
    auto [it, ok] = pyramid_cache_.emplace(key, std::move(pyr));
    return *it->second;
  }

  GridSpec grid_;
  Measure mu_;
  int n_ = 0;
  std::vector<double> wprefix_;
  std::map<Key, std::unique_ptr<std::vector<double>>> prefix_cache_;
  std::map<uint64_t, std::unique_ptr<std::vector<std::vector<double>>>>
      pyramid_cache_;
  std::map<const double*, std::pair<uint64_t, uint64_t>> hash_memo_;
  std::mutex cache_mutex_;
};

// One-shot average without a persistent cache.
inline double avg(const GridFunction& f, double r, const DyadicCube& q,
                  const GridSpec& grid, const Measure& mu) {
  Averager av(grid, mu);
  return av.avg(f, r, q);
}

inline double mean(const GridFunction& b, const DyadicCube& q,
                   const GridSpec& grid, const Measure& mu) {
  Averager av(grid, mu);
  return av.mean(b, q);
}

// (int |f|^p dmu)^{1/p}; for p < 1 this is the quasi-norm, same formula.
inline double lp_norm(const GridFunction& f, double p, const GridSpec& grid,
                      const Measure& mu) {
  if (!(p > 0.0)) throw std::invalid_argument("lp_norm: p must be positive");
  if (f.size() != grid.cells())
    throw std::invalid_argument("lp_norm: size mismatch");
  double s = 0.0, comp = 0.0;
  for (int c = 0; c < grid.cells(); ++c) {
    double term =
        std::pow(std::fabs(f[c]), p) * mu.density[c] / grid.cells();
    double y = term - comp;
    double t = s + y;
    comp = (t - s) - y;
    s = t;
  }
  return std::pow(s, 1.0 / p);
}

// sup_lambda lambda * mu({|F| > lambda})^{1/p}, exact over cell values.
inline double weak_quasinorm(const GridFunction& f, double p,
                             const GridSpec& grid, const Measure& mu) {
  if (!(p > 0.0))
    throw std::invalid_argument("weak_quasinorm: p must be positive");
  if (f.size() != grid.cells())
    throw std::invalid_argument("weak_quasinorm: size mismatch");
  std::vector<std::pair<double, double>> vm;
  vm.reserve(f.v.size());
  for (int c = 0; c < grid.cells(); ++c)
    vm.emplace_back(std::fabs(f[c]), mu.density[c] / grid.cells());
  std::sort(vm.begin(), vm.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  // For each distinct value v, mu({|F| >= v}) is the cumulative mass through
  // its block; the supremum over thresholds is max v * mass^{1/p}.
  double best = 0.0, cum = 0.0;
  size_t i = 0;
  while (i < vm.size()) {
    double v = vm[i].first;
    while (i < vm.size() && vm[i].first == v) cum += vm[i++].second;
    best = std::max(best, v * std::pow(cum, 1.0 / p));
  }
  return best;
}

// Pointwise (sum_i |F_i(x)|^z)^{1/z}.
inline GridFunction lz_family_norm(const std::vector<GridFunction>& fam,
                                   double z) {
  if (fam.empty())
    throw std::invalid_argument("lz_family_norm: empty family");
  if (!(z >= 1.0)) throw std::invalid_argument("lz_family_norm: z must be >= 1");
  GridFunction out(fam[0].size());
  for (const auto& f : fam) {
    if (f.size() != out.size())
      throw std::invalid_argument("lz_family_norm: size mismatch");
    for (int c = 0; c < out.size(); ++c)
      out[c] += std::pow(std::fabs(f[c]), z);
  }
  for (double& x : out.v) x = std::pow(x, 1.0 / z);
  return out;
}

}  // namespace sparselab
