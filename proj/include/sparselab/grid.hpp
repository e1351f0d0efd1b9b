#pragma once

// Dyadic geometry on the unit torus [0,1): grid specification, dyadic cubes,
// piecewise-constant grid functions and weighted measures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparselab {

// Description of the dyadic lattice: finest level L (N = 2^L cells) plus an
// optional torus translation of the lattice. The shift is snapped to a whole
// number of finest cells so that every cube is a union of finest cells.
struct GridSpec {
  int level = 14;
  double shift = 0.0;

  int cells() const { return 1 << level; }

  int shift_cells() const {
    int n = cells();
    long long s = std::llround(shift * n);
    return static_cast<int>(((s % n) + n) % n);
  }

  void validate() const {
    if (level < 4 || level > 24)
      throw std::invalid_argument("GridSpec: level must be in [4, 24]");
    if (!(shift >= 0.0 && shift < 1.0))
      throw std::invalid_argument("GridSpec: shift must be in [0, 1)");
  }

  bool operator==(const GridSpec& o) const {
    return level == o.level && shift == o.shift;
  }
};

// Half-open dyadic interval [shift + j*2^-k, shift + (j+1)*2^-k) mod 1.
// Identified by (level k, index j); containment is the dyadic nesting order.
struct DyadicCube {
  int level = 0;
  int index = 0;

  bool operator==(const DyadicCube& o) const {
    return level == o.level && index == o.index;
  }
  bool operator<(const DyadicCube& o) const {
    if (level != o.level) return level < o.level;
    return index < o.index;
  }
};

inline void check_cube(const GridSpec& g, const DyadicCube& q) {
  if (q.level < 0 || q.level > g.level)
    throw std::invalid_argument("DyadicCube: level out of range");
  if (q.index < 0 || q.index >= (1 << q.level))
    throw std::invalid_argument("DyadicCube: index out of range");
}

// Number of finest cells covered by Q.
inline int cube_cells(const GridSpec& g, const DyadicCube& q) {
  return 1 << (g.level - q.level);
}

// First covered cell in lattice coordinates (cells counted from the shifted
// origin; contiguous, no wrap-around in this coordinate system).
inline int cube_begin_lat(const GridSpec& g, const DyadicCube& q) {
  return q.index << (g.level - q.level);
}

// Side length 2^-k.
inline double cube_length(const DyadicCube& q) {
  return std::ldexp(1.0, -q.level);
}

// a contains b (a == b included).
inline bool cube_contains(const DyadicCube& a, const DyadicCube& b) {
  return a.level <= b.level && (b.index >> (b.level - a.level)) == a.index;
}

inline DyadicCube cube_ancestor(const DyadicCube& q, int level) {
  if (level > q.level)
    throw std::invalid_argument("cube_ancestor: level below cube");
  return DyadicCube{level, q.index >> (q.level - level)};
}

inline DyadicCube root_cube() { return DyadicCube{0, 0}; }

// Map between lattice coordinates and physical finest-cell indices.
inline int lat_to_phys(const GridSpec& g, int p) {
  return (p + g.shift_cells()) & (g.cells() - 1);
}
inline int phys_to_lat(const GridSpec& g, int c) {
  return (c - g.shift_cells() + g.cells()) & (g.cells() - 1);
}

// Midpoint of a physical finest cell.
inline double cell_midpoint(const GridSpec& g, int c) {
  return (c + 0.5) / g.cells();
}

// Torus metric d(x, y) = min(|x - y|, 1 - |x - y|).
inline double torus_distance(double x, double y) {
  double d = std::fabs(x - y);
  return std::min(d, 1.0 - d);
}

// Piecewise-constant real function on the N finest cells (physical indexing).
struct GridFunction {
  std::vector<double> v;

  GridFunction() = default;
  explicit GridFunction(int n, double c = 0.0) : v(static_cast<size_t>(n), c) {}

  int size() const { return static_cast<int>(v.size()); }
  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }

  static GridFunction constant(const GridSpec& g, double c) {
    return GridFunction(g.cells(), c);
  }

  // Indicator of [a, b) sampled at cell midpoints.
  static GridFunction indicator(const GridSpec& g, double a, double b) {
    GridFunction f(g.cells());
    for (int c = 0; c < g.cells(); ++c) {
      double x = cell_midpoint(g, c);
      f[c] = (x >= a && x < b) ? 1.0 : 0.0;
    }
    return f;
  }

  // Continuum formula sampled at cell midpoints.
  static GridFunction sample(const GridSpec& g,
                             const std::function<double(double)>& fn) {
    GridFunction f(g.cells());
    for (int c = 0; c < g.cells(); ++c) f[c] = fn(cell_midpoint(g, c));
    return f;
  }

  // FNV-1a over the raw value bytes; keys the prefix-table caches.
  uint64_t content_hash() const {
    uint64_t h = 1469598103934665603ull;
    for (double x : v) {
      uint64_t bits;
      static_assert(sizeof(bits) == sizeof(x));
      std::memcpy(&bits, &x, sizeof(bits));
      for (int k = 0; k < 8; ++k) {
        h ^= (bits >> (8 * k)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
    return h;
  }
};

inline GridFunction gf_abs(const GridFunction& f) {
  GridFunction r = f;
  for (double& x : r.v) x = std::fabs(x);
  return r;
}

inline GridFunction gf_pow(const GridFunction& f, double e) {
  GridFunction r = f;
  for (double& x : r.v) x = std::pow(x, e);
  return r;
}

inline GridFunction gf_scale(const GridFunction& f, double c) {
  GridFunction r = f;
  for (double& x : r.v) x *= c;
  return r;
}

inline GridFunction gf_mul(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("gf_mul: size mismatch");
  GridFunction r = a;
  for (int i = 0; i < r.size(); ++i) r[i] *= b[i];
  return r;
}

// Positive density against Lebesgue measure on the torus; the mass of a
// finest cell is density * 2^-L.
struct Measure {
  GridFunction density;

  static Measure lebesgue(const GridSpec& g) {
    return Measure{GridFunction::constant(g, 1.0)};
  }
  static Measure weighted(GridFunction w) { return Measure{std::move(w)}; }

  void validate() const {
    for (double x : density.v)
      if (!(x > 0.0) || !std::isfinite(x))
        throw std::invalid_argument("Measure: density must be positive finite");
  }

  double cell_mass(int c, int n) const { return density[c] / n; }
};

// Set of dyadic cubes with a target sparsity constant. The canonical witness
// E_Q = Q \ union{strict sub-cubes in the family} is computed in verify_sparse.
struct SparseFamily {
  std::vector<DyadicCube> cubes;
  double delta = 0.5;

  void normalize() {
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  }

  static SparseFamily nested_chain(int max_level) {
    SparseFamily s;
    for (int k = 0; k <= max_level; ++k) s.cubes.push_back(DyadicCube{k, 0});
    return s;
  }
};

}  // namespace sparselab
