#pragma once

// Exponent bookkeeping for the multilinear operators and forms: the tuple
// (m, eta, r, s, s', p, q, k, t, tau, tau', z) with its ordering constraints.

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparselab/average.hpp"

namespace sparselab {

inline double holder_conjugate(double x) {
  if (x == kInf) return 1.0;
  if (x == 1.0) return kInf;
  return x / (x - 1.0);
}

struct ExponentConfig {
  int m = 1;
  double eta = 0.0;
  std::vector<double> r{1.0};      // r_j in [1, inf)
  double s = kInf;                 // s in (max r_i, inf]
  double s_prime = 1.0;            // dual-side averaging exponent
  std::vector<double> p{2.0};      // p_j in (1, inf)
  double q = 2.0;                  // 1/q = sum 1/p_j - eta
  double z = 1.0;                  // l^z exponent
  std::vector<int> k{0};           // symbol orders, k_i >= 0
  std::vector<int> t{0};           // split orders, 0 <= t_i <= k_i
  std::vector<int> tau;            // 0-based index set, subset of {0..m-1}
  std::vector<int> tau_prime;      // subset of tau

  static double derived_q(const std::vector<double>& p, double eta) {
    double inv = 0.0;
    for (double pj : p) inv += 1.0 / pj;
    inv -= eta;
    if (!(inv > 0.0))
      throw std::invalid_argument("derived_q: 1/q = sum 1/p_j - eta <= 0");
    return 1.0 / inv;
  }

  int k_total() const {
    int s = 0;
    for (int i : tau) s += k[static_cast<size_t>(i)];
    return s;
  }

  // Collects every violated constraint (empty result means valid).
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto fail = [&](const std::string& msg) { out.push_back(msg); };
    if (m < 1) fail("m must be >= 1");
    if (!(eta >= 0.0) || !(eta < m)) fail("eta must lie in [0, m)");
    if (static_cast<int>(r.size()) != m) fail("r must have m entries");
    if (static_cast<int>(p.size()) != m) fail("p must have m entries");
    if (static_cast<int>(k.size()) != m) fail("k must have m entries");
    if (static_cast<int>(t.size()) != m) fail("t must have m entries");
    double rmax = 0.0;
    for (double rj : r) {
      if (!(rj >= 1.0)) fail("each r_j must be >= 1");
      rmax = std::max(rmax, rj);
    }
    if (!(s > rmax)) fail("s must exceed max_i r_i");
    if (!(s_prime >= 1.0)) fail("s' must be >= 1");
    if (!(z >= 1.0)) fail("z must be >= 1");
    for (double pj : p)
      if (!(pj > 1.0) || pj == kInf) fail("each p_j must lie in (1, inf)");
    if (static_cast<int>(r.size()) == m && static_cast<int>(p.size()) == m) {
      double invq = 0.0;
      bool ok = true;
      for (double pj : p) {
        if (!(pj > 1.0)) ok = false;
        invq += 1.0 / pj;
      }
      invq -= eta;
      if (ok && std::fabs(1.0 / q - invq) > 1e-12)
        fail("1/q = sum 1/p_i - eta violated");
    }
    for (size_t i = 0; i < k.size() && i < t.size(); ++i) {
      if (k[i] < 0) fail("k entries must be >= 0");
      if (t[i] < 0 || t[i] > k[i]) fail("t must satisfy 0 <= t_i <= k_i");
    }
    for (int i : tau)
      if (i < 0 || i >= m) fail("tau must be a subset of {1..m}");
    for (int i : tau_prime)
      if (std::find(tau.begin(), tau.end(), i) == tau.end())
        fail("tau' must be a subset of tau");
    return out;
  }

  void validate() const {
    auto v = violations();
    if (!v.empty()) {
      std::ostringstream os;
      os << "ExponentConfig:";
      for (const auto& msg : v) os << " [" << msg << "]";
      throw std::invalid_argument(os.str());
    }
  }
};

// (r, s) < (p, q) strictly: r_j < p_j for all j and q < s.
inline bool ordering_strict(const std::vector<double>& r, double s,
                            const std::vector<double>& p, double q) {
  if (r.size() != p.size()) return false;
  for (size_t j = 0; j < r.size(); ++j)
    if (!(r[j] < p[j])) return false;
  return q < s;
}

// (r, s) <= (p, q): r_j <= p_j for all j and q <= s.
inline bool ordering_weak(const std::vector<double>& r, double s,
                          const std::vector<double>& p, double q) {
  if (r.size() != p.size()) return false;
  for (size_t j = 0; j < r.size(); ++j)
    if (!(r[j] <= p[j])) return false;
  return q <= s;
}

// (r, s) <=* (p, q): r_j <= p_j for all j and q < s.
inline bool ordering_weak_star(const std::vector<double>& r, double s,
                               const std::vector<double>& p, double q) {
  if (r.size() != p.size()) return false;
  for (size_t j = 0; j < r.size(); ++j)
    if (!(r[j] <= p[j])) return false;
  return q < s;
}

}  // namespace sparselab
