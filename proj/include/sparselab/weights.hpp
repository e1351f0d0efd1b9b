#pragma once

// Weight characteristics (A_p and the multilinear fractional class), BMO and
// weighted BMO norms, and the derived Bloom weights with their composite
// constants.

#include <optional>

#include "sparselab/exponents.hpp"

namespace sparselab {

// m positive grid functions with the derived product weight.
struct WeightTuple {
  std::vector<GridFunction> components;

  void validate() const {
    if (components.empty())
      throw std::invalid_argument("WeightTuple: empty");
    for (const auto& w : components)
      for (double x : w.v)
        if (!(x > 0.0) || !std::isfinite(x))
          throw std::invalid_argument("WeightTuple: weights must be positive");
  }

  GridFunction product() const {
    GridFunction p = components[0];
    for (size_t j = 1; j < components.size(); ++j) p = gf_mul(p, components[j]);
    return p;
  }

  // (m+1)-extension: appends omega_{m+1} = (prod omega_j)^{-1}.
  WeightTuple extended() const {
    WeightTuple e = *this;
    e.components.push_back(gf_pow(product(), -1.0));
    return e;
  }

  static WeightTuple ones(const GridSpec& g, int m) {
    WeightTuple w;
    for (int j = 0; j < m; ++j)
      w.components.push_back(GridFunction::constant(g, 1.0));
    return w;
  }
};

struct ApValue {
  double value = 0.0;
  bool formal = false;  // p outside (1, inf): formula applied verbatim
};

// [w]_{A_p} = sup_Q <w>_{1,Q} * <w^{1/(1-p)}>_{1,Q}^{p-1} over all dyadic
// cubes (Lebesgue base measure).
ApValue ap_constant(const GridFunction& w, double p, const GridSpec& grid);

struct MultiweightReport {
  double value = 0.0;         // direct per-cube supremum
  double remark_value = 0.0;  // (m+1)-product rewriting
};

// [omega]_{(p,q),(r,s)} = sup_Q (prod_j <omega_j^{-1}>_{e_j,Q}) * <omega>_{e,Q}
// with e_j = 1/(1/r_j - 1/p_j) and e = 1/(1/q - 1/s); 1/0 is the inf-average.
// Asserts agreement of the two evaluations to 1e-10 relative.
MultiweightReport multiweight_constant(const WeightTuple& w,
                                       const ExponentConfig& cfg,
                                       const GridSpec& grid);

// Theta = max{ p_i/(p_i - r_i), q'/(q' - s') }.
double theta_exponent(const ExponentConfig& cfg);

// nu absent: sup_Q avg(|b - b_Q|, p, Q); nu present (p must be 1):
// sup_Q nu(Q)^{-1} int_Q |b - b_Q| dmu.
double bmo_norm(const GridFunction& b, double p,
                const std::optional<GridFunction>& nu, const GridSpec& grid,
                const Measure& mu);

enum class BloomVariant { kMaximal, kHolder };

struct BloomReport {
  int a = 0;              // floor(k_k r_k) for the designated index
  double gamma_k = 0.0;   // k_k r_k - (a - 1), in [1, 2)
  GridFunction nu;        // derived Bloom weight nu_k
  int big_l = 0;          // case 1: floor(s' sum k_l); case 2: floor(2 k_i0 s')
  double gamma1 = 0.0;    // matching fractional part, in [1, 2)
  GridFunction nu0;       // dual-side derived weight
  std::vector<double> c_values;  // composite constants per i in tau'
  double c_dual = 0.0;           // dual-side composite constant
  bool formal = false;    // some A_p evaluation used an index outside (1, inf)
};

// Derived Bloom weights nu_k = (u_k/omega_k)^{-r_k/(a + gamma_k - 1)} and the
// composite constants of the two bookkeeping cases.
BloomReport bloom_derive(const ExponentConfig& cfg, const WeightTuple& u,
                         const WeightTuple& omega, BloomVariant variant,
                         const GridSpec& grid);

// sup_Q (int_Q w |b - b_Q|^s dmu) / (w(Q) * bmo_norm(b,1)^s); 0 for constant b.
double john_nirenberg_ratio(const GridFunction& b, const GridFunction& w,
                            double s, const GridSpec& grid, const Measure& mu);

}  // namespace sparselab
