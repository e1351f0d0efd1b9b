#pragma once

// Lower-bound operator-norm estimation by structured test-function search
// (dyadic indicators, step functions, power spikes, weight-matched per-cube
// extremals) with coordinate-ascent refinement, and the maximal-operator /
// sparse-form / weight-characteristic equivalence report.

#include <functional>

#include "sparselab/sparsify.hpp"
#include "sparselab/weights.hpp"

namespace sparselab {

struct SearchConfig {
  int trials = 32;       // random candidates drawn per search
  uint64_t seed = 0;
  int indicator_level = 5;  // dyadic-indicator candidates up to this level
  int ascent_level = 4;     // coordinate ascent perturbs blocks at this level

  void validate() const {
    if (trials < 1)
      throw std::invalid_argument("SearchConfig: trials must be >= 1");
  }
};

// The functional whose norm is estimated: either a grid-function output whose
// L^q / weak-L^q size is measured, or a direct scalar functional (forms).
// Exactly one of vec / scalar must be set.
struct Evaluator {
  int arity = 1;
  std::function<GridFunction(const std::vector<GridFunction>&)> vec;
  std::function<double(const std::vector<GridFunction>&)> scalar;
};

// Lower-bound estimate of
//   sup ||ev(f)||_{L^q(omega^q dmu)} / prod_j ||f_j||_{L^{p_j}(omega_j^{p_j} dmu)}
// over the candidate families (omega = product of the tuple components; for a
// scalar evaluator the numerator is |ev(f)|). Deterministic given sc.seed;
// `extra` tuples are evaluated before the built-in families.
double strong_norm_search(
    const Evaluator& ev, const WeightTuple& w, const ExponentConfig& cfg,
    const SearchConfig& sc, const GridSpec& grid, const Measure& mu,
    const std::vector<std::vector<GridFunction>>& extra = {});

// Same with the weak quasi-norm ||ev(f)||_{L^{q,inf}(omega^q dmu)} in the
// numerator. Always evaluates the weight-matched extremal candidates
// f_j = v_j^{1/r_j} chi_Q, v_j = omega_j^{-e_j}, e_j = 1/(1/r_j - 1/p_j) over
// a deterministic cube set that includes the argmax cubes of the per-cube
// characteristic.
double weak_norm_search(
    const Evaluator& ev, const WeightTuple& w, const ExponentConfig& cfg,
    const SearchConfig& sc, const GridSpec& grid, const Measure& mu,
    const std::vector<std::vector<GridFunction>>& extra = {});

struct MaximalEquivReport {
  double char_const = 0.0;   // multiweight characteristic of the tuple
  double weak_est = 0.0;     // weak-type search estimate, rewritten form
  double strong_est = 0.0;   // strong-type search estimate, rewritten form
  double form_est = 0.0;     // sparse-form search estimate
  double weak_ratio = 0.0;   // weak_est / char_const (>= 1 up to rounding)
  double strong_band = 0.0;  // strong_est / form_est^{1+eta}
};

// Evaluates the equivalence chain characteristic <= weak <= strong ~ form on
// one weight tuple, via the (m+1)-linear rewriting (slot m+1 carries omega^-1
// with exponents r_{m+1} = s', p_{m+1} = q', target L^{1/(1+eta)} unweighted).
// Throws std::logic_error if char_const > weak_est * (1 + 1e-6).
MaximalEquivReport maximal_equiv_report(const WeightTuple& w,
                                        const ExponentConfig& cfg,
                                        const SearchConfig& sc,
                                        const GridSpec& grid);

// The (m+1)-linear rewriting of an m-linear configuration.
ExponentConfig extended_config(const ExponentConfig& cfg);

}  // namespace sparselab
