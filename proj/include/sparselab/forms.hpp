#pragma once

// The (m+1)-linear fractional sparse forms and the constant-1 reduction
// inequality between the higher-order form and its reduced companions.

#include "sparselab/exponents.hpp"
#include "sparselab/operators.hpp"

namespace sparselab {

struct FormInputs {
  std::vector<GridFunction> f;  // m input functions
  GridFunction g;               // dual-side function
  std::vector<GridFunction> b;  // m symbols
  ExponentConfig cfg;
  SparseFamily s;
  GridSpec grid;
  Measure mu;

  void validate() const;
};

// sum_Q mu(Q)^{eta+1} * prod_{j=1..m} avg(f_j, r_j, Q) * avg(g, r_last, Q).
double plain_form(const FormInputs& in, double r_last);

// Higher-order multi-symbol form: oscillation factors |b_i - b_{i,Q}| split
// as t_i powers on the f_i side and k_i - t_i powers on the g side.
double form_A(const FormInputs& in);

// Reduced form: full k_i powers either on the f_i side (i in tau') or on the
// g side (i in tau \ tau').
double form_B(const FormInputs& in);

struct ReduceReport {
  double lhs = 0.0;              // form_A
  double rhs = 0.0;              // sum over tau' subset tau of form_B
  bool holds = false;            // lhs <= rhs * (1 + 1e-10)
  double worst_cube_margin = 0.0;  // min over cubes of (rhs_Q - lhs_Q)/rhs_Q
};

// Checks the reduction inequality globally and cube by cube (the per-cube
// inequality also holds with constant 1).
ReduceReport reduce_check(const FormInputs& in);

}  // namespace sparselab
