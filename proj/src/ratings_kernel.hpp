#pragma once

#include <vector>

#include "coldrec/types.hpp"

// Internal kernels shared by the cmf and offsets objectives. Keeping the
// arithmetic in one place means the two objectives coincide bitwise whenever
// they coincide mathematically (e.g. plain biased MF), which the degeneracy
// tests rely on.

namespace coldrec::detail {

// SSE of observed-entry residuals r_ui = X_ui - mu - m_u - n_i - <p_u, q_i>,
// with optional unscaled gradients (overwritten, not accumulated):
//   grad_p row u = sum_i -2 e_ui q_i      grad_m[u] = sum_i -2 e_ui
//   grad_q row i = sum_u -2 e_ui p_u      grad_n[i] = sum_u -2 e_ui
// Per-row accumulation runs in a fixed order, so results do not depend on the
// number of worker threads.
double ratings_sse_grad(const RatingsMatrix& ratings, double mu, const Vector& m,
                        const Vector& n, const Matrix& user_rows, const Matrix& item_rows,
                        Matrix* grad_p, Matrix* grad_q, Vector* grad_m, Vector* grad_n);

// SSE of a dense side-information factorization S(F W') against `info`,
// restricted to present rows; link function per column kind. Gradients are
// overwritten: grad_f is d/dF, grad_w is d/dW, both of the unscaled SSE.
double attr_sse_grad(const SideInfoMatrix& info, const Matrix& entity_rows,
                     const Matrix& attr_factor_rows, Matrix* grad_f, Matrix* grad_w);

struct RegTerms {
  double user_factors = 0.0;
  double item_factors = 0.0;
  double user_attr_factors = 0.0;
  double item_attr_factors = 0.0;
  double user_bias = 0.0;
  double item_bias = 0.0;
};

// lambda-weighted squared Frobenius/2-norms summed in a fixed block order.
double reg_value(const RegTerms& reg, const Matrix& a, const Matrix& b, const Matrix& c,
                 const Matrix& d, const Vector& m, const Vector& n);

// Flat parameter packing in block order A, B, C, D, m, n.
Eigen::Index packed_size(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
                         const Vector& m, const Vector& n);
void pack_blocks(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
                 const Vector& m, const Vector& n, Vector& out);
void unpack_blocks(const Vector& in, Matrix& a, Matrix& b, Matrix& c, Matrix& d, Vector& m,
                   Vector& n);

}  // namespace coldrec::detail
