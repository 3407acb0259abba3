#pragma once

#include <optional>
#include <vector>

#include "coldrec/lbfgs.hpp"
#include "coldrec/types.hpp"

namespace coldrec {

// Link function applied entrywise to reconstructed side-information values:
// logistic for binary columns, identity otherwise.
double sigmoid_transform(double x, ColumnKind kind);

// Per-matrix regularization; entries left unset fall back to `base`.
struct Regularization {
  double base = 1e-4;
  std::optional<double> user_factors;       // A
  std::optional<double> item_factors;       // B
  std::optional<double> user_attr_factors;  // C
  std::optional<double> item_attr_factors;  // D
  std::optional<double> user_bias;          // m
  std::optional<double> item_bias;          // n

  double for_user_factors() const { return user_factors.value_or(base); }
  double for_item_factors() const { return item_factors.value_or(base); }
  double for_user_attr_factors() const { return user_attr_factors.value_or(base); }
  double for_item_attr_factors() const { return item_attr_factors.value_or(base); }
  double for_user_bias() const { return user_bias.value_or(base); }
  double for_item_bias() const { return item_bias.value_or(base); }

  void validate() const;
};

struct CmfHyperparams {
  Regularization reg;
  double w_ratings = 1.0;    // weight of the ratings factorization
  double w_user_info = 1.0;  // weight of the user-attribute factorization
  double w_item_info = 1.0;  // weight of the item-attribute factorization
  FactorPartition partition;

  void validate(bool has_ratings, bool has_user_info, bool has_item_info) const;
};

struct CmfModel {
  Matrix user_factors;       // n_users x k_total          (attr | shared | main)
  Matrix item_factors;       // n_items x k_total
  Matrix user_attr_factors;  // p x k_attributes
  Matrix item_attr_factors;  // q x k_attributes
  Vector user_bias;
  Vector item_bias;
  double global_mean = 0.0;
  FactorPartition partition;

  std::vector<ColumnKind> user_attr_kinds;  // column kinds of the U input
  std::vector<ColumnKind> item_attr_kinds;  // column kinds of the I input

  // Ridge strengths that make the closed-form fold-in reproduce the ALS row
  // update under the trained weights and loss normalization.
  double fold_in_lambda_user = 0.0;
  double fold_in_lambda_item = 0.0;

  int n_users() const { return static_cast<int>(user_factors.rows()); }
  int n_items() const { return static_cast<int>(item_factors.rows()); }
  int n_user_attrs() const { return static_cast<int>(user_attr_factors.rows()); }
  int n_item_attrs() const { return static_cast<int>(item_attr_factors.rows()); }

  // Ratings-facing factor rows (the shared+main column block).
  Vector user_ratings_row(int u) const {
    return user_factors.row(u).segment(partition.ratings_offset(), partition.k_ratings());
  }
  Vector item_ratings_row(int i) const {
    return item_factors.row(i).segment(partition.ratings_offset(), partition.k_ratings());
  }
};

// Fresh model with factor entries ~ N(0, 1/k_total), zero biases, global mean
// taken from the training ratings and never updated afterwards.
CmfModel cmf_init_model(int n_users, int n_items, int n_user_attrs, int n_item_attrs,
                        const CmfHyperparams& hyper, double global_mean,
                        std::uint64_t init_seed);

// Flat parameter vector in block order A, B, C, D, m, n (row-major blocks).
Vector cmf_pack_parameters(const CmfModel& model);
void cmf_unpack_parameters(const Vector& params, CmfModel& model);

// Weighted joint objective
//   w_x |I_x(X - mu - m - n - A_x B_x')|^2 / |X|
//   + w_u |U - S(A_u C')|^2 / |U| + w_i |I - S(B_i D')|^2 / |I|
//   + lambda (|A|^2 + |B|^2 + |C|^2 + |D|^2 + |m|^2 + |n|^2),
// attribute sums running over present rows only. Gradient covers A, B, C, D,
// m, n in pack order; the global mean stays fixed.
ObjectiveEvaluation cmf_objective(const CmfModel& model, const RatingsMatrix& ratings,
                                  const SideInfoMatrix* user_info,
                                  const SideInfoMatrix* item_info,
                                  const CmfHyperparams& hyper);

double cmf_objective_value(const CmfModel& model, const RatingsMatrix& ratings,
                           const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                           const CmfHyperparams& hyper);

struct CmfFitResult {
  CmfModel model;
  std::vector<double> objective_trace;  // initial value, then one entry per sweep/iteration
  std::optional<TerminationReason> termination;  // set by the gradient-based fit
};

// Alternating closed-form row updates (identity link only): A, B, C, D, then
// biases. Every block update solves its exact normal equations, so the full
// objective is non-increasing across sweeps.
CmfFitResult als_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                     const SideInfoMatrix* item_info, const CmfHyperparams& hyper,
                     int sweeps, std::uint64_t init_seed = 0);

CmfFitResult lbfgs_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                       const SideInfoMatrix* item_info, const CmfHyperparams& hyper,
                       const SolverConfig& solver, std::uint64_t init_seed = 0);

// Closed-form fold-in for a user known only through attributes:
//   a_u = (C'C + diag(lambda))^-1 C' u.
// Returns a full-width factor row (k_total) with the main block left at zero.
// Without an explicit lambda the model's training-equivalent ridge is used,
// which makes the result identical to the ALS row update for a ratings-less
// user.
Vector cold_start_user_factors(const Vector& user_attrs, const CmfModel& model,
                               std::optional<double> lambda = std::nullopt);
Vector cold_start_item_factors(const Vector& item_attrs, const CmfModel& model,
                               std::optional<double> lambda = std::nullopt);

// Gradient-based fold-in for attribute vectors with binary columns:
// minimizes |attrs - S(W a)|^2 + lambda |a|^2 from a zero start. Returns the
// attribute-block coefficients (length = columns of `attr_factor_matrix`).
Vector cold_start_factors_sigmoid(const Vector& attrs, const Matrix& attr_factor_matrix,
                                  const std::vector<ColumnKind>& column_kinds, double lambda,
                                  const SolverConfig& solver = {});

// Dispatching fold-in: sigmoid route when the trained attribute columns
// include binary ones, closed form otherwise. Full-width factor row out.
Vector fold_in_user(const CmfModel& model, const Vector& user_attrs,
                    std::optional<double> lambda = std::nullopt, const SolverConfig& solver = {});
Vector fold_in_item(const CmfModel& model, const Vector& item_attrs,
                    std::optional<double> lambda = std::nullopt, const SolverConfig& solver = {});

// mu + user_bias + item_bias + <a_x, b_x>, factors given in the ratings
// (shared+main) column layout. Cold-start callers pass zero biases and rows
// whose main block is zero, so the product effectively runs over the shared
// columns.
double cmf_predict(const CmfModel& model, const Vector& user_ratings_factors,
                   const Vector& item_ratings_factors, double user_bias, double item_bias);

// Convenience for a trained (user, item) pair.
double cmf_predict_warm(const CmfModel& model, int user, int item);

}  // namespace coldrec
