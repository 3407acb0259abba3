#pragma once

#include <optional>
#include <vector>

#include "coldrec/lbfgs.hpp"
#include "coldrec/types.hpp"

namespace coldrec {

struct OffsetsPenalty {
  double lambda = 1e-4;
  // Optional stronger ridge on the free offsets A and B only.
  std::optional<double> free_offset_lambda;

  double offsets() const { return free_offset_lambda.value_or(lambda); }
  void validate() const;
};

// Additive-decomposition model: effective factors are an attribute-driven
// base (U C, I D) plus a free per-entity offset (A, B). Rows without side
// information have a zero base.
struct OffsetsModel {
  Matrix user_offsets;   // A: n_users x k
  Matrix item_offsets;   // B: n_items x k
  Matrix user_attr_map;  // C: p x k
  Matrix item_attr_map;  // D: q x k
  Vector user_bias;
  Vector item_bias;
  double global_mean = 0.0;

  // Cached attribute-driven bases for the training entities, stamped after
  // fitting so warm predictions need no side-information matrix.
  Matrix user_base;  // n_users x k
  Matrix item_base;  // n_items x k

  int n_users() const { return static_cast<int>(user_offsets.rows()); }
  int n_items() const { return static_cast<int>(item_offsets.rows()); }
  int k() const { return static_cast<int>(user_offsets.cols()); }
  int n_user_attrs() const { return static_cast<int>(user_attr_map.rows()); }
  int n_item_attrs() const { return static_cast<int>(item_attr_map.rows()); }

  Vector user_effective_row(int u) const { return user_offsets.row(u) + user_base.row(u); }
  Vector item_effective_row(int i) const { return item_offsets.row(i) + item_base.row(i); }
};

// |I_x(X - mu - m - n - (A + UC)(B + ID)')|^2
//   + lambda_offsets (|A|^2 + |B|^2) + lambda (|C|^2 + |D|^2 + |m|^2 + |n|^2).
// No per-matrix normalization. Gradient covers A, B, C, D, m, n in pack
// order; mu stays fixed.
ObjectiveEvaluation offsets_objective(const OffsetsModel& model, const RatingsMatrix& ratings,
                                      const SideInfoMatrix* user_info,
                                      const SideInfoMatrix* item_info,
                                      const OffsetsPenalty& penalty);

double offsets_objective_value(const OffsetsModel& model, const RatingsMatrix& ratings,
                               const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                               const OffsetsPenalty& penalty);

Vector offsets_pack_parameters(const OffsetsModel& model);
void offsets_unpack_parameters(const Vector& params, OffsetsModel& model);

struct OffsetsFitResult {
  OffsetsModel model;
  std::vector<double> objective_trace;
  std::optional<TerminationReason> termination;
};

// Joint gradient-based fit. Free offsets start from N(0, 1/k) draws; the
// attribute maps C and D start at zero, so absent or all-zero side
// information reduces the run to plain biased MF exactly.
OffsetsFitResult offsets_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                             const SideInfoMatrix* item_info, const OffsetsPenalty& penalty,
                             const SolverConfig& solver, std::uint64_t init_seed,
                             int n_factors);

// Two-stage alternative: fit plain MF first, then solve the ridge
// least-squares problems C = argmin |A* - UC|^2, D likewise, and re-base the
// offsets as residuals A = A* - UC, B = B* - ID.
OffsetsFitResult offsets_two_stage_fit(const RatingsMatrix& ratings,
                                       const SideInfoMatrix* user_info,
                                       const SideInfoMatrix* item_info,
                                       const OffsetsPenalty& penalty,
                                       const SolverConfig& solver, std::uint64_t init_seed,
                                       int n_factors);

// Cold-start factors from attributes alone: a plain vector-matrix product,
// no linear solve.
Vector offsets_user_vector(const Vector& user_attrs, const OffsetsModel& model);
Vector offsets_item_vector(const Vector& item_attrs, const OffsetsModel& model);

// Scores a new user against known items: mu + uC (B + ID)' + n, restricted
// to `item_subset` when given. The user bias of an unseen user is zero.
Vector offsets_predict_new_user(const Vector& user_attrs, const OffsetsModel& model,
                                const std::vector<int>* item_subset = nullptr);

// One side of a prediction: a trained row, an attribute vector to fold in,
// or nothing at all (zero factors and bias).
struct EntityRef {
  std::optional<int> index;
  std::optional<Vector> attrs;

  static EntityRef known(int idx) { return {idx, std::nullopt}; }
  static EntityRef from_attrs(Vector a) { return {std::nullopt, std::move(a)}; }
  static EntityRef cold() { return {std::nullopt, std::nullopt}; }
};

double offsets_predict(const OffsetsModel& model, const EntityRef& user, const EntityRef& item);

}  // namespace coldrec
