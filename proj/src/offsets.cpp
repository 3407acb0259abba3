#include "coldrec/offsets.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

#include "coldrec/rng.hpp"
#include "ratings_kernel.hpp"

namespace coldrec {

namespace {

void check_shapes(const OffsetsModel& model, const RatingsMatrix& ratings,
                  const SideInfoMatrix* user_info, const SideInfoMatrix* item_info) {
  if (model.user_offsets.cols() != model.item_offsets.cols())
    throw DataError("offsets: user and item factor widths differ");
  if (ratings.n_users() != model.n_users() || ratings.n_items() != model.n_items())
    throw DataError("offsets: ratings dimensions do not match the model");
  if (model.user_bias.size() != model.n_users() || model.item_bias.size() != model.n_items())
    throw DataError("offsets: bias vector length mismatch");
  if (user_info) {
    if (user_info->n_rows() != model.n_users())
      throw DataError("offsets: user attribute rows do not match the user count");
    if (model.user_attr_map.rows() != user_info->n_cols() ||
        model.user_attr_map.cols() != model.k())
      throw DataError("offsets: user attribute map has wrong shape");
  }
  if (item_info) {
    if (item_info->n_rows() != model.n_items())
      throw DataError("offsets: item attribute rows do not match the item count");
    if (model.item_attr_map.rows() != item_info->n_cols() ||
        model.item_attr_map.cols() != model.k())
      throw DataError("offsets: item attribute map has wrong shape");
  }
}

// Attribute-driven base rows: U C with absent rows left at zero.
Matrix masked_base(const SideInfoMatrix& info, const Matrix& attr_map, Eigen::Index n_rows,
                   Eigen::Index k) {
  Matrix base = Matrix::Zero(n_rows, k);
  for (Eigen::Index r = 0; r < n_rows; ++r)
    if (info.present(static_cast<int>(r)))
      base.row(r).noalias() = info.values.row(r) * attr_map;
  return base;
}

double objective_impl(const OffsetsModel& model, const RatingsMatrix& ratings,
                      const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                      const OffsetsPenalty& penalty, Vector* grad) {
  check_shapes(model, ratings, user_info, item_info);
  penalty.validate();

  const Eigen::Index k = model.k();
  const bool has_u = user_info != nullptr;
  const bool has_i = item_info != nullptr;

  Matrix user_rows_storage, item_rows_storage;
  if (has_u)
    user_rows_storage = model.user_offsets +
                        masked_base(*user_info, model.user_attr_map, model.n_users(), k);
  if (has_i)
    item_rows_storage = model.item_offsets +
                        masked_base(*item_info, model.item_attr_map, model.n_items(), k);
  const Matrix& user_rows = has_u ? user_rows_storage : model.user_offsets;
  const Matrix& item_rows = has_i ? item_rows_storage : model.item_offsets;

  Matrix grad_p, grad_q;
  Vector grad_m, grad_n;
  const double sse = detail::ratings_sse_grad(
      ratings, model.global_mean, model.user_bias, model.item_bias, user_rows, item_rows,
      grad ? &grad_p : nullptr, grad ? &grad_q : nullptr, grad ? &grad_m : nullptr,
      grad ? &grad_n : nullptr);

  const detail::RegTerms reg{penalty.offsets(), penalty.offsets(), penalty.lambda,
                             penalty.lambda,    penalty.lambda,    penalty.lambda};
  double value = sse;
  value += detail::reg_value(reg, model.user_offsets, model.item_offsets, model.user_attr_map,
                             model.item_attr_map, model.user_bias, model.item_bias);
  if (!grad) return value;

  Matrix grad_a = grad_p;
  Matrix grad_b = grad_q;
  Matrix grad_c = Matrix::Zero(model.user_attr_map.rows(), model.user_attr_map.cols());
  Matrix grad_d = Matrix::Zero(model.item_attr_map.rows(), model.item_attr_map.cols());
  if (has_u) {
    for (int u = 0; u < model.n_users(); ++u)
      if (user_info->present(u))
        grad_c.noalias() += user_info->values.row(u).transpose() * grad_p.row(u);
  }
  if (has_i) {
    for (int i = 0; i < model.n_items(); ++i)
      if (item_info->present(i))
        grad_d.noalias() += item_info->values.row(i).transpose() * grad_q.row(i);
  }
  grad_a += 2.0 * reg.user_factors * model.user_offsets;
  grad_b += 2.0 * reg.item_factors * model.item_offsets;
  grad_c += 2.0 * reg.user_attr_factors * model.user_attr_map;
  grad_d += 2.0 * reg.item_attr_factors * model.item_attr_map;
  grad_m += 2.0 * reg.user_bias * model.user_bias;
  grad_n += 2.0 * reg.item_bias * model.item_bias;
  detail::pack_blocks(grad_a, grad_b, grad_c, grad_d, grad_m, grad_n, *grad);
  return value;
}

OffsetsModel init_model(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                        const SideInfoMatrix* item_info, int n_factors,
                        std::uint64_t init_seed) {
  if (n_factors < 1) throw ConfigError("offsets: n_factors must be >= 1");
  const double sigma = 1.0 / std::sqrt(static_cast<double>(n_factors));

  Rng rng(init_seed);
  auto fill = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = sigma * rng.next_normal();
  };

  OffsetsModel model;
  fill(model.user_offsets, ratings.n_users(), n_factors);
  fill(model.item_offsets, ratings.n_items(), n_factors);
  model.user_attr_map = Matrix::Zero(user_info ? user_info->n_cols() : 0, n_factors);
  model.item_attr_map = Matrix::Zero(item_info ? item_info->n_cols() : 0, n_factors);
  model.user_bias = Vector::Zero(ratings.n_users());
  model.item_bias = Vector::Zero(ratings.n_items());
  model.global_mean =
      ratings.empty() ? 0.0 : ratings.sum() / static_cast<double>(ratings.n_entries());
  return model;
}

void stamp_bases(OffsetsModel& model, const SideInfoMatrix* user_info,
                 const SideInfoMatrix* item_info) {
  const Eigen::Index k = model.k();
  model.user_base = user_info ? masked_base(*user_info, model.user_attr_map,
                                            model.n_users(), k)
                              : Matrix::Zero(model.n_users(), k);
  model.item_base = item_info ? masked_base(*item_info, model.item_attr_map,
                                            model.n_items(), k)
                              : Matrix::Zero(model.n_items(), k);
}

}  // namespace

void OffsetsPenalty::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("OffsetsPenalty: lambda must be >= 0");
  if (!(offsets() >= 0.0))
    throw ConfigError("OffsetsPenalty: free-offset lambda must be >= 0");
}

ObjectiveEvaluation offsets_objective(const OffsetsModel& model, const RatingsMatrix& ratings,
                                      const SideInfoMatrix* user_info,
                                      const SideInfoMatrix* item_info,
                                      const OffsetsPenalty& penalty) {
  ObjectiveEvaluation eval;
  eval.value = objective_impl(model, ratings, user_info, item_info, penalty, &eval.gradient);
  return eval;
}

double offsets_objective_value(const OffsetsModel& model, const RatingsMatrix& ratings,
                               const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                               const OffsetsPenalty& penalty) {
  return objective_impl(model, ratings, user_info, item_info, penalty, nullptr);
}

Vector offsets_pack_parameters(const OffsetsModel& model) {
  Vector out;
  detail::pack_blocks(model.user_offsets, model.item_offsets, model.user_attr_map,
                      model.item_attr_map, model.user_bias, model.item_bias, out);
  return out;
}

void offsets_unpack_parameters(const Vector& params, OffsetsModel& model) {
  detail::unpack_blocks(params, model.user_offsets, model.item_offsets, model.user_attr_map,
                        model.item_attr_map, model.user_bias, model.item_bias);
}

OffsetsFitResult offsets_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                             const SideInfoMatrix* item_info, const OffsetsPenalty& penalty,
                             const SolverConfig& solver, std::uint64_t init_seed,
                             int n_factors) {
  penalty.validate();
  if (ratings.empty()) throw DataError("offsets_fit: ratings matrix is empty");

  OffsetsFitResult result;
  result.model = init_model(ratings, user_info, item_info, n_factors, init_seed);
  OffsetsModel& model = result.model;
  check_shapes(model, ratings, user_info, item_info);

  OffsetsModel scratch = model;
  const Objective objective = [&](const Vector& params) {
    offsets_unpack_parameters(params, scratch);
    return offsets_objective(scratch, ratings, user_info, item_info, penalty);
  };

  SolverResult solved = lbfgs_minimize(objective, offsets_pack_parameters(model), solver);
  offsets_unpack_parameters(solved.x, model);
  result.objective_trace = std::move(solved.trace);
  result.termination = solved.reason;

  stamp_bases(model, user_info, item_info);
  return result;
}

namespace {

// Ridge regression of stage-1 factors on attributes over the present rows:
// (U'U + lambda I) C = U' A*.
Matrix regress_factors_on_attrs(const Matrix& stage1_factors, const SideInfoMatrix& info,
                                double lambda, const char* side) {
  const Eigen::Index p = info.n_cols();
  const Eigen::Index k = stage1_factors.cols();
  Matrix gram = Matrix::Zero(p, p);
  Matrix rhs = Matrix::Zero(p, k);
  for (int r = 0; r < info.n_rows(); ++r) {
    if (!info.present(r)) continue;
    gram.noalias() += info.values.row(r).transpose() * info.values.row(r);
    rhs.noalias() += info.values.row(r).transpose() * stage1_factors.row(r);
  }
  gram.diagonal().array() += lambda;
  if (lambda > 0.0) return gram.ldlt().solve(rhs);
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible())
    throw DataError(std::string("offsets_two_stage_fit: singular stage-2 system for ") + side +
                    " attributes (lambda = 0 and rank-deficient attribute matrix)");
  return lu.solve(rhs);
}

}  // namespace

OffsetsFitResult offsets_two_stage_fit(const RatingsMatrix& ratings,
                                       const SideInfoMatrix* user_info,
                                       const SideInfoMatrix* item_info,
                                       const OffsetsPenalty& penalty,
                                       const SolverConfig& solver, std::uint64_t init_seed,
                                       int n_factors) {
  OffsetsFitResult result =
      offsets_fit(ratings, nullptr, nullptr, penalty, solver, init_seed, n_factors);
  OffsetsModel& model = result.model;

  if (user_info) {
    if (user_info->n_rows() != model.n_users())
      throw DataError("offsets_two_stage_fit: user attribute rows do not match");
    model.user_attr_map =
        regress_factors_on_attrs(model.user_offsets, *user_info, penalty.lambda, "user");
    model.user_offsets -= masked_base(*user_info, model.user_attr_map, model.n_users(),
                                      model.k());
  }
  if (item_info) {
    if (item_info->n_rows() != model.n_items())
      throw DataError("offsets_two_stage_fit: item attribute rows do not match");
    model.item_attr_map =
        regress_factors_on_attrs(model.item_offsets, *item_info, penalty.lambda, "item");
    model.item_offsets -= masked_base(*item_info, model.item_attr_map, model.n_items(),
                                      model.k());
  }

  stamp_bases(model, user_info, item_info);
  return result;
}

Vector offsets_user_vector(const Vector& user_attrs, const OffsetsModel& model) {
  if (user_attrs.size() != model.user_attr_map.rows())
    throw DataError("offsets_user_vector: attribute vector length mismatch");
  if (model.user_attr_map.rows() == 0)
    throw ConfigError("offsets_user_vector: model was not trained with user attributes");
  return model.user_attr_map.transpose() * user_attrs;
}

Vector offsets_item_vector(const Vector& item_attrs, const OffsetsModel& model) {
  if (item_attrs.size() != model.item_attr_map.rows())
    throw DataError("offsets_item_vector: attribute vector length mismatch");
  if (model.item_attr_map.rows() == 0)
    throw ConfigError("offsets_item_vector: model was not trained with item attributes");
  return model.item_attr_map.transpose() * item_attrs;
}

Vector offsets_predict_new_user(const Vector& user_attrs, const OffsetsModel& model,
                                const std::vector<int>* item_subset) {
  const Vector user_vec = offsets_user_vector(user_attrs, model);
  auto score_item = [&](int i) {
    return model.global_mean + user_vec.dot(model.item_effective_row(i)) + model.item_bias[i];
  };
  if (item_subset) {
    Vector scores(static_cast<Eigen::Index>(item_subset->size()));
    for (std::size_t j = 0; j < item_subset->size(); ++j) {
      const int i = (*item_subset)[j];
      if (i < 0 || i >= model.n_items())
        throw DataError("offsets_predict_new_user: item index out of range");
      scores[static_cast<Eigen::Index>(j)] = score_item(i);
    }
    return scores;
  }
  Vector scores(model.n_items());
  for (int i = 0; i < model.n_items(); ++i) scores[i] = score_item(i);
  return scores;
}

double offsets_predict(const OffsetsModel& model, const EntityRef& user,
                       const EntityRef& item) {
  Vector user_vec = Vector::Zero(model.k());
  double user_bias = 0.0;
  if (user.index) {
    if (*user.index < 0 || *user.index >= model.n_users())
      throw DataError("offsets_predict: user index out of range");
    user_vec = model.user_effective_row(*user.index);
    user_bias = model.user_bias[*user.index];
  } else if (user.attrs) {
    user_vec = offsets_user_vector(*user.attrs, model);
  }

  Vector item_vec = Vector::Zero(model.k());
  double item_bias = 0.0;
  if (item.index) {
    if (*item.index < 0 || *item.index >= model.n_items())
      throw DataError("offsets_predict: item index out of range");
    item_vec = model.item_effective_row(*item.index);
    item_bias = model.item_bias[*item.index];
  } else if (item.attrs) {
    item_vec = offsets_item_vector(*item.attrs, model);
  }

  return model.global_mean + user_bias + item_bias + user_vec.dot(item_vec);
}

}  // namespace coldrec
