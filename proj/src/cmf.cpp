#include "coldrec/cmf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

#include "coldrec/rng.hpp"
#include "ratings_kernel.hpp"

namespace coldrec {

namespace {

detail::RegTerms reg_terms(const Regularization& reg) {
  return {reg.for_user_factors(),      reg.for_item_factors(), reg.for_user_attr_factors(),
          reg.for_item_attr_factors(), reg.for_user_bias(),    reg.for_item_bias()};
}

bool use_ratings(const CmfHyperparams& hyper, const RatingsMatrix& ratings) {
  return hyper.w_ratings > 0.0 && !ratings.empty();
}

bool use_info(double weight, const SideInfoMatrix* info) {
  return info != nullptr && weight > 0.0 && info->loss_entry_count() > 0;
}

void check_shapes(const CmfModel& model, const RatingsMatrix& ratings,
                  const SideInfoMatrix* user_info, const SideInfoMatrix* item_info) {
  const FactorPartition& part = model.partition;
  if (model.user_factors.cols() != part.k_total() ||
      model.item_factors.cols() != part.k_total())
    throw DataError("cmf: factor matrices do not match the partition width");
  if (ratings.n_users() != model.n_users() || ratings.n_items() != model.n_items())
    throw DataError("cmf: ratings dimensions do not match the model");
  if (model.user_bias.size() != model.n_users() || model.item_bias.size() != model.n_items())
    throw DataError("cmf: bias vector length mismatch");
  if (user_info) {
    if (user_info->n_rows() != model.n_users())
      throw DataError("cmf: user attribute rows do not match the user count");
    if (model.user_attr_factors.rows() != user_info->n_cols() ||
        model.user_attr_factors.cols() != part.k_attributes())
      throw DataError("cmf: user attribute factor matrix has wrong shape");
  }
  if (item_info) {
    if (item_info->n_rows() != model.n_items())
      throw DataError("cmf: item attribute rows do not match the item count");
    if (model.item_attr_factors.rows() != item_info->n_cols() ||
        model.item_attr_factors.cols() != part.k_attributes())
      throw DataError("cmf: item attribute factor matrix has wrong shape");
  }
}

// Solves M x = rhs with the appropriate factorization; lambda == 0 falls back
// to a rank-revealing decomposition so singularity is reported, not silently
// produced.
Vector solve_normal_equations(const Matrix& m, const Vector& rhs, double lambda,
                              const std::string& what) {
  if (lambda > 0.0) return m.ldlt().solve(rhs);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible())
    throw DataError("als_fit: singular normal equations for " + what +
                    "; increase the regularization");
  return lu.solve(rhs);
}

Matrix solve_normal_equations_multi(const Matrix& m, const Matrix& rhs, double lambda,
                                    const std::string& what) {
  if (lambda > 0.0) return m.ldlt().solve(rhs);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible())
    throw DataError("als_fit: singular normal equations for " + what +
                    "; increase the regularization");
  return lu.solve(rhs);
}

struct Scales {
  double ratings = 0.0;    // w_x / |X|
  double user_info = 0.0;  // w_u / |U|
  double item_info = 0.0;  // w_i / |I|
  bool has_ratings = false;
  bool has_user_info = false;
  bool has_item_info = false;
};

Scales make_scales(const CmfHyperparams& hyper, const RatingsMatrix& ratings,
                   const SideInfoMatrix* user_info, const SideInfoMatrix* item_info) {
  Scales s;
  s.has_ratings = use_ratings(hyper, ratings);
  s.has_user_info = use_info(hyper.w_user_info, user_info);
  s.has_item_info = use_info(hyper.w_item_info, item_info);
  if (s.has_ratings) s.ratings = hyper.w_ratings / static_cast<double>(ratings.n_entries());
  if (s.has_user_info)
    s.user_info = hyper.w_user_info / static_cast<double>(user_info->loss_entry_count());
  if (s.has_item_info)
    s.item_info = hyper.w_item_info / static_cast<double>(item_info->loss_entry_count());
  return s;
}

}  // namespace

double sigmoid_transform(double x, ColumnKind kind) {
  if (kind == ColumnKind::Binary) return 1.0 / (1.0 + std::exp(-x));
  return x;
}

void Regularization::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ConfigError(std::string("Regularization: ") + name + " must be >= 0");
  };
  check(base, "lambda");
  check(for_user_factors(), "lambda(user factors)");
  check(for_item_factors(), "lambda(item factors)");
  check(for_user_attr_factors(), "lambda(user attribute factors)");
  check(for_item_attr_factors(), "lambda(item attribute factors)");
  check(for_user_bias(), "lambda(user bias)");
  check(for_item_bias(), "lambda(item bias)");
}

void CmfHyperparams::validate(bool has_ratings, bool has_user_info, bool has_item_info) const {
  reg.validate();
  if (w_ratings < 0.0 || w_user_info < 0.0 || w_item_info < 0.0)
    throw ConfigError("CmfHyperparams: factorization weights must be >= 0");
  if (w_ratings == 0.0 && w_user_info == 0.0 && w_item_info == 0.0)
    throw ConfigError("CmfHyperparams: at least one factorization weight must be > 0");
  const bool fits_ratings = has_ratings && w_ratings > 0.0;
  const bool fits_attrs =
      (has_user_info && w_user_info > 0.0) || (has_item_info && w_item_info > 0.0);
  partition.validate(fits_ratings, fits_attrs);
}

CmfModel cmf_init_model(int n_users, int n_items, int n_user_attrs, int n_item_attrs,
                        const CmfHyperparams& hyper, double global_mean,
                        std::uint64_t init_seed) {
  const FactorPartition& part = hyper.partition;
  const int k = part.k_total();
  const double sigma = k > 0 ? 1.0 / std::sqrt(static_cast<double>(k)) : 0.0;

  Rng rng(init_seed);
  auto fill = [&](Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = sigma * rng.next_normal();
  };

  CmfModel model;
  model.partition = part;
  model.global_mean = global_mean;
  fill(model.user_factors, n_users, k);
  fill(model.item_factors, n_items, k);
  fill(model.user_attr_factors, n_user_attrs, part.k_attributes());
  fill(model.item_attr_factors, n_item_attrs, part.k_attributes());
  model.user_bias = Vector::Zero(n_users);
  model.item_bias = Vector::Zero(n_items);
  return model;
}

Vector cmf_pack_parameters(const CmfModel& model) {
  Vector out;
  detail::pack_blocks(model.user_factors, model.item_factors, model.user_attr_factors,
                      model.item_attr_factors, model.user_bias, model.item_bias, out);
  return out;
}

void cmf_unpack_parameters(const Vector& params, CmfModel& model) {
  detail::unpack_blocks(params, model.user_factors, model.item_factors,
                        model.user_attr_factors, model.item_attr_factors, model.user_bias,
                        model.item_bias);
}

namespace {

// Shared by cmf_objective and cmf_objective_value; gradient work is skipped
// when `grad` is null.
double objective_impl(const CmfModel& model, const RatingsMatrix& ratings,
                      const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                      const CmfHyperparams& hyper, Vector* grad) {
  check_shapes(model, ratings, user_info, item_info);
  hyper.validate(!ratings.empty(), user_info != nullptr, item_info != nullptr);
  if (hyper.w_ratings > 0.0 && ratings.empty())
    throw DataError("cmf_objective: ratings matrix is empty but w_ratings > 0");

  const FactorPartition& part = model.partition;
  const Scales scales = make_scales(hyper, ratings, user_info, item_info);

  Matrix grad_a, grad_b, grad_c, grad_d;
  Vector grad_m, grad_n;
  if (grad) {
    grad_a.setZero(model.user_factors.rows(), model.user_factors.cols());
    grad_b.setZero(model.item_factors.rows(), model.item_factors.cols());
    grad_c.setZero(model.user_attr_factors.rows(), model.user_attr_factors.cols());
    grad_d.setZero(model.item_attr_factors.rows(), model.item_attr_factors.cols());
    grad_m.setZero(model.user_bias.size());
    grad_n.setZero(model.item_bias.size());
  }

  double value = 0.0;

  if (scales.has_ratings) {
    const Matrix user_x = model.user_factors.middleCols(part.ratings_offset(), part.k_ratings());
    const Matrix item_x = model.item_factors.middleCols(part.ratings_offset(), part.k_ratings());
    Matrix gp, gq;
    Vector gm, gn;
    const double sse = detail::ratings_sse_grad(
        ratings, model.global_mean, model.user_bias, model.item_bias, user_x, item_x,
        grad ? &gp : nullptr, grad ? &gq : nullptr, grad ? &gm : nullptr, grad ? &gn : nullptr);
    value += scales.ratings * sse;
    if (grad) {
      grad_a.middleCols(part.ratings_offset(), part.k_ratings()) = scales.ratings * gp;
      grad_b.middleCols(part.ratings_offset(), part.k_ratings()) = scales.ratings * gq;
      grad_m = scales.ratings * gm;
      grad_n = scales.ratings * gn;
    }
  }

  if (scales.has_user_info) {
    const Matrix user_u = model.user_factors.leftCols(part.k_attributes());
    Matrix gf, gw;
    const double sse = detail::attr_sse_grad(*user_info, user_u, model.user_attr_factors,
                                             grad ? &gf : nullptr, grad ? &gw : nullptr);
    value += scales.user_info * sse;
    if (grad) {
      grad_a.leftCols(part.k_attributes()) += scales.user_info * gf;
      grad_c = scales.user_info * gw;
    }
  }

  if (scales.has_item_info) {
    const Matrix item_i = model.item_factors.leftCols(part.k_attributes());
    Matrix gf, gw;
    const double sse = detail::attr_sse_grad(*item_info, item_i, model.item_attr_factors,
                                             grad ? &gf : nullptr, grad ? &gw : nullptr);
    value += scales.item_info * sse;
    if (grad) {
      grad_b.leftCols(part.k_attributes()) += scales.item_info * gf;
      grad_d = scales.item_info * gw;
    }
  }

  const detail::RegTerms reg = reg_terms(hyper.reg);
  value += detail::reg_value(reg, model.user_factors, model.item_factors,
                             model.user_attr_factors, model.item_attr_factors,
                             model.user_bias, model.item_bias);

  if (grad) {
    grad_a += 2.0 * reg.user_factors * model.user_factors;
    grad_b += 2.0 * reg.item_factors * model.item_factors;
    grad_c += 2.0 * reg.user_attr_factors * model.user_attr_factors;
    grad_d += 2.0 * reg.item_attr_factors * model.item_attr_factors;
    grad_m += 2.0 * reg.user_bias * model.user_bias;
    grad_n += 2.0 * reg.item_bias * model.item_bias;
    detail::pack_blocks(grad_a, grad_b, grad_c, grad_d, grad_m, grad_n, *grad);
  }
  return value;
}

}  // namespace

ObjectiveEvaluation cmf_objective(const CmfModel& model, const RatingsMatrix& ratings,
                                  const SideInfoMatrix* user_info,
                                  const SideInfoMatrix* item_info,
                                  const CmfHyperparams& hyper) {
  ObjectiveEvaluation eval;
  eval.value = objective_impl(model, ratings, user_info, item_info, hyper, &eval.gradient);
  return eval;
}

double cmf_objective_value(const CmfModel& model, const RatingsMatrix& ratings,
                           const SideInfoMatrix* user_info, const SideInfoMatrix* item_info,
                           const CmfHyperparams& hyper) {
  return objective_impl(model, ratings, user_info, item_info, hyper, nullptr);
}

namespace {

// One pass of closed-form row updates over the user (or, transposed via
// arguments, item) factor matrix. Solves the block normal equations per row,
// restricted to the entries observed for that row.
void update_entity_factors(Matrix& factors, const Matrix& other_factors,
                           const Vector& own_bias, const Vector& other_bias,
                           const RatingsMatrix& ratings, bool by_user,
                           const SideInfoMatrix* info, const Matrix& attr_factors,
                           double scale_ratings, double scale_info, double lambda_rows,
                           double mu, const FactorPartition& part) {
  const int n_rows = static_cast<int>(factors.rows());
  const int k = part.k_total();
  const int k_x = part.k_ratings();
  const int k_au = part.k_attributes();
  const int off_x = part.ratings_offset();

  Matrix attr_gram;
  if (scale_info > 0.0 && k_au > 0)
    attr_gram = attr_factors.transpose() * attr_factors;  // k_au x k_au

  const auto& entries = ratings.entries();
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 16)
  for (int row = 0; row < n_rows; ++row) {
    try {
      const auto& adjacency = by_user ? ratings.user_entries(row) : ratings.item_entries(row);
      const bool has_ratings = scale_ratings > 0.0 && !adjacency.empty();
      const bool has_attrs = scale_info > 0.0 && info->present(row);
      if (!has_ratings && !has_attrs) {
        factors.row(row).setZero();
        continue;
      }

      Matrix system = Matrix::Zero(k, k);
      system.diagonal().setConstant(lambda_rows);
      Vector rhs = Vector::Zero(k);

      if (has_ratings) {
        for (std::size_t idx : adjacency) {
          const Rating& r = entries[idx];
          const int other = by_user ? r.item : r.user;
          const auto other_x = other_factors.row(other).segment(off_x, k_x);
          const double target = r.value - mu - own_bias[row] - other_bias[other];
          system.block(off_x, off_x, k_x, k_x).noalias() +=
              scale_ratings * (other_x.transpose() * other_x);
          rhs.segment(off_x, k_x).noalias() += (scale_ratings * target) * other_x.transpose();
        }
      }
      if (has_attrs) {
        system.topLeftCorner(k_au, k_au) += scale_info * attr_gram;
        rhs.head(k_au).noalias() +=
            scale_info * (attr_factors.transpose() * info->values.row(row).transpose());
      }

      factors.row(row) =
          solve_normal_equations(system, rhs, lambda_rows,
                                 (by_user ? std::string("user row ") : std::string("item row ")) +
                                     std::to_string(row))
              .transpose();
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Closed-form update of an attribute factor matrix (C or D): every row shares
// the same Gram matrix of entity attribute-block rows.
void update_attr_factors(Matrix& attr_factors, const Matrix& entity_factors,
                         const SideInfoMatrix& info, double scale_info, double lambda,
                         const FactorPartition& part, const char* what) {
  const int k_au = part.k_attributes();
  if (k_au == 0 || scale_info <= 0.0) return;

  Matrix gram = Matrix::Zero(k_au, k_au);
  Matrix rhs = Matrix::Zero(k_au, info.n_cols());
  for (int r = 0; r < info.n_rows(); ++r) {
    if (!info.present(r)) continue;
    const auto row_u = entity_factors.row(r).head(k_au);
    gram.noalias() += row_u.transpose() * row_u;
    rhs.noalias() += row_u.transpose() * info.values.row(r);
  }
  gram *= scale_info;
  rhs *= scale_info;
  gram.diagonal().array() += lambda;
  attr_factors = solve_normal_equations_multi(gram, rhs, lambda, what).transpose();
}

// Closed-form bias update given everything else fixed.
void update_biases(Vector& bias, const Vector& other_bias, const Matrix& factors,
                   const Matrix& other_factors, const RatingsMatrix& ratings, bool by_user,
                   double scale_ratings, double lambda, double mu,
                   const FactorPartition& part) {
  const int n_rows = static_cast<int>(bias.size());
  const int k_x = part.k_ratings();
  const int off_x = part.ratings_offset();
  const auto& entries = ratings.entries();

#pragma omp parallel for schedule(dynamic, 64)
  for (int row = 0; row < n_rows; ++row) {
    const auto& adjacency = by_user ? ratings.user_entries(row) : ratings.item_entries(row);
    if (scale_ratings <= 0.0 || adjacency.empty()) {
      bias[row] = 0.0;
      continue;
    }
    double numerator = 0.0;
    for (std::size_t idx : adjacency) {
      const Rating& r = entries[idx];
      const int other_index = by_user ? r.item : r.user;
      const double dot = factors.row(row).segment(off_x, k_x).dot(
          other_factors.row(other_index).segment(off_x, k_x));
      numerator += r.value - mu - other_bias[other_index] - dot;
    }
    numerator *= scale_ratings;
    const double denominator =
        scale_ratings * static_cast<double>(adjacency.size()) + lambda;
    bias[row] = numerator / denominator;
  }
}

double effective_fold_in_lambda(double lambda_rows, double scale_info) {
  // ALS row system: (scale * W'W + lambda I) a = scale * W'attrs, i.e. a ridge
  // solve with lambda / scale.
  return scale_info > 0.0 ? lambda_rows / scale_info : lambda_rows;
}

void stamp_model_metadata(CmfModel& model, const SideInfoMatrix* user_info,
                          const SideInfoMatrix* item_info, const Scales& scales,
                          const CmfHyperparams& hyper) {
  if (user_info) model.user_attr_kinds = user_info->column_kinds;
  if (item_info) model.item_attr_kinds = item_info->column_kinds;
  model.fold_in_lambda_user =
      effective_fold_in_lambda(hyper.reg.for_user_factors(), scales.user_info);
  model.fold_in_lambda_item =
      effective_fold_in_lambda(hyper.reg.for_item_factors(), scales.item_info);
}

}  // namespace

CmfFitResult als_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                     const SideInfoMatrix* item_info, const CmfHyperparams& hyper,
                     int sweeps, std::uint64_t init_seed) {
  if (sweeps < 1) throw ConfigError("als_fit: sweeps must be >= 1");
  hyper.validate(!ratings.empty(), user_info != nullptr, item_info != nullptr);
  if (hyper.w_ratings > 0.0 && ratings.empty())
    throw DataError("als_fit: ratings matrix is empty but w_ratings > 0");
  if (user_info && hyper.w_user_info > 0.0 && user_info->any_binary())
    throw ConfigError(
        "als_fit: user attributes contain binary columns; the sigmoid link has no "
        "closed form, use lbfgs_fit");
  if (item_info && hyper.w_item_info > 0.0 && item_info->any_binary())
    throw ConfigError(
        "als_fit: item attributes contain binary columns; the sigmoid link has no "
        "closed form, use lbfgs_fit");

  const double mu =
      ratings.empty() ? 0.0 : ratings.sum() / static_cast<double>(ratings.n_entries());
  CmfFitResult result;
  result.model = cmf_init_model(ratings.n_users(), ratings.n_items(),
                                user_info ? user_info->n_cols() : 0,
                                item_info ? item_info->n_cols() : 0, hyper, mu, init_seed);
  CmfModel& model = result.model;
  check_shapes(model, ratings, user_info, item_info);

  const Scales scales = make_scales(hyper, ratings, user_info, item_info);
  const detail::RegTerms reg = reg_terms(hyper.reg);

  result.objective_trace.push_back(
      cmf_objective_value(model, ratings, user_info, item_info, hyper));

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    update_entity_factors(model.user_factors, model.item_factors, model.user_bias,
                          model.item_bias, ratings, /*by_user=*/true, user_info,
                          model.user_attr_factors, scales.ratings, scales.user_info,
                          reg.user_factors, mu, model.partition);
    update_entity_factors(model.item_factors, model.user_factors, model.item_bias,
                          model.user_bias, ratings, /*by_user=*/false, item_info,
                          model.item_attr_factors, scales.ratings, scales.item_info,
                          reg.item_factors, mu, model.partition);
    if (scales.has_user_info)
      update_attr_factors(model.user_attr_factors, model.user_factors, *user_info,
                          scales.user_info, reg.user_attr_factors, model.partition,
                          "user attribute factors");
    if (scales.has_item_info)
      update_attr_factors(model.item_attr_factors, model.item_factors, *item_info,
                          scales.item_info, reg.item_attr_factors, model.partition,
                          "item attribute factors");
    update_biases(model.user_bias, model.item_bias, model.user_factors, model.item_factors,
                  ratings, /*by_user=*/true, scales.ratings, reg.user_bias, mu,
                  model.partition);
    update_biases(model.item_bias, model.user_bias, model.item_factors, model.user_factors,
                  ratings, /*by_user=*/false, scales.ratings, reg.item_bias, mu,
                  model.partition);

    result.objective_trace.push_back(
        cmf_objective_value(model, ratings, user_info, item_info, hyper));
  }

  stamp_model_metadata(model, user_info, item_info, scales, hyper);
  return result;
}

CmfFitResult lbfgs_fit(const RatingsMatrix& ratings, const SideInfoMatrix* user_info,
                       const SideInfoMatrix* item_info, const CmfHyperparams& hyper,
                       const SolverConfig& solver, std::uint64_t init_seed) {
  hyper.validate(!ratings.empty(), user_info != nullptr, item_info != nullptr);
  if (hyper.w_ratings > 0.0 && ratings.empty())
    throw DataError("lbfgs_fit: ratings matrix is empty but w_ratings > 0");

  const double mu =
      ratings.empty() ? 0.0 : ratings.sum() / static_cast<double>(ratings.n_entries());
  CmfFitResult result;
  result.model = cmf_init_model(ratings.n_users(), ratings.n_items(),
                                user_info ? user_info->n_cols() : 0,
                                item_info ? item_info->n_cols() : 0, hyper, mu, init_seed);
  CmfModel& model = result.model;
  check_shapes(model, ratings, user_info, item_info);

  CmfModel scratch = model;
  const Objective objective = [&](const Vector& params) {
    cmf_unpack_parameters(params, scratch);
    return cmf_objective(scratch, ratings, user_info, item_info, hyper);
  };

  SolverResult solved = lbfgs_minimize(objective, cmf_pack_parameters(model), solver);
  cmf_unpack_parameters(solved.x, model);
  result.objective_trace = std::move(solved.trace);
  result.termination = solved.reason;

  stamp_model_metadata(model, user_info, item_info,
                       make_scales(hyper, ratings, user_info, item_info), hyper);
  return result;
}

namespace {

Vector ridge_fold_in(const Vector& attrs, const Matrix& attr_factors, double lambda,
                     const char* side) {
  if (attrs.size() != attr_factors.rows())
    throw DataError(std::string("cold_start_") + side +
                    "_factors: attribute vector length does not match the model");
  if (attr_factors.cols() == 0)
    throw ConfigError(std::string("cold_start_") + side +
                      "_factors: model was not trained with attributes on this side");
  const Matrix system = attr_factors.transpose() * attr_factors +
                        lambda * Matrix::Identity(attr_factors.cols(), attr_factors.cols());
  const Vector rhs = attr_factors.transpose() * attrs;
  if (lambda > 0.0) return system.ldlt().solve(rhs);
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible())
    throw DataError(std::string("cold_start_") + side +
                    "_factors: singular system (lambda = 0 and rank-deficient factors)");
  return lu.solve(rhs);
}

Vector scatter_attr_block(const Vector& attr_block, const FactorPartition& part) {
  Vector full = Vector::Zero(part.k_total());
  full.head(part.k_attributes()) = attr_block;
  return full;
}

}  // namespace

Vector cold_start_user_factors(const Vector& user_attrs, const CmfModel& model,
                               std::optional<double> lambda) {
  const double lam = lambda.value_or(model.fold_in_lambda_user);
  return scatter_attr_block(ridge_fold_in(user_attrs, model.user_attr_factors, lam, "user"),
                            model.partition);
}

Vector cold_start_item_factors(const Vector& item_attrs, const CmfModel& model,
                               std::optional<double> lambda) {
  const double lam = lambda.value_or(model.fold_in_lambda_item);
  return scatter_attr_block(ridge_fold_in(item_attrs, model.item_attr_factors, lam, "item"),
                            model.partition);
}

Vector cold_start_factors_sigmoid(const Vector& attrs, const Matrix& attr_factor_matrix,
                                  const std::vector<ColumnKind>& column_kinds, double lambda,
                                  const SolverConfig& solver) {
  if (attrs.size() != attr_factor_matrix.rows())
    throw DataError("cold_start_factors_sigmoid: attribute vector length mismatch");
  if (column_kinds.size() != static_cast<std::size_t>(attr_factor_matrix.rows()))
    throw DataError("cold_start_factors_sigmoid: column kinds length mismatch");
  const Eigen::Index k = attr_factor_matrix.cols();

  const Objective objective = [&](const Vector& a) {
    ObjectiveEvaluation eval;
    Vector linear = attr_factor_matrix * a;
    Vector pull(linear.size());
    double value = 0.0;
    for (Eigen::Index j = 0; j < linear.size(); ++j) {
      const ColumnKind kind = column_kinds[static_cast<std::size_t>(j)];
      const double fitted = sigmoid_transform(linear[j], kind);
      const double slope = kind == ColumnKind::Binary ? fitted * (1.0 - fitted) : 1.0;
      const double e = attrs[j] - fitted;
      value += e * e;
      pull[j] = -2.0 * e * slope;
    }
    eval.value = value + lambda * a.squaredNorm();
    eval.gradient = attr_factor_matrix.transpose() * pull + 2.0 * lambda * a;
    return eval;
  };

  return lbfgs_minimize(objective, Vector::Zero(k), solver).x;
}

namespace {

Vector fold_in_side(const CmfModel& model, const Vector& attrs,
                    const std::vector<ColumnKind>& kinds, const Matrix& attr_factors,
                    double default_lambda, std::optional<double> lambda,
                    const SolverConfig& solver, const char* side) {
  bool any_binary = false;
  for (ColumnKind k : kinds)
    if (k == ColumnKind::Binary) any_binary = true;
  if (!any_binary) {
    return scatter_attr_block(
        ridge_fold_in(attrs, attr_factors, lambda.value_or(default_lambda), side),
        model.partition);
  }
  return scatter_attr_block(
      cold_start_factors_sigmoid(attrs, attr_factors, kinds,
                                 lambda.value_or(default_lambda), solver),
      model.partition);
}

}  // namespace

Vector fold_in_user(const CmfModel& model, const Vector& user_attrs,
                    std::optional<double> lambda, const SolverConfig& solver) {
  return fold_in_side(model, user_attrs, model.user_attr_kinds, model.user_attr_factors,
                      model.fold_in_lambda_user, lambda, solver, "user");
}

Vector fold_in_item(const CmfModel& model, const Vector& item_attrs,
                    std::optional<double> lambda, const SolverConfig& solver) {
  return fold_in_side(model, item_attrs, model.item_attr_kinds, model.item_attr_factors,
                      model.fold_in_lambda_item, lambda, solver, "item");
}

double cmf_predict(const CmfModel& model, const Vector& user_ratings_factors,
                   const Vector& item_ratings_factors, double user_bias, double item_bias) {
  if (user_ratings_factors.size() != model.partition.k_ratings() ||
      item_ratings_factors.size() != model.partition.k_ratings())
    throw DataError("cmf_predict: factor vectors must use the ratings column layout");
  return model.global_mean + user_bias + item_bias +
         user_ratings_factors.dot(item_ratings_factors);
}

double cmf_predict_warm(const CmfModel& model, int user, int item) {
  if (user < 0 || user >= model.n_users() || item < 0 || item >= model.n_items())
    throw DataError("cmf_predict_warm: index out of range");
  const FactorPartition& part = model.partition;
  return model.global_mean + model.user_bias[user] + model.item_bias[item] +
         model.user_factors.row(user)
             .segment(part.ratings_offset(), part.k_ratings())
             .dot(model.item_factors.row(item).segment(part.ratings_offset(),
                                                       part.k_ratings()));
}

}  // namespace coldrec
