#include "ratings_kernel.hpp"

#include <cmath>

namespace coldrec::detail {

double ratings_sse_grad(const RatingsMatrix& ratings, double mu, const Vector& m,
                        const Vector& n, const Matrix& user_rows, const Matrix& item_rows,
                        Matrix* grad_p, Matrix* grad_q, Vector* grad_m, Vector* grad_n) {
  const int n_users = ratings.n_users();
  const int n_items = ratings.n_items();
  const auto& entries = ratings.entries();

  if (grad_p) grad_p->setZero(user_rows.rows(), user_rows.cols());
  if (grad_q) grad_q->setZero(item_rows.rows(), item_rows.cols());
  if (grad_m) grad_m->setZero(n_users);
  if (grad_n) grad_n->setZero(n_items);

  std::vector<double> residual(ratings.n_entries());
  Vector user_partial = Vector::Zero(n_users);

#pragma omp parallel for schedule(dynamic, 64)
  for (int u = 0; u < n_users; ++u) {
    double acc = 0.0;
    double bias_acc = 0.0;
    for (std::size_t idx : ratings.user_entries(u)) {
      const Rating& r = entries[idx];
      const double e =
          r.value - mu - m[u] - n[r.item] - user_rows.row(u).dot(item_rows.row(r.item));
      residual[idx] = e;
      acc += e * e;
      bias_acc += -2.0 * e;
      if (grad_p) grad_p->row(u).noalias() += (-2.0 * e) * item_rows.row(r.item);
    }
    user_partial[u] = acc;
    if (grad_m) (*grad_m)[u] = bias_acc;
  }

  if (grad_q || grad_n) {
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n_items; ++i) {
      double bias_acc = 0.0;
      for (std::size_t idx : ratings.item_entries(i)) {
        const Rating& r = entries[idx];
        const double e = residual[idx];
        bias_acc += -2.0 * e;
        if (grad_q) grad_q->row(i).noalias() += (-2.0 * e) * user_rows.row(r.user);
      }
      if (grad_n) (*grad_n)[i] = bias_acc;
    }
  }

  double sse = 0.0;
  for (int u = 0; u < n_users; ++u) sse += user_partial[u];
  return sse;
}

double attr_sse_grad(const SideInfoMatrix& info, const Matrix& entity_rows,
                     const Matrix& attr_factor_rows, Matrix* grad_f, Matrix* grad_w) {
  const int n_rows = info.n_rows();
  const int n_cols = info.n_cols();

  if (grad_f) grad_f->setZero(entity_rows.rows(), entity_rows.cols());
  if (grad_w) grad_w->setZero(attr_factor_rows.rows(), attr_factor_rows.cols());

  double sse = 0.0;
  Vector linear(n_cols), fitted(n_cols), slope(n_cols), pull(n_cols);
  for (int r = 0; r < n_rows; ++r) {
    if (!info.present(r)) continue;
    linear.noalias() = attr_factor_rows * entity_rows.row(r).transpose();
    for (int j = 0; j < n_cols; ++j) {
      if (info.column_kinds[static_cast<std::size_t>(j)] == ColumnKind::Binary) {
        const double s = 1.0 / (1.0 + std::exp(-linear[j]));
        fitted[j] = s;
        slope[j] = s * (1.0 - s);
      } else {
        fitted[j] = linear[j];
        slope[j] = 1.0;
      }
      const double e = info.values(r, j) - fitted[j];
      sse += e * e;
      pull[j] = -2.0 * e * slope[j];
    }
    if (grad_f) grad_f->row(r).noalias() = pull.transpose() * attr_factor_rows;
    if (grad_w) grad_w->noalias() += pull * entity_rows.row(r);
  }
  return sse;
}

double reg_value(const RegTerms& reg, const Matrix& a, const Matrix& b, const Matrix& c,
                 const Matrix& d, const Vector& m, const Vector& n) {
  double v = reg.user_factors * a.squaredNorm();
  v += reg.item_factors * b.squaredNorm();
  v += reg.user_attr_factors * c.squaredNorm();
  v += reg.item_attr_factors * d.squaredNorm();
  v += reg.user_bias * m.squaredNorm();
  v += reg.item_bias * n.squaredNorm();
  return v;
}

Eigen::Index packed_size(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
                         const Vector& m, const Vector& n) {
  return a.size() + b.size() + c.size() + d.size() + m.size() + n.size();
}

namespace {
void put(Vector& out, Eigen::Index& off, const double* data, Eigen::Index count) {
  out.segment(off, count) = Eigen::Map<const Vector>(data, count);
  off += count;
}
void take(const Vector& in, Eigen::Index& off, double* data, Eigen::Index count) {
  Eigen::Map<Vector>(data, count) = in.segment(off, count);
  off += count;
}
}  // namespace

void pack_blocks(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
                 const Vector& m, const Vector& n, Vector& out) {
  out.resize(packed_size(a, b, c, d, m, n));
  Eigen::Index off = 0;
  put(out, off, a.data(), a.size());
  put(out, off, b.data(), b.size());
  put(out, off, c.data(), c.size());
  put(out, off, d.data(), d.size());
  put(out, off, m.data(), m.size());
  put(out, off, n.data(), n.size());
}

void unpack_blocks(const Vector& in, Matrix& a, Matrix& b, Matrix& c, Matrix& d, Vector& m,
                   Vector& n) {
  if (in.size() != packed_size(a, b, c, d, m, n))
    throw DataError("unpack_blocks: parameter vector length mismatch");
  Eigen::Index off = 0;
  take(in, off, a.data(), a.size());
  take(in, off, b.data(), b.size());
  take(in, off, c.data(), c.size());
  take(in, off, d.data(), d.size());
  take(in, off, m.data(), m.size());
  take(in, off, n.data(), n.size());
}

}  // namespace coldrec::detail
