#include "coldrec/pca.hpp"

#include <Eigen/Eigenvalues>

namespace coldrec {

PcaResult pca_reduce(const SideInfoMatrix& input, int n_components) {
  input.validate();
  if (input.any_binary())
    throw DataError("pca_reduce: input must be continuous (binary columns present)");
  const Eigen::Index n_rows = input.values.rows();
  const Eigen::Index n_cols = input.values.cols();
  const Eigen::Index n_present = static_cast<Eigen::Index>(input.present_row_count());
  if (n_present == 0) throw DataError("pca_reduce: no present rows");
  if (n_components < 1 || n_components > std::min<Eigen::Index>(n_rows, n_cols))
    throw ConfigError("pca_reduce: n_components must lie in [1, min(rows, cols)]");

  Matrix present(n_present, n_cols);
  Eigen::Index w = 0;
  for (Eigen::Index r = 0; r < n_rows; ++r)
    if (input.present(static_cast<int>(r))) present.row(w++) = input.values.row(r);

  PcaTransform transform;
  transform.column_means = present.colwise().mean();
  present.rowwise() -= transform.column_means.transpose();

  const double denom = n_present > 1 ? static_cast<double>(n_present - 1) : 1.0;
  const Matrix covariance = (present.transpose() * present) / denom;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw DataError("pca_reduce: eigendecomposition failed");

  // Eigenvalues come out ascending; take the top ones in descending order.
  transform.basis.resize(n_cols, n_components);
  transform.explained_variance.resize(n_components);
  for (int c = 0; c < n_components; ++c) {
    const Eigen::Index src = n_cols - 1 - c;
    transform.basis.col(c) = solver.eigenvectors().col(src);
    transform.explained_variance[c] = solver.eigenvalues()[src];
  }

  PcaResult result;
  result.transform = std::move(transform);
  result.reduced.values = Matrix::Zero(n_rows, n_components);
  result.reduced.column_kinds.assign(static_cast<std::size_t>(n_components),
                                     ColumnKind::Continuous);
  result.reduced.row_present = input.row_present;
  result.reduced.column_names.reserve(static_cast<std::size_t>(n_components));
  for (int c = 0; c < n_components; ++c)
    result.reduced.column_names.push_back("pc" + std::to_string(c + 1));
  for (Eigen::Index r = 0; r < n_rows; ++r)
    if (input.present(static_cast<int>(r)))
      result.reduced.values.row(r) =
          result.transform.project(input.values.row(r).transpose()).transpose();
  return result;
}

}  // namespace coldrec
