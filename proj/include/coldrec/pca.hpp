#pragma once

#include "coldrec/types.hpp"

namespace coldrec {

// Projection record kept for out-of-sample rows (new items are projected
// with the same means and basis the training fit produced).
struct PcaTransform {
  Vector column_means;        // input columns
  Matrix basis;               // input columns x n_components, orthonormal columns
  Vector explained_variance;  // covariance eigenvalues, non-increasing

  Vector project(const Vector& row) const {
    return basis.transpose() * (row - column_means);
  }
};

struct PcaResult {
  SideInfoMatrix reduced;  // continuous columns pc1..pcN; absent rows stay absent
  PcaTransform transform;
};

// Column-mean-centered projection of the present rows onto the leading
// principal directions of their covariance. Input columns must all be
// continuous.
PcaResult pca_reduce(const SideInfoMatrix& input, int n_components);

}  // namespace coldrec
