#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "coldrec/errors.hpp"

namespace coldrec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Rating {
  int user;
  int item;
  double value;
};

// Sparse explicit-feedback ratings with row/column adjacency for fast
// per-user and per-item access. Duplicate (user, item) pairs are rejected.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;
  RatingsMatrix(int n_users, int n_items, std::vector<Rating> entries);

  int n_users() const { return n_users_; }
  int n_items() const { return n_items_; }
  std::size_t n_entries() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::vector<Rating>& entries() const { return entries_; }

  // Entries of one user (resp. item), as indices into entries().
  const std::vector<std::size_t>& user_entries(int u) const { return by_user_[u]; }
  const std::vector<std::size_t>& item_entries(int i) const { return by_item_[i]; }

  double sum() const;

 private:
  int n_users_ = 0;
  int n_items_ = 0;
  std::vector<Rating> entries_;
  std::vector<std::vector<std::size_t>> by_user_;
  std::vector<std::vector<std::size_t>> by_item_;
};

enum class ColumnKind : std::uint8_t { Continuous = 0, Binary = 1 };

// Dense side-information matrix (user or item attributes). Rows with
// row_present = false are excluded from every loss sum and row count.
struct SideInfoMatrix {
  Matrix values;                        // n_rows x n_cols
  std::vector<ColumnKind> column_kinds; // one per column
  std::vector<std::uint8_t> row_present;
  std::vector<std::string> column_names; // optional, may be empty

  int n_rows() const { return static_cast<int>(values.rows()); }
  int n_cols() const { return static_cast<int>(values.cols()); }

  bool any_binary() const {
    for (ColumnKind k : column_kinds)
      if (k == ColumnKind::Binary) return true;
    return false;
  }

  std::size_t present_row_count() const {
    std::size_t n = 0;
    for (std::uint8_t p : row_present) n += p ? 1 : 0;
    return n;
  }

  // Number of entries participating in the loss: present rows x columns.
  std::size_t loss_entry_count() const { return present_row_count() * values.cols(); }

  bool present(int row) const { return row_present[static_cast<std::size_t>(row)] != 0; }

  static SideInfoMatrix all_present(Matrix values, std::vector<ColumnKind> kinds);
  static SideInfoMatrix continuous(Matrix values);

  void validate() const;
};

// Column layout of the user/item factor matrices: attr | shared | main.
// The ratings factorization reads shared+main, the attribute factorization
// attr+shared.
struct FactorPartition {
  int k_attr = 0;
  int k_shared = 0;
  int k_main = 0;

  int k_total() const { return k_attr + k_shared + k_main; }
  int k_ratings() const { return k_shared + k_main; }    // columns of A_x / B_x
  int k_attributes() const { return k_attr + k_shared; } // columns of A_u / B_i

  int ratings_offset() const { return k_attr; }   // first column of the x block
  int attributes_offset() const { return 0; }     // first column of the u block

  void validate(bool fits_ratings, bool fits_attributes) const;
};

}  // namespace coldrec
