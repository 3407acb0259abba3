#include "coldrec/types.hpp"

#include <unordered_set>

namespace coldrec {

RatingsMatrix::RatingsMatrix(int n_users, int n_items, std::vector<Rating> entries)
    : n_users_(n_users), n_items_(n_items), entries_(std::move(entries)) {
  if (n_users_ < 0 || n_items_ < 0)
    throw DataError("RatingsMatrix: negative dimensions");
  by_user_.assign(static_cast<std::size_t>(n_users_), {});
  by_item_.assign(static_cast<std::size_t>(n_items_), {});
  std::unordered_set<std::int64_t> seen;
  seen.reserve(entries_.size() * 2);
  for (std::size_t idx = 0; idx < entries_.size(); ++idx) {
    const Rating& r = entries_[idx];
    if (r.user < 0 || r.user >= n_users_ || r.item < 0 || r.item >= n_items_)
      throw DataError("RatingsMatrix: entry index out of range (user " +
                      std::to_string(r.user) + ", item " + std::to_string(r.item) + ")");
    const std::int64_t key = static_cast<std::int64_t>(r.user) * n_items_ + r.item;
    if (!seen.insert(key).second)
      throw DataError("RatingsMatrix: duplicate (user " + std::to_string(r.user) +
                      ", item " + std::to_string(r.item) + ") pair");
    by_user_[static_cast<std::size_t>(r.user)].push_back(idx);
    by_item_[static_cast<std::size_t>(r.item)].push_back(idx);
  }
}

double RatingsMatrix::sum() const {
  double s = 0.0;
  for (const Rating& r : entries_) s += r.value;
  return s;
}

SideInfoMatrix SideInfoMatrix::all_present(Matrix values, std::vector<ColumnKind> kinds) {
  SideInfoMatrix m;
  m.row_present.assign(static_cast<std::size_t>(values.rows()), 1);
  m.values = std::move(values);
  m.column_kinds = std::move(kinds);
  m.validate();
  return m;
}

SideInfoMatrix SideInfoMatrix::continuous(Matrix values) {
  std::vector<ColumnKind> kinds(static_cast<std::size_t>(values.cols()),
                                ColumnKind::Continuous);
  return all_present(std::move(values), std::move(kinds));
}

void SideInfoMatrix::validate() const {
  if (column_kinds.size() != static_cast<std::size_t>(values.cols()))
    throw DataError("SideInfoMatrix: column_kinds size does not match columns");
  if (row_present.size() != static_cast<std::size_t>(values.rows()))
    throw DataError("SideInfoMatrix: row_present size does not match rows");
  if (!column_names.empty() && column_names.size() != static_cast<std::size_t>(values.cols()))
    throw DataError("SideInfoMatrix: column_names size does not match columns");
  for (int j = 0; j < values.cols(); ++j) {
    if (column_kinds[static_cast<std::size_t>(j)] != ColumnKind::Binary) continue;
    for (int r = 0; r < values.rows(); ++r) {
      if (!present(r)) continue;
      const double v = values(r, j);
      if (v != 0.0 && v != 1.0)
        throw DataError("SideInfoMatrix: binary column " + std::to_string(j) +
                        " holds non 0/1 value at row " + std::to_string(r));
    }
  }
}

void FactorPartition::validate(bool fits_ratings, bool fits_attributes) const {
  if (k_attr < 0 || k_shared < 0 || k_main < 0)
    throw ConfigError("FactorPartition: negative block size");
  if (fits_ratings && k_ratings() < 1)
    throw ConfigError("FactorPartition: k_shared + k_main must be >= 1 when ratings are fit");
  if (fits_attributes && k_attributes() < 1)
    throw ConfigError("FactorPartition: k_attr + k_shared must be >= 1 when attributes are fit");
}

}  // namespace coldrec
