#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "coldrec/types.hpp"

namespace coldrec {

// Ratings plus the id maps produced by contiguous 0-based reindexing; index
// order is first appearance in the stream.
struct RatingsData {
  RatingsMatrix matrix;
  std::vector<std::string> user_ids;  // index -> external id
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, int> user_index;
  std::unordered_map<std::string, int> item_index;
  std::size_t duplicate_count = 0;  // duplicate (user, item) records; last wins
};

// Delimited "user<sep>item<sep>rating[<sep>...]" records; the separator may
// be multi-character (e.g. "::"). Trailing fields such as timestamps are
// ignored.
RatingsData load_ratings(std::istream& in, const std::string& separator);
RatingsData load_ratings_file(const std::string& path, const std::string& separator);

enum class ColumnRole { Id, Categorical, Continuous, Binary, Ignore };

ColumnRole parse_column_role(const std::string& text);

struct TableSchema {
  std::string separator = "\t";
  std::map<int, ColumnRole> roles;       // per column index; id column included
  std::map<int, std::string> names;      // optional display names
  ColumnRole default_role = ColumnRole::Ignore;

  ColumnRole role(int column) const;
  std::string name(int column) const;
  int id_column() const;  // throws ConfigError when no Id role is declared
};

// Schema files are flat key=value text:
//   separator=::
//   role.0=id
//   role.1=categorical
//   name.1=gender
//   default=continuous
TableSchema load_table_schema(std::istream& in);
TableSchema load_table_schema_file(const std::string& path);

struct RawTable {
  TableSchema schema;
  std::vector<std::string> ids;                 // one per row, non-empty
  std::vector<std::vector<std::string>> rows;   // split records
};

RawTable load_table(std::istream& in, TableSchema schema);
RawTable load_table_file(const std::string& path, TableSchema schema);

// Attribute matrix keyed by external entity id, every row present.
struct AttributeTable {
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;
  SideInfoMatrix info;
};

// One-hot expansion fitted on a table: categorical columns expand to binary
// "<col>=<category>" columns (categories in sorted order), binary columns
// pass through with 0/1 validation, continuous columns parse as numbers.
class CategoricalEncoder {
 public:
  static CategoricalEncoder fit(const RawTable& table);

  // Unknown categories leave their one-hot segment all zero and are counted.
  AttributeTable transform(const RawTable& table, std::size_t* unseen_count = nullptr) const;

  const std::vector<std::string>& output_names() const { return output_names_; }

 private:
  struct ColumnPlan {
    int column = 0;
    ColumnRole role = ColumnRole::Ignore;
    std::string name;
    std::vector<std::string> categories;  // sorted; categorical only
    std::map<std::string, int> category_index;
  };
  std::vector<ColumnPlan> plans_;
  std::vector<std::string> output_names_;
  std::vector<ColumnKind> output_kinds_;
};

AttributeTable binarize_categoricals(const RawTable& table,
                                     std::size_t* unseen_count = nullptr);

// Rows of `table` re-ordered to match `ids`; ids missing from the table come
// out as absent rows.
SideInfoMatrix align_rows(const AttributeTable& table, const std::vector<std::string>& ids);

// Arithmetic mean of the training ratings.
double compute_global_mean(const RatingsMatrix& train);

}  // namespace coldrec
