#include "coldrec/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace coldrec {

namespace {

std::vector<std::string> split_record(const std::string& line, const std::string& separator) {
  std::vector<std::string> fields;
  if (separator.empty()) throw ConfigError("load: separator must not be empty");
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(separator, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + separator.size();
  }
  return fields;
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& text, std::size_t line_no, const char* what) {
  const std::string t = strip(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw DataError(std::string("line ") + std::to_string(line_no) + ": cannot parse " + what +
                    " from '" + text + "'");
  return v;
}

bool blank(const std::string& line) {
  for (char c : line)
    if (c != ' ' && c != '\t' && c != '\r') return false;
  return true;
}

}  // namespace

RatingsData load_ratings(std::istream& in, const std::string& separator) {
  RatingsData data;
  std::vector<Rating> entries;
  std::unordered_map<std::int64_t, std::size_t> position;  // (user, item) -> entry slot

  auto intern = [](std::unordered_map<std::string, int>& index, std::vector<std::string>& ids,
                   const std::string& id) {
    auto [it, inserted] = index.try_emplace(id, static_cast<int>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto fields = split_record(line, separator);
    if (fields.size() < 3)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected user, item, rating fields");
    const std::string user_id = strip(fields[0]);
    const std::string item_id = strip(fields[1]);
    if (user_id.empty() || item_id.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty user or item id");
    const double rating = parse_number(fields[2], line_no, "rating");

    const int u = intern(data.user_index, data.user_ids, user_id);
    const int i = intern(data.item_index, data.item_ids, item_id);
    const std::int64_t key = (static_cast<std::int64_t>(u) << 32) | static_cast<std::int64_t>(i);
    auto [it, inserted] = position.try_emplace(key, entries.size());
    if (inserted) {
      entries.push_back({u, i, rating});
    } else {
      entries[it->second].value = rating;  // last occurrence wins
      ++data.duplicate_count;
    }
  }

  if (entries.empty()) throw DataError("load_ratings: no rating records found");
  data.matrix = RatingsMatrix(static_cast<int>(data.user_ids.size()),
                              static_cast<int>(data.item_ids.size()), std::move(entries));
  return data;
}

RatingsData load_ratings_file(const std::string& path, const std::string& separator) {
  std::ifstream in(path);
  if (!in) throw DataError("load_ratings: cannot open " + path);
  return load_ratings(in, separator);
}

ColumnRole parse_column_role(const std::string& text) {
  if (text == "id") return ColumnRole::Id;
  if (text == "categorical") return ColumnRole::Categorical;
  if (text == "continuous") return ColumnRole::Continuous;
  if (text == "binary") return ColumnRole::Binary;
  if (text == "ignore") return ColumnRole::Ignore;
  throw ConfigError("unknown column role '" + text + "'");
}

ColumnRole TableSchema::role(int column) const {
  const auto it = roles.find(column);
  return it == roles.end() ? default_role : it->second;
}

std::string TableSchema::name(int column) const {
  const auto it = names.find(column);
  return it == names.end() ? "col" + std::to_string(column) : it->second;
}

int TableSchema::id_column() const {
  for (const auto& [col, role] : roles)
    if (role == ColumnRole::Id) return col;
  throw ConfigError("table schema declares no id column");
}

TableSchema load_table_schema(std::istream& in) {
  TableSchema schema;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = strip(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("schema line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = strip(t.substr(0, eq));
    const std::string value = strip(t.substr(eq + 1));
    if (key == "separator") {
      schema.separator = value;
    } else if (key == "default") {
      schema.default_role = parse_column_role(value);
    } else if (key.rfind("role.", 0) == 0) {
      schema.roles[std::stoi(key.substr(5))] = parse_column_role(value);
    } else if (key.rfind("name.", 0) == 0) {
      schema.names[std::stoi(key.substr(5))] = value;
    } else {
      throw ConfigError("schema line " + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    }
  }
  return schema;
}

TableSchema load_table_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path);
  return load_table_schema(in);
}

RawTable load_table(std::istream& in, TableSchema schema) {
  RawTable table;
  const int id_col = schema.id_column();
  table.schema = std::move(schema);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    auto fields = split_record(line, table.schema.separator);
    if (static_cast<std::size_t>(id_col) >= fields.size())
      throw DataError("line " + std::to_string(line_no) + ": record has no id column");
    const std::string id = strip(fields[static_cast<std::size_t>(id_col)]);
    if (id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty id");
    table.ids.push_back(id);
    table.rows.push_back(std::move(fields));
  }
  return table;
}

RawTable load_table_file(const std::string& path, TableSchema schema) {
  std::ifstream in(path);
  if (!in) throw DataError("load_table: cannot open " + path);
  return load_table(in, std::move(schema));
}

CategoricalEncoder CategoricalEncoder::fit(const RawTable& table) {
  CategoricalEncoder enc;
  if (table.rows.empty()) throw DataError("binarize_categoricals: table has no rows");

  std::size_t max_cols = 0;
  for (const auto& row : table.rows) max_cols = std::max(max_cols, row.size());

  for (int col = 0; col < static_cast<int>(max_cols); ++col) {
    const ColumnRole role = table.schema.role(col);
    if (role == ColumnRole::Id || role == ColumnRole::Ignore) continue;
    ColumnPlan plan;
    plan.column = col;
    plan.role = role;
    plan.name = table.schema.name(col);
    if (role == ColumnRole::Categorical) {
      std::set<std::string> categories;
      for (const auto& row : table.rows) {
        if (static_cast<std::size_t>(col) >= row.size()) continue;
        const std::string v = strip(row[static_cast<std::size_t>(col)]);
        if (!v.empty()) categories.insert(v);
      }
      if (categories.empty())
        throw DataError("binarize_categoricals: categorical column '" + plan.name +
                        "' has no categories");
      plan.categories.assign(categories.begin(), categories.end());
      for (int c = 0; c < static_cast<int>(plan.categories.size()); ++c)
        plan.category_index[plan.categories[static_cast<std::size_t>(c)]] = c;
      for (const auto& cat : plan.categories) {
        enc.output_names_.push_back(plan.name + "=" + cat);
        enc.output_kinds_.push_back(ColumnKind::Binary);
      }
    } else {
      enc.output_names_.push_back(plan.name);
      enc.output_kinds_.push_back(role == ColumnRole::Binary ? ColumnKind::Binary
                                                             : ColumnKind::Continuous);
    }
    enc.plans_.push_back(std::move(plan));
  }

  if (enc.output_names_.empty())
    throw DataError("binarize_categoricals: schema produces no attribute columns");
  return enc;
}

AttributeTable CategoricalEncoder::transform(const RawTable& table,
                                             std::size_t* unseen_count) const {
  AttributeTable out;
  const std::size_t n_rows = table.rows.size();
  const std::size_t n_cols = output_names_.size();
  Matrix values = Matrix::Zero(static_cast<Eigen::Index>(n_rows),
                               static_cast<Eigen::Index>(n_cols));
  std::size_t unseen = 0;

  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& row = table.rows[r];
    Eigen::Index out_col = 0;
    for (const ColumnPlan& plan : plans_) {
      const bool have =
          static_cast<std::size_t>(plan.column) < row.size();
      const std::string raw =
          have ? strip(row[static_cast<std::size_t>(plan.column)]) : std::string();
      if (plan.role == ColumnRole::Categorical) {
        const auto it = plan.category_index.find(raw);
        if (it == plan.category_index.end()) {
          ++unseen;  // whole one-hot segment stays zero
        } else {
          values(static_cast<Eigen::Index>(r), out_col + it->second) = 1.0;
        }
        out_col += static_cast<Eigen::Index>(plan.categories.size());
      } else {
        const double v = parse_number(raw, r + 1, plan.name.c_str());
        if (plan.role == ColumnRole::Binary && v != 0.0 && v != 1.0)
          throw DataError("binarize_categoricals: binary column '" + plan.name +
                          "' holds value " + raw + " at row " + std::to_string(r + 1));
        values(static_cast<Eigen::Index>(r), out_col) = v;
        out_col += 1;
      }
    }
  }

  if (unseen_count) *unseen_count = unseen;
  out.ids = table.ids;
  for (int r = 0; r < static_cast<int>(out.ids.size()); ++r) out.index[out.ids[r]] = r;
  out.info = SideInfoMatrix::all_present(std::move(values), output_kinds_);
  out.info.column_names = output_names_;
  return out;
}

AttributeTable binarize_categoricals(const RawTable& table, std::size_t* unseen_count) {
  return CategoricalEncoder::fit(table).transform(table, unseen_count);
}

SideInfoMatrix align_rows(const AttributeTable& table, const std::vector<std::string>& ids) {
  SideInfoMatrix out;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), table.info.values.cols());
  out.column_kinds = table.info.column_kinds;
  out.column_names = table.info.column_names;
  out.row_present.assign(ids.size(), 0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto it = table.index.find(ids[r]);
    if (it == table.index.end()) continue;
    out.values.row(static_cast<Eigen::Index>(r)) = table.info.values.row(it->second);
    out.row_present[r] = 1;
  }
  return out;
}

double compute_global_mean(const RatingsMatrix& train) {
  if (train.empty()) throw DataError("compute_global_mean: empty training set");
  return train.sum() / static_cast<double>(train.n_entries());
}

}  // namespace coldrec
