#include "coldrec/serialize.hpp"

#include <cstring>
#include <fstream>
#include <ostream>

namespace coldrec {

namespace {

constexpr char kMagic[8] = {'C', 'O', 'L', 'D', 'R', 'E', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

enum class ModelKind : std::uint8_t { Cmf = 0, Offsets = 1 };

void write_bytes(std::ostream& out, const void* data, std::size_t count) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(count));
  if (!out) throw DataError("save_model: write failed");
}

template <typename T>
void write_scalar(std::ostream& out, T value) {
  write_bytes(out, &value, sizeof(T));
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_scalar<std::int64_t>(out, m.rows());
  write_scalar<std::int64_t>(out, m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_scalar<double>(out, m(r, c));
}

void write_vector(std::ostream& out, const Vector& v) {
  write_scalar<std::int64_t>(out, v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) write_scalar<double>(out, v[i]);
}

void write_kinds(std::ostream& out, const std::vector<ColumnKind>& kinds) {
  write_scalar<std::int64_t>(out, static_cast<std::int64_t>(kinds.size()));
  for (ColumnKind k : kinds) write_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(k));
}

void read_bytes(std::istream& in, void* data, std::size_t count) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(count));
  if (!in) throw DataError("load_model: truncated or unreadable model file");
}

template <typename T>
T read_scalar(std::istream& in) {
  T value;
  read_bytes(in, &value, sizeof(T));
  return value;
}

std::int64_t read_count(std::istream& in, const char* what) {
  const auto v = read_scalar<std::int64_t>(in);
  if (v < 0 || v > (1LL << 40)) throw DataError(std::string("load_model: bad ") + what);
  return v;
}

Matrix read_matrix(std::istream& in) {
  const std::int64_t rows = read_count(in, "matrix rows");
  const std::int64_t cols = read_count(in, "matrix cols");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_scalar<double>(in);
  return m;
}

Vector read_vector(std::istream& in) {
  const std::int64_t n = read_count(in, "vector length");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_scalar<double>(in);
  return v;
}

std::vector<ColumnKind> read_kinds(std::istream& in) {
  const std::int64_t n = read_count(in, "column kind count");
  std::vector<ColumnKind> kinds(static_cast<std::size_t>(n));
  for (auto& k : kinds) {
    const auto raw = read_scalar<std::uint8_t>(in);
    if (raw > 1) throw DataError("load_model: bad column kind");
    k = static_cast<ColumnKind>(raw);
  }
  return kinds;
}

void write_header(std::ostream& out, ModelKind kind) {
  write_bytes(out, kMagic, sizeof(kMagic));
  write_scalar<std::uint32_t>(out, kVersion);
  write_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
}

ModelKind read_header(std::istream& in) {
  char magic[8];
  read_bytes(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("load_model: not a coldrec model file");
  const auto version = read_scalar<std::uint32_t>(in);
  if (version != kVersion)
    throw DataError("load_model: unsupported container version " + std::to_string(version));
  const auto kind = read_scalar<std::uint8_t>(in);
  if (kind > 1) throw DataError("load_model: unknown model kind");
  return static_cast<ModelKind>(kind);
}

}  // namespace

void save_model(const CmfModel& model, std::ostream& out) {
  write_header(out, ModelKind::Cmf);
  write_scalar<std::int32_t>(out, model.partition.k_attr);
  write_scalar<std::int32_t>(out, model.partition.k_shared);
  write_scalar<std::int32_t>(out, model.partition.k_main);
  write_scalar<double>(out, model.global_mean);
  write_scalar<double>(out, model.fold_in_lambda_user);
  write_scalar<double>(out, model.fold_in_lambda_item);
  write_kinds(out, model.user_attr_kinds);
  write_kinds(out, model.item_attr_kinds);
  write_matrix(out, model.user_factors);
  write_matrix(out, model.item_factors);
  write_matrix(out, model.user_attr_factors);
  write_matrix(out, model.item_attr_factors);
  write_vector(out, model.user_bias);
  write_vector(out, model.item_bias);
}

void save_model(const OffsetsModel& model, std::ostream& out) {
  write_header(out, ModelKind::Offsets);
  write_scalar<double>(out, model.global_mean);
  write_matrix(out, model.user_offsets);
  write_matrix(out, model.item_offsets);
  write_matrix(out, model.user_attr_map);
  write_matrix(out, model.item_attr_map);
  write_vector(out, model.user_bias);
  write_vector(out, model.item_bias);
  write_matrix(out, model.user_base);
  write_matrix(out, model.item_base);
}

void save_model_file(const AnyModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_model: cannot open " + path + " for writing");
  std::visit([&](const auto& m) { save_model(m, out); }, model);
  out.flush();
  if (!out) throw DataError("save_model: write failed for " + path);
}

AnyModel load_model(std::istream& in) {
  const ModelKind kind = read_header(in);
  if (kind == ModelKind::Cmf) {
    CmfModel model;
    model.partition.k_attr = read_scalar<std::int32_t>(in);
    model.partition.k_shared = read_scalar<std::int32_t>(in);
    model.partition.k_main = read_scalar<std::int32_t>(in);
    model.global_mean = read_scalar<double>(in);
    model.fold_in_lambda_user = read_scalar<double>(in);
    model.fold_in_lambda_item = read_scalar<double>(in);
    model.user_attr_kinds = read_kinds(in);
    model.item_attr_kinds = read_kinds(in);
    model.user_factors = read_matrix(in);
    model.item_factors = read_matrix(in);
    model.user_attr_factors = read_matrix(in);
    model.item_attr_factors = read_matrix(in);
    model.user_bias = read_vector(in);
    model.item_bias = read_vector(in);
    if (model.user_factors.cols() != model.partition.k_total() ||
        model.item_factors.cols() != model.partition.k_total())
      throw DataError("load_model: factor width does not match the stored partition");
    return model;
  }
  OffsetsModel model;
  model.global_mean = read_scalar<double>(in);
  model.user_offsets = read_matrix(in);
  model.item_offsets = read_matrix(in);
  model.user_attr_map = read_matrix(in);
  model.item_attr_map = read_matrix(in);
  model.user_bias = read_vector(in);
  model.item_bias = read_vector(in);
  model.user_base = read_matrix(in);
  model.item_base = read_matrix(in);
  return model;
}

AnyModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_model: cannot open " + path);
  return load_model(in);
}

}  // namespace coldrec
