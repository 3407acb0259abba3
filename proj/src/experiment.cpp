#include "coldrec/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

#include "coldrec/pca.hpp"
#include "coldrec/rng.hpp"

namespace coldrec {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

double parse_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse number '" + text + "' for key " + key);
  }
}

int parse_int(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse integer '" + text + "' for key " + key);
  }
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw ConfigError("config: cannot parse boolean '" + text + "' for key " + key);
}

std::optional<double> parse_optional_double(const std::string& text, const std::string& key) {
  if (text.empty()) return std::nullopt;
  return parse_double(text, key);
}

std::string strip_ws(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string to_string(ModelChoice m) {
  switch (m) {
    case ModelChoice::Mf: return "mf";
    case ModelChoice::Cmf: return "cmf";
    case ModelChoice::Offsets: return "offsets";
    case ModelChoice::OffsetsTwoStage: return "offsets-two-stage";
  }
  return "unknown";
}

void ExperimentConfig::apply_override(const std::string& key, const std::string& value) {
  if (key == "ratings_path") ratings_path = value;
  else if (key == "ratings_separator") ratings_separator = value;
  else if (key == "user_attrs_path") user_attrs_path = value;
  else if (key == "user_schema_path") user_schema_path = value;
  else if (key == "item_attrs_path") item_attrs_path = value;
  else if (key == "item_schema_path") item_schema_path = value;
  else if (key == "model") {
    if (value == "mf") model = ModelChoice::Mf;
    else if (value == "cmf") model = ModelChoice::Cmf;
    else if (value == "offsets") model = ModelChoice::Offsets;
    else if (value == "offsets-two-stage") model = ModelChoice::OffsetsTwoStage;
    else throw ConfigError("config: unknown model '" + value + "'");
  } else if (key == "k") k = parse_int(value, key);
  else if (key == "k_attr") k_attr = parse_int(value, key);
  else if (key == "k_main") k_main = parse_int(value, key);
  else if (key == "lambda") lambda = parse_double(value, key);
  else if (key == "lambda_user_factors") lambda_user_factors = parse_optional_double(value, key);
  else if (key == "lambda_item_factors") lambda_item_factors = parse_optional_double(value, key);
  else if (key == "lambda_user_attr_factors")
    lambda_user_attr_factors = parse_optional_double(value, key);
  else if (key == "lambda_item_attr_factors")
    lambda_item_attr_factors = parse_optional_double(value, key);
  else if (key == "lambda_user_bias") lambda_user_bias = parse_optional_double(value, key);
  else if (key == "lambda_item_bias") lambda_item_bias = parse_optional_double(value, key);
  else if (key == "free_offset_lambda") free_offset_lambda = parse_optional_double(value, key);
  else if (key == "w_x") w_ratings = parse_double(value, key);
  else if (key == "w_u") w_user_info = parse_double(value, key);
  else if (key == "w_i") w_item_info = parse_double(value, key);
  else if (key == "algorithm") {
    if (value == "als") algorithm = FitAlgorithm::Als;
    else if (value == "lbfgs") algorithm = FitAlgorithm::Lbfgs;
    else throw ConfigError("config: unknown algorithm '" + value + "'");
  } else if (key == "sweeps") sweeps = parse_int(value, key);
  else if (key == "max_iterations") max_iterations = parse_int(value, key);
  else if (key == "memory_pairs") memory_pairs = parse_int(value, key);
  else if (key == "gradient_tolerance") gradient_tolerance = parse_double(value, key);
  else if (key == "relative_objective_tolerance")
    relative_objective_tolerance = parse_double(value, key);
  else if (key == "pca_components") pca_components = parse_int(value, key);
  else if (key == "fraction_test_warm") fraction_test_warm = parse_double(value, key);
  else if (key == "fraction_new_users") fraction_new_users = parse_double(value, key);
  else if (key == "fraction_new_items") fraction_new_items = parse_double(value, key);
  else if (key == "min_test_ratings_per_user")
    min_test_ratings_per_user = parse_int(value, key);
  else if (key == "side_info_scope") {
    if (value == "train-only") side_info_scope = SideInfoScope::TrainOnly;
    else if (value == "all") side_info_scope = SideInfoScope::All;
    else throw ConfigError("config: unknown side_info_scope '" + value + "'");
  } else if (key == "clip_rmse") clip_rmse = parse_bool(value, key);
  else if (key == "ndcg_k") ndcg_k = parse_int(value, key);
  else if (key == "seed") seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "threads") threads = parse_int(value, key);
  else if (key == "deterministic") deterministic = parse_bool(value, key);
  else if (key == "output_dir") output_dir = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

CmfHyperparams ExperimentConfig::cmf_hyperparams() const {
  CmfHyperparams hyper;
  hyper.reg.base = lambda;
  hyper.reg.user_factors = lambda_user_factors;
  hyper.reg.item_factors = lambda_item_factors;
  hyper.reg.user_attr_factors = lambda_user_attr_factors;
  hyper.reg.item_attr_factors = lambda_item_attr_factors;
  hyper.reg.user_bias = lambda_user_bias;
  hyper.reg.item_bias = lambda_item_bias;
  const int k_shared = k - k_attr - k_main;
  if (k_shared < 0)
    throw ConfigError("config: k_attr + k_main exceeds k");
  hyper.partition = {k_attr, k_shared, k_main};
  if (model == ModelChoice::Mf) {
    hyper.w_ratings = w_ratings;
    hyper.w_user_info = 0.0;
    hyper.w_item_info = 0.0;
    hyper.partition = {0, k, 0};
  } else {
    hyper.w_ratings = w_ratings;
    hyper.w_user_info = w_user_info;
    hyper.w_item_info = w_item_info;
  }
  return hyper;
}

OffsetsPenalty ExperimentConfig::offsets_penalty() const {
  OffsetsPenalty penalty;
  penalty.lambda = lambda;
  penalty.free_offset_lambda = free_offset_lambda;
  return penalty;
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig solver;
  solver.memory_pairs = memory_pairs;
  solver.max_iterations = max_iterations;
  solver.gradient_tolerance = gradient_tolerance;
  solver.relative_objective_tolerance = relative_objective_tolerance;
  return solver;
}

SplitSpec ExperimentConfig::split_spec() const {
  SplitSpec spec;
  spec.fraction_test_warm = fraction_test_warm;
  spec.fraction_new_users = fraction_new_users;
  spec.fraction_new_items = fraction_new_items;
  spec.min_test_ratings_per_user = min_test_ratings_per_user;
  spec.rng_seed = seed;
  return spec;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = strip_ws(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    config.apply_override(strip_ws(t.substr(0, eq)), strip_ws(t.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "ratings_path=" << c.ratings_path << "\n";
  out << "ratings_separator=" << c.ratings_separator << "\n";
  out << "user_attrs_path=" << c.user_attrs_path << "\n";
  out << "user_schema_path=" << c.user_schema_path << "\n";
  out << "item_attrs_path=" << c.item_attrs_path << "\n";
  out << "item_schema_path=" << c.item_schema_path << "\n";
  out << "model=" << to_string(c.model) << "\n";
  out << "k=" << c.k << "\n";
  out << "k_attr=" << c.k_attr << "\n";
  out << "k_main=" << c.k_main << "\n";
  out << "lambda=" << fmt_double(c.lambda) << "\n";
  out << "lambda_user_factors=" << fmt_optional(c.lambda_user_factors) << "\n";
  out << "lambda_item_factors=" << fmt_optional(c.lambda_item_factors) << "\n";
  out << "lambda_user_attr_factors=" << fmt_optional(c.lambda_user_attr_factors) << "\n";
  out << "lambda_item_attr_factors=" << fmt_optional(c.lambda_item_attr_factors) << "\n";
  out << "lambda_user_bias=" << fmt_optional(c.lambda_user_bias) << "\n";
  out << "lambda_item_bias=" << fmt_optional(c.lambda_item_bias) << "\n";
  out << "free_offset_lambda=" << fmt_optional(c.free_offset_lambda) << "\n";
  out << "w_x=" << fmt_double(c.w_ratings) << "\n";
  out << "w_u=" << fmt_double(c.w_user_info) << "\n";
  out << "w_i=" << fmt_double(c.w_item_info) << "\n";
  out << "algorithm=" << (c.algorithm == FitAlgorithm::Als ? "als" : "lbfgs") << "\n";
  out << "sweeps=" << c.sweeps << "\n";
  out << "max_iterations=" << c.max_iterations << "\n";
  out << "memory_pairs=" << c.memory_pairs << "\n";
  out << "gradient_tolerance=" << fmt_double(c.gradient_tolerance) << "\n";
  out << "relative_objective_tolerance=" << fmt_double(c.relative_objective_tolerance) << "\n";
  out << "pca_components=" << c.pca_components << "\n";
  out << "fraction_test_warm=" << fmt_double(c.fraction_test_warm) << "\n";
  out << "fraction_new_users=" << fmt_double(c.fraction_new_users) << "\n";
  out << "fraction_new_items=" << fmt_double(c.fraction_new_items) << "\n";
  out << "min_test_ratings_per_user=" << c.min_test_ratings_per_user << "\n";
  out << "side_info_scope="
      << (c.side_info_scope == SideInfoScope::All ? "all" : "train-only") << "\n";
  out << "clip_rmse=" << (c.clip_rmse ? 1 : 0) << "\n";
  out << "ndcg_k=" << c.ndcg_k << "\n";
  out << "seed=" << c.seed << "\n";
  out << "threads=" << c.threads << "\n";
  out << "deterministic=" << (c.deterministic ? 1 : 0) << "\n";
  out << "output_dir=" << c.output_dir << "\n";
  return out.str();
}

namespace {

std::optional<AttributeTable> load_user_attr_table(const ExperimentConfig& config) {
  if (config.user_attrs_path.empty()) return std::nullopt;
  if (config.user_schema_path.empty())
    throw ConfigError("user_schema_path is required when user_attrs_path is set");
  RawTable table = load_table_file(config.user_attrs_path,
                                   load_table_schema_file(config.user_schema_path));
  return binarize_categoricals(table);
}

std::optional<AttributeTable> load_item_attr_table(const ExperimentConfig& config,
                                                   bool apply_pca) {
  if (config.item_attrs_path.empty()) return std::nullopt;
  if (config.item_schema_path.empty())
    throw ConfigError("item_schema_path is required when item_attrs_path is set");
  RawTable table = load_table_file(config.item_attrs_path,
                                   load_table_schema_file(config.item_schema_path));
  AttributeTable attrs = binarize_categoricals(table);
  if (apply_pca && config.pca_components > 0) {
    PcaResult pca = pca_reduce(attrs.info, config.pca_components);
    attrs.info = std::move(pca.reduced);
  }
  return attrs;
}

void write_manifest(const fs::path& path, const std::vector<Rating>& entries,
                    const std::vector<std::string>& user_ids,
                    const std::vector<std::string>& item_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const Rating& r : entries)
    out << user_ids[static_cast<std::size_t>(r.user)] << '\t'
        << item_ids[static_cast<std::size_t>(r.item)] << '\t' << fmt_double(r.value) << '\n';
  if (!out) throw DataError("write failed for manifest " + path.string());
}

SplitSummary::SetCounts count_set(const std::string& name, const std::vector<Rating>& entries) {
  SplitSummary::SetCounts counts;
  counts.name = name;
  counts.ratings = entries.size();
  std::set<int> users, items;
  for (const Rating& r : entries) {
    users.insert(r.user);
    items.insert(r.item);
  }
  counts.users = users.size();
  counts.items = items.size();
  return counts;
}

// Read a manifest back, mapping external ids through the full dataset's maps.
std::vector<Rating> read_manifest(const fs::path& path, const RatingsData& global) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::vector<Rating> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string user_id, item_id, value_text;
    if (!std::getline(fields, user_id, '\t') || !std::getline(fields, item_id, '\t') ||
        !std::getline(fields, value_text, '\t'))
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": expected user, item, rating");
    const auto u = global.user_index.find(user_id);
    const auto i = global.item_index.find(item_id);
    if (u == global.user_index.end() || i == global.item_index.end())
      throw DataError(path.string() + " line " + std::to_string(line_no) +
                      ": id not present in the ratings file");
    entries.push_back({u->second, i->second, parse_double(value_text, "rating")});
  }
  return entries;
}

}  // namespace

SplitSummary run_split_command(const ExperimentConfig& config) {
  if (config.ratings_path.empty()) throw ConfigError("ratings_path is not set");
  const RatingsData data = load_ratings_file(config.ratings_path, config.ratings_separator);

  std::vector<std::uint8_t> item_has_attrs(data.item_ids.size(), 0);
  const std::optional<AttributeTable> items = load_item_attr_table(config, /*apply_pca=*/false);
  if (items) {
    for (std::size_t i = 0; i < data.item_ids.size(); ++i)
      item_has_attrs[i] = items->index.contains(data.item_ids[i]) ? 1 : 0;
  }
  if (config.fraction_new_items > 0.0 && !items)
    throw ConfigError(
        "fraction_new_items > 0 requires item_attrs_path (new items must have attributes)");

  const FourWaySplit split = four_way_split(data.matrix, item_has_attrs, config.split_spec());

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  write_manifest(dir / "train.tsv", split.train.entries(), data.user_ids, data.item_ids);
  write_manifest(dir / "test_warm.tsv", split.test_warm, data.user_ids, data.item_ids);
  write_manifest(dir / "test_new_users.tsv", split.test_new_users, data.user_ids,
                 data.item_ids);
  write_manifest(dir / "test_new_items.tsv", split.test_new_items, data.user_ids,
                 data.item_ids);
  write_manifest(dir / "test_new_both.tsv", split.test_new_both, data.user_ids, data.item_ids);

  SplitSummary summary;
  summary.sets.push_back(count_set("train", split.train.entries()));
  summary.sets.push_back(count_set("test_warm", split.test_warm));
  summary.sets.push_back(count_set("test_new_users", split.test_new_users));
  summary.sets.push_back(count_set("test_new_items", split.test_new_items));
  summary.sets.push_back(count_set("test_new_both", split.test_new_both));

  std::ofstream out(dir / "split_summary.txt");
  out << std::left << std::setw(18) << "set" << std::right << std::setw(12) << "ratings"
      << std::setw(10) << "users" << std::setw(10) << "items" << "\n";
  for (const auto& s : summary.sets)
    out << std::left << std::setw(18) << s.name << std::right << std::setw(12) << s.ratings
        << std::setw(10) << s.users << std::setw(10) << s.items << "\n";
  return summary;
}

namespace {

struct TrainingInputs {
  RatingsMatrix ratings;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::optional<SideInfoMatrix> user_attrs;
  std::optional<SideInfoMatrix> item_attrs;
};

TrainingInputs build_training_inputs(const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  RatingsData train = load_ratings_file((dir / "train.tsv").string(), "\t");

  const bool wants_attrs =
      config.model == ModelChoice::Cmf || config.model == ModelChoice::Offsets ||
      config.model == ModelChoice::OffsetsTwoStage;
  std::optional<AttributeTable> user_table;
  std::optional<AttributeTable> item_table;
  if (wants_attrs) {
    user_table = load_user_attr_table(config);
    item_table = load_item_attr_table(config, /*apply_pca=*/true);
  }

  TrainingInputs inputs;
  inputs.user_ids = train.user_ids;
  inputs.item_ids = train.item_ids;

  if (config.side_info_scope == SideInfoScope::All) {
    if (user_table)
      for (const std::string& id : user_table->ids)
        if (!train.user_index.contains(id)) inputs.user_ids.push_back(id);
    if (item_table)
      for (const std::string& id : item_table->ids)
        if (!train.item_index.contains(id)) inputs.item_ids.push_back(id);
  }

  inputs.ratings = RatingsMatrix(static_cast<int>(inputs.user_ids.size()),
                                 static_cast<int>(inputs.item_ids.size()),
                                 train.matrix.entries());
  if (user_table) inputs.user_attrs = align_rows(*user_table, inputs.user_ids);
  if (item_table) inputs.item_attrs = align_rows(*item_table, inputs.item_ids);
  return inputs;
}

}  // namespace

TrainOutcome run_train_command(const ExperimentConfig& config,
                               const std::string& model_filename) {
  const TrainingInputs inputs = build_training_inputs(config);
  const SideInfoMatrix* user_attrs = inputs.user_attrs ? &*inputs.user_attrs : nullptr;
  const SideInfoMatrix* item_attrs = inputs.item_attrs ? &*inputs.item_attrs : nullptr;
  const std::uint64_t init_seed = substream_seed(config.seed, "init");

  TrainOutcome outcome;
  switch (config.model) {
    case ModelChoice::Mf:
    case ModelChoice::Cmf: {
      const CmfHyperparams hyper = config.cmf_hyperparams();
      const SideInfoMatrix* u = config.model == ModelChoice::Mf ? nullptr : user_attrs;
      const SideInfoMatrix* i = config.model == ModelChoice::Mf ? nullptr : item_attrs;
      CmfFitResult fit =
          config.algorithm == FitAlgorithm::Als
              ? als_fit(inputs.ratings, u, i, hyper, config.sweeps, init_seed)
              : lbfgs_fit(inputs.ratings, u, i, hyper, config.solver_config(), init_seed);
      outcome.model = std::move(fit.model);
      outcome.objective_trace = std::move(fit.objective_trace);
      outcome.termination = fit.termination ? to_string(*fit.termination)
                                            : std::to_string(config.sweeps) + " sweeps";
      break;
    }
    case ModelChoice::Offsets:
    case ModelChoice::OffsetsTwoStage: {
      if (config.algorithm == FitAlgorithm::Als)
        throw ConfigError("the offsets model trains with lbfgs, not als");
      OffsetsFitResult fit =
          config.model == ModelChoice::Offsets
              ? offsets_fit(inputs.ratings, user_attrs, item_attrs,
                            config.offsets_penalty(), config.solver_config(), init_seed,
                            config.k)
              : offsets_two_stage_fit(inputs.ratings, user_attrs, item_attrs,
                                      config.offsets_penalty(), config.solver_config(),
                                      init_seed, config.k);
      outcome.model = std::move(fit.model);
      outcome.objective_trace = std::move(fit.objective_trace);
      outcome.termination = fit.termination ? to_string(*fit.termination) : "done";
      break;
    }
  }

  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  outcome.model_path = (dir / model_filename).string();
  save_model_file(outcome.model, outcome.model_path);

  std::ofstream log(dir / "train_log.txt");
  log << "# coldrec training log\n";
  log << "model=" << to_string(config.model) << "\n";
  log << "w_x=" << config.w_ratings << " w_u=" << config.w_user_info
      << " w_i=" << config.w_item_info << "\n";
  log << "users=" << inputs.user_ids.size() << " items=" << inputs.item_ids.size()
      << " ratings=" << inputs.ratings.n_entries() << "\n";
  log << "# config\n" << config_to_text(config) << "# objective trace\n";
  for (std::size_t i = 0; i < outcome.objective_trace.size(); ++i)
    log << i << '\t' << fmt_double(outcome.objective_trace[i]) << '\n';
  log << "termination=" << outcome.termination << "\n";
  return outcome;
}

std::vector<EvalReport> run_evaluate_command(const ExperimentConfig& config,
                                             const std::vector<std::string>& model_paths) {
  if (config.ratings_path.empty()) throw ConfigError("ratings_path is not set");
  const RatingsData global = load_ratings_file(config.ratings_path, config.ratings_separator);
  const fs::path dir(config.output_dir);

  FourWaySplit split;
  split.n_users = global.matrix.n_users();
  split.n_items = global.matrix.n_items();
  split.train = RatingsMatrix(split.n_users, split.n_items,
                              read_manifest(dir / "train.tsv", global));
  split.test_warm = read_manifest(dir / "test_warm.tsv", global);
  split.test_new_users = read_manifest(dir / "test_new_users.tsv", global);
  split.test_new_items = read_manifest(dir / "test_new_items.tsv", global);
  split.test_new_both = read_manifest(dir / "test_new_both.tsv", global);
  split.user_in_train.assign(static_cast<std::size_t>(split.n_users), 0);
  split.item_in_train.assign(static_cast<std::size_t>(split.n_items), 0);
  for (const Rating& r : split.train.entries()) {
    split.user_in_train[static_cast<std::size_t>(r.user)] = 1;
    split.item_in_train[static_cast<std::size_t>(r.item)] = 1;
  }

  // Model rows are addressed by first appearance in the train manifest; the
  // same rule run_train_command used.
  const RatingsData train_local = load_ratings_file((dir / "train.tsv").string(), "\t");
  std::vector<int> user_to_local(global.user_ids.size(), -1);
  std::vector<int> item_to_local(global.item_ids.size(), -1);
  for (std::size_t l = 0; l < train_local.user_ids.size(); ++l)
    user_to_local[static_cast<std::size_t>(global.user_index.at(train_local.user_ids[l]))] =
        static_cast<int>(l);
  for (std::size_t l = 0; l < train_local.item_ids.size(); ++l)
    item_to_local[static_cast<std::size_t>(global.item_index.at(train_local.item_ids[l]))] =
        static_cast<int>(l);

  const std::optional<AttributeTable> user_table = load_user_attr_table(config);
  const std::optional<AttributeTable> item_table =
      load_item_attr_table(config, /*apply_pca=*/true);
  std::optional<SideInfoMatrix> user_attrs_global, item_attrs_global;
  if (user_table) user_attrs_global = align_rows(*user_table, global.user_ids);
  if (item_table) item_attrs_global = align_rows(*item_table, global.item_ids);

  std::vector<AnyModel> models;
  models.reserve(model_paths.size());
  for (const std::string& path : model_paths) models.push_back(load_model_file(path));

  const bool have_new_users = !split.test_new_users.empty() || !split.test_new_both.empty();
  const bool have_new_items = !split.test_new_items.empty() || !split.test_new_both.empty();
  for (std::size_t idx = 0; idx < models.size(); ++idx) {
    const bool needs_user_attrs = std::visit(
        [](const auto& m) {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, CmfModel>)
            return m.user_attr_factors.rows() > 0;
          else
            return m.n_user_attrs() > 0;
        },
        models[idx]);
    const bool needs_item_attrs = std::visit(
        [](const auto& m) {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, CmfModel>)
            return m.item_attr_factors.rows() > 0;
          else
            return m.n_item_attrs() > 0;
        },
        models[idx]);
    if (have_new_users && needs_user_attrs && !user_attrs_global)
      throw ConfigError("model " + model_paths[idx] +
                        " needs user_attrs_path to score the new-user scenarios");
    if (have_new_items && needs_item_attrs && !item_attrs_global)
      throw ConfigError("model " + model_paths[idx] +
                        " needs item_attrs_path to score the new-item scenarios");
  }

  std::vector<std::unique_ptr<Scorer>> scorers;
  scorers.push_back(std::make_unique<RandomScorer>(substream_seed(config.seed, "baseline")));
  scorers.push_back(std::make_unique<MostPopularScorer>(split.train));
  const CmfHyperparams hyper_for_labels = config.cmf_hyperparams();
  for (std::size_t idx = 0; idx < models.size(); ++idx) {
    const std::string label = fs::path(model_paths[idx]).stem().string();
    if (const CmfModel* cmf = std::get_if<CmfModel>(&models[idx])) {
      scorers.push_back(std::make_unique<CmfScorer>(
          label, *cmf, user_to_local, item_to_local,
          user_attrs_global ? &*user_attrs_global : nullptr,
          item_attrs_global ? &*item_attrs_global : nullptr, hyper_for_labels));
    } else {
      scorers.push_back(std::make_unique<OffsetsScorer>(
          label, std::get<OffsetsModel>(models[idx]), user_to_local, item_to_local,
          user_attrs_global ? &*user_attrs_global : nullptr,
          item_attrs_global ? &*item_attrs_global : nullptr));
    }
  }

  EvalOptions options;
  options.ndcg_k = config.ndcg_k;
  options.clip_rmse_predictions = config.clip_rmse;
  std::vector<const Scorer*> raw;
  for (const auto& s : scorers) raw.push_back(s.get());
  std::vector<EvalReport> reports = run_scenarios(raw, split, options);

  for (const EvalReport& report : reports) {
    const std::string stem = "report_" + to_string(report.scenario);
    std::ofstream tsv(dir / (stem + ".tsv"));
    write_report_delimited(report, tsv, '\t');
    std::ofstream txt(dir / (stem + ".txt"));
    write_report_table(report, txt);
  }
  return reports;
}

namespace {

Vector read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attribute vector file " + path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    if (!token.empty() && token.back() == ',') token.pop_back();
    if (token.empty()) continue;
    values.push_back(parse_double(token, "attribute"));
  }
  if (values.empty()) throw DataError("attribute vector file " + path + " is empty");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

}  // namespace

PredictOutcome run_predict_command(const ExperimentConfig& config,
                                   const std::string& model_path,
                                   const PredictRequest& request) {
  const AnyModel any = load_model_file(model_path);
  const fs::path dir(config.output_dir);
  const RatingsData train_local = load_ratings_file((dir / "train.tsv").string(), "\t");

  std::optional<AttributeTable> user_table;
  std::optional<AttributeTable> item_table;

  // Resolve one side to either a warm local row or an attribute vector.
  struct Side {
    std::optional<int> local;
    std::optional<Vector> attrs;
  };
  auto resolve = [&](const std::string& id, const std::string& attrs_path, bool is_user) {
    Side side;
    if (!attrs_path.empty()) {
      side.attrs = read_vector_file(attrs_path);
      return side;
    }
    if (id.empty()) throw ConfigError(is_user ? "no user given" : "no item given");
    const auto& index = is_user ? train_local.user_index : train_local.item_index;
    const auto it = index.find(id);
    if (it != index.end()) {
      side.local = it->second;
      return side;
    }
    auto& table = is_user ? user_table : item_table;
    if (!table)
      table = is_user ? load_user_attr_table(config)
                      : load_item_attr_table(config, /*apply_pca=*/true);
    if (table) {
      const auto at = table->index.find(id);
      if (at != table->index.end()) {
        side.attrs = table->info.values.row(at->second).transpose();
        return side;
      }
    }
    throw DataError(std::string(is_user ? "user" : "item") + " id '" + id +
                    "' is not in the training set and has no attribute data");
  };

  const Side user = resolve(request.user_id, request.user_attrs_path, true);

  PredictOutcome outcome;

  // Per-model scoring closures over (user side, item local/attrs).
  auto score_pair = [&](const Side& u, const Side& i) -> double {
    if (const CmfModel* cmf = std::get_if<CmfModel>(&any)) {
      const FactorPartition& part = cmf->partition;
      Vector ux;
      double ub = 0.0;
      if (u.local) {
        ux = cmf->user_ratings_row(*u.local);
        ub = cmf->user_bias[*u.local];
      } else {
        ux = fold_in_user(*cmf, *u.attrs).segment(part.ratings_offset(), part.k_ratings());
      }
      Vector ix;
      double ib = 0.0;
      if (i.local) {
        ix = cmf->item_ratings_row(*i.local);
        ib = cmf->item_bias[*i.local];
      } else {
        ix = fold_in_item(*cmf, *i.attrs).segment(part.ratings_offset(), part.k_ratings());
      }
      return cmf_predict(*cmf, ux, ix, ub, ib);
    }
    const OffsetsModel& off = std::get<OffsetsModel>(any);
    const EntityRef user_ref = u.local ? EntityRef::known(*u.local)
                                       : EntityRef::from_attrs(*u.attrs);
    const EntityRef item_ref = i.local ? EntityRef::known(*i.local)
                                       : EntityRef::from_attrs(*i.attrs);
    return offsets_predict(off, user_ref, item_ref);
  };

  if (request.top_n > 0) {
    const int n_items = static_cast<int>(train_local.item_ids.size());
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(static_cast<std::size_t>(n_items));
    for (int i = 0; i < n_items; ++i) {
      Side item_side;
      item_side.local = i;
      ranked.emplace_back(score_pair(user, item_side), i);
    }
    // Descending score; ties go to the lower item index.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    const int depth = std::min(request.top_n, n_items);
    for (int r = 0; r < depth; ++r)
      outcome.scored.emplace_back(train_local.item_ids[static_cast<std::size_t>(ranked[r].second)],
                                  ranked[r].first);
  } else {
    const Side item = resolve(request.item_id, request.item_attrs_path, false);
    const std::string label = request.item_id.empty() ? "score" : request.item_id;
    outcome.scored.emplace_back(label, score_pair(user, item));
  }

  if (request.timings && user.attrs) {
    // Time the cold-start fold-in path only; that is the latency-sensitive step.
    const auto t0 = std::chrono::steady_clock::now();
    constexpr int kReps = 100;
    double sink = 0.0;
    for (int rep = 0; rep < kReps; ++rep) {
      if (const CmfModel* cmf = std::get_if<CmfModel>(&any))
        sink += fold_in_user(*cmf, *user.attrs).sum();
      else
        sink += offsets_user_vector(*user.attrs, std::get<OffsetsModel>(any)).sum();
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double micros =
        std::chrono::duration<double, std::micro>(t1 - t0).count() / kReps;
    std::ostringstream note;
    note << "user fold-in: " << std::fixed << std::setprecision(2) << micros
         << " us/call over " << kReps << " calls";
    if (std::holds_alternative<OffsetsModel>(any)) note << " (vector-matrix product, no solve)";
    else note << " (ridge linear solve)";
    note << " [checksum " << sink << "]";
    outcome.timing_note = note.str();
  }

  return outcome;
}

}  // namespace coldrec
