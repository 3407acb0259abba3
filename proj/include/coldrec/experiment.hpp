#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coldrec/eval.hpp"
#include "coldrec/pipeline.hpp"
#include "coldrec/serialize.hpp"
#include "coldrec/split.hpp"

namespace coldrec {

enum class ModelChoice { Mf, Cmf, Offsets, OffsetsTwoStage };
enum class FitAlgorithm { Als, Lbfgs };
enum class SideInfoScope { TrainOnly, All };

std::string to_string(ModelChoice m);

// Flat key=value experiment description. A config file carries the same keys
// the CLI accepts through --set; command-line values win.
struct ExperimentConfig {
  std::string ratings_path;
  std::string ratings_separator = "::";
  std::string user_attrs_path;
  std::string user_schema_path;
  std::string item_attrs_path;
  std::string item_schema_path;

  ModelChoice model = ModelChoice::Cmf;
  int k = 40;
  int k_attr = 0;
  int k_main = 0;
  double lambda = 1e-4;
  std::optional<double> lambda_user_factors;
  std::optional<double> lambda_item_factors;
  std::optional<double> lambda_user_attr_factors;
  std::optional<double> lambda_item_attr_factors;
  std::optional<double> lambda_user_bias;
  std::optional<double> lambda_item_bias;
  std::optional<double> free_offset_lambda;
  double w_ratings = 1.0;
  double w_user_info = 1.0;
  double w_item_info = 1.0;

  FitAlgorithm algorithm = FitAlgorithm::Lbfgs;
  int sweeps = 30;
  int max_iterations = 800;
  int memory_pairs = 10;
  double gradient_tolerance = 1e-5;
  double relative_objective_tolerance = 1e-9;

  int pca_components = 50;  // 0 disables the reduction

  double fraction_test_warm = 0.15;
  double fraction_new_users = 0.0;
  double fraction_new_items = 0.0;
  int min_test_ratings_per_user = 5;

  SideInfoScope side_info_scope = SideInfoScope::All;
  bool clip_rmse = false;
  int ndcg_k = 5;

  std::uint64_t seed = 42;
  int threads = 0;  // 0 keeps the runtime default
  bool deterministic = false;
  std::string output_dir = ".";

  bool operator==(const ExperimentConfig&) const = default;

  void apply_override(const std::string& key, const std::string& value);
  CmfHyperparams cmf_hyperparams() const;
  OffsetsPenalty offsets_penalty() const;
  SolverConfig solver_config() const;
  SplitSpec split_spec() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
std::string config_to_text(const ExperimentConfig& config);

// ---- command implementations (the CLI wraps these) ----

struct SplitSummary {
  struct SetCounts {
    std::string name;
    std::size_t ratings = 0;
    std::size_t users = 0;
    std::size_t items = 0;
  };
  std::vector<SetCounts> sets;
};

// Loads ratings (and item attributes for pool eligibility), splits, writes
// the five manifests plus split_summary.txt under output_dir.
SplitSummary run_split_command(const ExperimentConfig& config);

struct TrainOutcome {
  AnyModel model;
  std::vector<double> objective_trace;
  std::string termination;
  std::string model_path;
};

// Trains the configured model from the manifests in output_dir, saves the
// container and a training log with the per-iteration objective.
TrainOutcome run_train_command(const ExperimentConfig& config,
                               const std::string& model_filename = "model.bin");

// Scores the given model files (plus the two baselines) on every scenario
// with a non-empty manifest; writes report_<scenario>.{tsv,txt}.
std::vector<EvalReport> run_evaluate_command(const ExperimentConfig& config,
                                             const std::vector<std::string>& model_paths);

struct PredictRequest {
  std::string user_id;         // external id; empty when attrs are given
  std::string user_attrs_path; // whitespace/comma separated numbers, model input space
  std::string item_id;
  std::string item_attrs_path;
  int top_n = 0;               // 0: single score; > 0: ranked list over items
  bool timings = false;
};

struct PredictOutcome {
  std::vector<std::pair<std::string, double>> scored;  // (item id or "score", value)
  std::string timing_note;
};

PredictOutcome run_predict_command(const ExperimentConfig& config,
                                   const std::string& model_path,
                                   const PredictRequest& request);

}  // namespace coldrec
