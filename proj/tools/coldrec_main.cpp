#include <CLI11.hpp>
#include <iostream>

#include "coldrec/experiment.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs
  std::string output_dir;
  std::string seed_text;
  int threads = -1;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "flat key=value experiment config file");
  cmd->add_option("--set", args.overrides, "override a config key, e.g. --set k=40")
      ->take_all();
  cmd->add_option("--output-dir", args.output_dir, "directory for manifests/models/reports");
  cmd->add_option("--seed", args.seed_text, "master random seed");
  cmd->add_option("--threads", args.threads, "cap worker threads (0 = runtime default)");
  cmd->add_flag("--deterministic", args.deterministic,
                "single-threaded run with ordered reductions");
}

coldrec::ExperimentConfig build_config(const CommonArgs& args) {
  coldrec::ExperimentConfig config;
  if (!args.config_path.empty()) config = coldrec::parse_config_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw coldrec::ConfigError("--set expects key=value, got '" + kv + "'");
    config.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.output_dir.empty()) config.apply_override("output_dir", args.output_dir);
  if (!args.seed_text.empty()) config.apply_override("seed", args.seed_text);
  if (args.threads >= 0) config.threads = args.threads;
  if (args.deterministic) config.deterministic = true;

  if (config.deterministic) config.threads = 1;
#ifdef _OPENMP
  if (config.threads > 0) omp_set_num_threads(config.threads);
#endif
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coldrec: collective matrix factorization and offsets models with "
               "cold-start prediction"};
  app.require_subcommand(1);

  CommonArgs split_args, train_args, eval_args, predict_args, dump_args;

  CLI::App* split = app.add_subcommand("split", "four-way train/test split -> manifests");
  add_common(split, split_args);

  CLI::App* train = app.add_subcommand("train", "fit a model from the split manifests");
  add_common(train, train_args);
  std::string model_filename = "model.bin";
  train->add_option("--model-out", model_filename, "model file name inside output-dir");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score models on every test scenario");
  add_common(evaluate, eval_args);
  std::vector<std::string> model_paths;
  evaluate->add_option("--model", model_paths, "trained model file (repeatable)")->take_all();

  CLI::App* predict = app.add_subcommand("predict", "score one pair or rank items for a user");
  add_common(predict, predict_args);
  std::string predict_model;
  coldrec::PredictRequest request;
  predict->add_option("--model", predict_model, "trained model file")->required();
  predict->add_option("--user", request.user_id, "user id (external)");
  predict->add_option("--user-attrs", request.user_attrs_path,
                      "attribute vector file for a new user");
  predict->add_option("--item", request.item_id, "item id (external)");
  predict->add_option("--item-attrs", request.item_attrs_path,
                      "attribute vector file for a new item");
  predict->add_option("--top-n", request.top_n, "rank the top N training items");
  predict->add_flag("--timings", request.timings, "report fold-in timing");

  CLI::App* dump = app.add_subcommand("config-dump", "parse the config and echo it back");
  add_common(dump, dump_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) {
      const coldrec::SplitSummary summary = run_split_command(build_config(split_args));
      for (const auto& s : summary.sets)
        std::cout << s.name << "\tratings=" << s.ratings << "\tusers=" << s.users
                  << "\titems=" << s.items << "\n";
    } else if (train->parsed()) {
      const coldrec::TrainOutcome outcome =
          run_train_command(build_config(train_args), model_filename);
      std::cout << "model written to " << outcome.model_path << "\n";
      std::cout << "objective: " << outcome.objective_trace.front() << " -> "
                << outcome.objective_trace.back() << " (" << outcome.termination << ", "
                << outcome.objective_trace.size() - 1 << " steps)\n";
    } else if (evaluate->parsed()) {
      const auto reports = run_evaluate_command(build_config(eval_args), model_paths);
      for (const auto& report : reports) coldrec::write_report_table(report, std::cout);
    } else if (predict->parsed()) {
      const coldrec::PredictOutcome outcome =
          run_predict_command(build_config(predict_args), predict_model, request);
      for (const auto& [label, score] : outcome.scored)
        std::cout << label << "\t" << score << "\n";
      if (!outcome.timing_note.empty()) std::cout << outcome.timing_note << "\n";
    } else if (dump->parsed()) {
      std::cout << coldrec::config_to_text(build_config(dump_args));
    }
  } catch (const coldrec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const coldrec::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const coldrec::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
