#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coldrec/cmf.hpp"
#include "coldrec/metrics.hpp"
#include "coldrec/offsets.hpp"
#include "coldrec/split.hpp"

namespace coldrec {

enum class Scenario { Warm, NewUsers, NewItems, NewBoth };
std::string to_string(Scenario scenario);
const std::vector<Rating>& scenario_entries(const FourWaySplit& split, Scenario scenario);

// A scoring model under evaluation. Scores are requested in the global index
// space of the split; nullopt means the pair cannot be scored.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string label() const = 0;
  virtual std::string weight_ratings() const { return "-"; }
  virtual std::string weight_user_info() const { return "-"; }
  virtual std::string weight_item_info() const { return "-"; }
  virtual bool provides_rmse() const { return true; }
  virtual bool supports(Scenario scenario) const = 0;
  virtual std::optional<double> score(Scenario scenario, int user, int item) const = 0;
};

struct ReportRow {
  std::string label;
  std::string w_ratings = "-";
  std::string w_user_info = "-";
  std::string w_item_info = "-";
  bool capable = false;
  std::optional<double> rmse;
  std::optional<double> ndcg;
  std::size_t ndcg_users = 0;
  std::size_t skipped_undefined = 0;
  std::size_t unscored = 0;  // pairs or users the scorer could not handle
};

struct EvalReport {
  Scenario scenario = Scenario::Warm;
  int k = 5;
  std::size_t n_ratings = 0;
  std::size_t n_users = 0;
  std::vector<ReportRow> rows;
};

struct EvalOptions {
  int ndcg_k = 5;
  bool clip_rmse_predictions = false;  // clip to [min, max] before RMSE
  double clip_min = 1.0;
  double clip_max = 5.0;
};

// One report per scenario with a non-empty test set; incapable models get a
// flagged row rather than being dropped.
std::vector<EvalReport> run_scenarios(const std::vector<const Scorer*>& models,
                                      const FourWaySplit& split,
                                      const EvalOptions& options = {});

void write_report_delimited(const EvalReport& report, std::ostream& out, char separator);
void write_report_table(const EvalReport& report, std::ostream& out);

// ---- concrete scorers ----

// Trained CMF (or plain MF) model evaluated in the split's global space.
// Cold sides fold in from the global attribute matrices, warm sides use the
// trained rows addressed through global->local index maps.
class CmfScorer : public Scorer {
 public:
  CmfScorer(std::string label, const CmfModel& model, std::vector<int> user_to_local,
            std::vector<int> item_to_local, const SideInfoMatrix* user_attrs_global,
            const SideInfoMatrix* item_attrs_global, const CmfHyperparams& hyper);

  std::string label() const override { return label_; }
  std::string weight_ratings() const override;
  std::string weight_user_info() const override;
  std::string weight_item_info() const override;
  bool supports(Scenario scenario) const override;
  std::optional<double> score(Scenario scenario, int user, int item) const override;

 private:
  std::optional<Vector> folded_user(int user) const;
  std::optional<Vector> folded_item(int item) const;

  std::string label_;
  const CmfModel& model_;
  std::vector<int> user_to_local_;
  std::vector<int> item_to_local_;
  const SideInfoMatrix* user_attrs_;
  const SideInfoMatrix* item_attrs_;
  double w_ratings_, w_user_info_, w_item_info_;
  bool has_user_side_, has_item_side_;
  mutable std::unordered_map<int, Vector> user_fold_cache_;
  mutable std::unordered_map<int, Vector> item_fold_cache_;
};

class OffsetsScorer : public Scorer {
 public:
  OffsetsScorer(std::string label, const OffsetsModel& model, std::vector<int> user_to_local,
                std::vector<int> item_to_local, const SideInfoMatrix* user_attrs_global,
                const SideInfoMatrix* item_attrs_global);

  std::string label() const override { return label_; }
  bool supports(Scenario scenario) const override;
  std::optional<double> score(Scenario scenario, int user, int item) const override;

 private:
  std::string label_;
  const OffsetsModel& model_;
  std::vector<int> user_to_local_;
  std::vector<int> item_to_local_;
  const SideInfoMatrix* user_attrs_;
  const SideInfoMatrix* item_attrs_;
  bool has_user_side_, has_item_side_;
};

// Non-personalized train-average ranking; cannot score unseen items.
class MostPopularScorer : public Scorer {
 public:
  explicit MostPopularScorer(const RatingsMatrix& train)
      : scores_(most_popular_baseline(train)) {}

  std::string label() const override { return "most-popular"; }
  bool provides_rmse() const override { return false; }
  bool supports(Scenario scenario) const override {
    return scenario == Scenario::Warm || scenario == Scenario::NewUsers;
  }
  std::optional<double> score(Scenario, int, int item) const override {
    const auto it = scores_.find(item);
    if (it == scores_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<int, double> scores_;
};

class RandomScorer : public Scorer {
 public:
  explicit RandomScorer(std::uint64_t seed) : baseline_(seed) {}

  std::string label() const override { return "random"; }
  bool provides_rmse() const override { return false; }
  bool supports(Scenario) const override { return true; }
  std::optional<double> score(Scenario, int user, int item) const override {
    return baseline_(user, item);
  }

 private:
  RandomBaseline baseline_;
};

}  // namespace coldrec
