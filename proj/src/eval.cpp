#include "coldrec/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace coldrec {

namespace {

std::string format_weight(double w) {
  std::ostringstream s;
  s << w;
  return s.str();
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::Warm: return "warm";
    case Scenario::NewUsers: return "new-users";
    case Scenario::NewItems: return "new-items";
    case Scenario::NewBoth: return "new-both";
  }
  return "unknown";
}

const std::vector<Rating>& scenario_entries(const FourWaySplit& split, Scenario scenario) {
  switch (scenario) {
    case Scenario::Warm: return split.test_warm;
    case Scenario::NewUsers: return split.test_new_users;
    case Scenario::NewItems: return split.test_new_items;
    case Scenario::NewBoth: return split.test_new_both;
  }
  return split.test_warm;
}

std::vector<EvalReport> run_scenarios(const std::vector<const Scorer*>& models,
                                      const FourWaySplit& split, const EvalOptions& options) {
  std::vector<EvalReport> reports;
  for (Scenario scenario :
       {Scenario::Warm, Scenario::NewUsers, Scenario::NewItems, Scenario::NewBoth}) {
    const std::vector<Rating>& entries = scenario_entries(split, scenario);
    if (entries.empty()) continue;

    EvalReport report;
    report.scenario = scenario;
    report.k = options.ndcg_k;
    report.n_ratings = entries.size();
    {
      std::vector<int> users;
      for (const Rating& r : entries) users.push_back(r.user);
      std::sort(users.begin(), users.end());
      report.n_users =
          static_cast<std::size_t>(std::unique(users.begin(), users.end()) - users.begin());
    }

    for (const Scorer* model : models) {
      ReportRow row;
      row.label = model->label();
      row.w_ratings = model->weight_ratings();
      row.w_user_info = model->weight_user_info();
      row.w_item_info = model->weight_item_info();
      row.capable = model->supports(scenario);
      if (!row.capable) {
        report.rows.push_back(std::move(row));
        continue;
      }

      if (model->provides_rmse()) {
        std::vector<double> predictions, actuals;
        predictions.reserve(entries.size());
        actuals.reserve(entries.size());
        for (const Rating& r : entries) {
          const std::optional<double> s = model->score(scenario, r.user, r.item);
          if (!s) {
            ++row.unscored;
            continue;
          }
          double p = *s;
          if (options.clip_rmse_predictions)
            p = std::clamp(p, options.clip_min, options.clip_max);
          predictions.push_back(p);
          actuals.push_back(r.value);
        }
        if (!predictions.empty()) row.rmse = rmse(predictions, actuals);
      }

      const MeanNdcgResult ndcg = mean_user_ndcg(
          [&](int user, int item) { return model->score(scenario, user, item); }, entries,
          options.ndcg_k);
      if (ndcg.users_counted > 0) row.ndcg = ndcg.value;
      row.ndcg_users = ndcg.users_counted;
      row.skipped_undefined = ndcg.users_skipped_undefined;
      row.unscored += ndcg.users_skipped_unscored;
      report.rows.push_back(std::move(row));
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_report_delimited(const EvalReport& report, std::ostream& out, char separator) {
  out << "scenario" << separator << "model" << separator << "w_x" << separator << "w_u"
      << separator << "w_i" << separator << "rmse" << separator << "ndcg@" << report.k
      << separator << "ndcg_users" << separator << "flags" << "\n";
  for (const ReportRow& row : report.rows) {
    std::string flags;
    if (!row.capable) flags = "unsupported";
    if (row.unscored > 0)
      flags += (flags.empty() ? "" : ";") + std::string("unscored=") +
               std::to_string(row.unscored);
    if (row.skipped_undefined > 0)
      flags += (flags.empty() ? "" : ";") + std::string("undefined_ndcg=") +
               std::to_string(row.skipped_undefined);
    out << to_string(report.scenario) << separator << row.label << separator << row.w_ratings
        << separator << row.w_user_info << separator << row.w_item_info << separator
        << format_metric(row.rmse) << separator << format_metric(row.ndcg) << separator
        << row.ndcg_users << separator << (flags.empty() ? "-" : flags) << "\n";
  }
}

void write_report_table(const EvalReport& report, std::ostream& out) {
  out << "Scenario: " << to_string(report.scenario) << "  (" << report.n_ratings
      << " ratings, " << report.n_users << " users)\n";
  out << std::left << std::setw(34) << "Model" << std::right << std::setw(7) << "w_x"
      << std::setw(7) << "w_u" << std::setw(7) << "w_i" << std::setw(10) << "RMSE"
      << std::setw(10) << ("NDCG@" + std::to_string(report.k)) << "\n";
  out << std::string(75, '-') << "\n";
  for (const ReportRow& row : report.rows) {
    std::string label = row.label;
    if (!row.capable) label += " (n/a)";
    out << std::left << std::setw(34) << label << std::right << std::setw(7) << row.w_ratings
        << std::setw(7) << row.w_user_info << std::setw(7) << row.w_item_info << std::setw(10)
        << format_metric(row.rmse) << std::setw(10) << format_metric(row.ndcg) << "\n";
  }
  out << "\n";
}

CmfScorer::CmfScorer(std::string label, const CmfModel& model, std::vector<int> user_to_local,
                     std::vector<int> item_to_local, const SideInfoMatrix* user_attrs_global,
                     const SideInfoMatrix* item_attrs_global, const CmfHyperparams& hyper)
    : label_(std::move(label)),
      model_(model),
      user_to_local_(std::move(user_to_local)),
      item_to_local_(std::move(item_to_local)),
      user_attrs_(user_attrs_global),
      item_attrs_(item_attrs_global),
      w_ratings_(hyper.w_ratings),
      w_user_info_(hyper.w_user_info),
      w_item_info_(hyper.w_item_info) {
  has_user_side_ = user_attrs_ != nullptr && model_.user_attr_factors.rows() > 0;
  has_item_side_ = item_attrs_ != nullptr && model_.item_attr_factors.rows() > 0;
}

std::string CmfScorer::weight_ratings() const { return format_weight(w_ratings_); }
std::string CmfScorer::weight_user_info() const {
  return model_.user_attr_factors.rows() > 0 ? format_weight(w_user_info_) : "-";
}
std::string CmfScorer::weight_item_info() const {
  return model_.item_attr_factors.rows() > 0 ? format_weight(w_item_info_) : "-";
}

bool CmfScorer::supports(Scenario scenario) const {
  switch (scenario) {
    case Scenario::Warm: return true;
    case Scenario::NewUsers: return has_user_side_;
    case Scenario::NewItems: return has_item_side_;
    case Scenario::NewBoth: return has_user_side_ && has_item_side_;
  }
  return false;
}

std::optional<Vector> CmfScorer::folded_user(int user) const {
  const auto it = user_fold_cache_.find(user);
  if (it != user_fold_cache_.end()) return it->second;
  if (user < 0 || user >= user_attrs_->n_rows() || !user_attrs_->present(user))
    return std::nullopt;
  Vector folded = fold_in_user(model_, user_attrs_->values.row(user).transpose());
  user_fold_cache_.emplace(user, folded);
  return folded;
}

std::optional<Vector> CmfScorer::folded_item(int item) const {
  const auto it = item_fold_cache_.find(item);
  if (it != item_fold_cache_.end()) return it->second;
  if (item < 0 || item >= item_attrs_->n_rows() || !item_attrs_->present(item))
    return std::nullopt;
  Vector folded = fold_in_item(model_, item_attrs_->values.row(item).transpose());
  item_fold_cache_.emplace(item, folded);
  return folded;
}

std::optional<double> CmfScorer::score(Scenario scenario, int user, int item) const {
  const FactorPartition& part = model_.partition;
  const auto x_block = [&](const Vector& full) {
    return Vector(full.segment(part.ratings_offset(), part.k_ratings()));
  };

  const bool user_warm = scenario == Scenario::Warm || scenario == Scenario::NewItems;
  const bool item_warm = scenario == Scenario::Warm || scenario == Scenario::NewUsers;

  Vector user_x;
  double user_bias = 0.0;
  if (user_warm) {
    const int lu = user >= 0 && user < static_cast<int>(user_to_local_.size())
                       ? user_to_local_[static_cast<std::size_t>(user)]
                       : -1;
    if (lu < 0) return std::nullopt;
    user_x = model_.user_ratings_row(lu);
    user_bias = model_.user_bias[lu];
  } else {
    const std::optional<Vector> folded = folded_user(user);
    if (!folded) return std::nullopt;
    user_x = x_block(*folded);
  }

  Vector item_x;
  double item_bias = 0.0;
  if (item_warm) {
    const int li = item >= 0 && item < static_cast<int>(item_to_local_.size())
                       ? item_to_local_[static_cast<std::size_t>(item)]
                       : -1;
    if (li < 0) return std::nullopt;
    item_x = model_.item_ratings_row(li);
    item_bias = model_.item_bias[li];
  } else {
    const std::optional<Vector> folded = folded_item(item);
    if (!folded) return std::nullopt;
    item_x = x_block(*folded);
  }

  return cmf_predict(model_, user_x, item_x, user_bias, item_bias);
}

OffsetsScorer::OffsetsScorer(std::string label, const OffsetsModel& model,
                             std::vector<int> user_to_local, std::vector<int> item_to_local,
                             const SideInfoMatrix* user_attrs_global,
                             const SideInfoMatrix* item_attrs_global)
    : label_(std::move(label)),
      model_(model),
      user_to_local_(std::move(user_to_local)),
      item_to_local_(std::move(item_to_local)),
      user_attrs_(user_attrs_global),
      item_attrs_(item_attrs_global) {
  has_user_side_ = user_attrs_ != nullptr && model_.n_user_attrs() > 0;
  has_item_side_ = item_attrs_ != nullptr && model_.n_item_attrs() > 0;
}

bool OffsetsScorer::supports(Scenario scenario) const {
  switch (scenario) {
    case Scenario::Warm: return true;
    case Scenario::NewUsers: return has_user_side_;
    case Scenario::NewItems: return has_item_side_;
    case Scenario::NewBoth: return has_user_side_ && has_item_side_;
  }
  return false;
}

std::optional<double> OffsetsScorer::score(Scenario scenario, int user, int item) const {
  const bool user_warm = scenario == Scenario::Warm || scenario == Scenario::NewItems;
  const bool item_warm = scenario == Scenario::Warm || scenario == Scenario::NewUsers;

  EntityRef user_ref = EntityRef::cold();
  if (user_warm) {
    const int lu = user >= 0 && user < static_cast<int>(user_to_local_.size())
                       ? user_to_local_[static_cast<std::size_t>(user)]
                       : -1;
    if (lu < 0) return std::nullopt;
    user_ref = EntityRef::known(lu);
  } else {
    if (user < 0 || user >= user_attrs_->n_rows() || !user_attrs_->present(user))
      return std::nullopt;
    user_ref = EntityRef::from_attrs(user_attrs_->values.row(user).transpose());
  }

  EntityRef item_ref = EntityRef::cold();
  if (item_warm) {
    const int li = item >= 0 && item < static_cast<int>(item_to_local_.size())
                       ? item_to_local_[static_cast<std::size_t>(item)]
                       : -1;
    if (li < 0) return std::nullopt;
    item_ref = EntityRef::known(li);
  } else {
    if (item < 0 || item >= item_attrs_->n_rows() || !item_attrs_->present(item))
      return std::nullopt;
    item_ref = EntityRef::from_attrs(item_attrs_->values.row(item).transpose());
  }

  return offsets_predict(model_, user_ref, item_ref);
}

}  // namespace coldrec
