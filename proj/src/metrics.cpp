#include "coldrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "coldrec/rng.hpp"

namespace coldrec {

double rmse(const std::vector<double>& predictions, const std::vector<double>& actuals) {
  if (predictions.empty() || predictions.size() != actuals.size())
    throw DataError("rmse: prediction and actual vectors must have equal nonzero length");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - actuals[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double dcg_at_k(const std::vector<double>& ranked_ratings, int k) {
  const std::size_t depth = std::min<std::size_t>(ranked_ratings.size(),
                                                  k > 0 ? static_cast<std::size_t>(k) : 0);
  double dcg = 0.0;
  for (std::size_t pos = 0; pos < depth; ++pos)
    dcg += (std::exp2(ranked_ratings[pos]) - 1.0) /
           std::log2(static_cast<double>(pos) + 2.0);
  return dcg;
}

std::optional<double> ndcg_at_k(const std::vector<double>& predicted_scores,
                                const std::vector<double>& actual_ratings, int k) {
  if (predicted_scores.empty() || predicted_scores.size() != actual_ratings.size())
    throw DataError("ndcg_at_k: score and rating vectors must have equal nonzero length");

  std::vector<std::size_t> order(predicted_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predicted_scores[a] > predicted_scores[b];
  });
  std::vector<double> ranked(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    ranked[pos] = actual_ratings[order[pos]];

  std::vector<double> ideal = actual_ratings;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  const double ideal_dcg = dcg_at_k(ideal, k);
  if (ideal_dcg == 0.0) return std::nullopt;
  return dcg_at_k(ranked, k) / ideal_dcg;
}

MeanNdcgResult mean_user_ndcg(const PairScorer& scorer, const std::vector<Rating>& test_set,
                              int k) {
  if (test_set.empty()) throw DataError("mean_user_ndcg: empty test set");

  // Group by user with items in ascending id order (the documented tie rule).
  std::map<int, std::vector<std::pair<int, double>>> per_user;
  for (const Rating& r : test_set) per_user[r.user].emplace_back(r.item, r.value);

  MeanNdcgResult result;
  double total = 0.0;
  for (auto& [user, items] : per_user) {
    std::sort(items.begin(), items.end());
    std::vector<double> scores, ratings;
    scores.reserve(items.size());
    ratings.reserve(items.size());
    bool scorable = true;
    for (const auto& [item, rating] : items) {
      const std::optional<double> s = scorer(user, item);
      if (!s) {
        scorable = false;
        break;
      }
      scores.push_back(*s);
      ratings.push_back(rating);
    }
    if (!scorable) {
      ++result.users_skipped_unscored;
      continue;
    }
    const std::optional<double> value = ndcg_at_k(scores, ratings, k);
    if (!value) {
      ++result.users_skipped_undefined;
      continue;
    }
    total += *value;
    ++result.users_counted;
  }
  if (result.users_counted > 0) result.value = total / static_cast<double>(result.users_counted);
  return result;
}

std::unordered_map<int, double> most_popular_baseline(const RatingsMatrix& train) {
  if (train.empty()) throw DataError("most_popular_baseline: empty training set");
  std::unordered_map<int, double> sums;
  std::unordered_map<int, int> counts;
  for (const Rating& r : train.entries()) {
    sums[r.item] += r.value;
    ++counts[r.item];
  }
  std::unordered_map<int, double> means;
  means.reserve(sums.size());
  for (const auto& [item, sum] : sums) means[item] = sum / counts[item];
  return means;
}

double RandomBaseline::operator()(int user, int item) const {
  return hashed_uniform(seed_, static_cast<std::uint64_t>(user),
                        static_cast<std::uint64_t>(item));
}

}  // namespace coldrec
