#pragma once

#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "coldrec/types.hpp"

namespace coldrec {

double rmse(const std::vector<double>& predictions, const std::vector<double>& actuals);

// Gains are 2^rating - 1 with the log2(position + 1) discount; `ranked_ratings`
// holds the actual ratings ordered by descending predicted score.
double dcg_at_k(const std::vector<double>& ranked_ratings, int k);

// DCG of the predicted ordering divided by the ideal DCG. Ties in predicted
// score break toward the lower index (callers pass items in ascending item-id
// order, making the rule "ascending item id among equals"). Returns nullopt
// when every gain is zero and the metric is undefined for this user.
std::optional<double> ndcg_at_k(const std::vector<double>& predicted_scores,
                                const std::vector<double>& actual_ratings, int k);

struct MeanNdcgResult {
  double value = 0.0;       // mean over users with a defined NDCG
  std::size_t users_counted = 0;
  std::size_t users_skipped_undefined = 0;  // ideal DCG was zero
  std::size_t users_skipped_unscored = 0;   // scorer could not rank the user
};

// Scores each user's own test items, ranks them, and averages the per-user
// NDCG@k. The scorer may return nullopt for pairs it cannot score; such users
// are excluded and counted.
using PairScorer = std::function<std::optional<double>(int user, int item)>;
MeanNdcgResult mean_user_ndcg(const PairScorer& scorer, const std::vector<Rating>& test_set,
                              int k);

// Train-set average rating per item; items without training ratings are
// absent from the map.
std::unordered_map<int, double> most_popular_baseline(const RatingsMatrix& train);

// Pure uniform scorer, deterministic per (seed, user, item).
class RandomBaseline {
 public:
  explicit RandomBaseline(std::uint64_t seed) : seed_(seed) {}
  double operator()(int user, int item) const;

 private:
  std::uint64_t seed_;
};

}  // namespace coldrec
