#include "coldrec/split.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "coldrec/rng.hpp"

namespace coldrec {

namespace {

// Drops every user with fewer than min_count ratings inside this set.
void enforce_min_per_user(std::vector<Rating>& entries, int min_count) {
  std::unordered_map<int, int> counts;
  for (const Rating& r : entries) ++counts[r.user];
  std::erase_if(entries, [&](const Rating& r) { return counts[r.user] < min_count; });
}

std::unordered_set<int> users_of(const std::vector<Rating>& entries) {
  std::unordered_set<int> out;
  for (const Rating& r : entries) out.insert(r.user);
  return out;
}

std::unordered_set<int> items_of(const std::vector<Rating>& entries) {
  std::unordered_set<int> out;
  for (const Rating& r : entries) out.insert(r.item);
  return out;
}

}  // namespace

void SplitSpec::validate() const {
  auto in_range = [](double f) { return f >= 0.0 && f < 1.0; };
  if (!in_range(fraction_test_warm) || !in_range(fraction_new_users) ||
      !in_range(fraction_new_items))
    throw ConfigError("SplitSpec: fractions must lie in [0, 1)");
  if (min_test_ratings_per_user < 1)
    throw ConfigError("SplitSpec: min_test_ratings_per_user must be >= 1");
}

FourWaySplit four_way_split(const RatingsMatrix& ratings,
                            const std::vector<std::uint8_t>& item_attr_available,
                            const SplitSpec& spec) {
  spec.validate();
  if (ratings.empty()) throw DataError("four_way_split: empty ratings");
  const int n_users = ratings.n_users();
  const int n_items = ratings.n_items();
  if (item_attr_available.size() != static_cast<std::size_t>(n_items))
    throw DataError("four_way_split: item_attr_available length mismatch");

  FourWaySplit split;
  split.n_users = n_users;
  split.n_items = n_items;
  split.user_is_new.assign(static_cast<std::size_t>(n_users), 0);
  split.item_is_new.assign(static_cast<std::size_t>(n_items), 0);

  Rng rng(substream_seed(spec.rng_seed, "split"));

  // Hold-out entity pools. New items are drawn only from the attribute-covered
  // pool, since attribute-free items cannot be scored cold.
  const auto n_new_users =
      static_cast<std::size_t>(spec.fraction_new_users * static_cast<double>(n_users));
  if (n_new_users > 0) {
    std::vector<int> picked;
    rng.sample_indices(static_cast<std::size_t>(n_users), n_new_users, picked);
    for (int u : picked) split.user_is_new[static_cast<std::size_t>(u)] = 1;
  }

  std::vector<int> eligible_items;
  for (int i = 0; i < n_items; ++i)
    if (item_attr_available[static_cast<std::size_t>(i)]) eligible_items.push_back(i);
  const auto n_new_items =
      static_cast<std::size_t>(spec.fraction_new_items * static_cast<double>(n_items));
  if (n_new_items > eligible_items.size())
    throw ConfigError(
        "four_way_split: fraction_new_items asks for " + std::to_string(n_new_items) +
        " items but only " + std::to_string(eligible_items.size()) + " have attributes");
  if (n_new_items > 0) {
    std::vector<std::size_t> picked;
    rng.sample_indices(eligible_items.size(), n_new_items, picked);
    for (std::size_t slot : picked)
      split.item_is_new[static_cast<std::size_t>(eligible_items[slot])] = 1;
  }

  // Route every rating to its pool.
  std::vector<Rating> warm_pool;
  std::vector<Rating> pool_new_users, pool_new_items, pool_new_both;
  for (const Rating& r : ratings.entries()) {
    const bool nu = split.user_is_new[static_cast<std::size_t>(r.user)] != 0;
    const bool ni = split.item_is_new[static_cast<std::size_t>(r.item)] != 0;
    if (nu && ni)
      pool_new_both.push_back(r);
    else if (nu)
      pool_new_users.push_back(r);
    else if (ni)
      pool_new_items.push_back(r);
    else
      warm_pool.push_back(r);
  }

  // Warm hold-out slice.
  const auto n_warm_test = static_cast<std::size_t>(spec.fraction_test_warm *
                                                    static_cast<double>(warm_pool.size()));
  std::vector<std::size_t> order;
  rng.sample_indices(warm_pool.size(), warm_pool.size(), order);
  std::vector<Rating> train_entries;
  train_entries.reserve(warm_pool.size() - n_warm_test);
  split.test_warm.reserve(n_warm_test);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos < n_warm_test)
      split.test_warm.push_back(warm_pool[order[pos]]);
    else
      train_entries.push_back(warm_pool[order[pos]]);
  }
  if (train_entries.empty())
    throw ConfigError("four_way_split: the requested fractions leave an empty training set");

  split.train = RatingsMatrix(n_users, n_items, std::move(train_entries));
  split.user_in_train.assign(static_cast<std::size_t>(n_users), 0);
  split.item_in_train.assign(static_cast<std::size_t>(n_items), 0);
  for (const Rating& r : split.train.entries()) {
    split.user_in_train[static_cast<std::size_t>(r.user)] = 1;
    split.item_in_train[static_cast<std::size_t>(r.item)] = 1;
  }

  // Scenario membership: every test rating must point at entities the
  // scenario can actually score.
  std::erase_if(split.test_warm, [&](const Rating& r) {
    return !split.user_in_train[static_cast<std::size_t>(r.user)] ||
           !split.item_in_train[static_cast<std::size_t>(r.item)];
  });
  enforce_min_per_user(split.test_warm, spec.min_test_ratings_per_user);

  split.test_new_users = std::move(pool_new_users);
  std::erase_if(split.test_new_users, [&](const Rating& r) {
    return !split.item_in_train[static_cast<std::size_t>(r.item)];
  });
  enforce_min_per_user(split.test_new_users, spec.min_test_ratings_per_user);

  split.test_new_items = std::move(pool_new_items);
  std::erase_if(split.test_new_items, [&](const Rating& r) {
    return !split.user_in_train[static_cast<std::size_t>(r.user)];
  });
  enforce_min_per_user(split.test_new_items, spec.min_test_ratings_per_user);

  // Scenario (d) reuses the user pool of (b) and the item pool of (c).
  const auto b_users = users_of(split.test_new_users);
  const auto c_items = items_of(split.test_new_items);
  split.test_new_both = std::move(pool_new_both);
  std::erase_if(split.test_new_both, [&](const Rating& r) {
    return !b_users.contains(r.user) || !c_items.contains(r.item);
  });
  enforce_min_per_user(split.test_new_both, spec.min_test_ratings_per_user);

  return split;
}

}  // namespace coldrec
