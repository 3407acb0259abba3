#pragma once

#include <cstdint>
#include <vector>

#include "coldrec/types.hpp"

namespace coldrec {

struct SplitSpec {
  double fraction_test_warm = 0.15;  // held-out share of warm (old x old) ratings
  double fraction_new_users = 0.0;   // share of users held out entirely
  double fraction_new_items = 0.0;   // share of items held out entirely
  int min_test_ratings_per_user = 5;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Train plus the four test scenarios, all in the global index space of the
// input ratings. Test entries keep global indices; user_in_train /
// item_in_train say which rows ended up with at least one training rating.
struct FourWaySplit {
  int n_users = 0;
  int n_items = 0;
  RatingsMatrix train;
  std::vector<Rating> test_warm;       // users and items in train
  std::vector<Rating> test_new_users;  // users held out, items in train
  std::vector<Rating> test_new_items;  // users in train, items held out
  std::vector<Rating> test_new_both;   // users from (b), items from (c)
  std::vector<std::uint8_t> user_in_train;
  std::vector<std::uint8_t> item_in_train;
  std::vector<std::uint8_t> user_is_new;  // sampled hold-out users
  std::vector<std::uint8_t> item_is_new;  // sampled hold-out items
};

// Hold out a random user set and a random item set (new items only from
// items with attributes available), keep the remaining ratings minus a warm
// hold-out slice as training data, and build the four test sets. Users with
// fewer than min_test_ratings_per_user ratings inside a given test set are
// dropped from that set. Deterministic for a fixed seed.
FourWaySplit four_way_split(const RatingsMatrix& ratings,
                            const std::vector<std::uint8_t>& item_attr_available,
                            const SplitSpec& spec);

}  // namespace coldrec
