#include <doctest.h>

#include <nlohmann/json.hpp>

#include "nexcv/error.hpp"
#include "nexcv/partition.hpp"
#include "nexcv/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nexcv;
using namespace nexcv::testing;

using Labels = std::set<std::string>;

TEST_CASE("select_cutoff hand traces") {
  const auto stats = stats_from({{"A", 10}, {"B", 4}, {"C", 2}});
  auto part = select_cutoff(stats, 5);
  CHECK(part.small_labels == Labels{"B", "C"});
  CHECK(part.large_labels == Labels{"A"});

  part = select_cutoff(stats, 0);
  CHECK(part.small_labels.empty());
  CHECK(part.large_labels == Labels{"A", "B", "C"});

  part = select_cutoff(stats_from({{"A", 5}}), 5);  // strict inequality
  CHECK(part.small_labels.empty());
}

TEST_CASE("select_proportional hand traces") {
  auto part = select_proportional(stats_from({{"A", 10}, {"B", 3}, {"C", 2}}), 0.15);
  CHECK(part.small_labels == Labels{"B", "C"});
  CHECK(part.large_labels == Labels{"A"});

  part = select_proportional(stats_from({{"A", 10}, {"B", 3}, {"C", 2}}), 0.0);
  CHECK(part.small_labels.empty());

  part = select_proportional(stats_from({{"A", 6}, {"B", 6}}), 0.4);
  CHECK(part.small_labels == Labels{"A"});
  CHECK(part.large_labels == Labels{"B"});

  CHECK_THROWS_AS(select_proportional(stats_from({{"A", 1}}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(select_proportional(stats_from({{"A", 1}}), -0.1), std::invalid_argument);
}

TEST_CASE("selection properties on random count tables") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    CountTable counts;
    const auto n_labels = 1 + rng.below(8);
    for (std::size_t l = 0; l < n_labels; ++l) {
      counts[std::string(1, static_cast<char>('A' + l))] = 1 + rng.below(12);
    }
    const auto stats = stats_from(counts);
    const int k = static_cast<int>(rng.below(14));
    const double p = static_cast<double>(rng.below(100)) / 100.0;

    for (const auto& part : {select_cutoff(stats, k), select_proportional(stats, p)}) {
      Labels all;
      for (const auto& [label, n] : counts) all.insert(label);
      Labels joined = part.small_labels;
      joined.insert(part.large_labels.begin(), part.large_labels.end());
      CHECK(joined == all);
      for (const auto& s : part.small_labels) CHECK_FALSE(part.large_labels.contains(s));
    }

    CHECK(select_cutoff(stats, k).small_labels == cutoff_oracle(counts, k));
    CHECK(select_proportional(stats, p).small_labels == proportional_oracle(counts, p));

    // Monotonicity in K and P.
    const auto wider_k = select_cutoff(stats, k + 1 + static_cast<int>(rng.below(3))).small_labels;
    for (const auto& s : select_cutoff(stats, k).small_labels) CHECK(wider_k.contains(s));
    const double p2 = std::min(0.99, p + static_cast<double>(rng.below(30)) / 100.0);
    const auto wider_p = select_proportional(stats, p2).small_labels;
    for (const auto& s : select_proportional(stats, p).small_labels) CHECK(wider_p.contains(s));

    // Minimality: dropping the last-popped label leaves the mass below P.
    const auto small = select_proportional(stats, p).small_labels;
    if (!small.empty()) {
      std::size_t mass = 0;
      std::string last;
      for (const auto& label : stats.sorted) {
        if (!small.contains(label)) break;
        mass += counts.at(label);
        last = label;
      }
      const auto without = mass - counts.at(last);
      CHECK(static_cast<double>(without) / static_cast<double>(stats.total) < p);
    }
  }
}

TEST_CASE("rounding rules") {
  CHECK(retained_test_count(20, 0.2) == 4);
  CHECK(retained_test_count(2, 0.2) == 1);
  CHECK(retained_test_count(2, 0.9) == 1);
  CHECK(retained_test_count(40, 0.2) == 8);
  CHECK(retained_test_count(7, 0.2) == 1);
  CHECK(retained_test_count(8, 0.2) == 2);
  CHECK_THROWS_AS(retained_test_count(1, 0.2), PartitionError);
  CHECK(small_label_test_count(0, 0.2) == 0);
  CHECK(small_label_test_count(2, 0.2) == 1);
  CHECK(small_label_test_count(13, 0.2) == 3);
}

TEST_CASE("provision without small classes splits every class 16/4") {
  const auto d = make_dataset({{"A", 20}, {"B", 20}, {"C", 20}, {"D", 20}, {"E", 20}});
  const auto part = select_cutoff(class_stats(d), 0);
  const auto s = provision(d, part, 0.2, 1);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  CHECK(s.negatives_in_test() == 0);
  CHECK(split_violations(d, part, s, 0.2).empty());
}

TEST_CASE("provision sends one small class to test as negatives") {
  const auto d = make_dataset({{"A", 40}, {"B", 3}, {"C", 2}});
  const ClassPartition part{{"B", "C"}, {"A"}};
  std::set<std::string> negative_classes_seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = provision(d, part, 0.2, seed);
    CHECK(split_violations(d, part, s, 0.2).empty());
    std::size_t a_test = 0;
    std::set<std::string> oos;
    for (const auto& item : s.test) {
      if (item.gold == "A") ++a_test;
      if (item.gold == kOutOfScope) oos.insert(item.origin_label);
    }
    CHECK(a_test == 8);
    REQUIRE(oos.size() == 1);
    const auto negative = *oos.begin();
    const auto positive = negative == "B" ? "C" : "B";
    negative_classes_seen.insert(negative);
    CHECK(s.negatives_in_test() == (negative == "B" ? 3u : 2u));
    std::size_t positive_in_train = 0;
    for (const auto& ex : s.train) positive_in_train += ex.label == positive ? 1 : 0;
    CHECK(positive_in_train == (negative == "B" ? 2u : 3u));
    CHECK(s.train.size() == 32 + positive_in_train);
  }
  CHECK(negative_classes_seen == Labels{"B", "C"});  // the seed decides
}

TEST_CASE("provision is deterministic in seed") {
  const auto d = generate_synthetic(standard_shape(5));
  const auto part = select_proportional(class_stats(d), 0.15);
  CHECK(provision(d, part, 0.2, 42) == provision(d, part, 0.2, 42));
  CHECK_FALSE(provision(d, part, 0.2, 42) == provision(d, part, 0.2, 43));
}

TEST_CASE("provision errors") {
  const auto d = make_dataset({{"A", 10}, {"B", 1}});
  CHECK_THROWS_WITH_AS(provision(d, ClassPartition{{"A", "B"}, {}}, 0.2, 0),
                       doctest::Contains("no retained classes"), PartitionError);
  CHECK_THROWS_AS(provision(d, ClassPartition{{}, {"A", "B"}}, 0.2, 0), PartitionError);
  CHECK_THROWS_AS(provision(d, ClassPartition{{}, {"A"}}, 0.2, 0), PartitionError);
  CHECK_THROWS_AS(provision(d, ClassPartition{{"B"}, {"A"}}, 0.0, 0), std::invalid_argument);
}

TEST_CASE("provision matches one 5-fold fold when there are no small classes") {
  const auto d = generate_synthetic(standard_shape(3));
  const auto part = select_cutoff(class_stats(d), 0);
  const auto s = provision(d, part, 0.2, 9);
  const auto folds = kfold_splits(d, 5, 9);
  std::map<std::string, std::size_t> provisioned;
  for (const auto& item : s.test) ++provisioned[item.gold];
  for (const auto& [label, n] : class_stats(d).counts) {
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      std::size_t c = 0;
      for (const auto& item : f.test) c += item.gold == label ? 1 : 0;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    // Per-class fold test counts are floor(n/5) or ceil(n/5); round(n/5) is one of them.
    CHECK(provisioned[label] >= lo);
    CHECK(provisioned[label] <= hi);
    if (n % 5 == 0) CHECK(provisioned[label] == n / 5);
  }
}

TEST_CASE("kfold_splits") {
  SUBCASE("100 examples, k=5") {
    const auto d = make_dataset({{"A", 50}, {"B", 30}, {"C", 20}});
    const auto folds = kfold_splits(d, 5, 1);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
      CHECK(f.test.size() == 20);
      CHECK(f.train.size() == 80);
      for (const auto& item : f.test) CHECK(seen.insert(item.origin_index).second);
    }
    CHECK(seen.size() == 100);
  }
  SUBCASE("class of 5 puts one member in each fold") {
    const auto d = make_dataset({{"A", 17}, {"B", 5}});
    for (const auto& f : kfold_splits(d, 5, 4)) {
      std::size_t b = 0;
      for (const auto& item : f.test) b += item.gold == "B" ? 1 : 0;
      CHECK(b == 1);
    }
  }
  SUBCASE("deterministic and seed-sensitive") {
    const auto d = generate_synthetic(standard_shape(2));
    CHECK(kfold_splits(d, 5, 3) == kfold_splits(d, 5, 3));
    CHECK_FALSE(kfold_splits(d, 5, 3) == kfold_splits(d, 5, 4));
  }
  SUBCASE("errors") {
    const auto d = make_dataset({{"A", 2}, {"B", 1}});
    CHECK_THROWS_AS(kfold_splits(d, 4, 0), PartitionError);
    CHECK_THROWS_AS(kfold_splits(d, 1, 0), std::invalid_argument);
  }
}

TEST_CASE("split_to_jsonl tags each record") {
  const auto d = make_dataset({{"A", 5}, {"B", 2}, {"C", 2}});
  const auto s = provision(d, ClassPartition{{"B", "C"}, {"A"}}, 0.2, 0);
  const auto text = split_to_jsonl(s);
  std::size_t train = 0, test = 0, oos = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("text"));
    CHECK(rec.contains("origin_label"));
    if (rec["split"] == "train") ++train;
    if (rec["split"] == "test") ++test;
    if (rec["gold"] == kOutOfScope) ++oos;
  }
  CHECK(train == s.train.size());
  CHECK(test == s.test.size());
  CHECK(oos == s.negatives_in_test());
  CHECK(oos == 2);
}

TEST_CASE("NexCvConfig validation") {
  NexCvConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.test_fraction == 0.2);
  CHECK(cfg.retries == 10);
  CHECK(cfg.confidence_threshold == 0.5);
  cfg.mode = ProportionalMode{1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.mode = CutoffMode{-1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.confidence_threshold = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.test_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
