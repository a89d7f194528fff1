#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "nexcv/dataset.hpp"

namespace nexcv {

// Split of the label set into negative-example candidates (small) and
// retained classes (large). The two sets are disjoint and cover every label.
struct ClassPartition {
  std::set<std::string> small_labels;
  std::set<std::string> large_labels;

  friend bool operator==(const ClassPartition&, const ClassPartition&) = default;
};

struct CutoffMode {
  int k = 0;
  friend bool operator==(const CutoffMode&, const CutoffMode&) = default;
};

struct ProportionalMode {
  double p = 0.0;
  friend bool operator==(const ProportionalMode&, const ProportionalMode&) = default;
};

using SelectionMode = std::variant<CutoffMode, ProportionalMode>;

struct NexCvConfig {
  SelectionMode mode = CutoffMode{0};
  double test_fraction = 0.2;
  int retries = 10;
  double confidence_threshold = 0.5;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
  friend bool operator==(const NexCvConfig&, const NexCvConfig&) = default;
};

// Labels occurring strictly fewer than k times become small.
ClassPartition select_cutoff(const ClassStats& stats, int k);

// Pops labels least-populated first into the small set until the small
// labels cover at least fraction p of all examples. Requires 0 <= p < 1.
ClassPartition select_proportional(const ClassStats& stats, double p);

ClassPartition select_partition(const ClassStats& stats, const SelectionMode& mode);

struct TestItem {
  std::string text;
  std::string gold;          // real label or kOutOfScope
  std::string origin_label;  // label in the source dataset
  std::size_t origin_index = 0;

  friend bool operator==(const TestItem&, const TestItem&) = default;
};

// One provisioned train/test realization. Items keep dataset order within
// each side; *_index fields point back into the source dataset.
struct DataSplit {
  std::vector<LabeledExample> train;
  std::vector<std::size_t> train_index;
  std::vector<TestItem> test;

  std::size_t negatives_in_test() const;
  friend bool operator==(const DataSplit&, const DataSplit&) = default;
};

// Per-class test count for a retained class of n examples: clamp(round(t*n), 1, n-1).
std::size_t retained_test_count(std::size_t n, double t);

// Number of small labels sent to the test side: max(1, round(t*m)) for m > 0.
std::size_t small_label_test_count(std::size_t m, double t);

// Each retained class is split with test share t; the small labels
// themselves are split with share t, sending whole classes either to train
// (true labels) or to test (gold = kOutOfScope). Deterministic in (seed, d).
DataSplit provision(const Dataset& d, const ClassPartition& part, double t, std::uint64_t seed);

// k stratified folds whose test sets are disjoint and cover the dataset.
// Classes with fewer than k examples leave some folds without a member.
std::vector<DataSplit> kfold_splits(const Dataset& d, std::size_t k, std::uint64_t seed);

// JSONL audit dump, one record per item tagged "train" or "test".
std::string split_to_jsonl(const DataSplit& s);

}  // namespace nexcv
