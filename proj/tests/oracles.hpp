#pragma once

// Test-only reference implementations, written independently of the
// library code paths they check.

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nexcv/partition.hpp"

namespace nexcv::testing {

using CountTable = std::map<std::string, std::size_t>;

inline ClassStats stats_from(const CountTable& counts) {
  Dataset d;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) d.examples.push_back({label + std::to_string(i), label});
  }
  return class_stats(d);
}

// Cutoff by direct filtering.
inline std::set<std::string> cutoff_oracle(const CountTable& counts, int k) {
  std::set<std::string> small;
  for (const auto& [label, n] : counts) {
    if (static_cast<int>(n) < k) small.insert(label);
  }
  return small;
}

// Least-populated-first order built by selection rather than sorting.
inline std::vector<std::string> ascending_order(CountTable counts) {
  std::vector<std::string> order;
  while (!counts.empty()) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second < best->second) best = it;  // map order breaks ties by label
    }
    order.push_back(best->first);
    counts.erase(best);
  }
  return order;
}

// Tries every prefix length and keeps the shortest whose mass reaches p.
inline std::set<std::string> proportional_oracle(const CountTable& counts, double p) {
  const auto order = ascending_order(counts);
  std::size_t total = 0;
  for (const auto& [label, n] : counts) total += n;
  for (std::size_t m = 0; m <= order.size(); ++m) {
    std::size_t mass = 0;
    for (std::size_t j = 0; j < m; ++j) mass += counts.at(order[j]);
    const double fraction = total == 0 ? 1.0 : static_cast<double>(mass) / static_cast<double>(total);
    if (fraction >= p || m == order.size()) return {order.begin(), order.begin() + m};
  }
  return {};
}

// Every DataSplit invariant; returns human-readable violations.
inline std::vector<std::string> split_violations(const Dataset& d, const ClassPartition& part,
                                                 const DataSplit& s, double t) {
  std::vector<std::string> v;
  std::set<std::size_t> train_idx(s.train_index.begin(), s.train_index.end());
  std::set<std::string> train_labels;
  for (const auto& ex : s.train) train_labels.insert(ex.label);
  if (train_idx.size() != s.train.size()) v.push_back("duplicate train index");

  std::map<std::string, std::size_t> test_count;
  std::set<std::string> oos_origins;
  std::set<std::size_t> test_idx;
  for (const auto& item : s.test) {
    if (train_idx.contains(item.origin_index)) {
      v.push_back(fmt::format("example {} on both sides", item.origin_index));
    }
    if (!test_idx.insert(item.origin_index).second) v.push_back("duplicate test index");
    if (d.examples.at(item.origin_index).text != item.text) v.push_back("test text mismatch");
    if (item.gold == kOutOfScope) {
      oos_origins.insert(item.origin_label);
      if (!part.small_labels.contains(item.origin_label)) {
        v.push_back(fmt::format("negative from retained class '{}'", item.origin_label));
      }
      if (train_labels.contains(item.origin_label)) {
        v.push_back(fmt::format("negative class '{}' also in train", item.origin_label));
      }
    } else {
      ++test_count[item.gold];
      if (!train_labels.contains(item.gold)) {
        v.push_back(fmt::format("test label '{}' missing from train", item.gold));
      }
    }
  }
  if (train_idx.size() + test_idx.size() != d.size()) v.push_back("split does not cover dataset");

  std::map<std::string, std::size_t> n_class;
  for (const auto& ex : d.examples) ++n_class[ex.label];
  for (const auto& label : part.large_labels) {
    const auto n = n_class[label];
    const auto expected = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(t * static_cast<double>(n)), 1, static_cast<long long>(n) - 1));
    if (test_count[label] != expected) {
      v.push_back(fmt::format("class '{}' has {} test items, expected {}", label, test_count[label], expected));
    }
    if (!train_labels.contains(label)) v.push_back(fmt::format("class '{}' missing from train", label));
  }
  for (const auto& label : part.small_labels) {
    if (test_count.contains(label)) v.push_back(fmt::format("small class '{}' tested as positive", label));
  }
  if (!part.small_labels.empty()) {
    const auto expected = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(t * static_cast<double>(part.small_labels.size()))));
    std::size_t present_small = 0;
    for (const auto& label : part.small_labels) present_small += n_class.contains(label) ? 1 : 0;
    if (present_small == part.small_labels.size() && oos_origins.size() != std::min(expected, present_small)) {
      v.push_back(fmt::format("{} negative classes, expected {}", oos_origins.size(), expected));
    }
  }
  return v;
}

}  // namespace nexcv::testing
