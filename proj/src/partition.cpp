#include "nexcv/partition.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "nexcv/error.hpp"
#include "nexcv/rng.hpp"

namespace nexcv {

void NexCvConfig::validate() const {
  if (const auto* cutoff = std::get_if<CutoffMode>(&mode); cutoff && cutoff->k < 0) {
    throw std::invalid_argument("cutoff K must be >= 0");
  }
  if (const auto* prop = std::get_if<ProportionalMode>(&mode);
      prop && !(prop->p >= 0.0 && prop->p < 1.0)) {
    throw std::invalid_argument("proportion P must lie in [0, 1)");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction t must lie in (0, 1)");
  }
  if (retries < 1) throw std::invalid_argument("retries must be >= 1");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw std::invalid_argument("confidence threshold must lie in [0, 1]");
  }
}

ClassPartition select_cutoff(const ClassStats& stats, int k) {
  ClassPartition part;
  for (const auto& [label, count] : stats.counts) {
    if (static_cast<long long>(count) < k) {
      part.small_labels.insert(label);
    } else {
      part.large_labels.insert(label);
    }
  }
  return part;
}

ClassPartition select_proportional(const ClassStats& stats, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("proportion P must lie in [0, 1)");
  ClassPartition part;
  std::size_t next = 0;
  std::size_t small_mass = 0;
  if (stats.total > 0) {
    while (next < stats.sorted.size() &&
           static_cast<double>(small_mass) / static_cast<double>(stats.total) < p) {
      const auto& label = stats.sorted[next++];
      part.small_labels.insert(label);
      small_mass += stats.counts.at(label);
    }
  }
  for (; next < stats.sorted.size(); ++next) part.large_labels.insert(stats.sorted[next]);
  return part;
}

ClassPartition select_partition(const ClassStats& stats, const SelectionMode& mode) {
  if (const auto* cutoff = std::get_if<CutoffMode>(&mode)) return select_cutoff(stats, cutoff->k);
  return select_proportional(stats, std::get<ProportionalMode>(mode).p);
}

std::size_t DataSplit::negatives_in_test() const {
  return static_cast<std::size_t>(std::count_if(
      test.begin(), test.end(), [](const TestItem& item) { return item.gold == kOutOfScope; }));
}

std::size_t retained_test_count(std::size_t n, double t) {
  if (n < 2) throw PartitionError("a retained class needs at least 2 examples");
  const auto rounded = static_cast<long long>(std::llround(t * static_cast<double>(n)));
  return static_cast<std::size_t>(std::clamp<long long>(rounded, 1, static_cast<long long>(n) - 1));
}

std::size_t small_label_test_count(std::size_t m, double t) {
  if (m == 0) return 0;
  const auto rounded = static_cast<std::size_t>(std::llround(t * static_cast<double>(m)));
  return std::min(m, std::max<std::size_t>(1, rounded));
}

DataSplit provision(const Dataset& d, const ClassPartition& part, double t, std::uint64_t seed) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("test fraction t must lie in (0, 1)");
  if (part.large_labels.empty()) throw PartitionError("no retained classes");

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < d.examples.size(); ++i) members[d.examples[i].label].push_back(i);
  for (const auto& [label, idx] : members) {
    if (!part.large_labels.contains(label) && !part.small_labels.contains(label)) {
      throw PartitionError(fmt::format("label '{}' is in neither side of the partition", label));
    }
  }

  // 0 = unassigned, 1 = train, 2 = test, 3 = test as negative example
  std::vector<std::uint8_t> side(d.examples.size(), 0);
  Rng rng(seed);

  for (const auto& label : part.large_labels) {
    auto idx = members[label];
    if (idx.size() < 2) {
      throw PartitionError(fmt::format(
          "retained class '{}' has {} example(s); it cannot appear in both train and test",
          label, idx.size()));
    }
    const std::size_t n_test = retained_test_count(idx.size(), t);
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) side[idx[j]] = j < n_test ? 2 : 1;
  }

  std::vector<std::string> small(part.small_labels.begin(), part.small_labels.end());
  const std::size_t n_test_labels = small_label_test_count(small.size(), t);
  rng.shuffle(small);
  for (std::size_t j = 0; j < small.size(); ++j) {
    const auto it = members.find(small[j]);
    if (it == members.end()) continue;
    for (const auto i : it->second) side[i] = j < n_test_labels ? 3 : 1;
  }

  DataSplit split;
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    const auto& ex = d.examples[i];
    switch (side[i]) {
      case 1:
        split.train.push_back(ex);
        split.train_index.push_back(i);
        break;
      case 2:
        split.test.push_back({ex.text, ex.label, ex.label, i});
        break;
      case 3:
        split.test.push_back({ex.text, std::string(kOutOfScope), ex.label, i});
        break;
      default:
        break;
    }
  }
  return split;
}

std::vector<DataSplit> kfold_splits(const Dataset& d, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (k > d.examples.size()) {
    throw PartitionError(fmt::format("k = {} exceeds the {} available examples", k, d.size()));
  }

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < d.examples.size(); ++i) members[d.examples[i].label].push_back(i);

  // Deal each class's shuffled members round-robin, continuing the fold
  // pointer across classes so fold sizes differ by at most one.
  std::vector<std::size_t> fold(d.examples.size());
  Rng rng(seed);
  std::size_t pointer = 0;
  for (auto& [label, idx] : members) {
    rng.shuffle(idx);
    for (const auto i : idx) fold[i] = pointer++ % k;
  }

  std::vector<DataSplit> splits(k);
  for (std::size_t f = 0; f < k; ++f) {
    auto& split = splits[f];
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
      const auto& ex = d.examples[i];
      if (fold[i] == f) {
        split.test.push_back({ex.text, ex.label, ex.label, i});
      } else {
        split.train.push_back(ex);
        split.train_index.push_back(i);
      }
    }
  }
  return splits;
}

std::string split_to_jsonl(const DataSplit& s) {
  std::string out;
  for (const auto& ex : s.train) {
    nlohmann::ordered_json rec;
    rec["split"] = "train";
    rec["text"] = ex.text;
    rec["gold"] = ex.label;
    rec["origin_label"] = ex.label;
    out += rec.dump() + "\n";
  }
  for (const auto& item : s.test) {
    nlohmann::ordered_json rec;
    rec["split"] = "test";
    rec["text"] = item.text;
    rec["gold"] = item.gold;
    rec["origin_label"] = item.origin_label;
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace nexcv
