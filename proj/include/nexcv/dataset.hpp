#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nexcv {

// Reserved gold label for test items drawn from withheld classes.
inline constexpr std::string_view kOutOfScope = "__OUT_OF_SCOPE__";

struct LabeledExample {
  std::string text;
  std::string label;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct Dataset {
  std::string name;
  std::vector<LabeledExample> examples;

  std::size_t size() const noexcept { return examples.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class DatasetFormat { Csv, Jsonl };

// Maps ".csv" / ".jsonl" (also ".json", ".ndjson") to a format.
// Throws DatasetError for anything else.
DatasetFormat format_from_path(const std::filesystem::path& path);

// Loads a corpus. The dataset name defaults to the file stem.
// Errors carry the 1-based line of the offending record.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset parse_dataset(std::string_view content, DatasetFormat format, std::string name = {});

std::string serialize_dataset(const Dataset& d, DatasetFormat format);
void save_dataset(const Dataset& d, const std::filesystem::path& path, DatasetFormat format);

struct DatasetIssue {
  enum class Kind { TooFewLabels, SingletonClass, CrossLabelDuplicate };

  Kind kind;
  std::string message;
  // Labels involved; for duplicates the text is in `text`.
  std::vector<std::string> labels;
  std::string text;
};

std::vector<DatasetIssue> validate_dataset(const Dataset& d);

// Per-label example counts. `sorted` runs from least to most populated,
// ties broken by label ascending.
struct ClassStats {
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> sorted;
  std::size_t total = 0;

  std::size_t count(const std::string& label) const;
};

ClassStats class_stats(const Dataset& d);

struct SyntheticSpec {
  std::size_t n_large = 5;
  std::size_t large_size = 100;
  std::size_t n_small = 20;
  std::size_t small_min = 5;
  std::size_t small_max = 10;
  std::size_t vocab_per_class = 30;
  double overlap_fraction = 0.0;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 12;
  std::uint64_t seed = 0;
};

// Few large classes plus a long tail of small ones. Each class draws its
// texts from its own pseudo-word vocabulary; adjacent classes (in label
// order) share round(overlap_fraction * vocab_per_class) tokens.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Vocabulary of class `class_index` as produced by generate_synthetic.
std::vector<std::string> synthetic_vocabulary(const SyntheticSpec& spec, std::size_t class_index);

}  // namespace nexcv
