#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nexcv/classifier.hpp"
#include "nexcv/dataset.hpp"
#include "nexcv/partition.hpp"

namespace nexcv {

// Effective prediction recorded when the classifier's confidence is below
// the threshold.
inline constexpr std::string_view kAbstain = "__ABSTAIN__";

struct Outcome {
  std::string text;
  std::string gold;   // real label or kOutOfScope
  std::string guess;  // argmax label, kept even when abstaining
  double confidence = 0.0;
  bool answered = false;

  // Real gold: answered with the right label. Out-of-scope gold: abstained.
  bool correct() const;
  std::string_view effective_prediction() const;
};

class ConfusionMatrix {
 public:
  using Key = std::pair<std::string, std::string>;  // (gold, effective prediction)

  void add(const std::string& gold, const std::string& predicted, std::size_t n = 1);
  void merge(const ConfusionMatrix& other);

  std::size_t count(const std::string& gold, const std::string& predicted) const;
  std::size_t row_sum(const std::string& gold) const;
  std::size_t total() const;

  // Nonzero cells ordered by (gold, predicted).
  const std::map<Key, std::size_t>& cells() const noexcept { return cells_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::map<Key, std::size_t> cells_;
};

// Withheld-and-wrong abstentions over all abstentions; nullopt when the
// classifier never abstained.
std::optional<double> carefulness(std::span<const Outcome> outcomes);

struct SplitMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::optional<double> carefulness;
};

// Per-label F1 over real labels with abstentions counted as predicting
// out-of-scope, plus accuracy and carefulness.
SplitMetrics compute_metrics(std::span<const Outcome> outcomes);

struct SplitEvaluation {
  std::vector<Outcome> outcomes;
  ConfusionMatrix confusion;
  SplitMetrics metrics;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
};

// Fits `c` on the split's train side and scores every test item.
SplitEvaluation evaluate_split(Classifier& c, const DataSplit& s, double threshold);

struct RetryRecord {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::optional<double> carefulness;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t negatives_in_test = 0;
  double fit_ms = 0.0;
  double predict_ms = 0.0;
};

// Mean and sample standard deviation (0 for a single value) over n values.
struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

MetricSummary summarize(std::span<const double> values);

struct Aggregate {
  MetricSummary accuracy;
  MetricSummary macro_f1;
  MetricSummary micro_f1;
  // Over the retries where carefulness is defined; nullopt if none.
  std::optional<MetricSummary> carefulness;
};

Aggregate aggregate(std::span<const RetryRecord> retries);

struct PairScore {
  std::string a;  // a < b
  std::string b;
  std::size_t score = 0;

  friend bool operator==(const PairScore&, const PairScore&) = default;
};

// Unordered real-label pairs scored by counts[a][b] + counts[b][a],
// descending, ties by (a, b) ascending. Zero-score pairs are omitted;
// out-of-scope rows and abstain columns never form pairs.
std::vector<PairScore> pair_ranking(const ConfusionMatrix& m);

struct RepresentativeExample {
  std::string a;
  std::string b;
  std::string text;
  std::string gold;
  std::string guess;
  double confidence = 0.0;
};

struct LabelCount {
  std::string label;
  std::size_t count = 0;
};

struct EvaluationReport {
  std::string dataset_name;
  NexCvConfig config;
  std::vector<RetryRecord> retries;
  Aggregate aggregate;
  ConfusionMatrix confusion;
  std::vector<PairScore> pairs;
  std::vector<RepresentativeExample> examples;
  // Out-of-scope test items answered as a real label, by label, descending.
  std::vector<LabelCount> oos_leaks;
};

struct RunOptions {
  // Retries evaluated concurrently; output does not depend on this.
  unsigned jobs = 1;
  std::size_t examples_per_pair = 5;
};

// Selects the partition once (it depends only on class counts), then for
// each retry i provisions with seed + i, fits a fresh classifier and
// evaluates. Confusion matrices are summed and ranked.
EvaluationReport run_nexcv(const Dataset& d, const NexCvConfig& cfg,
                           const ClassifierFactory& make_classifier, const RunOptions& opts = {});

// The three (K, P) settings: (0, 0), (0, 0.15) and (5, 0).
struct Setting {
  std::string name;
  SelectionMode mode;
};

std::vector<Setting> canonical_settings();

// Setting whose aggregate matrix drives pair triage: (K=0, P=0.15).
Setting triage_setting();

struct SettingSummary {
  std::string name;
  SelectionMode mode;
  Aggregate aggregate;
};

struct EngineComparison {
  std::string name;
  bool ok = false;
  std::string error;
  std::vector<SettingSummary> settings;
  // Over the per-setting mean accuracies.
  double min_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double max_accuracy = 0.0;
};

struct ComparisonReport {
  std::string dataset_name;
  NexCvConfig config;
  std::vector<EngineComparison> engines;
};

// Runs every engine under the three canonical settings. An engine that
// throws is marked failed; the others still run.
ComparisonReport compare(const Dataset& d, const NexCvConfig& base_cfg,
                         std::span<const NamedFactory> factories, const RunOptions& opts = {});

// Mean accuracy of stratified k-fold cross-validation.
std::vector<SplitMetrics> cross_validate(const Dataset& d, const ClassifierFactory& make_classifier,
                                         std::size_t k, std::uint64_t seed, double threshold,
                                         const RunOptions& opts = {});

struct MetricValidation {
  double nexcv_accuracy = 0.0;
  double kfold_accuracy = 0.0;
  double difference = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// nex-cv at (K=0, P=0), t=0.2, 10 retries against 5-fold CV with the same
// classifier. Passes when the mean accuracies differ by at most tolerance.
MetricValidation validate_metric(const Dataset& d, const ClassifierFactory& make_classifier,
                                 double tolerance, std::uint64_t seed = 0,
                                 double threshold = 0.5, const RunOptions& opts = {});

}  // namespace nexcv
