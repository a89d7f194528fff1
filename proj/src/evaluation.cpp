#include "nexcv/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "nexcv/error.hpp"

namespace nexcv {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

bool is_real_label(std::string_view label) { return label != kOutOfScope && label != kAbstain; }

// Calls fn(i) for i in [0, n) on up to `jobs` threads. Every index runs;
// afterwards the exception of the lowest failing index, if any, is rethrown
// together with that index.
template <typename Fn>
void for_each_index(std::size_t n, unsigned jobs, const char* unit, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(fmt::format("{} {}: {}", unit, i, e.what()), static_cast<int>(i));
    }
  }
}

}  // namespace

bool Outcome::correct() const {
  if (gold == kOutOfScope) return !answered;
  return answered && guess == gold;
}

std::string_view Outcome::effective_prediction() const {
  return answered ? std::string_view(guess) : kAbstain;
}

void ConfusionMatrix::add(const std::string& gold, const std::string& predicted, std::size_t n) {
  if (n > 0) cells_[{gold, predicted}] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  for (const auto& [key, n] : other.cells_) cells_[key] += n;
}

std::size_t ConfusionMatrix::count(const std::string& gold, const std::string& predicted) const {
  const auto it = cells_.find({gold, predicted});
  return it == cells_.end() ? 0 : it->second;
}

std::size_t ConfusionMatrix::row_sum(const std::string& gold) const {
  std::size_t sum = 0;
  for (auto it = cells_.lower_bound({gold, std::string()});
       it != cells_.end() && it->first.first == gold; ++it) {
    sum += it->second;
  }
  return sum;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (const auto& entry : cells_) sum += entry.second;
  return sum;
}

std::optional<double> carefulness(std::span<const Outcome> outcomes) {
  std::size_t withheld = 0;
  std::size_t withheld_wrong = 0;
  for (const auto& o : outcomes) {
    if (o.answered) continue;
    ++withheld;
    if (o.gold == kOutOfScope || o.guess != o.gold) ++withheld_wrong;
  }
  if (withheld == 0) return std::nullopt;
  return static_cast<double>(withheld_wrong) / static_cast<double>(withheld);
}

SplitMetrics compute_metrics(std::span<const Outcome> outcomes) {
  SplitMetrics m;
  if (outcomes.empty()) return m;

  std::size_t correct = 0;
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts, std::less<>> per_label;
  for (const auto& o : outcomes) {
    if (o.correct()) ++correct;
    const std::string_view predicted = o.effective_prediction();
    const bool gold_real = o.gold != kOutOfScope;
    const bool pred_real = is_real_label(predicted);
    if (gold_real && pred_real && predicted == o.gold) {
      ++per_label[o.gold].tp;
      continue;
    }
    if (gold_real) ++per_label[o.gold].fn;
    if (pred_real) ++per_label[std::string(predicted)].fp;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(outcomes.size());

  Counts total;
  double f1_sum = 0.0;
  for (const auto& [label, c] : per_label) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  if (!per_label.empty()) m.macro_f1 = f1_sum / static_cast<double>(per_label.size());
  const std::size_t denom = 2 * total.tp + total.fp + total.fn;
  m.micro_f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(total.tp) / static_cast<double>(denom);
  m.carefulness = carefulness(outcomes);
  return m;
}

SplitEvaluation evaluate_split(Classifier& c, const DataSplit& s, double threshold) {
  SplitEvaluation out;
  auto start = Clock::now();
  c.fit(s.train);
  out.fit_ms = elapsed_ms(start);

  start = Clock::now();
  out.outcomes.reserve(s.test.size());
  for (const auto& item : s.test) {
    const auto p = c.predict(item.text);
    Outcome o{item.text, item.gold, p.label, p.confidence, p.confidence >= threshold};
    out.confusion.add(o.gold, std::string(o.effective_prediction()));
    out.outcomes.push_back(std::move(o));
  }
  out.predict_ms = elapsed_ms(start);
  out.metrics = compute_metrics(out.outcomes);
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

Aggregate aggregate(std::span<const RetryRecord> retries) {
  std::vector<double> acc, macro, micro, careful;
  for (const auto& r : retries) {
    acc.push_back(r.accuracy);
    macro.push_back(r.macro_f1);
    micro.push_back(r.micro_f1);
    if (r.carefulness) careful.push_back(*r.carefulness);
  }
  Aggregate a;
  a.accuracy = summarize(acc);
  a.macro_f1 = summarize(macro);
  a.micro_f1 = summarize(micro);
  if (!careful.empty()) a.carefulness = summarize(careful);
  return a;
}

std::vector<PairScore> pair_ranking(const ConfusionMatrix& m) {
  std::map<std::pair<std::string, std::string>, std::size_t> scores;
  for (const auto& [key, n] : m.cells()) {
    const auto& [gold, predicted] = key;
    if (!is_real_label(gold) || !is_real_label(predicted) || gold == predicted) continue;
    scores[std::minmax(gold, predicted)] += n;
  }
  std::vector<PairScore> ranking;
  for (const auto& [pair, score] : scores) {
    if (score > 0) ranking.push_back({pair.first, pair.second, score});
  }
  // scores is ordered by pair, so a stable sort on score keeps the tie rule.
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const PairScore& x, const PairScore& y) { return x.score > y.score; });
  return ranking;
}

EvaluationReport run_nexcv(const Dataset& d, const NexCvConfig& cfg,
                           const ClassifierFactory& make_classifier, const RunOptions& opts) {
  cfg.validate();
  const auto part = select_partition(class_stats(d), cfg.mode);

  const auto n = static_cast<std::size_t>(cfg.retries);
  std::vector<SplitEvaluation> results(n);
  std::vector<RetryRecord> records(n);
  for_each_index(n, opts.jobs, "retry", [&](std::size_t i) {
    const auto split = provision(d, part, cfg.test_fraction, cfg.seed + i);
    auto classifier = make_classifier();
    auto eval = evaluate_split(*classifier, split, cfg.confidence_threshold);
    auto& r = records[i];
    r.accuracy = eval.metrics.accuracy;
    r.macro_f1 = eval.metrics.macro_f1;
    r.micro_f1 = eval.metrics.micro_f1;
    r.carefulness = eval.metrics.carefulness;
    r.train_size = split.train.size();
    r.test_size = split.test.size();
    r.negatives_in_test = split.negatives_in_test();
    r.fit_ms = eval.fit_ms;
    r.predict_ms = eval.predict_ms;
    results[i] = std::move(eval);
  });

  EvaluationReport report;
  report.dataset_name = d.name;
  report.config = cfg;
  report.retries = std::move(records);
  report.aggregate = aggregate(report.retries);
  for (const auto& r : results) report.confusion.merge(r.confusion);
  report.pairs = pair_ranking(report.confusion);

  std::map<std::string, std::size_t> leaks;
  for (const auto& [key, count] : report.confusion.cells()) {
    if (key.first == kOutOfScope && is_real_label(key.second)) leaks[key.second] += count;
  }
  for (const auto& [label, count] : leaks) report.oos_leaks.push_back({label, count});
  std::stable_sort(report.oos_leaks.begin(), report.oos_leaks.end(),
                   [](const LabelCount& x, const LabelCount& y) { return x.count > y.count; });

  // Most confidently wrong first; ties keep retry then test order.
  for (const auto& pair : report.pairs) {
    std::vector<const Outcome*> hits;
    for (const auto& r : results) {
      for (const auto& o : r.outcomes) {
        if (!o.answered || o.guess == o.gold) continue;
        if ((o.gold == pair.a && o.guess == pair.b) || (o.gold == pair.b && o.guess == pair.a)) {
          hits.push_back(&o);
        }
      }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Outcome* x, const Outcome* y) {
      return x->confidence > y->confidence;
    });
    if (hits.size() > opts.examples_per_pair) hits.resize(opts.examples_per_pair);
    for (const auto* o : hits) {
      report.examples.push_back({pair.a, pair.b, o->text, o->gold, o->guess, o->confidence});
    }
  }
  return report;
}

std::vector<Setting> canonical_settings() {
  return {{"K=0,P=0", CutoffMode{0}},
          {"K=0,P=0.15", ProportionalMode{0.15}},
          {"K=5,P=0", CutoffMode{5}}};
}

Setting triage_setting() { return canonical_settings()[1]; }

ComparisonReport compare(const Dataset& d, const NexCvConfig& base_cfg,
                         std::span<const NamedFactory> factories, const RunOptions& opts) {
  if (factories.empty()) throw std::invalid_argument("compare needs at least one engine");
  ComparisonReport report;
  report.dataset_name = d.name;
  report.config = base_cfg;
  for (const auto& factory : factories) {
    EngineComparison engine;
    engine.name = factory.name;
    try {
      for (const auto& setting : canonical_settings()) {
        auto cfg = base_cfg;
        cfg.mode = setting.mode;
        const auto r = run_nexcv(d, cfg, factory.make, opts);
        engine.settings.push_back({setting.name, setting.mode, r.aggregate});
      }
      std::vector<double> means;
      for (const auto& s : engine.settings) means.push_back(s.aggregate.accuracy.mean);
      engine.min_accuracy = *std::min_element(means.begin(), means.end());
      engine.max_accuracy = *std::max_element(means.begin(), means.end());
      engine.mean_accuracy = summarize(means).mean;
      engine.ok = true;
    } catch (const std::exception& e) {
      engine.ok = false;
      engine.error = e.what();
      engine.settings.clear();
    }
    report.engines.push_back(std::move(engine));
  }
  return report;
}

std::vector<SplitMetrics> cross_validate(const Dataset& d, const ClassifierFactory& make_classifier,
                                         std::size_t k, std::uint64_t seed, double threshold,
                                         const RunOptions& opts) {
  const auto folds = kfold_splits(d, k, seed);
  std::vector<SplitMetrics> metrics(folds.size());
  for_each_index(folds.size(), opts.jobs, "fold", [&](std::size_t f) {
    auto classifier = make_classifier();
    metrics[f] = evaluate_split(*classifier, folds[f], threshold).metrics;
  });
  return metrics;
}

MetricValidation validate_metric(const Dataset& d, const ClassifierFactory& make_classifier,
                                 double tolerance, std::uint64_t seed, double threshold,
                                 const RunOptions& opts) {
  NexCvConfig cfg;
  cfg.mode = CutoffMode{0};
  cfg.test_fraction = 0.2;
  cfg.retries = 10;
  cfg.confidence_threshold = threshold;
  cfg.seed = seed;
  const auto nexcv = run_nexcv(d, cfg, make_classifier, opts);

  const auto folds = cross_validate(d, make_classifier, 5, seed, threshold, opts);
  std::vector<double> acc;
  for (const auto& f : folds) acc.push_back(f.accuracy);

  MetricValidation v;
  v.nexcv_accuracy = nexcv.aggregate.accuracy.mean;
  v.kfold_accuracy = summarize(acc).mean;
  v.difference = std::abs(v.nexcv_accuracy - v.kfold_accuracy);
  v.tolerance = tolerance;
  v.passed = v.difference <= tolerance;
  return v;
}

}  // namespace nexcv
