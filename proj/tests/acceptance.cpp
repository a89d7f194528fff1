// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "nexcv/baseline.hpp"
#include "nexcv/evaluation.hpp"
#include "nexcv/external.hpp"
#include "nexcv/report.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nexcv;
using namespace nexcv::testing;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Drops the lines carrying wall-clock values so reports can be compared byte for byte.
std::string without_timing(const std::string& json) {
  std::istringstream in(json);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.find("\"fit_ms\"") != std::string::npos || line.find("\"predict_ms\"") != std::string::npos ||
        line.find("\"produced_at\"") != std::string::npos) {
      continue;
    }
    kept += line + '\n';
  }
  return kept;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Verdict functional_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const auto d = generate_synthetic(standard_shape(7));
  const auto v = validate_metric(d, baseline_factory(), 0.03, 0);
  const double elapsed = seconds_since(start);
  return {v.passed && elapsed <= 60.0,
          fmt::format("nex-cv {:.4f} vs 5-fold {:.4f}, |diff| {:.4f} <= 0.03; {:.1f}s <= 60s",
                      v.nexcv_accuracy, v.kfold_accuracy, v.difference, elapsed)};
}

Verdict selection_oracles() {
  Rng rng(2024);
  std::size_t tables = 0, mismatches = 0, checks = 0;
  for (; tables < 200; ++tables) {
    CountTable counts;
    const auto n_classes = 1 + rng.below(8);
    for (std::size_t c = 0; c < n_classes; ++c) counts[fmt::format("c{}", c)] = 1 + rng.below(12);
    const auto stats = stats_from(counts);
    for (int k = 0; k <= 13; ++k) {
      ++checks;
      if (select_cutoff(stats, k).small_labels != cutoff_oracle(counts, k)) ++mismatches;
    }
    for (const double p : {0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 0.99}) {
      ++checks;
      if (select_proportional(stats, p).small_labels != proportional_oracle(counts, p)) ++mismatches;
    }
    // exact boundary: P equal to a prefix's mass stops there
    const auto order = ascending_order(counts);
    const double exact = static_cast<double>(counts.at(order[0])) / static_cast<double>(stats.total);
    if (exact < 1.0) {
      ++checks;
      if (select_proportional(stats, exact).small_labels != proportional_oracle(counts, exact)) ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt::format("{} tables, {} comparisons, {} mismatches", tables, checks, mismatches)};
}

Verdict provision_invariants() {
  const auto d = generate_synthetic(standard_shape(11));
  const auto stats = class_stats(d);
  std::size_t violations = 0;
  std::string first;
  const std::vector<SelectionMode> modes{CutoffMode{0}, ProportionalMode{0.15}, CutoffMode{8}, ProportionalMode{0.3}};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto part = select_partition(stats, modes[seed % modes.size()]);
    const double t = seed % 2 ? 0.2 : 0.35;
    const auto v = split_violations(d, part, provision(d, part, t, seed), t);
    violations += v.size();
    if (!v.empty() && first.empty()) first = v.front();
  }
  return {violations == 0, fmt::format("100 provisions, {} violations{}", violations,
                                       first.empty() ? "" : "; first: " + first)};
}

Verdict proportional_mass() {
  const auto d = generate_synthetic(standard_shape(7));
  const auto stats = class_stats(d);
  const auto part = select_proportional(stats, 0.15);
  std::size_t mass = 0;
  for (const auto& l : part.small_labels) mass += stats.counts.at(l);
  const double fraction = static_cast<double>(mass) / static_cast<double>(stats.total);
  CountTable counts(stats.counts.begin(), stats.counts.end());
  const bool minimal = part.small_labels == proportional_oracle(counts, 0.15);
  return {minimal && fraction >= 0.15,
          fmt::format("|L_SM| = {}, mass {}/{} = {:.4f}, minimal prefix: {}", part.small_labels.size(),
                      mass, stats.total, fraction, minimal ? "yes" : "no")};
}

Verdict carefulness_arithmetic() {
  auto o = [](std::string gold, std::string guess, double c) {
    return Outcome{"t", std::move(gold), std::move(guess), c, c >= 0.5};
  };
  std::vector<Outcome> seventy;
  for (int i = 0; i < 7; ++i) seventy.push_back(o("A", "B", 0.1));
  for (int i = 0; i < 3; ++i) seventy.push_back(o("A", "A", 0.1));
  seventy.push_back(o("A", "A", 0.9));
  const std::vector<Outcome> none{o("A", "A", 0.9), o("B", "A", 0.6)};
  const std::string oos(kOutOfScope);
  const std::vector<Outcome> negatives{o(oos, "A", 0.1), o(oos, "B", 0.3), o(oos, "A", 0.0)};
  const auto a = carefulness(seventy);
  const auto b = carefulness(none);
  const auto c = carefulness(negatives);
  const bool pass = a && *a == 0.7 && !b && c && *c == 1.0;
  auto show = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "undefined"; };
  return {pass, fmt::format("0.7 case -> {}, no-abstention case -> {}, all out-of-scope -> {}",
                            show(a), show(b), show(c))};
}

Verdict pair_detection() {
  const auto start = std::chrono::steady_clock::now();
  int hits = 0;
  for (std::uint64_t run = 0; run < 10; ++run) {
    auto d = plant_pair_noise(generate_synthetic(standard_shape(100 + run)), "large_00", "large_01", 0.3,
                              200 + run);
    NexCvConfig cfg;
    cfg.mode = triage_setting().mode;
    cfg.seed = 300 + run;
    const auto r = run_nexcv(d, cfg, baseline_factory());
    if (!r.pairs.empty() && r.pairs[0].a == "large_00" && r.pairs[0].b == "large_01") ++hits;
  }
  const double elapsed = seconds_since(start);
  return {hits >= 9 && elapsed <= 120.0,
          fmt::format("planted pair ranked first in {}/10 runs (need 9); {:.1f}s <= 120s", hits, elapsed)};
}

Verdict negative_sensitivity() {
  const auto d = generate_synthetic(standard_shape(7));
  NexCvConfig zero;
  zero.mode = CutoffMode{0};
  NexCvConfig prop;
  prop.mode = ProportionalMode{0.15};
  const auto a = run_nexcv(d, zero, baseline_factory()).aggregate.accuracy.mean;
  const auto b = run_nexcv(d, prop, baseline_factory()).aggregate.accuracy.mean;
  return {b <= a, fmt::format("mean accuracy (P=0.15) {:.4f} <= (0,0) {:.4f}", b, a)};
}

Verdict baseline_classifier() {
  // in-domain accuracy on a separable corpus
  auto spec = standard_shape(7);
  spec.n_small = 0;
  const auto d = generate_synthetic(spec);
  NexCvConfig cfg;
  const auto r = run_nexcv(d, cfg, baseline_factory());
  std::size_t correct = 0, total = 0;
  for (const auto& [key, n] : r.confusion.cells()) {
    if (key.first == kOutOfScope) continue;
    total += n;
    if (key.first == key.second) correct += n;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(total);

  // central finite differences on a random sparse problem
  Rng rng(5);
  const std::size_t classes = 4, features = 9, docs = 12;
  std::vector<SparseVector> x(docs);
  std::vector<std::size_t> y(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    for (std::uint32_t f = 0; f < features; ++f) {
      if (rng.below(3) == 0) x[i].emplace_back(f, 0.1 + static_cast<double>(rng.below(90)) / 100.0);
    }
    y[i] = rng.below(classes);
  }
  SoftmaxParams p(classes, features);
  for (auto& w : p.weights) w = static_cast<double>(rng.below(200)) / 100.0 - 1.0;
  for (auto& b : p.bias) b = static_cast<double>(rng.below(200)) / 100.0 - 1.0;
  const double l2 = 1e-3, h = 1e-5;
  const auto analytic = softmax_loss(p, x, y, l2).gradient;
  double worst = 0.0;
  auto probe = [&](double& param, double grad) {
    const double saved = param;
    param = saved + h;
    const double up = softmax_loss(p, x, y, l2).loss;
    param = saved - h;
    const double down = softmax_loss(p, x, y, l2).loss;
    param = saved;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - grad) / std::max({std::abs(numeric), std::abs(grad), 1e-8}));
  };
  for (std::size_t i = 0; i < p.weights.size(); ++i) probe(p.weights[i], analytic.weights[i]);
  for (std::size_t i = 0; i < p.bias.size(); ++i) probe(p.bias[i], analytic.bias[i]);

  double worst_sum = 0.0;
  for (const auto& doc : x) {
    double s = 0.0;
    for (double q : softmax_probabilities(p, doc)) s += q;
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  return {accuracy >= 0.9 && worst <= 1e-4 && worst_sum <= 1e-9,
          fmt::format("separable in-domain accuracy {:.4f} >= 0.90; gradient rel err {:.2e} <= 1e-4; "
                      "softmax |sum-1| {:.2e} <= 1e-9",
                      accuracy, worst, worst_sum)};
}

Verdict determinism() {
  TempDir dir;
  const auto data = dir.file("synthetic.csv");
  save_dataset(generate_synthetic(standard_shape(7)), data, DatasetFormat::Csv);
  std::vector<std::string> docs;
  for (const char* name : {"a.json", "b.json"}) {
    const auto cmd = fmt::format("'{}' evaluate --data '{}' --p 0.15 --seed 42 --out '{}' > /dev/null",
                                 NEXCV_CLI, data, dir.file(name));
    if (std::system(cmd.c_str()) != 0) return {false, "evaluate exited nonzero"};
    docs.push_back(slurp(dir.file(name)));
  }
  const bool same = !docs[0].empty() && without_timing(docs[0]) == without_timing(docs[1]);
  return {same, fmt::format("two evaluate runs, {} bytes each after dropping timing fields: {}",
                            without_timing(docs[0]).size(), same ? "identical" : "different")};
}

Verdict adapter_equivalence() {
  const auto d = generate_synthetic(standard_shape(7));
  NexCvConfig cfg;
  cfg.mode = ProportionalMode{0.15};
  cfg.seed = 9;
  const auto local = render_json(run_nexcv(d, cfg, baseline_factory()), "t");
  const auto remote = render_json(run_nexcv(d, cfg, external_factory(NEXCV_ENGINE)), "t");
  const bool same = without_timing(local) == without_timing(remote);
  return {same, fmt::format("in-process vs subprocess reports: {}", same ? "identical" : "different")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"functional equivalence with 5-fold CV", functional_equivalence},
      {"selection oracles", selection_oracles},
      {"provision invariants", provision_invariants},
      {"proportional mass minimality", proportional_mass},
      {"carefulness arithmetic", carefulness_arithmetic},
      {"pair-confusion detection", pair_detection},
      {"negative-example sensitivity", negative_sensitivity},
      {"baseline classifier", baseline_classifier},
      {"determinism", determinism},
      {"external adapter equivalence", adapter_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    fmt::print("[{}] criterion {}: {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
