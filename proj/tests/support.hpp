#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nexcv/classifier.hpp"
#include "nexcv/dataset.hpp"
#include "nexcv/error.hpp"
#include "nexcv/rng.hpp"

namespace nexcv::testing {

// Shape used throughout: 5 x 100 large classes, 20 small classes of 5..10,
// disjoint vocabularies.
inline SyntheticSpec standard_shape(std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.n_large = 5;
  spec.large_size = 100;
  spec.n_small = 20;
  spec.small_min = 5;
  spec.small_max = 10;
  spec.overlap_fraction = 0.0;
  spec.seed = seed;
  return spec;
}

inline Dataset make_dataset(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  Dataset d;
  d.name = "fixture";
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      d.examples.push_back({label + " item " + std::to_string(i), label});
    }
  }
  return d;
}

// Relabels round(fraction * n) randomly chosen examples of `a` as `b`, and
// the same share of the original `b` examples as `a`.
inline Dataset plant_pair_noise(Dataset d, const std::string& a, const std::string& b,
                                double fraction, std::uint64_t seed) {
  std::vector<std::size_t> in_a, in_b;
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    if (d.examples[i].label == a) in_a.push_back(i);
    if (d.examples[i].label == b) in_b.push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(in_a);
  rng.shuffle(in_b);
  const auto flip_a = static_cast<std::size_t>(std::llround(fraction * double(in_a.size())));
  const auto flip_b = static_cast<std::size_t>(std::llround(fraction * double(in_b.size())));
  for (std::size_t j = 0; j < flip_a; ++j) d.examples[in_a[j]].label = b;
  for (std::size_t j = 0; j < flip_b; ++j) d.examples[in_b[j]].label = a;
  return d;
}

// Answers `label` with a fixed confidence for every input.
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(std::string label, double confidence)
      : label_(std::move(label)), confidence_(confidence) {}
  void fit(std::span<const LabeledExample>) override { fitted_ = true; }
  Prediction predict(std::string_view) override {
    if (!fitted_) throw ClassifierError("predict before fit");
    return {label_, confidence_};
  }

 private:
  std::string label_;
  double confidence_;
  bool fitted_ = false;
};

// Never answers; its guess is a label no dataset uses, so every
// abstention withholds a wrong guess.
class AbstainClassifier final : public Classifier {
 public:
  void fit(std::span<const LabeledExample> train) override {
    if (train.empty()) throw ClassifierError("empty training set");
    fitted_ = true;
  }
  Prediction predict(std::string_view) override {
    if (!fitted_) throw ClassifierError("predict before fit");
    return {"(none)", 0.0};
  }

 private:
  bool fitted_ = false;
};

// Looks the text up in its training data; answers with confidence 1.
class MemorizingClassifier final : public Classifier {
 public:
  void fit(std::span<const LabeledExample> train) override {
    for (const auto& ex : train) table_[ex.text] = ex.label;
    fallback_ = train.front().label;
    fitted_ = true;
  }
  Prediction predict(std::string_view text) override {
    if (!fitted_) throw ClassifierError("predict before fit");
    const auto it = table_.find(std::string(text));
    return it == table_.end() ? Prediction{fallback_, 0.0} : Prediction{it->second, 1.0};
  }

 private:
  std::map<std::string, std::string> table_;
  std::string fallback_;
  bool fitted_ = false;
};

inline ClassifierFactory abstain_factory() {
  return [] { return std::make_unique<AbstainClassifier>(); };
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("nexcv-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace nexcv::testing
