#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nexcv/dataset.hpp"

namespace nexcv {

struct Prediction {
  std::string label;
  double confidence = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Black-box classifier contract. fit() may be called once per instance;
// predict() before fit() throws ClassifierError, and is deterministic after.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual void fit(std::span<const LabeledExample> train) = 0;
  virtual Prediction predict(std::string_view text) = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct NamedFactory {
  std::string name;
  ClassifierFactory make;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> checks;

  bool conformant() const;
  // First failing check, or nullptr.
  const CheckResult* first_failure() const;
};

// Exercises a classifier wrapper against the black-box contract on a probe
// dataset: predict-before-fit rejection, fit, predict, repeat-call
// determinism, confidence bounds, label closure and refit reproducibility.
CheckReport consistency_check(const ClassifierFactory& make, const Dataset& probe);

}  // namespace nexcv
