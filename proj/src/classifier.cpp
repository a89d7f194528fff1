#include "nexcv/classifier.hpp"

#include <fmt/format.h>

#include <cmath>
#include <exception>
#include <set>

#include "nexcv/error.hpp"

namespace nexcv {

bool CheckReport::conformant() const { return first_failure() == nullptr; }

const CheckResult* CheckReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

namespace {

std::vector<Prediction> predict_all(Classifier& c, const Dataset& probe) {
  std::vector<Prediction> out;
  out.reserve(probe.size());
  for (const auto& ex : probe.examples) out.push_back(c.predict(ex.text));
  return out;
}

}  // namespace

CheckReport consistency_check(const ClassifierFactory& make, const Dataset& probe) {
  CheckReport report;
  auto record = [&](std::string name, bool passed, std::string detail = {}) {
    report.checks.push_back({std::move(name), passed, std::move(detail)});
    return passed;
  };

  std::set<std::string> trained_labels;
  for (const auto& ex : probe.examples) trained_labels.insert(ex.label);
  if (!record("probe_has_two_classes", trained_labels.size() >= 2,
              fmt::format("{} label(s) in probe", trained_labels.size()))) {
    return report;
  }

  {
    auto fresh = make();
    bool rejected = false;
    try {
      fresh->predict(probe.examples.front().text);
    } catch (const std::exception&) {
      rejected = true;
    }
    record("predict_before_fit_rejected", rejected,
           rejected ? "" : "predict succeeded on an untrained instance");
  }

  auto first = make();
  try {
    first->fit(probe.examples);
    record("fit", true);
  } catch (const std::exception& e) {
    record("fit", false, e.what());
    return report;
  }

  std::vector<Prediction> a;
  std::vector<Prediction> b;
  try {
    a = predict_all(*first, probe);
    b = predict_all(*first, probe);
    record("predict", true);
  } catch (const std::exception& e) {
    record("predict", false, e.what());
    return report;
  }

  std::string detail;
  for (std::size_t i = 0; i < a.size() && detail.empty(); ++i) {
    if (!(a[i] == b[i])) {
      detail = fmt::format("item {}: ({}, {}) then ({}, {})", i, a[i].label, a[i].confidence,
                           b[i].label, b[i].confidence);
    }
  }
  record("predict_deterministic", detail.empty(), detail);

  detail.clear();
  for (std::size_t i = 0; i < a.size() && detail.empty(); ++i) {
    const double c = a[i].confidence;
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      detail = fmt::format("item {}: confidence {}", i, c);
    }
  }
  record("confidence_bounds", detail.empty(), detail);

  detail.clear();
  for (std::size_t i = 0; i < a.size() && detail.empty(); ++i) {
    if (!trained_labels.contains(a[i].label)) {
      detail = fmt::format("item {}: label '{}' was not trained", i, a[i].label);
    }
  }
  record("labels_within_training_set", detail.empty(), detail);

  try {
    auto second = make();
    second->fit(probe.examples);
    const auto c = predict_all(*second, probe);
    detail.clear();
    for (std::size_t i = 0; i < a.size() && detail.empty(); ++i) {
      if (!(a[i] == c[i])) {
        detail = fmt::format("item {}: first fit ({}, {}), second fit ({}, {})", i, a[i].label,
                             a[i].confidence, c[i].label, c[i].confidence);
      }
    }
    record("refit_reproducible", detail.empty(), detail);
  } catch (const std::exception& e) {
    record("refit_reproducible", false, e.what());
  }
  return report;
}

}  // namespace nexcv
