#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nexcv/classifier.hpp"

namespace nexcv {

struct BaselineHyper {
  double l2_strength = 1e-3;
  int max_epochs = 500;
  double tolerance = 1e-6;
  double initial_step = 1.0;
  // Training is deterministic (full batch, zero init); the seed is carried
  // so factories share one signature with stochastic classifiers.
  std::uint64_t seed = 0;
};

// Sparse document vector: (feature index, value) sorted by index.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

// Sublinear TF (1 + log count) times smoothed IDF (log((1+N)/(1+df)) + 1),
// L2-normalized per document. The vocabulary is sorted, so indices do not
// depend on training order.
class TfIdfVectorizer {
 public:
  void fit(const std::vector<std::vector<std::string>>& docs);
  SparseVector transform(const std::vector<std::string>& tokens) const;

  std::size_t num_features() const noexcept { return idf_.size(); }
  const std::map<std::string, std::uint32_t>& vocabulary() const noexcept { return vocab_; }
  std::span<const double> idf() const noexcept { return idf_; }

 private:
  std::map<std::string, std::uint32_t> vocab_;
  std::vector<double> idf_;
};

// Parameters of a multinomial logistic regression: weights row-major
// (classes x features) and one bias per class.
struct SoftmaxParams {
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  SoftmaxParams() = default;
  SoftmaxParams(std::size_t classes, std::size_t features)
      : num_classes(classes),
        num_features(features),
        weights(classes * features, 0.0),
        bias(classes, 0.0) {}

  friend bool operator==(const SoftmaxParams&, const SoftmaxParams&) = default;
};

// Mean cross-entropy plus (l2/2)*||W||^2 (bias unregularized), and its
// gradient laid out like the parameters.
struct LossAndGradient {
  double loss = 0.0;
  SoftmaxParams gradient;
};

LossAndGradient softmax_loss(const SoftmaxParams& params, std::span<const SparseVector> x,
                             std::span<const std::size_t> y, double l2);

// Class probabilities for one document. Uses the max-shift for stability.
std::vector<double> softmax_probabilities(const SoftmaxParams& params, const SparseVector& x);

struct TrainingTrace {
  std::vector<double> loss_per_epoch;
  int epochs = 0;
  bool converged = false;
};

// Full-batch gradient descent from zero. A step that would raise the loss is
// rejected and the step size halved; training stops when the gradient norm
// drops below the tolerance or after max_epochs accepted steps.
SoftmaxParams train_softmax(std::span<const SparseVector> x, std::span<const std::size_t> y,
                            std::size_t num_classes, std::size_t num_features,
                            const BaselineHyper& hyper, TrainingTrace* trace = nullptr);

class BaselineModel {
 public:
  static BaselineModel fit(std::span<const LabeledExample> train, const BaselineHyper& hyper,
                           TrainingTrace* trace = nullptr);

  Prediction predict(std::string_view text) const;
  std::vector<double> probabilities(std::string_view text) const;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const SoftmaxParams& params() const noexcept { return params_; }
  const TfIdfVectorizer& vectorizer() const noexcept { return vectorizer_; }

 private:
  TfIdfVectorizer vectorizer_;
  std::vector<std::string> labels_;
  SoftmaxParams params_;
};

// Classifier adapter around BaselineModel.
class BaselineClassifier final : public Classifier {
 public:
  explicit BaselineClassifier(BaselineHyper hyper = {}) : hyper_(hyper) {}

  void fit(std::span<const LabeledExample> train) override;
  Prediction predict(std::string_view text) override;

  const BaselineModel* model() const noexcept { return fitted_ ? &model_ : nullptr; }

 private:
  BaselineHyper hyper_;
  BaselineModel model_;
  bool fitted_ = false;
};

ClassifierFactory baseline_factory(BaselineHyper hyper = {});

}  // namespace nexcv
