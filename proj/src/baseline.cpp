#include "nexcv/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nexcv/error.hpp"
#include "nexcv/tokenize.hpp"

namespace nexcv {

void TfIdfVectorizer::fit(const std::vector<std::vector<std::string>>& docs) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    const std::set<std::string> unique(doc.begin(), doc.end());
    for (const auto& tok : unique) ++df[tok];
  }
  vocab_.clear();
  idf_.clear();
  idf_.reserve(df.size());
  const double n = static_cast<double>(docs.size());
  for (const auto& [tok, count] : df) {
    vocab_.emplace(tok, static_cast<std::uint32_t>(idf_.size()));
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
}

SparseVector TfIdfVectorizer::transform(const std::vector<std::string>& tokens) const {
  std::map<std::uint32_t, std::size_t> tf;
  for (const auto& tok : tokens) {
    if (const auto it = vocab_.find(tok); it != vocab_.end()) ++tf[it->second];
  }
  SparseVector v;
  v.reserve(tf.size());
  double norm2 = 0.0;
  for (const auto& [index, count] : tf) {
    const double value = (1.0 + std::log(static_cast<double>(count))) * idf_[index];
    v.emplace_back(index, value);
    norm2 += value * value;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& entry : v) entry.second *= inv;
  }
  return v;
}

namespace {

// Fills `scores` with W x + b.
void class_scores(const SoftmaxParams& p, const SparseVector& x, std::vector<double>& scores) {
  scores.assign(p.bias.begin(), p.bias.end());
  for (std::size_t c = 0; c < p.num_classes; ++c) {
    const double* row = p.weights.data() + c * p.num_features;
    double s = 0.0;
    for (const auto& [j, v] : x) s += row[j] * v;
    scores[c] += s;
  }
}

// In-place softmax; returns log of the normalizer relative to the max.
double softmax_inplace(std::vector<double>& scores) {
  const double max = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - max);
    sum += s;
  }
  for (auto& s : scores) s /= sum;
  return max + std::log(sum);
}

double squared_norm(const SoftmaxParams& p) {
  double s = 0.0;
  for (const double w : p.weights) s += w * w;
  for (const double b : p.bias) s += b * b;
  return s;
}

}  // namespace

std::vector<double> softmax_probabilities(const SoftmaxParams& params, const SparseVector& x) {
  std::vector<double> scores;
  class_scores(params, x, scores);
  softmax_inplace(scores);
  return scores;
}

LossAndGradient softmax_loss(const SoftmaxParams& params, std::span<const SparseVector> x,
                             std::span<const std::size_t> y, double l2) {
  LossAndGradient out;
  out.gradient = SoftmaxParams(params.num_classes, params.num_features);
  auto& g = out.gradient;
  const double inv_n = 1.0 / static_cast<double>(x.size());

  std::vector<double> scores;
  double data_loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    class_scores(params, x[i], scores);
    const double true_score = scores[y[i]];
    const double log_z = softmax_inplace(scores);
    data_loss += log_z - true_score;
    scores[y[i]] -= 1.0;
    for (std::size_t c = 0; c < params.num_classes; ++c) {
      const double d = scores[c] * inv_n;
      g.bias[c] += d;
      double* row = g.weights.data() + c * params.num_features;
      for (const auto& [j, v] : x[i]) row[j] += d * v;
    }
  }

  double reg = 0.0;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    reg += params.weights[k] * params.weights[k];
    g.weights[k] += l2 * params.weights[k];
  }
  out.loss = data_loss * inv_n + 0.5 * l2 * reg;
  return out;
}

SoftmaxParams train_softmax(std::span<const SparseVector> x, std::span<const std::size_t> y,
                            std::size_t num_classes, std::size_t num_features,
                            const BaselineHyper& hyper, TrainingTrace* trace) {
  SoftmaxParams params(num_classes, num_features);
  auto current = softmax_loss(params, x, y, hyper.l2_strength);
  if (trace) {
    *trace = {};
    trace->loss_per_epoch.push_back(current.loss);
  }

  double step = hyper.initial_step;
  constexpr double kMinStep = 1e-30;
  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    if (std::sqrt(squared_norm(current.gradient)) < hyper.tolerance) {
      if (trace) trace->converged = true;
      break;
    }

    bool accepted = false;
    SoftmaxParams candidate = params;
    while (step >= kMinStep) {
      for (std::size_t k = 0; k < params.weights.size(); ++k) {
        candidate.weights[k] = params.weights[k] - step * current.gradient.weights[k];
      }
      for (std::size_t c = 0; c < num_classes; ++c) {
        candidate.bias[c] = params.bias[c] - step * current.gradient.bias[c];
      }
      auto next = softmax_loss(candidate, x, y, hyper.l2_strength);
      if (std::isfinite(next.loss) && next.loss <= current.loss) {
        params = std::move(candidate);
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (trace) {
      trace->loss_per_epoch.push_back(current.loss);
      trace->epochs = epoch + 1;
    }
  }
  return params;
}

BaselineModel BaselineModel::fit(std::span<const LabeledExample> train, const BaselineHyper& hyper,
                                 TrainingTrace* trace) {
  std::set<std::string> label_set;
  for (const auto& ex : train) label_set.insert(ex.label);
  if (label_set.size() < 2) throw ClassifierError("baseline needs at least 2 distinct labels");

  BaselineModel m;
  m.labels_.assign(label_set.begin(), label_set.end());

  std::vector<std::vector<std::string>> docs;
  docs.reserve(train.size());
  bool any_tokens = false;
  for (const auto& ex : train) {
    docs.push_back(tokenize(ex.text));
    any_tokens = any_tokens || !docs.back().empty();
  }
  if (!any_tokens) throw ClassifierError("no training example has any tokens");

  m.vectorizer_.fit(docs);
  std::vector<SparseVector> x;
  std::vector<std::size_t> y;
  x.reserve(docs.size());
  y.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    x.push_back(m.vectorizer_.transform(docs[i]));
    const auto pos = std::lower_bound(m.labels_.begin(), m.labels_.end(), train[i].label);
    y.push_back(static_cast<std::size_t>(pos - m.labels_.begin()));
  }
  m.params_ = train_softmax(x, y, m.labels_.size(), m.vectorizer_.num_features(), hyper, trace);
  return m;
}

std::vector<double> BaselineModel::probabilities(std::string_view text) const {
  return softmax_probabilities(params_, vectorizer_.transform(tokenize(text)));
}

Prediction BaselineModel::predict(std::string_view text) const {
  const auto probs = probabilities(text);
  const auto best = static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
  return {labels_[best], probs[best]};
}

void BaselineClassifier::fit(std::span<const LabeledExample> train) {
  model_ = BaselineModel::fit(train, hyper_);
  fitted_ = true;
}

Prediction BaselineClassifier::predict(std::string_view text) {
  if (!fitted_) throw ClassifierError("predict called before fit");
  return model_.predict(text);
}

ClassifierFactory baseline_factory(BaselineHyper hyper) {
  return [hyper] { return std::make_unique<BaselineClassifier>(hyper); };
}

}  // namespace nexcv
