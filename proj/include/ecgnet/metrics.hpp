#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/classes.hpp"
#include "ecgnet/error.hpp"

namespace ecgnet {

/// K x K counts; rows are true classes, columns predicted classes, both in
/// the fixed rhythm order.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {
    if (classes < 2 || classes > kRhythmNames.size()) throw ConfigError("confusion matrix needs 2 to 4 classes");
  }

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw ShapeError("confusion matrix rows must be square");
      for (std::size_t j = 0; j < rows.size(); ++j) cm.at(i, j) = rows[i][j];
    }
    return cm;
  }

  std::size_t classes() const { return k_; }

  void add(std::size_t truth, std::size_t predicted) {
    if (truth >= k_ || predicted >= k_) throw ShapeError("class index out of range for confusion matrix");
    ++counts_[truth * k_ + predicted];
  }

  std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * k_ + predicted]; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k_; ++i)
      if (i != c) s += at(i, c);
    return s;
  }
  std::uint64_t false_negatives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < k_; ++j)
      if (j != c) s += at(c, j);
    return s;
  }
  std::uint64_t support(std::size_t c) const { return true_positives(c) + false_negatives(c); }

  bool operator==(const ConfusionMatrix&) const = default;

private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

inline double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw ConfigError("accuracy of an empty confusion matrix");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(total);
}

namespace detail {
inline double ratio_or_zero(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
} // namespace detail

inline std::vector<double> precision_per_class(const ConfusionMatrix& cm) {
  std::vector<double> p(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c)
    p[c] = detail::ratio_or_zero(cm.true_positives(c), cm.true_positives(c) + cm.false_positives(c));
  return p;
}

inline std::vector<double> recall_per_class(const ConfusionMatrix& cm) {
  std::vector<double> r(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) r[c] = detail::ratio_or_zero(cm.true_positives(c), cm.support(c));
  return r;
}

/// F1_k = 2 TP / (2 TP + FP + FN), and 0 when that denominator is 0.
inline std::vector<double> f1_per_class(const ConfusionMatrix& cm) {
  std::vector<double> f(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto tp = cm.true_positives(c);
    f[c] = detail::ratio_or_zero(2 * tp, 2 * tp + cm.false_positives(c) + cm.false_negatives(c));
  }
  return f;
}

/// Challenge score: mean F1 of normal, AF and other rhythm. Noise is ignored.
inline double cinc_score(const ConfusionMatrix& cm) {
  if (cm.classes() != 4) throw ConfigError("the challenge score needs the four-class matrix");
  const auto f1 = f1_per_class(cm);
  return (f1[0] + f1[1] + f1[2]) / 3.0;
}

/// Most frequent class; ties go to the earlier class in the fixed order.
inline std::size_t majority_vote(const std::vector<std::size_t>& predictions) {
  if (predictions.empty()) throw ConfigError("majority vote over no predictions");
  std::vector<std::size_t> votes;
  for (std::size_t p : predictions) {
    if (p >= votes.size()) votes.resize(p + 1, 0);
    ++votes[p];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = c;
  return best;
}

inline nlohmann::json metrics_report(const ConfusionMatrix& cm) {
  nlohmann::json j;
  j["records"] = cm.total();
  j["accuracy"] = accuracy(cm);
  const auto p = precision_per_class(cm), r = recall_per_class(cm), f = f1_per_class(cm);
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < cm.classes(); ++c)
    per_class.push_back({{"class", std::string(rhythm_name(c))},
                         {"support", cm.support(c)},
                         {"precision", p[c]},
                         {"recall", r[c]},
                         {"f1", f[c]}});
  j["per_class"] = per_class;
  if (cm.classes() == 4) j["cinc_score"] = cinc_score(cm);
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < cm.classes(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  j["confusion_matrix"] = rows;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cm.classes(); ++c) names.emplace_back(rhythm_name(c));
  j["classes"] = names;
  return j;
}

} // namespace ecgnet
