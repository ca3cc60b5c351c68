#pragma once

#include <array>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::eval {

struct ClassMetrics {
  double balanced_accuracy = 0.0;
  double precision = 0.0; // macro
  double recall = 0.0;    // macro
  double macro_f1 = 0.0;
  std::array<double, 2> per_class_recall{};
  std::array<double, 2> per_class_precision{};
  std::array<double, 2> per_class_f1{};
  // confusion[true][predicted], absolute counts.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
};

// Binary labels in {0, 1}. A class with no predictions gets precision 0, and
// F1 is 0 when precision and recall are both 0.
inline ClassMetrics classification_metrics(const std::vector<int> &predicted,
                                           const std::vector<int> &truth) {
  if (predicted.size() != truth.size())
    throw ParameterError("classification_metrics: length mismatch");
  if (truth.empty()) throw ParameterError("classification_metrics: no samples");
  ClassMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (predicted[i] != 0 && predicted[i] != 1))
      throw ParameterError("classification_metrics: labels must be 0 or 1");
    ++m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t actual = m.confusion[c][0] + m.confusion[c][1];
    if (actual == 0)
      throw UndefinedMetric("balanced accuracy undefined: class " + std::to_string(c) +
                            " absent from true labels");
    const std::size_t called = m.confusion[0][c] + m.confusion[1][c];
    const double tp = static_cast<double>(m.confusion[c][c]);
    m.per_class_recall[c] = tp / static_cast<double>(actual);
    m.per_class_precision[c] = called ? tp / static_cast<double>(called) : 0.0;
    const double p = m.per_class_precision[c], r = m.per_class_recall[c];
    m.per_class_f1[c] = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  m.balanced_accuracy = 0.5 * (m.per_class_recall[0] + m.per_class_recall[1]);
  m.recall = m.balanced_accuracy;
  m.precision = 0.5 * (m.per_class_precision[0] + m.per_class_precision[1]);
  m.macro_f1 = 0.5 * (m.per_class_f1[0] + m.per_class_f1[1]);
  return m;
}

// Decision rule shared by metrics and the state space: high when p >= 0.5.
inline int decide(double p_high) { return p_high >= 0.5 ? 1 : 0; }

} // namespace capstate::eval
