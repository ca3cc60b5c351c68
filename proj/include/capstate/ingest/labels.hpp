#pragma once

#include <vector>

#include "capstate/ingest/types.hpp"

namespace capstate::ingest {

// c1 is the low-demand baseline on both axes; c2 and c3 are high stress.
// Effort in c2 is construct-ambiguous and masked out of supervision.
constexpr LabelPair assign_labels(Condition c) {
  switch (c) {
  case Condition::C1: return {StressLabel::Low, EffortLabel::Low, 1};
  case Condition::C2: return {StressLabel::High, EffortLabel::Undefined, 0};
  case Condition::C3: return {StressLabel::High, EffortLabel::High, 1};
  }
  return {};
}

enum class LabelScheme { Primary, C2StressLow };

struct LabeledCondition {
  Condition condition;
  LabelPair labels;
};

// Sensitivity relabelling: under C2StressLow every c2 window becomes
// low-stress; nothing else changes.
inline LabelPair relabel_for_sensitivity(Condition c, LabelPair labels,
                                         LabelScheme scheme) {
  if (scheme == LabelScheme::C2StressLow && c == Condition::C2)
    labels.stress = StressLabel::Low;
  return labels;
}

inline std::vector<LabeledCondition>
relabel_for_sensitivity(std::vector<LabeledCondition> stream,
                        LabelScheme scheme) {
  for (auto &w : stream)
    w.labels = relabel_for_sensitivity(w.condition, w.labels, scheme);
  return stream;
}

} // namespace capstate::ingest
