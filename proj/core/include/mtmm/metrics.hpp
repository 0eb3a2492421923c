#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mtmm/data.hpp"

namespace mtmm {

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

/// Precision/recall/F1 of the positive class plus plain accuracy.
/// Degenerate 0/0 ratios resolve to 0; the counts stay available.
struct BinaryScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
};

BinaryScores binary_prf(const std::vector<int>& pred, const std::vector<int>& gold);

/// Balanced form: (TP/P + TN/N) / 2, the mean of positive-class and
/// negative-class recall. Undefined (nullopt) when gold is single-class;
/// never silently zero.
std::optional<double> weighted_accuracy(const std::vector<int>& pred,
                                        const std::vector<int>& gold);

/// The two-threshold regime: F1 label sets are cut at `f1`, weighted
/// accuracy label sets at `wacc`, both with strict >.
struct EmotionThresholds {
  double f1 = 0.4;
  double wacc = 0.2;
};

struct EmotionClassReport {
  std::string label;
  double f1 = 0.0;
  std::optional<double> weighted_accuracy;
  ConfusionCounts f1_counts;
  ConfusionCounts wacc_counts;
};

struct EmotionReport {
  std::array<EmotionClassReport, kNumEmotions> classes;
  // Arithmetic mean over the six emotions; no_emotion excluded. The
  // weighted-accuracy average is present only if all six are defined.
  double six_class_f1 = 0.0;
  std::optional<double> six_class_weighted_accuracy;
  long empty_prediction_count = 0;  // utterances whose F1-threshold set is empty
};

/// One-vs-rest per class over pooled utterances. probs and gold are
/// parallel; each row is one utterance.
EmotionReport multilabel_report(const std::vector<std::array<double, kNumEmotions>>& probs,
                                const std::vector<std::array<int, kNumEmotions>>& gold,
                                EmotionThresholds thresholds);

struct MetricsReport {
  BinaryScores sentiment;
  EmotionReport emotion;
  EmotionThresholds thresholds;
  std::size_t utterances = 0;

  /// Machine-readable document with the field names above.
  std::string to_json() const;
  /// Flat key-value lines.
  std::string to_text() const;
};

}  // namespace mtmm
