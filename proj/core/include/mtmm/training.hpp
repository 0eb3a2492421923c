#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtmm/metrics.hpp"
#include "mtmm/model.hpp"

namespace mtmm {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators mirror the parameter registry by index.
struct AdamState {
  AdamConfig hyper;
  long step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState init(const ModelParams& params, AdamConfig hyper = {});
};

/// Standard bias-corrected Adam update, one call per batch. Every
/// parameter must have a populated (possibly zero) grad buffer.
void adam_step(ModelParams& params, AdamState& state);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_loss;
  std::optional<double> dev_sentiment_f1;
  std::optional<double> dev_sentiment_accuracy;
  std::optional<double> dev_emotion_f1;
  std::optional<double> dev_emotion_wacc;
  double selection_score = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  long total_steps = 0;
  int best_epoch = -1;  // -1 when no dev set was given

  std::string to_json() const;
};

struct TrainOptions {
  int epochs = 50;
  int batch_size = 16;
  std::uint64_t seed = 0;
  AdamConfig adam;
  EmotionThresholds thresholds;
};

struct TrainResult {
  ModelParams params;  // best-dev checkpoint, or final params without a dev set
  TrainHistory history;
};

/// Seeded epoch loop: shuffle videos, mean per-video loss per batch, one
/// Adam step per batch. Fully deterministic for (config, data, options).
TrainResult train(const ModelConfig& config, const Dataset& train_data,
                  const Dataset* dev_data, const TrainOptions& options);

/// Inference-mode evaluation of a dataset: sentiment argmax predictions,
/// pooled emotion probabilities pushed through the two-threshold report.
MetricsReport evaluate(ModelParams& params, const ModelConfig& config, const Dataset& data,
                       EmotionThresholds thresholds = {});

/// Mean inference-mode loss over videos.
double dataset_loss(ModelParams& params, const ModelConfig& config, const Dataset& data);

/// Scalar used for best-epoch selection: sentiment accuracy for
/// stl-sent, six-class weighted accuracy (F1 fallback) for stl-emo, and
/// their mean for mtl.
double selection_score(const MetricsReport& report, TaskMode mode);

}  // namespace mtmm
