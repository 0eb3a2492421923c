#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mtmm/attention.hpp"
#include "mtmm/data.hpp"
#include "mtmm/graph.hpp"
#include "mtmm/gru.hpp"

namespace mtmm {

enum class TaskMode { stl_sentiment, stl_emotion, mtl };

enum class Modality { text = 0, acoustic = 1, visual = 2 };

std::string to_string(TaskMode mode);
TaskMode task_mode_from_string(const std::string& s);
char modality_tag(Modality m);  // 'T', 'A', 'V'

/// "t,a,v" <-> canonical (sorted, deduplicated) modality list.
std::string modalities_to_string(const std::vector<Modality>& mods);
std::vector<Modality> modalities_from_string(const std::string& s);

struct ModelConfig {
  int d = 100;             // per-direction GRU size
  Dims input_dims;         // feature sizes per modality
  int dense_units = 100;
  double dropout_rate = 0.3;
  TaskMode mode = TaskMode::mtl;
  std::vector<Modality> modalities = {Modality::text, Modality::acoustic, Modality::visual};
  double loss_weight_lambda = 0.5;  // MTL mix: lambda * sent + (1 - lambda) * emo

  void validate() const;
  /// Width of the shared representation: 18d tri-modal, 8d bi-modal,
  /// 4d uni-modal.
  int rep_width() const;
  int input_dim(Modality m) const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// All trainable weights, addressable by stable names in creation order.
class ModelParams {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::pair<const std::string&, Tensor&> entry(std::size_t i);
  std::pair<const std::string&, const Tensor&> entry(std::size_t i) const;

  void set_requires_grad(bool v);
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Deterministic for a given (config, seed).
ModelParams build_model(const ModelConfig& config, std::uint64_t seed);

struct ForwardOutput {
  Tensor sentiment_probs;  // u x 2, rows sum to 1
  Tensor emotion_probs;    // u x 7, independent sigmoids
  std::vector<AttentionPair> attention;
  Graph::Id sentiment_probs_id = -1;
  Graph::Id emotion_probs_id = -1;
  int u = 0;
};

/// Runs one video through encoders, attention, the shared dense layer and
/// both heads. In training mode dropout masks are drawn from `rng`;
/// inference is deterministic.
ForwardOutput forward(Graph& g, const VideoSample& video, ModelParams& params,
                      const ModelConfig& config, bool training, std::mt19937_64& rng);

/// Scalar loss node for the configured mode. Sentiment: mean categorical
/// cross-entropy; emotion: mean binary cross-entropy over utterances and
/// classes; MTL: lambda-weighted sum. Probabilities are clipped to
/// [1e-7, 1 - 1e-7] inside the logs.
Graph::Id loss(Graph& g, const ForwardOutput& out, const VideoSample& gold,
               const ModelConfig& config);

struct Prediction {
  std::vector<int> sentiment;                 // argmax; ties go positive
  std::vector<std::vector<int>> emotion_sets; // classes with prob strictly above threshold
};

Prediction predict(const ForwardOutput& out, double threshold);

/// Textual checkpoint: version header, config line, then one named tensor
/// per block at 17 significant digits (bit-exact round trip).
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace mtmm
