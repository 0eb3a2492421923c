#include "mtmm/training.hpp"

#include <cmath>

#include "json.hpp"
#include "mtmm/rng.hpp"

namespace mtmm {

AdamState AdamState::init(const ModelParams& params, AdamConfig hyper) {
  AdamState state;
  state.hyper = hyper;
  state.m.resize(params.size());
  state.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto [name, t] = params.entry(i);
    state.m[i].assign(t.size(), 0.0);
    state.v[i].assign(t.size(), 0.0);
  }
  return state;
}

void adam_step(ModelParams& params, AdamState& state) {
  if (state.m.size() != params.size())
    throw ShapeError("adam_step: state does not match parameter registry");
  ++state.step_count;
  const double b1 = state.hyper.beta1;
  const double b2 = state.hyper.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto [name, t] = params.entry(i);
    if (t.grad.size() != t.data.size())
      throw ShapeError("adam_step: missing grad for parameter '" + name + "'");
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      const double g = t.grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / corr1;
      const double v_hat = v[k] / corr2;
      t.data[k] -= state.hyper.lr * m_hat / (std::sqrt(v_hat) + state.hyper.eps);
    }
  }
}

namespace {

void check_dims(const ModelConfig& config, const Dataset& data, const char* which) {
  for (Modality m : config.modalities) {
    int have = 0;
    switch (m) {
      case Modality::text:
        have = data.dims.text;
        break;
      case Modality::acoustic:
        have = data.dims.acoustic;
        break;
      case Modality::visual:
        have = data.dims.visual;
        break;
    }
    if (have != config.input_dim(m))
      throw DataError(std::string(which) + " dataset dims do not match model config");
  }
}

}  // namespace

MetricsReport evaluate(ModelParams& params, const ModelConfig& config, const Dataset& data,
                       EmotionThresholds thresholds) {
  check_dims(config, data, "eval");
  std::vector<int> sent_pred, sent_gold;
  std::vector<std::array<double, kNumEmotions>> emo_probs;
  std::vector<std::array<int, kNumEmotions>> emo_gold;
  std::mt19937_64 rng(0);  // unused in inference mode

  for (const VideoSample& video : data.videos) {
    Graph g;
    const ForwardOutput out = forward(g, video, params, config, /*training=*/false, rng);
    const Prediction pred = predict(out, thresholds.f1);
    for (int i = 0; i < out.u; ++i) {
      sent_pred.push_back(pred.sentiment[static_cast<std::size_t>(i)]);
      sent_gold.push_back(video.utterances[static_cast<std::size_t>(i)].sentiment);
      std::array<double, kNumEmotions> probs{};
      for (int e = 0; e < kNumEmotions; ++e) probs[static_cast<std::size_t>(e)] = out.emotion_probs.at(i, e);
      emo_probs.push_back(probs);
      emo_gold.push_back(video.utterances[static_cast<std::size_t>(i)].emotions);
    }
  }

  MetricsReport report;
  report.utterances = sent_pred.size();
  report.thresholds = thresholds;
  report.sentiment = binary_prf(sent_pred, sent_gold);
  report.emotion = multilabel_report(emo_probs, emo_gold, thresholds);
  return report;
}

double dataset_loss(ModelParams& params, const ModelConfig& config, const Dataset& data) {
  check_dims(config, data, "loss");
  std::mt19937_64 rng(0);
  double total = 0.0;
  for (const VideoSample& video : data.videos) {
    Graph g;
    const ForwardOutput out = forward(g, video, params, config, /*training=*/false, rng);
    total += g.value(loss(g, out, video, config)).data[0];
  }
  return total / static_cast<double>(data.videos.size());
}

double selection_score(const MetricsReport& report, TaskMode mode) {
  const double emo_score = report.emotion.six_class_weighted_accuracy
                               ? *report.emotion.six_class_weighted_accuracy
                               : report.emotion.six_class_f1;
  switch (mode) {
    case TaskMode::stl_sentiment:
      return report.sentiment.accuracy;
    case TaskMode::stl_emotion:
      return emo_score;
    case TaskMode::mtl:
      return 0.5 * (report.sentiment.accuracy + emo_score);
  }
  throw ShapeError("selection_score: unknown mode");
}

TrainResult train(const ModelConfig& config, const Dataset& train_data,
                  const Dataset* dev_data, const TrainOptions& options) {
  config.validate();
  check_dims(config, train_data, "train");
  if (dev_data != nullptr) check_dims(config, *dev_data, "dev");
  if (options.epochs < 0) throw DataError("train: epochs must be >= 0");
  if (options.batch_size < 1) throw DataError("train: batch_size must be >= 1");
  if (train_data.videos.empty()) throw DataError("train: empty dataset");

  ModelParams params = build_model(config, options.seed);
  params.set_requires_grad(true);
  AdamState adam = AdamState::init(params, options.adam);

  std::mt19937_64 rng(options.seed);
  TrainResult result;
  double best_score = -1.0;

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto batches = batch_videos(train_data, options.batch_size, rng());
    double epoch_loss = 0.0;
    std::size_t video_count = 0;

    for (const std::vector<int>& batch : batches) {
      params.zero_grads();
      const double inv = 1.0 / static_cast<double>(batch.size());
      double batch_loss = 0.0;
      for (int vi : batch) {
        const VideoSample& video = train_data.videos[static_cast<std::size_t>(vi)];
        Graph g;
        const ForwardOutput out = forward(g, video, params, config, /*training=*/true, rng);
        const Graph::Id video_loss = loss(g, out, video, config);
        const double value = g.value(video_loss).data[0];
        if (!std::isfinite(value))
          throw NumericError("train: non-finite loss on video " + video.video_id);
        batch_loss += value;
        // Mean over the batch's videos: scale before backprop.
        g.backward(g.affine(video_loss, inv, 0.0));
      }
      adam_step(params, adam);
      ++result.history.total_steps;
      epoch_loss += batch_loss;
      video_count += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(video_count);
    if (dev_data != nullptr) {
      rec.dev_loss = dataset_loss(params, config, *dev_data);
      const MetricsReport dev = evaluate(params, config, *dev_data, options.thresholds);
      rec.dev_sentiment_f1 = dev.sentiment.f1;
      rec.dev_sentiment_accuracy = dev.sentiment.accuracy;
      rec.dev_emotion_f1 = dev.emotion.six_class_f1;
      if (dev.emotion.six_class_weighted_accuracy)
        rec.dev_emotion_wacc = dev.emotion.six_class_weighted_accuracy;
      rec.selection_score = selection_score(dev, config.mode);
      if (rec.selection_score > best_score) {
        best_score = rec.selection_score;
        result.history.best_epoch = epoch;
        result.params = params;  // snapshot
      }
    }
    result.history.epochs.push_back(rec);
  }

  if (dev_data == nullptr || result.history.best_epoch < 0) result.params = params;
  return result;
}

std::string TrainHistory::to_json() const {
  nlohmann::ordered_json j;
  j["total_steps"] = total_steps;
  j["best_epoch"] = best_epoch;
  nlohmann::ordered_json eps = nlohmann::ordered_json::array();
  for (const EpochRecord& r : epochs) {
    nlohmann::ordered_json je;
    je["epoch"] = r.epoch;
    je["train_loss"] = r.train_loss;
    auto put_opt = [&je](const char* key, const std::optional<double>& v) {
      if (v) je[key] = *v;
    };
    put_opt("dev_loss", r.dev_loss);
    put_opt("dev_sentiment_f1", r.dev_sentiment_f1);
    put_opt("dev_sentiment_accuracy", r.dev_sentiment_accuracy);
    put_opt("dev_emotion_f1", r.dev_emotion_f1);
    put_opt("dev_emotion_wacc", r.dev_emotion_wacc);
    if (r.dev_loss) je["selection_score"] = r.selection_score;
    eps.push_back(std::move(je));
  }
  j["epochs"] = std::move(eps);
  return j.dump(2);
}

}  // namespace mtmm
