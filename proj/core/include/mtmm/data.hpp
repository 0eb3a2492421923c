#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mtmm/errors.hpp"

namespace mtmm {

/// Emotion head ordering. no_emotion is exclusive: when set, the six
/// emotion bits must all be zero.
inline constexpr std::array<const char*, 7> kEmotionNames = {
    "anger", "disgust", "fear", "happy", "sad", "surprise", "no_emotion"};
inline constexpr int kNumEmotions = 7;
inline constexpr int kNoEmotionIndex = 6;

/// Sentiment head ordering: index 0 = negative, 1 = positive.
inline constexpr std::array<const char*, 2> kSentimentNames = {"negative", "positive"};

struct Utterance {
  std::string utterance_id;
  std::vector<double> text;
  std::vector<double> acoustic;
  std::vector<double> visual;
  int sentiment = 0;  // 0 negative, 1 positive
  std::array<int, kNumEmotions> emotions{};
};

struct VideoSample {
  std::string video_id;
  std::vector<Utterance> utterances;
};

struct Dims {
  int text = 0;
  int acoustic = 0;
  int visual = 0;

  bool operator==(const Dims&) const = default;
};

struct Dataset {
  std::vector<VideoSample> videos;
  Dims dims;
  std::string split_tag;  // train / dev / test, informational

  std::size_t utterance_count() const {
    std::size_t n = 0;
    for (const auto& v : videos) n += v.utterances.size();
    return n;
  }
};

/// Enforces every schema invariant; throws DataError naming the offending
/// video/utterance.
void validate_dataset(const Dataset& ds);

/// JSON Lines, one video per line, preceded by a header line
///   {"format": "mtmm-es/1", "dims": [d_t, d_a, d_v]}
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

/// Controls for the deterministic generator. Labels are drawn first
/// (sentiment from positive_fraction, emotion bits conditionally on the
/// sentiment), then features are assembled from per-class latent
/// prototypes plus Gaussian noise, so the labels are learnable from the
/// features by construction.
struct SynthSpec {
  int n_videos = 8;
  int u_min = 3;
  int u_max = 8;
  Dims dims{16, 14, 14};
  double positive_fraction = 11499.0 / 16216.0;
  // P(emotion bit | sentiment); none drawn => the no-emotion bit.
  std::array<double, 6> emo_given_positive = {0.05, 0.04, 0.06, 0.70, 0.08, 0.15};
  std::array<double, 6> emo_given_negative = {0.55, 0.40, 0.25, 0.05, 0.50, 0.08};
  double noise_scale = 0.1;

  void validate() const;
};

Dataset synthesize_dataset(const SynthSpec& spec, std::uint64_t seed);

/// Seeded shuffle of video indices partitioned into batches. Videos are
/// never merged: each one remains its own u x feature sequence.
std::vector<std::vector<int>> batch_videos(const Dataset& ds, int batch_size,
                                           std::uint64_t seed);

}  // namespace mtmm
