#include "mtmm/data.hpp"

#include <fstream>
#include <random>
#include <unordered_set>

#include "json.hpp"
#include "mtmm/rng.hpp"

namespace mtmm {

namespace {

using njson = nlohmann::ordered_json;

constexpr const char* kFormatTag = "mtmm-es/1";

void check_vector_dim(const std::vector<double>& v, int expected, const char* stream,
                      const std::string& utterance_id) {
  if (static_cast<int>(v.size()) != expected)
    throw DataError("utterance " + utterance_id + ": " + stream + " vector has " +
                    std::to_string(v.size()) + " entries, expected " +
                    std::to_string(expected));
}

std::vector<double> parse_vector(const njson& j, const char* key,
                                 const std::string& utterance_id) {
  if (!j.contains(key) || !j[key].is_array())
    throw DataError("utterance " + utterance_id + ": missing numeric array '" + key + "'");
  std::vector<double> out;
  out.reserve(j[key].size());
  for (const auto& x : j[key]) {
    if (!x.is_number())
      throw DataError("utterance " + utterance_id + ": non-numeric entry in '" + key + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  std::unordered_set<std::string> seen_ids;
  for (const auto& video : ds.videos) {
    if (!seen_ids.insert(video.video_id).second)
      throw DataError("duplicate video_id '" + video.video_id + "'");
    if (video.utterances.empty())
      throw DataError("video " + video.video_id + " has no utterances");
    for (const auto& utt : video.utterances) {
      check_vector_dim(utt.text, ds.dims.text, "text", utt.utterance_id);
      check_vector_dim(utt.acoustic, ds.dims.acoustic, "acoustic", utt.utterance_id);
      check_vector_dim(utt.visual, ds.dims.visual, "visual", utt.utterance_id);
      if (utt.sentiment != 0 && utt.sentiment != 1)
        throw DataError("utterance " + utt.utterance_id + ": sentiment must be 0 or 1");
      for (int b : utt.emotions)
        if (b != 0 && b != 1)
          throw DataError("utterance " + utt.utterance_id + ": emotion bits must be 0 or 1");
      if (utt.emotions[kNoEmotionIndex] == 1) {
        for (int e = 0; e < kNoEmotionIndex; ++e)
          if (utt.emotions[e] == 1)
            throw DataError("utterance " + utt.utterance_id +
                            ": no_emotion is exclusive but emotion bit '" +
                            kEmotionNames[e] + "' is set");
      }
    }
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");

  std::string line;
  int line_no = 0;

  auto parse_line = [&](const std::string& text) {
    try {
      return njson::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  };

  if (!std::getline(in, line)) throw DataError(path + ": empty file, header line required");
  ++line_no;
  const njson header = parse_line(line);
  if (!header.contains("format") || header["format"] != kFormatTag)
    throw DataError(path + ":1: header must declare format '" + std::string(kFormatTag) + "'");
  if (!header.contains("dims") || !header["dims"].is_array() || header["dims"].size() != 3)
    throw DataError(path + ":1: header must carry dims [d_text, d_acoustic, d_visual]");

  Dataset ds;
  ds.dims.text = header["dims"][0].get<int>();
  ds.dims.acoustic = header["dims"][1].get<int>();
  ds.dims.visual = header["dims"][2].get<int>();
  if (ds.dims.text < 1 || ds.dims.acoustic < 1 || ds.dims.visual < 1)
    throw DataError(path + ":1: dims must all be >= 1");

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const njson j = parse_line(line);
    VideoSample video;
    if (!j.contains("video_id") || !j["video_id"].is_string())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing video_id");
    video.video_id = j["video_id"].get<std::string>();
    if (!j.contains("utterances") || !j["utterances"].is_array())
      throw DataError(path + ":" + std::to_string(line_no) + ": missing utterances array");
    for (const auto& ju : j["utterances"]) {
      Utterance utt;
      if (!ju.contains("utterance_id") || !ju["utterance_id"].is_string())
        throw DataError(path + ":" + std::to_string(line_no) + ": missing utterance_id");
      utt.utterance_id = ju["utterance_id"].get<std::string>();
      utt.text = parse_vector(ju, "text", utt.utterance_id);
      utt.acoustic = parse_vector(ju, "acoustic", utt.utterance_id);
      utt.visual = parse_vector(ju, "visual", utt.utterance_id);
      if (!ju.contains("sentiment") || !ju["sentiment"].is_number_integer())
        throw DataError("utterance " + utt.utterance_id + ": missing integer sentiment");
      utt.sentiment = ju["sentiment"].get<int>();
      if (!ju.contains("emotions") || !ju["emotions"].is_array() ||
          ju["emotions"].size() != kNumEmotions)
        throw DataError("utterance " + utt.utterance_id + ": emotions must be " +
                        std::to_string(kNumEmotions) + " bits");
      for (int e = 0; e < kNumEmotions; ++e) utt.emotions[e] = ju["emotions"][e].get<int>();
      video.utterances.push_back(std::move(utt));
    }
    ds.videos.push_back(std::move(video));
  }

  validate_dataset(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  validate_dataset(ds);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path + "'");

  njson header;
  header["format"] = kFormatTag;
  header["dims"] = {ds.dims.text, ds.dims.acoustic, ds.dims.visual};
  out << header.dump() << "\n";

  for (const auto& video : ds.videos) {
    njson j;
    j["video_id"] = video.video_id;
    njson utts = njson::array();
    for (const auto& utt : video.utterances) {
      njson ju;
      ju["utterance_id"] = utt.utterance_id;
      ju["text"] = utt.text;
      ju["acoustic"] = utt.acoustic;
      ju["visual"] = utt.visual;
      ju["sentiment"] = utt.sentiment;
      ju["emotions"] = utt.emotions;
      utts.push_back(std::move(ju));
    }
    j["utterances"] = std::move(utts);
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

void SynthSpec::validate() const {
  if (n_videos < 1) throw DataError("synth spec: n_videos must be >= 1");
  if (u_min < 1 || u_max < u_min) throw DataError("synth spec: need 1 <= u_min <= u_max");
  if (dims.text < 1 || dims.acoustic < 1 || dims.visual < 1)
    throw DataError("synth spec: dims must all be >= 1");
  if (positive_fraction < 0.0 || positive_fraction > 1.0)
    throw DataError("synth spec: positive_fraction must lie in [0, 1]");
  if (noise_scale < 0.0) throw DataError("synth spec: noise_scale must be >= 0");
  for (double p : emo_given_positive)
    if (p < 0.0 || p > 1.0) throw DataError("synth spec: emotion probability out of [0, 1]");
  for (double p : emo_given_negative)
    if (p < 0.0 || p > 1.0) throw DataError("synth spec: emotion probability out of [0, 1]");
}

namespace {

// Latent prototypes for one modality. The sentiment prototypes occupy the
// first half of the coordinates (mirrored signs for the two classes), and
// each of the 7 emotion classes owns a round-robin share of the second
// half, so every label bit is linearly recoverable from the features.
struct ModalityPrototypes {
  std::array<std::vector<double>, 2> sentiment;
  std::array<std::vector<double>, kNumEmotions> emotion;

  static ModalityPrototypes draw(int dim, std::mt19937_64& rng) {
    ModalityPrototypes p;
    const int sent_end = (dim + 1) / 2;
    p.sentiment[1].assign(static_cast<std::size_t>(dim), 0.0);
    for (int j = 0; j < sent_end; ++j) {
      const double mag = uniform_range(rng, 0.5, 1.0);
      p.sentiment[1][static_cast<std::size_t>(j)] = uniform01(rng) < 0.5 ? -mag : mag;
    }
    p.sentiment[0] = p.sentiment[1];
    for (double& v : p.sentiment[0]) v = -v;

    for (int e = 0; e < kNumEmotions; ++e)
      p.emotion[static_cast<std::size_t>(e)].assign(static_cast<std::size_t>(dim), 0.0);
    for (int j = sent_end; j < dim; ++j) {
      const int owner = (j - sent_end) % kNumEmotions;
      const double mag = uniform_range(rng, 0.5, 1.0);
      p.emotion[static_cast<std::size_t>(owner)][static_cast<std::size_t>(j)] =
          uniform01(rng) < 0.5 ? -mag : mag;
    }
    return p;
  }

  std::vector<double> features(int sentiment, const std::array<int, kNumEmotions>& emotions,
                               double noise_scale, std::mt19937_64& rng) const {
    std::vector<double> f = this->sentiment[static_cast<std::size_t>(sentiment)];
    for (int e = 0; e < kNumEmotions; ++e)
      if (emotions[static_cast<std::size_t>(e)] == 1)
        for (std::size_t j = 0; j < f.size(); ++j)
          f[j] += emotion[static_cast<std::size_t>(e)][j];
    if (noise_scale > 0.0)
      for (double& v : f) v += noise_scale * normal01(rng);
    return f;
  }
};

}  // namespace

Dataset synthesize_dataset(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);

  const ModalityPrototypes proto_text = ModalityPrototypes::draw(spec.dims.text, rng);
  const ModalityPrototypes proto_acoustic = ModalityPrototypes::draw(spec.dims.acoustic, rng);
  const ModalityPrototypes proto_visual = ModalityPrototypes::draw(spec.dims.visual, rng);

  Dataset ds;
  ds.dims = spec.dims;
  ds.split_tag = "train";
  char buf[64];

  for (int vi = 0; vi < spec.n_videos; ++vi) {
    VideoSample video;
    std::snprintf(buf, sizeof(buf), "v%04d", vi);
    video.video_id = buf;
    const int u = spec.u_min +
                  static_cast<int>(bounded(rng, static_cast<std::uint64_t>(spec.u_max - spec.u_min + 1)));
    for (int ui = 0; ui < u; ++ui) {
      Utterance utt;
      std::snprintf(buf, sizeof(buf), "v%04d_u%02d", vi, ui);
      utt.utterance_id = buf;
      utt.sentiment = uniform01(rng) < spec.positive_fraction ? 1 : 0;
      const auto& emo_p =
          utt.sentiment == 1 ? spec.emo_given_positive : spec.emo_given_negative;
      bool any = false;
      for (int e = 0; e < 6; ++e) {
        utt.emotions[static_cast<std::size_t>(e)] = uniform01(rng) < emo_p[static_cast<std::size_t>(e)] ? 1 : 0;
        any = any || utt.emotions[static_cast<std::size_t>(e)] == 1;
      }
      utt.emotions[kNoEmotionIndex] = any ? 0 : 1;
      utt.text = proto_text.features(utt.sentiment, utt.emotions, spec.noise_scale, rng);
      utt.acoustic =
          proto_acoustic.features(utt.sentiment, utt.emotions, spec.noise_scale, rng);
      utt.visual = proto_visual.features(utt.sentiment, utt.emotions, spec.noise_scale, rng);
      video.utterances.push_back(std::move(utt));
    }
    ds.videos.push_back(std::move(video));
  }
  return ds;
}

std::vector<std::vector<int>> batch_videos(const Dataset& ds, int batch_size,
                                           std::uint64_t seed) {
  if (batch_size < 1) throw DataError("batch_videos: batch_size must be >= 1");
  std::vector<int> order(ds.videos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  shuffle_inplace(order, rng);

  std::vector<std::vector<int>> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace mtmm
