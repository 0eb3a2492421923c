#include "mtmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "mtmm/rng.hpp"

namespace mtmm {

namespace {

constexpr double kProbClip = 1e-7;
constexpr const char* kCheckpointMagic = "mtmm-checkpoint/1";

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::text:
      return "text";
    case Modality::acoustic:
      return "acoustic";
    case Modality::visual:
      return "visual";
  }
  throw ShapeError("unknown modality");
}

}  // namespace

std::string to_string(TaskMode mode) {
  switch (mode) {
    case TaskMode::stl_sentiment:
      return "stl-sent";
    case TaskMode::stl_emotion:
      return "stl-emo";
    case TaskMode::mtl:
      return "mtl";
  }
  throw ShapeError("unknown task mode");
}

TaskMode task_mode_from_string(const std::string& s) {
  if (s == "stl-sent") return TaskMode::stl_sentiment;
  if (s == "stl-emo") return TaskMode::stl_emotion;
  if (s == "mtl") return TaskMode::mtl;
  throw DataError("unknown mode '" + s + "', expected stl-sent, stl-emo or mtl");
}

char modality_tag(Modality m) {
  switch (m) {
    case Modality::text:
      return 'T';
    case Modality::acoustic:
      return 'A';
    case Modality::visual:
      return 'V';
  }
  throw ShapeError("unknown modality");
}

std::string modalities_to_string(const std::vector<Modality>& mods) {
  std::string out;
  for (Modality m : mods) {
    if (!out.empty()) out += ',';
    out += static_cast<char>(std::tolower(modality_tag(m)));
  }
  return out;
}

std::vector<Modality> modalities_from_string(const std::string& s) {
  std::vector<Modality> mods;
  for (char c : s) {
    switch (std::tolower(c)) {
      case 't':
        mods.push_back(Modality::text);
        break;
      case 'a':
        mods.push_back(Modality::acoustic);
        break;
      case 'v':
        mods.push_back(Modality::visual);
        break;
      case ',':
      case ' ':
      case '+':
        break;
      default:
        throw DataError(std::string("unknown modality character '") + c +
                        "' (expected t, a, v)");
    }
  }
  std::sort(mods.begin(), mods.end());
  mods.erase(std::unique(mods.begin(), mods.end()), mods.end());
  if (mods.empty()) throw DataError("modalities must name at least one of t, a, v");
  return mods;
}

void ModelConfig::validate() const {
  if (d < 1) throw ShapeError("config: d must be >= 1");
  if (dense_units < 1) throw ShapeError("config: dense_units must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ShapeError("config: dropout_rate must lie in [0, 1)");
  if (loss_weight_lambda < 0.0 || loss_weight_lambda > 1.0)
    throw ShapeError("config: loss_weight_lambda must lie in [0, 1]");
  if (modalities.empty()) throw ShapeError("config: modalities must be nonempty");
  std::vector<Modality> sorted = modalities;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ShapeError("config: duplicate modality");
  for (Modality m : modalities)
    if (input_dim(m) < 1)
      throw ShapeError("config: input dim for modality '" + modality_name(m) +
                       "' must be >= 1");
}

int ModelConfig::rep_width() const {
  switch (modalities.size()) {
    case 1:
      return 4 * d;
    case 2:
      return 8 * d;
    case 3:
      return 18 * d;
    default:
      throw ShapeError("config: modalities must have 1..3 entries");
  }
}

int ModelConfig::input_dim(Modality m) const {
  switch (m) {
    case Modality::text:
      return input_dims.text;
    case Modality::acoustic:
      return input_dims.acoustic;
    case Modality::visual:
      return input_dims.visual;
  }
  throw ShapeError("unknown modality");
}

std::string ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d"] = d;
  j["input_dims"] = {input_dims.text, input_dims.acoustic, input_dims.visual};
  j["dense_units"] = dense_units;
  j["dropout_rate"] = dropout_rate;
  j["mode"] = to_string(mode);
  j["modalities"] = modalities_to_string(modalities);
  j["loss_weight_lambda"] = loss_weight_lambda;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  ModelConfig cfg;
  if (j.contains("d")) cfg.d = j["d"].get<int>();
  if (j.contains("input_dims")) {
    const auto& dims = j["input_dims"];
    if (!dims.is_array() || dims.size() != 3)
      throw DataError("model config: input_dims must be [d_text, d_acoustic, d_visual]");
    cfg.input_dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
  }
  if (j.contains("dense_units")) cfg.dense_units = j["dense_units"].get<int>();
  if (j.contains("dropout_rate")) cfg.dropout_rate = j["dropout_rate"].get<double>();
  if (j.contains("mode")) cfg.mode = task_mode_from_string(j["mode"].get<std::string>());
  if (j.contains("modalities"))
    cfg.modalities = modalities_from_string(j["modalities"].get<std::string>());
  if (j.contains("loss_weight_lambda"))
    cfg.loss_weight_lambda = j["loss_weight_lambda"].get<double>();
  return cfg;
}

Tensor& ModelParams::add(const std::string& name, Tensor t) {
  if (has(name)) throw ShapeError("duplicate parameter name '" + name + "'");
  entries_.emplace_back(name, std::move(t));
  return entries_.back().second;
}

Tensor& ModelParams::at(const std::string& name) {
  for (auto& [n, t] : entries_)
    if (n == name) return t;
  throw ShapeError("unknown parameter '" + name + "'");
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw ShapeError("unknown parameter '" + name + "'");
}

bool ModelParams::has(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return true;
  return false;
}

std::vector<std::string> ModelParams::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [n, t] : entries_) out.push_back(n);
  return out;
}

std::pair<const std::string&, Tensor&> ModelParams::entry(std::size_t i) {
  return {entries_[i].first, entries_[i].second};
}

std::pair<const std::string&, const Tensor&> ModelParams::entry(std::size_t i) const {
  return {entries_[i].first, entries_[i].second};
}

void ModelParams::set_requires_grad(bool v) {
  for (auto& [n, t] : entries_) t.requires_grad = v;
}

void ModelParams::zero_grads() {
  for (auto& [n, t] : entries_) t.zero_grad();
}

namespace {

Tensor uniform_init(int r, int c, std::mt19937_64& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(r));
  Tensor t(r, c);
  for (double& v : t.data) v = uniform_range(rng, -k, k);
  return t;
}

void add_gru_params(ModelParams& params, const std::string& prefix, int d_in, int d,
                    std::mt19937_64& rng) {
  GruParams p = GruParams::init(d_in, d, rng);
  params.add(prefix + ".W_z", std::move(p.W_z));
  params.add(prefix + ".W_r", std::move(p.W_r));
  params.add(prefix + ".W_h", std::move(p.W_h));
  params.add(prefix + ".U_z", std::move(p.U_z));
  params.add(prefix + ".U_r", std::move(p.U_r));
  params.add(prefix + ".U_h", std::move(p.U_h));
  params.add(prefix + ".b_z", std::move(p.b_z));
  params.add(prefix + ".b_r", std::move(p.b_r));
  params.add(prefix + ".b_h", std::move(p.b_h));
}

GruIds gru_leaves_named(Graph& g, ModelParams& params, const std::string& prefix) {
  GruIds ids;
  ids.W_z = g.leaf(params.at(prefix + ".W_z"));
  ids.W_r = g.leaf(params.at(prefix + ".W_r"));
  ids.W_h = g.leaf(params.at(prefix + ".W_h"));
  ids.U_z = g.leaf(params.at(prefix + ".U_z"));
  ids.U_r = g.leaf(params.at(prefix + ".U_r"));
  ids.U_h = g.leaf(params.at(prefix + ".U_h"));
  ids.b_z = g.leaf(params.at(prefix + ".b_z"));
  ids.b_r = g.leaf(params.at(prefix + ".b_r"));
  ids.b_h = g.leaf(params.at(prefix + ".b_h"));
  return ids;
}

bool has_modality(const ModelConfig& cfg, Modality m) {
  return std::find(cfg.modalities.begin(), cfg.modalities.end(), m) != cfg.modalities.end();
}

Tensor features_of(const VideoSample& video, Modality m, const ModelConfig& cfg) {
  const int u = static_cast<int>(video.utterances.size());
  const int dim = cfg.input_dim(m);
  Tensor X(u, dim);
  for (int i = 0; i < u; ++i) {
    const Utterance& utt = video.utterances[static_cast<std::size_t>(i)];
    const std::vector<double>* src = nullptr;
    switch (m) {
      case Modality::text:
        src = &utt.text;
        break;
      case Modality::acoustic:
        src = &utt.acoustic;
        break;
      case Modality::visual:
        src = &utt.visual;
        break;
    }
    if (static_cast<int>(src->size()) != dim)
      throw ShapeError("utterance " + utt.utterance_id + ": " + modality_name(m) +
                       " feature has " + std::to_string(src->size()) + " entries, config says " +
                       std::to_string(dim));
    for (int j = 0; j < dim; ++j) X.at(i, j) = (*src)[static_cast<std::size_t>(j)];
  }
  return X;
}

}  // namespace

ModelParams build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams params;

  for (Modality m : {Modality::text, Modality::acoustic, Modality::visual}) {
    if (!has_modality(config, m)) continue;
    const std::string base = "encoder." + modality_name(m);
    add_gru_params(params, base + ".fwd", config.input_dim(m), config.d, rng);
    add_gru_params(params, base + ".bwd", config.input_dim(m), config.d, rng);
  }

  params.add("dense.W", uniform_init(config.rep_width(), config.dense_units, rng));
  params.add("dense.b", Tensor(1, config.dense_units));
  params.add("head.sentiment.W", uniform_init(config.dense_units, 2, rng));
  params.add("head.sentiment.b", Tensor(1, 2));
  params.add("head.emotion.W", uniform_init(config.dense_units, kNumEmotions, rng));
  params.add("head.emotion.b", Tensor(1, kNumEmotions));
  return params;
}

ForwardOutput forward(Graph& g, const VideoSample& video, ModelParams& params,
                      const ModelConfig& config, bool training, std::mt19937_64& rng) {
  config.validate();
  if (video.utterances.empty()) throw ShapeError("forward: video has no utterances");

  struct Encoded {
    Modality m;
    Graph::Id id;
  };
  std::vector<Encoded> enc;
  for (Modality m : {Modality::text, Modality::acoustic, Modality::visual}) {
    if (!has_modality(config, m)) continue;
    const std::string base = "encoder." + modality_name(m);
    BiGruIds ids{gru_leaves_named(g, params, base + ".fwd"),
                 gru_leaves_named(g, params, base + ".bwd")};
    const Graph::Id X = g.constant(features_of(video, m, config));
    enc.push_back({m, bigru(g, X, ids)});
  }

  auto enc_of = [&enc](Modality m) {
    for (const auto& e : enc)
      if (e.m == m) return e.id;
    throw ShapeError("forward: modality not encoded");
  };

  ForwardOutput out;
  out.u = static_cast<int>(video.utterances.size());

  std::vector<Graph::Id> rep_parts;
  if (enc.size() == 3) {
    const Graph::Id T = enc_of(Modality::text);
    const Graph::Id A = enc_of(Modality::acoustic);
    const Graph::Id V = enc_of(Modality::visual);
    const AttentionIds tv = cim_attention(g, T, V);
    const AttentionIds av = cim_attention(g, A, V);
    const AttentionIds ta = cim_attention(g, T, A);
    out.attention.push_back(snapshot_attention(g, tv, "TV"));
    out.attention.push_back(snapshot_attention(g, av, "AV"));
    out.attention.push_back(snapshot_attention(g, ta, "TA"));
    rep_parts = {tv.output, av.output, ta.output, T, V, A};
  } else if (enc.size() == 2) {
    // Pair orientation matches the tri-modal blocks: TV, AV or TA.
    const Modality first = enc[0].m;
    const Modality second = enc[1].m;
    Graph::Id X = enc[0].id;
    Graph::Id Y = enc[1].id;
    std::string name{modality_tag(first), modality_tag(second)};
    if (first == Modality::acoustic && second == Modality::visual) {
      name = "AV";
    } else if (first == Modality::text && second == Modality::visual) {
      name = "TV";
    } else {
      name = "TA";
    }
    const AttentionIds pair = cim_attention(g, X, Y);
    out.attention.push_back(snapshot_attention(g, pair, name));
    rep_parts = {pair.output, X, Y};
  } else {
    const Graph::Id X = enc[0].id;
    const AttentionIds self = cim_attention(g, X, X);
    const char tag = modality_tag(enc[0].m);
    out.attention.push_back(snapshot_attention(g, self, std::string{tag, tag}));
    rep_parts = {self.output};
  }

  Graph::Id rep = rep_parts.size() == 1 ? rep_parts[0] : g.concat_cols(rep_parts);
  if (training && config.dropout_rate > 0.0) rep = g.dropout(rep, config.dropout_rate, rng);

  const Graph::Id hidden = g.relu(
      g.add_row(g.matmul(rep, g.leaf(params.at("dense.W"))), g.leaf(params.at("dense.b"))));

  const Graph::Id sent_logits =
      g.add_row(g.matmul(hidden, g.leaf(params.at("head.sentiment.W"))),
                g.leaf(params.at("head.sentiment.b")));
  out.sentiment_probs_id = g.row_softmax(sent_logits);

  const Graph::Id emo_logits =
      g.add_row(g.matmul(hidden, g.leaf(params.at("head.emotion.W"))),
                g.leaf(params.at("head.emotion.b")));
  out.emotion_probs_id = g.sigmoid(emo_logits);

  out.sentiment_probs = g.value(out.sentiment_probs_id);
  out.emotion_probs = g.value(out.emotion_probs_id);
  return out;
}

namespace {

Graph::Id sentiment_loss(Graph& g, Graph::Id probs, const VideoSample& gold) {
  const int u = static_cast<int>(gold.utterances.size());
  Tensor onehot(u, 2);
  for (int i = 0; i < u; ++i) {
    const int s = gold.utterances[static_cast<std::size_t>(i)].sentiment;
    if (s != 0 && s != 1)
      throw DataError("utterance " +
                      gold.utterances[static_cast<std::size_t>(i)].utterance_id +
                      ": sentiment label out of range");
    onehot.at(i, s) = 1.0;
  }
  const Graph::Id logp = g.log_(g.clip(probs, kProbClip, 1.0 - kProbClip));
  const Graph::Id picked = g.mul(g.constant(std::move(onehot)), logp);
  return g.affine(g.sum_all(picked), -1.0 / static_cast<double>(u), 0.0);
}

Graph::Id emotion_loss(Graph& g, Graph::Id probs, const VideoSample& gold) {
  const int u = static_cast<int>(gold.utterances.size());
  Tensor bits(u, kNumEmotions);
  for (int i = 0; i < u; ++i)
    for (int e = 0; e < kNumEmotions; ++e) {
      const int b = gold.utterances[static_cast<std::size_t>(i)].emotions[static_cast<std::size_t>(e)];
      if (b != 0 && b != 1)
        throw DataError("utterance " +
                        gold.utterances[static_cast<std::size_t>(i)].utterance_id +
                        ": emotion label out of range");
      bits.at(i, e) = static_cast<double>(b);
    }
  const Graph::Id y = g.constant(std::move(bits));
  const Graph::Id p = g.clip(probs, kProbClip, 1.0 - kProbClip);
  const Graph::Id pos = g.mul(y, g.log_(p));
  const Graph::Id neg = g.mul(g.affine(y, -1.0, 1.0), g.log_(g.affine(p, -1.0, 1.0)));
  const Graph::Id total = g.sum_all(g.add(pos, neg));
  return g.affine(total, -1.0 / static_cast<double>(u * kNumEmotions), 0.0);
}

}  // namespace

Graph::Id loss(Graph& g, const ForwardOutput& out, const VideoSample& gold,
               const ModelConfig& config) {
  if (static_cast<int>(gold.utterances.size()) != out.u)
    throw ShapeError("loss: gold has " + std::to_string(gold.utterances.size()) +
                     " utterances, forward saw " + std::to_string(out.u));
  switch (config.mode) {
    case TaskMode::stl_sentiment:
      return sentiment_loss(g, out.sentiment_probs_id, gold);
    case TaskMode::stl_emotion:
      return emotion_loss(g, out.emotion_probs_id, gold);
    case TaskMode::mtl: {
      const double lambda = config.loss_weight_lambda;
      const Graph::Id ls = sentiment_loss(g, out.sentiment_probs_id, gold);
      const Graph::Id le = emotion_loss(g, out.emotion_probs_id, gold);
      return g.add(g.affine(ls, lambda, 0.0), g.affine(le, 1.0 - lambda, 0.0));
    }
  }
  throw ShapeError("loss: unknown mode");
}

Prediction predict(const ForwardOutput& out, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw ShapeError("predict: threshold must lie in (0, 1)");
  Prediction pred;
  pred.sentiment.resize(static_cast<std::size_t>(out.u));
  pred.emotion_sets.resize(static_cast<std::size_t>(out.u));
  for (int i = 0; i < out.u; ++i) {
    // Ties resolve to the positive class (index 1).
    pred.sentiment[static_cast<std::size_t>(i)] =
        out.sentiment_probs.at(i, 1) >= out.sentiment_probs.at(i, 0) ? 1 : 0;
    for (int e = 0; e < kNumEmotions; ++e)
      if (out.emotion_probs.at(i, e) > threshold)
        pred.emotion_sets[static_cast<std::size_t>(i)].push_back(e);
  }
  return pred;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << kCheckpointMagic << "\n";
  out << config.to_json() << "\n";
  out << "params " << params.size() << "\n";
  char buf[40];
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto [name, t] = params.entry(i);
    out << name << " " << t.rows << " " << t.cols << "\n";
    for (int r = 0; r < t.rows; ++r) {
      for (int c = 0; c < t.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.at(r, c));
        out << (c == 0 ? "" : " ") << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw DataError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw DataError("checkpoint '" + path + "': bad or missing version header (expected '" +
                    std::string(kCheckpointMagic) + "')");
  if (!std::getline(in, line)) throw DataError("checkpoint '" + path + "': missing config");
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(line);

  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "params")
    throw DataError("checkpoint '" + path + "': missing params section");
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    int rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols))
      throw DataError("checkpoint '" + path + "': truncated tensor header");
    if (rows < 0 || cols < 0 || rows * cols > 100'000'000)
      throw DataError("checkpoint '" + path + "': implausible tensor shape for '" + name + "'");
    Tensor t(rows, cols);
    for (double& v : t.data)
      if (!(in >> v))
        throw DataError("checkpoint '" + path + "': truncated values for '" + name + "'");
    ckpt.params.add(name, std::move(t));
  }
  return ckpt;
}

}  // namespace mtmm
