#include "mtmm/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace mtmm {

namespace {

ConfusionCounts count_confusion(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size())
    throw ShapeError("metrics: pred and gold lengths differ, " + std::to_string(pred.size()) +
                     " vs " + std::to_string(gold.size()));
  if (pred.empty()) throw ShapeError("metrics: need at least one sample");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gold[i] != 0;
    if (p && g)
      ++c.tp;
    else if (p && !g)
      ++c.fp;
    else if (!p && g)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double ratio_or_zero(long num, long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "undefined"; }

}  // namespace

BinaryScores binary_prf(const std::vector<int>& pred, const std::vector<int>& gold) {
  BinaryScores s;
  s.counts = count_confusion(pred, gold);
  const auto& c = s.counts;
  s.precision = ratio_or_zero(c.tp, c.tp + c.fp);
  s.recall = ratio_or_zero(c.tp, c.tp + c.fn);
  s.f1 = (s.precision + s.recall) == 0.0
             ? 0.0
             : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.accuracy = ratio_or_zero(c.tp + c.tn, c.total());
  return s;
}

std::optional<double> weighted_accuracy(const std::vector<int>& pred,
                                        const std::vector<int>& gold) {
  const ConfusionCounts c = count_confusion(pred, gold);
  const long pos = c.tp + c.fn;
  const long neg = c.tn + c.fp;
  if (pos == 0 || neg == 0) return std::nullopt;
  return 0.5 * (static_cast<double>(c.tp) / static_cast<double>(pos) +
                static_cast<double>(c.tn) / static_cast<double>(neg));
}

EmotionReport multilabel_report(const std::vector<std::array<double, kNumEmotions>>& probs,
                                const std::vector<std::array<int, kNumEmotions>>& gold,
                                EmotionThresholds thresholds) {
  if (probs.size() != gold.size())
    throw ShapeError("multilabel_report: probs and gold lengths differ");
  if (probs.empty()) throw ShapeError("multilabel_report: need at least one utterance");

  EmotionReport report;
  const std::size_t n = probs.size();

  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (int e = 0; e < kNumEmotions; ++e) any = any || probs[i][static_cast<std::size_t>(e)] > thresholds.f1;
    if (!any) ++report.empty_prediction_count;
  }

  double f1_sum = 0.0;
  double wacc_sum = 0.0;
  bool wacc_all_defined = true;

  for (int e = 0; e < kNumEmotions; ++e) {
    std::vector<int> f1_pred(n), wacc_pred(n), cls_gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs[i][static_cast<std::size_t>(e)];
      f1_pred[i] = p > thresholds.f1 ? 1 : 0;
      wacc_pred[i] = p > thresholds.wacc ? 1 : 0;
      cls_gold[i] = gold[i][static_cast<std::size_t>(e)];
    }
    EmotionClassReport& cls = report.classes[static_cast<std::size_t>(e)];
    cls.label = kEmotionNames[static_cast<std::size_t>(e)];
    const BinaryScores f1_scores = binary_prf(f1_pred, cls_gold);
    cls.f1 = f1_scores.f1;
    cls.f1_counts = f1_scores.counts;
    cls.wacc_counts = count_confusion(wacc_pred, cls_gold);
    cls.weighted_accuracy = weighted_accuracy(wacc_pred, cls_gold);
    if (e < kNoEmotionIndex) {
      f1_sum += cls.f1;
      if (cls.weighted_accuracy)
        wacc_sum += *cls.weighted_accuracy;
      else
        wacc_all_defined = false;
    }
  }

  report.six_class_f1 = f1_sum / 6.0;
  if (wacc_all_defined) report.six_class_weighted_accuracy = wacc_sum / 6.0;
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["utterances"] = utterances;
  j["thresholds"] = {{"f1", thresholds.f1}, {"wacc", thresholds.wacc}};
  j["sentiment"] = {
      {"f1", sentiment.f1},
      {"accuracy", sentiment.accuracy},
      {"precision", sentiment.precision},
      {"recall", sentiment.recall},
      {"counts",
       {{"tp", sentiment.counts.tp},
        {"fp", sentiment.counts.fp},
        {"tn", sentiment.counts.tn},
        {"fn", sentiment.counts.fn}}},
  };
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& cls : emotion.classes) {
    nlohmann::ordered_json jc;
    jc["f1"] = cls.f1;
    if (cls.weighted_accuracy)
      jc["weighted_accuracy"] = *cls.weighted_accuracy;
    else
      jc["weighted_accuracy"] = nullptr;
    jc["f1_counts"] = {{"tp", cls.f1_counts.tp},
                       {"fp", cls.f1_counts.fp},
                       {"tn", cls.f1_counts.tn},
                       {"fn", cls.f1_counts.fn}};
    jc["wacc_counts"] = {{"tp", cls.wacc_counts.tp},
                         {"fp", cls.wacc_counts.fp},
                         {"tn", cls.wacc_counts.tn},
                         {"fn", cls.wacc_counts.fn}};
    per_class[cls.label] = std::move(jc);
  }
  j["emotion"] = {
      {"classes", std::move(per_class)},
      {"six_class_f1", emotion.six_class_f1},
      {"six_class_weighted_accuracy",
       emotion.six_class_weighted_accuracy
           ? nlohmann::ordered_json(*emotion.six_class_weighted_accuracy)
           : nlohmann::ordered_json(nullptr)},
      {"empty_prediction_count", emotion.empty_prediction_count},
  };
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  out << "utterances " << utterances << "\n";
  out << "sentiment.f1 " << fmt(sentiment.f1) << "\n";
  out << "sentiment.accuracy " << fmt(sentiment.accuracy) << "\n";
  out << "sentiment.precision " << fmt(sentiment.precision) << "\n";
  out << "sentiment.recall " << fmt(sentiment.recall) << "\n";
  for (const auto& cls : emotion.classes) {
    out << "emotion." << cls.label << ".f1 " << fmt(cls.f1) << "\n";
    out << "emotion." << cls.label << ".weighted_accuracy " << fmt_opt(cls.weighted_accuracy)
        << "\n";
  }
  out << "emotion.six_class_f1 " << fmt(emotion.six_class_f1) << "\n";
  out << "emotion.six_class_weighted_accuracy "
      << fmt_opt(emotion.six_class_weighted_accuracy) << "\n";
  out << "emotion.empty_prediction_count " << emotion.empty_prediction_count << "\n";
  return out.str();
}

}  // namespace mtmm
