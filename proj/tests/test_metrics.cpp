#include <random>

#include "doctest.h"
#include "mtmm/metrics.hpp"
#include "mtmm/rng.hpp"

using namespace mtmm;

namespace {

// Independent recount used as the oracle for every score.
struct Recount {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  Recount(const std::vector<int>& pred, const std::vector<int>& gold) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == 1 && gold[i] == 1) ++tp;
      if (pred[i] == 1 && gold[i] == 0) ++fp;
      if (pred[i] == 0 && gold[i] == 0) ++tn;
      if (pred[i] == 0 && gold[i] == 1) ++fn;
    }
  }
};

std::vector<int> random_bits(std::size_t n, std::mt19937_64& rng, double p = 0.5) {
  std::vector<int> out(n);
  for (auto& b : out) b = uniform01(rng) < p ? 1 : 0;
  return out;
}

}  // namespace

TEST_CASE("perfect prediction scores ones") {
  const std::vector<int> y = {1, 0, 1, 1, 0};
  const BinaryScores s = binary_prf(y, y);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);
  CHECK(s.accuracy == 1.0);
}

TEST_CASE("all-negative prediction against positives zeroes recall and F1") {
  const BinaryScores s = binary_prf({0, 0, 0, 0}, {1, 0, 1, 0});
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK(s.accuracy == 0.5);
}

TEST_CASE("counting oracle TP=2 FP=1 FN=1") {
  const BinaryScores s = binary_prf({1, 1, 1, 0, 0}, {1, 1, 0, 1, 0});
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));
  CHECK(s.recall == doctest::Approx(2.0 / 3.0));
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("binary_prf rejects length mismatch") {
  CHECK_THROWS_AS(binary_prf({1, 0}, {1}), ShapeError);
}

TEST_CASE("weighted accuracy basics") {
  CHECK(*weighted_accuracy({1, 0, 1}, {1, 0, 1}) == 1.0);
  CHECK(*weighted_accuracy({1, 1, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(0.5));
  // TP=3, P=4, TN=1, N=2 -> (0.75 + 0.5)/2
  CHECK(*weighted_accuracy({1, 1, 1, 0, 1, 0}, {1, 1, 1, 1, 0, 0}) == doctest::Approx(0.625));
}

TEST_CASE("weighted accuracy is undefined on single-class gold") {
  CHECK(!weighted_accuracy({1, 0, 1}, {1, 1, 1}).has_value());
  CHECK(!weighted_accuracy({0, 0}, {0, 0}).has_value());
}

TEST_CASE("weighted accuracy is invariant under joint polarity swap") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> pred = random_bits(30, rng);
    std::vector<int> gold = random_bits(30, rng);
    std::vector<int> pred_sw(pred.size()), gold_sw(gold.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred_sw[i] = 1 - pred[i];
      gold_sw[i] = 1 - gold[i];
    }
    const auto a = weighted_accuracy(pred, gold);
    const auto b = weighted_accuracy(pred_sw, gold_sw);
    CHECK(a.has_value() == b.has_value());
    if (a) CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
  }
}

TEST_CASE("scores agree with the recount oracle on random instances") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + bounded(rng, 40);
    const std::vector<int> pred = random_bits(n, rng, uniform_range(rng, 0.2, 0.8));
    const std::vector<int> gold = random_bits(n, rng, uniform_range(rng, 0.2, 0.8));
    const Recount c(pred, gold);
    const BinaryScores s = binary_prf(pred, gold);
    CHECK(s.counts.tp == c.tp);
    CHECK(s.counts.fp == c.fp);
    CHECK(s.counts.tn == c.tn);
    CHECK(s.counts.fn == c.fn);
    const double p = c.tp + c.fp == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fp);
    const double r = c.tp + c.fn == 0 ? 0.0 : double(c.tp) / double(c.tp + c.fn);
    CHECK(s.precision == doctest::Approx(p).epsilon(1e-12));
    CHECK(s.recall == doctest::Approx(r).epsilon(1e-12));
    const double f1 = p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
    CHECK(s.f1 == doctest::Approx(f1).epsilon(1e-12));
    CHECK(s.accuracy == doctest::Approx(double(c.tp + c.tn) / double(n)).epsilon(1e-12));

    const auto wa = weighted_accuracy(pred, gold);
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
      CHECK(!wa.has_value());
    } else {
      const double expect =
          0.5 * (double(c.tp) / double(c.tp + c.fn) + double(c.tn) / double(c.tn + c.fp));
      CHECK(*wa == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("multilabel report with perfect probabilities") {
  std::mt19937_64 rng(23);
  std::vector<std::array<double, kNumEmotions>> probs;
  std::vector<std::array<int, kNumEmotions>> gold;
  for (int i = 0; i < 30; ++i) {
    std::array<int, kNumEmotions> bits{};
    bool any = false;
    for (int e = 0; e < 6; ++e) {
      bits[static_cast<std::size_t>(e)] = uniform01(rng) < 0.4 ? 1 : 0;
      any = any || bits[static_cast<std::size_t>(e)] == 1;
    }
    bits[kNoEmotionIndex] = any ? 0 : 1;
    std::array<double, kNumEmotions> p{};
    for (int e = 0; e < kNumEmotions; ++e) p[static_cast<std::size_t>(e)] = bits[static_cast<std::size_t>(e)];
    probs.push_back(p);
    gold.push_back(bits);
  }
  const EmotionReport rep = multilabel_report(probs, gold, {});
  for (const auto& cls : rep.classes) CHECK(cls.f1 == doctest::Approx(1.0));
  CHECK(rep.six_class_f1 == doctest::Approx(1.0));
}

TEST_CASE("the two-threshold regime splits the 0.3-probability case") {
  // All probabilities at 0.3: below the 0.4 F1 cut, above the 0.2 W-Acc cut.
  std::vector<std::array<double, kNumEmotions>> probs(
      10, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
  std::vector<std::array<int, kNumEmotions>> gold;
  std::mt19937_64 rng(31);
  for (int i = 0; i < 10; ++i) {
    std::array<int, kNumEmotions> bits{};
    bits[bounded(rng, 6)] = 1;
    gold.push_back(bits);
  }
  const EmotionReport rep = multilabel_report(probs, gold, {});
  CHECK(rep.empty_prediction_count == 10);
  for (const auto& cls : rep.classes) {
    // F1 labels empty: no predicted positives anywhere.
    CHECK(cls.f1_counts.tp == 0);
    CHECK(cls.f1_counts.fp == 0);
    // W-Acc labels all-on: everything predicted positive.
    CHECK(cls.wacc_counts.tn == 0);
    CHECK(cls.wacc_counts.fn == 0);
  }
}

TEST_CASE("equal thresholds make the two label sets coincide") {
  std::mt19937_64 rng(41);
  std::vector<std::array<double, kNumEmotions>> probs;
  std::vector<std::array<int, kNumEmotions>> gold;
  for (int i = 0; i < 25; ++i) {
    std::array<double, kNumEmotions> p{};
    std::array<int, kNumEmotions> bits{};
    for (int e = 0; e < kNumEmotions; ++e) {
      p[static_cast<std::size_t>(e)] = uniform01(rng);
      bits[static_cast<std::size_t>(e)] = uniform01(rng) < 0.3 ? 1 : 0;
    }
    probs.push_back(p);
    gold.push_back(bits);
  }
  const EmotionReport rep = multilabel_report(probs, gold, {0.35, 0.35});
  for (const auto& cls : rep.classes) {
    CHECK(cls.f1_counts.tp == cls.wacc_counts.tp);
    CHECK(cls.f1_counts.fp == cls.wacc_counts.fp);
    CHECK(cls.f1_counts.tn == cls.wacc_counts.tn);
    CHECK(cls.f1_counts.fn == cls.wacc_counts.fn);
  }
}

TEST_CASE("multilabel report matches an independent per-class recount") {
  std::mt19937_64 rng(53);
  std::vector<std::array<double, kNumEmotions>> probs;
  std::vector<std::array<int, kNumEmotions>> gold;
  for (int i = 0; i < 20; ++i) {
    std::array<double, kNumEmotions> p{};
    std::array<int, kNumEmotions> bits{};
    for (int e = 0; e < kNumEmotions; ++e) {
      p[static_cast<std::size_t>(e)] = uniform01(rng);
      bits[static_cast<std::size_t>(e)] = uniform01(rng) < 0.5 ? 1 : 0;
    }
    probs.push_back(p);
    gold.push_back(bits);
  }
  const EmotionThresholds th{0.4, 0.2};
  const EmotionReport rep = multilabel_report(probs, gold, th);

  for (int e = 0; e < kNumEmotions; ++e) {
    std::vector<int> f1_pred, wa_pred, g;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      f1_pred.push_back(probs[i][static_cast<std::size_t>(e)] > th.f1 ? 1 : 0);
      wa_pred.push_back(probs[i][static_cast<std::size_t>(e)] > th.wacc ? 1 : 0);
      g.push_back(gold[i][static_cast<std::size_t>(e)]);
    }
    const Recount cf(f1_pred, g);
    const double p = cf.tp + cf.fp == 0 ? 0.0 : double(cf.tp) / double(cf.tp + cf.fp);
    const double r = cf.tp + cf.fn == 0 ? 0.0 : double(cf.tp) / double(cf.tp + cf.fn);
    const double f1 = p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
    CHECK(rep.classes[static_cast<std::size_t>(e)].f1 == doctest::Approx(f1).epsilon(1e-12));

    const Recount cw(wa_pred, g);
    if (cw.tp + cw.fn > 0 && cw.tn + cw.fp > 0) {
      const double expect =
          0.5 * (double(cw.tp) / double(cw.tp + cw.fn) + double(cw.tn) / double(cw.tn + cw.fp));
      CHECK(*rep.classes[static_cast<std::size_t>(e)].weighted_accuracy ==
            doctest::Approx(expect).epsilon(1e-12));
    } else {
      CHECK(!rep.classes[static_cast<std::size_t>(e)].weighted_accuracy.has_value());
    }
  }

  double f1_sum = 0.0;
  for (int e = 0; e < 6; ++e) f1_sum += rep.classes[static_cast<std::size_t>(e)].f1;
  CHECK(rep.six_class_f1 == doctest::Approx(f1_sum / 6.0).epsilon(1e-12));
}

TEST_CASE("report serialization carries the named fields") {
  MetricsReport report;
  report.utterances = 3;
  report.sentiment = binary_prf({1, 0, 1}, {1, 1, 1});
  std::vector<std::array<double, kNumEmotions>> probs(3, {0.9, 0.1, 0.1, 0.5, 0.1, 0.1, 0.1});
  std::vector<std::array<int, kNumEmotions>> gold(3, {1, 0, 0, 1, 0, 0, 0});
  report.emotion = multilabel_report(probs, gold, {});

  const std::string js = report.to_json();
  CHECK(js.find("\"sentiment\"") != std::string::npos);
  CHECK(js.find("\"six_class_f1\"") != std::string::npos);
  CHECK(js.find("\"anger\"") != std::string::npos);

  const std::string txt = report.to_text();
  CHECK(txt.find("sentiment.f1 ") != std::string::npos);
  CHECK(txt.find("emotion.anger.f1 ") != std::string::npos);
  CHECK(txt.find("undefined") != std::string::npos);  // single-class wacc propagates
}
