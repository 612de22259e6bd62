#include <doctest.h>

#include "fixtures.hpp"
#include "riskgraph/train_eval.hpp"

using namespace riskgraph;

namespace {

struct Oracle {
  double accuracy, precision, recall, f1, macro_f1;
};

// Straight from (truth, predicted) pairs, without the ConfusionMatrix class.
Oracle oracle(const std::vector<std::pair<int, int>>& pairs, int classes) {
  std::vector<double> p(classes), r(classes), f(classes);
  int correct = 0;
  for (auto [t, q] : pairs) correct += t == q;
  for (int c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (auto [t, q] : pairs) {
      tp += t == c && q == c;
      fp += t != c && q == c;
      fn += t == c && q != c;
    }
    p[c] = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    r[c] = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    f[c] = p[c] + r[c] > 0 ? 2.0 * p[c] * r[c] / (p[c] + r[c]) : 0.0;
  }
  double mp = 0, mr = 0, mf = 0;
  for (int c = 0; c < classes; ++c) {
    mp += p[c];
    mr += r[c];
    mf += f[c];
  }
  Oracle o;
  o.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
  o.macro_f1 = mf / classes;
  if (classes == 2) {
    o.precision = p[1];
    o.recall = r[1];
    o.f1 = f[1];
  } else {
    o.precision = mp / classes;
    o.recall = mr / classes;
    o.f1 = o.macro_f1;
  }
  return o;
}

}  // namespace

TEST_CASE("binary metrics from hand-counted cells") {
  ConfusionMatrix cm(2);
  cm.add(1, 1, 2);
  cm.add(0, 1, 1);
  cm.add(0, 0, 2);
  CHECK(cm.tp(1) == 2);
  CHECK(cm.fp(1) == 1);
  CHECK(cm.tn(1) == 2);
  CHECK(cm.fn(1) == 0);
  const auto r = compute_metrics(cm);
  CHECK(r.precision == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.recall == 1.0);
  CHECK(r.accuracy == 0.8);
  CHECK(r.f1 == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("a perfect classifier scores 1 everywhere") {
  ConfusionMatrix cm(2);
  cm.add(1, 1, 50);
  cm.add(0, 0, 50);
  const auto r = compute_metrics(cm);
  CHECK(r.accuracy == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK_FALSE(r.zero_division);
}

TEST_CASE("one predicted class on balanced data") {
  ConfusionMatrix cm(2);
  cm.add(0, 0, 10);
  cm.add(1, 0, 10);
  const auto r = compute_metrics(cm);
  CHECK(r.accuracy == 0.5);
  CHECK(r.precision == 0.0);
  CHECK(r.zero_division);
}

TEST_CASE("randomized matrices match the formulas exactly") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = trial % 2 ? 5 : 2;
    std::vector<std::pair<int, int>> pairs(1 + rng.below(40));
    ConfusionMatrix cm(static_cast<std::size_t>(classes));
    for (auto& [t, q] : pairs) {
      t = static_cast<int>(rng.below(classes));
      q = rng.bernoulli(0.5) ? t : static_cast<int>(rng.below(classes));
      cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(q));
    }
    const auto r = compute_metrics(cm);
    const auto o = oracle(pairs, classes);
    CHECK(r.accuracy == o.accuracy);
    CHECK(r.precision == o.precision);
    CHECK(r.recall == o.recall);
    CHECK(r.f1 == o.f1);
    CHECK(r.macro_f1 == o.macro_f1);
    CHECK(cm.total() == static_cast<std::int64_t>(pairs.size()));
    double mean = 0.0;
    for (double f : r.class_f1) mean += f;
    CHECK(r.macro_f1 == doctest::Approx(mean / classes).epsilon(1e-15));
    for (double v : {r.accuracy, r.precision, r.recall, r.f1, r.macro_f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("harmonic mean when both parts are non-zero") {
  ConfusionMatrix cm(2);
  cm.add(1, 1, 3);
  cm.add(1, 0, 2);
  cm.add(0, 1, 4);
  cm.add(0, 0, 6);
  const auto r = compute_metrics(cm);
  CHECK(r.f1 == doctest::Approx(2 * r.precision * r.recall / (r.precision + r.recall)).epsilon(1e-15));
}

TEST_CASE("report text") {
  ConfusionMatrix bin(2);
  bin.add(1, 1, 2);
  bin.add(0, 0, 1);
  const auto text = format_report(compute_metrics(bin), bin);
  CHECK(text.find("accuracy = 1\n") != std::string::npos);
  CHECK(text.find("confusion.1.1 = 2\n") != std::string::npos);
  CHECK(text.find("macro_") == std::string::npos);

  ConfusionMatrix five(5);
  five.add(3, 3);
  const auto t5 = format_report(compute_metrics(five), five);
  CHECK(t5.find("macro_precision = ") != std::string::npos);
  CHECK(t5.find("macro_f1 = ") != std::string::npos);
  CHECK(t5.find("confusion.4.4 = 0\n") != std::string::npos);
}

TEST_CASE("confusion matrix rejects out-of-range classes") {
  ConfusionMatrix cm(2);
  CHECK_THROWS_AS(cm.add(2, 0), UsageError);
  CHECK_THROWS_AS(cm.add(0, 0, -1), UsageError);
}
