#include <doctest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "riskgraph/synth.hpp"
#include "riskgraph/train_eval.hpp"

using namespace riskgraph;

namespace {

// Independent oracle: entropy from explicit count tables, natural log converted to bits.
double oracle_entropy(const std::vector<int>& y) {
  std::map<int, double> n;
  for (int v : y) n[v] += 1;
  double h = 0.0;
  for (auto& [_, c] : n) {
    const double p = c / static_cast<double>(y.size());
    h -= p * std::log(p) / std::log(2.0);
  }
  return h;
}

double oracle_gain(const std::vector<int>& y, const std::vector<int>& f) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < y.size(); ++i) groups[f[i]].push_back(y[i]);
  double cond = 0.0;
  for (auto& [_, g] : groups) cond += static_cast<double>(g.size()) / y.size() * oracle_entropy(g);
  return oracle_entropy(y) - cond;
}

std::vector<int> bits(unsigned mask, int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1;
  return v;
}

}  // namespace

TEST_CASE("worked example") {
  const std::vector<int> y{1, 1, 0, 0}, f{0, 0, 0, 1};
  const double h13 = -(1.0 / 3) * std::log2(1.0 / 3) - (2.0 / 3) * std::log2(2.0 / 3);
  CHECK(info_gain(y, f) == doctest::Approx(1.0 - 0.75 * h13).epsilon(1e-14));
  CHECK(info_gain(y, f) == doctest::Approx(0.3113).epsilon(1e-4));
}

TEST_CASE("limiting cases") {
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  CHECK(info_gain(y, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(info_gain(y, std::vector<int>(6, 7)) == 0.0);
  CHECK_THROWS_AS(info_gain(std::vector<int>{}, std::vector<int>{}), UsageError);
  CHECK_THROWS_AS(info_gain(y, std::vector<int>{1, 2}), UsageError);
  CHECK_THROWS_AS(entropy(std::vector<int>{}), UsageError);
}

TEST_CASE("exhaustive small cases agree with the oracle") {
  for (int n = 4; n <= 7; ++n) {
    for (unsigned ym = 0; ym < (1u << n); ++ym) {
      const auto y = bits(ym, n);
      for (unsigned fm = 0; fm < (1u << n); ++fm) {
        const auto f = bits(fm, n);
        const double g = info_gain(y, f);
        REQUIRE(std::abs(g - oracle_gain(y, f)) <= 1e-12);
        REQUIRE(g >= 0.0);
        REQUIRE(g <= entropy(y) + 1e-12);
      }
    }
  }
}

TEST_CASE("relabeling feature classes leaves the gain unchanged") {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> y(12), f(12), g(12);
    for (int i = 0; i < 12; ++i) {
      y[i] = static_cast<int>(rng.below(3));
      f[i] = static_cast<int>(rng.below(4));
      g[i] = 10 - 3 * f[i];
    }
    CHECK(info_gain(y, f) == doctest::Approx(info_gain(y, g)).epsilon(1e-14));
  }
}

TEST_CASE("discretization rules") {
  CHECK(discretize_feature(Vector{1, 2, 3, 4}, DiscretizeKind::mean_split) == std::vector<int>{0, 0, 1, 1});
  CHECK(discretize_feature(Vector{2, 2}, DiscretizeKind::mean_split) == std::vector<int>{1, 1});
  CHECK(discretize_feature(Vector{0.0, -0.3, 0.3, -0.29, 0.9}, DiscretizeKind::text_polarity) ==
        std::vector<int>{1, 0, 2, 1, 2});
  CHECK(discretize_feature(Vector{0.6, 0.4, 0.5, 0.1}, DiscretizeKind::image_bw, Vector{0.4, 0.7, 0.5, 0.1}) ==
        std::vector<int>{2, 1, 3, 0});
  CHECK(discretize_feature(Vector{3, 1, 3}, DiscretizeKind::categorical) == std::vector<int>{3, 1, 3});
  CHECK_THROWS_AS(discretize_feature(Vector{}, DiscretizeKind::mean_split), UsageError);
  CHECK_THROWS_AS(discretize_feature(Vector{0.5}, DiscretizeKind::image_bw), UsageError);
}

TEST_CASE("catalog has 23 properties over the six categories") {
  const auto& cat = property_catalog();
  CHECK(cat.size() == 23);
  std::map<Category, int> per;
  for (const auto& p : cat) ++per[p.category];
  CHECK(per.size() == 6);
  CHECK(per[Category::experience] == 5);
  CHECK(per[Category::post_behavior] == 3);
}

TEST_CASE("planted stress signal ranks experience first") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = generate_synthetic_cohort(SynthConfig::planted_stress(200), seed);
    const auto r = rank_categories(d);
    CHECK(r.categories.front().category == Category::experience);
    CHECK(r.properties.front().category == Category::experience);
    for (std::size_t i = 1; i < r.categories.size(); ++i)
      CHECK(r.categories[i - 1].mean_gain >= r.categories[i].mean_gain);
    for (std::size_t i = 1; i < r.properties.size(); ++i)
      CHECK(r.properties[i - 1].gain >= r.properties[i].gain);
  }
}

TEST_CASE("identical users carry no information") {
  CohortDataset d;
  for (int i = 0; i < 10; ++i) {
    auto u = rgtest::make_user("c" + std::to_string(i), 0, i % 2);
    u.posts = {rgtest::make_post(u.user_id, 0, 1'600'000'000)};
    u.posts[0].text_embedding = pseudo_embed("same", kTextWidth);
    d.split[u.user_id] = Split::train;
    d.users.push_back(u);
  }
  const auto r = rank_categories(d);
  for (const auto& p : r.properties) CHECK(p.gain == 0.0);
  for (const auto& c : r.categories) CHECK(c.mean_gain == 0.0);
}

TEST_CASE("csv output is stable") {
  const auto d = generate_synthetic_cohort(SynthConfig::weibo(80), 2);
  const auto a = info_gain_csv(rank_categories(d));
  CHECK(a == info_gain_csv(rank_categories(d)));
  CHECK(a.rfind("level,name,category,info_gain\n", 0) == 0);
  CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 6 + 23);
}

TEST_CASE("model predictions can replace labels") {
  const auto d = generate_synthetic_cohort(SynthConfig::weibo(60), 3);
  TrainConfig c;
  c.epochs = 0;
  c.lstm_hidden = 4;
  c.attention_hidden = 8;
  const auto model = train(d, c).model;
  const auto r = rank_categories(d, &model);
  CHECK(r.properties.size() == 23);
}

TEST_CASE("knockout") {
  const auto d = generate_synthetic_cohort(SynthConfig::weibo(60), 4);
  TrainConfig c;
  c.epochs = 2;
  c.lstm_hidden = 4;
  c.attention_hidden = 8;
  const auto ranking = rank_categories(d);
  CHECK_THROWS_AS(feature_knockout(d, c, 23, ranking), UsageError);

  const auto none = feature_knockout(d, c, 0, ranking);
  const auto baseline = evaluate(train(d, c).model, d, Split::test);
  CHECK(none.removed.empty());
  CHECK(none.test.confusion == baseline.confusion);

  const auto three = feature_knockout(d, c, 3, ranking);
  CHECK(three.removed.size() == 3);
  CHECK(three.removed[0] == ranking.properties[0].name);
}
