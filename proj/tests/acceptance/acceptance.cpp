// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "riskgraph/attention_net.hpp"
#include "riskgraph/model.hpp"
#include "riskgraph/synth.hpp"
#include "riskgraph/train_eval.hpp"

using namespace riskgraph;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// gradients

struct FdTally {
  std::size_t checked = 0;
  std::size_t bad = 0;
  std::string first_bad;

  void fd(std::span<double> values, std::span<const double> analytic,
          const std::function<double()>& f, const std::string& what, std::size_t stride = 1) {
    const double eps = 1e-5;
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const double keep = values[i];
      values[i] = keep + eps;
      const double up = f();
      values[i] = keep - eps;
      const double down = f();
      values[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      ++checked;
      if (!rgtest::grad_close(analytic[i], numeric)) {
        if (bad++ == 0) {
          first_bad = what + "[" + std::to_string(i) + "] analytic " + fmt(analytic[i], 10) +
                      " numeric " + fmt(numeric, 10);
        }
      }
    }
  }
};

std::vector<std::span<double>> attention_views(AttentionParams& p) {
  return {p.w1.flat(), p.b1, p.w2.flat(), p.b2, p.w3, {&p.b3, 1}, p.w4.flat(), p.b4, p.w5.flat(), p.b5};
}

AttentionParams random_attention(const AttentionConfig& cfg, Rng& rng) {
  auto p = AttentionParams::initialized(cfg, rng);
  for (auto v : {std::span<double>(p.b1), std::span<double>(p.b2), std::span<double>(p.b4),
                 std::span<double>(p.b5)}) {
    for (double& b : v) b = rng.uniform(-0.3, 0.3);
  }
  p.b3 = rng.uniform(-0.3, 0.3);
  return p;
}

ForwardTrace run_attention(const Vector& center, const std::vector<Vector>& nbs,
                           const AttentionParams& p, const AttentionConfig& cfg) {
  NodeState c = encode_node(center, p, cfg);
  std::vector<NodeState> n;
  for (const auto& v : nbs) n.push_back(encode_node(v, p, cfg));
  return forward_from_states(std::move(c), std::move(n), p, cfg);
}

void attention_fd(FdTally& tally, const AttentionConfig& cfg, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  auto p = random_attention(cfg, rng);
  Vector center = rgtest::random_vector(cfg.property_width, rng);
  std::vector<Vector> nbs;
  for (std::size_t i = 0; i < k; ++i) nbs.push_back(rgtest::random_vector(cfg.property_width, rng));
  const std::size_t label = rng.below(cfg.class_count);
  const double weight = 1.3;

  AttentionGradients g(cfg);
  const auto back = backward_user(run_attention(center, nbs, p, cfg), label, weight, p, cfg, g);
  auto f = [&] { return -weight * std::log(run_attention(center, nbs, p, cfg).output.probs[label]); };
  const char* names[] = {"w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4", "w5", "b5"};
  auto pv = attention_views(p);
  auto gv = attention_views(g);
  for (std::size_t t = 0; t < pv.size(); ++t) tally.fd(pv[t], gv[t], f, names[t]);
  tally.fd(center, back.d_center_p, f, "P_u");
  for (std::size_t i = 0; i < back.d_neighbour_p.size(); ++i)
    tally.fd(nbs[i], back.d_neighbour_p[i], f, "P_v" + std::to_string(i));
}

// Every entry of every tensor, except that lstm.w_ih is strided by `w_ih_stride`.
void model_fd(FdTally& tally, Aggregation agg, std::uint64_t seed, std::size_t w_ih_stride) {
  CohortDataset d = rgtest::tiny_cohort(6);
  d.users[1].disorder_flag = true;
  d.edges = {{"u0", "u1"}, {"u0", "u2"}, {"u0", "u3"}, {"u1", "u3"}, {"u4", "u5"}};
  // u0 has three neighbours, u1 shares one of them; u4 and u5 stay outside the batch.
  const auto in = prepare_inputs(d, {});
  Rng rng(seed);
  Model model = Model::initialized({}, 2, 4, 4, agg, true, true, rng);
  for (auto& t : tensors(model)) {
    if (t.dims.size() == 1)
      for (double& b : t.values) b = rng.uniform(-0.3, 0.3);
  }
  const std::vector<std::size_t> batch{0, 1};
  const Vector weights{0.8, 1.3};

  ModelGradients g(model);
  batch_loss_and_gradients(model, in, batch, weights, g);
  auto analytic = g.views();
  auto params = tensors(model);
  ModelGradients scratch(model);
  auto f = [&] {
    scratch.set_zero();
    return batch_loss_and_gradients(model, in, batch, weights, scratch);
  };
  for (std::size_t t = 0; t < params.size(); ++t) {
    tally.fd(params[t].values, analytic[t], f, params[t].name, params[t].name == "lstm.w_ih" ? w_ih_stride : 1);
  }
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  FdTally tally;
  std::uint64_t seed = 100;
  for (std::size_t hidden : {4, 60}) {
    for (auto agg : {Aggregation::sigmoid, Aggregation::elu}) {
      for (std::size_t k = 0; k <= 3; ++k) {
        AttentionConfig cfg;
        cfg.property_width = 6;
        cfg.hidden_width = hidden;
        cfg.class_count = k == 3 ? 5 : 2;
        cfg.aggregation = agg;
        attention_fd(tally, cfg, k, ++seed);
      }
    }
    AttentionConfig cfg;
    cfg.property_width = 6;
    cfg.hidden_width = hidden;
    cfg.property_attention = false;
    attention_fd(tally, cfg, 2, ++seed);
    cfg.property_attention = true;
    cfg.neighbour_attention = false;
    attention_fd(tally, cfg, 2, ++seed);
  }
  model_fd(tally, Aggregation::sigmoid, 7, 1);
  model_fd(tally, Aggregation::elu, 8, 5);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = tally.bad == 0 && secs < 30.0;
  o.detail = std::to_string(tally.checked) + " entries, " + std::to_string(tally.bad) + " outside tolerance, " +
             fmt(secs, 3) + " s";
  if (tally.bad) o.detail += "; first: " + tally.first_bad;
  return o;
}

// ---------------------------------------------------------------------------
// attention normalization

Outcome attention_normalization() {
  Rng rng(2024);
  double worst = 0.0;
  bool positive = true;
  for (int trial = 0; trial < 1000; ++trial) {
    AttentionConfig cfg;
    cfg.property_width = 1 + rng.below(61);
    cfg.hidden_width = 1 + rng.below(60);
    Rng prng = rng.fork(trial);
    const auto p = random_attention(cfg, prng);
    const double scale = rng.uniform(0.1, 20.0);
    std::vector<Vector> nbs;
    const std::size_t k = 1 + rng.below(8);
    for (std::size_t i = 0; i < k; ++i) nbs.push_back(rgtest::random_vector(cfg.property_width, rng, scale));
    const auto t = run_attention(rgtest::random_vector(cfg.property_width, rng, scale), nbs, p, cfg);
    for (const Vector* v : {&t.center.alpha, &t.betas}) {
      worst = std::max(worst, std::abs(std::accumulate(v->begin(), v->end(), 0.0) - 1.0));
      positive = positive && std::all_of(v->begin(), v->end(), [](double x) { return x > 0.0; });
    }
  }
  return {worst <= 1e-9 && positive,
          "max |sum - 1| = " + fmt(worst, 3) + (positive ? ", all weights positive" : ", non-positive weight seen")};
}

// ---------------------------------------------------------------------------
// structural invariants

Outcome structural_invariants() {
  std::vector<std::string> broken;
  Rng rng(77);

  // neighbour permutation
  std::size_t perm_cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    AttentionConfig cfg;
    cfg.property_width = 12;
    cfg.hidden_width = 16;
    cfg.aggregation = trial % 2 ? Aggregation::elu : Aggregation::sigmoid;
    const auto p = random_attention(cfg, rng);
    std::vector<Vector> nbs;
    const std::size_t k = 2 + rng.below(5);
    for (std::size_t i = 0; i < k; ++i) nbs.push_back(rgtest::random_vector(12, rng, 2.0));
    const Vector center = rgtest::random_vector(12, rng, 2.0);
    const auto a = run_attention(center, nbs, p, cfg);
    std::vector<Vector> shuffled = nbs;
    rng.shuffle(shuffled);
    const auto b = run_attention(center, shuffled, p, cfg);
    ++perm_cases;
    if (a.output.probs != b.output.probs) {
      broken.push_back("permutation (trial " + std::to_string(trial) + ")");
      break;
    }
  }

  // 1-hop locality through the whole model
  {
    CohortDataset d = rgtest::tiny_cohort(5);
    d.edges = {{"u0", "u1"}, {"u1", "u2"}, {"u2", "u3"}, {"u4", "u0"}};
    auto in = prepare_inputs(d, {});
    Rng mrng(5);
    const Model m = Model::initialized({}, 2, 6, 8, Aggregation::sigmoid, true, true, mrng);
    const auto before = trace_user(m, in, 0).output.probs;
    for (std::size_t far : {2, 3, 4}) {
      auto changed = in;
      for (double& x : changed.static_properties[far]) x += 5.0;
      changed.sequences[far] = rgtest::random_matrix(changed.sequences[far].rows(), kPostInputWidth, mrng, 3.0);
      if (trace_user(m, changed, 0).output.probs != before)
        broken.push_back("locality (user u" + std::to_string(far) + ")");
    }
    auto near = in;
    for (double& x : near.static_properties[1]) x += 5.0;
    if (trace_user(m, near, 0).output.probs == before) broken.push_back("1-hop neighbour has no effect");
  }

  // softmax shift and argmax invariance. Dyadic inputs keep the shifted
  // arithmetic exact, so the outputs must agree bit for bit.
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    Vector x(n), shifted(n);
    const double c = static_cast<double>(static_cast<int>(rng.below(129)) - 64);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(static_cast<int>(rng.below(65)) - 32) / 8.0;
      shifted[i] = x[i] + c;
    }
    if (softmax(x) != softmax(shifted)) {
      broken.push_back("softmax shift (trial " + std::to_string(trial) + ")");
      break;
    }
  }
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = rgtest::random_vector(5, rng, 4.0);
    const auto s = softmax(x);
    if (std::max_element(s.begin(), s.end()) - s.begin() != std::max_element(x.begin(), x.end()) - x.begin()) {
      broken.push_back("softmax argmax");
      break;
    }
  }

  // one-hot segments
  std::size_t vectors = 0;
  for (const auto& d : {generate_synthetic_cohort(SynthConfig::weibo(300), 3),
                        generate_synthetic_cohort(SynthConfig::reddit(100), 3)}) {
    FeatureConfig fc;
    const auto layout = PropertyLayout::build(fc);
    for (const auto& u : d.users) {
      const auto v = encode_static_properties(u, layout, fc);
      for (const char* seg : {"gender", "location"}) {
        const auto& e = layout.at(seg);
        double sum = 0.0;
        std::size_t ones = 0;
        for (std::size_t i = e.offset; i < e.offset + e.width; ++i) {
          sum += v[i];
          ones += v[i] == 1.0;
        }
        if (sum != 1.0 || ones != 1) broken.push_back(std::string(seg) + " segment of " + u.user_id);
      }
      ++vectors;
    }
  }

  Outcome o;
  o.pass = broken.empty();
  o.detail = std::to_string(perm_cases) + " permutations, locality, 1000 softmax cases, " +
             std::to_string(vectors) + " one-hot vectors";
  if (!broken.empty()) o.detail += "; broken: " + broken.front();
  return o;
}

// ---------------------------------------------------------------------------
// synthetic end-to-end

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  const auto d = generate_synthetic_cohort(SynthConfig::weibo(600), 1);
  TrainConfig c;
  c.epochs = 15;
  const auto kg = evaluate(train(d, c).model, d, Split::test).report;
  auto w = c;
  w.features.without_kg = true;
  const auto wkg = evaluate(train(d, w).model, d, Split::test).report;
  const double secs = seconds_since(t0);
  const double gap = 100.0 * (kg.accuracy - wkg.accuracy);
  Outcome o;
  o.pass = kg.accuracy >= 0.90 && kg.f1 >= 0.90 && gap >= 0.5 && secs < 600.0;
  o.detail = "KG acc " + fmt(kg.accuracy) + " F1 " + fmt(kg.f1) + "; without-KG acc " + fmt(wkg.accuracy) +
             " (gap " + fmt(gap, 3) + " points); " + fmt(secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// information gain

double oracle_entropy(const std::vector<int>& y) {
  std::map<int, double> n;
  for (int v : y) n[v] += 1;
  double h = 0.0;
  for (auto& [_, cnt] : n) {
    const double p = cnt / static_cast<double>(y.size());
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

Outcome information_gain() {
  int recovered = 0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto d = generate_synthetic_cohort(SynthConfig::planted_stress(200), seed);
    const auto r = rank_categories(d);
    if (r.categories.front().category == Category::experience) {
      ++recovered;
    } else {
      misses += " seed " + std::to_string(seed) + " ranked " + std::string(to_string(r.categories.front().category));
    }
  }

  // Every binary (labels, feature) pair up to 10 samples; beyond that every
  // binary feature against fixed three-class label vectors.
  double worst = 0.0;
  std::size_t cases = 0;
  for (int n = 4; n <= 10; ++n) {
    for (unsigned ym = 0; ym < (1u << n); ++ym) {
      const auto y = bits(ym, n);
      for (unsigned fm = 0; fm < (1u << n); ++fm) {
        const auto f = bits(fm, n);
        worst = std::max(worst, std::abs(info_gain(y, f) - oracle_gain(y, f)));
        ++cases;
      }
    }
  }
  Rng rng(9);
  for (int n = 11; n <= 16; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<int> y(n);
      for (int& v : y) v = static_cast<int>(rng.below(3));
      for (unsigned fm = 0; fm < (1u << n); ++fm) {
        const auto f = bits(fm, n);
        worst = std::max(worst, std::abs(info_gain(y, f) - oracle_gain(y, f)));
        ++cases;
      }
    }
  }
  Outcome o;
  o.pass = recovered == 10 && worst <= 1e-12;
  o.detail = "experience ranked first in " + std::to_string(recovered) + "/10 seeds" + misses + "; " +
             std::to_string(cases) + " oracle cases, max deviation " + fmt(worst, 3);
  return o;
}

// ---------------------------------------------------------------------------
// feature knockout

Outcome feature_knockout_trend() {
  auto sc = SynthConfig::weibo(600);
  sc.split_fractions = {0.5, 0.1, 0.4};
  const auto d = generate_synthetic_cohort(sc, 1);
  const auto ranking = rank_categories(d);
  TrainConfig c;
  c.epochs = 30;
  c.lstm_hidden = 64;
  c.learning_rate = 3e-3;
  std::vector<double> acc;
  std::string detail;
  for (std::size_t x : {0, 1, 3, 5, 10}) {
    acc.push_back(feature_knockout(d, c, x, ranking).test.report.accuracy);
    detail += (detail.empty() ? "" : ", ") + std::string("x=") + std::to_string(x) + " " + fmt(acc.back());
  }
  bool ok = true;
  for (std::size_t i = 1; i < acc.size(); ++i) ok = ok && acc[i] <= acc[i - 1] + 0.02;
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// metrics

Outcome metrics_oracle() {
  Rng rng(31);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = trial % 2 ? 2 : 2 + rng.below(4);
    ConfusionMatrix cm(k);
    std::vector<std::vector<double>> cells(k, std::vector<double>(k));
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t p = 0; p < k; ++p) {
        cells[t][p] = static_cast<double>(rng.below(9));
        cm.add(t, p, static_cast<std::int64_t>(cells[t][p]));
      }
    }
    double total = 0, diag = 0;
    std::vector<double> prec(k), rec(k), f1(k);
    for (std::size_t c = 0; c < k; ++c) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < k; ++j) {
        row += cells[c][j];
        col += cells[j][c];
        total += cells[c][j];
      }
      diag += cells[c][c];
      prec[c] = col > 0 ? cells[c][c] / col : 0.0;
      rec[c] = row > 0 ? cells[c][c] / row : 0.0;
      f1[c] = prec[c] + rec[c] > 0 ? 2 * prec[c] * rec[c] / (prec[c] + rec[c]) : 0.0;
    }
    if (total == 0) continue;
    const double mean_f1 = std::accumulate(f1.begin(), f1.end(), 0.0) / k;
    const auto r = compute_metrics(cm);
    bool same = r.accuracy == diag / total && r.macro_f1 == mean_f1;
    if (k == 2) {
      same = same && r.precision == prec[1] && r.recall == rec[1] && r.f1 == f1[1];
    } else {
      same = same && r.precision == std::accumulate(prec.begin(), prec.end(), 0.0) / k &&
             r.recall == std::accumulate(rec.begin(), rec.end(), 0.0) / k && r.f1 == mean_f1;
    }
    mismatches += !same;
  }
  return {mismatches == 0, "50 matrices, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  rgtest::TempDir dir("acceptance-determinism");
  std::vector<std::string> models, metrics;
  for (int run = 0; run < 2; ++run) {
    const auto root = dir.path() / ("run" + std::to_string(run));
    save_cohort(generate_synthetic_cohort(SynthConfig::weibo(80), 11), root / "data");
    const auto data = load_cohort(root / "data");
    TrainConfig c;
    c.epochs = 3;
    c.lstm_hidden = 16;
    c.attention_hidden = 16;
    c.seed = 11;
    save_model(train(data, c).model, root / "model.bin");
    const auto model = load_model(root / "model.bin");
    const auto ev = evaluate(model, data, Split::test);
    std::ofstream(root / "metrics.txt") << format_report(ev.report, ev.confusion);
    models.push_back(slurp(root / "model.bin"));
    metrics.push_back(slurp(root / "metrics.txt"));
  }
  const bool same = models[0] == models[1] && metrics[0] == metrics[1] && !models[0].empty();
  return {same, "model " + std::to_string(models[0].size()) + " bytes" +
                    (models[0] == models[1] ? " identical" : " differ") + ", metrics " +
                    (metrics[0] == metrics[1] ? "identical" : "differ")};
}

// ---------------------------------------------------------------------------
// reddit mode

Outcome reddit_mode() {
  const auto d = generate_synthetic_cohort(SynthConfig::reddit(500), 1);
  TrainConfig c;
  c.epochs = 10;
  c.class_count = 5;
  c.disable_neighbour_attention = true;
  c.features.disabled_categories = {Category::personal_information, Category::social_interaction};
  const auto model = train(d, c).model;
  const auto ev = evaluate(model, d, Split::test).report;
  const bool shape = model.attention.class_count == 5 && !model.attention.neighbour_attention &&
                     model.layout.total_width() == 45;
  return {shape && ev.accuracy > 0.30,
          "width " + std::to_string(model.layout.total_width()) + ", 5 classes, test acc " + fmt(ev.accuracy) +
              " macro-F1 " + fmt(ev.macro_f1)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_check},
      {"attention normalization", attention_normalization},
      {"structural invariants", structural_invariants},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"information gain", information_gain},
      {"feature knockout", feature_knockout_trend},
      {"metrics oracle", metrics_oracle},
      {"determinism", determinism},
      {"reddit mode", reddit_mode},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
