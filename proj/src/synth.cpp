#include "riskgraph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "riskgraph/random.hpp"

namespace riskgraph {

namespace {

namespace ln = lexicon_names;

const std::vector<std::string_view> kRateLexicons{ln::suicide,      ln::last_words, ln::future,
                                                  ln::negation,     ln::self_concern,
                                                  ln::others_concern, ln::perfection, ln::ruminant};
const std::vector<std::string_view> kEmotionLexicons{ln::love, ln::joy, ln::anxiety, ln::sorrow};

ClassProfile weibo_ordinary() {
  ClassProfile p;
  p.name = "ordinary";
  p.gender_mix = {0.423, 0.506, 0.071};
  p.age_mean = 28.3;
  p.location_mix = {0.250, 0.150, 0.157, 0.058, 0.029, 0.079, 0.053, 0.223};
  p.stress_periods_mean = 1.8;
  p.strong_stress_rate = 0.35;
  p.interpersonal_mean = 1.0;
  p.disorder_rate = 0.0003;
  p.attempt_rate = 0.001;
  p.posts_mean = 5.0;
  p.image_rate = 260667.0 / 491130.0;
  p.lexicon_token_rates = {{"perfection", 0.0017},   {"ruminant", 0.00052},
                           {"suicide", 0.00016},     {"last_words", 0.00000023},
                           {"future", 0.00045},      {"negation", 0.00009},
                           {"self_concern", 0.00029}, {"others_concern", 0.0004}};
  p.emotion_post_rates = {{"love", 0.2}, {"joy", 0.25}, {"anxiety", 0.04}, {"sorrow", 0.04}};
  p.following_mean = 378.1;
  p.follower_mean = 1515.3;
  p.interact_mean = 10.9;
  p.neighbours_mean = 5.1;
  // Weak enough that post content alone stays clearly below the full graph model.
  p.text_signal = 0.045;
  p.image_signal = 0.045;
  p.polarity_mean = 0.15;
  p.brightness_mean = 0.58;
  p.warmth_mean = 0.55;
  p.late_night_rate = 0.12;
  return p;
}

ClassProfile weibo_suicidal() {
  ClassProfile p = weibo_ordinary();
  p.name = "suicidal";
  p.gender_mix = {0.785, 0.213, 0.002};
  p.age_mean = 25.8;
  p.location_mix = {0.188, 0.105, 0.074, 0.066, 0.030, 0.070, 0.033, 0.435};
  p.stress_periods_mean = 2.1;
  p.strong_stress_rate = 0.6;
  p.interpersonal_mean = 1.3;
  p.disorder_rate = 0.001;
  p.attempt_rate = 0.035;
  p.posts_mean = 4.0;
  p.image_rate = 93461.0 / 252901.0;
  p.lexicon_token_rates = {{"perfection", 0.0025},   {"ruminant", 0.00086},
                           {"suicide", 0.00034},     {"last_words", 0.000013},
                           {"future", 0.00031},      {"negation", 0.00012},
                           {"self_concern", 0.00079}, {"others_concern", 0.0003}};
  p.emotion_post_rates = {{"love", 0.2}, {"joy", 0.04}, {"anxiety", 0.2}, {"sorrow", 0.2}};
  p.following_mean = 207.0;
  p.follower_mean = 566.9;
  p.interact_mean = 3.4;
  p.neighbours_mean = 4.3;
  p.polarity_mean = -0.25;
  p.brightness_mean = 0.42;
  p.warmth_mean = 0.45;
  p.late_night_rate = 0.35;
  return p;
}

// Snap to a 1e-6 grid so the shortest round-trip decimal stays short on disk.
double quantize(double v) { return std::round(v * 1e6) / 1e6; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Vector mix_embedding(const Vector& centroid, double signal, const Vector& noise, double noise_w) {
  Vector out(centroid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = quantize(signal * centroid[i] + noise_w * noise[i]);
  }
  return out;
}

std::string lexicon_word(std::string_view lexicon, std::size_t i) {
  return std::string(lexicon) + "_" + std::to_string(i);
}

std::vector<Lexicon> make_lexicons(std::size_t words) {
  std::vector<std::string_view> names = kRateLexicons;
  names.insert(names.end(), kEmotionLexicons.begin(), kEmotionLexicons.end());
  std::sort(names.begin(), names.end());
  std::vector<Lexicon> out;
  for (auto name : names) {
    std::map<std::string, double> entries;
    for (std::size_t i = 0; i < words; ++i) {
      // suicide words carry binding weights 1..3
      entries[lexicon_word(name, i)] = name == ln::suicide ? static_cast<double>(i % 3 + 1) : 1.0;
    }
    out.emplace_back(std::string(name), std::move(entries));
  }
  return out;
}

std::string make_text(const ClassProfile& cls, std::size_t words, Rng& rng) {
  const int n_tokens = static_cast<int>(std::max<std::int64_t>(3, rng.poisson(cls.tokens_mean)));
  std::vector<std::string> tokens;
  for (auto name : kRateLexicons) {
    auto it = cls.lexicon_token_rates.find(std::string(name));
    const double rate = it == cls.lexicon_token_rates.end() ? 0.0 : it->second;
    const int hits = rate > 0.0 ? rng.binomial(n_tokens, rate) : 0;
    for (int h = 0; h < hits; ++h) tokens.push_back(lexicon_word(name, rng.below(words)));
  }
  for (auto name : kEmotionLexicons) {
    auto it = cls.emotion_post_rates.find(std::string(name));
    if (it != cls.emotion_post_rates.end() && rng.bernoulli(it->second)) {
      tokens.push_back(lexicon_word(name, rng.below(words)));
    }
  }
  while (static_cast<int>(tokens.size()) < n_tokens) {
    tokens.push_back("w" + std::to_string(rng.below(5000)));
  }
  rng.shuffle(tokens);
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) text += ' ';
    text += tokens[i];
  }
  return text;
}

void validate_config(const SynthConfig& config) {
  if (config.classes.size() < 2) throw ConfigError("synthetic cohort needs at least two classes");
  double total = 0.0;
  for (const auto& c : config.classes) {
    if (c.fraction <= 0.0) throw ConfigError("class '" + c.name + "' has non-positive fraction");
    if (c.interpersonal_mean > c.stress_periods_mean + 1e-12) {
      throw ConfigError("class '" + c.name + "': interpersonal_mean exceeds stress_periods_mean");
    }
    total += c.fraction;
  }
  if (total <= 0.0) throw ConfigError("class fractions sum to zero");
  for (double f : config.split_fractions) {
    if (f < 0.0) throw ConfigError("negative split fraction");
  }
}

}  // namespace

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& fractions) {
  const double sum = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = static_cast<double>(total) * fractions[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

SynthConfig SynthConfig::weibo(std::size_t users, double balance) {
  if (!(balance > 0.0 && balance < 1.0)) throw ConfigError("balance must lie in (0, 1)");
  SynthConfig c;
  c.profile = "weibo";
  c.users = users;
  c.classes = {weibo_ordinary(), weibo_suicidal()};
  c.classes[0].fraction = 1.0 - balance;
  c.classes[1].fraction = balance;
  return c;
}

SynthConfig SynthConfig::reddit(std::size_t users) {
  SynthConfig c;
  c.profile = "reddit";
  c.users = users;
  c.split_fractions = {303.0 / 500.0, 99.0 / 500.0, 98.0 / 500.0};
  c.homophily = 0.0;
  const std::array<const char*, 5> names{"supportive", "indicator", "ideation", "behavior",
                                         "attempt"};
  const std::array<double, 5> counts{108, 99, 171, 77, 45};
  for (std::size_t k = 0; k < 5; ++k) {
    ClassProfile p = weibo_ordinary();
    const double risk = static_cast<double>(k);
    p.name = names[k];
    p.fraction = counts[k];
    p.neighbours_mean = 0.0;
    p.posts_mean = 6.0;
    p.image_rate = 0.1;
    p.tokens_mean = 60.0;
    p.stress_periods_mean = 0.8 + 0.5 * risk;
    p.interpersonal_mean = p.stress_periods_mean / 4.0;
    p.strong_stress_rate = 0.2 + 0.15 * risk;
    p.attempt_rate = k == 4 ? 0.3 : 0.01;
    p.lexicon_token_rates["suicide"] = 0.002 * (1.0 + risk);
    p.lexicon_token_rates["ruminant"] = 0.001 * (1.0 + risk);
    p.lexicon_token_rates["future"] = 0.003 * (5.0 - risk) / 5.0;
    p.polarity_mean = 0.4 - 0.2 * risk;
    p.text_signal = 0.35;
    p.image_signal = 0.0;
    c.classes.push_back(p);
  }
  return c;
}

SynthConfig SynthConfig::planted_stress(std::size_t users) {
  SynthConfig c;
  c.profile = "planted_stress";
  c.users = users;
  c.homophily = 0.5;
  ClassProfile low = weibo_ordinary();
  low.text_signal = 0.0;
  low.image_signal = 0.0;
  low.stress_periods_mean = 1.0;
  low.strong_stress_rate = 0.2;
  low.interpersonal_mean = low.stress_periods_mean / 6.0;
  ClassProfile high = low;
  low.name = "ordinary";
  high.name = "suicidal";
  high.stress_periods_mean = 4.0;
  high.strong_stress_rate = 0.8;
  high.interpersonal_mean = high.stress_periods_mean / 6.0;
  c.classes = {low, high};
  return c;
}

CohortDataset generate_synthetic_cohort(const SynthConfig& config, std::uint64_t seed) {
  validate_config(config);
  std::vector<double> fractions;
  for (const auto& c : config.classes) fractions.push_back(c.fraction);
  const auto class_sizes = apportion(config.users, fractions);
  for (std::size_t k = 0; k < class_sizes.size(); ++k) {
    if (class_sizes[k] < 2) {
      throw ConfigError("class '" + config.classes[k].name + "' would have " +
                        std::to_string(class_sizes[k]) + " users; at least 2 required");
    }
  }

  Rng rng(seed);
  Rng label_rng = rng.fork(1);
  Rng edge_rng = rng.fork(2);
  Rng split_rng = rng.fork(3);
  const std::uint64_t user_salt = rng.next();

  CohortDataset data;
  data.lexicons = make_lexicons(config.lexicon_words);

  std::vector<int> labels;
  for (std::size_t k = 0; k < class_sizes.size(); ++k) {
    labels.insert(labels.end(), class_sizes[k], static_cast<int>(k));
  }
  label_rng.shuffle(labels);

  std::vector<Vector> text_centroids, image_centroids;
  for (std::size_t k = 0; k < config.classes.size(); ++k) {
    text_centroids.push_back(pseudo_embed("centroid/text/" + std::to_string(k), kTextWidth));
    image_centroids.push_back(pseudo_embed("centroid/image/" + std::to_string(k), kImageWidth));
  }

  const std::string seed_tag = std::to_string(seed);
  const std::size_t id_width = std::to_string(config.users).size();
  for (std::size_t idx = 0; idx < config.users; ++idx) {
    std::string id = std::to_string(idx);
    id = "u" + std::string(id_width - id.size(), '0') + id;
    const int label = labels[idx];
    const ClassProfile& cls = config.classes[static_cast<std::size_t>(label)];
    Rng urng(user_salt ^ (0x9e3779b97f4a7c15ULL * (idx + 1)));

    UserRecord u;
    u.user_id = id;
    u.label = label;
    u.gender = static_cast<Gender>(urng.categorical(cls.gender_mix));
    if (!urng.bernoulli(cls.unknown_age_rate)) {
      u.age_years = static_cast<int>(std::clamp(std::lround(urng.normal(cls.age_mean, cls.age_sd)),
                                                13L, 65L));
    }
    u.location = static_cast<Location>(urng.categorical(cls.location_mix));

    const std::int64_t n_stress = urng.poisson(cls.stress_periods_mean);
    const double p_interpersonal =
        cls.stress_periods_mean > 0.0 ? cls.interpersonal_mean / cls.stress_periods_mean : 0.0;
    for (std::int64_t s = 0; s < n_stress; ++s) {
      StressPeriod period;
      const int start = static_cast<int>(urng.below(kSynthDays - 30));
      const int length = 6 + static_cast<int>(urng.below(25));
      const std::chrono::sys_days first{std::chrono::days{kSynthEpochStart / 86400}};
      period.start_day = first + std::chrono::days{start};
      period.end_day = period.start_day + std::chrono::days{length};
      period.level = urng.bernoulli(cls.strong_stress_rate) ? 2 : 1;
      if (urng.bernoulli(p_interpersonal)) {
        period.category = StressCategory::interpersonal_relation;
      } else {
        static constexpr std::array<StressCategory, 5> others{
            StressCategory::study, StressCategory::work, StressCategory::family,
            StressCategory::romantic_relation, StressCategory::self_cognition};
        period.category = others[urng.below(others.size())];
      }
      u.stress_periods.push_back(period);
    }
    u.disorder_flag = urng.bernoulli(cls.disorder_rate);
    u.attempt_flag = urng.bernoulli(cls.attempt_rate);
    u.following_count = urng.negative_binomial(cls.following_mean, 2.0);
    u.follower_count = urng.negative_binomial(cls.follower_mean, 2.0);
    u.interact_count = urng.negative_binomial(cls.interact_mean, 2.0);

    const std::int64_t n_posts = 1 + urng.poisson(std::max(0.0, cls.posts_mean - 1.0));
    std::vector<std::int64_t> times;
    for (std::int64_t p = 0; p < n_posts; ++p) {
      const std::int64_t day = static_cast<std::int64_t>(urng.below(kSynthDays));
      const std::int64_t hour = urng.bernoulli(cls.late_night_rate)
                                    ? static_cast<std::int64_t>(urng.below(6))
                                    : 6 + static_cast<std::int64_t>(urng.below(18));
      times.push_back(kSynthEpochStart + day * 86400 + hour * 3600 +
                      static_cast<std::int64_t>(urng.below(3600)));
    }
    std::sort(times.begin(), times.end());
    for (std::int64_t p = 0; p < n_posts; ++p) {
      PostRecord post;
      post.post_id = id + "-p" + std::to_string(p);
      post.user_id = id;
      post.timestamp = times[static_cast<std::size_t>(p)];
      post.hour = static_cast<int>((post.timestamp % 86400) / 3600);
      const std::string key = seed_tag + "/" + post.post_id;
      post.text_embedding = mix_embedding(text_centroids[static_cast<std::size_t>(label)],
                                          cls.text_signal, pseudo_embed("text/" + key, kTextWidth),
                                          config.embedding_noise);
      if (urng.bernoulli(cls.image_rate)) {
        post.image_embedding =
            mix_embedding(image_centroids[static_cast<std::size_t>(label)], cls.image_signal,
                          pseudo_embed("image/" + key, kImageWidth), config.embedding_noise);
        post.image_brightness = quantize(clamp01(urng.normal(cls.brightness_mean, 0.15)));
        post.image_warmth = quantize(clamp01(urng.normal(cls.warmth_mean, 0.15)));
      }
      const double polarity = cls.polarity_mean + 0.3 * pseudo_polarity("polarity/" + key);
      post.sentiment_polarity = quantize(std::clamp(polarity, -1.0, 1.0));
      post.text = make_text(cls, config.lexicon_words, urng);
      annotate_post(post, data.lexicons);
      u.posts.push_back(std::move(post));
    }
    data.users.push_back(std::move(u));
  }

  // follow edges with class homophily
  std::vector<std::vector<std::size_t>> by_class(config.classes.size());
  for (std::size_t i = 0; i < data.users.size(); ++i) {
    by_class[static_cast<std::size_t>(data.users[i].label)].push_back(i);
  }
  std::set<SocialEdge> edges;
  for (std::size_t i = 0; i < data.users.size(); ++i) {
    const ClassProfile& cls = config.classes[static_cast<std::size_t>(data.users[i].label)];
    const auto k = std::min<std::int64_t>(edge_rng.poisson(cls.neighbours_mean),
                                          static_cast<std::int64_t>(data.users.size()) - 1);
    std::set<std::size_t> chosen;
    for (int attempt = 0; static_cast<std::int64_t>(chosen.size()) < k && attempt < 50 * (k + 1);
         ++attempt) {
      std::size_t j;
      if (edge_rng.bernoulli(config.homophily)) {
        const auto& pool = by_class[static_cast<std::size_t>(data.users[i].label)];
        j = pool[edge_rng.below(pool.size())];
      } else {
        j = edge_rng.below(data.users.size());
      }
      if (j != i) chosen.insert(j);
    }
    for (std::size_t j : chosen) edges.insert({data.users[i].user_id, data.users[j].user_id});
  }
  data.edges.assign(edges.begin(), edges.end());

  // stratified split
  std::vector<double> split_weights(config.split_fractions.begin(), config.split_fractions.end());
  for (auto members : by_class) {
    split_rng.shuffle(members);
    const auto sizes = apportion(members.size(), split_weights);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      for (std::size_t n = 0; n < sizes[s]; ++n, ++pos) {
        data.split[data.users[members[pos]].user_id] = static_cast<Split>(s);
      }
    }
  }
  return data;
}

}  // namespace riskgraph
