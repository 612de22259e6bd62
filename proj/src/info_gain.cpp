#include <algorithm>
#include <cmath>
#include <map>

#include "riskgraph/io_util.hpp"
#include "riskgraph/train_eval.hpp"

namespace riskgraph {

namespace {

double entropy_of_counts(const std::map<int, std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

double late_night_share(const UserRecord& u) {
  if (u.posts.empty()) return 0.0;
  const auto late = std::count_if(u.posts.begin(), u.posts.end(),
                                  [](const PostRecord& p) { return p.hour < 6; });
  return static_cast<double>(late) / static_cast<double>(u.posts.size());
}

}  // namespace

double entropy(std::span<const int> labels) {
  if (labels.empty()) throw UsageError("entropy of an empty label list");
  std::map<int, std::size_t> counts;
  for (int y : labels) ++counts[y];
  return entropy_of_counts(counts, labels.size());
}

double info_gain(std::span<const int> labels, std::span<const int> feature) {
  if (labels.empty()) throw UsageError("info_gain needs at least one sample");
  if (labels.size() != feature.size()) {
    throw UsageError("info_gain: " + std::to_string(labels.size()) + " labels but " +
                     std::to_string(feature.size()) + " feature values");
  }
  std::map<int, std::map<int, std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) ++by_class[feature[i]][labels[i]];
  double conditional = 0.0;
  for (const auto& [_, counts] : by_class) {
    std::size_t n = 0;
    for (const auto& [__, c] : counts) n += c;
    conditional += static_cast<double>(n) / static_cast<double>(labels.size()) *
                   entropy_of_counts(counts, n);
  }
  return std::max(0.0, entropy(labels) - conditional);
}

std::vector<int> discretize_feature(std::span<const double> values, DiscretizeKind kind,
                                    std::span<const double> secondary) {
  if (values.empty()) throw UsageError("discretize_feature: no values");
  std::vector<int> out(values.size());
  switch (kind) {
    case DiscretizeKind::mean_split: {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] < mean ? 0 : 1;
      break;
    }
    case DiscretizeKind::categorical:
      for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<int>(std::lround(values[i]));
      break;
    case DiscretizeKind::text_polarity:
      for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = values[i] <= -0.3 ? 0 : (values[i] >= 0.3 ? 2 : 1);
      }
      break;
    case DiscretizeKind::image_bw:
      if (secondary.size() != values.size()) {
        throw UsageError("image_bw needs one warmth value per brightness value");
      }
      for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] >= 0.5 ? 2 : 0) + (secondary[i] >= 0.5 ? 1 : 0);
      }
      break;
  }
  return out;
}

const std::vector<PropertySpec>& property_catalog() {
  using C = Category;
  using K = DiscretizeKind;
  static const std::vector<PropertySpec> catalog{
      {"gender", C::personal_information, K::categorical},
      {"age", C::personal_information, K::mean_split},
      {"location", C::personal_information, K::categorical},
      {"perfect", C::personality, K::mean_split},
      {"ruminant", C::personality, K::mean_split},
      {"sensitive", C::personality, K::mean_split},
      {"stress_num", C::experience, K::mean_split},
      {"stress_level", C::experience, K::mean_split},
      {"stress_categories", C::experience, K::mean_split},
      {"disorder", C::experience, K::categorical},
      {"attempt", C::experience, K::categorical},
      {"texts", C::post_behavior, K::text_polarity},
      {"images", C::post_behavior, K::image_bw},
      {"post_time", C::post_behavior, K::mean_split},
      {"suicide_prop", C::emotion_expression, K::mean_split},
      {"last_word_prop", C::emotion_expression, K::mean_split},
      {"future_prop", C::emotion_expression, K::mean_split},
      {"negation_prop", C::emotion_expression, K::mean_split},
      {"self_prop", C::emotion_expression, K::mean_split},
      {"emotion_transition", C::emotion_expression, K::categorical},
      {"following", C::social_interaction, K::mean_split},
      {"follower", C::social_interaction, K::mean_split},
      {"interact", C::social_interaction, K::mean_split},
  };
  return catalog;
}

std::vector<int> property_classes(const CohortDataset& dataset, const PropertySpec& spec) {
  const auto& name = spec.name;
  std::vector<double> values, warmth;
  values.reserve(dataset.users.size());
  for (const auto& u : dataset.users) {
    double v = 0.0;
    if (name == "gender") {
      v = static_cast<double>(u.gender);
    } else if (name == "age") {
      v = encode_age(u.age_years);
    } else if (name == "location") {
      v = static_cast<double>(u.location);
    } else if (name == "perfect" || name == "ruminant" || name == "sensitive") {
      const auto p = encode_personality(u);
      v = name == "perfect" ? p.perfect : (name == "ruminant" ? p.ruminant : p.sensitive);
    } else if (name == "stress_num" || name == "stress_level" || name == "stress_categories") {
      const auto s = encode_stress(u.stress_periods);
      v = name == "stress_num" ? s.count
                               : (name == "stress_level" ? s.mean_level : s.distinct_categories);
    } else if (name == "disorder") {
      v = u.disorder_flag ? 1.0 : 0.0;
    } else if (name == "attempt") {
      v = u.attempt_flag ? 1.0 : 0.0;
    } else if (name == "texts") {
      for (const auto& p : u.posts) v += p.sentiment_polarity;
      if (!u.posts.empty()) v /= static_cast<double>(u.posts.size());
    } else if (name == "images") {
      double b = 0.0, w = 0.0;
      std::size_t n = 0;
      for (const auto& p : u.posts) {
        if (!p.has_image()) continue;
        b += *p.image_brightness;
        w += p.image_warmth.value_or(0.0);
        ++n;
      }
      v = n ? b / static_cast<double>(n) : 0.0;
      warmth.push_back(n ? w / static_cast<double>(n) : 0.0);
    } else if (name == "post_time") {
      v = late_night_share(u);
    } else if (spec.category == Category::emotion_expression) {
      const auto e = encode_emotion_expression(u, reference_time(u));
      if (name == "suicide_prop") v = e[0];
      else if (name == "last_word_prop") v = e[1];
      else if (name == "future_prop") v = e[2];
      else if (name == "negation_prop") v = e[3];
      else if (name == "self_prop") v = e[4];
      else v = (e[5] > 0.0 ? 1.0 : 0.0) + (e[6] > 0.0 ? 2.0 : 0.0);
    } else if (name == "following") {
      v = static_cast<double>(u.following_count);
    } else if (name == "follower") {
      v = static_cast<double>(u.follower_count);
    } else if (name == "interact") {
      v = static_cast<double>(u.interact_count);
    } else {
      throw UsageError("unknown property '" + name + "'");
    }
    values.push_back(v);
  }
  return discretize_feature(values, spec.kind, warmth);
}

InfoGainReport rank_categories(const CohortDataset& dataset, const Model* model) {
  if (dataset.users.empty()) throw LoadError("information gain needs at least one user");
  std::vector<int> y;
  if (model) {
    const auto in = prepare_inputs(dataset, model->features);
    std::vector<std::size_t> all(dataset.users.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto p = predict_users(*model, in, all);
    for (auto c : p.predicted) y.push_back(static_cast<int>(c));
  } else {
    for (const auto& u : dataset.users) y.push_back(u.label);
  }

  InfoGainReport report;
  std::map<Category, std::pair<double, std::size_t>> sums;
  for (const auto& spec : property_catalog()) {
    const double g = info_gain(y, property_classes(dataset, spec));
    report.properties.push_back({spec.name, spec.category, g});
    auto& s = sums[spec.category];
    s.first += g;
    ++s.second;
  }
  for (Category c : kPropertyCategories) {
    const auto& s = sums[c];
    report.categories.push_back({c, s.second ? s.first / static_cast<double>(s.second) : 0.0});
  }
  std::stable_sort(report.properties.begin(), report.properties.end(),
                   [](const PropertyGain& a, const PropertyGain& b) {
                     return a.gain != b.gain ? a.gain > b.gain : a.name < b.name;
                   });
  std::stable_sort(report.categories.begin(), report.categories.end(),
                   [](const CategoryGain& a, const CategoryGain& b) {
                     return a.mean_gain > b.mean_gain;
                   });
  return report;
}

std::string info_gain_csv(const InfoGainReport& report) {
  std::string out = "level,name,category,info_gain\n";
  for (const auto& c : report.categories) {
    const std::string name(to_string(c.category));
    out += "category," + name + "," + name + "," + format_double(c.mean_gain) + "\n";
  }
  for (const auto& p : report.properties) {
    out += "property," + p.name + "," + std::string(to_string(p.category)) + "," +
           format_double(p.gain) + "\n";
  }
  return out;
}

KnockoutResult feature_knockout(const CohortDataset& dataset, const TrainConfig& config,
                                std::size_t top_x, const InfoGainReport& ranking) {
  if (top_x >= ranking.properties.size()) {
    throw UsageError("top_x must be below the property count (" +
                     std::to_string(ranking.properties.size()) + ")");
  }
  KnockoutResult result;
  result.top_x = top_x;
  TrainConfig c = config;
  for (std::size_t i = 0; i < top_x; ++i) {
    result.removed.push_back(ranking.properties[i].name);
    c.features.zeroed_properties.insert(ranking.properties[i].name);
  }
  const auto trained = train(dataset, c);
  result.test = evaluate(trained.model, dataset, Split::test);
  return result;
}

}  // namespace riskgraph
