#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "riskgraph/data_model.hpp"

namespace riskgraph {

/// Per-class generation targets. Means are targets for the generated
/// per-user quantities; rates are per token (lexicons) or per post (emotions).
struct ClassProfile {
  std::string name;
  double fraction = 0.5;
  std::array<double, kGenderCount> gender_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // female, male, unknown
  double age_mean = 28.0;
  double age_sd = 6.0;
  double unknown_age_rate = 0.05;
  std::array<double, kLocationCount> location_mix{0.125, 0.125, 0.125, 0.125,
                                                  0.125, 0.125, 0.125, 0.125};
  double stress_periods_mean = 1.8;
  double strong_stress_rate = 0.5;
  double interpersonal_mean = 1.0;  // expected interpersonal periods; <= stress_periods_mean
  double disorder_rate = 0.0;
  double attempt_rate = 0.0;
  double posts_mean = 5.0;
  double image_rate = 0.5;
  double tokens_mean = 30.0;
  std::map<std::string, double> lexicon_token_rates;
  std::map<std::string, double> emotion_post_rates;
  double following_mean = 300.0;
  double follower_mean = 1000.0;
  double interact_mean = 5.0;
  double neighbours_mean = 5.0;
  double text_signal = 0.0;   // weight of the class centroid in text embeddings
  double image_signal = 0.0;  // same for image embeddings
  double polarity_mean = 0.0;
  double brightness_mean = 0.5;
  double warmth_mean = 0.5;
  double late_night_rate = 0.2;  // share of posts made between 00:00 and 05:59
};

struct SynthConfig {
  std::string profile = "weibo";
  std::size_t users = 600;
  std::vector<ClassProfile> classes;
  std::array<double, 3> split_fractions{0.84, 0.08, 0.08};  // train, validation, test
  double homophily = 0.75;  // probability that a followed user shares the follower's class
  std::size_t lexicon_words = 40;
  // Post embeddings are signal * class centroid + embedding_noise * random unit vector.
  double embedding_noise = 1.0;

  /// Binary cohort following the per-class statistics of the Weibo knowledge
  /// graphs; `balance` is the share of users with suicidal ideation (label 1).
  static SynthConfig weibo(std::size_t users, double balance = 0.5);
  /// Five ordinal risk classes with the Reddit class mix; posts only, no edges.
  static SynthConfig reddit(std::size_t users);
  /// Two balanced classes that differ only in their stress history.
  static SynthConfig planted_stress(std::size_t users);
};

CohortDataset generate_synthetic_cohort(const SynthConfig& config, std::uint64_t seed);

// Apportions `total` over `fractions` by largest remainder.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& fractions);

// Start of the generated observation year (2018-05-01 UTC) and its length.
inline constexpr std::int64_t kSynthEpochStart = 1525132800;
inline constexpr int kSynthDays = 365;

}  // namespace riskgraph
