#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riskgraph/tensor.hpp"

namespace riskgraph {

inline constexpr std::size_t kTextWidth = 768;
inline constexpr std::size_t kImageWidth = 300;

enum class Gender { female, male, unknown };
enum class Location { east, south, north, south_west, north_west, middle, north_east, unknown };
enum class StressCategory {
  study,
  work,
  family,
  interpersonal_relation,
  romantic_relation,
  self_cognition
};
enum class Split { train, validation, test };

inline constexpr std::size_t kGenderCount = 3;
inline constexpr std::size_t kLocationCount = 8;
inline constexpr std::size_t kStressCategoryCount = 6;

std::string_view to_string(Gender g);
std::string_view to_string(Location l);
std::string_view to_string(StressCategory c);
std::string_view to_string(Split s);
Gender parse_gender(std::string_view s);
Location parse_location(std::string_view s);
StressCategory parse_stress_category(std::string_view s);
Split parse_split(std::string_view s);

// Lexicon names understood by the encoders.
namespace lexicon_names {
inline constexpr std::string_view suicide = "suicide";
inline constexpr std::string_view last_words = "last_words";
inline constexpr std::string_view future = "future";
inline constexpr std::string_view negation = "negation";
inline constexpr std::string_view self_concern = "self_concern";
inline constexpr std::string_view others_concern = "others_concern";
inline constexpr std::string_view perfection = "perfection";
inline constexpr std::string_view ruminant = "ruminant";
inline constexpr std::string_view love = "love";
inline constexpr std::string_view joy = "joy";
inline constexpr std::string_view anxiety = "anxiety";
inline constexpr std::string_view sorrow = "sorrow";
}  // namespace lexicon_names

struct PostRecord {
  std::string post_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  int hour = 0;
  Vector text_embedding = Vector(kTextWidth, 0.0);
  Vector image_embedding = Vector(kImageWidth, 0.0);  // all zeros is the null image
  std::map<std::string, int> token_counts;
  int total_tokens = 1;
  double sentiment_polarity = 0.0;
  std::optional<double> image_brightness;
  std::optional<double> image_warmth;
  // Whitespace-tokenized raw text; optional, used for lexicon scans.
  std::string text;

  bool has_image() const { return image_brightness.has_value(); }
  int count(std::string_view lexicon) const;

  bool operator==(const PostRecord&) const = default;
};

struct StressPeriod {
  std::chrono::sys_days start_day;
  std::chrono::sys_days end_day;
  int level = 1;
  StressCategory category = StressCategory::study;

  bool operator==(const StressPeriod&) const = default;
};

struct UserRecord {
  std::string user_id;
  Gender gender = Gender::unknown;
  std::optional<int> age_years;
  Location location = Location::unknown;
  std::vector<PostRecord> posts;  // chronological
  std::vector<StressPeriod> stress_periods;
  bool disorder_flag = false;
  bool attempt_flag = false;
  std::int64_t following_count = 0;
  std::int64_t follower_count = 0;
  std::int64_t interact_count = 0;
  int label = 0;

  bool operator==(const UserRecord&) const = default;
};

struct SocialEdge {
  std::string src;  // src follows dst
  std::string dst;

  bool operator==(const SocialEdge&) const = default;
  auto operator<=>(const SocialEdge&) const = default;
};

/// Word/phrase list with positive weights. Phrases are whitespace-separated
/// token sequences; matching is longest-first and counts every occurrence.
class Lexicon {
 public:
  Lexicon() = default;
  Lexicon(std::string name, std::map<std::string, double> entries);

  const std::string& name() const { return name_; }
  const std::map<std::string, double>& entries() const { return entries_; }

  struct Match {
    std::size_t token_index;
    std::size_t token_length;
    double weight;
  };
  std::vector<Match> scan(std::span<const std::string> tokens) const;
  int count(std::span<const std::string> tokens) const;
  double weighted_count(std::span<const std::string> tokens) const;

  bool operator==(const Lexicon& o) const { return name_ == o.name_ && entries_ == o.entries_; }

 private:
  std::string name_;
  std::map<std::string, double> entries_;
  std::size_t max_phrase_tokens_ = 1;
};

std::vector<std::string> tokenize(std::string_view text);

struct CohortDataset {
  std::vector<UserRecord> users;
  std::vector<SocialEdge> edges;
  std::vector<Lexicon> lexicons;
  std::map<std::string, Split> split;

  const Lexicon* find_lexicon(std::string_view name) const;
  const Lexicon& lexicon(std::string_view name) const;
  std::unordered_map<std::string, std::size_t> user_index() const;
  std::vector<std::size_t> users_in(Split s) const;
  int class_count() const;  // max label + 1, at least 2

  bool operator==(const CohortDataset&) const = default;
};

// Fills token_counts and total_tokens from post.text using every lexicon.
void annotate_post(PostRecord& post, std::span<const Lexicon> lexicons);

double post_degree(std::string_view text, const Lexicon& suicide_lexicon);
double post_degree(const PostRecord& post, const Lexicon& suicide_lexicon);
double user_degree(const UserRecord& user, const Lexicon& suicide_lexicon);

/// Loads a cohort directory (users.jsonl, posts.jsonl, edges.csv,
/// lexicons/*.tsv, split.csv). Non-fatal repairs (duplicate edges, self
/// loops) are reported through `warnings` when given.
CohortDataset load_cohort(const std::filesystem::path& dir,
                          std::vector<std::string>* warnings = nullptr);
void save_cohort(const CohortDataset& data, const std::filesystem::path& dir);

// Throws IntegrityError/FormatError on the first violated invariant.
void validate_cohort(const CohortDataset& data);

/// Deterministic unit-norm stand-in for the text/image embedders.
Vector pseudo_embed(std::string_view key, std::size_t width);
// Deterministic stand-in sentiment in [-1, 1].
double pseudo_polarity(std::string_view key);

std::string format_date(std::chrono::sys_days day);
std::chrono::sys_days parse_date(std::string_view iso);

}  // namespace riskgraph
