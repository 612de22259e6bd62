#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "riskgraph/data_model.hpp"
#include "riskgraph/tensor.hpp"

namespace riskgraph {

enum class Category {
  personal_information,
  personality,
  experience,
  post_behavior,
  emotion_expression,
  social_interaction,
  reserved,  // padding slot only; never ranked
};

inline constexpr std::array<Category, 6> kPropertyCategories{
    Category::personal_information, Category::personality,        Category::experience,
    Category::post_behavior,        Category::emotion_expression, Category::social_interaction};

std::string_view to_string(Category c);
Category parse_category(std::string_view s);

enum class HourMode { normalized, raw };

inline constexpr std::size_t kPostBehaviorWidth = 30;
inline constexpr std::size_t kPostInputWidth = kTextWidth + kImageWidth + 1;  // 1069

/// Everything that decides how raw user records turn into model inputs.
struct FeatureConfig {
  std::set<Category> disabled_categories;
  bool without_kg = false;  // post behaviour only
  bool pad_to_61 = false;
  int max_age = 65;
  bool log_interactions = true;
  HourMode hour_mode = HourMode::normalized;
  std::size_t max_posts = 200;
  // Knocked-out properties: zeroed in P_u, or in the post rows for texts/images/post_time.
  std::set<std::string> zeroed_properties;

  bool operator==(const FeatureConfig&) const = default;
};

struct LayoutEntry {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
  Category category = Category::reserved;

  bool operator==(const LayoutEntry&) const = default;
};

/// Index structure of the property vector: contiguous named segments.
class PropertyLayout {
 public:
  PropertyLayout() = default;
  explicit PropertyLayout(std::vector<LayoutEntry> entries);

  static PropertyLayout build(const FeatureConfig& config);

  const std::vector<LayoutEntry>& entries() const { return entries_; }
  std::size_t total_width() const { return total_width_; }
  const LayoutEntry* find(std::string_view name) const;
  const LayoutEntry& at(std::string_view name) const;
  // Human-readable name of one column, e.g. "location[3]" or "age".
  std::string column_name(std::size_t column) const;

  std::string to_json() const;
  static PropertyLayout from_json(std::string_view text);
  std::string describe() const;

  bool operator==(const PropertyLayout&) const = default;

 private:
  std::vector<LayoutEntry> entries_;
  std::size_t total_width_ = 0;
};

struct PropertyVector {
  Vector values;
  const PropertyLayout* layout = nullptr;
};

struct StressFeatures {
  double count = 0.0;
  double mean_level = 0.0;
  double distinct_categories = 0.0;
};

struct PersonalityFeatures {
  double perfect = 0.0;
  double ruminant = 0.0;
  double sensitive = 0.0;
};

std::array<double, kGenderCount> encode_gender(Gender g);
double encode_age(std::optional<int> age_years, int max_age = 65);
std::array<double, kLocationCount> encode_location(Location loc);
StressFeatures encode_stress(std::span<const StressPeriod> periods);
PersonalityFeatures encode_personality(const UserRecord& user);
// (SuicideProp, LastWordProp, FutureProp, NegProp, SelfProp, love-joy, love-anxiety/sorrow)
std::array<double, 7> encode_emotion_expression(const UserRecord& user, std::int64_t now);
std::array<double, 3> encode_interaction(const UserRecord& user, bool log_scale = true);

// Reference time for the last-words window: the user's latest post (0 without posts).
std::int64_t reference_time(const UserRecord& user);

inline constexpr std::int64_t kLastWordsWindowSeconds = 14 * 86400;
inline constexpr std::size_t kEmotionTransitionWindow = 10;

/// All categories except post behaviour, written into a layout-wide vector
/// whose post_behavior segment (if any) is left at zero.
Vector encode_static_properties(const UserRecord& user, const PropertyLayout& layout,
                                const FeatureConfig& config);

PropertyVector assemble_property_vector(const UserRecord& user,
                                        std::span<const double> post_behavior,
                                        const PropertyLayout& layout,
                                        const FeatureConfig& config = {});

// Writes `post_behavior` into the layout's post_behavior segment of `values`.
void insert_post_behavior(std::span<double> values, std::span<const double> post_behavior,
                          const PropertyLayout& layout);

/// n x 1069 rows (text || image || hour) for the most recent max_posts posts.
/// A user without posts yields one all-zero row.
Matrix build_post_sequence(const UserRecord& user, const FeatureConfig& config);

class KnowledgeGraph {
 public:
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t index_of(std::string_view id) const;
  bool contains(std::string_view id) const;
  const Vector& vector(std::size_t i) const { return vectors_[i]; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::size_t>& neighbours(std::size_t i) const { return adjacency_[i]; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  void set_vector(std::size_t i, Vector v) { vectors_[i] = std::move(v); }

 private:
  friend KnowledgeGraph build_graph(const CohortDataset&,
                                    const std::map<std::string, Vector>&);
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Vector> vectors_;
  std::vector<int> labels_;
  std::vector<std::vector<std::size_t>> adjacency_;  // followed users, ascending index
  std::vector<std::string> warnings_;
};

/// Nodes in dataset user order; adjacency(u) = users u follows. Self loops
/// and duplicate edges are dropped with a warning.
KnowledgeGraph build_graph(const CohortDataset& dataset,
                           const std::map<std::string, Vector>& vectors);

}  // namespace riskgraph
