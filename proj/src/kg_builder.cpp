#include "riskgraph/kg_builder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace riskgraph {

using nlohmann::json;
namespace ln = lexicon_names;

namespace {

constexpr std::array<std::string_view, 7> kCategoryNames{
    "personal_information", "personality",        "experience", "post_behavior",
    "emotion_expression",   "social_interaction", "reserved"};

struct SegmentSpec {
  std::string_view name;
  std::size_t width;
  Category category;
};

constexpr std::array<SegmentSpec, 22> kDefaultSegments{{
    {"gender", 3, Category::personal_information},
    {"age", 1, Category::personal_information},
    {"location", 8, Category::personal_information},
    {"perfect", 1, Category::personality},
    {"ruminant", 1, Category::personality},
    {"sensitive", 1, Category::personality},
    {"stress_num", 1, Category::experience},
    {"stress_level", 1, Category::experience},
    {"stress_categories", 1, Category::experience},
    {"disorder", 1, Category::experience},
    {"attempt", 1, Category::experience},
    {"post_behavior", kPostBehaviorWidth, Category::post_behavior},
    {"suicide_prop", 1, Category::emotion_expression},
    {"last_word_prop", 1, Category::emotion_expression},
    {"future_prop", 1, Category::emotion_expression},
    {"negation_prop", 1, Category::emotion_expression},
    {"self_prop", 1, Category::emotion_expression},
    {"love_joy", 1, Category::emotion_expression},
    {"love_anxiety_sorrow", 1, Category::emotion_expression},
    {"following", 1, Category::social_interaction},
    {"follower", 1, Category::social_interaction},
    {"interact", 1, Category::social_interaction},
}};

double mean_ratio(const UserRecord& user, std::string_view lexicon) {
  if (user.posts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : user.posts) total += static_cast<double>(p.count(lexicon)) / p.total_tokens;
  return total / static_cast<double>(user.posts.size());
}

bool is_zeroed(const FeatureConfig& config, std::string_view entry) {
  if (config.zeroed_properties.count(std::string(entry))) return true;
  if ((entry == "love_joy" || entry == "love_anxiety_sorrow") &&
      config.zeroed_properties.count("emotion_transition")) {
    return true;
  }
  return false;
}

void put(std::span<double> values, const PropertyLayout& layout, std::string_view name,
         std::span<const double> data) {
  const LayoutEntry* e = layout.find(name);
  if (!e) return;
  require_shape(e->width == data.size(), "layout entry '" + std::string(name) + "' width");
  std::copy(data.begin(), data.end(), values.begin() + static_cast<std::ptrdiff_t>(e->offset));
}

void put(std::span<double> values, const PropertyLayout& layout, std::string_view name,
         double v) {
  put(values, layout, name, std::span<const double>(&v, 1));
}

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

Category parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  throw ConfigError("unknown property category '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Layout

PropertyLayout::PropertyLayout(std::vector<LayoutEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> names;
  std::size_t offset = 0;
  for (const auto& e : entries_) {
    if (e.offset != offset) {
      throw FormatError("layout entry '" + e.name + "' at offset " + std::to_string(e.offset) +
                        ", expected " + std::to_string(offset));
    }
    if (e.width == 0) throw FormatError("layout entry '" + e.name + "' has zero width");
    if (!names.insert(e.name).second) throw FormatError("duplicate layout entry '" + e.name + "'");
    offset += e.width;
  }
  total_width_ = offset;
}

PropertyLayout PropertyLayout::build(const FeatureConfig& config) {
  std::vector<LayoutEntry> entries;
  std::size_t offset = 0;
  auto add = [&](std::string_view name, std::size_t width, Category cat) {
    entries.push_back({std::string(name), offset, width, cat});
    offset += width;
  };
  if (config.without_kg) {
    add("post_behavior", kPostBehaviorWidth, Category::post_behavior);
    return PropertyLayout(std::move(entries));
  }
  for (const auto& seg : kDefaultSegments) {
    if (config.disabled_categories.count(seg.category)) continue;
    add(seg.name, seg.width, seg.category);
  }
  if (config.pad_to_61) add("reserved", 1, Category::reserved);
  if (entries.empty()) throw ConfigError("every property category is disabled");
  return PropertyLayout(std::move(entries));
}

const LayoutEntry* PropertyLayout::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const LayoutEntry& PropertyLayout::at(std::string_view name) const {
  const LayoutEntry* e = find(name);
  if (!e) throw UsageError("layout has no entry '" + std::string(name) + "'");
  return *e;
}

std::string PropertyLayout::column_name(std::size_t column) const {
  for (const auto& e : entries_) {
    if (column >= e.offset && column < e.offset + e.width) {
      if (e.width == 1) return e.name;
      return e.name + "[" + std::to_string(column - e.offset) + "]";
    }
  }
  throw UsageError("column " + std::to_string(column) + " outside layout");
}

std::string PropertyLayout::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"name", e.name},
                       {"offset", e.offset},
                       {"width", e.width},
                       {"category", std::string(riskgraph::to_string(e.category))}});
  }
  json j{{"total_width", total_width_}, {"entries", entries}};
  return j.dump(2);
}

PropertyLayout PropertyLayout::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    std::vector<LayoutEntry> entries;
    for (const auto& e : j.at("entries")) {
      entries.push_back({e.at("name").get<std::string>(), e.at("offset").get<std::size_t>(),
                         e.at("width").get<std::size_t>(),
                         parse_category(e.at("category").get<std::string>())});
    }
    PropertyLayout layout(std::move(entries));
    const auto declared = j.at("total_width").get<std::size_t>();
    if (declared != layout.total_width()) {
      throw FormatError("layout total_width " + std::to_string(declared) +
                        " disagrees with entry widths (" + std::to_string(layout.total_width()) +
                        ")");
    }
    return layout;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed layout: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed layout: ") + e.what());
  }
}

std::string PropertyLayout::describe() const {
  std::ostringstream out;
  out << "width " << total_width_ << ":";
  for (const auto& e : entries_) out << " " << e.name << "@" << e.offset << "+" << e.width;
  return out.str();
}

// ---------------------------------------------------------------------------
// Category encoders

std::array<double, kGenderCount> encode_gender(Gender g) {
  std::array<double, kGenderCount> v{};
  v[static_cast<std::size_t>(g)] = 1.0;
  return v;
}

double encode_age(std::optional<int> age_years, int max_age) {
  if (max_age <= 0) throw ConfigError("max_age must be positive");
  if (!age_years) return 0.0;
  if (*age_years < 0) throw FormatError("negative age " + std::to_string(*age_years));
  return std::clamp(static_cast<double>(*age_years) / max_age, 0.0, 1.0);
}

std::array<double, kLocationCount> encode_location(Location loc) {
  std::array<double, kLocationCount> v{};
  v[static_cast<std::size_t>(loc)] = 1.0;
  return v;
}

StressFeatures encode_stress(std::span<const StressPeriod> periods) {
  StressFeatures f;
  if (periods.empty()) return f;
  std::set<StressCategory> categories;
  double level_sum = 0.0;
  for (const auto& s : periods) {
    level_sum += s.level;
    categories.insert(s.category);
  }
  f.count = static_cast<double>(periods.size());
  f.mean_level = level_sum / f.count;
  f.distinct_categories = static_cast<double>(categories.size());
  return f;
}

PersonalityFeatures encode_personality(const UserRecord& user) {
  PersonalityFeatures f;
  f.perfect = mean_ratio(user, ln::perfection);
  f.ruminant = mean_ratio(user, ln::ruminant);
  f.sensitive = static_cast<double>(
      std::count_if(user.stress_periods.begin(), user.stress_periods.end(), [](const auto& s) {
        return s.category == StressCategory::interpersonal_relation;
      }));
  return f;
}

std::int64_t reference_time(const UserRecord& user) {
  return user.posts.empty() ? 0 : user.posts.back().timestamp;
}

std::array<double, 7> encode_emotion_expression(const UserRecord& user, std::int64_t now) {
  std::array<double, 7> out{};
  out[0] = mean_ratio(user, ln::suicide);
  {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& p : user.posts) {
      if (p.timestamp <= now && now - p.timestamp <= kLastWordsWindowSeconds) {
        total += static_cast<double>(p.count(ln::last_words)) / p.total_tokens;
        ++n;
      }
    }
    out[1] = n ? total / static_cast<double>(n) : 0.0;
  }
  out[2] = mean_ratio(user, ln::future);
  out[3] = mean_ratio(user, ln::negation);
  out[4] = mean_ratio(user, ln::self_concern);

  const std::size_t n = user.posts.size();
  const std::size_t first = n > kEmotionTransitionWindow ? n - kEmotionTransitionWindow : 0;
  double love_joy = 0.0, love_sad = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const auto& earlier = user.posts[i];
    if (earlier.count(ln::love) < 1) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& later = user.posts[j];
      if (later.timestamp <= earlier.timestamp) continue;
      if (later.count(ln::joy) >= 1) love_joy += 1.0;
      if (later.count(ln::anxiety) >= 1 || later.count(ln::sorrow) >= 1) love_sad += 1.0;
    }
  }
  out[5] = love_joy;
  out[6] = love_sad;
  return out;
}

std::array<double, 3> encode_interaction(const UserRecord& user, bool log_scale) {
  auto scale = [&](std::int64_t x) {
    if (x < 0) throw FormatError("negative interaction count for " + user.user_id);
    const double v = static_cast<double>(x);
    return log_scale ? std::log1p(v) : v;
  };
  return {scale(user.following_count), scale(user.follower_count), scale(user.interact_count)};
}

// ---------------------------------------------------------------------------
// Assembly

Vector encode_static_properties(const UserRecord& user, const PropertyLayout& layout,
                                const FeatureConfig& config) {
  Vector v(layout.total_width(), 0.0);
  const auto gender = encode_gender(user.gender);
  put(v, layout, "gender", gender);
  put(v, layout, "age", encode_age(user.age_years, config.max_age));
  const auto loc = encode_location(user.location);
  put(v, layout, "location", loc);

  const auto pers = encode_personality(user);
  put(v, layout, "perfect", pers.perfect);
  put(v, layout, "ruminant", pers.ruminant);
  put(v, layout, "sensitive", pers.sensitive);

  const auto stress = encode_stress(user.stress_periods);
  put(v, layout, "stress_num", stress.count);
  put(v, layout, "stress_level", stress.mean_level);
  put(v, layout, "stress_categories", stress.distinct_categories);
  put(v, layout, "disorder", user.disorder_flag ? 1.0 : 0.0);
  put(v, layout, "attempt", user.attempt_flag ? 1.0 : 0.0);

  const auto emo = encode_emotion_expression(user, reference_time(user));
  static constexpr std::array<std::string_view, 7> emo_names{
      "suicide_prop", "last_word_prop", "future_prop",        "negation_prop",
      "self_prop",    "love_joy",       "love_anxiety_sorrow"};
  for (std::size_t i = 0; i < emo.size(); ++i) put(v, layout, emo_names[i], emo[i]);

  const auto inter = encode_interaction(user, config.log_interactions);
  put(v, layout, "following", inter[0]);
  put(v, layout, "follower", inter[1]);
  put(v, layout, "interact", inter[2]);

  for (const auto& e : layout.entries()) {
    if (is_zeroed(config, e.name)) {
      std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(e.offset), e.width, 0.0);
    }
  }
  return v;
}

void insert_post_behavior(std::span<double> values, std::span<const double> post_behavior,
                          const PropertyLayout& layout) {
  require_shape(values.size() == layout.total_width(),
                "property vector has " + std::to_string(values.size()) +
                    " values, layout expects " + std::to_string(layout.total_width()));
  const LayoutEntry* e = layout.find("post_behavior");
  if (!e) return;
  require_shape(post_behavior.size() == e->width, "post behavior width " +
                                                      std::to_string(post_behavior.size()) +
                                                      ", expected " + std::to_string(e->width));
  std::copy(post_behavior.begin(), post_behavior.end(),
            values.begin() + static_cast<std::ptrdiff_t>(e->offset));
}

PropertyVector assemble_property_vector(const UserRecord& user,
                                        std::span<const double> post_behavior,
                                        const PropertyLayout& layout,
                                        const FeatureConfig& config) {
  PropertyVector pv{encode_static_properties(user, layout, config), &layout};
  insert_post_behavior(pv.values, post_behavior, layout);
  return pv;
}

Matrix build_post_sequence(const UserRecord& user, const FeatureConfig& config) {
  const std::size_t n = user.posts.size();
  const std::size_t first = n > config.max_posts ? n - config.max_posts : 0;
  Matrix rows(std::max<std::size_t>(1, n - first), kPostInputWidth, 0.0);
  const bool keep_text = !config.zeroed_properties.count("texts");
  const bool keep_image = !config.zeroed_properties.count("images");
  const bool keep_time = !config.zeroed_properties.count("post_time");
  for (std::size_t i = first; i < n; ++i) {
    const auto& p = user.posts[i];
    require_shape(p.text_embedding.size() == kTextWidth && p.image_embedding.size() == kImageWidth,
                  "post " + p.post_id + ": embedding width");
    auto row = rows.row(i - first);
    if (keep_text) std::copy(p.text_embedding.begin(), p.text_embedding.end(), row.begin());
    if (keep_image) {
      std::copy(p.image_embedding.begin(), p.image_embedding.end(),
                row.begin() + static_cast<std::ptrdiff_t>(kTextWidth));
    }
    if (keep_time) {
      row[kTextWidth + kImageWidth] =
          config.hour_mode == HourMode::normalized ? p.hour / 23.0 : static_cast<double>(p.hour);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Graph

std::size_t KnowledgeGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw UsageError("unknown user " + std::string(id));
  return it->second;
}

bool KnowledgeGraph::contains(std::string_view id) const {
  return index_.count(std::string(id)) > 0;
}

KnowledgeGraph build_graph(const CohortDataset& dataset,
                           const std::map<std::string, Vector>& vectors) {
  KnowledgeGraph g;
  for (const auto& u : dataset.users) {
    auto it = vectors.find(u.user_id);
    if (it == vectors.end()) {
      throw IntegrityError("no property vector for user " + u.user_id);
    }
    g.index_.emplace(u.user_id, g.ids_.size());
    g.ids_.push_back(u.user_id);
    g.vectors_.push_back(it->second);
    g.labels_.push_back(u.label);
  }
  g.adjacency_.resize(g.ids_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : dataset.edges) {
    auto s = g.index_.find(e.src);
    auto d = g.index_.find(e.dst);
    if (s == g.index_.end() || d == g.index_.end()) {
      throw IntegrityError("edge references unknown user " +
                           (s == g.index_.end() ? e.src : e.dst));
    }
    if (s->second == d->second) {
      g.warnings_.push_back("dropped self-loop edge on " + e.src);
      continue;
    }
    if (!seen.insert({s->second, d->second}).second) {
      g.warnings_.push_back("dropped duplicate edge " + e.src + "," + e.dst);
      continue;
    }
    g.adjacency_[s->second].push_back(d->second);
  }
  for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());
  return g;
}

}  // namespace riskgraph
