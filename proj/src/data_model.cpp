#include "riskgraph/data_model.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "riskgraph/io_util.hpp"

namespace riskgraph {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 3> kGenderNames{"female", "male", "unknown"};
constexpr std::array<std::string_view, 8> kLocationNames{
    "east", "south", "north", "south_west", "north_west", "middle", "north_east", "unknown"};
constexpr std::array<std::string_view, 6> kStressNames{
    "study", "work", "family", "interpersonal_relation", "romantic_relation", "self_cognition"};
constexpr std::array<std::string_view, 3> kSplitNames{"train", "validation", "test"};

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw FormatError("unknown " + std::string(what) + " value '" + std::string(s) + "'");
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_open(std::uint64_t bits) {
  // (0, 1): never exactly zero, so log() below is finite.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Domain-separation key mixed into every pseudo-embedding seed.
constexpr std::uint64_t kEmbedKey = 0x5249534b47524150ULL;

}  // namespace

std::string_view to_string(Gender g) { return kGenderNames[static_cast<std::size_t>(g)]; }
std::string_view to_string(Location l) { return kLocationNames[static_cast<std::size_t>(l)]; }
std::string_view to_string(StressCategory c) { return kStressNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }
Gender parse_gender(std::string_view s) { return parse_enum<Gender>(s, kGenderNames, "gender"); }
Location parse_location(std::string_view s) {
  return parse_enum<Location>(s, kLocationNames, "location");
}
StressCategory parse_stress_category(std::string_view s) {
  return parse_enum<StressCategory>(s, kStressNames, "stress category");
}
Split parse_split(std::string_view s) { return parse_enum<Split>(s, kSplitNames, "split"); }

int PostRecord::count(std::string_view lexicon) const {
  auto it = token_counts.find(std::string(lexicon));
  return it == token_counts.end() ? 0 : it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

Lexicon::Lexicon(std::string name, std::map<std::string, double> entries)
    : name_(std::move(name)) {
  if (entries.empty()) throw FormatError("lexicon '" + name_ + "' has no entries");
  for (auto& [phrase, weight] : entries) {
    if (!(weight > 0.0)) {
      throw FormatError("lexicon '" + name_ + "': non-positive weight for '" + phrase + "'");
    }
    auto tokens = tokenize(phrase);
    if (tokens.empty()) throw FormatError("lexicon '" + name_ + "' has an empty entry");
    std::string normalized;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) normalized += ' ';
      normalized += tokens[i];
    }
    max_phrase_tokens_ = std::max(max_phrase_tokens_, tokens.size());
    entries_[normalized] = weight;
  }
}

std::vector<Lexicon::Match> Lexicon::scan(std::span<const std::string> tokens) const {
  std::vector<Match> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool found = false;
    const std::size_t longest = std::min(max_phrase_tokens_, tokens.size() - i);
    for (std::size_t len = longest; len >= 1 && !found; --len) {
      std::string phrase = tokens[i];
      for (std::size_t k = 1; k < len; ++k) {
        phrase += ' ';
        phrase += tokens[i + k];
      }
      auto it = entries_.find(phrase);
      if (it != entries_.end()) {
        matches.push_back({i, len, it->second});
        i += len;
        found = true;
      }
    }
    if (!found) ++i;
  }
  return matches;
}

int Lexicon::count(std::span<const std::string> tokens) const {
  return static_cast<int>(scan(tokens).size());
}

double Lexicon::weighted_count(std::span<const std::string> tokens) const {
  double total = 0.0;
  for (const auto& m : scan(tokens)) total += m.weight;
  return total;
}

const Lexicon* CohortDataset::find_lexicon(std::string_view name) const {
  for (const auto& lex : lexicons) {
    if (lex.name() == name) return &lex;
  }
  return nullptr;
}

const Lexicon& CohortDataset::lexicon(std::string_view name) const {
  const Lexicon* lex = find_lexicon(name);
  if (!lex) throw LoadError("lexicon '" + std::string(name) + "' not present in cohort");
  return *lex;
}

std::unordered_map<std::string, std::size_t> CohortDataset::user_index() const {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) index.emplace(users[i].user_id, i);
  return index;
}

std::vector<std::size_t> CohortDataset::users_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    auto it = split.find(users[i].user_id);
    if (it != split.end() && it->second == s) out.push_back(i);
  }
  return out;
}

int CohortDataset::class_count() const {
  int max_label = 1;
  for (const auto& u : users) max_label = std::max(max_label, u.label);
  return max_label + 1;
}

void annotate_post(PostRecord& post, std::span<const Lexicon> lexicons) {
  const auto tokens = tokenize(post.text);
  post.total_tokens = std::max<int>(1, static_cast<int>(tokens.size()));
  post.token_counts.clear();
  for (const auto& lex : lexicons) {
    const int hits = lex.count(tokens);
    if (hits > 0) post.token_counts[lex.name()] = hits;
  }
}

double post_degree(std::string_view text, const Lexicon& suicide_lexicon) {
  const auto tokens = tokenize(text);
  return suicide_lexicon.weighted_count(tokens);
}

double post_degree(const PostRecord& post, const Lexicon& suicide_lexicon) {
  return post_degree(post.text, suicide_lexicon);
}

double user_degree(const UserRecord& user, const Lexicon& suicide_lexicon) {
  double total = 0.0;
  for (const auto& post : user.posts) total += post_degree(post, suicide_lexicon);
  return total;
}

Vector pseudo_embed(std::string_view key, std::size_t width) {
  if (width != kTextWidth && width != kImageWidth) {
    throw UsageError("pseudo_embed: unsupported width " + std::to_string(width) +
                     " (expected 768 or 300)");
  }
  std::uint64_t state = fnv1a(key) ^ kEmbedKey ^ (static_cast<std::uint64_t>(width) << 48);
  Vector v(width);
  for (std::size_t i = 0; i < width; i += 2) {
    const double u1 = unit_open(splitmix64(state));
    const double u2 = unit_open(splitmix64(state));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    v[i] = radius * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < width) v[i + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double pseudo_polarity(std::string_view key) {
  std::uint64_t state = fnv1a(key) ^ kEmbedKey ^ 0x504f4cULL;
  return 2.0 * unit_open(splitmix64(state)) - 1.0;
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::chrono::sys_days parse_date(std::string_view iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' ||
      std::from_chars(iso.data(), iso.data() + 4, y).ec != std::errc{} ||
      std::from_chars(iso.data() + 5, iso.data() + 7, m).ec != std::errc{} ||
      std::from_chars(iso.data() + 8, iso.data() + 10, d).ec != std::errc{}) {
    throw FormatError("malformed date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw FormatError("invalid date '" + std::string(iso) + "'");
  return std::chrono::sys_days{ymd};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_post(const PostRecord& p) {
  const std::string where = "post " + p.post_id;
  if (p.text_embedding.size() != kTextWidth) {
    throw FormatError(where + ": text_embedding has width " +
                      std::to_string(p.text_embedding.size()) + ", expected 768");
  }
  if (p.image_embedding.size() != kImageWidth) {
    throw FormatError(where + ": image_embedding has width " +
                      std::to_string(p.image_embedding.size()) + ", expected 300");
  }
  if (p.hour < 0 || p.hour > 23) {
    throw FormatError(where + ": hour " + std::to_string(p.hour) + " outside 0..23");
  }
  if (p.total_tokens < 1) throw FormatError(where + ": total_tokens must be positive");
  for (const auto& [name, n] : p.token_counts) {
    if (n < 0 || n > p.total_tokens) {
      throw FormatError(where + ": token count for '" + name + "' outside [0, total_tokens]");
    }
  }
  if (!(p.sentiment_polarity >= -1.0 && p.sentiment_polarity <= 1.0)) {
    throw FormatError(where + ": sentiment_polarity outside [-1, 1]");
  }
  for (const auto& v : {p.image_brightness, p.image_warmth}) {
    if (v && !(*v >= 0.0 && *v <= 1.0)) throw FormatError(where + ": image score outside [0, 1]");
  }
  if (p.image_brightness.has_value() != p.image_warmth.has_value()) {
    throw FormatError(where + ": image_brightness and image_warmth must be given together");
  }
}

void validate_stress(const StressPeriod& s, const std::string& user_id) {
  if ((s.end_day - s.start_day).count() <= 5) {
    throw FormatError("user " + user_id + ": stress period " + format_date(s.start_day) + ".." +
                      format_date(s.end_day) + " is not longer than five days");
  }
  if (s.level != 1 && s.level != 2) {
    throw FormatError("user " + user_id + ": stress level must be 1 or 2");
  }
}

}  // namespace

void validate_cohort(const CohortDataset& data) {
  std::set<std::string> ids;
  for (const auto& u : data.users) {
    if (!ids.insert(u.user_id).second) {
      throw IntegrityError("duplicate user id " + u.user_id);
    }
    if (u.age_years && *u.age_years < 0) {
      throw FormatError("user " + u.user_id + ": negative age");
    }
    if (u.following_count < 0 || u.follower_count < 0 || u.interact_count < 0) {
      throw FormatError("user " + u.user_id + ": negative social count");
    }
    if (u.label < 0) throw FormatError("user " + u.user_id + ": negative label");
    for (std::size_t i = 0; i < u.posts.size(); ++i) {
      const auto& p = u.posts[i];
      if (p.user_id != u.user_id) {
        throw IntegrityError("post " + p.post_id + " belongs to " + p.user_id + ", listed under " +
                             u.user_id);
      }
      validate_post(p);
      if (i > 0 && p.timestamp < u.posts[i - 1].timestamp) {
        throw FormatError("user " + u.user_id + ": posts not in chronological order");
      }
    }
    for (const auto& s : u.stress_periods) validate_stress(s, u.user_id);
  }
  for (const auto& e : data.edges) {
    for (const auto& id : {e.src, e.dst}) {
      if (!ids.count(id)) throw IntegrityError("edge references unknown user " + id);
    }
  }
  for (const auto& [id, s] : data.split) {
    if (!ids.count(id)) throw IntegrityError("split references unknown user " + id);
  }
  for (const auto& id : ids) {
    if (!data.split.count(id)) throw IntegrityError("user " + id + " has no split assignment");
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json post_to_json(const PostRecord& p) {
  json j;
  j["post_id"] = p.post_id;
  j["user_id"] = p.user_id;
  j["timestamp"] = p.timestamp;
  j["hour"] = p.hour;
  j["text_embedding"] = p.text_embedding;
  const bool null_image =
      !p.has_image() && std::all_of(p.image_embedding.begin(), p.image_embedding.end(),
                                    [](double v) { return v == 0.0; });
  if (null_image) {
    j["image_embedding"] = nullptr;
  } else {
    j["image_embedding"] = p.image_embedding;
  }
  j["token_counts"] = p.token_counts;
  j["total_tokens"] = p.total_tokens;
  j["sentiment_polarity"] = p.sentiment_polarity;
  if (p.image_brightness) j["image_brightness"] = *p.image_brightness;
  if (p.image_warmth) j["image_warmth"] = *p.image_warmth;
  if (!p.text.empty()) j["text"] = p.text;
  return j;
}

Vector read_embedding(const json& j, std::size_t width, const std::string& where) {
  if (j.is_null()) return Vector(width, 0.0);
  if (!j.is_array()) throw FormatError(where + " is not an array");
  if (j.size() != width) {
    throw FormatError(where + " has width " + std::to_string(j.size()) + ", expected " +
                      std::to_string(width));
  }
  return j.get<Vector>();
}

PostRecord post_from_json(const json& j) {
  PostRecord p;
  p.post_id = j.at("post_id").get<std::string>();
  p.user_id = j.at("user_id").get<std::string>();
  p.timestamp = j.at("timestamp").get<std::int64_t>();
  p.hour = j.at("hour").get<int>();
  p.text_embedding = read_embedding(j.at("text_embedding"), kTextWidth,
                                    "post " + p.post_id + ": text_embedding");
  p.image_embedding = read_embedding(j.contains("image_embedding") ? j["image_embedding"] : json{},
                                     kImageWidth, "post " + p.post_id + ": image_embedding");
  if (j.contains("token_counts")) p.token_counts = j["token_counts"].get<std::map<std::string, int>>();
  p.total_tokens = j.at("total_tokens").get<int>();
  p.sentiment_polarity = j.value("sentiment_polarity", 0.0);
  if (j.contains("image_brightness")) p.image_brightness = j["image_brightness"].get<double>();
  if (j.contains("image_warmth")) p.image_warmth = j["image_warmth"].get<double>();
  if (j.contains("text")) p.text = j["text"].get<std::string>();
  return p;
}

json user_to_json(const UserRecord& u) {
  json j;
  j["user_id"] = u.user_id;
  j["gender"] = std::string(to_string(u.gender));
  j["age"] = u.age_years ? json(*u.age_years) : json(nullptr);
  j["location"] = std::string(to_string(u.location));
  json posts = json::array();
  for (const auto& p : u.posts) posts.push_back(p.post_id);
  j["posts"] = posts;
  json stress = json::array();
  for (const auto& s : u.stress_periods) {
    stress.push_back({{"start", format_date(s.start_day)},
                      {"end", format_date(s.end_day)},
                      {"level", s.level},
                      {"category", std::string(to_string(s.category))}});
  }
  j["stress_periods"] = stress;
  j["disorder"] = u.disorder_flag;
  j["attempt"] = u.attempt_flag;
  j["following"] = u.following_count;
  j["follower"] = u.follower_count;
  j["interact"] = u.interact_count;
  j["label"] = u.label;
  return j;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("missing file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

json parse_json_line(const std::string& line, const fs::path& path, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CohortDataset load_cohort(const fs::path& dir, std::vector<std::string>* warnings) {
  if (!fs::is_directory(dir)) throw LoadError("missing cohort directory: " + dir.string());
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  CohortDataset data;

  // posts first so users can reference them by id
  std::unordered_map<std::string, PostRecord> posts;
  {
    const auto path = dir / "posts.jsonl";
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const json j = parse_json_line(lines[i], path, i + 1);
      PostRecord p;
      try {
        p = post_from_json(j);
      } catch (const json::exception& e) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
      std::string id = p.post_id;
      if (!posts.emplace(id, std::move(p)).second) {
        throw IntegrityError("duplicate post id " + id);
      }
    }
  }

  {
    const auto path = dir / "users.jsonl";
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const json j = parse_json_line(lines[i], path, i + 1);
      UserRecord u;
      try {
        u.user_id = j.at("user_id").get<std::string>();
        u.gender = parse_gender(j.at("gender").get<std::string>());
        if (!j.at("age").is_null()) u.age_years = j["age"].get<int>();
        u.location = parse_location(j.at("location").get<std::string>());
        for (const auto& pid : j.at("posts")) {
          const auto id = pid.get<std::string>();
          auto it = posts.find(id);
          if (it == posts.end()) {
            throw IntegrityError("user " + u.user_id + " references unknown post " + id);
          }
          u.posts.push_back(std::move(it->second));
          posts.erase(it);
        }
        for (const auto& s : j.at("stress_periods")) {
          u.stress_periods.push_back({parse_date(s.at("start").get<std::string>()),
                                      parse_date(s.at("end").get<std::string>()),
                                      s.at("level").get<int>(),
                                      parse_stress_category(s.at("category").get<std::string>())});
        }
        u.disorder_flag = j.at("disorder").get<bool>();
        u.attempt_flag = j.at("attempt").get<bool>();
        u.following_count = j.at("following").get<std::int64_t>();
        u.follower_count = j.at("follower").get<std::int64_t>();
        u.interact_count = j.at("interact").get<std::int64_t>();
        u.label = j.at("label").get<int>();
      } catch (const json::exception& e) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
      std::stable_sort(u.posts.begin(), u.posts.end(),
                       [](const PostRecord& a, const PostRecord& b) {
                         return a.timestamp < b.timestamp;
                       });
      data.users.push_back(std::move(u));
    }
  }
  if (!posts.empty()) {
    // deterministic report: smallest leftover id
    std::string first = posts.begin()->first;
    for (const auto& [id, p] : posts) first = std::min(first, id);
    const auto& orphan = posts.at(first);
    throw IntegrityError("post " + first + " is not listed by any user (user_id " +
                         orphan.user_id + ")");
  }

  const auto ids = data.user_index();
  auto require_user = [&](const std::string& id, const std::string& where) {
    if (!ids.count(id)) throw IntegrityError(where + " references unknown user " + id);
  };

  {
    const auto path = dir / "edges.csv";
    const auto lines = read_lines(path);
    std::set<SocialEdge> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cells = split_csv(lines[i]);
      if (cells.size() != 2) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected src,dst");
      }
      SocialEdge e{cells[0], cells[1]};
      require_user(e.src, "edge");
      require_user(e.dst, "edge");
      if (e.src == e.dst) {
        warn("dropped self-loop edge on " + e.src);
        continue;
      }
      if (!seen.insert(e).second) {
        warn("collapsed duplicate edge " + e.src + "," + e.dst);
        continue;
      }
      data.edges.push_back(std::move(e));
    }
  }

  {
    const auto lex_dir = dir / "lexicons";
    if (!fs::is_directory(lex_dir)) throw LoadError("missing directory: " + lex_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(lex_dir)) {
      if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::map<std::string, double> entries;
      const auto lines = read_lines(path);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos) {
          entries[lines[i]] = 1.0;
          continue;
        }
        const std::string weight = lines[i].substr(tab + 1);
        double w = 0.0;
        if (std::from_chars(weight.data(), weight.data() + weight.size(), w).ec != std::errc{}) {
          throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": bad weight");
        }
        entries[lines[i].substr(0, tab)] = w;
      }
      data.lexicons.emplace_back(path.stem().string(), std::move(entries));
    }
  }

  {
    const auto path = dir / "split.csv";
    const auto lines = read_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const auto cells = split_csv(lines[i]);
      if (cells.size() != 2) {
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected user_id,split");
      }
      require_user(cells[0], "split");
      data.split[cells[0]] = parse_split(cells[1]);
    }
  }

  validate_cohort(data);
  return data;
}

void save_cohort(const CohortDataset& data, const fs::path& dir) {
  validate_cohort(data);
  fs::create_directories(dir / "lexicons");

  std::string users_text;
  std::string posts_text;
  for (const auto& u : data.users) {
    users_text += user_to_json(u).dump();
    users_text += '\n';
    for (const auto& p : u.posts) {
      posts_text += post_to_json(p).dump();
      posts_text += '\n';
    }
  }
  write_file_atomic(dir / "users.jsonl", users_text);
  write_file_atomic(dir / "posts.jsonl", posts_text);

  std::string edges_text = "src,dst\n";
  for (const auto& e : data.edges) edges_text += e.src + "," + e.dst + "\n";
  write_file_atomic(dir / "edges.csv", edges_text);

  for (const auto& lex : data.lexicons) {
    std::string text;
    for (const auto& [phrase, weight] : lex.entries()) {
      text += phrase + "\t" + format_double(weight) + "\n";
    }
    write_file_atomic(dir / "lexicons" / (lex.name() + ".tsv"), text);
  }

  std::string split_text = "user_id,split\n";
  for (const auto& u : data.users) {
    auto it = data.split.find(u.user_id);
    split_text += u.user_id + "," + std::string(to_string(it->second)) + "\n";
  }
  write_file_atomic(dir / "split.csv", split_text);
}

}  // namespace riskgraph
