#include "riskgraph/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "riskgraph/io_util.hpp"

namespace riskgraph {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t parse_count(std::string_view v) {
  if (!v.empty() && v[0] == '-') throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  return parse_number<std::size_t>(v);
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'");
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string b(bool v) { return v ? "true" : "false"; }

const std::vector<Key>& keys() {
  static const std::vector<Key> all{
      {"train", "epochs", [](TrainConfig& c, std::string_view v) { c.epochs = parse_count(v); },
       [](const TrainConfig& c) { return std::to_string(c.epochs); }},
      {"train", "learning_rate",
       [](TrainConfig& c, std::string_view v) {
         c.learning_rate = parse_number<double>(v);
         if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
       },
       [](const TrainConfig& c) { return format_double(c.learning_rate); }},
      {"train", "seed", [](TrainConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>(v); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"train", "batch_size", [](TrainConfig& c, std::string_view v) { c.batch_size = parse_count(v); },
       [](const TrainConfig& c) { return std::to_string(c.batch_size); }},
      {"train", "optimizer",
       [](TrainConfig& c, std::string_view v) {
         if (v == "adam") c.optimizer = Optimizer::adam;
         else if (v == "sgd") c.optimizer = Optimizer::sgd;
         else throw ConfigError("optimizer must be adam or sgd, got '" + std::string(v) + "'");
       },
       [](const TrainConfig& c) { return std::string(c.optimizer == Optimizer::adam ? "adam" : "sgd"); }},
      {"train", "beta1", [](TrainConfig& c, std::string_view v) { c.beta1 = parse_number<double>(v); },
       [](const TrainConfig& c) { return format_double(c.beta1); }},
      {"train", "beta2", [](TrainConfig& c, std::string_view v) { c.beta2 = parse_number<double>(v); },
       [](const TrainConfig& c) { return format_double(c.beta2); }},
      {"train", "epsilon", [](TrainConfig& c, std::string_view v) { c.epsilon = parse_number<double>(v); },
       [](const TrainConfig& c) { return format_double(c.epsilon); }},
      {"train", "patience", [](TrainConfig& c, std::string_view v) { c.patience = parse_count(v); },
       [](const TrainConfig& c) { return std::to_string(c.patience); }},
      {"train", "class_balanced", [](TrainConfig& c, std::string_view v) { c.class_balanced = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.class_balanced); }},
      {"model", "classes",
       [](TrainConfig& c, std::string_view v) {
         c.class_count = parse_count(v);
         if (c.class_count != 0 && c.class_count != 2 && c.class_count != 5) {
           throw ConfigError("classes must be 2 or 5 (or 0 to infer)");
         }
       },
       [](const TrainConfig& c) { return std::to_string(c.class_count); }},
      {"model", "lstm_hidden",
       [](TrainConfig& c, std::string_view v) {
         c.lstm_hidden = parse_count(v);
         if (c.lstm_hidden == 0) throw ConfigError("lstm_hidden must be positive");
       },
       [](const TrainConfig& c) { return std::to_string(c.lstm_hidden); }},
      {"model", "attention_hidden",
       [](TrainConfig& c, std::string_view v) {
         c.attention_hidden = parse_count(v);
         if (c.attention_hidden == 0) throw ConfigError("attention_hidden must be positive");
       },
       [](const TrainConfig& c) { return std::to_string(c.attention_hidden); }},
      {"model", "aggregation",
       [](TrainConfig& c, std::string_view v) {
         if (v == "sigmoid") c.aggregation = Aggregation::sigmoid;
         else if (v == "elu") c.aggregation = Aggregation::elu;
         else throw ConfigError("aggregation must be sigmoid or elu, got '" + std::string(v) + "'");
       },
       [](const TrainConfig& c) { return std::string(c.aggregation == Aggregation::sigmoid ? "sigmoid" : "elu"); }},
      {"ablation", "without_kg", [](TrainConfig& c, std::string_view v) { c.features.without_kg = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.features.without_kg); }},
      {"ablation", "disable_neighbour_attention",
       [](TrainConfig& c, std::string_view v) { c.disable_neighbour_attention = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.disable_neighbour_attention); }},
      {"ablation", "disable_property_attention",
       [](TrainConfig& c, std::string_view v) { c.disable_property_attention = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.disable_property_attention); }},
      {"ablation", "disable_categories",
       [](TrainConfig& c, std::string_view v) {
         c.features.disabled_categories.clear();
         for (const auto& name : split_list(v)) {
           try {
             c.features.disabled_categories.insert(parse_category(name));
           } catch (const Error&) {
             throw ConfigError("unknown category '" + name + "'");
           }
         }
       },
       [](const TrainConfig& c) {
         std::vector<std::string> names;
         for (Category cat : c.features.disabled_categories) names.emplace_back(to_string(cat));
         return join(names);
       }},
      {"features", "pad_to_61", [](TrainConfig& c, std::string_view v) { c.features.pad_to_61 = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.features.pad_to_61); }},
      {"features", "max_age",
       [](TrainConfig& c, std::string_view v) {
         c.features.max_age = parse_number<int>(v);
         if (c.features.max_age <= 0) throw ConfigError("max_age must be positive");
       },
       [](const TrainConfig& c) { return std::to_string(c.features.max_age); }},
      {"features", "log_interactions",
       [](TrainConfig& c, std::string_view v) { c.features.log_interactions = parse_bool(v); },
       [](const TrainConfig& c) { return b(c.features.log_interactions); }},
      {"features", "hour_mode",
       [](TrainConfig& c, std::string_view v) {
         if (v == "normalized") c.features.hour_mode = HourMode::normalized;
         else if (v == "raw") c.features.hour_mode = HourMode::raw;
         else throw ConfigError("hour_mode must be normalized or raw, got '" + std::string(v) + "'");
       },
       [](const TrainConfig& c) {
         return std::string(c.features.hour_mode == HourMode::normalized ? "normalized" : "raw");
       }},
      {"features", "max_posts",
       [](TrainConfig& c, std::string_view v) {
         c.features.max_posts = parse_count(v);
         if (c.features.max_posts == 0) throw ConfigError("max_posts must be positive");
       },
       [](const TrainConfig& c) { return std::to_string(c.features.max_posts); }},
      {"features", "zeroed_properties",
       [](TrainConfig& c, std::string_view v) {
         c.features.zeroed_properties.clear();
         std::set<std::string> known;
         for (const auto& p : property_catalog()) known.insert(p.name);
         for (const auto& name : split_list(v)) {
           if (!known.count(name)) throw ConfigError("unknown property '" + name + "'");
           c.features.zeroed_properties.insert(name);
         }
       },
       [](const TrainConfig& c) {
         return join({c.features.zeroed_properties.begin(), c.features.zeroed_properties.end()});
       }},
  };
  return all;
}

}  // namespace

TrainConfig parse_train_config(std::string_view text, std::set<std::string>* given) {
  TrainConfig config;
  std::set<std::string> sections;
  for (const auto& k : keys()) sections.insert(k.section);
  std::string section;
  std::set<const Key*> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto at = [line_no](const std::string& msg) {
      return ConfigError("line " + std::to_string(line_no) + ": " + msg);
    };
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw at("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!sections.count(section)) throw at("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == line.npos) throw at("expected 'key = value'");
    const std::string name(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const Key* key = nullptr;
    for (const auto& k : keys()) {
      if (k.name == name && (section.empty() || k.section == section)) key = &k;
    }
    if (!key) {
      throw at("unknown key '" + name + "'" + (section.empty() ? "" : " in [" + section + "]"));
    }
    if (!seen.insert(key).second) throw at("duplicate key '" + name + "'");
    if (given) given->insert(key->section + "." + key->name);
    if (value.empty()) throw at("missing value for '" + name + "'");
    try {
      key->set(config, value);
    } catch (const ConfigError& e) {
      throw at(e.what());
    }
  }
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path, std::set<std::string>* given) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const LoadError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  try {
    return parse_train_config(text, given);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::map<std::string, std::string> config_values(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& k : keys()) out[k.section + "." + k.name] = k.get(config);
  return out;
}

}  // namespace riskgraph
