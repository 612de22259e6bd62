#include "riskgraph/model.hpp"

#include <bit>
#include <map>

#include <json.hpp>

#include "riskgraph/io_util.hpp"

namespace riskgraph {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "PKGR";

class Writer {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("model file truncated while reading ") + what);
    }
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* what) {
    auto s = bytes(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  std::uint64_t u64(const char* what) {
    auto s = bytes(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  double f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::vector<std::uint64_t> dims_of(const Matrix& m) { return {m.rows(), m.cols()}; }
std::vector<std::uint64_t> dims_of(const Vector& v) { return {v.size()}; }

std::string_view to_string(Aggregation a) { return a == Aggregation::sigmoid ? "sigmoid" : "elu"; }

Aggregation parse_aggregation(std::string_view s) {
  if (s == "sigmoid") return Aggregation::sigmoid;
  if (s == "elu") return Aggregation::elu;
  throw FormatError("unknown aggregation '" + std::string(s) + "'");
}

json features_json(const FeatureConfig& f) {
  json disabled = json::array();
  for (Category c : f.disabled_categories) disabled.push_back(std::string(to_string(c)));
  return {{"disabled_categories", disabled},
          {"without_kg", f.without_kg},
          {"pad_to_61", f.pad_to_61},
          {"max_age", f.max_age},
          {"log_interactions", f.log_interactions},
          {"hour_mode", f.hour_mode == HourMode::normalized ? "normalized" : "raw"},
          {"max_posts", f.max_posts},
          {"zeroed_properties", f.zeroed_properties}};
}

FeatureConfig features_from(const json& j) {
  FeatureConfig f;
  for (const auto& c : j.at("disabled_categories")) {
    f.disabled_categories.insert(parse_category(c.get<std::string>()));
  }
  f.without_kg = j.at("without_kg").get<bool>();
  f.pad_to_61 = j.at("pad_to_61").get<bool>();
  f.max_age = j.at("max_age").get<int>();
  f.log_interactions = j.at("log_interactions").get<bool>();
  f.hour_mode = j.at("hour_mode").get<std::string>() == "raw" ? HourMode::raw : HourMode::normalized;
  f.max_posts = j.at("max_posts").get<std::size_t>();
  f.zeroed_properties = j.at("zeroed_properties").get<std::set<std::string>>();
  return f;
}

}  // namespace

std::string features_to_json(const FeatureConfig& features) { return features_json(features).dump(); }

FeatureConfig features_from_json(std::string_view text) {
  try {
    return features_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed feature config: ") + e.what());
  }
}

Model Model::initialized(const FeatureConfig& features, std::size_t class_count,
                         std::size_t lstm_hidden, std::size_t attention_hidden,
                         Aggregation aggregation, bool property_attention,
                         bool neighbour_attention, Rng& rng) {
  Model m;
  m.features = features;
  m.layout = PropertyLayout::build(features);
  m.attention.property_width = m.layout.total_width();
  m.attention.hidden_width = attention_hidden;
  m.attention.class_count = class_count;
  m.attention.aggregation = aggregation;
  m.attention.property_attention = property_attention && !features.without_kg;
  m.attention.neighbour_attention = neighbour_attention && !features.without_kg;
  Rng lstm_rng = rng.fork(1);
  Rng attn_rng = rng.fork(2);
  m.lstm = LstmParams::initialized(kPostInputWidth, lstm_hidden, kPostBehaviorWidth, lstm_rng);
  m.attn = AttentionParams::initialized(m.attention, attn_rng);
  return m;
}

void Model::check() const {
  require_shape(attention.property_width == layout.total_width(),
                "model attention width " + std::to_string(attention.property_width) +
                    " differs from layout width " + std::to_string(layout.total_width()));
  attn.check(attention);
  require_shape(lstm.input_width() == kPostInputWidth && lstm.output_width() == kPostBehaviorWidth &&
                    lstm.w_ih.rows() == 4 * lstm.hidden_width() &&
                    lstm.w_hh.rows() == 4 * lstm.hidden_width() &&
                    lstm.bias.size() == 4 * lstm.hidden_width() &&
                    lstm.w_out.rows() == lstm.hidden_width() &&
                    lstm.b_out.size() == kPostBehaviorWidth,
                "post encoder tensor shapes");
}

std::vector<TensorRef> tensors(Model& m) {
  std::vector<TensorRef> out;
  auto add = [&out](std::string name, auto& t) {
    out.push_back({std::move(name), dims_of(t), std::span<double>(t.data(), t.size())});
  };
  auto add_m = [&out](std::string name, Matrix& t) {
    out.push_back({std::move(name), dims_of(t), t.flat()});
  };
  add_m("lstm.w_ih", m.lstm.w_ih);
  add_m("lstm.w_hh", m.lstm.w_hh);
  add("lstm.bias", m.lstm.bias);
  add_m("lstm.w0", m.lstm.w_out);
  add("lstm.b0", m.lstm.b_out);
  add_m("attn.w1", m.attn.w1);
  add("attn.b1", m.attn.b1);
  add_m("attn.w2", m.attn.w2);
  add("attn.b2", m.attn.b2);
  add("attn.w3", m.attn.w3);
  out.push_back({"attn.b3", {1}, std::span<double>(&m.attn.b3, 1)});
  add_m("attn.w4", m.attn.w4);
  add("attn.b4", m.attn.b4);
  add_m("attn.w5", m.attn.w5);
  add("attn.b5", m.attn.b5);
  return out;
}

std::string serialize_model(const Model& model) {
  model.check();
  Model& m = const_cast<Model&>(model);  // tensors() only hands out views
  const auto refs = tensors(m);
  Writer w;
  w.bytes(kMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(refs.size()));
  for (const auto& t : refs) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u64(d);
    for (double v : t.values) w.f32(v);
  }
  const json meta{{"layout", json::parse(model.layout.to_json())},
                  {"features", features_json(model.features)},
                  {"attention",
                   {{"hidden_width", model.attention.hidden_width},
                    {"class_count", model.attention.class_count},
                    {"property_attention", model.attention.property_attention},
                    {"neighbour_attention", model.attention.neighbour_attention},
                    {"aggregation", to_string(model.attention.aggregation)}}},
                  {"lstm_hidden", model.lstm.hidden_width()}};
  const std::string text = meta.dump();
  w.u64(text.size());
  w.bytes(text);
  return w.take();
}

Model parse_model(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a model file: expected magic 'PKGR'");
  }
  r.bytes(kMagic.size(), "magic");
  const auto version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version) +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  const auto count = r.u32("tensor count");
  struct Raw {
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
  };
  std::map<std::string, Raw> raw;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.u32("tensor name length");
    std::string name(r.bytes(name_len, "tensor name"));
    const auto rank = r.u32("tensor rank");
    if (rank > 4) throw FormatError("tensor '" + name + "' has rank " + std::to_string(rank));
    Raw t;
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u64("tensor dims"));
      n *= t.dims.back();
    }
    if (n > r.remaining() / 4) throw FormatError("model file truncated in tensor '" + name + "'");
    t.values.resize(n);
    for (auto& v : t.values) v = r.f32("tensor data");
    if (!raw.emplace(name, std::move(t)).second) {
      throw FormatError("duplicate tensor '" + name + "' in model file");
    }
  }
  const auto meta_len = r.u64("metadata length");
  if (meta_len > r.remaining()) throw FormatError("model file truncated in metadata");
  const std::string meta_text(r.bytes(meta_len, "metadata"));

  Model m;
  try {
    const json meta = json::parse(meta_text);
    m.layout = PropertyLayout::from_json(meta.at("layout").dump());
    m.features = features_from(meta.at("features"));
    const auto& a = meta.at("attention");
    m.attention.property_width = m.layout.total_width();
    m.attention.hidden_width = a.at("hidden_width").get<std::size_t>();
    m.attention.class_count = a.at("class_count").get<std::size_t>();
    m.attention.property_attention = a.at("property_attention").get<bool>();
    m.attention.neighbour_attention = a.at("neighbour_attention").get<bool>();
    m.attention.aggregation = parse_aggregation(a.at("aggregation").get<std::string>());
    const auto lstm_hidden = meta.at("lstm_hidden").get<std::size_t>();
    m.lstm = LstmParams(kPostInputWidth, lstm_hidden, kPostBehaviorWidth);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model metadata: ") + e.what());
  }
  m.attn = AttentionParams(m.attention);

  for (auto& t : tensors(m)) {
    auto it = raw.find(t.name);
    if (it == raw.end()) throw FormatError("model file lacks tensor '" + t.name + "'");
    if (it->second.dims != t.dims) {
      throw FormatError("tensor '" + t.name + "' has unexpected shape for the stored layout");
    }
    std::copy(it->second.values.begin(), it->second.values.end(), t.values.begin());
    raw.erase(it);
  }
  if (!raw.empty()) throw FormatError("unknown tensor '" + raw.begin()->first + "' in model file");
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

}  // namespace riskgraph
