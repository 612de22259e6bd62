#include <doctest.h>

#include <cstring>

#include "fixtures.hpp"
#include "riskgraph/io_util.hpp"
#include "riskgraph/model.hpp"

using namespace riskgraph;

namespace {

Model small_model(std::uint64_t seed, FeatureConfig features = {}, std::size_t classes = 2) {
  Rng rng(seed);
  return Model::initialized(features, classes, 6, 8, Aggregation::sigmoid, true, true, rng);
}

template <typename T>
T read_le(const std::string& bytes, std::size_t at) {
  T v{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

float read_f32(const std::string& bytes, std::size_t at) {
  const auto bits = read_le<std::uint32_t>(bytes, at);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void expect_format_error(const std::string& bytes, const std::string& needle) {
  try {
    parse_model(bytes);
    FAIL("expected FormatError containing " << needle);
  } catch (const FormatError& e) {
    INFO(e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("header and first record follow the documented byte layout") {
  const auto m = small_model(1);
  const auto bytes = serialize_model(m);
  CHECK(bytes.substr(0, 4) == "PKGR");
  CHECK(read_le<std::uint32_t>(bytes, 4) == kModelFormatVersion);
  CHECK(read_le<std::uint32_t>(bytes, 8) == 15);
  const auto name_len = read_le<std::uint32_t>(bytes, 12);
  CHECK(bytes.substr(16, name_len) == "lstm.w_ih");
  std::size_t at = 16 + name_len;
  CHECK(read_le<std::uint32_t>(bytes, at) == 2);
  CHECK(read_le<std::uint64_t>(bytes, at + 4) == 24);
  CHECK(read_le<std::uint64_t>(bytes, at + 12) == kPostInputWidth);
  at += 20;
  CHECK(read_f32(bytes, at) == static_cast<float>(m.lstm.w_ih(0, 0)));
  CHECK(read_f32(bytes, at + 4) == static_cast<float>(m.lstm.w_ih(0, 1)));
}

TEST_CASE("tensor names and order") {
  auto m = small_model(2);
  std::vector<std::string> names;
  for (const auto& t : tensors(m)) names.push_back(t.name);
  CHECK(names == std::vector<std::string>{"lstm.w_ih", "lstm.w_hh", "lstm.bias", "lstm.w0", "lstm.b0",
                                          "attn.w1", "attn.b1", "attn.w2", "attn.b2", "attn.w3",
                                          "attn.b3", "attn.w4", "attn.b4", "attn.w5", "attn.b5"});
}

TEST_CASE("round trip keeps config, layout and f32 values") {
  FeatureConfig f;
  f.disabled_categories = {Category::personal_information};
  f.zeroed_properties = {"attempt"};
  f.pad_to_61 = true;
  auto m = small_model(3, f, 5);
  const auto bytes = serialize_model(m);
  const auto back = parse_model(bytes);
  CHECK(back.features == m.features);
  CHECK(back.layout == m.layout);
  CHECK(back.attention == m.attention);
  CHECK(serialize_model(back) == bytes);
  auto a = tensors(m);
  auto mutable_back = back;
  auto b = tensors(mutable_back);
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].values.size(); ++i)
      CHECK(b[t].values[i] == static_cast<double>(static_cast<float>(a[t].values[i])));

  rgtest::TempDir dir("model");
  save_model(m, dir.path() / "m.pkgr");
  CHECK(read_file(dir.path() / "m.pkgr") == bytes);
  CHECK(load_model(dir.path() / "m.pkgr") == back);
}

TEST_CASE("without-KG models store a 30-wide layout") {
  FeatureConfig f;
  f.without_kg = true;
  const auto m = parse_model(serialize_model(small_model(4, f)));
  CHECK(m.layout.total_width() == 30);
  CHECK_FALSE(m.attention.neighbour_attention);
  CHECK_FALSE(m.attention.property_attention);
}

TEST_CASE("malformed files") {
  const auto good = serialize_model(small_model(5));
  std::string bad = good;
  bad[0] = 'X';
  expect_format_error(bad, "PKGR");
  expect_format_error("PK", "PKGR");

  bad = good;
  bad[4] = 2;
  expect_format_error(bad, "version");

  expect_format_error(good.substr(0, good.size() / 2), "truncated");
  expect_format_error(good.substr(0, good.size() - 3), "truncated");

  bad = good;
  bad[16 + 8] = 'X';  // lstm.w_ih -> lstm.w_iX
  expect_format_error(bad, "lacks tensor 'lstm.w_ih'");

  CHECK_THROWS_AS(load_model("/nonexistent/riskgraph/model.pkgr"), LoadError);
}
