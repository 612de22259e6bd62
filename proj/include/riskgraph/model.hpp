#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "riskgraph/attention_net.hpp"
#include "riskgraph/kg_builder.hpp"
#include "riskgraph/post_encoder.hpp"

namespace riskgraph {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Everything needed to rebuild inputs and run the network.
struct Model {
  FeatureConfig features;
  PropertyLayout layout;
  AttentionConfig attention;
  LstmParams lstm;
  AttentionParams attn;

  // Builds the layout from `features` and sizes every tensor; weights uniform
  // in +-1/sqrt(fan_in), biases zero.
  static Model initialized(const FeatureConfig& features, std::size_t class_count,
                           std::size_t lstm_hidden, std::size_t attention_hidden,
                           Aggregation aggregation, bool property_attention,
                           bool neighbour_attention, Rng& rng);

  bool uses_post_encoder() const { return layout.find("post_behavior") != nullptr; }
  void check() const;

  bool operator==(const Model&) const = default;
};

struct TensorRef {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::span<double> values;
};

// Every trainable tensor in file order. b3 is exposed as a length-1 tensor.
std::vector<TensorRef> tensors(Model& model);

std::string serialize_model(const Model& model);
Model parse_model(std::string_view bytes);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string features_to_json(const FeatureConfig& features);
FeatureConfig features_from_json(std::string_view text);

}  // namespace riskgraph
