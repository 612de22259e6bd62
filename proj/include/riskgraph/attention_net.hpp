#pragma once

#include <span>
#include <vector>

#include "riskgraph/kg_builder.hpp"
#include "riskgraph/random.hpp"
#include "riskgraph/tensor.hpp"

namespace riskgraph {

inline constexpr std::size_t kAttentionHiddenWidth = 60;

enum class Aggregation { sigmoid, elu };

struct AttentionConfig {
  std::size_t property_width = 60;  // D
  std::size_t hidden_width = kAttentionHiddenWidth;
  std::size_t class_count = 2;      // C
  bool property_attention = true;
  bool neighbour_attention = true;
  Aggregation aggregation = Aggregation::sigmoid;

  bool operator==(const AttentionConfig&) const = default;
};

struct AttentionParams {
  Matrix w1;  // D x D   property attention
  Vector b1;  // D
  Matrix w2;  // D x H   hidden state
  Vector b2;  // H
  Vector w3;  // 2H      neighbour coefficient
  double b3 = 0.0;
  Matrix w4;  // H x H   final representation
  Vector b4;  // H
  Matrix w5;  // H x C   classifier head
  Vector b5;  // C

  AttentionParams() = default;
  explicit AttentionParams(const AttentionConfig& config);
  static AttentionParams initialized(const AttentionConfig& config, Rng& rng);

  void check(const AttentionConfig& config) const;
  void set_zero();

  bool operator==(const AttentionParams&) const = default;
};

using AttentionGradients = AttentionParams;

struct PropertyAttention {
  Vector p_prime;
  Vector alpha;
};

struct NeighbourScores {
  Vector coeffs;
  Vector betas;
};

struct Classification {
  Vector r;
  Vector logits;
  Vector probs;
  std::size_t predicted = 0;
};

PropertyAttention property_attention(std::span<const double> p, const AttentionParams& params);
Vector hidden_state(std::span<const double> p_prime, const AttentionParams& params);
NeighbourScores neighbour_scores(std::span<const double> h_u,
                                 std::span<const Vector> neighbour_hiddens,
                                 const AttentionParams& params);
Vector aggregate(std::span<const double> h_u, std::span<const Vector> neighbour_hiddens,
                 std::span<const double> betas, Aggregation activation = Aggregation::sigmoid);
Classification classify(std::span<const double> h_prime, const AttentionParams& params);

Vector softmax(std::span<const double> logits);

/// Per-node half of the network: P_u -> (alpha, P'_u) -> h_u.
struct NodeState {
  Vector p;
  Vector alpha;  // uniform placeholder when property attention is disabled
  Vector p_prime;
  Vector h;
};

NodeState encode_node(std::span<const double> p, const AttentionParams& params,
                      const AttentionConfig& config);

struct ForwardTrace {
  NodeState center;
  std::vector<NodeState> neighbours;
  std::vector<std::size_t> neighbour_ids;  // graph indices, parallel to `neighbours`
  Vector coeffs;
  Vector betas;
  Vector pre_aggregation;  // sum(beta * h_nb) + h_u
  Vector h_prime;
  Classification output;
};

ForwardTrace forward_from_states(NodeState center, std::vector<NodeState> neighbours,
                                 const AttentionParams& params, const AttentionConfig& config);

/// Full two-layer forward pass for one graph node over its 1-hop neighbours.
ForwardTrace forward_user(const KnowledgeGraph& graph, std::size_t user,
                          const AttentionParams& params, const AttentionConfig& config);

struct AttentionBackward {
  double loss = 0.0;
  Vector d_center_p;                // d loss / d P_u
  std::vector<Vector> d_neighbour_p;  // parallel to trace.neighbours
};

/// Weighted cross-entropy loss weight * -log p[label]; gradients accumulate into `grads`.
AttentionBackward backward_user(const ForwardTrace& trace, std::size_t label, double weight,
                                const AttentionParams& params, const AttentionConfig& config,
                                AttentionGradients& grads);

}  // namespace riskgraph
