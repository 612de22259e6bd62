#include "riskgraph/attention_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskgraph/kernels.hpp"

namespace riskgraph {

namespace {

using kernels::serial::matvec;
using kernels::serial::matvec_t_accumulate;
using kernels::serial::outer_accumulate;

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.flat()) v = rng.uniform(-bound, bound);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double activate(double x, Aggregation a) {
  if (a == Aggregation::sigmoid) return logistic(x);
  return x > 0.0 ? x : std::expm1(x);
}

// derivative expressed through input and output of the activation
double activate_grad(double x, double y, Aggregation a) {
  if (a == Aggregation::sigmoid) return y * (1.0 - y);
  return x > 0.0 ? 1.0 : y + 1.0;
}

// h_u + sum_k beta_k h_k, accumulated in a canonical order so that
// permuting the neighbours cannot change a single bit.
Vector residual_sum(std::span<const double> h_u, std::span<const Vector> hiddens,
                    std::span<const double> betas) {
  std::vector<std::size_t> order(betas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (betas[a] != betas[b]) return betas[a] < betas[b];
    return hiddens[a] < hiddens[b];
  });
  Vector s(h_u.begin(), h_u.end());
  for (std::size_t k : order) kernels::axpy(betas[k], hiddens[k], s);
  return s;
}

}  // namespace

AttentionParams::AttentionParams(const AttentionConfig& c)
    : w1(c.property_width, c.property_width),
      b1(c.property_width, 0.0),
      w2(c.property_width, c.hidden_width),
      b2(c.hidden_width, 0.0),
      w3(2 * c.hidden_width, 0.0),
      w4(c.hidden_width, c.hidden_width),
      b4(c.hidden_width, 0.0),
      w5(c.hidden_width, c.class_count),
      b5(c.class_count, 0.0) {}

AttentionParams AttentionParams::initialized(const AttentionConfig& c, Rng& rng) {
  AttentionParams p(c);
  const double d = static_cast<double>(c.property_width);
  const double h = static_cast<double>(c.hidden_width);
  fill_uniform(p.w1, 1.0 / std::sqrt(d), rng);
  fill_uniform(p.w2, 1.0 / std::sqrt(d), rng);
  for (double& v : p.w3) v = rng.uniform(-1.0 / std::sqrt(2.0 * h), 1.0 / std::sqrt(2.0 * h));
  fill_uniform(p.w4, 1.0 / std::sqrt(h), rng);
  fill_uniform(p.w5, 1.0 / std::sqrt(h), rng);
  return p;
}

void AttentionParams::check(const AttentionConfig& c) const {
  const std::size_t d = c.property_width, h = c.hidden_width, k = c.class_count;
  const bool ok = w1.rows() == d && w1.cols() == d && b1.size() == d && w2.rows() == d &&
                  w2.cols() == h && b2.size() == h && w3.size() == 2 * h && w4.rows() == h &&
                  w4.cols() == h && b4.size() == h && w5.rows() == h && w5.cols() == k &&
                  b5.size() == k;
  require_shape(ok, "attention parameters do not match D=" + std::to_string(d) +
                        ", hidden=" + std::to_string(h) + ", classes=" + std::to_string(k));
}

void AttentionParams::set_zero() {
  for (Matrix* m : {&w1, &w2, &w4, &w5}) m->set_zero();
  for (Vector* v : {&b1, &b2, &w3, &b4, &b5}) std::fill(v->begin(), v->end(), 0.0);
  b3 = 0.0;
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - top);
  // Summed in sorted order so the result does not depend on input order.
  Vector sorted = out;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  for (double& v : out) v /= total;
  return out;
}

PropertyAttention property_attention(std::span<const double> p, const AttentionParams& params) {
  require_shape(p.size() == params.w1.rows(),
                "property vector has width " + std::to_string(p.size()) + ", model expects " +
                    std::to_string(params.w1.rows()));
  Vector scores = params.b1;
  matvec_t_accumulate(params.w1, p, scores);
  PropertyAttention out;
  out.alpha = softmax(scores);
  out.p_prime.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out.p_prime[i] = p[i] * out.alpha[i];
  return out;
}

Vector hidden_state(std::span<const double> p_prime, const AttentionParams& params) {
  require_shape(p_prime.size() == params.w2.rows(), "hidden_state: input width");
  Vector h = params.b2;
  matvec_t_accumulate(params.w2, p_prime, h);
  for (double& v : h) v = std::tanh(v);
  return h;
}

NeighbourScores neighbour_scores(std::span<const double> h_u,
                                 std::span<const Vector> neighbour_hiddens,
                                 const AttentionParams& params) {
  const std::size_t h = h_u.size();
  require_shape(params.w3.size() == 2 * h, "neighbour_scores: hidden width");
  const std::span<const double> w_self(params.w3.data(), h);
  const std::span<const double> w_nb(params.w3.data() + h, h);
  const double self_term = kernels::dot(h_u, w_self);
  NeighbourScores out;
  for (const auto& nb : neighbour_hiddens) {
    require_shape(nb.size() == h, "neighbour_scores: neighbour hidden width");
    out.coeffs.push_back(std::tanh(self_term + kernels::dot(nb, w_nb) + params.b3));
  }
  out.betas = softmax(out.coeffs);
  return out;
}

Vector aggregate(std::span<const double> h_u, std::span<const Vector> neighbour_hiddens,
                 std::span<const double> betas, Aggregation activation) {
  require_shape(betas.size() == neighbour_hiddens.size(),
                "aggregate: " + std::to_string(betas.size()) + " betas for " +
                    std::to_string(neighbour_hiddens.size()) + " neighbours");
  Vector s = residual_sum(h_u, neighbour_hiddens, betas);
  for (double& v : s) v = activate(v, activation);
  return s;
}

Classification classify(std::span<const double> h_prime, const AttentionParams& params) {
  Classification out;
  out.r = params.b4;
  matvec_t_accumulate(params.w4, h_prime, out.r);
  for (double& v : out.r) v = std::tanh(v);
  out.logits = params.b5;
  matvec_t_accumulate(params.w5, out.r, out.logits);
  out.probs = softmax(out.logits);
  out.predicted = static_cast<std::size_t>(
      std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin());
  return out;
}

NodeState encode_node(std::span<const double> p, const AttentionParams& params,
                      const AttentionConfig& config) {
  NodeState s;
  s.p.assign(p.begin(), p.end());
  if (config.property_attention) {
    auto pa = property_attention(p, params);
    s.alpha = std::move(pa.alpha);
    s.p_prime = std::move(pa.p_prime);
  } else {
    require_shape(p.size() == params.w2.rows(), "property vector width");
    s.alpha.assign(p.size(), 1.0 / static_cast<double>(p.size()));
    s.p_prime = s.p;
  }
  s.h = hidden_state(s.p_prime, params);
  return s;
}

ForwardTrace forward_from_states(NodeState center, std::vector<NodeState> neighbours,
                                 const AttentionParams& params, const AttentionConfig& config) {
  ForwardTrace t;
  t.center = std::move(center);
  if (config.neighbour_attention) t.neighbours = std::move(neighbours);
  std::vector<Vector> hiddens;
  hiddens.reserve(t.neighbours.size());
  for (const auto& nb : t.neighbours) hiddens.push_back(nb.h);
  auto scores = neighbour_scores(t.center.h, hiddens, params);
  t.coeffs = std::move(scores.coeffs);
  t.betas = std::move(scores.betas);
  t.pre_aggregation = residual_sum(t.center.h, hiddens, t.betas);
  t.h_prime.resize(t.pre_aggregation.size());
  for (std::size_t i = 0; i < t.h_prime.size(); ++i) {
    t.h_prime[i] = activate(t.pre_aggregation[i], config.aggregation);
  }
  t.output = classify(t.h_prime, params);
  return t;
}

ForwardTrace forward_user(const KnowledgeGraph& graph, std::size_t user,
                          const AttentionParams& params, const AttentionConfig& config) {
  params.check(config);
  NodeState center = encode_node(graph.vector(user), params, config);
  std::vector<NodeState> neighbours;
  std::vector<std::size_t> ids;
  if (config.neighbour_attention) {
    for (std::size_t nb : graph.neighbours(user)) {
      neighbours.push_back(encode_node(graph.vector(nb), params, config));
      ids.push_back(nb);
    }
  }
  ForwardTrace t = forward_from_states(std::move(center), std::move(neighbours), params, config);
  t.neighbour_ids = std::move(ids);
  return t;
}

namespace {

// Backprop d loss / d h through hidden_state and property attention of one node.
Vector backward_node(const NodeState& node, std::span<const double> dh,
                     const AttentionParams& params, const AttentionConfig& config,
                     AttentionGradients& grads) {
  const std::size_t d = node.p.size();
  Vector da2(dh.size());
  for (std::size_t j = 0; j < dh.size(); ++j) da2[j] = dh[j] * (1.0 - node.h[j] * node.h[j]);
  outer_accumulate(node.p_prime, da2, grads.w2);
  kernels::axpy(1.0, da2, grads.b2);
  Vector dp_prime(d, 0.0);
  matvec(params.w2, da2, dp_prime);
  if (!config.property_attention) return dp_prime;

  Vector dp(d), dalpha(d);
  double weighted = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    dp[i] = dp_prime[i] * node.alpha[i];
    dalpha[i] = dp_prime[i] * node.p[i];
    weighted += node.alpha[i] * dalpha[i];
  }
  Vector da1(d);
  for (std::size_t i = 0; i < d; ++i) da1[i] = node.alpha[i] * (dalpha[i] - weighted);
  outer_accumulate(node.p, da1, grads.w1);
  kernels::axpy(1.0, da1, grads.b1);
  Vector via_scores(d, 0.0);
  matvec(params.w1, da1, via_scores);
  kernels::axpy(1.0, via_scores, dp);
  return dp;
}

}  // namespace

AttentionBackward backward_user(const ForwardTrace& trace, std::size_t label, double weight,
                                const AttentionParams& params, const AttentionConfig& config,
                                AttentionGradients& grads) {
  params.check(config);
  grads.check(config);
  const auto& probs = trace.output.probs;
  if (label >= probs.size() || trace.center.p.size() != config.property_width) {
    throw UsageError("backward_user: trace does not match the model configuration");
  }
  if (trace.neighbours.size() != trace.betas.size()) {
    throw UsageError("backward_user: neighbour/beta count mismatch in trace");
  }
  const std::size_t h = config.hidden_width;
  AttentionBackward out;
  out.loss = -weight * std::log(std::max(probs[label], std::numeric_limits<double>::min()));

  Vector dlogits(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) {
    dlogits[c] = weight * (probs[c] - (c == label ? 1.0 : 0.0));
  }
  outer_accumulate(trace.output.r, dlogits, grads.w5);
  kernels::axpy(1.0, dlogits, grads.b5);
  Vector dr(h, 0.0);
  matvec(params.w5, dlogits, dr);

  Vector da4(h);
  for (std::size_t j = 0; j < h; ++j) da4[j] = dr[j] * (1.0 - trace.output.r[j] * trace.output.r[j]);
  outer_accumulate(trace.h_prime, da4, grads.w4);
  kernels::axpy(1.0, da4, grads.b4);
  Vector dh_prime(h, 0.0);
  matvec(params.w4, da4, dh_prime);

  Vector ds(h);
  for (std::size_t j = 0; j < h; ++j) {
    ds[j] = dh_prime[j] *
            activate_grad(trace.pre_aggregation[j], trace.h_prime[j], config.aggregation);
  }

  Vector dh_center = ds;
  const std::size_t k = trace.neighbours.size();
  std::vector<Vector> dh_nb(k);
  if (k > 0) {
    Vector dbeta(k);
    for (std::size_t n = 0; n < k; ++n) {
      dh_nb[n].assign(h, 0.0);
      kernels::axpy(trace.betas[n], ds, dh_nb[n]);
      dbeta[n] = kernels::dot(ds, trace.neighbours[n].h);
    }
    double weighted = 0.0;
    for (std::size_t n = 0; n < k; ++n) weighted += trace.betas[n] * dbeta[n];
    const std::span<const double> w_self(params.w3.data(), h);
    const std::span<const double> w_nb(params.w3.data() + h, h);
    for (std::size_t n = 0; n < k; ++n) {
      const double dc = trace.betas[n] * (dbeta[n] - weighted);
      const double dq = dc * (1.0 - trace.coeffs[n] * trace.coeffs[n]);
      for (std::size_t j = 0; j < h; ++j) {
        grads.w3[j] += dq * trace.center.h[j];
        grads.w3[h + j] += dq * trace.neighbours[n].h[j];
      }
      grads.b3 += dq;
      kernels::axpy(dq, w_self, dh_center);
      kernels::axpy(dq, w_nb, dh_nb[n]);
    }
  }

  out.d_center_p = backward_node(trace.center, dh_center, params, config, grads);
  out.d_neighbour_p.reserve(k);
  for (std::size_t n = 0; n < k; ++n) {
    out.d_neighbour_p.push_back(backward_node(trace.neighbours[n], dh_nb[n], params, config, grads));
  }
  return out;
}

}  // namespace riskgraph
