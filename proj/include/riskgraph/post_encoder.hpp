#pragma once

#include <span>
#include <vector>

#include "riskgraph/kg_builder.hpp"
#include "riskgraph/random.hpp"
#include "riskgraph/tensor.hpp"

namespace riskgraph {

inline constexpr std::size_t kLstmHiddenWidth = 300;

/// Single-layer LSTM (gate order input, forget, cell, output) followed by
/// ReLU(h_n * W0 + b0).
struct LstmParams {
  Matrix w_ih;   // 4H x I
  Matrix w_hh;   // 4H x H
  Vector bias;   // 4H
  Matrix w_out;  // H x O
  Vector b_out;  // O

  LstmParams() : LstmParams(kPostInputWidth, kLstmHiddenWidth, kPostBehaviorWidth) {}
  LstmParams(std::size_t input_width, std::size_t hidden_width, std::size_t output_width);

  // Uniform in +-1/sqrt(fan_in) per matrix, zero biases.
  static LstmParams initialized(std::size_t input_width, std::size_t hidden_width,
                                std::size_t output_width, Rng& rng);

  std::size_t input_width() const { return w_ih.cols(); }
  std::size_t hidden_width() const { return w_hh.cols(); }
  std::size_t output_width() const { return w_out.cols(); }

  bool operator==(const LstmParams&) const = default;
};

// Same shapes as LstmParams, plus the gradient w.r.t. the input rows.
struct LstmGradients {
  Matrix w_ih, w_hh;
  Vector bias;
  Matrix w_out;
  Vector b_out;
  Matrix input;  // left untouched when it has no rows

  explicit LstmGradients(const LstmParams& shape_of, std::size_t rows = 0);
  void set_zero();
};

/// Several sequences stacked row-wise; sequence s owns rows
/// [first_row[s], first_row[s] + length[s]).
struct SequenceSpans {
  std::vector<std::size_t> first_row;
  std::vector<std::size_t> length;

  void add(std::size_t rows);
  std::size_t count() const { return length.size(); }
  std::size_t rows() const { return first_row.empty() ? 0 : first_row.back() + length.back(); }
};

/// Forward values retained for the backward pass.
struct LstmCache {
  SequenceSpans spans;
  Matrix gates;       // rows x 4H, post-activation (i, f, g, o)
  Matrix cells;       // rows x H
  Matrix hidden;      // rows x H
  Matrix projection;  // sequences x O, pre-ReLU
  bool valid = false;
};

struct LstmForward {
  Matrix outputs;  // n x H
  Vector final;    // H
};

LstmForward lstm_forward(const Matrix& seq, const LstmParams& params, LstmCache* cache = nullptr);
Vector encode_post_behavior(const Matrix& seq, const LstmParams& params,
                            LstmCache* cache = nullptr);
Vector encode_empty_user(const LstmParams& params);

LstmGradients lstm_backward(const Matrix& seq, const LstmParams& params, const LstmCache& cache,
                            std::span<const double> upstream);

// Batched form used by the trainer. All sequences advance one step at a time,
// so each step's recurrent product is a single matrix product.
Matrix lstm_input_projection(const Matrix& stacked_rows, const LstmParams& params);
// Returns sequences x O post-behaviour vectors (after ReLU).
Matrix lstm_encode_batch(const Matrix& projected, const SequenceSpans& spans,
                         const LstmParams& params, LstmCache& cache);
// `upstream` is sequences x O. Accumulates every parameter gradient, and the
// input-row gradient when grads.input has stacked_rows.rows() rows.
void lstm_backward_batch(const Matrix& stacked_rows, const LstmParams& params,
                         const LstmCache& cache, const Matrix& upstream, LstmGradients& grads);

}  // namespace riskgraph
