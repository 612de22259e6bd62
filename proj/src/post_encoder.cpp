#include "riskgraph/post_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskgraph/kernels.hpp"

namespace riskgraph {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.flat()) v = rng.uniform(-bound, bound);
}

// Sequence indices by descending length, so the sequences still running at
// step t are always a prefix.
std::vector<std::size_t> longest_first(const SequenceSpans& spans) {
  std::vector<std::size_t> order(spans.count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spans.length[a] > spans.length[b];
  });
  return order;
}

std::size_t active_at(const SequenceSpans& spans, const std::vector<std::size_t>& order,
                      std::size_t t) {
  std::size_t k = 0;
  while (k < order.size() && spans.length[order[k]] > t) ++k;
  return k;
}

SequenceSpans single(std::size_t rows) {
  SequenceSpans s;
  s.add(rows);
  return s;
}

}  // namespace

LstmParams::LstmParams(std::size_t input_width, std::size_t hidden_width,
                       std::size_t output_width)
    : w_ih(4 * hidden_width, input_width),
      w_hh(4 * hidden_width, hidden_width),
      bias(4 * hidden_width, 0.0),
      w_out(hidden_width, output_width),
      b_out(output_width, 0.0) {}

LstmParams LstmParams::initialized(std::size_t input_width, std::size_t hidden_width,
                                   std::size_t output_width, Rng& rng) {
  LstmParams p(input_width, hidden_width, output_width);
  fill_uniform(p.w_ih, 1.0 / std::sqrt(static_cast<double>(input_width)), rng);
  fill_uniform(p.w_hh, 1.0 / std::sqrt(static_cast<double>(hidden_width)), rng);
  fill_uniform(p.w_out, 1.0 / std::sqrt(static_cast<double>(hidden_width)), rng);
  return p;
}

LstmGradients::LstmGradients(const LstmParams& p, std::size_t rows)
    : w_ih(p.w_ih.rows(), p.w_ih.cols()),
      w_hh(p.w_hh.rows(), p.w_hh.cols()),
      bias(p.bias.size(), 0.0),
      w_out(p.w_out.rows(), p.w_out.cols()),
      b_out(p.b_out.size(), 0.0),
      input(rows, p.input_width()) {}

void LstmGradients::set_zero() {
  w_ih.set_zero();
  w_hh.set_zero();
  std::fill(bias.begin(), bias.end(), 0.0);
  w_out.set_zero();
  std::fill(b_out.begin(), b_out.end(), 0.0);
  input.set_zero();
}

void SequenceSpans::add(std::size_t rows) {
  require_shape(rows >= 1, "lstm needs at least one post row per sequence");
  first_row.push_back(this->rows());
  length.push_back(rows);
}

Matrix lstm_input_projection(const Matrix& stacked_rows, const LstmParams& params) {
  require_shape(stacked_rows.cols() == params.input_width(),
                "post rows have width " + std::to_string(stacked_rows.cols()) + ", expected " +
                    std::to_string(params.input_width()));
  Matrix projected(stacked_rows.rows(), params.w_ih.rows());
  kernels::parallel::matmul_nt(stacked_rows, params.w_ih, params.bias, projected);
  return projected;
}

Matrix lstm_encode_batch(const Matrix& projected, const SequenceSpans& spans,
                         const LstmParams& params, LstmCache& cache) {
  const std::size_t h = params.hidden_width();
  const std::size_t rows = spans.rows();
  require_shape(projected.cols() == 4 * h && projected.rows() == rows, "projected gate rows");
  cache.valid = false;
  cache.spans = spans;
  cache.gates = Matrix(rows, 4 * h);
  cache.cells = Matrix(rows, h);
  cache.hidden = Matrix(rows, h);

  const auto order = longest_first(spans);
  const std::size_t steps = order.empty() ? 0 : spans.length[order[0]];
  Matrix prev, recurrent;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t k = active_at(spans, order, t);
    if (t > 0) {
      prev = Matrix(k, h);
      for (std::size_t i = 0; i < k; ++i) {
        const auto src = cache.hidden.row(spans.first_row[order[i]] + t - 1);
        std::copy(src.begin(), src.end(), prev.row(i).begin());
      }
      recurrent = Matrix(k, 4 * h);
      kernels::parallel::matmul_nt(prev, params.w_hh, {}, recurrent);
    }
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t row = spans.first_row[order[i]] + t;
      const auto in = projected.row(row);
      auto gates = cache.gates.row(row);
      auto cell = cache.cells.row(row);
      auto hid = cache.hidden.row(row);
      for (std::size_t j = 0; j < h; ++j) {
        auto z = [&](std::size_t g) { return in[g * h + j] + (t > 0 ? recurrent(i, g * h + j) : 0.0); };
        const double ig = sigmoid(z(0));
        const double fg = sigmoid(z(1));
        const double gg = std::tanh(z(2));
        const double og = sigmoid(z(3));
        gates[j] = ig;
        gates[h + j] = fg;
        gates[2 * h + j] = gg;
        gates[3 * h + j] = og;
        const double prev_c = t == 0 ? 0.0 : cache.cells(row - 1, j);
        cell[j] = fg * prev_c + ig * gg;
        hid[j] = og * std::tanh(cell[j]);
      }
    }
  }

  Matrix last(spans.count(), h);
  for (std::size_t s = 0; s < spans.count(); ++s) {
    const auto src = cache.hidden.row(spans.first_row[s] + spans.length[s] - 1);
    std::copy(src.begin(), src.end(), last.row(s).begin());
  }
  cache.projection = Matrix(spans.count(), params.output_width());
  kernels::serial::matmul_nt(last, kernels::transpose(params.w_out), params.b_out,
                             cache.projection);
  cache.valid = true;
  Matrix out = cache.projection;
  for (double& v : out.flat()) v = std::max(0.0, v);
  return out;
}

void lstm_backward_batch(const Matrix& stacked_rows, const LstmParams& params,
                         const LstmCache& cache, const Matrix& upstream, LstmGradients& grads) {
  if (!cache.valid) throw UsageError("lstm_backward: no cached forward pass");
  const auto& spans = cache.spans;
  const std::size_t h = params.hidden_width();
  const std::size_t rows = spans.rows();
  require_shape(stacked_rows.rows() == rows && stacked_rows.cols() == params.input_width(),
                "lstm_backward: input rows do not match the cached forward pass");
  require_shape(upstream.rows() == spans.count() && upstream.cols() == params.output_width(),
                "lstm_backward: upstream shape");

  Matrix d_pre(spans.count(), params.output_width());
  Matrix last(spans.count(), h);
  for (std::size_t s = 0; s < spans.count(); ++s) {
    for (std::size_t j = 0; j < d_pre.cols(); ++j) {
      d_pre(s, j) = cache.projection(s, j) > 0.0 ? upstream(s, j) : 0.0;
      grads.b_out[j] += d_pre(s, j);
    }
    const auto src = cache.hidden.row(spans.first_row[s] + spans.length[s] - 1);
    std::copy(src.begin(), src.end(), last.row(s).begin());
  }
  kernels::serial::accumulate_tn(last, d_pre, grads.w_out);
  Matrix dh_last(spans.count(), h);
  kernels::serial::matmul_nt(d_pre, params.w_out, {}, dh_last);

  const auto order = longest_first(spans);
  const std::size_t steps = order.empty() ? 0 : spans.length[order[0]];
  const Matrix w_hh_t = kernels::transpose(params.w_hh);
  Matrix gate_grads(rows, 4 * h);
  Matrix dh(order.size(), h), dc(order.size(), h);  // indexed by position in `order`
  Matrix dz_step, dh_prev;
  for (std::size_t t = steps; t-- > 0;) {
    const std::size_t k = active_at(spans, order, t);
    dz_step = Matrix(k, 4 * h);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t s = order[i];
      const std::size_t row = spans.first_row[s] + t;
      if (spans.length[s] == t + 1) kernels::axpy(1.0, dh_last.row(s), dh.row(i));
      const auto gates = cache.gates.row(row);
      auto dz = gate_grads.row(row);
      for (std::size_t j = 0; j < h; ++j) {
        const double ig = gates[j], fg = gates[h + j], gg = gates[2 * h + j],
                     og = gates[3 * h + j];
        const double tc = std::tanh(cache.cells(row, j));
        const double prev_c = t == 0 ? 0.0 : cache.cells(row - 1, j);
        const double d_o = dh(i, j) * tc;
        const double d_c = dc(i, j) + dh(i, j) * og * (1.0 - tc * tc);
        dz[j] = d_c * gg * ig * (1.0 - ig);
        dz[h + j] = d_c * prev_c * fg * (1.0 - fg);
        dz[2 * h + j] = d_c * ig * (1.0 - gg * gg);
        dz[3 * h + j] = d_o * og * (1.0 - og);
        dc(i, j) = d_c * fg;
      }
      std::copy(dz.begin(), dz.end(), dz_step.row(i).begin());
    }
    if (t > 0) {
      dh_prev = Matrix(k, h);
      kernels::parallel::matmul_nt(dz_step, w_hh_t, {}, dh_prev);
      for (std::size_t i = 0; i < k; ++i) {
        std::copy(dh_prev.row(i).begin(), dh_prev.row(i).end(), dh.row(i).begin());
      }
    }
  }

  for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, gate_grads.row(r), grads.bias);
  Matrix hidden_prev(rows, h);
  for (std::size_t s = 0; s < spans.count(); ++s) {
    for (std::size_t t = 1; t < spans.length[s]; ++t) {
      const auto src = cache.hidden.row(spans.first_row[s] + t - 1);
      std::copy(src.begin(), src.end(), hidden_prev.row(spans.first_row[s] + t).begin());
    }
  }
  kernels::parallel::accumulate_tn(gate_grads, hidden_prev, grads.w_hh);
  kernels::parallel::accumulate_tn(gate_grads, stacked_rows, grads.w_ih);
  if (grads.input.rows() == rows) {
    Matrix dx(rows, params.input_width());
    kernels::parallel::matmul_nt(gate_grads, kernels::transpose(params.w_ih), {}, dx);
    for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, dx.row(r), grads.input.row(r));
  }
}

LstmForward lstm_forward(const Matrix& seq, const LstmParams& params, LstmCache* cache) {
  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  lstm_encode_batch(lstm_input_projection(seq, params), single(seq.rows()), params, c);
  LstmForward out;
  out.outputs = c.hidden;
  const auto last = c.hidden.row(c.hidden.rows() - 1);
  out.final.assign(last.begin(), last.end());
  return out;
}

Vector encode_post_behavior(const Matrix& seq, const LstmParams& params, LstmCache* cache) {
  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  const Matrix out =
      lstm_encode_batch(lstm_input_projection(seq, params), single(seq.rows()), params, c);
  return Vector(out.flat().begin(), out.flat().end());
}

Vector encode_empty_user(const LstmParams& params) {
  const Matrix zero_row(1, params.input_width(), 0.0);
  return encode_post_behavior(zero_row, params);
}

LstmGradients lstm_backward(const Matrix& seq, const LstmParams& params, const LstmCache& cache,
                            std::span<const double> upstream) {
  if (!cache.valid) throw UsageError("lstm_backward: no cached forward pass");
  require_shape(cache.spans.count() == 1 && seq.rows() == cache.hidden.rows(),
                "lstm_backward: sequence/cache length");
  require_shape(upstream.size() == params.output_width(), "lstm_backward: upstream width");
  LstmGradients grads(params, seq.rows());
  Matrix up(1, upstream.size());
  std::copy(upstream.begin(), upstream.end(), up.row(0).begin());
  lstm_backward_batch(seq, params, cache, up, grads);
  return grads;
}

}  // namespace riskgraph
