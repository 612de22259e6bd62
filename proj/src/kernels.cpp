#include "riskgraph/kernels.hpp"

#include <algorithm>
#include <cstddef>

#include <omp.h>

namespace riskgraph::kernels {
namespace {

constexpr std::size_t kColumnBlock = 64;  // b rows per matmul_nt block; multiple of 2
constexpr std::size_t kVecBlock = 256;    // output entries per matvec_t block
constexpr std::size_t kParallelMinWork = 1 << 14;

std::size_t block_count(std::size_t n, std::size_t block) { return (n + block - 1) / block; }

// Four dot products of two a-rows against two b-rows, sharing loads.
void dot_2x2(const double* a0, const double* a1, const double* b0, const double* b1,
             std::size_t k, double out[4]) {
  double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0;
#pragma omp simd reduction(+ : s00, s01, s10, s11)
  for (std::size_t t = 0; t < k; ++t) {
    s00 += a0[t] * b0[t];
    s01 += a0[t] * b1[t];
    s10 += a1[t] * b0[t];
    s11 += a1[t] * b1[t];
  }
  out[0] = s00;
  out[1] = s01;
  out[2] = s10;
  out[3] = s11;
}

double dot_raw(const double* a, const double* b, std::size_t k) {
  double s = 0.0;
#pragma omp simd reduction(+ : s)
  for (std::size_t t = 0; t < k; ++t) s += a[t] * b[t];
  return s;
}

void matmul_nt_block(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out,
                     std::size_t block) {
  const std::size_t j0 = block * kColumnBlock;
  const std::size_t j1 = std::min(b.rows(), j0 + kColumnBlock);
  const std::size_t k = a.cols();
  const std::size_t m = a.rows();
  std::size_t i = 0;
  for (; i + 1 < m; i += 2) {
    const double* a0 = a.row(i).data();
    const double* a1 = a.row(i + 1).data();
    std::size_t j = j0;
    for (; j + 1 < j1; j += 2) {
      double s[4];
      dot_2x2(a0, a1, b.row(j).data(), b.row(j + 1).data(), k, s);
      const double c0 = bias.empty() ? 0.0 : bias[j];
      const double c1 = bias.empty() ? 0.0 : bias[j + 1];
      out(i, j) = s[0] + c0;
      out(i, j + 1) = s[1] + c1;
      out(i + 1, j) = s[2] + c0;
      out(i + 1, j + 1) = s[3] + c1;
    }
    for (; j < j1; ++j) {
      const double c = bias.empty() ? 0.0 : bias[j];
      out(i, j) = dot_raw(a0, b.row(j).data(), k) + c;
      out(i + 1, j) = dot_raw(a1, b.row(j).data(), k) + c;
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = j0; j < j1; ++j) {
      out(i, j) = dot_raw(a.row(i).data(), b.row(j).data(), k) + (bias.empty() ? 0.0 : bias[j]);
    }
  }
}

void add_into(const Matrix& src, Matrix& dst, std::size_t r0, std::size_t r1) {
  for (std::size_t r = r0; r < r1; ++r) axpy(1.0, src.row(r), dst.row(r));
}

void matvec_t_block(const Matrix& w, std::span<const double> x, std::span<double> y,
                    std::size_t block) {
  const std::size_t c0 = block * kVecBlock;
  const std::size_t c1 = std::min(w.cols(), c0 + kVecBlock);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double xr = x[r];
    const double* wr = w.row(r).data();
#pragma omp simd
    for (std::size_t c = c0; c < c1; ++c) y[c] += xr * wr[c];
  }
}

void check_matmul_nt(const Matrix& a, const Matrix& b, std::span<const double> bias,
                     const Matrix& out) {
  require_shape(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
  require_shape(out.rows() == a.rows() && out.cols() == b.rows(), "matmul_nt: output shape");
  require_shape(bias.empty() || bias.size() == b.rows(), "matmul_nt: bias width");
}

void check_accumulate_tn(const Matrix& d, const Matrix& x, const Matrix& grad) {
  require_shape(d.rows() == x.rows(), "accumulate_tn: row counts differ");
  require_shape(grad.rows() == d.cols() && grad.cols() == x.cols(), "accumulate_tn: grad shape");
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_shape(a.size() == b.size(), "dot: length mismatch");
  return dot_raw(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_shape(x.size() == y.size(), "axpy: length mismatch");
  const std::size_t n = x.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  }
  return t;
}

namespace serial {

void matmul_nt(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
  check_matmul_nt(a, b, bias, out);
  const std::size_t blocks = block_count(b.rows(), kColumnBlock);
  for (std::size_t blk = 0; blk < blocks; ++blk) matmul_nt_block(a, b, bias, out, blk);
}

void accumulate_tn(const Matrix& d, const Matrix& x, Matrix& grad) {
  check_accumulate_tn(d, x, grad);
  const Matrix dt = transpose(d);
  const Matrix xt = transpose(x);
  Matrix product(grad.rows(), grad.cols());
  matmul_nt(dt, xt, {}, product);
  add_into(product, grad, 0, grad.rows());
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require_shape(w.cols() == x.size() && w.rows() == y.size(), "matvec: shape");
  for (std::size_t r = 0; r < w.rows(); ++r) y[r] = dot_raw(w.row(r).data(), x.data(), x.size());
}

void matvec_t_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require_shape(w.rows() == x.size() && w.cols() == y.size(), "matvec_t: shape");
  const std::size_t blocks = block_count(w.cols(), kVecBlock);
  for (std::size_t blk = 0; blk < blocks; ++blk) matvec_t_block(w, x, y, blk);
}

void outer_accumulate(std::span<const double> a, std::span<const double> b, Matrix& m) {
  require_shape(m.rows() == a.size() && m.cols() == b.size(), "outer: shape");
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(a[r], b, m.row(r));
}

}  // namespace serial

namespace parallel {

void matmul_nt(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
  check_matmul_nt(a, b, bias, out);
  const auto blocks = static_cast<std::ptrdiff_t>(block_count(b.rows(), kColumnBlock));
  const bool big = a.size() * b.rows() >= kParallelMinWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    matmul_nt_block(a, b, bias, out, static_cast<std::size_t>(blk));
  }
}

void accumulate_tn(const Matrix& d, const Matrix& x, Matrix& grad) {
  check_accumulate_tn(d, x, grad);
  const Matrix dt = transpose(d);
  const Matrix xt = transpose(x);
  Matrix product(grad.rows(), grad.cols());
  matmul_nt(dt, xt, {}, product);
  const auto rows = static_cast<std::ptrdiff_t>(grad.rows());
#pragma omp parallel for schedule(static) if (grad.size() >= kParallelMinWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    add_into(product, grad, static_cast<std::size_t>(r), static_cast<std::size_t>(r) + 1);
  }
}

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require_shape(w.cols() == x.size() && w.rows() == y.size(), "matvec: shape");
  const auto rows = static_cast<std::ptrdiff_t>(w.rows());
#pragma omp parallel for schedule(static) if (w.size() >= kParallelMinWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    y[r] = dot_raw(w.row(r).data(), x.data(), x.size());
  }
}

void matvec_t_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require_shape(w.rows() == x.size() && w.cols() == y.size(), "matvec_t: shape");
  const auto blocks = static_cast<std::ptrdiff_t>(block_count(w.cols(), kVecBlock));
#pragma omp parallel for schedule(static) if (w.size() >= kParallelMinWork)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    matvec_t_block(w, x, y, static_cast<std::size_t>(blk));
  }
}

void outer_accumulate(std::span<const double> a, std::span<const double> b, Matrix& m) {
  require_shape(m.rows() == a.size() && m.cols() == b.size(), "outer: shape");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) if (m.size() >= kParallelMinWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) axpy(a[r], b, m.row(r));
}

}  // namespace parallel

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace riskgraph::kernels
