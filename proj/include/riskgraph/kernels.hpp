#pragma once

// Dense linear-algebra kernels used by the post encoder and the attention
// network. Every kernel exists twice: a serial reference and an OpenMP
// version that partitions only over output rows, so both produce
// bit-identical results for any thread count.

#include <span>

#include "riskgraph/tensor.hpp"

namespace riskgraph::kernels {

double dot(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

Matrix transpose(const Matrix& m);

namespace serial {

// out = a * b^T + bias (bias broadcast over rows, may be empty)
void matmul_nt(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out);

// grad += d^T * x
void accumulate_tn(const Matrix& d, const Matrix& x, Matrix& grad);

// y = w * x
void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);

// y += w^T * x
void matvec_t_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y);

// m += a (outer) b
void outer_accumulate(std::span<const double> a, std::span<const double> b, Matrix& m);

}  // namespace serial

namespace parallel {

void matmul_nt(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out);
void accumulate_tn(const Matrix& d, const Matrix& x, Matrix& grad);
void matvec(const Matrix& w, std::span<const double> x, std::span<double> y);
void matvec_t_accumulate(const Matrix& w, std::span<const double> x, std::span<double> y);
void outer_accumulate(std::span<const double> a, std::span<const double> b, Matrix& m);

}  // namespace parallel

// Caps OpenMP worker count for the parallel kernels; 0 leaves the runtime default.
void set_thread_count(int threads);
int thread_count();

}  // namespace riskgraph::kernels
