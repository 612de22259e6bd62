#include <doctest.h>

#include "fixtures.hpp"
#include "riskgraph/kernels.hpp"

using namespace riskgraph;
using rgtest::random_matrix;
using rgtest::random_vector;

namespace {

Matrix naive_nt(const Matrix& a, const Matrix& b, const Vector& bias) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      long double s = bias.empty() ? 0.0L : bias[j];
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(j, k);
      out(i, j) = static_cast<double>(s);
    }
  return out;
}

void check_close(const Matrix& x, const Matrix& y, double tol = 1e-12) {
  REQUIRE(x.rows() == y.rows());
  REQUIRE(x.cols() == y.cols());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.flat()[i] == doctest::Approx(y.flat()[i]).epsilon(tol));
}

}  // namespace

TEST_CASE("matmul_nt matches a naive triple loop for odd and blocked shapes") {
  Rng rng(11);
  for (auto [m, n, k] : {std::tuple{1, 1, 1}, {3, 5, 7}, {7, 130, 33}, {64, 65, 300}}) {
    const auto a = random_matrix(m, k, rng);
    const auto b = random_matrix(n, k, rng);
    const auto bias = random_vector(n, rng);
    const auto expect = naive_nt(a, b, bias);
    Matrix s(m, n), p(m, n);
    kernels::serial::matmul_nt(a, b, bias, s);
    kernels::parallel::matmul_nt(a, b, bias, p);
    check_close(s, expect);
    CHECK(s == p);
    Matrix nb(m, n);
    kernels::serial::matmul_nt(a, b, {}, nb);
    check_close(nb, naive_nt(a, b, {}));
  }
}

TEST_CASE("accumulate_tn adds d^T x onto the gradient") {
  Rng rng(12);
  const auto d = random_matrix(9, 6, rng);
  const auto x = random_matrix(9, 4, rng);
  Matrix grad = random_matrix(6, 4, rng);
  Matrix expect = grad;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t r = 0; r < 9; ++r) expect(i, j) += d(r, i) * x(r, j);
  Matrix par = grad;
  kernels::serial::accumulate_tn(d, x, grad);
  kernels::parallel::accumulate_tn(d, x, par);
  check_close(grad, expect);
  CHECK(grad == par);
}

TEST_CASE("matvec, transposed matvec and outer products") {
  Rng rng(13);
  const auto w = random_matrix(5, 300, rng);
  const auto x = random_vector(300, rng);
  Vector y(5), yp(5);
  kernels::serial::matvec(w, x, y);
  kernels::parallel::matvec(w, x, yp);
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 300; ++c) s += w(r, c) * x[c];
    CHECK(y[r] == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK(y == yp);

  const auto v = random_vector(5, rng);
  Vector t(300, 1.0), tp(300, 1.0);
  kernels::serial::matvec_t_accumulate(w, v, t);
  kernels::parallel::matvec_t_accumulate(w, v, tp);
  for (std::size_t c = 0; c < 300; ++c) {
    double s = 1.0;
    for (std::size_t r = 0; r < 5; ++r) s += w(r, c) * v[r];
    CHECK(t[c] == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK(t == tp);

  Matrix m(5, 300), mp(5, 300);
  kernels::serial::outer_accumulate(v, x, m);
  kernels::parallel::outer_accumulate(v, x, mp);
  CHECK(m(3, 7) == doctest::Approx(v[3] * x[7]));
  CHECK(m == mp);
}

TEST_CASE("kernels reject mismatched shapes") {
  Matrix a(2, 3), b(4, 5), out(2, 4);
  CHECK_THROWS_AS(kernels::serial::matmul_nt(a, b, {}, out), ShapeError);
  Vector y(3);
  CHECK_THROWS_AS(kernels::parallel::matvec(a, Vector(2), y), ShapeError);
  CHECK_THROWS_AS(kernels::dot(Vector(2), Vector(3)), ShapeError);
}

TEST_CASE("transpose swaps indices") {
  Rng rng(14);
  const auto m = random_matrix(3, 7, rng);
  const auto t = kernels::transpose(m);
  REQUIRE(t.rows() == 7);
  CHECK(t(5, 2) == m(2, 5));
  CHECK(kernels::transpose(t) == m);
}
