#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "pooltrace/kernels.hpp"
#include "pooltrace/matrix.hpp"

using namespace pooltrace;

namespace {

std::vector<uint8_t> random_bits(int m, int n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<uint8_t> bits(static_cast<std::size_t>(m) * n, 0);
  for (auto& b : bits) b = coin(rng) ? 1 : 0;
  return bits;
}

Eigen::MatrixXd to_dense(const std::vector<uint8_t>& bits, int m, int n) {
  Eigen::MatrixXd D(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) D(i, j) = bits[static_cast<std::size_t>(i) * n + j];
  return D;
}

Vec random_vec(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

Vec run_matvec_serial(const BinarySparse& A, const Vec& x) {
  Vec y(A.m);
  matvec_serial(A, x.data(), y.data());
  return y;
}

Vec run_matvec_omp(const BinarySparse& A, const Vec& x) {
  Vec y(A.m);
  matvec_omp(A, x.data(), y.data());
  return y;
}

Vec run_rmatvec_serial(const BinarySparse& A, const Vec& u) {
  Vec v(A.n);
  rmatvec_serial(A, u.data(), v.data());
  return v;
}

Vec run_rmatvec_omp(const BinarySparse& A, const Vec& u) {
  Vec v(A.n);
  rmatvec_omp(A, u.data(), v.data());
  return v;
}

}  // namespace

TEST_CASE("matvec matches dense oracle across shapes and densities") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 1 + static_cast<int>(rng() % 40);
    int n = 1 + static_cast<int>(rng() % 40);
    double p = (trial % 5) / 4.0;
    auto bits = random_bits(m, n, p, rng);
    Eigen::MatrixXd D = to_dense(bits, m, n);
    BinarySparse A = BinarySparse::from_dense(bits, m, n);
    Vec x = random_vec(n, rng);
    Vec y = random_vec(m, rng);
    Vec expect_w = D * x;
    Vec expect_z = D.transpose() * y;
    CHECK((run_matvec_serial(A, x) - expect_w).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((run_matvec_omp(A, x) - expect_w).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((run_rmatvec_serial(A, y) - expect_z).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((run_rmatvec_omp(A, y) - expect_z).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("serial and omp paths agree bit for bit on integer data") {
  Rng rng(23);
  auto bits = random_bits(300, 1000, 0.03, rng);
  BinarySparse A = BinarySparse::from_dense(bits, 300, 1000);
  Vec x(1000);
  for (int i = 0; i < 1000; ++i) x[i] = static_cast<double>(rng() % 100);
  CHECK(run_matvec_serial(A, x) == run_matvec_omp(A, x));
  Vec y(300);
  for (int i = 0; i < 300; ++i) y[i] = static_cast<double>(rng() % 100);
  CHECK(run_rmatvec_serial(A, y) == run_rmatvec_omp(A, y));
}

TEST_CASE("runtime dispatch toggle selects a working implementation") {
  Rng rng(5);
  auto bits = random_bits(20, 30, 0.3, rng);
  BinarySparse A = BinarySparse::from_dense(bits, 20, 30);
  Vec x = random_vec(30, rng);
  bool saved = parallel_kernels_enabled();
  set_parallel_kernels(false);
  Vec a = matvec(A, x);
  CHECK(!parallel_kernels_enabled());
  set_parallel_kernels(true);
  Vec b = matvec(A, x);
  set_parallel_kernels(saved);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a - to_dense(bits, 20, 30) * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nnz and structure bookkeeping") {
  std::vector<uint8_t> bits = {1, 0, 1,
                               0, 1, 0};
  BinarySparse A = BinarySparse::from_dense(bits, 2, 3);
  CHECK(A.m == 2);
  CHECK(A.n == 3);
  CHECK(A.nnz() == 3);
  CHECK(A.row_cols[0] == std::vector<int>{0, 2});
  CHECK(A.row_cols[1] == std::vector<int>{1});
  CHECK(A.col_rows[0] == std::vector<int>{0});
  CHECK(A.col_rows[1] == std::vector<int>{1});
  CHECK(A.col_rows[2] == std::vector<int>{0});
}

TEST_CASE("empty matrix edge cases") {
  std::vector<uint8_t> bits(20, 0);
  BinarySparse A = BinarySparse::from_dense(bits, 4, 5);
  CHECK(A.nnz() == 0);
  Vec x = Vec::Ones(5);
  Vec y = matvec(A, x);
  CHECK(y.isZero());
}
