#include "pooltrace/kernels.hpp"

#include <atomic>
#include <cassert>
#include <stdexcept>

namespace pooltrace {

BinarySparse BinarySparse::from_dense(const std::vector<uint8_t>& bits, int m, int n) {
  if (static_cast<std::size_t>(m) * n != bits.size())
    throw std::invalid_argument("BinarySparse: size mismatch");
  BinarySparse s;
  s.m = m;
  s.n = n;
  s.row_cols.resize(m);
  s.col_rows.resize(n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (bits[static_cast<std::size_t>(i) * n + j]) {
        s.row_cols[i].push_back(j);
        s.col_rows[j].push_back(i);
      }
  return s;
}

std::size_t BinarySparse::nnz() const {
  std::size_t t = 0;
  for (const auto& r : row_cols) t += r.size();
  return t;
}

void matvec_serial(const BinarySparse& A, const double* x, double* y) {
  for (int i = 0; i < A.m; ++i) {
    double acc = 0.0;
    for (int j : A.row_cols[i]) acc += x[j];
    y[i] = acc;
  }
}

void rmatvec_serial(const BinarySparse& A, const double* u, double* v) {
  for (int j = 0; j < A.n; ++j) {
    double acc = 0.0;
    for (int i : A.col_rows[j]) acc += u[i];
    v[j] = acc;
  }
}

void matvec_omp(const BinarySparse& A, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < A.m; ++i) {
    double acc = 0.0;
    for (int j : A.row_cols[i]) acc += x[j];
    y[i] = acc;
  }
}

void rmatvec_omp(const BinarySparse& A, const double* u, double* v) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < A.n; ++j) {
    double acc = 0.0;
    for (int i : A.col_rows[j]) acc += u[i];
    v[j] = acc;
  }
}

namespace {
#ifdef _OPENMP
std::atomic<bool> g_parallel{true};
#else
std::atomic<bool> g_parallel{false};
#endif
}  // namespace

void set_parallel_kernels(bool enabled) { g_parallel.store(enabled); }
bool parallel_kernels_enabled() { return g_parallel.load(); }

void matvec(const BinarySparse& A, const Vec& x, Vec& y) {
  assert(x.size() == A.n);
  y.resize(A.m);
  if (parallel_kernels_enabled())
    matvec_omp(A, x.data(), y.data());
  else
    matvec_serial(A, x.data(), y.data());
}

void rmatvec(const BinarySparse& A, const Vec& u, Vec& v) {
  assert(u.size() == A.m);
  v.resize(A.n);
  if (parallel_kernels_enabled())
    rmatvec_omp(A, u.data(), v.data());
  else
    rmatvec_serial(A, u.data(), v.data());
}

Vec matvec(const BinarySparse& A, const Vec& x) {
  Vec y;
  matvec(A, x, y);
  return y;
}

Vec rmatvec(const BinarySparse& A, const Vec& u) {
  Vec v;
  rmatvec(A, u, v);
  return v;
}

}  // namespace pooltrace
