#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pooltrace {

using Vec = Eigen::VectorXd;

/// Sparse view of a binary matrix: per-row and per-column lists of the
/// positions holding a 1. All decode-side products (Ax, A^T u) go through
/// this structure.
struct BinarySparse {
  int m = 0;
  int n = 0;
  std::vector<std::vector<int>> row_cols;  // row i -> columns with a 1
  std::vector<std::vector<int>> col_rows;  // column j -> rows with a 1

  static BinarySparse from_dense(const std::vector<uint8_t>& bits, int m, int n);
  std::size_t nnz() const;
};

// Serial reference kernels. The OpenMP versions must agree with these
// exactly (pure additions of the same terms per output coordinate).
void matvec_serial(const BinarySparse& A, const double* x, double* y);
void rmatvec_serial(const BinarySparse& A, const double* u, double* v);

void matvec_omp(const BinarySparse& A, const double* x, double* y);
void rmatvec_omp(const BinarySparse& A, const double* u, double* v);

/// Process-wide switch between the serial and OpenMP kernels.
/// Defaults to parallel when compiled with OpenMP.
void set_parallel_kernels(bool enabled);
bool parallel_kernels_enabled();

void matvec(const BinarySparse& A, const Vec& x, Vec& y);
void rmatvec(const BinarySparse& A, const Vec& u, Vec& v);

Vec matvec(const BinarySparse& A, const Vec& x);
Vec rmatvec(const BinarySparse& A, const Vec& u);

}  // namespace pooltrace
