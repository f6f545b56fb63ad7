#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pooltrace/kernels.hpp"

namespace pooltrace {

using Rng = std::mt19937_64;

/// m x n binary matrix with r ones per row and c ones per column (mr = nc).
struct PoolingMatrix {
  int m = 0, n = 0, r = 0, c = 0;
  std::vector<uint8_t> bits;  // row-major

  uint8_t at(int i, int j) const { return bits[static_cast<std::size_t>(i) * n + j]; }
  uint8_t& at(int i, int j) { return bits[static_cast<std::size_t>(i) * n + j]; }
  bool is_balanced() const;
  BinarySparse sparse() const { return BinarySparse::from_dense(bits, m, n); }
};

/// Gram matrix G = A^T A kept as dense small integers, with the running
/// psi value (squared Frobenius norm of G).
struct GramState {
  int n = 0;
  std::vector<int32_t> gram;  // n x n
  long long psi_value = 0;

  int32_t g(int i, int j) const { return gram[static_cast<std::size_t>(i) * n + j]; }
  int32_t& g(int i, int j) { return gram[static_cast<std::size_t>(i) * n + j]; }
  static GramState compute(const PoolingMatrix& A);
};

/// Symmetric zero-diagonal binary contact indicator: b(i,j) = 1 when
/// individuals i and j were in contact within the design window.
struct ContactWeights {
  int n = 0;
  std::vector<uint8_t> b;  // n x n

  uint8_t at(int i, int j) const { return b[static_cast<std::size_t>(i) * n + j]; }
  void set(int i, int j, uint8_t v);
  static ContactWeights from_edges(int n, const std::vector<std::pair<int, int>>& edges);
  void validate() const;
};

struct PsiBounds {
  long long lower = 0;
  long long upper = 0;
  bool lower_attainable = true;  // false when rc - c > n - 1
};

struct DesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PoolingMatrix canonical_matrix(int m, int n, int r, int c);
long long psi(const PoolingMatrix& A);
PsiBounds psi_bounds(int m, int n, int r, int c);
long long phi(const PoolingMatrix& A, const ContactWeights& b);

/// One random interchange step: locates a 2x2 submatrix [[1,0],[0,1]] (or
/// its mirror), swaps it, and updates the Gram state incrementally.
/// Returns delta psi, or nullopt when no interchangeable submatrix was
/// found within the retry cap.
std::optional<long long> find_and_apply_interchange(PoolingMatrix& A, GramState& gs, Rng& rng);

struct OptimizeReport {
  long long psi_initial = 0;
  long long psi_final = 0;
  long long phi_final = 0;
  int iterations = 0;
  int accepted = 0;
  bool optimal = false;
};

PoolingMatrix optimize_psi(int m, int n, int r, int c, long long N, Rng& rng,
                           OptimizeReport* report = nullptr);

/// Second design stage: random column swaps accepted on strict phi
/// decrease. Preserves psi exactly. Stops early at phi = 0.
void optimize_phi(PoolingMatrix& A, const ContactWeights& b, long long N2, Rng& rng,
                  OptimizeReport* report = nullptr);

enum class BaselineKind { bernoulli, column_balanced, random_balanced };

struct BaselineSpec {
  BaselineKind kind;
  double p = 0.5;  // bernoulli
  int c = 3;       // column_balanced / random_balanced
  int r = 0;       // random_balanced (derived from mr = nc when 0)
};

PoolingMatrix generate_baseline_matrix(const BaselineSpec& spec, int m, int n, Rng& rng);

// File format: header "m n r c", then m lines of n space-separated 0/1.
void save_matrix(const PoolingMatrix& A, const std::string& path);
PoolingMatrix load_matrix(const std::string& path, bool allow_unbalanced = false);

}  // namespace pooltrace
