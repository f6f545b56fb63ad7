#include "pooltrace/matrix.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pooltrace {

bool PoolingMatrix::is_balanced() const {
  for (int i = 0; i < m; ++i) {
    int s = 0;
    for (int j = 0; j < n; ++j) s += at(i, j);
    if (s != r) return false;
  }
  for (int j = 0; j < n; ++j) {
    int s = 0;
    for (int i = 0; i < m; ++i) s += at(i, j);
    if (s != c) return false;
  }
  return true;
}

GramState GramState::compute(const PoolingMatrix& A) {
  GramState gs;
  gs.n = A.n;
  gs.gram.assign(static_cast<std::size_t>(A.n) * A.n, 0);
  for (int i = 0; i < A.m; ++i) {
    // gather the support of row i, add outer product
    std::vector<int> cols;
    for (int j = 0; j < A.n; ++j)
      if (A.at(i, j)) cols.push_back(j);
    for (int a : cols)
      for (int b : cols) gs.g(a, b) += 1;
  }
  gs.psi_value = 0;
  for (int32_t v : gs.gram) gs.psi_value += static_cast<long long>(v) * v;
  return gs;
}

void ContactWeights::set(int i, int j, uint8_t v) {
  b[static_cast<std::size_t>(i) * n + j] = v;
  b[static_cast<std::size_t>(j) * n + i] = v;
}

ContactWeights ContactWeights::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  ContactWeights w;
  w.n = n;
  w.b.assign(static_cast<std::size_t>(n) * n, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw DesignError("ContactWeights: index out of range");
    if (i == j) throw DesignError("ContactWeights: self-loop");
    w.set(i, j, 1);
  }
  return w;
}

void ContactWeights::validate() const {
  for (int i = 0; i < n; ++i) {
    if (at(i, i) != 0) throw DesignError("ContactWeights: nonzero diagonal");
    for (int j = i + 1; j < n; ++j)
      if (at(i, j) != at(j, i)) throw DesignError("ContactWeights: asymmetric");
  }
}

PoolingMatrix canonical_matrix(int m, int n, int r, int c) {
  if (m <= 0 || n <= 0 || r <= 0 || c <= 0)
    throw DesignError("canonical_matrix: parameters must be positive");
  if (static_cast<long long>(m) * r != static_cast<long long>(n) * c)
    throw DesignError("canonical_matrix: mr != nc");
  if (r > n || c > m) throw DesignError("canonical_matrix: r > n or c > m");
  PoolingMatrix A;
  A.m = m;
  A.n = n;
  A.r = r;
  A.c = c;
  A.bits.assign(static_cast<std::size_t>(m) * n, 0);
  // 1 at (i,j) iff some x with (j-1)c < x <= jc satisfies i == x (mod m);
  // indices here are 1-based in the definition, 0-based in storage.
  for (int j = 1; j <= n; ++j)
    for (long long x = static_cast<long long>(j - 1) * c + 1; x <= static_cast<long long>(j) * c; ++x) {
      int i = static_cast<int>((x - 1) % m);
      A.at(i, j - 1) = 1;
    }
  return A;
}

long long psi(const PoolingMatrix& A) { return GramState::compute(A).psi_value; }

PsiBounds psi_bounds(int m, int n, int r, int c) {
  if (static_cast<long long>(m) * r != static_cast<long long>(n) * c)
    throw DesignError("psi_bounds: mr != nc");
  PsiBounds b;
  b.lower = static_cast<long long>(n) * c * (r + c - 1);
  b.upper = static_cast<long long>(n) * r * c * c;
  b.lower_attainable = (static_cast<long long>(r) * c - c) <= (n - 1);
  return b;
}

long long phi(const PoolingMatrix& A, const ContactWeights& b) {
  if (b.n != A.n) throw DesignError("phi: dimension mismatch");
  b.validate();
  GramState gs = GramState::compute(A);
  long long total = 0;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      if (b.at(i, j)) total += static_cast<long long>(gs.g(i, j)) * gs.g(i, j);
  return total;
}

namespace {

struct InterchangeMove {
  int i1, i2, j1, j2;  // A[i1][j1]=1, A[i2][j1]=0, A[i1][j2]=0, A[i2][j2]=1
  long long delta_psi;
  std::vector<int> d10, d01;  // columns where rows i1,i2 differ
};

// Propose a random interchange and compute delta psi from the Gram state
// without touching A or G. Returns false if the sampled row pair admits
// no interchange.
bool propose_interchange(const PoolingMatrix& A, const GramState& gs, Rng& rng,
                         InterchangeMove& mv) {
  std::uniform_int_distribution<int> row(0, A.m - 1);
  mv.i1 = row(rng);
  mv.i2 = row(rng);
  if (mv.i1 == mv.i2) return false;
  mv.d10.clear();
  mv.d01.clear();
  for (int j = 0; j < A.n; ++j) {
    uint8_t a = A.at(mv.i1, j), b = A.at(mv.i2, j);
    if (a && !b)
      mv.d10.push_back(j);
    else if (!a && b)
      mv.d01.push_back(j);
  }
  if (mv.d10.empty() || mv.d01.empty()) return false;
  mv.j1 = mv.d10[std::uniform_int_distribution<std::size_t>(0, mv.d10.size() - 1)(rng)];
  mv.j2 = mv.d01[std::uniform_int_distribution<std::size_t>(0, mv.d01.size() - 1)(rng)];
  // Column j1 loses row i1 and gains i2 (delta = -1 on d10, +1 on d01);
  // column j2 does the opposite. Off-diagonal pair (j1,j2) and the
  // diagonal are unchanged.
  long long delta = 0;
  for (int k : mv.d10) {
    if (k == mv.j1 || k == mv.j2) continue;
    delta += -(gs.g(mv.j1, k) - gs.g(mv.j2, k)) + 1;  // dk = -1: dk*(g1k-g2k+dk)
  }
  for (int k : mv.d01) {
    if (k == mv.j1 || k == mv.j2) continue;
    delta += (gs.g(mv.j1, k) - gs.g(mv.j2, k)) + 1;
  }
  mv.delta_psi = 4 * delta;
  return true;
}

void apply_interchange(PoolingMatrix& A, GramState& gs, const InterchangeMove& mv) {
  A.at(mv.i1, mv.j1) = 0;
  A.at(mv.i2, mv.j1) = 1;
  A.at(mv.i1, mv.j2) = 1;
  A.at(mv.i2, mv.j2) = 0;
  for (int k : mv.d10) {
    if (k == mv.j1 || k == mv.j2) continue;
    gs.g(mv.j1, k) -= 1;
    gs.g(k, mv.j1) -= 1;
    gs.g(mv.j2, k) += 1;
    gs.g(k, mv.j2) += 1;
  }
  for (int k : mv.d01) {
    if (k == mv.j1 || k == mv.j2) continue;
    gs.g(mv.j1, k) += 1;
    gs.g(k, mv.j1) += 1;
    gs.g(mv.j2, k) -= 1;
    gs.g(k, mv.j2) -= 1;
  }
  gs.psi_value += mv.delta_psi;
}

PoolingMatrix transpose(const PoolingMatrix& A) {
  PoolingMatrix T;
  T.m = A.n;
  T.n = A.m;
  T.r = A.c;
  T.c = A.r;
  T.bits.assign(A.bits.size(), 0);
  for (int i = 0; i < A.m; ++i)
    for (int j = 0; j < A.n; ++j) T.at(j, i) = A.at(i, j);
  return T;
}

}  // namespace

std::optional<long long> find_and_apply_interchange(PoolingMatrix& A, GramState& gs, Rng& rng) {
  constexpr int kRetries = 200;
  InterchangeMove mv;
  for (int t = 0; t < kRetries; ++t) {
    if (propose_interchange(A, gs, rng, mv)) {
      apply_interchange(A, gs, mv);
      return mv.delta_psi;
    }
  }
  return std::nullopt;
}

PoolingMatrix optimize_psi(int m, int n, int r, int c, long long N, Rng& rng,
                           OptimizeReport* report) {
  if (N < 1) throw DesignError("optimize_psi: N must be >= 1");
  // The walk costs O(#columns) per proposal, so run it on the transposed
  // problem when that has fewer columns; psi-optimality (all distinct
  // column dot products <= 1) transfers under transposition.
  const bool transposed = m < n;
  PoolingMatrix A = transposed ? canonical_matrix(n, m, c, r) : canonical_matrix(m, n, r, c);
  GramState gs = GramState::compute(A);
  const long long target = psi_bounds(A.m, A.n, A.r, A.c).lower;

  OptimizeReport rep;
  rep.psi_initial = gs.psi_value;
  InterchangeMove mv;
  long long iter = 0;
  for (; iter < N && gs.psi_value > target; ++iter) {
    if (!propose_interchange(A, gs, rng, mv)) continue;
    if (mv.delta_psi < 0) {
      apply_interchange(A, gs, mv);
      ++rep.accepted;
    }
  }
  rep.iterations = static_cast<int>(iter);
  rep.psi_final = gs.psi_value;
  rep.optimal = gs.psi_value == target;
  PoolingMatrix out = transposed ? transpose(A) : std::move(A);
  if (report) {
    report->psi_initial = rep.psi_initial;
    report->psi_final = ::pooltrace::psi(out);
    report->iterations = rep.iterations;
    report->accepted = rep.accepted;
    report->optimal = rep.optimal;
  }
  return out;
}

void optimize_phi(PoolingMatrix& A, const ContactWeights& b, long long N2, Rng& rng,
                  OptimizeReport* report) {
  if (b.n != A.n) throw DesignError("optimize_phi: dimension mismatch");
  b.validate();
  GramState gs = GramState::compute(A);
  std::vector<std::vector<int>> nbr(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      if (b.at(i, j)) nbr[i].push_back(j);

  auto phi_of = [&]() {
    long long total = 0;
    for (int i = 0; i < A.n; ++i)
      for (int j : nbr[i]) total += static_cast<long long>(gs.g(i, j)) * gs.g(i, j);
    return total;
  };
  long long cur = phi_of();

  OptimizeReport rep;
  rep.psi_initial = gs.psi_value;
  std::uniform_int_distribution<int> col(0, A.n - 1);
  long long iter = 0;
  for (; iter < N2 && cur > 0; ++iter) {
    int p = col(rng), q = col(rng);
    if (p == q) continue;
    // Swapping columns p,q relabels Gram rows/cols p<->q while b stays put.
    auto sq = [](int32_t v) { return static_cast<long long>(v) * v; };
    long long delta = 0;
    for (int k : nbr[p]) {
      if (k == p || k == q) continue;
      delta += sq(gs.g(q, k)) - sq(gs.g(p, k));
    }
    for (int k : nbr[q]) {
      if (k == p || k == q) continue;
      delta += sq(gs.g(p, k)) - sq(gs.g(q, k));
    }
    delta *= 2;
    if (delta < 0) {
      for (int i = 0; i < A.m; ++i) std::swap(A.at(i, p), A.at(i, q));
      for (int k = 0; k < A.n; ++k) std::swap(gs.g(p, k), gs.g(q, k));
      for (int k = 0; k < A.n; ++k) std::swap(gs.g(k, p), gs.g(k, q));
      cur += delta;
      ++rep.accepted;
    }
  }
  rep.iterations = static_cast<int>(iter);
  rep.psi_final = gs.psi_value;
  rep.phi_final = cur;
  rep.optimal = cur == 0;
  if (report) *report = rep;
}

PoolingMatrix generate_baseline_matrix(const BaselineSpec& spec, int m, int n, Rng& rng) {
  PoolingMatrix A;
  A.m = m;
  A.n = n;
  A.bits.assign(static_cast<std::size_t>(m) * n, 0);
  switch (spec.kind) {
    case BaselineKind::bernoulli: {
      std::bernoulli_distribution coin(spec.p);
      for (auto& bit : A.bits) bit = coin(rng) ? 1 : 0;
      A.r = A.c = 0;  // unbalanced in general
      break;
    }
    case BaselineKind::column_balanced: {
      if (spec.c > m) throw DesignError("generate_baseline_matrix: c > m");
      std::vector<int> rows(m);
      for (int i = 0; i < m; ++i) rows[i] = i;
      for (int j = 0; j < n; ++j) {
        std::shuffle(rows.begin(), rows.end(), rng);
        for (int t = 0; t < spec.c; ++t) A.at(rows[t], j) = 1;
      }
      A.c = spec.c;
      A.r = 0;
      break;
    }
    case BaselineKind::random_balanced: {
      int c = spec.c;
      int r = spec.r;
      if (r == 0) {
        if (static_cast<long long>(n) * c % m != 0)
          throw DesignError("generate_baseline_matrix: nc not divisible by m");
        r = static_cast<int>(static_cast<long long>(n) * c / m);
      }
      A = canonical_matrix(m, n, r, c);
      GramState gs = GramState::compute(A);
      const long long walk = 10LL * n * c;
      for (long long t = 0; t < walk; ++t) find_and_apply_interchange(A, gs, rng);
      break;
    }
  }
  return A;
}

void save_matrix(const PoolingMatrix& A, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DesignError("save_matrix: cannot open " + path);
  out << A.m << ' ' << A.n << ' ' << A.r << ' ' << A.c << '\n';
  for (int i = 0; i < A.m; ++i) {
    for (int j = 0; j < A.n; ++j) {
      if (j) out << ' ';
      out << static_cast<int>(A.at(i, j));
    }
    out << '\n';
  }
}

PoolingMatrix load_matrix(const std::string& path, bool allow_unbalanced) {
  std::ifstream in(path);
  if (!in) throw DesignError("load_matrix: cannot open " + path);
  PoolingMatrix A;
  if (!(in >> A.m >> A.n >> A.r >> A.c)) throw DesignError("load_matrix: bad header");
  if (A.m <= 0 || A.n <= 0) throw DesignError("load_matrix: bad dimensions");
  A.bits.assign(static_cast<std::size_t>(A.m) * A.n, 0);
  for (int i = 0; i < A.m; ++i)
    for (int j = 0; j < A.n; ++j) {
      int v;
      if (!(in >> v) || (v != 0 && v != 1)) throw DesignError("load_matrix: bad entry");
      A.at(i, j) = static_cast<uint8_t>(v);
    }
  if (!allow_unbalanced && !A.is_balanced())
    throw DesignError("load_matrix: matrix is not balanced (pass --allow-unbalanced to accept)");
  return A;
}

}  // namespace pooltrace
