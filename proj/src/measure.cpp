#include "pooltrace/measure.hpp"

#include <cmath>
#include <stdexcept>

namespace pooltrace {

Vec pool(const BinarySparse& A, const Vec& x) {
  if (x.size() != A.n) throw std::invalid_argument("pool: dimension mismatch");
  if ((x.array() < 0).any()) throw std::invalid_argument("pool: negative sample value");
  return matvec(A, x);
}

std::vector<uint8_t> measure_m1(const Vec& w, const BinaryChannelParams& params, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<uint8_t> y(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    double p_one = w[i] > 0 ? 1.0 - params.p_false_neg : params.p_false_pos;
    y[i] = unif(rng) < p_one ? 1 : 0;
  }
  return y;
}

Vec measure_m2(const Vec& w, const MultiplicativeChannelParams& params, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(params.sigma2));
  Vec y(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    // multiplicative noise preserves zeros exactly
    y[i] = w[i] == 0 ? 0.0 : w[i] * std::pow(1.0 + params.q_a, gauss(rng));
  }
  return y;
}

}  // namespace pooltrace
