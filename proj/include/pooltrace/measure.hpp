#pragma once

#include <vector>

#include "pooltrace/matrix.hpp"

namespace pooltrace {

struct BinaryChannelParams {
  double p_false_pos = 0.001;  // Pr(y=1 | w=0)
  double p_false_neg = 0.02;   // Pr(y=0 | w>0)
};

struct MultiplicativeChannelParams {
  double q_a = 0.95;     // PCR amplification factor
  double sigma2 = 0.01;  // log-domain noise variance
};

Vec pool(const BinarySparse& A, const Vec& x);

std::vector<uint8_t> measure_m1(const Vec& w, const BinaryChannelParams& params, Rng& rng);

Vec measure_m2(const Vec& w, const MultiplicativeChannelParams& params, Rng& rng);

}  // namespace pooltrace
