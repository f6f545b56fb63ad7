#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "pooltrace/kernels.hpp"

namespace pooltrace {

struct MetricsRecord {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
  std::optional<double> fnr, fpr;          // absent when the denominator is zero
  std::optional<double> sensitivity, specificity;
  std::optional<double> mcc;
  std::optional<double> rrmse;             // absent when ||x|| = 0 and estimate is nonzero

  std::optional<double> total_error() const {
    if (fnr && fpr) return *fnr + *fpr;
    return std::nullopt;
  }
};

MetricsRecord compute_metrics(const std::vector<uint8_t>& truth,
                              const std::vector<uint8_t>& predicted,
                              const Vec* x = nullptr, const Vec* x_hat = nullptr);

struct RocPoint {
  double threshold;
  double fpr;
  double fnr;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double operating_threshold = 0.0;
  double operating_fpr = 0.0;
  double operating_fnr = 0.0;
};

/// Sweeps thresholds over `grid` (default: 0.001-spaced in [0,1]) and
/// picks the operating point minimizing FPR + FNR, smallest threshold on
/// ties.
RocCurve roc_sweep(const Vec& scores, const std::vector<uint8_t>& truth,
                   const std::vector<double>& grid = {});

}  // namespace pooltrace
