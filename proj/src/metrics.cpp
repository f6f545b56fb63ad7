#include "pooltrace/metrics.hpp"

#include <cmath>

namespace pooltrace {

MetricsRecord compute_metrics(const std::vector<uint8_t>& truth,
                              const std::vector<uint8_t>& predicted,
                              const Vec* x, const Vec* x_hat) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  MetricsRecord rec;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && predicted[i]) ++rec.tp;
    else if (truth[i] && !predicted[i]) ++rec.fn;
    else if (!truth[i] && predicted[i]) ++rec.fp;
    else ++rec.tn;
  }
  if (rec.tp + rec.fn > 0) {
    rec.fnr = static_cast<double>(rec.fn) / (rec.tp + rec.fn);
    rec.sensitivity = 1.0 - *rec.fnr;
  }
  if (rec.tn + rec.fp > 0) {
    rec.fpr = static_cast<double>(rec.fp) / (rec.tn + rec.fp);
    rec.specificity = 1.0 - *rec.fpr;
  }
  double denom = static_cast<double>(rec.tp + rec.fp) * (rec.tp + rec.fn) *
                 (rec.tn + rec.fp) * (rec.tn + rec.fn);
  if (denom > 0)
    rec.mcc = (static_cast<double>(rec.tp) * rec.tn - static_cast<double>(rec.fp) * rec.fn) /
              std::sqrt(denom);
  if (x && x_hat) {
    double nx = x->norm();
    if (nx > 0)
      rec.rrmse = (*x - *x_hat).norm() / nx;
    else if (x_hat->norm() == 0)
      rec.rrmse = 0.0;  // both zero
  }
  return rec;
}

RocCurve roc_sweep(const Vec& scores, const std::vector<uint8_t>& truth,
                   const std::vector<double>& grid_in) {
  if (static_cast<std::size_t>(scores.size()) != truth.size())
    throw std::invalid_argument("roc_sweep: length mismatch");
  long long pos = 0, neg = 0;
  for (uint8_t t : truth) (t ? pos : neg)++;
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_sweep: degenerate truth");

  std::vector<double> grid = grid_in;
  if (grid.empty()) {
    for (int t = 0; t <= 1000; ++t) grid.push_back(t / 1000.0);
  }
  RocCurve curve;
  double best = 1e300;
  for (double th : grid) {
    long long fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      bool pred = scores[i] > th;
      if (pred && !truth[i]) ++fp;
      if (!pred && truth[i]) ++fn;
    }
    RocPoint p{th, static_cast<double>(fp) / neg, static_cast<double>(fn) / pos};
    curve.points.push_back(p);
    if (p.fpr + p.fnr < best - 1e-15) {
      best = p.fpr + p.fnr;
      curve.operating_threshold = th;
      curve.operating_fpr = p.fpr;
      curve.operating_fnr = p.fnr;
    }
  }
  return curve;
}

}  // namespace pooltrace
