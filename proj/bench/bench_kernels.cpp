#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include "pooltrace/kernels.hpp"
#include "pooltrace/matrix.hpp"

using namespace pooltrace;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  int m = argc > 1 ? std::atoi(argv[1]) : 2000;
  int n = argc > 2 ? std::atoi(argv[2]) : 20000;
  int c = 3;
  int r = n * c / m;
  int reps = 200;

  Rng rng(7);
  PoolingMatrix A = canonical_matrix(m, n, r, c);
  BinarySparse As = A.sparse();

  Vec x(n), y(m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  for (int i = 0; i < m; ++i) y[i] = u(rng);

  Vec w_serial(m), w_omp(m), z(n);
  matvec_serial(As, x.data(), w_serial.data());
  matvec_omp(As, x.data(), w_omp.data());
  double diff = (w_serial - w_omp).cwiseAbs().maxCoeff();

  std::cout << "matrix " << m << "x" << n << " (r=" << r << ", c=" << c << "), " << reps
            << " reps\n";
  std::cout << "serial/omp max abs diff: " << diff << "\n";
  double mv_s = time_ms([&] { matvec_serial(As, x.data(), w_serial.data()); }, reps);
  double mv_p = time_ms([&] { matvec_omp(As, x.data(), w_omp.data()); }, reps);
  double rmv_s = time_ms([&] { rmatvec_serial(As, y.data(), z.data()); }, reps);
  double rmv_p = time_ms([&] { rmatvec_omp(As, y.data(), z.data()); }, reps);
  std::cout << "matvec   serial " << mv_s << " ms, omp " << mv_p << " ms (speedup "
            << mv_s / mv_p << "x)\n";
  std::cout << "rmatvec  serial " << rmv_s << " ms, omp " << rmv_p << " ms (speedup "
            << rmv_s / rmv_p << "x)\n";
  return 0;
}
