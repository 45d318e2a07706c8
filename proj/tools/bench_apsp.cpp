// Compares the OpenMP Floyd-Warshall kernel against the serial reference
// on random endpoint graphs of increasing size.

#include <chrono>
#include <cstdio>
#include <random>

#include "gact/constraint_graph.hpp"

using clock_type = std::chrono::steady_clock;

static double time_ms(const std::function<void()>& fn) {
  const auto t0 = clock_type::now();
  fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

int main() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::printf("%8s %12s %12s %9s %8s\n", "n", "serial(ms)", "parallel(ms)",
              "speedup", "max|d|");
  for (int n : {32, 64, 128, 256, 512}) {
    Eigen::MatrixXd adj = Eigen::MatrixXd::Constant(
        n, n, std::numeric_limits<double>::infinity());
    adj.diagonal().setZero();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < 0.05) adj(i, j) = adj(j, i) = weight(rng);

    Eigen::MatrixXd d_serial, d_parallel;
    const double ms_serial =
        time_ms([&] { d_serial = gact::all_pairs_shortest_paths(adj, false); });
    const double ms_parallel =
        time_ms([&] { d_parallel = gact::all_pairs_shortest_paths(adj, true); });

    double max_diff = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double a = d_serial(i, j), b = d_parallel(i, j);
        if (std::isinf(a) != std::isinf(b)) max_diff = 1e300;
        else if (!std::isinf(a)) max_diff = std::max(max_diff, std::abs(a - b));
      }
    std::printf("%8d %12.2f %12.2f %9.2f %8.1e\n", n, ms_serial, ms_parallel,
                ms_serial / std::max(ms_parallel, 1e-9), max_diff);
  }
  return 0;
}
