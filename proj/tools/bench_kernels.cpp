// Throughput comparison of the serial reference kernels against the OpenMP
// variants. Prints one line per kernel and size with both timings and the
// speedup, plus a checksum so the work cannot be optimized away.

#include <chrono>
#include <cstdio>
#include <vector>

#include "seerdrive/core/kernels.hpp"
#include "seerdrive/core/rng.hpp"

namespace ker = seerdrive::kernels;
using seerdrive::Rng;

namespace {

double now_sec() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class F>
double time_best(F&& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_sec();
    fn();
    const double t1 = now_sec();
    if (t1 - t0 < best) best = t1 - t0;
  }
  return best;
}

std::vector<double> random_vec(int64_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(n));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void report(const char* name, const char* dims, double flops, double t_serial, double t_parallel,
            double checksum) {
  std::printf("%-14s %-22s serial %8.2f ms  parallel %8.2f ms  speedup %5.2fx  %7.2f GF/s  [chk %.3e]\n",
              name, dims, t_serial * 1e3, t_parallel * 1e3, t_serial / t_parallel,
              flops / t_parallel * 1e-9, checksum);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", ker::max_threads());

  // matmul nn
  for (int64_t n : {64, 256, 1024}) {
    const int64_t k = 256, m = 256;
    auto a = random_vec(n * k, 1);
    auto b = random_vec(k * m, 2);
    std::vector<double> c(static_cast<size_t>(n * m));
    ker::set_backend(ker::Backend::Serial);
    const double ts = time_best([&] { ker::mm_nn(a.data(), b.data(), c.data(), 1, n, k, m, false); }, 5);
    ker::set_backend(ker::Backend::Parallel);
    const double tp = time_best([&] { ker::mm_nn(a.data(), b.data(), c.data(), 1, n, k, m, false); }, 5);
    char dims[64];
    std::snprintf(dims, sizeof(dims), "%ldx%ldx%ld", n, k, m);
    report("mm_nn", dims, 2.0 * static_cast<double>(n * k * m), ts, tp, c[0]);
  }

  // matmul nt (attention-score shape)
  {
    const int64_t batch = 64, n = 65, k = 64, m = 65;
    auto a = random_vec(batch * n * k, 3);
    auto b = random_vec(batch * m * k, 4);
    std::vector<double> c(static_cast<size_t>(batch * n * m));
    ker::set_backend(ker::Backend::Serial);
    const double ts = time_best([&] { ker::mm_nt(a.data(), b.data(), c.data(), batch, n, k, m, true); }, 5);
    ker::set_backend(ker::Backend::Parallel);
    const double tp = time_best([&] { ker::mm_nt(a.data(), b.data(), c.data(), batch, n, k, m, true); }, 5);
    report("mm_nt", "64x(65x64x65)", 2.0 * static_cast<double>(batch * n * k * m), ts, tp, c[0]);
  }

  // layer norm + softmax + gelu on transformer-sized blocks
  {
    const int64_t rows = 8192, c = 256;
    auto x = random_vec(rows * c, 5);
    std::vector<double> y(static_cast<size_t>(rows * c));
    std::vector<double> mean(static_cast<size_t>(rows)), rstd(static_cast<size_t>(rows));
    ker::set_backend(ker::Backend::Serial);
    double ts = time_best([&] { ker::layer_norm(x.data(), y.data(), mean.data(), rstd.data(), rows, c, 1e-8); }, 5);
    ker::set_backend(ker::Backend::Parallel);
    double tp = time_best([&] { ker::layer_norm(x.data(), y.data(), mean.data(), rstd.data(), rows, c, 1e-8); }, 5);
    report("layer_norm", "8192x256", 8.0 * static_cast<double>(rows * c), ts, tp, y[0]);

    ker::set_backend(ker::Backend::Serial);
    ts = time_best([&] { ker::softmax(x.data(), y.data(), rows, c); }, 5);
    ker::set_backend(ker::Backend::Parallel);
    tp = time_best([&] { ker::softmax(x.data(), y.data(), rows, c); }, 5);
    report("softmax", "8192x256", 5.0 * static_cast<double>(rows * c), ts, tp, y[0]);

    ker::set_backend(ker::Backend::Serial);
    ts = time_best([&] { ker::gelu(x.data(), y.data(), rows * c); }, 5);
    ker::set_backend(ker::Backend::Parallel);
    tp = time_best([&] { ker::gelu(x.data(), y.data(), rows * c); }, 5);
    report("gelu", "2M", 10.0 * static_cast<double>(rows * c), ts, tp, y[0]);
  }

  ker::set_backend(ker::Backend::Parallel);
  return 0;
}
