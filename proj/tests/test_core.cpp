#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "seerdrive/core/graph.hpp"
#include "seerdrive/core/kernels.hpp"
#include "seerdrive/core/rng.hpp"
#include "seerdrive/core/serialize.hpp"
#include "seerdrive/core/tensor.hpp"

using namespace seerdrive;
namespace ker = seerdrive::kernels;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Central-difference gradient check of a scalar-valued graph builder with
// respect to every element of every parameter.
void fd_check(const std::vector<Tensor>& param_values,
              const std::function<Var(Graph&, const std::vector<Var>&)>& build,
              double tol = 1e-6) {
  ParamStore store;
  for (size_t i = 0; i < param_values.size(); ++i) {
    store.add("p" + std::to_string(i), param_values[i]);
  }
  auto eval_loss = [&]() {
    Graph g(&store);
    std::vector<Var> vars;
    for (int i = 0; i < store.count(); ++i) vars.push_back(g.param(i));
    return g.val(build(g, vars))[0];
  };

  // analytic
  store.zero_grads();
  {
    Graph g(&store);
    std::vector<Var> vars;
    for (int i = 0; i < store.count(); ++i) vars.push_back(g.param(i));
    Var loss = build(g, vars);
    g.backward(loss);
  }

  for (int p = 0; p < store.count(); ++p) {
    Tensor& v = store.value(p);
    const Tensor& grad = store.grad(p);
    for (int64_t i = 0; i < v.numel(); ++i) {
      const double orig = v[i];
      const double h = 1e-5 * std::max(1.0, std::fabs(orig));
      v[i] = orig + h;
      const double lp = eval_loss();
      v[i] = orig - h;
      const double lm = eval_loss();
      v[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grad[i];
      const double err = std::fabs(fd - an) / std::max({1.0, std::fabs(fd), std::fabs(an)});
      INFO("param ", p, " elem ", i, " fd=", fd, " an=", an);
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("kernels: serial and parallel variants are bit-identical") {
  Rng rng(7);
  const int64_t batch = 3, n = 9, k = 17, m = 13;
  auto a = random_tensor({batch, n, k}, 1);
  auto b = random_tensor({batch, k, m}, 2);
  auto b2 = random_tensor({k, m}, 3);
  auto bt = random_tensor({batch, m, k}, 4);

  auto run_all = [&](ker::Backend be) {
    ker::set_backend(be);
    std::vector<double> out;
    std::vector<double> c(static_cast<size_t>(batch * n * m));
    ker::mm_nn(a.data(), b.data(), c.data(), batch, n, k, m, true);
    out.insert(out.end(), c.begin(), c.end());
    ker::mm_nn(a.data(), b2.data(), c.data(), batch, n, k, m, false);
    out.insert(out.end(), c.begin(), c.end());
    ker::mm_nt(a.data(), bt.data(), c.data(), batch, n, k, m, true);
    out.insert(out.end(), c.begin(), c.end());
    std::vector<double> w(static_cast<size_t>(k * m), 0.5);
    ker::mm_tn_sum(a.data(), c.data(), w.data(), batch * n, k, m, true);
    out.insert(out.end(), w.begin(), w.end());
    std::vector<double> wb(static_cast<size_t>(batch * k * m), 0.25);
    ker::mm_tn_batched(a.data(), c.data(), wb.data(), batch, n, k, m, true);
    out.insert(out.end(), wb.begin(), wb.end());

    const int64_t rows = 37, cc = 29;
    auto x = random_tensor({rows, cc}, 5);
    std::vector<double> y(static_cast<size_t>(rows * cc)), mean(rows), rstd(rows);
    ker::layer_norm(x.data(), y.data(), mean.data(), rstd.data(), rows, cc, 1e-8);
    out.insert(out.end(), y.begin(), y.end());
    std::vector<double> dx(static_cast<size_t>(rows * cc), 0.0);
    ker::layer_norm_bwd(x.data(), mean.data(), rstd.data(), y.data(), dx.data(), rows, cc);
    out.insert(out.end(), dx.begin(), dx.end());
    ker::softmax(x.data(), y.data(), rows, cc);
    out.insert(out.end(), y.begin(), y.end());
    ker::gelu(x.data(), y.data(), rows * cc);
    out.insert(out.end(), y.begin(), y.end());
    return out;
  };

  auto serial = run_all(ker::Backend::Serial);
  auto parallel = run_all(ker::Backend::Parallel);
  CHECK(bits_equal(serial, parallel));
  ker::set_backend(ker::Backend::Parallel);
}

TEST_CASE("kernel reference values") {
  // 2x2 matmul by hand
  std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8}, c(4);
  ker::mm_nn(a.data(), b.data(), c.data(), 1, 2, 2, 2, false);
  CHECK(c == std::vector<double>{19, 22, 43, 50});

  // softmax of [0,0] is uniform
  std::vector<double> x{0, 0}, y(2);
  ker::softmax(x.data(), y.data(), 1, 2);
  CHECK(y[0] == doctest::Approx(0.5));

  // cross entropy of uniform logits over 4 classes = ln 4
  std::vector<double> logits{1, 1, 1, 1}, probs(4);
  int label = 2;
  const double ce = ker::ce_mean(logits.data(), &label, probs.data(), 1, 4);
  CHECK(ce == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("graph: finite differences for every op") {
  SUBCASE("add/sub/mul/scale") {
    fd_check({random_tensor({3, 4}, 11), random_tensor({3, 4}, 12)},
             [](Graph& g, const std::vector<Var>& p) {
               Var s = g.add(p[0], p[1]);
               s = g.sub(s, g.mul(p[0], p[1]));
               s = g.scale(s, 1.7);
               return g.mean_all(g.mul(s, s));
             });
  }
  SUBCASE("matmul 2d weight") {
    fd_check({random_tensor({2, 3, 4}, 13), random_tensor({4, 5}, 14)},
             [](Graph& g, const std::vector<Var>& p) {
               return g.mean_all(g.matmul(p[0], p[1]));
             });
  }
  SUBCASE("matmul batched and nt") {
    fd_check({random_tensor({2, 3, 4}, 15), random_tensor({2, 4, 5}, 16),
              random_tensor({2, 6, 4}, 17)},
             [](Graph& g, const std::vector<Var>& p) {
               Var y = g.matmul(p[0], p[1]);            // [2,3,5]
               Var z = g.matmul_nt(p[0], p[2]);         // [2,3,6]
               return g.add(g.mean_all(g.mul(y, y)), g.mean_all(g.mul(z, z)));
             });
  }
  SUBCASE("gelu/layer_norm/softmax") {
    fd_check({random_tensor({5, 7}, 18)}, [](Graph& g, const std::vector<Var>& p) {
      Var y = g.gelu(p[0]);
      y = g.layer_norm(y, 1e-8);
      y = g.softmax(y);
      return g.mean_all(g.mul(y, y));
    });
  }
  SUBCASE("scale_shift and add_broadcast") {
    fd_check({random_tensor({4, 6}, 19), random_tensor({6}, 20), random_tensor({6}, 21)},
             [](Graph& g, const std::vector<Var>& p) {
               Var y = g.scale_shift(p[0], p[1], p[2]);
               y = g.add_broadcast(y, p[2]);
               return g.mean_all(g.mul(y, y));
             });
  }
  SUBCASE("structural ops") {
    fd_check({random_tensor({2, 3, 4}, 22), random_tensor({2, 2, 4}, 23)},
             [](Graph& g, const std::vector<Var>& p) {
               Var c = g.concat(p[0], p[1], 1);          // [2,5,4]
               Var e = g.expand(p[0], 1, 2);             // [2,2,3,4]
               Var s = g.slice(c, 1, 1, 3);              // [2,3,4]
               Var w = g.swap_axes(e, 1, 3);             // [2,4,3,2]
               Var r = g.reshape(w, {2, 24});
               return g.add(g.mean_all(g.mul(s, s)), g.mean_all(g.mul(r, r)));
             });
  }
  SUBCASE("gather_mode") {
    fd_check({random_tensor({3, 4, 2}, 24)}, [](Graph& g, const std::vector<Var>& p) {
      Var y = g.gather_mode(p[0], {2, 0, 3});
      return g.mean_all(g.mul(y, y));
    });
  }
  SUBCASE("losses") {
    fd_check({random_tensor({6, 4}, 25), random_tensor({5, 3}, 26)},
             [](Graph& g, const std::vector<Var>& p) {
               Var ce = g.cross_entropy_mean(p[0], {0, 1, 2, 3, 1, 2});
               Var l1 = g.l1_mean(p[1], random_tensor({5, 3}, 27));
               return g.add(ce, g.scale(l1, 0.5));
             });
  }
  SUBCASE("sum_all") {
    fd_check({random_tensor({3, 3}, 28)}, [](Graph& g, const std::vector<Var>& p) {
      return g.sum_all(g.gelu(p[0]));
    });
  }
}

TEST_CASE("graph: shared parameter accumulates gradient from every use") {
  ParamStore store;
  store.add("w", random_tensor({3, 3}, 30));
  Graph g(&store);
  Var w = g.param(0);
  Var x = g.input(random_tensor({2, 3}, 31));
  Var y1 = g.matmul(x, w);
  Var y2 = g.matmul(y1, w);  // same weight twice
  Var loss = g.mean_all(g.mul(y2, y2));
  g.backward(loss);
  const Tensor& grad = store.grad(0);
  double norm = 0;
  for (int64_t i = 0; i < grad.numel(); ++i) norm += grad[i] * grad[i];
  CHECK(norm > 0.0);

  // FD against the two-use composition
  fd_check({store.value(0)}, [&](Graph& gg, const std::vector<Var>& p) {
    Var xx = gg.input(random_tensor({2, 3}, 31));
    Var z = gg.matmul(gg.matmul(xx, p[0]), p[0]);
    return gg.mean_all(gg.mul(z, z));
  });
}

TEST_CASE("rng: deterministic and reasonable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42, 1);
  CHECK(c.next_u64() != Rng(42, 2).next_u64());
  Rng d(7);
  double mean = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += d.normal();
  mean /= n;
  CHECK(std::fabs(mean) < 0.05);
}

TEST_CASE("serialize: tensors round-trip bit-exactly after f32 snap") {
  Tensor t = random_tensor({3, 5}, 50);
  snap_to_f32(t);
  {
    io::Writer w("/tmp/sd_test_tensor.bin");
    io::write_tensor(w, t);
    w.finish_with_crc();
  }
  io::Reader r("/tmp/sd_test_tensor.bin");
  Tensor u = io::read_tensor(r);
  r.check_trailing_crc();
  CHECK(u.shape() == t.shape());
  CHECK(bits_equal(std::vector<double>(t.data(), t.data() + t.numel()),
                   std::vector<double>(u.data(), u.data() + u.numel())));
}

TEST_CASE("serialize: corruption and truncation raise typed errors") {
  Tensor t = random_tensor({4, 4}, 51);
  snap_to_f32(t);
  {
    io::Writer w("/tmp/sd_test_corrupt.bin");
    io::write_tensor(w, t);
    w.finish_with_crc();
  }
  // corrupt one payload byte
  {
    std::fstream f("/tmp/sd_test_corrupt.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    char c;
    f.seekg(10);
    f.get(c);
    f.seekp(10);
    f.put(static_cast<char>(c ^ 0x5a));
  }
  {
    io::Reader r("/tmp/sd_test_corrupt.bin");
    io::read_tensor(r);
    CHECK_THROWS_AS(r.check_trailing_crc(), ChecksumError);
  }
  // truncated read
  {
    io::Writer w("/tmp/sd_test_trunc.bin");
    w.u32(1234);
  }
  io::Reader r("/tmp/sd_test_trunc.bin");
  r.u32();
  CHECK_THROWS_AS(r.u64(), TruncatedError);
}
