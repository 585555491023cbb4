#include "seerdrive/anchors/anchors.hpp"

#include <algorithm>
#include <cmath>

#include "seerdrive/core/errors.hpp"
#include "seerdrive/core/rng.hpp"
#include "seerdrive/core/serialize.hpp"

namespace seerdrive::anchors {

namespace {

constexpr uint32_t kMagic = 0x5344414e;  // "SDAN"
constexpr uint32_t kVersion = 1;

double sq_dist(const double* a, const double* b, int64_t d) {
  double acc = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

// index of nearest center; ties resolve to the lowest index
int64_t nearest(const double* x, const std::vector<double>& centers, int64_t m, int64_t d,
                double* dist_out = nullptr) {
  int64_t best = 0;
  double best_d = sq_dist(x, centers.data(), d);
  for (int64_t c = 1; c < m; ++c) {
    const double dd = sq_dist(x, centers.data() + c * d, d);
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

}  // namespace

Tensor AnchorSet::endpoints() const {
  const int64_t m = modes();
  const int64_t t = horizon();
  Tensor out({m, 2});
  for (int64_t i = 0; i < m; ++i) {
    out[i * 2] = anchors[(i * t + (t - 1)) * 2];
    out[i * 2 + 1] = anchors[(i * t + (t - 1)) * 2 + 1];
  }
  return out;
}

AnchorSet fit_anchors(const std::vector<std::vector<geom::Vec2>>& futures, int64_t modes,
                      int iters, uint64_t seed) {
  const int64_t n = static_cast<int64_t>(futures.size());
  if (n < modes) throw InputError("fit_anchors: fewer futures than modes");
  if (modes < 2) throw InputError("fit_anchors: modes must be >= 2");
  const int64_t t_steps = static_cast<int64_t>(futures[0].size());
  const int64_t d = 2 * t_steps;

  std::vector<double> data(static_cast<size_t>(n * d));
  for (int64_t i = 0; i < n; ++i) {
    if (static_cast<int64_t>(futures[static_cast<size_t>(i)].size()) != t_steps) {
      throw InputError("fit_anchors: ragged trajectory lengths");
    }
    for (int64_t k = 0; k < t_steps; ++k) {
      data[static_cast<size_t>(i * d + 2 * k)] = futures[static_cast<size_t>(i)][static_cast<size_t>(k)].x;
      data[static_cast<size_t>(i * d + 2 * k + 1)] = futures[static_cast<size_t>(i)][static_cast<size_t>(k)].y;
    }
  }

  // k-means++ seeding
  Rng rng(seed, 77);
  std::vector<double> centers(static_cast<size_t>(modes * d));
  std::vector<double> min_d2(static_cast<size_t>(n), 0.0);
  {
    const int64_t first = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
    std::copy_n(data.data() + first * d, d, centers.data());
    for (int64_t i = 0; i < n; ++i) min_d2[static_cast<size_t>(i)] = sq_dist(data.data() + i * d, centers.data(), d);
    for (int64_t c = 1; c < modes; ++c) {
      double total = 0.0;
      for (double v : min_d2) total += v;
      int64_t pick = 0;
      if (total <= 0.0) {
        pick = static_cast<int64_t>(rng.below(static_cast<uint64_t>(n)));
      } else {
        double r = rng.uniform() * total;
        for (int64_t i = 0; i < n; ++i) {
          r -= min_d2[static_cast<size_t>(i)];
          if (r <= 0.0) {
            pick = i;
            break;
          }
          pick = i;
        }
      }
      std::copy_n(data.data() + pick * d, d, centers.data() + c * d);
      for (int64_t i = 0; i < n; ++i) {
        const double dd = sq_dist(data.data() + i * d, centers.data() + c * d, d);
        if (dd < min_d2[static_cast<size_t>(i)]) min_d2[static_cast<size_t>(i)] = dd;
      }
    }
  }

  // Lloyd iterations; inertia must never increase.
  std::vector<int64_t> assign(static_cast<size_t>(n), 0);
  double prev_inertia = 1e300;
  for (int it = 0; it < iters; ++it) {
    // assignment
    double inertia = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double dd;
      assign[static_cast<size_t>(i)] = nearest(data.data() + i * d, centers, modes, d, &dd);
      inertia += dd;
    }
    if (inertia > prev_inertia + 1e-9) {
      throw std::logic_error("k-means inertia increased");
    }
    if (prev_inertia - inertia < 1e-12 && it > 0) break;
    prev_inertia = inertia;

    // update
    std::vector<double> sums(static_cast<size_t>(modes * d), 0.0);
    std::vector<int64_t> counts(static_cast<size_t>(modes), 0);
    for (int64_t i = 0; i < n; ++i) {
      const int64_t c = assign[static_cast<size_t>(i)];
      counts[static_cast<size_t>(c)]++;
      for (int64_t k = 0; k < d; ++k) sums[static_cast<size_t>(c * d + k)] += data[static_cast<size_t>(i * d + k)];
    }
    for (int64_t c = 0; c < modes; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        for (int64_t k = 0; k < d; ++k) {
          centers[static_cast<size_t>(c * d + k)] =
              sums[static_cast<size_t>(c * d + k)] / static_cast<double>(counts[static_cast<size_t>(c)]);
        }
      } else {
        // empty cluster: reseed to the point farthest from its center
        int64_t far_i = 0;
        double far_d = -1.0;
        for (int64_t i = 0; i < n; ++i) {
          const double dd =
              sq_dist(data.data() + i * d, centers.data() + assign[static_cast<size_t>(i)] * d, d);
          if (dd > far_d) {
            far_d = dd;
            far_i = i;
          }
        }
        std::copy_n(data.data() + far_i * d, d, centers.data() + c * d);
        assign[static_cast<size_t>(far_i)] = c;
      }
    }
  }

  // Final assignment against the final centers fixes the convergence snapshot.
  double inertia = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    double dd;
    assign[static_cast<size_t>(i)] = nearest(data.data() + i * d, centers, modes, d, &dd);
    inertia += dd;
  }

  // Order modes by endpoint heading for stable indices.
  std::vector<int64_t> order(static_cast<size_t>(modes));
  for (int64_t i = 0; i < modes; ++i) order[static_cast<size_t>(i)] = i;
  auto angle_of = [&](int64_t c) {
    const double ex = centers[static_cast<size_t>(c * d + d - 2)];
    const double ey = centers[static_cast<size_t>(c * d + d - 1)];
    return std::atan2(ey, ex);
  };
  std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    const double aa = angle_of(a);
    const double ab = angle_of(b);
    if (aa != ab) return aa < ab;
    const double ra = std::hypot(centers[static_cast<size_t>(a * d + d - 2)],
                                 centers[static_cast<size_t>(a * d + d - 1)]);
    const double rb = std::hypot(centers[static_cast<size_t>(b * d + d - 2)],
                                 centers[static_cast<size_t>(b * d + d - 1)]);
    if (ra != rb) return ra < rb;
    return a < b;
  });

  AnchorSet out;
  out.fit_seed = static_cast<int64_t>(seed);
  out.inertia = inertia;
  out.anchors = Tensor({modes, t_steps, 2});
  for (int64_t rank = 0; rank < modes; ++rank) {
    const int64_t c = order[static_cast<size_t>(rank)];
    for (int64_t k = 0; k < d; ++k) {
      out.anchors[rank * d + k] = centers[static_cast<size_t>(c * d + k)];
    }
  }
  snap_to_f32(out.anchors);
  return out;
}

AnchorSet fit_anchors(const std::vector<scenario::Scenario>& scenarios, int64_t modes, int iters,
                      uint64_t seed) {
  std::vector<std::vector<geom::Vec2>> futures;
  futures.reserve(scenarios.size());
  for (const auto& s : scenarios) {
    futures.emplace_back(s.ego_future.begin(), s.ego_future.end());
  }
  return fit_anchors(futures, modes, iters, seed);
}

double assignment_inertia(const std::vector<std::vector<geom::Vec2>>& futures,
                          const Tensor& centers) {
  const int64_t m = centers.dim(0);
  const int64_t d = centers.dim(1) * 2;
  std::vector<double> flat(centers.data(), centers.data() + centers.numel());
  double inertia = 0.0;
  for (const auto& f : futures) {
    std::vector<double> x;
    x.reserve(static_cast<size_t>(d));
    for (const auto& p : f) {
      x.push_back(p.x);
      x.push_back(p.y);
    }
    double dd;
    nearest(x.data(), flat, m, d, &dd);
    inertia += dd;
  }
  return inertia;
}

void save_anchors(const AnchorSet& a, const std::string& path) {
  io::Writer w(path);
  w.u32(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<uint32_t>(a.modes()));
  w.u32(static_cast<uint32_t>(a.horizon()));
  w.i64(a.fit_seed);
  w.f64(a.inertia);
  w.f32_array(a.anchors.data(), a.anchors.numel());
  w.finish_with_crc();
}

AnchorSet load_anchors(const std::string& path) {
  io::Reader r(path);
  if (r.u32() != kMagic) throw VersionError(path + " (bad magic)");
  const uint32_t version = r.u32();
  if (version != kVersion) throw VersionError(path + " (anchor version " + std::to_string(version) + ")");
  AnchorSet a;
  const int64_t m = r.u32();
  const int64_t t = r.u32();
  a.fit_seed = r.i64();
  a.inertia = r.f64();
  a.anchors = Tensor({m, t, 2}, r.f32_array(m * t * 2));
  r.check_trailing_crc();
  return a;
}

}  // namespace seerdrive::anchors
