#include "seerdrive/core/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>

namespace seerdrive::kernels {

namespace {
Backend g_backend = Backend::Parallel;

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// Per-row bodies shared by the serial and parallel drivers. Each output row
// is written by exactly one caller iteration and inner accumulation order is
// fixed, so both drivers produce identical bits.

inline void mm_nn_row(const double* a_row, const double* b, double* c_row, int64_t k, int64_t m,
                      bool accumulate) {
  if (!accumulate) std::memset(c_row, 0, static_cast<size_t>(m) * sizeof(double));
  for (int64_t l = 0; l < k; ++l) {
    const double av = a_row[l];
    const double* b_row = b + l * m;
    for (int64_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
  }
}

inline void mm_nt_row(const double* a_row, const double* b, double* c_row, int64_t k, int64_t m,
                      bool accumulate) {
  for (int64_t j = 0; j < m; ++j) {
    const double* b_row = b + j * k;
    double acc = 0.0;
    for (int64_t l = 0; l < k; ++l) acc += a_row[l] * b_row[l];
    c_row[j] = accumulate ? c_row[j] + acc : acc;
  }
}

// Rank-1-update form of the transposed-A product. Per element the addition
// order over l matches mm_tn_row exactly, so results are bit-identical; this
// layout just keeps C hot in cache when a single thread does all rows.
inline void mm_tn_rank1(const double* a, const double* b, double* c, int64_t n, int64_t k,
                        int64_t m, bool accumulate) {
  if (!accumulate) std::memset(c, 0, static_cast<size_t>(k * m) * sizeof(double));
  for (int64_t l = 0; l < n; ++l) {
    const double* a_row = a + l * k;
    const double* b_row = b + l * m;
    for (int64_t i = 0; i < k; ++i) {
      const double av = a_row[i];
      if (av == 0.0) continue;
      double* c_row = c + i * m;
      for (int64_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
    }
  }
}

// c_row = (+)= sum_l a[l, i] * b[l, :]
inline void mm_tn_row(const double* a, const double* b, double* c_row, int64_t i, int64_t n,
                      int64_t k, int64_t m, bool accumulate) {
  if (!accumulate) std::memset(c_row, 0, static_cast<size_t>(m) * sizeof(double));
  for (int64_t l = 0; l < n; ++l) {
    const double av = a[l * k + i];
    if (av == 0.0) continue;
    const double* b_row = b + l * m;
    for (int64_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
  }
}

inline void layer_norm_row(const double* x, double* y, double* mean, double* rstd, int64_t c,
                           double eps) {
  double mu = 0.0;
  for (int64_t j = 0; j < c; ++j) mu += x[j];
  mu /= static_cast<double>(c);
  double var = 0.0;
  for (int64_t j = 0; j < c; ++j) {
    const double d = x[j] - mu;
    var += d * d;
  }
  var /= static_cast<double>(c);
  const double r = 1.0 / std::sqrt(var + eps);
  for (int64_t j = 0; j < c; ++j) y[j] = (x[j] - mu) * r;
  *mean = mu;
  *rstd = r;
}

inline void layer_norm_bwd_row(const double* x, double mean, double rstd, const double* dy,
                               double* dx, int64_t c) {
  const double inv_c = 1.0 / static_cast<double>(c);
  double sum_dy = 0.0;
  double sum_dy_xhat = 0.0;
  for (int64_t j = 0; j < c; ++j) {
    const double xh = (x[j] - mean) * rstd;
    sum_dy += dy[j];
    sum_dy_xhat += dy[j] * xh;
  }
  for (int64_t j = 0; j < c; ++j) {
    const double xh = (x[j] - mean) * rstd;
    dx[j] += rstd * (dy[j] - inv_c * sum_dy - xh * inv_c * sum_dy_xhat);
  }
}

inline void softmax_row(const double* x, double* y, int64_t c) {
  double mx = x[0];
  for (int64_t j = 1; j < c; ++j) mx = x[j] > mx ? x[j] : mx;
  double z = 0.0;
  for (int64_t j = 0; j < c; ++j) {
    y[j] = std::exp(x[j] - mx);
    z += y[j];
  }
  const double inv = 1.0 / z;
  for (int64_t j = 0; j < c; ++j) y[j] *= inv;
}

inline void softmax_bwd_row(const double* y, const double* dy, double* dx, int64_t c) {
  double dot = 0.0;
  for (int64_t j = 0; j < c; ++j) dot += y[j] * dy[j];
  for (int64_t j = 0; j < c; ++j) dx[j] += y[j] * (dy[j] - dot);
}

inline double gelu_val(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_grad(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double sech2 = 1.0 - t * t;
  return 0.5 * (1.0 + t) + 0.5 * x * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

}  // namespace

void set_backend(Backend b) { g_backend = b; }
Backend backend() { return g_backend; }
int max_threads() { return omp_get_max_threads(); }

#define SD_ROW_LOOP(nrows, body)                            \
  if (g_backend == Backend::Parallel) {                     \
    _Pragma("omp parallel for schedule(static)")            \
    for (int64_t r = 0; r < (nrows); ++r) { body }          \
  } else {                                                  \
    for (int64_t r = 0; r < (nrows); ++r) { body }          \
  }

void mm_nn(const double* a, const double* b, double* c, int64_t batch, int64_t n, int64_t k,
           int64_t m, bool b_batched, bool accumulate) {
  const int64_t rows = batch * n;
  SD_ROW_LOOP(rows, {
    const int64_t bi = r / n;
    const double* b_mat = b_batched ? b + bi * k * m : b;
    mm_nn_row(a + r * k, b_mat, c + r * m, k, m, accumulate);
  })
}

void mm_nt(const double* a, const double* b, double* c, int64_t batch, int64_t n, int64_t k,
           int64_t m, bool b_batched, bool accumulate) {
  const int64_t rows = batch * n;
  SD_ROW_LOOP(rows, {
    const int64_t bi = r / n;
    const double* b_mat = b_batched ? b + bi * m * k : b;
    mm_nt_row(a + r * k, b_mat, c + r * m, k, m, accumulate);
  })
}

void mm_tn_sum(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate) {
  if (g_backend == Backend::Serial || max_threads() == 1) {
    mm_tn_rank1(a, b, c, n, k, m, accumulate);
    return;
  }
  SD_ROW_LOOP(k, { mm_tn_row(a, b, c + r * m, r, n, k, m, accumulate); })
}

void mm_tn_batched(const double* a, const double* b, double* c, int64_t batch, int64_t n,
                   int64_t k, int64_t m, bool accumulate) {
  if (g_backend == Backend::Serial || max_threads() == 1) {
    for (int64_t bi = 0; bi < batch; ++bi) {
      mm_tn_rank1(a + bi * n * k, b + bi * n * m, c + bi * k * m, n, k, m, accumulate);
    }
    return;
  }
  const int64_t rows = batch * k;
  SD_ROW_LOOP(rows, {
    const int64_t bi = r / k;
    const int64_t i = r % k;
    mm_tn_row(a + bi * n * k, b + bi * n * m, c + r * m, i, n, k, m, accumulate);
  })
}

void add(const double* a, const double* b, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] = a[r] + b[r]; })
}

void sub(const double* a, const double* b, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] = a[r] - b[r]; })
}

void mul(const double* a, const double* b, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] = a[r] * b[r]; })
}

void scale(const double* a, double s, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] = a[r] * s; })
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] += alpha * x[r]; })
}

void mul_acc(const double* a, const double* b, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] += a[r] * b[r]; })
}

void add_broadcast(const double* x, const double* p, double* y, int64_t lead, int64_t tail) {
  SD_ROW_LOOP(lead, {
    const double* xr = x + r * tail;
    double* yr = y + r * tail;
    for (int64_t j = 0; j < tail; ++j) yr[j] = xr[j] + p[j];
  })
}

void sum_leading(const double* dy, double* dp, int64_t lead, int64_t tail, bool accumulate) {
  // Reduction over lead; parallel over tail columns keeps the order fixed.
  SD_ROW_LOOP(tail, {
    double acc = accumulate ? dp[r] : 0.0;
    for (int64_t l = 0; l < lead; ++l) acc += dy[l * tail + r];
    dp[r] = acc;
  })
}

void gelu(const double* x, double* y, int64_t n) {
  SD_ROW_LOOP(n, { y[r] = gelu_val(x[r]); })
}

void gelu_bwd(const double* x, const double* dy, double* dx, int64_t n) {
  SD_ROW_LOOP(n, { dx[r] += dy[r] * gelu_grad(x[r]); })
}

void gelu_save(const double* x, double* y, double* tanh_out, int64_t n) {
  SD_ROW_LOOP(n, {
    const double u = kGeluC * (x[r] + kGeluA * x[r] * x[r] * x[r]);
    const double t = std::tanh(u);
    tanh_out[r] = t;
    y[r] = 0.5 * x[r] * (1.0 + t);
  })
}

void gelu_bwd_saved(const double* x, const double* tanh_saved, const double* dy, double* dx,
                    int64_t n) {
  SD_ROW_LOOP(n, {
    const double t = tanh_saved[r];
    const double sech2 = 1.0 - t * t;
    const double grad =
        0.5 * (1.0 + t) + 0.5 * x[r] * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * x[r] * x[r]);
    dx[r] += dy[r] * grad;
  })
}

void layer_norm(const double* x, double* y, double* mean, double* rstd, int64_t rows, int64_t c,
                double eps) {
  SD_ROW_LOOP(rows, { layer_norm_row(x + r * c, y + r * c, mean + r, rstd + r, c, eps); })
}

void layer_norm_bwd(const double* x, const double* mean, const double* rstd, const double* dy,
                    double* dx, int64_t rows, int64_t c) {
  SD_ROW_LOOP(rows, { layer_norm_bwd_row(x + r * c, mean[r], rstd[r], dy + r * c, dx + r * c, c); })
}

void scale_shift(const double* x, const double* g, const double* b, double* y, int64_t rows,
                 int64_t c) {
  SD_ROW_LOOP(rows, {
    const double* xr = x + r * c;
    double* yr = y + r * c;
    for (int64_t j = 0; j < c; ++j) yr[j] = xr[j] * g[j] + b[j];
  })
}

void scale_shift_bwd(const double* x, const double* g, const double* dy, double* dx, double* dg,
                     double* db, int64_t rows, int64_t c) {
  SD_ROW_LOOP(rows, {
    const double* dyr = dy + r * c;
    double* dxr = dx + r * c;
    for (int64_t j = 0; j < c; ++j) dxr[j] += dyr[j] * g[j];
  })
  // dg/db reduce over rows; parallel over columns, fixed row order.
  SD_ROW_LOOP(c, {
    double ag = dg[r];
    double ab = db[r];
    for (int64_t l = 0; l < rows; ++l) {
      ag += dy[l * c + r] * x[l * c + r];
      ab += dy[l * c + r];
    }
    dg[r] = ag;
    db[r] = ab;
  })
}

void softmax(const double* x, double* y, int64_t rows, int64_t c) {
  SD_ROW_LOOP(rows, { softmax_row(x + r * c, y + r * c, c); })
}

void softmax_bwd(const double* y, const double* dy, double* dx, int64_t rows, int64_t c) {
  SD_ROW_LOOP(rows, { softmax_bwd_row(y + r * c, dy + r * c, dx + r * c, c); })
}

double sum(const double* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double ce_mean(const double* logits, const int* labels, double* probs_out, int64_t rows,
               int64_t k) {
  SD_ROW_LOOP(rows, { softmax_row(logits + r * k, probs_out + r * k, k); })
  double acc = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    const double p = probs_out[r * k + labels[r]];
    acc += -std::log(p > 1e-300 ? p : 1e-300);
  }
  return acc / static_cast<double>(rows);
}

void ce_bwd(const double* probs, const int* labels, double gscale, double* dlogits, int64_t rows,
            int64_t k) {
  const double s = gscale / static_cast<double>(rows);
  SD_ROW_LOOP(rows, {
    const double* pr = probs + r * k;
    double* dr = dlogits + r * k;
    for (int64_t j = 0; j < k; ++j) dr[j] += s * pr[j];
    dr[labels[r]] -= s;
  })
}

double l1_mean(const double* x, const double* t, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += std::fabs(x[i] - t[i]);
  return acc / static_cast<double>(n);
}

void l1_bwd(const double* x, const double* t, double gscale, double* dx, int64_t n) {
  const double s = gscale / static_cast<double>(n);
  SD_ROW_LOOP(n, {
    const double d = x[r] - t[r];
    dx[r] += d > 0.0 ? s : (d < 0.0 ? -s : 0.0);
  })
}

#undef SD_ROW_LOOP

}  // namespace seerdrive::kernels
