#pragma once

#include <cstdint>

namespace seerdrive::kernels {

// Numeric kernels come in two implementations: a plain serial reference and
// an OpenMP variant parallelized over independent output rows. Both share the
// same per-row routines and accumulation order, so their results are
// bit-identical; tests assert that and the bench tool compares throughput.
enum class Backend { Serial, Parallel };

void set_backend(Backend b);
Backend backend();
int max_threads();

// C (+)= A * B.
// a: [batch, n, k], c: [batch, n, m]; b: [batch, k, m] if b_batched else [k, m].
void mm_nn(const double* a, const double* b, double* c, int64_t batch, int64_t n, int64_t k,
           int64_t m, bool b_batched, bool accumulate = false);

// C (+)= A * B^T with b stored row-major as [.., m, k].
void mm_nt(const double* a, const double* b, double* c, int64_t batch, int64_t n, int64_t k,
           int64_t m, bool b_batched, bool accumulate = false);

// C[k,m] (+)= sum over all n rows of a^T b, with a: [n, k], b: [n, m].
// Used for weight gradients; the row sum runs in a fixed order.
void mm_tn_sum(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m,
               bool accumulate);

// Per-batch C[bi] (+)= A[bi]^T * B[bi]; a: [batch, n, k], b: [batch, n, m], c: [batch, k, m].
void mm_tn_batched(const double* a, const double* b, double* c, int64_t batch, int64_t n,
                   int64_t k, int64_t m, bool accumulate);

// Elementwise.
void add(const double* a, const double* b, double* y, int64_t n);
void sub(const double* a, const double* b, double* y, int64_t n);
void mul(const double* a, const double* b, double* y, int64_t n);
void scale(const double* a, double s, double* y, int64_t n);
void axpy(double alpha, const double* x, double* y, int64_t n);  // y += alpha * x
void mul_acc(const double* a, const double* b, double* y, int64_t n);  // y += a .* b

// y[l, :] = x[l, :] + p for l in [0, lead); x,y: [lead, tail], p: [tail].
void add_broadcast(const double* x, const double* p, double* y, int64_t lead, int64_t tail);
// dp (+)= sum over lead of dy rows.
void sum_leading(const double* dy, double* dp, int64_t lead, int64_t tail, bool accumulate);

void gelu(const double* x, double* y, int64_t n);
void gelu_bwd(const double* x, const double* dy, double* dx, int64_t n);  // dx += dy * gelu'(x)
// Forward that also saves tanh(u) per element; the matching backward then
// avoids recomputing it.
void gelu_save(const double* x, double* y, double* tanh_out, int64_t n);
void gelu_bwd_saved(const double* x, const double* tanh_saved, const double* dy, double* dx,
                    int64_t n);

// Normalization over the last axis; mean/rstd are per-row saves for backward.
void layer_norm(const double* x, double* y, double* mean, double* rstd, int64_t rows, int64_t c,
                double eps);
void layer_norm_bwd(const double* x, const double* mean, const double* rstd, const double* dy,
                    double* dx, int64_t rows, int64_t c);

// y = x .* g + b with g,b: [c] broadcast over rows.
void scale_shift(const double* x, const double* g, const double* b, double* y, int64_t rows,
                 int64_t c);
void scale_shift_bwd(const double* x, const double* g, const double* dy, double* dx, double* dg,
                     double* db, int64_t rows, int64_t c);

void softmax(const double* x, double* y, int64_t rows, int64_t c);
void softmax_bwd(const double* y, const double* dy, double* dx, int64_t rows, int64_t c);

// Order-fixed serial reduction.
double sum(const double* x, int64_t n);

// Mean cross-entropy over rows from raw logits; probs_out ([rows, k]) is
// saved for the backward pass. Labels outside [0, k) are a logic error.
double ce_mean(const double* logits, const int* labels, double* probs_out, int64_t rows,
               int64_t k);
void ce_bwd(const double* probs, const int* labels, double gscale, double* dlogits, int64_t rows,
            int64_t k);

double l1_mean(const double* x, const double* t, int64_t n);
void l1_bwd(const double* x, const double* t, double gscale, double* dx, int64_t n);

}  // namespace seerdrive::kernels
