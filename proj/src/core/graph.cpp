#include "seerdrive/core/graph.hpp"

#include <cmath>
#include <cstring>

#include "seerdrive/core/kernels.hpp"

namespace seerdrive {

namespace ker = seerdrive::kernels;

int ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  names_.push_back(name);
  values_.push_back(std::move(init));
  grads_.emplace_back();
  index_[name] = static_cast<int>(values_.size()) - 1;
  return index_[name];
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Tensor& ParamStore::grad(int id) {
  Tensor& g = grads_[static_cast<size_t>(id)];
  if (g.numel() == 0) g = Tensor::zeros(values_[static_cast<size_t>(id)].shape());
  return g;
}

void ParamStore::zero_grads() {
  for (auto& g : grads_) {
    if (g.numel() > 0) std::memset(g.data(), 0, static_cast<size_t>(g.numel()) * sizeof(double));
  }
}

void ParamStore::snap_f32() {
  for (auto& v : values_) snap_to_f32(v);
}

int64_t ParamStore::total_params() const {
  int64_t n = 0;
  for (const auto& v : values_) n += v.numel();
  return n;
}

Var Graph::param(int param_id) {
  Node n;
  n.value = params_->value(param_id);
  n.needs_grad = true;
  n.param_id = param_id;
  return Var{push(std::move(n))};
}

Var Graph::input(Tensor t) {
  Node n;
  n.value = std::move(t);
  n.needs_grad = false;
  return Var{push(std::move(n))};
}

const Tensor* Graph::node_grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  return n.grad.numel() > 0 ? &n.grad : nullptr;
}

Tensor& Graph::grad_buf(int id) {
  Node& n = node(id);
  if (n.grad.numel() == 0) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

bool Graph::any_needs_grad(std::initializer_list<Var> vs) const {
  for (Var v : vs) {
    if (nodes_[static_cast<size_t>(v.id)].needs_grad) return true;
  }
  return false;
}

// ---- elementwise ----

Var Graph::add(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("add: " + ta.shape_str() + " vs " + tb.shape_str());
  Node n;
  n.value = Tensor(ta.shape());
  ker::add(ta.data(), tb.data(), n.value.data(), ta.numel());
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [](Graph& g, Node& self) {
      for (int i = 0; i < 2; ++i) {
        Node& in = g.node(self.ins[static_cast<size_t>(i)]);
        if (in.needs_grad)
          ker::axpy(1.0, self.grad.data(), g.grad_buf(self.ins[static_cast<size_t>(i)]).data(),
                    self.grad.numel());
      }
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::sub(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("sub: " + ta.shape_str() + " vs " + tb.shape_str());
  Node n;
  n.value = Tensor(ta.shape());
  ker::sub(ta.data(), tb.data(), n.value.data(), ta.numel());
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [](Graph& g, Node& self) {
      Node& na = g.node(self.ins[0]);
      Node& nb = g.node(self.ins[1]);
      if (na.needs_grad) ker::axpy(1.0, self.grad.data(), g.grad_buf(self.ins[0]).data(), self.grad.numel());
      if (nb.needs_grad) ker::axpy(-1.0, self.grad.data(), g.grad_buf(self.ins[1]).data(), self.grad.numel());
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::mul(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (!ta.same_shape(tb)) throw ShapeError("mul: " + ta.shape_str() + " vs " + tb.shape_str());
  Node n;
  n.value = Tensor(ta.shape());
  ker::mul(ta.data(), tb.data(), n.value.data(), ta.numel());
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [](Graph& g, Node& self) {
      Node& na = g.node(self.ins[0]);
      Node& nb = g.node(self.ins[1]);
      if (na.needs_grad)
        ker::mul_acc(self.grad.data(), nb.value.data(), g.grad_buf(self.ins[0]).data(), self.grad.numel());
      if (nb.needs_grad)
        ker::mul_acc(self.grad.data(), na.value.data(), g.grad_buf(self.ins[1]).data(), self.grad.numel());
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::scale(Var a, double s) {
  const Tensor& ta = val(a);
  Node n;
  n.value = Tensor(ta.shape());
  ker::scale(ta.data(), s, n.value.data(), ta.numel());
  n.ins = {a.id};
  n.needs_grad = node(a).needs_grad;
  if (n.needs_grad) {
    n.back = [s](Graph& g, Node& self) {
      ker::axpy(s, self.grad.data(), g.grad_buf(self.ins[0]).data(), self.grad.numel());
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::add_broadcast(Var x, Var p) {
  const Tensor& tx = val(x);
  const Tensor& tp = val(p);
  const int64_t tail = tp.numel();
  if (tx.numel() % tail != 0) throw ShapeError("add_broadcast: incompatible shapes");
  // p's shape must equal the trailing dims of x
  for (int i = 0; i < tp.ndim(); ++i) {
    if (tx.dim(tx.ndim() - tp.ndim() + i) != tp.dim(i))
      throw ShapeError("add_broadcast: trailing dims mismatch");
  }
  const int64_t lead = tx.numel() / tail;
  Node n;
  n.value = Tensor(tx.shape());
  ker::add_broadcast(tx.data(), tp.data(), n.value.data(), lead, tail);
  n.ins = {x.id, p.id};
  n.needs_grad = any_needs_grad({x, p});
  if (n.needs_grad) {
    n.back = [lead, tail](Graph& g, Node& self) {
      Node& nx = g.node(self.ins[0]);
      Node& np = g.node(self.ins[1]);
      if (nx.needs_grad)
        ker::axpy(1.0, self.grad.data(), g.grad_buf(self.ins[0]).data(), self.grad.numel());
      if (np.needs_grad)
        ker::sum_leading(self.grad.data(), g.grad_buf(self.ins[1]).data(), lead, tail, true);
    };
  }
  return Var{push(std::move(n))};
}

// ---- matmul family ----

Var Graph::matmul(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.ndim() < 2) throw ShapeError("matmul: lhs must have >= 2 dims");
  const int64_t k = ta.dim(ta.ndim() - 1);
  const int64_t nrow = ta.dim(ta.ndim() - 2);
  const int64_t batch = ta.numel() / (k * nrow);
  bool b_batched = false;
  int64_t m = 0;
  if (tb.ndim() == 2) {
    if (tb.dim(0) != k) throw ShapeError("matmul: inner dims " + ta.shape_str() + " x " + tb.shape_str());
    m = tb.dim(1);
  } else {
    if (tb.dim(tb.ndim() - 2) != k) throw ShapeError("matmul: inner dims " + ta.shape_str() + " x " + tb.shape_str());
    m = tb.dim(tb.ndim() - 1);
    if (tb.numel() / (k * m) != batch) throw ShapeError("matmul: batch mismatch");
    b_batched = true;
  }
  std::vector<int64_t> out_shape(ta.shape().begin(), ta.shape().end() - 1);
  out_shape.push_back(m);
  Node n;
  n.value = Tensor(out_shape);
  ker::mm_nn(ta.data(), tb.data(), n.value.data(), batch, nrow, k, m, b_batched);
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [batch, nrow, k, m, b_batched](Graph& g, Node& self) {
      Node& na = g.node(self.ins[0]);
      Node& nb = g.node(self.ins[1]);
      if (na.needs_grad) {
        // da += dy . b^T
        ker::mm_nt(self.grad.data(), nb.value.data(), g.grad_buf(self.ins[0]).data(), batch, nrow,
                   m, k, b_batched, /*accumulate=*/true);
      }
      if (nb.needs_grad) {
        Tensor& gb = g.grad_buf(self.ins[1]);
        if (b_batched) {
          ker::mm_tn_batched(na.value.data(), self.grad.data(), gb.data(), batch, nrow, k, m, true);
        } else {
          ker::mm_tn_sum(na.value.data(), self.grad.data(), gb.data(), batch * nrow, k, m, true);
        }
      }
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::matmul_nt(Var a, Var b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  const int64_t k = ta.dim(ta.ndim() - 1);
  const int64_t nrow = ta.dim(ta.ndim() - 2);
  const int64_t batch = ta.numel() / (k * nrow);
  if (tb.dim(tb.ndim() - 1) != k) throw ShapeError("matmul_nt: inner dims");
  const int64_t m = tb.dim(tb.ndim() - 2);
  if (tb.numel() / (k * m) != batch) throw ShapeError("matmul_nt: batch mismatch");
  std::vector<int64_t> out_shape(ta.shape().begin(), ta.shape().end() - 1);
  out_shape.push_back(m);
  Node n;
  n.value = Tensor(out_shape);
  ker::mm_nt(ta.data(), tb.data(), n.value.data(), batch, nrow, k, m, true);
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [batch, nrow, k, m](Graph& g, Node& self) {
      Node& na = g.node(self.ins[0]);
      Node& nb = g.node(self.ins[1]);
      if (na.needs_grad) {
        // da += dy . b
        ker::mm_nn(self.grad.data(), nb.value.data(), g.grad_buf(self.ins[0]).data(), batch, nrow,
                   m, k, /*b_batched=*/true, /*accumulate=*/true);
      }
      if (nb.needs_grad) {
        // db = dy^T . a  (per batch)
        Tensor& gb = g.grad_buf(self.ins[1]);
        ker::mm_tn_batched(self.grad.data(), na.value.data(), gb.data(), batch, nrow, m, k, true);
      }
    };
  }
  return Var{push(std::move(n))};
}

// ---- nonlinearities & norms ----

Var Graph::gelu(Var x) {
  const Tensor& tx = val(x);
  Node n;
  n.value = Tensor(tx.shape());
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.saved.emplace_back(Tensor(tx.shape()));
    ker::gelu_save(tx.data(), n.value.data(), n.saved[0].data(), tx.numel());
    n.back = [](Graph& g, Node& self) {
      const Tensor& xin = g.node(self.ins[0]).value;
      ker::gelu_bwd_saved(xin.data(), self.saved[0].data(), self.grad.data(),
                          g.grad_buf(self.ins[0]).data(), xin.numel());
    };
  } else {
    ker::gelu(tx.data(), n.value.data(), tx.numel());
  }
  return Var{push(std::move(n))};
}

Var Graph::layer_norm(Var x, double eps) {
  const Tensor& tx = val(x);
  const int64_t c = tx.last();
  const int64_t rows = tx.numel() / c;
  Node n;
  n.value = Tensor(tx.shape());
  n.saved.emplace_back(Tensor({rows}));
  n.saved.emplace_back(Tensor({rows}));
  ker::layer_norm(tx.data(), n.value.data(), n.saved[0].data(), n.saved[1].data(), rows, c, eps);
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [rows, c](Graph& g, Node& self) {
      const Tensor& xin = g.node(self.ins[0]).value;
      ker::layer_norm_bwd(xin.data(), self.saved[0].data(), self.saved[1].data(), self.grad.data(),
                          g.grad_buf(self.ins[0]).data(), rows, c);
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::scale_shift(Var x, Var gv, Var bv) {
  const Tensor& tx = val(x);
  const Tensor& tg = val(gv);
  const Tensor& tb = val(bv);
  const int64_t c = tx.last();
  if (tg.numel() != c || tb.numel() != c) throw ShapeError("scale_shift: gamma/beta must match last dim");
  const int64_t rows = tx.numel() / c;
  Node n;
  n.value = Tensor(tx.shape());
  ker::scale_shift(tx.data(), tg.data(), tb.data(), n.value.data(), rows, c);
  n.ins = {x.id, gv.id, bv.id};
  n.needs_grad = any_needs_grad({x, gv, bv});
  if (n.needs_grad) {
    n.back = [rows, c](Graph& g, Node& self) {
      const Tensor& xin = g.node(self.ins[0]).value;
      const Tensor& gin = g.node(self.ins[1]).value;
      ker::scale_shift_bwd(xin.data(), gin.data(), self.grad.data(),
                           g.grad_buf(self.ins[0]).data(), g.grad_buf(self.ins[1]).data(),
                           g.grad_buf(self.ins[2]).data(), rows, c);
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::softmax(Var x) {
  const Tensor& tx = val(x);
  const int64_t c = tx.last();
  const int64_t rows = tx.numel() / c;
  Node n;
  n.value = Tensor(tx.shape());
  ker::softmax(tx.data(), n.value.data(), rows, c);
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [rows, c](Graph& g, Node& self) {
      ker::softmax_bwd(self.value.data(), self.grad.data(), g.grad_buf(self.ins[0]).data(), rows, c);
    };
  }
  return Var{push(std::move(n))};
}

// ---- structural ops ----

namespace {
int64_t prod_range(const std::vector<int64_t>& s, int lo, int hi) {
  int64_t p = 1;
  for (int i = lo; i < hi; ++i) p *= s[static_cast<size_t>(i)];
  return p;
}
}  // namespace

Var Graph::concat(Var a, Var b, int axis) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  if (ta.ndim() != tb.ndim()) throw ShapeError("concat: rank mismatch");
  for (int i = 0; i < ta.ndim(); ++i) {
    if (i != axis && ta.dim(i) != tb.dim(i)) throw ShapeError("concat: dim mismatch");
  }
  std::vector<int64_t> shape = ta.shape();
  shape[static_cast<size_t>(axis)] += tb.dim(axis);
  const int64_t lead = prod_range(ta.shape(), 0, axis);
  const int64_t inner = prod_range(ta.shape(), axis + 1, ta.ndim());
  const int64_t block_a = ta.dim(axis) * inner;
  const int64_t block_b = tb.dim(axis) * inner;
  Node n;
  n.value = Tensor(shape);
  for (int64_t l = 0; l < lead; ++l) {
    std::memcpy(n.value.data() + l * (block_a + block_b), ta.data() + l * block_a,
                static_cast<size_t>(block_a) * sizeof(double));
    std::memcpy(n.value.data() + l * (block_a + block_b) + block_a, tb.data() + l * block_b,
                static_cast<size_t>(block_b) * sizeof(double));
  }
  n.ins = {a.id, b.id};
  n.needs_grad = any_needs_grad({a, b});
  if (n.needs_grad) {
    n.back = [lead, block_a, block_b](Graph& g, Node& self) {
      Node& na = g.node(self.ins[0]);
      Node& nb = g.node(self.ins[1]);
      for (int64_t l = 0; l < lead; ++l) {
        const double* src = self.grad.data() + l * (block_a + block_b);
        if (na.needs_grad)
          ker::axpy(1.0, src, g.grad_buf(self.ins[0]).data() + l * block_a, block_a);
        if (nb.needs_grad)
          ker::axpy(1.0, src + block_a, g.grad_buf(self.ins[1]).data() + l * block_b, block_b);
      }
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::expand(Var x, int axis, int64_t nrep) {
  const Tensor& tx = val(x);
  std::vector<int64_t> shape = tx.shape();
  shape.insert(shape.begin() + axis, nrep);
  const int64_t lead = prod_range(tx.shape(), 0, axis);
  const int64_t tail = prod_range(tx.shape(), axis, tx.ndim());
  Node n;
  n.value = Tensor(shape);
  for (int64_t l = 0; l < lead; ++l) {
    for (int64_t r = 0; r < nrep; ++r) {
      std::memcpy(n.value.data() + (l * nrep + r) * tail, tx.data() + l * tail,
                  static_cast<size_t>(tail) * sizeof(double));
    }
  }
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [lead, nrep, tail](Graph& g, Node& self) {
      double* dst = g.grad_buf(self.ins[0]).data();
      for (int64_t l = 0; l < lead; ++l) {
        for (int64_t r = 0; r < nrep; ++r) {
          ker::axpy(1.0, self.grad.data() + (l * nrep + r) * tail, dst + l * tail, tail);
        }
      }
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::slice(Var x, int axis, int64_t start, int64_t len) {
  const Tensor& tx = val(x);
  if (start < 0 || start + len > tx.dim(axis)) throw ShapeError("slice: out of range");
  std::vector<int64_t> shape = tx.shape();
  shape[static_cast<size_t>(axis)] = len;
  const int64_t lead = prod_range(tx.shape(), 0, axis);
  const int64_t inner = prod_range(tx.shape(), axis + 1, tx.ndim());
  const int64_t src_block = tx.dim(axis) * inner;
  const int64_t dst_block = len * inner;
  Node n;
  n.value = Tensor(shape);
  for (int64_t l = 0; l < lead; ++l) {
    std::memcpy(n.value.data() + l * dst_block, tx.data() + l * src_block + start * inner,
                static_cast<size_t>(dst_block) * sizeof(double));
  }
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [lead, inner, src_block, dst_block, start](Graph& g, Node& self) {
      double* dst = g.grad_buf(self.ins[0]).data();
      for (int64_t l = 0; l < lead; ++l) {
        ker::axpy(1.0, self.grad.data() + l * dst_block, dst + l * src_block + start * inner,
                  dst_block);
      }
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::reshape(Var x, std::vector<int64_t> shape) {
  const Tensor& tx = val(x);
  if (numel_of(shape) != tx.numel()) throw ShapeError("reshape: numel mismatch");
  Node n;
  n.value = Tensor(shape, std::vector<double>(tx.data(), tx.data() + tx.numel()));
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [](Graph& g, Node& self) {
      ker::axpy(1.0, self.grad.data(), g.grad_buf(self.ins[0]).data(), self.grad.numel());
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::swap_axes(Var x, int ax0, int ax1) {
  const Tensor& tx = val(x);
  if (ax0 > ax1) std::swap(ax0, ax1);
  if (ax0 == ax1) return reshape(x, tx.shape());
  std::vector<int64_t> shape = tx.shape();
  std::swap(shape[static_cast<size_t>(ax0)], shape[static_cast<size_t>(ax1)]);
  const int64_t lead = prod_range(tx.shape(), 0, ax0);
  const int64_t da = tx.dim(ax0);
  const int64_t mid = prod_range(tx.shape(), ax0 + 1, ax1);
  const int64_t db = tx.dim(ax1);
  const int64_t tail = prod_range(tx.shape(), ax1 + 1, tx.ndim());
  auto permute = [=](const double* src, double* dst, bool fwd) {
    // fwd: [lead, da, mid, db, tail] -> [lead, db, mid, da, tail]
    for (int64_t l = 0; l < lead; ++l)
      for (int64_t i = 0; i < da; ++i)
        for (int64_t m = 0; m < mid; ++m)
          for (int64_t j = 0; j < db; ++j) {
            const int64_t s = (((l * da + i) * mid + m) * db + j) * tail;
            const int64_t d = (((l * db + j) * mid + m) * da + i) * tail;
            if (fwd) {
              std::memcpy(dst + d, src + s, static_cast<size_t>(tail) * sizeof(double));
            } else {
              for (int64_t t = 0; t < tail; ++t) dst[s + t] += src[d + t];
            }
          }
  };
  Node n;
  n.value = Tensor(shape);
  permute(tx.data(), n.value.data(), true);
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [permute](Graph& g, Node& self) {
      permute(self.grad.data(), g.grad_buf(self.ins[0]).data(), false);
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::gather_mode(Var x, std::vector<int64_t> idx) {
  const Tensor& tx = val(x);
  if (tx.ndim() < 2) throw ShapeError("gather_mode: needs [B,M,..]");
  const int64_t b = tx.dim(0);
  const int64_t m = tx.dim(1);
  if (static_cast<int64_t>(idx.size()) != b) throw ShapeError("gather_mode: index count");
  for (int64_t i : idx) {
    if (i < 0 || i >= m) throw ShapeError("gather_mode: index out of range");
  }
  const int64_t inner = tx.numel() / (b * m);
  std::vector<int64_t> shape(tx.shape().begin() + 2, tx.shape().end());
  shape.insert(shape.begin(), b);
  Node n;
  n.value = Tensor(shape);
  for (int64_t l = 0; l < b; ++l) {
    std::memcpy(n.value.data() + l * inner, tx.data() + (l * m + idx[static_cast<size_t>(l)]) * inner,
                static_cast<size_t>(inner) * sizeof(double));
  }
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [b, m, inner, idx](Graph& g, Node& self) {
      double* dst = g.grad_buf(self.ins[0]).data();
      for (int64_t l = 0; l < b; ++l) {
        ker::axpy(1.0, self.grad.data() + l * inner,
                  dst + (l * m + idx[static_cast<size_t>(l)]) * inner, inner);
      }
    };
  }
  return Var{push(std::move(n))};
}

// ---- reductions & losses ----

Var Graph::mean_all(Var x) {
  const Tensor& tx = val(x);
  const int64_t cnt = tx.numel();
  Node n;
  n.value = Tensor::scalar(ker::sum(tx.data(), cnt) / static_cast<double>(cnt));
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [cnt](Graph& g, Node& self) {
      const double gs = self.grad[0] / static_cast<double>(cnt);
      double* dst = g.grad_buf(self.ins[0]).data();
      for (int64_t i = 0; i < cnt; ++i) dst[i] += gs;
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::sum_all(Var x) {
  const Tensor& tx = val(x);
  const int64_t cnt = tx.numel();
  Node n;
  n.value = Tensor::scalar(ker::sum(tx.data(), cnt));
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [cnt](Graph& g, Node& self) {
      const double gs = self.grad[0];
      double* dst = g.grad_buf(self.ins[0]).data();
      for (int64_t i = 0; i < cnt; ++i) dst[i] += gs;
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::cross_entropy_mean(Var logits, std::vector<int> labels) {
  const Tensor& tl = val(logits);
  const int64_t k = tl.last();
  const int64_t rows = tl.numel() / k;
  if (static_cast<int64_t>(labels.size()) != rows) throw ShapeError("cross_entropy: label count");
  for (int v : labels) {
    if (v < 0 || v >= k) throw ShapeError("cross_entropy: label out of range");
  }
  Node n;
  n.saved.emplace_back(Tensor({rows, k}));
  const double loss = ker::ce_mean(tl.data(), labels.data(), n.saved[0].data(), rows, k);
  n.value = Tensor::scalar(loss);
  n.ins = {logits.id};
  n.needs_grad = node(logits).needs_grad;
  if (n.needs_grad) {
    n.back = [rows, k, labels = std::move(labels)](Graph& g, Node& self) {
      ker::ce_bwd(self.saved[0].data(), labels.data(), self.grad[0],
                  g.grad_buf(self.ins[0]).data(), rows, k);
    };
  }
  return Var{push(std::move(n))};
}

Var Graph::l1_mean(Var x, Tensor target) {
  const Tensor& tx = val(x);
  if (!tx.same_shape(target)) throw ShapeError("l1_mean: shape mismatch");
  Node n;
  const int64_t cnt = tx.numel();
  n.saved.push_back(std::move(target));
  n.value = Tensor::scalar(ker::l1_mean(tx.data(), n.saved[0].data(), cnt));
  n.ins = {x.id};
  n.needs_grad = node(x).needs_grad;
  if (n.needs_grad) {
    n.back = [cnt](Graph& g, Node& self) {
      ker::l1_bwd(g.node(self.ins[0]).value.data(), self.saved[0].data(), self.grad[0],
                  g.grad_buf(self.ins[0]).data(), cnt);
    };
  }
  return Var{push(std::move(n))};
}

void Graph::backward(Var loss) {
  Node& ln = node(loss);
  if (ln.value.numel() != 1) throw ShapeError("backward: loss must be scalar");
  grad_buf(loss.id)[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = node(id);
    if (n.grad.numel() == 0 || !n.needs_grad) continue;
    if (n.back) n.back(*this, n);
    if (n.param_id >= 0 && params_ != nullptr) {
      Tensor& pg = params_->grad(n.param_id);
      ker::axpy(1.0, n.grad.data(), pg.data(), pg.numel());
    }
  }
}

}  // namespace seerdrive
