#pragma once

#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "seerdrive/core/tensor.hpp"

namespace seerdrive {

// Named learnable tensors plus their gradient buffers. Ids are insertion
// order, which fixes serialization order and optimizer traversal order.
class ParamStore {
 public:
  int add(const std::string& name, Tensor init);
  int find(const std::string& name) const;  // -1 if absent
  int count() const { return static_cast<int>(values_.size()); }
  const std::string& name(int id) const { return names_[static_cast<size_t>(id)]; }
  Tensor& value(int id) { return values_[static_cast<size_t>(id)]; }
  const Tensor& value(int id) const { return values_[static_cast<size_t>(id)]; }
  Tensor& grad(int id);
  bool has_grad(int id) const { return grads_[static_cast<size_t>(id)].numel() > 0; }
  void zero_grads();
  void snap_f32();
  int64_t total_params() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::unordered_map<std::string, int> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Values are computed eagerly as ops are recorded;
// backward() walks the tape once in reverse and accumulates gradients into
// node buffers and, for leaves, into the bound ParamStore.
class Graph {
 public:
  explicit Graph(ParamStore* params = nullptr) : params_(params) {}

  Var param(int param_id);
  Var input(Tensor t);

  const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  // Gradient at a node after backward(); nullptr when no gradient reached it.
  const Tensor* node_grad(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_broadcast(Var x, Var p);  // p matches trailing dims of x
  Var matmul(Var a, Var b);         // [..,n,k] x [k,m] or [..,k,m]
  Var matmul_nt(Var a, Var b);      // [..,n,k] x [..,m,k] -> [..,n,m]
  Var gelu(Var x);
  Var layer_norm(Var x, double eps);
  Var scale_shift(Var x, Var g, Var b);  // g,b: [last dim]
  Var softmax(Var x);
  Var concat(Var a, Var b, int axis);
  Var expand(Var x, int axis, int64_t n);  // insert axis of size n (repeat)
  Var slice(Var x, int axis, int64_t start, int64_t len);
  Var reshape(Var x, std::vector<int64_t> shape);
  Var swap_axes(Var x, int ax0, int ax1);
  Var gather_mode(Var x, std::vector<int64_t> idx);  // x: [B,M,..] -> [B,..]
  Var mean_all(Var x);
  Var sum_all(Var x);
  Var cross_entropy_mean(Var logits, std::vector<int> labels);
  Var l1_mean(Var x, Tensor target);

  void backward(Var loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    int param_id = -1;
    std::vector<int> ins;
    std::vector<Tensor> saved;
    std::function<void(Graph&, Node&)> back;
  };

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  Node& node(Var v) { return nodes_[static_cast<size_t>(v.id)]; }
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_buf(int id);
  bool any_needs_grad(std::initializer_list<Var> vs) const;

  ParamStore* params_ = nullptr;
  std::deque<Node> nodes_;
};

}  // namespace seerdrive
