#include "seerdrive/core/tensor.hpp"

namespace seerdrive {

double snap_to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void snap_to_f32(std::vector<double>& v) {
  for (double& x : v) x = snap_to_f32(x);
}

void snap_to_f32(Tensor& t) {
  double* p = t.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) p[i] = snap_to_f32(p[i]);
}

}  // namespace seerdrive
