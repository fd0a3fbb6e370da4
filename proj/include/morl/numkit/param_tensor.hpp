#ifndef MORL_NUMKIT_PARAM_TENSOR_HPP_
#define MORL_NUMKIT_PARAM_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "morl/common/error.hpp"

namespace morl::numkit {

// Eigen picks its SIMD peeling from the runtime address, so storage has a
// fixed alignment to keep results independent of where the heap puts it.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

// A named, learnable tensor with its gradient accumulator. Values are stored
// flat in row-major order.
struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  AlignedBuffer values;
  AlignedBuffer grad;

  ParamTensor() = default;
  ParamTensor(std::string tensor_name, std::vector<std::size_t> tensor_shape)
      : name(std::move(tensor_name)), shape(std::move(tensor_shape)) {
    const std::size_t n = element_count(shape);
    values.assign(n, 0.0);
    grad.assign(n, 0.0);
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t size() const { return values.size(); }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  bool consistent() const {
    return element_count(shape) == values.size() && values.size() == grad.size();
  }

  void check_finite(const char* what) const {
    const auto& data = std::string_view(what) == "grad" ? grad : values;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        throw NumericError("non-finite " + std::string(what) + " in tensor '" +
                           name + "' at flat index " + std::to_string(i));
      }
    }
  }
};

using ParamRefs = std::vector<ParamTensor*>;

inline std::size_t parameter_count(const ParamRefs& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->size();
  return n;
}

inline void zero_grads(const ParamRefs& params) {
  for (auto* p : params) p->zero_grad();
}

inline double grad_norm(const ParamRefs& params) {
  double sq = 0.0;
  for (const auto* p : params) {
    for (double g : p->grad) sq += g * g;
  }
  return std::sqrt(sq);
}

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
inline double clip_grad_norm(const ParamRefs& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto* p : params) {
      for (double& g : p->grad) g *= scale;
    }
  }
  return norm;
}

}  // namespace morl::numkit

#endif  // MORL_NUMKIT_PARAM_TENSOR_HPP_
