#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radiance/common.hpp"
#include "radiance/rng.hpp"

namespace rf {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { Identity, Relu, Softplus, Logistic };

// Fully connected stack: inputs -> hidden[0] -> ... -> hidden[k-1] -> outputs.
struct MlpSpec {
  int inputs = 1;
  std::vector<int> hidden;
  int outputs = 1;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Identity;
  // Output unit whose bias is warm-started so softplus(bias) == 0.1; -1 for none.
  int density_output = -1;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int fan_in(int layer) const { return layer == 0 ? inputs : hidden[layer - 1]; }
  int fan_out(int layer) const {
    return layer == layer_count() - 1 ? outputs : hidden[layer];
  }
  Activation activation(int layer) const {
    return layer == layer_count() - 1 ? output_activation : hidden_activation;
  }
  std::size_t parameter_count() const;
};

void validate(const MlpSpec& spec);

// Offsets of one dense layer inside a flat parameter array. Weights are stored
// row-major as (fan_out x fan_in) followed by fan_out biases.
struct LayerSlice {
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  int rows = 0;
  int cols = 0;
};

std::vector<LayerSlice> layer_slices(const MlpSpec& spec);

inline double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }
inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

template <typename T>
class ParameterBlock {
 public:
  ParameterBlock() = default;
  explicit ParameterBlock(const MlpSpec& spec)
      : spec_(spec), slices_(layer_slices(spec)), values_(spec.parameter_count(), T(0)) {}

  const MlpSpec& spec() const { return spec_; }
  const std::vector<LayerSlice>& slices() const { return slices_; }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  MlpSpec spec_;
  std::vector<LayerSlice> slices_;
  std::vector<T> values_;
};

// Glorot-uniform weights, zero biases (except the density warm start).
template <typename T>
void init_params(std::span<T> params, const MlpSpec& spec, std::uint64_t seed);

template <typename T>
ParameterBlock<T> init_params(const MlpSpec& spec, std::uint64_t seed) {
  ParameterBlock<T> block(spec);
  init_params<T>(block.values(), spec, seed);
  return block;
}

// Primal values recorded by a forward pass; consumed by exactly one backward.
template <typename T>
class GradientTape {
 public:
  bool consumed() const { return consumed_; }
  Eigen::Index batch() const { return inputs_.empty() ? 0 : inputs_.front().cols(); }

 private:
  template <typename U>
  friend struct MlpKernels;

  std::vector<Matrix<T>> inputs_;
  std::vector<Matrix<T>> preacts_;
  const T* params_ = nullptr;
  bool consumed_ = false;
};

template <typename T>
struct ForwardResult {
  Matrix<T> output;  // outputs x batch
  std::optional<GradientTape<T>> tape;
};

template <typename T>
struct MlpGradients {
  std::vector<T> params;
  Matrix<T> input;  // inputs x batch
};

template <typename T>
struct MlpKernels {
  static ForwardResult<T> forward(std::span<const T> params, const MlpSpec& spec,
                                  const Matrix<T>& input, bool record);
  static Matrix<T> backward(std::span<const T> params, const MlpSpec& spec,
                            GradientTape<T>& tape, const Matrix<T>& output_cotangent,
                            std::span<T> grad);
};

// `input` is (inputs x batch), one column per sample.
template <typename T>
ForwardResult<T> forward(std::span<const T> params, const MlpSpec& spec, const Matrix<T>& input,
                         bool record = false) {
  return MlpKernels<T>::forward(params, spec, input, record);
}

// Accumulates d(<cotangent, output>)/d(params) into `grad` and returns the
// input cotangent. Consumes the tape.
template <typename T>
Matrix<T> backward(std::span<const T> params, const MlpSpec& spec, GradientTape<T>& tape,
                   const Matrix<T>& output_cotangent, std::span<T> grad) {
  return MlpKernels<T>::backward(params, spec, tape, output_cotangent, grad);
}

template <typename T>
MlpGradients<T> backward(std::span<const T> params, const MlpSpec& spec, GradientTape<T>& tape,
                         const Matrix<T>& output_cotangent) {
  MlpGradients<T> g;
  g.params.assign(params.size(), T(0));
  g.input = MlpKernels<T>::backward(params, spec, tape, output_cotangent, g.params);
  return g;
}

extern template struct MlpKernels<float>;
extern template struct MlpKernels<double>;
extern template void init_params<float>(std::span<float>, const MlpSpec&, std::uint64_t);
extern template void init_params<double>(std::span<double>, const MlpSpec&, std::uint64_t);

}  // namespace rf
