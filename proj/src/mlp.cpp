#include "radiance/mlp.hpp"

#include <string>

namespace rf {

std::size_t MlpSpec::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l)
    n += static_cast<std::size_t>(fan_out(l)) * static_cast<std::size_t>(fan_in(l) + 1);
  return n;
}

void validate(const MlpSpec& spec) {
  if (spec.inputs < 1 || spec.outputs < 1) throw InputError("MLP widths must be at least 1");
  for (int w : spec.hidden)
    if (w < 1) throw InputError("MLP hidden widths must be at least 1");
  if (spec.density_output >= spec.outputs) throw InputError("density output index out of range");
}

std::vector<LayerSlice> layer_slices(const MlpSpec& spec) {
  validate(spec);
  std::vector<LayerSlice> slices;
  std::size_t offset = 0;
  for (int l = 0; l < spec.layer_count(); ++l) {
    LayerSlice s;
    s.rows = spec.fan_out(l);
    s.cols = spec.fan_in(l);
    s.weight_offset = offset;
    offset += static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(s.rows);
    slices.push_back(s);
  }
  return slices;
}

template <typename T>
void init_params(std::span<T> params, const MlpSpec& spec, std::uint64_t seed) {
  const auto slices = layer_slices(spec);
  if (params.size() != spec.parameter_count()) throw InputError("parameter block size mismatch");
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const LayerSlice& s = slices[l];
    RandomStream rng({seed, 0x6d6c70ULL, l});
    const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
    const std::size_t count = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
    for (std::size_t i = 0; i < count; ++i)
      params[s.weight_offset + i] = static_cast<T>(rng.uniform(-limit, limit));
    for (int r = 0; r < s.rows; ++r) params[s.bias_offset + static_cast<std::size_t>(r)] = T(0);
  }
  if (spec.density_output >= 0) {
    const LayerSlice& last = slices.back();
    params[last.bias_offset + static_cast<std::size_t>(spec.density_output)] =
        static_cast<T>(inverse_softplus(0.1));
  }
}

namespace {

// z = W x + b, one column at a time with a fixed summation order per output
// (bias first, then k ascending). Eigen's blocked products pick kernels by
// column position and batch size, which would let a point's outputs depend on
// what else is in the batch. `wc` is W in column-major order. This file is
// built without FMA contraction so vector and scalar tails round alike.
template <typename T>
void affine_columns(const Matrix<T>& wc, const T* bias, const Matrix<T>& x, Matrix<T>& z) {
  const Eigen::Index rows = wc.rows(), inner = wc.cols(), n = x.cols();
  z.resize(rows, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    T* __restrict zj = z.col(j).data();
    for (Eigen::Index r = 0; r < rows; ++r) zj[r] = bias[r];
    const T* xj = x.col(j).data();
    for (Eigen::Index k = 0; k < inner; ++k) {
      const T xv = xj[k];
      if (xv == T(0)) continue;  // ReLU zeros; adding 0 * w changes nothing for finite w
      const T* __restrict wk = wc.col(k).data();
      for (Eigen::Index r = 0; r < rows; ++r) zj[r] += wk[r] * xv;
    }
  }
}

template <typename T>
void activate(Activation a, const Matrix<T>& z, Matrix<T>& y) {
  switch (a) {
    case Activation::Identity:
      y = z;
      break;
    case Activation::Relu:
      y = z.cwiseMax(T(0));
      break;
    case Activation::Softplus:
      y = z.unaryExpr([](T v) { return v > T(30) ? v : T(std::log1p(std::exp(v))); });
      break;
    case Activation::Logistic:
      y = z.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
      break;
  }
}

// Overwrites `dy` with dy * act'(z).
template <typename T>
void activation_backward(Activation a, const Matrix<T>& z, Matrix<T>& dy) {
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      dy = (z.array() > T(0)).select(dy, T(0));
      break;
    case Activation::Softplus:
      dy.array() *= z.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); }).array();
      break;
    case Activation::Logistic:
      dy.array() *= z.unaryExpr([](T v) {
                       // from |z|, so a saturated output (s == 1 in float) keeps a nonzero slope
                       const T e = std::exp(-std::abs(v));
                       return e / ((T(1) + e) * (T(1) + e));
                     }).array();
      break;
  }
}

}  // namespace

template <typename T>
ForwardResult<T> MlpKernels<T>::forward(std::span<const T> params, const MlpSpec& spec,
                                        const Matrix<T>& input, bool record) {
  const auto slices = layer_slices(spec);
  if (params.size() != spec.parameter_count())
    throw InputError("parameter block does not match MLP spec");
  if (input.rows() != spec.inputs)
    throw InputError("MLP input width " + std::to_string(input.rows()) + " != spec width " +
                     std::to_string(spec.inputs));

  ForwardResult<T> result;
  GradientTape<T> tape;
  Matrix<T> x = input;
  Matrix<T> z;
  for (std::size_t l = 0; l < slices.size(); ++l) {
    const LayerSlice& s = slices[l];
    const Matrix<T> wc = Eigen::Map<const RowMatrix<T>>(params.data() + s.weight_offset, s.rows, s.cols);
    affine_columns<T>(wc, params.data() + s.bias_offset, x, z);
    if (!z.allFinite())
      throw NumericError("non-finite activation in MLP layer " + std::to_string(l),
                         static_cast<int>(l));
    Matrix<T> y;
    activate(spec.activation(static_cast<int>(l)), z, y);
    if (record) {
      tape.inputs_.push_back(std::move(x));
      tape.preacts_.push_back(z);
    }
    x = std::move(y);
  }
  result.output = std::move(x);
  if (record) {
    tape.params_ = params.data();
    result.tape = std::move(tape);
  }
  return result;
}

template <typename T>
Matrix<T> MlpKernels<T>::backward(std::span<const T> params, const MlpSpec& spec,
                                  GradientTape<T>& tape, const Matrix<T>& output_cotangent,
                                  std::span<T> grad) {
  if (tape.consumed_) throw UsageError("gradient tape already consumed by a backward pass");
  const auto slices = layer_slices(spec);
  if (tape.params_ != params.data() || tape.inputs_.size() != slices.size())
    throw InputError("gradient tape was recorded with different parameters");
  if (grad.size() != params.size()) throw InputError("gradient buffer size mismatch");
  if (output_cotangent.rows() != spec.outputs || output_cotangent.cols() != tape.batch())
    throw InputError("output cotangent shape does not match the recorded batch");
  tape.consumed_ = true;

  Matrix<T> dy = output_cotangent;
  for (std::size_t li = slices.size(); li-- > 0;) {
    const LayerSlice& s = slices[li];
    activation_backward(spec.activation(static_cast<int>(li)), tape.preacts_[li], dy);
    // Copied into aligned storage: Eigen's small-product kernels round
    // differently depending on operand alignment, and the caller's buffers are
    // aligned however the allocator left them.
    const RowMatrix<T> w = Eigen::Map<const RowMatrix<T>>(params.data() + s.weight_offset, s.rows, s.cols);
    Eigen::Map<RowMatrix<T>> dw(grad.data() + s.weight_offset, s.rows, s.cols);
    Eigen::Map<Vector<T>> db(grad.data() + s.bias_offset, s.rows);
    // Products land in aligned temporaries first (same reason as in forward).
    const RowMatrix<T> dw_local = dy * tape.inputs_[li].transpose();
    const Vector<T> db_local = dy.rowwise().sum();
    dw += dw_local;
    db += db_local;
    Matrix<T> dx = w.transpose() * dy;
    dy = std::move(dx);
    tape.inputs_[li].resize(0, 0);
    tape.preacts_[li].resize(0, 0);
  }
  return dy;
}

template struct MlpKernels<float>;
template struct MlpKernels<double>;
template void init_params<float>(std::span<float>, const MlpSpec&, std::uint64_t);
template void init_params<double>(std::span<double>, const MlpSpec&, std::uint64_t);

}  // namespace rf
