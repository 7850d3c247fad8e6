#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "alanet/rng.hpp"

namespace alanet {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major tensor of doubles with an optional gradient slot.
// Operation results hold strong references to their operands plus a closure
// that scatters the incoming gradient; backward() replays the closures in
// reverse topological order. Leaves created with requires_grad accumulate
// into `grad`; everything else is dropped when the result goes out of scope.
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> data;
    std::vector<double> grad;      // sized lazily, always matches data once used
    bool requires_grad = false;
    std::vector<TensorPtr> inputs;
    std::function<void()> backward_fn;

    std::int64_t size() const;
    std::int64_t dim(std::size_t axis) const;
    double value() const;          // single-element tensors only
    void ensure_grad();
    void zero_grad();
    void backward();               // entry point, single-element tensors only
};

TensorPtr tensor(std::vector<std::int64_t> shape, std::vector<double> values,
                 bool requires_grad = false);
TensorPtr zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
TensorPtr full(std::vector<std::int64_t> shape, double fill, bool requires_grad = false);
TensorPtr scalar(double v);
TensorPtr randn(std::vector<std::int64_t> shape, Rng& rng, double stddev = 1.0,
                bool requires_grad = false);

bool same_shape(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

// Elementwise arithmetic. Operands must have identical shapes, or one side is
// a single element (scalar broadcast), or a channel vector {1,C} / {C} paired
// with a {C,H,W} map (per-channel broadcast). Anything else is a DimensionError.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr neg(const TensorPtr& a);
TensorPtr scale(const TensorPtr& a, double factor);
TensorPtr complement(const TensorPtr& a);   // 1 - a
TensorPtr abs_value(const TensorPtr& a);    // subgradient 0 at 0
TensorPtr relu(const TensorPtr& a);
TensorPtr sigmoid(const TensorPtr& a);

// 2-D linear algebra.
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);
TensorPtr softmax(const TensorPtr& a, int axis);  // max-shifted, rows/cols sum to 1
TensorPtr linear(const TensorPtr& x, const TensorPtr& weight, const TensorPtr& bias);

// Shape plumbing. reshape copies; element count must match.
TensorPtr reshape(const TensorPtr& a, std::vector<std::int64_t> shape);

// Feature-map operations on {C,H,W}.
// conv2d is cross-correlation with zero padding k/2 (odd k only), so stride 1
// preserves H and W. kernel is {Cout,Cin,k,k}; bias {Cout} or null.
TensorPtr conv2d(const TensorPtr& x, const TensorPtr& kernel, const TensorPtr& bias,
                 std::int64_t stride = 1);
TensorPtr pool_spatial_avg(const TensorPtr& x);   // -> {1,C}
TensorPtr pool_spatial_max(const TensorPtr& x);   // -> {1,C}, grad to first max
TensorPtr pool_channel_avg(const TensorPtr& x);   // -> {H*W,1}
TensorPtr slice_channels(const TensorPtr& x, std::int64_t begin, std::int64_t end);
TensorPtr concat_channels(const std::vector<TensorPtr>& parts);
TensorPtr upsample_nearest2(const TensorPtr& x);  // -> {C,2H,2W}
// Per-channel standardization over spatial positions with learned gain/shift.
TensorPtr channel_norm(const TensorPtr& x, const TensorPtr& gain, const TensorPtr& shift,
                       double eps = 1e-5);
// Forward differences; the final column/row is defined as zero so shape is kept.
TensorPtr diff_right(const TensorPtr& x);
TensorPtr diff_down(const TensorPtr& x);

// Reductions to a {1} tensor.
TensorPtr sum_all(const TensorPtr& a);
TensorPtr mean_all(const TensorPtr& a);

// Elementwise 1/sqrt(a + eps); every a + eps must be positive.
TensorPtr rsqrt(const TensorPtr& a, double eps = 0.0);

// Whole-map RMS normalization with a per-channel gain:
// y = gain ⊙ x / sqrt(mean(x^2) + eps). Well defined down to 1x1 spatial
// maps, unlike per-channel statistics.
TensorPtr rms_norm(const TensorPtr& x, const TensorPtr& gain, double eps = 1e-5);

// Evaluation-time clamp to [0,1]. Detached: no gradient flows through it.
TensorPtr clamp01(const TensorPtr& a);

} // namespace alanet
