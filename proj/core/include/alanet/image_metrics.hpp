#pragma once

#include "alanet/tensor.hpp"

namespace alanet {

// 10*log10(1/MSE) on the [0,1] scale after clamping both inputs into [0,1].
// Identical inputs are capped at 99 dB. Symmetric.
double psnr(const TensorPtr& x, const TensorPtr& y);

// Mean structural similarity over an 11x11 Gaussian window with sigma 1.5,
// K1 = 0.01, K2 = 0.03, dynamic range 1.0, averaged over full-overlap window
// positions per channel and then over channels. Requires min(H, W) >= 11.
double ssim(const TensorPtr& x, const TensorPtr& y);

} // namespace alanet
