#include "alanet/image_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "alanet/errors.hpp"

namespace alanet {

namespace {

void require_same_image(const char* op, const Tensor& x, const Tensor& y) {
    if (x.shape.size() != 3 || x.shape != y.shape) {
        throw DimensionError(std::string(op) + " needs two {C,H,W} tensors of one shape");
    }
}

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
const std::vector<double>& ssim_window() {
    static const std::vector<double> window = [] {
        std::vector<double> w(11 * 11);
        double total = 0.0;
        for (int i = 0; i < 11; ++i) {
            for (int j = 0; j < 11; ++j) {
                double dy = i - 5, dx = j - 5;
                w[i * 11 + j] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
                total += w[i * 11 + j];
            }
        }
        for (double& v : w) v /= total;
        return w;
    }();
    return window;
}

} // namespace

double psnr(const TensorPtr& x, const TensorPtr& y) {
    require_same_image("psnr", *x, *y);
    double mse = 0.0;
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        double a = std::clamp(x->data[i], 0.0, 1.0);
        double b = std::clamp(y->data[i], 0.0, 1.0);
        mse += (a - b) * (a - b);
    }
    mse /= static_cast<double>(x->data.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const TensorPtr& x, const TensorPtr& y) {
    require_same_image("ssim", *x, *y);
    std::int64_t c = x->shape[0], h = x->shape[1], w = x->shape[2];
    if (h < 11 || w < 11) throw ConfigError("ssim needs min(H,W) >= 11");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const auto& window = ssim_window();
    double channel_sum = 0.0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* xp = x->data.data() + ch * h * w;
        const double* yp = y->data.data() + ch * h * w;
        double score_sum = 0.0;
        std::int64_t windows = 0;
        for (std::int64_t top = 0; top + 11 <= h; ++top) {
            for (std::int64_t left = 0; left + 11 <= w; ++left) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < 11; ++i) {
                    for (int j = 0; j < 11; ++j) {
                        double wt = window[i * 11 + j];
                        double a = xp[(top + i) * w + left + j];
                        double b = yp[(top + i) * w + left + j];
                        mx += wt * a;
                        my += wt * b;
                        mxx += wt * a * a;
                        myy += wt * b * b;
                        mxy += wt * a * b;
                    }
                }
                double vx = mxx - mx * mx;
                double vy = myy - my * my;
                double cov = mxy - mx * my;
                score_sum += (2.0 * mx * my + c1) * (2.0 * cov + c2) /
                             ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++windows;
            }
        }
        channel_sum += score_sum / static_cast<double>(windows);
    }
    return channel_sum / static_cast<double>(c);
}

} // namespace alanet
