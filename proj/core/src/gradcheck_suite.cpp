#include "alanet/gradcheck_suite.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "alanet/attention.hpp"
#include "alanet/grad_check.hpp"
#include "alanet/language.hpp"
#include "alanet/network.hpp"
#include "alanet/rng.hpp"
#include "alanet/tensor.hpp"
#include "alanet/train.hpp"

namespace alanet {
namespace {

// clamp01 is the one op left out: it detaches by contract, so a finite
// difference would disagree with its (empty) gradient on purpose.
struct Suite {
    std::vector<GradCheckReport> reports;
    double tol;
    Rng rng;

    Suite(double tolerance, std::uint64_t seed) : tol(tolerance), rng(seed) {}

    TensorPtr gauss(std::vector<std::int64_t> shape, double stddev = 1.0) {
        return randn(std::move(shape), rng, stddev, true);
    }

    // Magnitudes in [lo, hi] with random signs keep relu/abs/max arguments
    // far from their kinks relative to the finite-difference step.
    TensorPtr away_from_zero(std::vector<std::int64_t> shape, double lo = 0.2, double hi = 1.0) {
        auto t = zeros(std::move(shape), true);
        for (auto& v : t->data) {
            double mag = rng.uniform(lo, hi);
            v = rng.coin() ? mag : -mag;
        }
        return t;
    }

    TensorPtr interior(std::vector<std::int64_t> shape, double lo, double hi) {
        auto t = zeros(std::move(shape), true);
        for (auto& v : t->data) v = rng.uniform(lo, hi);
        return t;
    }

    // Fresh modules sit on manifolds where some gradients vanish exactly
    // (zero-initialized projections, uniform softmax rows), so module checks
    // perturb every parameter before differentiating.
    void nudge(const std::vector<TensorPtr>& params, double stddev) {
        for (const auto& p : params) {
            for (auto& v : p->data) v += stddev * rng.normal();
        }
    }

    // A fixed random probe turns any output into a scalar whose gradient is
    // dense in every element of the output.
    void check(const std::string& name, const std::function<TensorPtr()>& build,
               std::vector<TensorPtr> inputs, double tol_scale = 1.0) {
        auto probe = randn(build()->shape, rng, 1.0, false);
        auto f = [build, probe]() { return mean_all(mul(build(), probe)); };
        reports.push_back(grad_check(name, f, inputs, 1e-5, tol * tol_scale));
    }

    void check_pair(const std::string& name,
                    const std::function<std::pair<TensorPtr, TensorPtr>()>& build,
                    std::vector<TensorPtr> inputs, double tol_scale = 1.0) {
        auto once = build();
        auto probe_a = randn(once.first->shape, rng, 1.0, false);
        auto probe_b = randn(once.second->shape, rng, 1.0, false);
        auto f = [build, probe_a, probe_b]() {
            auto out = build();
            return add(mean_all(mul(out.first, probe_a)), mean_all(mul(out.second, probe_b)));
        };
        reports.push_back(grad_check(name, f, inputs, 1e-5, tol * tol_scale));
    }

    void check_scalar(const std::string& name, const std::function<TensorPtr()>& build,
                      std::vector<TensorPtr> inputs, double step = 1e-5) {
        reports.push_back(grad_check(name, build, inputs, step, tol));
    }
};

void elementwise_checks(Suite& s) {
    auto a = s.gauss({3, 4, 5});
    auto b = s.gauss({3, 4, 5});
    auto one = s.gauss({1});
    auto chan_row = s.gauss({1, 3});
    auto chan_vec = s.gauss({3});

    s.check("add", [=] { return add(a, b); }, {a, b});
    s.check("add_scalar_broadcast", [=] { return add(a, one); }, {a, one});
    s.check("add_channel_broadcast", [=] { return add(a, chan_row); }, {a, chan_row});
    s.check("sub", [=] { return sub(a, b); }, {a, b});
    s.check("sub_channel_broadcast", [=] { return sub(a, chan_vec); }, {a, chan_vec});
    s.check("mul", [=] { return mul(a, b); }, {a, b});
    s.check("mul_scalar_broadcast", [=] { return mul(a, one); }, {a, one});
    s.check("mul_channel_broadcast", [=] { return mul(a, chan_row); }, {a, chan_row});
    s.check("neg", [=] { return neg(a); }, {a});
    s.check("scale", [=] { return scale(a, -0.7); }, {a});
    s.check("complement", [=] { return complement(a); }, {a});

    auto kinked = s.away_from_zero({4, 5, 5});
    s.check("abs_value", [=] { return abs_value(kinked); }, {kinked});
    s.check("relu", [=] { return relu(kinked); }, {kinked});
    s.check("sigmoid", [=] { return sigmoid(a); }, {a});

    auto positive = s.interior({3, 4, 4}, 0.5, 2.0);
    s.check("rsqrt", [=] { return rsqrt(positive); }, {positive});
}

void matrix_checks(Suite& s) {
    auto m = s.gauss({3, 4});
    auto n = s.gauss({4, 5});
    s.check("matmul", [=] { return matmul(m, n); }, {m, n});
    s.check("transpose", [=] { return transpose(m); }, {m});

    auto left = s.gauss({3, 2});
    auto right = s.gauss({3, 4});
    s.check("concat_cols", [=] { return concat_cols(left, right); }, {left, right});

    auto logits = s.gauss({4, 6});
    s.check("softmax_rows", [=] { return softmax(logits, 1); }, {logits});
    s.check("softmax_cols", [=] { return softmax(logits, 0); }, {logits});

    auto x = s.gauss({2, 3});
    auto w = s.gauss({3, 4});
    auto bias = s.gauss({1, 4});
    s.check("linear", [=] { return linear(x, w, bias); }, {x, w, bias});
    s.check("linear_no_bias", [=] { return linear(x, w, nullptr); }, {x, w});

    auto r = s.gauss({2, 3, 4});
    s.check("reshape", [=] { return reshape(r, {4, 6}); }, {r});
}

void feature_map_checks(Suite& s) {
    auto img = s.gauss({3, 6, 6});
    auto k3 = s.gauss({4, 3, 3, 3}, 0.4);
    auto k3_bias = s.gauss({4});
    s.check("conv2d_k3", [=] { return conv2d(img, k3, k3_bias); }, {img, k3, k3_bias});

    auto k1 = s.gauss({2, 3, 1, 1});
    s.check("conv2d_k1_no_bias", [=] { return conv2d(img, k1, nullptr); }, {img, k1});

    auto odd = s.gauss({2, 5, 5});
    auto k3s2 = s.gauss({3, 2, 3, 3}, 0.4);
    auto k3s2_bias = s.gauss({3});
    s.check("conv2d_k3_stride2", [=] { return conv2d(odd, k3s2, k3s2_bias, 2); },
            {odd, k3s2, k3s2_bias});

    auto pooled = s.gauss({4, 5, 6});
    s.check("pool_spatial_avg", [=] { return pool_spatial_avg(pooled); }, {pooled});
    s.check("pool_spatial_max", [=] { return pool_spatial_max(pooled); }, {pooled});
    s.check("pool_channel_avg", [=] { return pool_channel_avg(pooled); }, {pooled});

    auto stack = s.gauss({6, 4, 4});
    s.check("slice_channels", [=] { return slice_channels(stack, 1, 4); }, {stack});

    auto part_a = s.gauss({2, 4, 4});
    auto part_b = s.gauss({3, 4, 4});
    s.check("concat_channels", [=] { return concat_channels({part_a, part_b}); },
            {part_a, part_b});

    auto small = s.gauss({3, 3, 4});
    s.check("upsample_nearest2", [=] { return upsample_nearest2(small); }, {small});

    auto normed = s.gauss({4, 6, 6});
    auto gain = s.gauss({1, 4});
    auto shift = s.gauss({1, 4});
    s.check("channel_norm", [=] { return channel_norm(normed, gain, shift); },
            {normed, gain, shift});

    auto rms_gain = s.gauss({1, 4});
    auto rms_in = s.gauss({4, 5, 5});
    s.check("rms_norm", [=] { return rms_norm(rms_in, rms_gain); }, {rms_in, rms_gain});

    auto grid = s.gauss({3, 5, 6});
    s.check("diff_right", [=] { return diff_right(grid); }, {grid});
    s.check("diff_down", [=] { return diff_down(grid); }, {grid});

    auto reduced = s.gauss({3, 4, 5});
    s.check_scalar("sum_all", [=] { return sum_all(reduced); }, {reduced});
    s.check_scalar("mean_all", [=] { return mean_all(reduced); }, {reduced});
}

void module_checks(Suite& s) {
    constexpr std::int64_t kC = 4;

    Rng init(s.rng.next_u64());
    auto image = s.gauss({kC, 5, 5});
    auto lang = s.gauss({1, kC});

    Lcam lcam(kC, init);
    {
        auto inputs = lcam.params();
        inputs.push_back(image);
        inputs.push_back(lang);
        s.check("lcam", [&lcam, image, lang] { return lcam.forward(image, lang); }, inputs);
    }
    {
        auto inputs = lcam.params();
        inputs.push_back(image);
        s.check("lcam_bypass", [&lcam, image] { return lcam.forward(image, nullptr); }, inputs);
    }

    Alcm alcm(kC, init);
    {
        auto inputs = alcm.params();
        inputs.push_back(image);
        inputs.push_back(lang);
        s.check("alcm", [&alcm, image, lang] { return alcm.forward(image, lang); }, inputs);
    }

    auto square = s.gauss({kC, 4, 4});
    Lsca lsca(kC, init);
    s.nudge(lsca.params(), 0.2);
    {
        auto inputs = lsca.params();
        inputs.push_back(square);
        inputs.push_back(lang);
        s.check("lsca", [&lsca, square, lang] { return lsca.forward(square, lang); }, inputs);
    }
    {
        auto inputs = lsca.params();
        inputs.push_back(square);
        s.check("lsca_bypass", [&lsca, square] { return lsca.forward(square, nullptr); },
                inputs);
    }

    Lsct lsct(kC, init);
    s.nudge(lsct.params(), 0.2);
    {
        auto inputs = lsct.params();
        inputs.push_back(square);
        inputs.push_back(lang);
        s.check("lsct", [&lsct, square, lang] { return lsct.forward(square, lang); }, inputs);
    }
    {
        auto inputs = lsct.params();
        inputs.push_back(square);
        s.check("lsct_bypass", [&lsct, square] { return lsct.forward(square, nullptr); },
                inputs);
    }

    const std::vector<std::int64_t> kernels{1, 3};
    Mfdm mfdm(6, kernels, init);
    s.nudge(mfdm.params(), 0.2);
    auto trans6 = s.gauss({6, 4, 4});
    auto refl6 = s.gauss({6, 4, 4});
    {
        auto inputs = mfdm.params();
        inputs.push_back(trans6);
        inputs.push_back(refl6);
        s.check_pair("mfdm", [&mfdm, trans6, refl6] { return mfdm.forward(trans6, refl6); },
                     inputs);
    }

    Lasb lasb(kC, kernels, init);
    s.nudge(lasb.params(), 0.2);
    auto trans4 = s.gauss({kC, 4, 4});
    auto refl4 = s.gauss({kC, 4, 4});
    auto lang_r = s.gauss({1, kC});
    {
        auto inputs = lasb.params();
        inputs.push_back(trans4);
        inputs.push_back(refl4);
        inputs.push_back(lang);
        inputs.push_back(lang_r);
        s.check_pair("lasb",
                     [&lasb, trans4, refl4, lang, lang_r] {
                         return lasb.forward(trans4, refl4, lang, lang_r);
                     },
                     inputs);
    }

    LanguageEncoder encoder({kC, kC, kC, kC, kC}, 32, 6, 11);
    {
        auto inputs = encoder.params();
        std::string text = "the red dog resting near the old tree";
        auto once = encoder.encode(text);
        std::vector<TensorPtr> probes;
        for (const auto& level : once->per_level) {
            probes.push_back(randn(level->shape, s.rng, 1.0, false));
        }
        auto f = [&encoder, text, probes]() {
            auto feat = encoder.encode(text);
            TensorPtr total = scalar(0.0);
            for (std::size_t l = 0; l < feat->per_level.size(); ++l) {
                total = add(total, mean_all(mul(feat->per_level[l], probes[l])));
            }
            return total;
        };
        s.reports.push_back(grad_check("language_encoder", f, inputs, 1e-5, s.tol));
    }
}

void loss_checks(Suite& s) {
    NetworkConfig config;
    config.channels = {4, 4, 4, 4, 4};
    config.seed = 21;
    auto pyramid = make_frozen_perception(config);

    // grad_loss takes |diff(x) - diff(y)|, so the inputs must keep every
    // second difference away from the absolute-value kink: x gets staircase
    // steps of at least 0.1 along both axes, y varies by at most 0.01.
    auto x = zeros({3, 6, 6}, true);
    {
        double row_step[6], col_step[6], acc = 0.0;
        for (int i = 0; i < 6; ++i) {
            acc += (s.rng.coin() ? 1.0 : -1.0) * s.rng.uniform(0.1, 0.3);
            row_step[i] = acc;
        }
        acc = 0.0;
        for (int i = 0; i < 6; ++i) {
            acc += (s.rng.coin() ? 1.0 : -1.0) * s.rng.uniform(0.1, 0.3);
            col_step[i] = acc;
        }
        std::size_t idx = 0;
        for (int c = 0; c < 3; ++c) {
            for (int h = 0; h < 6; ++h) {
                for (int w = 0; w < 6; ++w) x->data[idx++] = 0.37 * c + row_step[h] + col_step[w];
            }
        }
    }
    auto y = s.interior({3, 6, 6}, 0.395, 0.405);
    // Sign cancellations leave some analytic entries exactly zero, where the
    // relative error is pure finite-difference roundoff against the 1e-8
    // denominator floor. The loss is piecewise linear, so the largest legal
    // step costs no truncation error and divides that roundoff by ten.
    s.check_scalar("grad_loss", [=] { return grad_loss(x, y); }, {x, y}, 1e-4);

    auto px = s.interior({3, 8, 8}, 0.1, 0.9);
    auto py = s.interior({3, 8, 8}, 0.1, 0.9);
    s.check_scalar("perceptual_loss",
                   [&pyramid, px, py] { return perceptual_loss(px, py, pyramid); }, {px, py});

    auto t_hat = s.interior({3, 8, 8}, 0.1, 0.9);
    auto r_hat = s.interior({3, 8, 8}, 0.1, 0.9);
    auto gt_t = s.interior({3, 8, 8}, 0.1, 0.9);
    auto gt_r = s.interior({3, 8, 8}, 0.1, 0.9);
    LossWeights weights;
    s.check_scalar("loss_total",
                   [&pyramid, t_hat, r_hat, gt_t, gt_r, weights] {
                       return loss_total({t_hat, r_hat}, gt_t, gt_r, weights, pyramid).total;
                   },
                   {t_hat, r_hat});
}

// End to end at the smallest legal input (five halvings need 16x16) against
// a relaxed tolerance: thousands of chained ops accumulate finite-difference
// noise well above the single-op level.
void network_check(Suite& s) {
    NetworkConfig config;
    config.channels = {4, 4, 4, 4, 4};
    config.mfdm_kernel_sizes = {1, 3};
    config.vocab_buckets = 32;
    config.embed_dim = 8;
    config.seed = 33;
    AlaNet net(config);
    s.nudge(net.params(), 0.05);

    auto image = s.interior({3, 16, 16}, 0.1, 0.9);
    std::optional<std::string> cap_t = "the bright lamp near the window";
    std::optional<std::string> cap_r = "a dim tree behind the glass";

    // Differentiating every one of the ~10k parameters would dwarf the rest
    // of the suite, so the check walks the image plus one tensor from every
    // depth and module family; each still exercises the entire graph.
    std::vector<TensorPtr> inputs{
        image,
        net.stem_t_w,
        net.stem_r_b,
        net.enc_norm_t[0],
        net.dec_norm_r[0],
        net.alcm_t[0]->gate_w,
        net.lsct_r[1]->lsca.lang_a_w,
        net.lsct_t[0]->ffn_w2,
        net.enc_blocks[0][0].trans_lcam.lang_proj_w,
        net.enc_blocks[4][0].mfdm.trans.fuse_w,
        net.down_t_w[1],
        net.up_r_w[3],
        net.dec_blocks[0][0].refl_lcam.chan_mlp_w1,
        net.head_t_w,
        net.head_r_b,
        net.encoder.adapter_weight[0],
        net.perception.stem_w,
    };
    s.check_pair("network_end_to_end",
                 [&net, image, cap_t, cap_r] {
                     auto out = net.forward(image, cap_t, cap_r);
                     return std::make_pair(out.t_hat, out.r_hat);
                 },
                 inputs, 10.0);
}

} // namespace

std::vector<GradCheckReport> run_grad_check_suite(double tolerance, std::uint64_t seed) {
    Suite s(tolerance, seed ^ 0x9e3779b97f4a7c15ULL);
    elementwise_checks(s);
    matrix_checks(s);
    feature_map_checks(s);
    module_checks(s);
    loss_checks(s);
    network_check(s);
    return s.reports;
}

} // namespace alanet
