#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "alanet/attention.hpp"
#include "alanet/errors.hpp"
#include "alanet/grad_check.hpp"
#include "alanet/rng.hpp"
#include "alanet/tensor.hpp"

using namespace alanet;

namespace {

TensorPtr rand_feat(std::int64_t c, std::int64_t h, std::int64_t w, Rng& rng,
                    bool requires_grad = false) {
    return randn({c, h, w}, rng, 1.0, requires_grad);
}

void set_zero(const std::vector<TensorPtr>& params) {
    for (auto& p : params) std::fill(p->data.begin(), p->data.end(), 0.0);
}

void expect_bitwise(const TensorPtr& a, const TensorPtr& b) {
    ASSERT_TRUE(same_shape(*a, *b));
    for (std::size_t i = 0; i < a->data.size(); ++i) EXPECT_EQ(a->data[i], b->data[i]);
}

} // namespace

TEST(Lcam, NoCaptionMatchesChannelOnlyFormula) {
    Rng rng(11);
    Lcam lcam(6, rng);
    Rng data(12);
    auto x = rand_feat(6, 5, 4, data);
    auto out = lcam.forward(x, nullptr);

    auto pooled = pool_spatial_avg(x);
    auto hidden = relu(linear(pooled, lcam.chan_mlp_w1, lcam.chan_mlp_b1));
    auto gate = sigmoid(linear(hidden, lcam.chan_mlp_w2, lcam.chan_mlp_b2));
    auto expected = add(mul(gate, x), x);
    expect_bitwise(out, expected);
}

TEST(Lcam, AllZeroParamsGiveOnePointFiveScaling) {
    Rng rng(21);
    Lcam lcam(4, rng);
    set_zero(lcam.params());
    Rng data(22);
    auto x = rand_feat(4, 3, 3, data);
    auto lang = randn({1, 4}, data);
    auto out = lcam.forward(x, lang);
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        EXPECT_DOUBLE_EQ(out->data[i], 1.5 * x->data[i]);
    }
}

TEST(Lcam, CompetitionWeightsComplementExactly) {
    Rng rng(31);
    Lcam lcam(8, rng);
    Rng data(32);
    auto x = rand_feat(8, 4, 4, data);
    auto lang = randn({1, 8}, data);
    LcamState state;
    lcam.forward(x, lang, &state);
    ASSERT_TRUE(state.lang_weight);
    auto residual = complement(state.lang_weight);
    for (std::int64_t c = 0; c < 8; ++c) {
        double w = state.lang_weight->data[c];
        EXPECT_GT(w, 0.0);
        EXPECT_LE(w, 1.0);
        EXPECT_EQ(w + residual->data[c], 1.0);
    }
}

TEST(Lcam, DisabledBranchesAllocateNoParams) {
    Rng rng(41);
    Lcam lang_only(4, rng, true, false);
    Lcam chan_only(4, rng, false, true);
    Lcam none(4, rng, false, false);
    EXPECT_EQ(lang_only.params().size(), 8u);
    EXPECT_EQ(chan_only.params().size(), 4u);
    EXPECT_EQ(none.params().size(), 0u);
    EXPECT_FALSE(lang_only.chan_mlp_w1);
    EXPECT_FALSE(chan_only.lang_proj_w);
}

TEST(Lcam, BothBranchesDisabledPassesThrough) {
    Rng rng(43);
    Lcam none(4, rng, false, false);
    Rng data(44);
    auto x = rand_feat(4, 3, 3, data);
    auto lang = randn({1, 4}, data);
    EXPECT_EQ(none.forward(x, lang).get(), x.get());
    EXPECT_EQ(none.forward(x, nullptr).get(), x.get());
}

TEST(Lcam, ChannelMismatchThrows) {
    Rng rng(51);
    Lcam lcam(4, rng);
    Rng data(52);
    auto x = rand_feat(5, 3, 3, data);
    EXPECT_THROW(lcam.forward(x, nullptr), DimensionError);
}

TEST(Lcam, GradCheckWithCaption) {
    Rng rng(61);
    Lcam lcam(4, rng);
    Rng data(62);
    auto x = rand_feat(4, 3, 3, data, true);
    auto lang = randn({1, 4}, data, 1.0, true);
    std::vector<TensorPtr> inputs{x, lang};
    auto ps = lcam.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "lcam", [&] { return mean_all(lcam.forward(x, lang)); }, inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Lcam, GradCheckWithoutCaption) {
    Rng rng(71);
    Lcam lcam(4, rng);
    Rng data(72);
    auto x = rand_feat(4, 3, 3, data, true);
    std::vector<TensorPtr> inputs{x};
    for (auto& p : {lcam.chan_mlp_w1, lcam.chan_mlp_b1, lcam.chan_mlp_w2, lcam.chan_mlp_b2}) {
        inputs.push_back(p);
    }
    auto report = grad_check(
        "lcam_nolang", [&] { return mean_all(lcam.forward(x, nullptr)); }, inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Alcm, GateBiasSaturationSelectsBranchBitwise) {
    Rng rng(81);
    Alcm alcm(6, rng);
    Rng data(82);
    auto x = rand_feat(6, 4, 4, data);
    auto lang = randn({1, 6}, data);

    std::fill(alcm.gate_b->data.begin(), alcm.gate_b->data.end(), 40.0);
    std::fill(alcm.gate_w->data.begin(), alcm.gate_w->data.end(), 0.0);
    AlcmState state;
    auto out = alcm.forward(x, lang, &state);
    expect_bitwise(out, state.lang_desc);

    std::fill(alcm.gate_b->data.begin(), alcm.gate_b->data.end(), -40.0);
    auto out2 = alcm.forward(x, lang, &state);
    // sigmoid(-40) is tiny but nonzero, so equality must hold to near round-off.
    for (std::int64_t c = 0; c < 6; ++c) {
        EXPECT_NEAR(out2->data[c], state.image_desc->data[c],
                    1e-14 * (1.0 + std::abs(state.image_desc->data[c])));
        EXPECT_LT(state.gate->data[c], 1e-16);
    }
}

TEST(Alcm, MissingCaptionThrows) {
    Rng rng(91);
    Alcm alcm(4, rng);
    Rng data(92);
    auto x = rand_feat(4, 3, 3, data);
    EXPECT_THROW(alcm.forward(x, nullptr), ConfigError);
}

TEST(Alcm, OutputIsConvexMixOfDescriptors) {
    Rng rng(93);
    Alcm alcm(5, rng);
    Rng data(94);
    auto x = rand_feat(5, 4, 4, data);
    auto lang = randn({1, 5}, data);
    AlcmState state;
    auto out = alcm.forward(x, lang, &state);
    for (std::int64_t c = 0; c < 5; ++c) {
        double g = state.gate->data[c];
        double expect = g * state.lang_desc->data[c] + (1.0 - g) * state.image_desc->data[c];
        EXPECT_DOUBLE_EQ(out->data[c], expect);
        double lo = std::min(state.lang_desc->data[c], state.image_desc->data[c]);
        double hi = std::max(state.lang_desc->data[c], state.image_desc->data[c]);
        EXPECT_GE(out->data[c], lo - 1e-12);
        EXPECT_LE(out->data[c], hi + 1e-12);
    }
}

TEST(Alcm, GradCheck) {
    Rng rng(101);
    Alcm alcm(4, rng);
    Rng data(102);
    auto x = rand_feat(4, 3, 3, data, true);
    auto lang = randn({1, 4}, data, 1.0, true);
    std::vector<TensorPtr> inputs{x, lang};
    auto ps = alcm.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "alcm", [&] { return mean_all(alcm.forward(x, lang)); }, inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Lsca, NoCaptionReturnsSamePointer) {
    Rng rng(111);
    Lsca lsca(4, rng);
    Rng data(112);
    auto x = rand_feat(4, 3, 3, data);
    auto out = lsca.forward(x, nullptr);
    EXPECT_EQ(out.get(), x.get());
}

TEST(Lsca, CrossMapRowsSumToOne) {
    Rng rng(121);
    Lsca lsca(6, rng);
    Rng data(122);
    auto x = rand_feat(6, 5, 4, data);
    auto lang = randn({1, 6}, data);
    LscaState state;
    lsca.forward(x, lang, &state);
    ASSERT_EQ(state.cross_map->shape, (std::vector<std::int64_t>{20, 6}));
    for (std::int64_t r = 0; r < 20; ++r) {
        double sum = 0.0;
        for (std::int64_t c = 0; c < 6; ++c) sum += state.cross_map->data[r * 6 + c];
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    for (std::int64_t r = 0; r < 6; ++r) {
        double sum = 0.0;
        for (std::int64_t c = 0; c < 6; ++c) sum += state.chan_affinity_soft->data[r * 6 + c];
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Lsca, ModulationMatchesHandProduct) {
    // With both softmax outputs known, out = x * map + x elementwise where
    // map[c,p] = cross[p,c].
    Rng rng(131);
    Lsca lsca(2, rng);
    Rng data(132);
    auto x = rand_feat(2, 2, 1, data);
    auto lang = randn({1, 2}, data);
    LscaState state;
    auto out = lsca.forward(x, lang, &state);
    for (std::int64_t c = 0; c < 2; ++c) {
        for (std::int64_t p = 0; p < 2; ++p) {
            double m = state.cross_map->data[p * 2 + c];
            double v = x->data[c * 2 + p];
            EXPECT_DOUBLE_EQ(out->data[c * 2 + p], v * m + v);
        }
    }
}

TEST(Lsca, GradCheck) {
    Rng rng(141);
    Lsca lsca(3, rng);
    Rng data(142);
    auto x = rand_feat(3, 3, 2, data, true);
    auto lang = randn({1, 3}, data, 1.0, true);
    std::vector<TensorPtr> inputs{x, lang};
    auto ps = lsca.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "lsca", [&] { return mean_all(lsca.forward(x, lang)); }, inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Lsct, FreshBlockWithoutCaptionIsIdentity) {
    Rng rng(151);
    Lsct block(5, rng);
    Rng data(152);
    auto x = rand_feat(5, 4, 4, data);
    auto out = block.forward(x, nullptr);
    expect_bitwise(out, x);
}

TEST(Lsct, NonzeroOutputProjectionBreaksIdentity) {
    Rng rng(161);
    Lsct block(4, rng);
    block.ffn_b2->data[0] = 0.25;
    Rng data(162);
    auto x = rand_feat(4, 3, 3, data);
    auto out = block.forward(x, nullptr);
    EXPECT_NE(out->data[0], x->data[0]);
}

TEST(Lsct, CaptionChangesOutput) {
    Rng rng(171);
    Lsct block(4, rng);
    Rng data(172);
    auto x = rand_feat(4, 3, 3, data);
    auto lang = randn({1, 4}, data);
    auto plain = block.forward(x, nullptr);
    auto guided = block.forward(x, lang);
    bool any_diff = false;
    for (std::size_t i = 0; i < plain->data.size(); ++i) {
        if (plain->data[i] != guided->data[i]) any_diff = true;
    }
    EXPECT_TRUE(any_diff);
}

TEST(Lsct, GradCheckWithCaption) {
    Rng rng(181);
    Lsct block(3, rng);
    // A fresh block sits on a degenerate point: the normalized descriptor pools
    // to zero per channel and the zero bias then blanks the projected spatial
    // descriptor, so the channel softmax is uniform and the cross map is the
    // constant 1/C whatever the language path does. Nudge every parameter off
    // that manifold so all gradients are alive.
    Rng nudger(182);
    for (auto& p : block.params())
        for (auto& v : p->data) v += 0.2 * nudger.normal();
    Rng data(183);
    auto x = rand_feat(3, 3, 2, data, true);
    auto lang = randn({1, 3}, data, 1.0, true);
    std::vector<TensorPtr> inputs{x, lang};
    auto ps = block.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "lsct", [&] { return mean_all(block.forward(x, lang)); }, inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Mfdm, GroupPartitionPutsRemainderOnSmallestKernel) {
    Rng rng(191);
    Mfdm mfdm(10, {1, 3, 5, 7}, rng);
    EXPECT_EQ(mfdm.group_sizes, (std::vector<std::int64_t>{4, 2, 2, 2}));
    Mfdm reordered(10, {7, 5, 3, 1}, rng);
    EXPECT_EQ(reordered.group_sizes, (std::vector<std::int64_t>{2, 2, 2, 4}));
    Mfdm even_split(8, {1, 3}, rng);
    EXPECT_EQ(even_split.group_sizes, (std::vector<std::int64_t>{4, 4}));
}

TEST(Mfdm, TooFewChannelsThrows) {
    Rng rng(201);
    EXPECT_THROW(Mfdm(3, {1, 3, 5, 7}, rng), ConfigError);
}

TEST(Mfdm, EvenKernelThrows) {
    Rng rng(211);
    EXPECT_THROW(Mfdm(8, {1, 4}, rng), KernelError);
}

TEST(Mfdm, ZeroConvsLeaveResidualOnly) {
    Rng rng(221);
    Mfdm mfdm(6, {1, 3}, rng);
    set_zero(mfdm.params());
    Rng data(222);
    auto t = rand_feat(6, 4, 4, data);
    auto r = rand_feat(6, 4, 4, data);
    auto [out_t, out_r] = mfdm.forward(t, r);
    expect_bitwise(out_t, t);
    expect_bitwise(out_r, r);
}

TEST(Mfdm, IdentityKernelHandCase) {
    // Single 1x1 group with identity weights and identity fuse:
    // out_s = own * other + own. With other == ones, out_s == 2 * own.
    Rng rng(231);
    Mfdm mfdm(2, {1}, rng);
    for (MfdmStream* s : {&mfdm.trans, &mfdm.refl}) {
        std::fill(s->group_w[0]->data.begin(), s->group_w[0]->data.end(), 0.0);
        s->group_w[0]->data[0] = 1.0;  // {2,2,1,1}: [0][0]
        s->group_w[0]->data[3] = 1.0;  // [1][1]
        std::fill(s->group_b[0]->data.begin(), s->group_b[0]->data.end(), 0.0);
        std::fill(s->fuse_w->data.begin(), s->fuse_w->data.end(), 0.0);
        s->fuse_w->data[0] = 1.0;
        s->fuse_w->data[3] = 1.0;
        std::fill(s->fuse_b->data.begin(), s->fuse_b->data.end(), 0.0);
    }
    Rng data(232);
    auto t = rand_feat(2, 3, 3, data);
    auto ones_feat = full({2, 3, 3}, 1.0);
    auto [out_t, out_r] = mfdm.forward(t, ones_feat);
    for (std::size_t i = 0; i < t->data.size(); ++i) {
        EXPECT_DOUBLE_EQ(out_t->data[i], 2.0 * t->data[i]);
        EXPECT_DOUBLE_EQ(out_r->data[i], t->data[i] + 1.0);
    }
}

TEST(Mfdm, PreservesShape) {
    Rng rng(241);
    Mfdm mfdm(8, {1, 3, 5, 7}, rng);
    Rng data(242);
    auto t = rand_feat(8, 6, 5, data);
    auto r = rand_feat(8, 6, 5, data);
    auto [out_t, out_r] = mfdm.forward(t, r);
    EXPECT_TRUE(same_shape(*out_t, *t));
    EXPECT_TRUE(same_shape(*out_r, *r));
}

TEST(Mfdm, BothOutputsReadRawInputs) {
    // out_r must be computed from the raw t, not from out_t.
    Rng rng(251);
    Mfdm mfdm(4, {1}, rng);
    Rng data(252);
    auto t = rand_feat(4, 3, 3, data);
    auto r = rand_feat(4, 3, 3, data);
    auto [out_t, out_r] = mfdm.forward(t, r);
    (void)out_t;
    auto run_refl = [&](const TensorPtr& other) {
        auto conv = conv2d(r, mfdm.refl.group_w[0], mfdm.refl.group_b[0]);
        auto gated = mul(conv, other);
        return add(conv2d(gated, mfdm.refl.fuse_w, mfdm.refl.fuse_b), r);
    };
    expect_bitwise(out_r, run_refl(t));
}

TEST(Mfdm, GradCheck) {
    Rng rng(261);
    Mfdm mfdm(4, {1, 3}, rng);
    // The fuse weights start at zero, which blocks every gradient through the
    // gated groups; nudge them so the cross-stream path is alive.
    Rng nudger(263);
    for (auto& p : mfdm.params())
        for (auto& v : p->data) v += 0.2 * nudger.normal();
    Rng data(262);
    auto t = rand_feat(4, 3, 3, data, true);
    auto r = rand_feat(4, 3, 3, data, true);
    std::vector<TensorPtr> inputs{t, r};
    auto ps = mfdm.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "mfdm",
        [&] {
            auto [ot, orr] = mfdm.forward(t, r);
            return mean_all(add(ot, orr));
        },
        inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Lasb, NoCaptionMatchesManualComposition) {
    Rng rng(271);
    Lasb block(6, {1, 3}, rng);
    Rng data(272);
    auto t = rand_feat(6, 4, 4, data);
    auto r = rand_feat(6, 4, 4, data);
    auto [out_t, out_r] = block.forward(t, r, nullptr, nullptr);
    auto ta = block.trans_lcam.forward(t, nullptr);
    auto ra = block.refl_lcam.forward(r, nullptr);
    auto [et, er] = block.mfdm.forward(ta, ra);
    expect_bitwise(out_t, et);
    expect_bitwise(out_r, er);
}

TEST(Lasb, StreamCaptionsAreIndependent) {
    Rng rng(281);
    Lasb block(4, {1}, rng);
    Rng data(282);
    auto t = rand_feat(4, 3, 3, data);
    auto r = rand_feat(4, 3, 3, data);
    auto lang_t = randn({1, 4}, data);
    LasbState with_t, without;
    block.forward(t, r, lang_t, nullptr, &with_t);
    block.forward(t, r, nullptr, nullptr, &without);
    // Supplying only the transmission caption must not move the reflection stream
    // before mixing.
    expect_bitwise(with_t.refl_attended, without.refl_attended);
    bool trans_moved = false;
    for (std::size_t i = 0; i < with_t.trans_attended->data.size(); ++i) {
        if (with_t.trans_attended->data[i] != without.trans_attended->data[i]) {
            trans_moved = true;
        }
    }
    EXPECT_TRUE(trans_moved);
}

TEST(Lasb, GradCheck) {
    Rng rng(291);
    Lasb block(4, {1, 3}, rng);
    // Nudge off the zero fuse weights so the mixing path carries gradient.
    Rng nudger(293);
    for (auto& p : block.params())
        for (auto& v : p->data) v += 0.2 * nudger.normal();
    Rng data(292);
    auto t = rand_feat(4, 3, 3, data, true);
    auto r = rand_feat(4, 3, 3, data, true);
    auto lang_t = randn({1, 4}, data, 1.0, true);
    auto lang_r = randn({1, 4}, data, 1.0, true);
    std::vector<TensorPtr> inputs{t, r, lang_t, lang_r};
    auto ps = block.params();
    inputs.insert(inputs.end(), ps.begin(), ps.end());
    auto report = grad_check(
        "lasb",
        [&] {
            auto [ot, orr] = block.forward(t, r, lang_t, lang_r);
            return mean_all(add(ot, orr));
        },
        inputs);
    EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Init, GlorotAndHeMatchExpectedSpread) {
    Rng rng(301);
    auto w = glorot(400, 600, rng);
    double sum = 0.0, sq = 0.0;
    for (double v : w->data) {
        sum += v;
        sq += v * v;
    }
    double n = static_cast<double>(w->data.size());
    double mean = sum / n, var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.005);
    EXPECT_NEAR(var, 2.0 / 1000.0, 0.0005);

    auto k = he_conv(8, 16, 3, rng);
    EXPECT_EQ(k->shape, (std::vector<std::int64_t>{8, 16, 3, 3}));
    sum = sq = 0.0;
    for (double v : k->data) {
        sum += v;
        sq += v * v;
    }
    n = static_cast<double>(k->data.size());
    mean = sum / n;
    var = sq / n - mean * mean;
    EXPECT_NEAR(var, 2.0 / 144.0, 0.003);
}
