#include <benchmark/benchmark.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alanet/attention.hpp"
#include "alanet/image_metrics.hpp"
#include "alanet/network.hpp"
#include "alanet/rng.hpp"
#include "alanet/synthesis.hpp"
#include "alanet/tensor.hpp"
#include "alanet/train.hpp"

using namespace alanet;

namespace {

NetworkConfig bench_config() {
    NetworkConfig cfg;
    cfg.channels = {8, 8, 8, 8, 8};
    cfg.mfdm_kernel_sizes = {1, 3};
    cfg.vocab_buckets = 256;
    cfg.embed_dim = 16;
    cfg.seed = 1;
    return cfg;
}

void bm_conv2d_3x3(benchmark::State& state) {
    auto side = state.range(0);
    Rng rng(10);
    auto x = randn({8, side, side}, rng, 1.0, false);
    auto w = he_conv(8, 8, 3, rng);
    auto b = zeros({8}, false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(x, w, b));
    }
    state.SetItemsProcessed(state.iterations() * 8 * side * side);
}
BENCHMARK(bm_conv2d_3x3)->Arg(16)->Arg(32)->Arg(64);

void bm_matmul(benchmark::State& state) {
    auto n = state.range(0);
    Rng rng(11);
    auto a = randn({n, n}, rng, 1.0, false);
    auto b = randn({n, n}, rng, 1.0, false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
}
BENCHMARK(bm_matmul)->Arg(32)->Arg(128);

void bm_softmax_rows(benchmark::State& state) {
    Rng rng(12);
    auto x = randn({256, 64}, rng, 1.0, false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(softmax(x, 1));
    }
}
BENCHMARK(bm_softmax_rows);

void bm_gaussian_blur(benchmark::State& state) {
    Rng rng(13);
    auto img = zeros({3, 64, 64}, false);
    for (auto& v : img->data) v = rng.uniform();
    for (auto _ : state) {
        benchmark::DoNotOptimize(gaussian_blur(img, 2.0));
    }
}
BENCHMARK(bm_gaussian_blur);

void bm_ssim(benchmark::State& state) {
    Rng rng(14);
    auto x = zeros({3, 64, 64}, false);
    auto y = zeros({3, 64, 64}, false);
    for (auto& v : x->data) v = rng.uniform();
    for (auto& v : y->data) v = rng.uniform();
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(x, y));
    }
}
BENCHMARK(bm_ssim);

void bm_lcam_forward(benchmark::State& state) {
    Rng rng(15);
    Lcam lcam(8, rng);
    auto x = randn({8, 32, 32}, rng, 1.0, false);
    auto lang = randn({1, 8}, rng, 1.0, false);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lcam.forward(x, lang));
    }
}
BENCHMARK(bm_lcam_forward);

void bm_lasb_forward(benchmark::State& state) {
    Rng rng(16);
    Lasb block(8, {1, 3}, rng);
    auto t = randn({8, 32, 32}, rng, 1.0, false);
    auto r = randn({8, 32, 32}, rng, 1.0, false);
    auto lang = randn({1, 8}, rng, 1.0, false);
    for (auto _ : state) {
        auto [ot, orr] = block.forward(t, r, lang, lang);
        benchmark::DoNotOptimize(ot);
        benchmark::DoNotOptimize(orr);
    }
}
BENCHMARK(bm_lasb_forward);

void bm_network_forward(benchmark::State& state) {
    AlaNet net(bench_config());
    Rng rng(17);
    auto img = zeros({3, 32, 32}, false);
    for (auto& v : img->data) v = rng.uniform();
    std::optional<std::string> cap_t{"a bright lamp behind the window"};
    std::optional<std::string> cap_r{"a dim tree reflected in glass"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(img, cap_t, cap_r));
    }
}
BENCHMARK(bm_network_forward);

void bm_training_step(benchmark::State& state) {
    auto cfg = bench_config();
    AlaNet net(cfg);
    auto pyramid = make_frozen_perception(cfg);
    auto params = net.params();
    AdamState adam(params);
    Rng rng(18);
    auto img = zeros({3, 32, 32}, false);
    auto gt_t = zeros({3, 32, 32}, false);
    auto gt_r = zeros({3, 32, 32}, false);
    for (auto* t : {&img, &gt_t, &gt_r}) {
        for (auto& v : (*t)->data) v = rng.uniform();
    }
    std::optional<std::string> cap{"a bright lamp behind the window"};
    for (auto _ : state) {
        auto pred = net.forward(img, cap, cap);
        auto loss = loss_total(pred, gt_t, gt_r, LossWeights{}, pyramid);
        for (auto& p : params) p->zero_grad();
        loss.total->backward();
        adam_step(params, adam, 1e-4);
        benchmark::DoNotOptimize(loss.total->data[0]);
    }
}
BENCHMARK(bm_training_step);

} // namespace

BENCHMARK_MAIN();
