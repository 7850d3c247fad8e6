#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "alanet/errors.hpp"
#include "alanet/grad_check.hpp"
#include "alanet/gradcheck_suite.hpp"
#include "alanet/image_metrics.hpp"
#include "alanet/network.hpp"
#include "alanet/rng.hpp"
#include "alanet/synthesis.hpp"
#include "alanet/tensor.hpp"
#include "alanet/train.hpp"

using namespace alanet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("alanet_train_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

TensorPtr random_image(std::vector<std::int64_t> shape, std::uint64_t seed) {
    Rng rng(seed);
    auto img = zeros(std::move(shape));
    for (auto& v : img->data) v = rng.uniform();
    return img;
}

double mse_oracle(const TensorPtr& x, const TensorPtr& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x->data.size(); ++i) {
        double d = x->data[i] - y->data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x->data.size());
}

// Direct reimplementation of windowed structural similarity, organized as
// plain quintuple loops over window positions and taps.
double ssim_oracle(const TensorPtr& x, const TensorPtr& y) {
    const int win = 11;
    const double sigma = 1.5, k1 = 0.01, k2 = 0.03;
    double w[11][11], wsum = 0.0;
    for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
            double di = i - 5, dj = j - 5;
            w[i][j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
            wsum += w[i][j];
        }
    }
    for (auto& row : w) {
        for (auto& v : row) v /= wsum;
    }
    const double c1 = k1 * k1, c2 = k2 * k2;
    std::int64_t channels = x->shape[0], h = x->shape[1], wd = x->shape[2];
    double channel_acc = 0.0;
    for (std::int64_t c = 0; c < channels; ++c) {
        double window_acc = 0.0;
        std::int64_t n_windows = 0;
        for (std::int64_t oy = 0; oy + win <= h; ++oy) {
            for (std::int64_t ox = 0; ox + win <= wd; ++ox) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < win; ++i) {
                    for (int j = 0; j < win; ++j) {
                        std::size_t at = static_cast<std::size_t>((c * h + oy + i) * wd + ox + j);
                        double a = x->data[at], b = y->data[at];
                        mx += w[i][j] * a;
                        my += w[i][j] * b;
                        mxx += w[i][j] * a * a;
                        myy += w[i][j] * b * b;
                        mxy += w[i][j] * a * b;
                    }
                }
                double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
                window_acc += (2 * mx * my + c1) * (2 * cov + c2) /
                              ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++n_windows;
            }
        }
        channel_acc += window_acc / static_cast<double>(n_windows);
    }
    return channel_acc / static_cast<double>(channels);
}

NetworkConfig tiny_config(std::uint64_t seed) {
    NetworkConfig config;
    config.channels = {4, 4, 4, 4, 4};
    config.mfdm_kernel_sizes = {1, 3};
    config.vocab_buckets = 64;
    config.embed_dim = 8;
    config.seed = seed;
    return config;
}

// Procedural sources blended into a ready-to-train dataset of 16x16 patches.
// read_manifest resolves the image paths, so the records are usable from any
// working directory.
std::vector<DatasetRecord> tiny_dataset(const TempDir& dir, std::int64_t pairs,
                                        std::uint64_t seed) {
    auto src = dir.file("src");
    auto out = dir.file("out");
    generate_procedural_sources(src, 2 * pairs + 2, seed, 24);
    DatasetOptions opts;
    opts.patch = 16;
    make_dataset(src, pairs, seed, out, opts);
    return read_manifest((fs::path(out) / "manifest.jsonl").string());
}

std::vector<double> snapshot(const std::vector<TensorPtr>& params) {
    std::vector<double> flat;
    for (const auto& p : params) flat.insert(flat.end(), p->data.begin(), p->data.end());
    return flat;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TEST(Psnr, IdenticalImagesCapAtNinetyNine) {
    auto x = random_image({3, 5, 5}, 1);
    EXPECT_DOUBLE_EQ(psnr(x, x), 99.0);
}

TEST(Psnr, UniformErrorMatchesClosedForm) {
    auto x = zeros({3, 4, 4});
    auto y = full({3, 4, 4}, 16.0 / 255.0);
    double expected = 10.0 * std::log10(255.0 * 255.0 / (16.0 * 16.0));
    EXPECT_NEAR(psnr(x, y), expected, 1e-9);
}

TEST(Psnr, SymmetricAndClampsArguments) {
    auto x = random_image({3, 4, 4}, 2);
    auto y = random_image({3, 4, 4}, 3);
    EXPECT_DOUBLE_EQ(psnr(x, y), psnr(y, x));

    // Clamping maps both onto the same saturated image.
    auto below = full({3, 4, 4}, -0.5);
    auto floor0 = zeros({3, 4, 4});
    EXPECT_DOUBLE_EQ(psnr(below, floor0), 99.0);
    auto above = full({3, 4, 4}, 1.5);
    auto ceil1 = full({3, 4, 4}, 1.0);
    EXPECT_DOUBLE_EQ(psnr(above, ceil1), 99.0);
}

TEST(Psnr, MatchesBruteForceOracle) {
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        auto x = random_image({3, 4, 4}, 100 + trial);
        auto y = random_image({3, 4, 4}, 200 + trial);
        double expected = 10.0 * std::log10(1.0 / mse_oracle(x, y));
        EXPECT_NEAR(psnr(x, y), expected, 1e-9) << "trial " << trial;
    }
}

TEST(Ssim, IdenticalImageScoresOne) {
    auto x = random_image({3, 16, 16}, 4);
    EXPECT_NEAR(ssim(x, x), 1.0, 1e-9);
}

TEST(Ssim, ConstantImagesMatchClosedForm) {
    double a = 0.3, b = 0.7, c1 = 0.01 * 0.01;
    auto x = full({3, 12, 12}, a);
    auto y = full({3, 12, 12}, b);
    double expected = (2 * a * b + c1) / (a * a + b * b + c1);
    EXPECT_NEAR(ssim(x, y), expected, 1e-12);
}

TEST(Ssim, InvertedCheckerboardScoresNegative) {
    auto x = zeros({1, 12, 12});
    for (std::int64_t r = 0; r < 12; ++r) {
        for (std::int64_t c = 0; c < 12; ++c) {
            x->data[static_cast<std::size_t>(r * 12 + c)] = (r + c) % 2 ? 1.0 : 0.0;
        }
    }
    auto y = complement(x);
    EXPECT_LT(ssim(x, y), 0.0);
}

TEST(Ssim, RejectsBadShapes) {
    EXPECT_THROW(ssim(zeros({3, 10, 16}), zeros({3, 10, 16})), ConfigError);
    EXPECT_THROW(ssim(zeros({3, 16, 10}), zeros({3, 16, 10})), ConfigError);
    EXPECT_THROW(ssim(zeros({3, 16, 16}), zeros({3, 16, 12})), DimensionError);
    EXPECT_THROW(ssim(zeros({48, 16}), zeros({48, 16})), DimensionError);
}

TEST(Ssim, MatchesIndependentOracle) {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        auto x = random_image({2, 13, 14}, 300 + trial);
        auto y = random_image({2, 13, 14}, 400 + trial);
        EXPECT_NEAR(ssim(x, y), ssim_oracle(x, y), 1e-9) << "trial " << trial;
    }
}

TEST(GradLoss, IdenticalInputsGiveZero) {
    auto x = random_image({3, 6, 6}, 5);
    EXPECT_DOUBLE_EQ(grad_loss(x, x)->value(), 0.0);
}

TEST(GradLoss, HandComputedTwoByTwo) {
    // x = [[0,1],[0,0]]: one unit step to the right, one down from the 1.
    auto x = tensor({1, 2, 2}, {0.0, 1.0, 0.0, 0.0});
    auto y = zeros({1, 2, 2});
    // Right differences [[1,0],[0,0]] and down differences [[0,-1],[0,0]]
    // each average 0.25 in magnitude over four cells.
    EXPECT_DOUBLE_EQ(grad_loss(x, y)->value(), 0.25);
}

TEST(GradLoss, IgnoresConstantShift) {
    auto x = random_image({3, 6, 6}, 6);
    auto y = random_image({3, 6, 6}, 7);
    auto shifted = add(x, full({1}, 0.3));
    EXPECT_DOUBLE_EQ(grad_loss(x, y)->value(), grad_loss(shifted, y)->value());
}

TEST(PerceptualLoss, IdenticalInputsGiveZero) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto x = random_image({3, 16, 16}, 8);
    EXPECT_DOUBLE_EQ(perceptual_loss(x, x, pyramid)->value(), 0.0);
}

TEST(PerceptualLoss, SymmetricInArguments) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto x = random_image({3, 16, 16}, 9);
    auto y = random_image({3, 16, 16}, 10);
    EXPECT_DOUBLE_EQ(perceptual_loss(x, y, pyramid)->value(),
                     perceptual_loss(y, x, pyramid)->value());
}

TEST(PerceptualLoss, SeesLocalizedEdit) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto x = random_image({3, 16, 16}, 12);
    auto y = zeros({3, 16, 16});
    y->data = x->data;
    y->data[40] = y->data[40] > 0.5 ? y->data[40] - 0.5 : y->data[40] + 0.5;
    EXPECT_GT(perceptual_loss(x, y, pyramid)->value(), 0.0);
}

TEST(FrozenPyramid, TakesNoGradient) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    for (const auto& p : pyramid.params()) EXPECT_FALSE(p->requires_grad);

    auto x = random_image({3, 16, 16}, 13);
    x->requires_grad = true;
    auto y = random_image({3, 16, 16}, 14);
    auto loss = perceptual_loss(x, y, pyramid);
    loss->backward();
    EXPECT_FALSE(x->grad.empty());
    for (const auto& p : pyramid.params()) EXPECT_TRUE(p->grad.empty());
}

TEST(LossTotal, PerfectPredictionIsZero) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto t = random_image({3, 16, 16}, 15);
    auto r = random_image({3, 16, 16}, 16);
    auto breakdown = loss_total({t, r}, t, r, LossWeights{}, pyramid);
    EXPECT_DOUBLE_EQ(breakdown.total->value(), 0.0);
    EXPECT_DOUBLE_EQ(breakdown.mse_t, 0.0);
    EXPECT_DOUBLE_EQ(breakdown.mse_r, 0.0);
    EXPECT_DOUBLE_EQ(breakdown.grad, 0.0);
    EXPECT_DOUBLE_EQ(breakdown.perceptual, 0.0);
}

TEST(LossTotal, PureMseWhenOtherWeightsVanish) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto t_hat = random_image({3, 8, 8}, 17);
    auto r_hat = random_image({3, 8, 8}, 18);
    auto t = random_image({3, 8, 8}, 19);
    auto r = random_image({3, 8, 8}, 20);
    LossWeights weights{1.0, 0.0, 0.0};
    auto breakdown = loss_total({t_hat, r_hat}, t, r, weights, pyramid);
    EXPECT_NEAR(breakdown.total->value(), mse_oracle(t_hat, t) + mse_oracle(r_hat, r), 1e-12);
    EXPECT_DOUBLE_EQ(breakdown.grad, 0.0);
    EXPECT_DOUBLE_EQ(breakdown.perceptual, 0.0);
}

TEST(LossTotal, BreakdownRecombinesToTotal) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto t_hat = random_image({3, 16, 16}, 21);
    auto r_hat = random_image({3, 16, 16}, 22);
    auto t = random_image({3, 16, 16}, 23);
    auto r = random_image({3, 16, 16}, 24);
    LossWeights weights;
    auto breakdown = loss_total({t_hat, r_hat}, t, r, weights, pyramid);
    double recombined = weights.lambda1 * (breakdown.mse_t + breakdown.mse_r) +
                        weights.lambda2 * breakdown.grad +
                        weights.lambda3 * breakdown.perceptual;
    EXPECT_NEAR(breakdown.total->value(), recombined, 1e-12);
    EXPECT_GT(breakdown.grad, 0.0);
    EXPECT_GT(breakdown.perceptual, 0.0);
}

TEST(LossTotal, RejectsBadArguments) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    auto a = random_image({3, 16, 16}, 25);
    auto b = random_image({3, 8, 8}, 26);
    EXPECT_THROW(loss_total({a, a}, a, a, LossWeights{-1.0, 2.0, 0.01}, pyramid), ConfigError);
    EXPECT_THROW(loss_total({a, a}, b, a, LossWeights{}, pyramid), DimensionError);
}

TEST(LossTotal, GradCheckAgainstPredictions) {
    auto pyramid = make_frozen_perception(tiny_config(11));
    Rng rng(27);
    auto t_hat = zeros({3, 8, 8}, true);
    auto r_hat = zeros({3, 8, 8}, true);
    for (auto& v : t_hat->data) v = rng.uniform(0.1, 0.9);
    for (auto& v : r_hat->data) v = rng.uniform(0.1, 0.9);
    auto t = random_image({3, 8, 8}, 28);
    auto r = random_image({3, 8, 8}, 29);
    auto report = grad_check(
        "loss_total",
        [&] { return loss_total({t_hat, r_hat}, t, r, LossWeights{}, pyramid).total; },
        {t_hat, r_hat});
    EXPECT_TRUE(report.passed) << "max rel error " << report.max_rel_error;
}

TEST(Adam, EmptyGradientLeavesParameterAlone) {
    auto p = tensor({2}, {0.5, -0.25}, true);
    std::vector<TensorPtr> params{p};
    AdamState state(params);
    adam_step(params, state, 1e-2);
    EXPECT_DOUBLE_EQ(p->data[0], 0.5);
    EXPECT_DOUBLE_EQ(p->data[1], -0.25);
}

TEST(Adam, FirstStepForUnitGradientIsMinusLr) {
    auto p = tensor({1}, {0.0}, true);
    std::vector<TensorPtr> params{p};
    AdamState state(params);
    p->ensure_grad();
    p->grad[0] = 1.0;
    double lr = 1e-3;
    adam_step(params, state, lr);
    // Bias correction makes m_hat = v_hat = 1 on the first step.
    EXPECT_NEAR(p->data[0], -lr / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, EqualGradientHistoriesGiveEqualUpdates) {
    auto a = tensor({1}, {0.1}, true);
    auto b = tensor({1}, {0.1}, true);
    std::vector<TensorPtr> params{a, b};
    AdamState state(params);
    Rng rng(30);
    for (int step = 0; step < 5; ++step) {
        double g = rng.normal();
        a->ensure_grad();
        b->ensure_grad();
        a->grad[0] = g;
        b->grad[0] = g;
        adam_step(params, state, 1e-2);
        EXPECT_DOUBLE_EQ(a->data[0], b->data[0]);
    }
}

TEST(Adam, StateBuiltForOtherParamsThrows) {
    auto a = tensor({1}, {0.0}, true);
    auto b = tensor({3}, {0.0, 0.0, 0.0}, true);
    std::vector<TensorPtr> one{a};
    std::vector<TensorPtr> other{b};
    AdamState state(one);
    EXPECT_THROW(adam_step(other, state, 1e-3), ConfigError);
}

TEST(Train, ZeroEpochsLeavesParametersUntouched) {
    TempDir dir;
    auto records = tiny_dataset(dir, 2, 31);
    AlaNet net(tiny_config(32));
    auto before = snapshot(net.params());
    TrainOptions opts;
    opts.epochs = 0;
    auto result = train(net, {records}, opts, 33);
    EXPECT_TRUE(result.trace.empty());
    EXPECT_EQ(snapshot(net.params()), before);
}

TEST(Train, SameSeedReproducesTraceAndParameters) {
    TempDir dir;
    auto records = tiny_dataset(dir, 3, 34);
    TrainOptions opts;
    opts.epochs = 2;

    AlaNet first(tiny_config(35));
    auto run_a = train(first, {records}, opts, 36);
    AlaNet second(tiny_config(35));
    auto run_b = train(second, {records}, opts, 36);

    ASSERT_EQ(run_a.trace.size(), run_b.trace.size());
    ASSERT_EQ(run_a.trace.size(), 6u);
    for (std::size_t i = 0; i < run_a.trace.size(); ++i) {
        EXPECT_EQ(run_a.trace[i].iteration, static_cast<std::int64_t>(i) + 1);
        EXPECT_DOUBLE_EQ(run_a.trace[i].total, run_b.trace[i].total);
        EXPECT_DOUBLE_EQ(run_a.trace[i].perceptual, run_b.trace[i].perceptual);
    }
    EXPECT_EQ(snapshot(first.params()), snapshot(second.params()));
}

TEST(Train, UnreadablePairSkipsWithWarning) {
    TempDir dir;
    auto records = tiny_dataset(dir, 2, 37);
    auto broken = records[0];
    broken.id = "ghost";
    broken.path_i = dir.file("missing.ppm");
    records.push_back(broken);

    AlaNet net(tiny_config(38));
    TrainOptions opts;
    opts.epochs = 1;
    auto result = train(net, {records}, opts, 39);
    ASSERT_EQ(result.warnings.size(), 1u);
    EXPECT_NE(result.warnings[0].find("ghost"), std::string::npos);
    // The unreadable pair drops out of the iteration count too.
    EXPECT_EQ(result.trace.size(), 2u);
}

TEST(Train, AllUnreadableThrows) {
    TempDir dir;
    DatasetRecord ghost;
    ghost.id = "ghost";
    ghost.path_i = dir.file("no_i.ppm");
    ghost.path_t = dir.file("no_t.ppm");
    ghost.path_r = dir.file("no_r.ppm");
    AlaNet net(tiny_config(40));
    EXPECT_THROW(train(net, {{ghost}}, TrainOptions{}, 41), ConfigError);
}

TEST(Train, MixtureRequiresOneWeightPerSource) {
    TempDir dir;
    auto records = tiny_dataset(dir, 2, 42);
    std::vector<DatasetRecord> first{records[0]};
    std::vector<DatasetRecord> second{records[1]};
    AlaNet net(tiny_config(43));
    TrainOptions opts;
    opts.epochs = 1;
    opts.mixture_weights = {0.6, 0.2, 0.2};
    EXPECT_THROW(train(net, {first, second}, opts, 44), ConfigError);

    // A single source never consults the mixture weights.
    opts.mixture_weights = {0.1};
    auto result = train(net, {records}, opts, 45);
    EXPECT_EQ(result.trace.size(), 2u);
}

TEST(Train, MixtureIterationsSumSourceSizes) {
    TempDir dir;
    auto records = tiny_dataset(dir, 3, 46);
    std::vector<DatasetRecord> first{records[0], records[1]};
    std::vector<DatasetRecord> second{records[2]};
    AlaNet net(tiny_config(47));
    TrainOptions opts;
    opts.epochs = 2;
    opts.mixture_weights = {0.7, 0.3};
    auto result = train(net, {first, second}, opts, 48);
    EXPECT_EQ(result.trace.size(), 6u);
}

TEST(Train, LossTrendsDownOnRepeatedPair) {
    TempDir dir;
    auto records = tiny_dataset(dir, 1, 49);
    AlaNet net(tiny_config(50));
    TrainOptions opts;
    opts.epochs = 60;
    opts.lr = 1e-3;
    opts.lr_final = 1e-3;
    opts.augment_flip = false;
    auto result = train(net, {records}, opts, 51);
    ASSERT_EQ(result.trace.size(), 60u);
    auto mean_over = [&](std::size_t begin, std::size_t end) {
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) acc += result.trace[i].total;
        return acc / static_cast<double>(end - begin);
    };
    EXPECT_LT(mean_over(50, 60), mean_over(0, 10));
}

TEST(Train, RejectsBadOptions) {
    TempDir dir;
    auto records = tiny_dataset(dir, 1, 52);
    AlaNet net(tiny_config(53));
    TrainOptions opts;
    opts.epochs = -1;
    EXPECT_THROW(train(net, {records}, opts, 54), ConfigError);
    opts.epochs = 1;
    opts.lr = 0.0;
    EXPECT_THROW(train(net, {records}, opts, 54), ConfigError);
    opts.lr = 1e-4;
    opts.lr_drop_fraction = 1.5;
    EXPECT_THROW(train(net, {records}, opts, 54), ConfigError);
    opts.lr_drop_fraction = 0.5;
    EXPECT_THROW(train(net, {}, opts, 54), ConfigError);
}

TEST(Evaluate, ScoresEveryRecord) {
    TempDir dir;
    auto records = tiny_dataset(dir, 2, 55);
    AlaNet net(tiny_config(56));
    auto rows = evaluate(net, records);
    ASSERT_EQ(rows.size(), 2u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].image_id, records[i].id);
        EXPECT_TRUE(std::isfinite(rows[i].psnr));
        EXPECT_LE(rows[i].psnr, 99.0);
        EXPECT_GE(rows[i].ssim, -1.0);
        EXPECT_LE(rows[i].ssim, 1.0);
    }
}

TEST(TraceCsv, HeaderAndValuesRoundTrip) {
    TempDir dir;
    std::vector<TraceRow> trace{{1, 0.5, 0.125, 0.0625, 0.25, 0.03125},
                                {2, 1.0 / 3.0, 0.1, 0.2, 0.3, 0.4}};
    auto path = dir.file("trace.csv");
    write_trace_csv(trace, path);
    auto text = slurp(path);
    ASSERT_EQ(text.rfind("iteration,total,mse_T,mse_R,grad,perceptual\n", 0), 0u);

    std::istringstream lines(text);
    std::string header, row1, row2;
    std::getline(lines, header);
    std::getline(lines, row1);
    std::getline(lines, row2);
    EXPECT_EQ(row1, "1,0.5,0.125,0.0625,0.25,0.03125");
    // Non-dyadic values round-trip through max_digits10 formatting.
    auto comma = row2.find(',');
    EXPECT_EQ(std::stod(row2.substr(comma + 1)), 1.0 / 3.0);
}

TEST(EvalCsv, HeaderAndRowsMatch) {
    TempDir dir;
    std::vector<EvalRow> rows{{"p00000", 24.5, 0.75}, {"p00001", 31.0, 0.875}};
    auto path = dir.file("eval.csv");
    write_eval_csv(rows, path);
    auto text = slurp(path);
    EXPECT_EQ(text, "image_id,psnr,ssim\np00000,24.5,0.75\np00001,31,0.875\n");
}

TEST(GradSuite, EveryCheckPassesWithDistinctNames) {
    auto reports = run_grad_check_suite();
    ASSERT_GE(reports.size(), 50u);
    std::vector<std::string> names;
    for (const auto& r : reports) {
        EXPECT_TRUE(r.passed) << r.name << " max rel error " << r.max_rel_error;
        EXPECT_GT(r.checked, 0) << r.name;
        names.push_back(r.name);
    }
    std::sort(names.begin(), names.end());
    EXPECT_TRUE(std::adjacent_find(names.begin(), names.end()) == names.end());
}

} // namespace
