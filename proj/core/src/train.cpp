#include "alanet/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "alanet/errors.hpp"
#include "alanet/image_metrics.hpp"

namespace alanet {

namespace {

TensorPtr mse(const TensorPtr& x, const TensorPtr& y) {
    auto d = sub(x, y);
    return mean_all(mul(d, d));
}

void check_weights(const LossWeights& weights) {
    if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.lambda3 < 0) {
        throw ConfigError("loss weights must be nonnegative");
    }
}

std::string csv_number(double v) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << v;
    return out.str();
}

TensorPtr flip_horizontal(const TensorPtr& img) {
    std::int64_t c = img->shape[0], h = img->shape[1], w = img->shape[2];
    auto out = zeros(img->shape);
    for (std::int64_t ch = 0; ch < c; ++ch)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x)
                out->data[(ch * h + y) * w + x] = img->data[(ch * h + y) * w + (w - 1 - x)];
    return out;
}

struct LoadedPair {
    std::string id;
    TensorPtr input, gt_t, gt_r;
    std::optional<std::string> caption_t, caption_r;
};

std::optional<std::string> as_caption(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return text;
}

} // namespace

TensorPtr grad_loss(const TensorPtr& x, const TensorPtr& y) {
    auto horizontal = mean_all(abs_value(sub(diff_right(x), diff_right(y))));
    auto vertical = mean_all(abs_value(sub(diff_down(x), diff_down(y))));
    return scale(add(horizontal, vertical), 0.5);
}

TensorPtr perceptual_loss(const TensorPtr& x, const TensorPtr& y,
                          const PerceptionPyramid& features) {
    auto fx = features.encode(x);
    auto fy = features.encode(y);
    TensorPtr total;
    for (std::size_t level = 0; level < fx.size(); ++level) {
        auto term = mean_all(abs_value(sub(fx[level], fy[level])));
        total = total ? add(total, term) : term;
    }
    return scale(total, 1.0 / static_cast<double>(fx.size()));
}

LossBreakdown loss_total(const LayerPrediction& pred, const TensorPtr& gt_t,
                         const TensorPtr& gt_r, const LossWeights& weights,
                         const PerceptionPyramid& features) {
    check_weights(weights);
    if (pred.t_hat->shape != gt_t->shape || pred.r_hat->shape != gt_r->shape) {
        throw DimensionError("loss_total: prediction and ground-truth shapes differ");
    }
    LossBreakdown out;
    // Zero-weight components are skipped entirely and report 0 in the trace.
    auto mse_t = mse(pred.t_hat, gt_t);
    auto mse_r = mse(pred.r_hat, gt_r);
    out.mse_t = mse_t->value();
    out.mse_r = mse_r->value();
    out.total = scale(add(mse_t, mse_r), weights.lambda1);
    if (weights.lambda2 > 0) {
        auto g = grad_loss(pred.t_hat, gt_t);
        out.grad = g->value();
        out.total = add(out.total, scale(g, weights.lambda2));
    }
    if (weights.lambda3 > 0) {
        auto p = perceptual_loss(pred.t_hat, gt_t, features);
        out.perceptual = p->value();
        out.total = add(out.total, scale(p, weights.lambda3));
    }
    return out;
}

PerceptionPyramid make_frozen_perception(const NetworkConfig& config) {
    Rng rng(config.seed ^ fnv1a("loss_perception"));
    PerceptionPyramid pyramid(config.channels, rng);
    for (const auto& param : pyramid.params()) param->requires_grad = false;
    return pyramid;
}

AdamState::AdamState(const std::vector<TensorPtr>& params) {
    first.reserve(params.size());
    second.reserve(params.size());
    for (const auto& p : params) {
        first.emplace_back(p->data.size(), 0.0);
        second.emplace_back(p->data.size(), 0.0);
    }
}

void adam_step(const std::vector<TensorPtr>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    if (state.first.size() != params.size()) {
        throw ConfigError("adam_step: state built for a different parameter list");
    }
    ++state.step;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (state.first[i].size() != p.data.size()) {
            throw ConfigError("adam_step: parameter shape changed under the optimizer");
        }
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            double g = j < p.grad.size() ? p.grad[j] : 0.0;
            state.first[i][j] = beta1 * state.first[i][j] + (1.0 - beta1) * g;
            state.second[i][j] = beta2 * state.second[i][j] + (1.0 - beta2) * g * g;
            double m_hat = state.first[i][j] / bc1;
            double v_hat = state.second[i][j] / bc2;
            p.data[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

TrainResult train(AlaNet& net, const std::vector<std::vector<DatasetRecord>>& sources,
                  const TrainOptions& opts, std::uint64_t seed) {
    if (opts.epochs < 0) throw ConfigError("train: epochs must be nonnegative");
    if (opts.lr <= 0 || opts.lr_final <= 0) throw ConfigError("train: learning rates must be positive");
    if (opts.lr_drop_fraction < 0 || opts.lr_drop_fraction > 1) {
        throw ConfigError("train: lr_drop_fraction must lie in [0,1]");
    }
    check_weights(opts.weights);
    if (sources.empty()) throw ConfigError("train: at least one source is required");
    bool mixture = sources.size() > 1;
    std::vector<double> weights;
    if (mixture) {
        if (opts.mixture_weights.size() != sources.size()) {
            throw ConfigError("train: one mixture weight per source is required");
        }
        double total = 0.0;
        for (double w : opts.mixture_weights) {
            if (w < 0) throw ConfigError("train: mixture weights must be nonnegative");
            total += w;
        }
        if (total <= 0) throw ConfigError("train: mixture weights must not all be zero");
        for (double w : opts.mixture_weights) weights.push_back(w / total);
    }

    TrainResult result;
    std::vector<std::vector<LoadedPair>> loaded(sources.size());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (const auto& record : sources[s]) {
            try {
                LoadedPair pair;
                pair.id = record.id;
                pair.input = read_ppm(record.path_i);
                pair.gt_t = read_ppm(record.path_t);
                pair.gt_r = read_ppm(record.path_r);
                pair.caption_t = as_caption(record.caption_t);
                pair.caption_r = as_caption(record.caption_r);
                loaded[s].push_back(std::move(pair));
            } catch (const IoError& e) {
                result.warnings.push_back("skipping " + record.id + ": " + e.what());
            } catch (const ParseError& e) {
                result.warnings.push_back("skipping " + record.id + ": " + e.what());
            }
        }
    }
    // Drop sources that lost every pair; mixture weights renormalize over the
    // survivors.
    std::vector<double> live_weights;
    std::vector<std::vector<LoadedPair>> live;
    for (std::size_t s = 0; s < loaded.size(); ++s) {
        if (loaded[s].empty()) continue;
        live.push_back(std::move(loaded[s]));
        if (mixture) live_weights.push_back(weights[s]);
    }
    if (live.empty()) throw ConfigError("train: no readable training pairs");
    if (mixture) {
        double total = 0.0;
        for (double w : live_weights) total += w;
        if (total <= 0) throw ConfigError("train: every positively weighted source is empty");
        for (double& w : live_weights) w /= total;
    }
    mixture = live.size() > 1;

    std::size_t per_epoch = 0;
    for (const auto& source : live) per_epoch += source.size();

    auto params = net.params();
    AdamState state(params);
    auto frozen = make_frozen_perception(net.config);
    Rng rng(seed ^ fnv1a("train"));
    auto drop_epoch = static_cast<std::int64_t>(
        std::ceil(opts.lr_drop_fraction * static_cast<double>(opts.epochs) - 1e-9));

    std::vector<std::size_t> order(live[0].size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::int64_t iteration = 0;
    for (std::int64_t epoch = 0; epoch < opts.epochs; ++epoch) {
        double lr = epoch >= drop_epoch ? opts.lr_final : opts.lr;
        if (!mixture) rng.shuffle(order);
        for (std::size_t step = 0; step < per_epoch; ++step) {
            const LoadedPair* pair;
            if (mixture) {
                double u = rng.uniform();
                std::size_t s = 0;
                double cumulative = 0.0;
                for (; s + 1 < live.size(); ++s) {
                    cumulative += live_weights[s];
                    if (u < cumulative) break;
                }
                pair = &live[s][rng.below(live[s].size())];
            } else {
                pair = &live[0][order[step]];
            }
            auto input = pair->input;
            auto gt_t = pair->gt_t;
            auto gt_r = pair->gt_r;
            if (opts.augment_flip && rng.coin()) {
                input = flip_horizontal(input);
                gt_t = flip_horizontal(gt_t);
                gt_r = flip_horizontal(gt_r);
            }
            for (const auto& p : params) p->zero_grad();
            auto pred = net.forward(input, pair->caption_t, pair->caption_r);
            auto loss = loss_total(pred, gt_t, gt_r, opts.weights, frozen);
            loss.total->backward();
            adam_step(params, state, lr);
            ++iteration;
            result.trace.push_back({iteration, loss.total->value(), loss.mse_t, loss.mse_r,
                                    loss.grad, loss.perceptual});
        }
    }
    return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "iteration,total,mse_T,mse_R,grad,perceptual\n";
    for (const auto& row : trace) {
        out << row.iteration << ',' << csv_number(row.total) << ',' << csv_number(row.mse_t)
            << ',' << csv_number(row.mse_r) << ',' << csv_number(row.grad) << ','
            << csv_number(row.perceptual) << '\n';
    }
    if (!out.flush()) throw IoError("failed writing " + path);
}

std::vector<EvalRow> evaluate(const AlaNet& net, const std::vector<DatasetRecord>& records) {
    std::vector<EvalRow> rows;
    rows.reserve(records.size());
    for (const auto& record : records) {
        auto input = read_ppm(record.path_i);
        auto gt_t = read_ppm(record.path_t);
        auto pred = net.infer(input, as_caption(record.caption_t), as_caption(record.caption_r));
        rows.push_back({record.id, psnr(pred.t_hat, gt_t), ssim(pred.t_hat, gt_t)});
    }
    return rows;
}

void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "image_id,psnr,ssim\n";
    for (const auto& row : rows) {
        out << row.image_id << ',' << csv_number(row.psnr) << ',' << csv_number(row.ssim)
            << '\n';
    }
    if (!out.flush()) throw IoError("failed writing " + path);
}

} // namespace alanet
