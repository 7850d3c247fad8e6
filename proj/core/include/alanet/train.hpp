#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alanet/network.hpp"
#include "alanet/synthesis.hpp"
#include "alanet/tensor.hpp"

namespace alanet {

struct LossWeights {
    double lambda1 = 1.0;  // MSE on both streams
    double lambda2 = 2.0;  // edge gradients, transmission only
    double lambda3 = 0.01; // frozen-pyramid features, transmission only
};

// Mean absolute difference between forward-difference spatial gradients of x
// and y, averaged over the horizontal and vertical axis.
TensorPtr grad_loss(const TensorPtr& x, const TensorPtr& y);

// Mean absolute distance between pyramid features of x and y, averaged over
// levels. Pass a frozen pyramid; gradients still flow into x and y.
TensorPtr perceptual_loss(const TensorPtr& x, const TensorPtr& y,
                          const PerceptionPyramid& features);

struct LossBreakdown {
    TensorPtr total;  // scalar node, differentiable
    double mse_t = 0.0;
    double mse_r = 0.0;
    double grad = 0.0;
    double perceptual = 0.0;
};

// lambda1*(MSE(T_hat,T) + MSE(R_hat,R)) + lambda2*grad_loss(T_hat,T)
//   + lambda3*perceptual_loss(T_hat,T). Weights must be nonnegative.
LossBreakdown loss_total(const LayerPrediction& pred, const TensorPtr& gt_t,
                         const TensorPtr& gt_r, const LossWeights& weights,
                         const PerceptionPyramid& features);

// The loss pyramid is a separate frozen network, never the trainable one
// inside the model; its parameters take no optimizer updates.
PerceptionPyramid make_frozen_perception(const NetworkConfig& config);

struct AdamState {
    explicit AdamState(const std::vector<TensorPtr>& params);
    std::vector<std::vector<double>> first;
    std::vector<std::vector<double>> second;
    std::int64_t step = 0;
};

// Standard bias-corrected Adam over the parameters' accumulated grad buffers.
// A parameter whose grad buffer is empty counts as zero gradient.
void adam_step(const std::vector<TensorPtr>& params, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TraceRow {
    std::int64_t iteration;  // 1-based, global across epochs
    double total;
    double mse_t;
    double mse_r;
    double grad;
    double perceptual;
};

struct TrainOptions {
    std::int64_t epochs = 1;
    double lr = 1e-4;
    double lr_final = 1e-5;
    // Epoch index ceil(fraction * epochs) and later run at lr_final.
    double lr_drop_fraction = 5.0 / 7.0;
    LossWeights weights;
    bool augment_flip = true;
    // One weight per source; engaged only with several sources.
    std::vector<double> mixture_weights = {0.6, 0.2, 0.2};
};

struct TrainResult {
    std::vector<TraceRow> trace;
    std::vector<std::string> warnings;  // one per skipped unreadable pair
};

// Batch-size-1 training, mutating net parameters in place. A single source is
// shuffled once per epoch; several sources are sampled per iteration by
// mixture weight, with sum-of-sizes iterations per epoch. Unreadable pairs
// are skipped with a warning; throws ConfigError when nothing is readable.
TrainResult train(AlaNet& net, const std::vector<std::vector<DatasetRecord>>& sources,
                  const TrainOptions& opts, std::uint64_t seed);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

struct EvalRow {
    std::string image_id;
    double psnr;
    double ssim;
};

// Transmission quality per pair: metrics of the clamped prediction against
// the stored ground truth, using each record's captions.
std::vector<EvalRow> evaluate(const AlaNet& net, const std::vector<DatasetRecord>& records);

void write_eval_csv(const std::vector<EvalRow>& rows, const std::string& path);

} // namespace alanet
