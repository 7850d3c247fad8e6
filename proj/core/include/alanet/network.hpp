#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alanet/attention.hpp"
#include "alanet/language.hpp"
#include "alanet/rng.hpp"
#include "alanet/tensor.hpp"

namespace alanet {

// Shape and wiring of the full model. Every parameter shape is a pure
// function of this struct, so a serialized config reconstructs the model
// exactly. Seeds derive per component, which keeps unrelated modules
// bit-identical when a single feature flag flips.
struct NetworkConfig {
    std::vector<std::int64_t> channels{8, 16, 16, 16, 16};
    std::vector<std::int64_t> blocks{1, 1, 1, 1, 1};
    std::vector<std::int64_t> mfdm_kernel_sizes{1, 3, 5, 7};
    std::uint64_t seed = 0;
    std::int64_t vocab_buckets = 4096;
    std::int64_t embed_dim = 64;
    bool use_alcm = true;
    bool use_lsct = true;
    bool lcam_language = true;
    bool lcam_channel = true;

    void validate() const;  // throws ConfigError on any violation
    std::string to_json() const;
    static NetworkConfig from_json(const std::string& text);
    bool operator==(const NetworkConfig&) const = default;
};

// Trainable stand-in for a pretrained backbone: a 3x3 stem plus four
// stride-2 3x3 stages, relu after every conv, one feature map per level.
struct PerceptionPyramid {
    std::vector<std::int64_t> channels;
    TensorPtr stem_w, stem_b;
    std::vector<TensorPtr> down_w, down_b;

    PerceptionPyramid(const std::vector<std::int64_t>& channels, Rng& rng);
    // Input {3,H,W}, any size; each stage ceil-halves the spatial extent,
    // so level l is {C_l, ceil(H/2^l), ceil(W/2^l)}.
    std::vector<TensorPtr> encode(const TensorPtr& image) const;
    std::vector<TensorPtr> params() const;
};

struct LayerPrediction {
    TensorPtr t_hat;  // {3,H,W}
    TensorPtr r_hat;  // {3,H,W}
};

// Dual-stream encoder/decoder for reflection separation. Each stream keeps
// its own stem, calibration, decoupling and head; the streams exchange
// information inside every Lasb block. Captions are optional everywhere and
// an absent caption routes every language-conditioned module to its bypass.
struct AlaNet {
    NetworkConfig config;
    LanguageEncoder encoder;
    PerceptionPyramid perception;

    TensorPtr stem_t_w, stem_t_b, stem_r_w, stem_r_b;
    // RMS gains at every level entry: the cross-stream products inside the
    // blocks square feature magnitudes, so each level renormalizes its input.
    std::vector<TensorPtr> enc_norm_t, enc_norm_r;      // per level
    std::vector<TensorPtr> dec_norm_t, dec_norm_r;      // levels 0..3
    std::vector<std::optional<Alcm>> alcm_t, alcm_r;    // per level when enabled
    std::vector<std::optional<Lsct>> lsct_t, lsct_r;    // per level when enabled
    std::vector<std::vector<Lasb>> enc_blocks;          // per level
    std::vector<TensorPtr> down_t_w, down_t_b, down_r_w, down_r_b;  // levels 0..3
    std::vector<TensorPtr> up_t_w, up_t_b, up_r_w, up_r_b;          // levels 0..3
    std::vector<std::vector<Lasb>> dec_blocks;          // levels 0..3
    TensorPtr head_t_w, head_t_b, head_r_w, head_r_b;

    explicit AlaNet(NetworkConfig config);

    // Raw predictions for loss computation; nothing is clamped.
    LayerPrediction forward(const TensorPtr& image,
                            const std::optional<std::string>& caption_t,
                            const std::optional<std::string>& caption_r) const;
    // forward() followed by clamping both outputs into [0,1].
    LayerPrediction infer(const TensorPtr& image,
                          const std::optional<std::string>& caption_t,
                          const std::optional<std::string>& caption_r) const;

    std::vector<TensorPtr> params() const;  // stable declaration order
    std::int64_t parameter_count() const;
};

std::int64_t parameter_count(const NetworkConfig& config);

// Flat binary checkpoint: magic "ALNK", version u32, parameter count u64,
// parameters as little-endian f64 in declaration order, then the config as
// length-prefixed JSON. The hashed embedding table is not stored; it
// regenerates from the config seed.
void save_checkpoint(const AlaNet& net, const std::string& path);
AlaNet load_checkpoint(const std::string& path);

} // namespace alanet
