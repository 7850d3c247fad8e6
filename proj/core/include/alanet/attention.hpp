#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "alanet/rng.hpp"
#include "alanet/tensor.hpp"

namespace alanet {

// Channel attention with two competing gates: one derived from the caption,
// one squeeze-excite style gate from the image itself. A sigmoid of the
// language-image channel similarities arbitrates between them. Without a
// caption the output is exactly the channel-only path.
struct LcamState {
    TensorPtr sim_matrix;   // {C,C} language x image channel similarity
    TensorPtr sim_scores;   // {1,C} mean over the language axis
    TensorPtr lang_weight;  // {1,C} sigmoid of sim_scores
    TensorPtr lang_gate;    // {1,C}
    TensorPtr chan_gate;    // {1,C}
};

struct Lcam {
    std::int64_t channels = 0;
    bool language_branch = true;
    bool channel_branch = true;

    TensorPtr lang_proj_w, lang_proj_b;
    TensorPtr img_proj_w, img_proj_b;
    TensorPtr lang_mlp_w1, lang_mlp_b1, lang_mlp_w2, lang_mlp_b2;
    TensorPtr chan_mlp_w1, chan_mlp_b1, chan_mlp_w2, chan_mlp_b2;

    Lcam(std::int64_t channels, Rng& rng, bool language_branch = true,
         bool channel_branch = true);

    // lang_feat is {1,C} or null for no caption. With a caption the output is
    // (w*lang_gate + (1-w)*chan_gate) * x + x; without one, chan_gate * x + x.
    TensorPtr forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                      LcamState* state = nullptr) const;
    std::vector<TensorPtr> params() const;
};

// Calibrates a caption descriptor against the image content: a learned
// sigmoid gate mixes the language descriptor with a pooled image descriptor.
// Callers skip this module entirely when no caption is present.
struct AlcmState {
    TensorPtr image_desc;  // {1,C}
    TensorPtr lang_desc;   // {1,C}
    TensorPtr gate;        // {1,C} in (0,1)
    TensorPtr calibrated;  // {1,C}
};

struct Alcm {
    std::int64_t channels = 0;
    TensorPtr img_w, img_b;
    TensorPtr lang_w, lang_b;
    TensorPtr gate_w, gate_b;  // {2C,C}

    Alcm(std::int64_t channels, Rng& rng);
    TensorPtr forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                      AlcmState* state = nullptr) const;
    std::vector<TensorPtr> params() const;
};

// Cross-attention between pooled spatial/channel descriptors and the caption.
// Two affinity matrices are softmaxed over their last axis and multiplied;
// the row-stochastic product reshapes into a modulation map over {C,H,W}.
// Without a caption the input passes through bit-identically.
struct LscaState {
    TensorPtr spatial_pool;        // {1,C}
    TensorPtr channel_pool;        // {HW,1}
    TensorPtr chan_affinity;       // {C,C} raw
    TensorPtr spat_affinity;       // {HW,C} raw
    TensorPtr chan_affinity_soft;  // rows sum to 1
    TensorPtr spat_affinity_soft;  // rows sum to 1
    TensorPtr cross_map;           // {HW,C} row-stochastic product
};

struct Lsca {
    std::int64_t channels = 0;
    TensorPtr lang_a_w, lang_a_b;  // caption projection for the channel affinity
    TensorPtr spat_w, spat_b;      // spatial-descriptor projection
    TensorPtr chan_w, chan_b;      // channel-descriptor projection, {1,1}
    TensorPtr lang_b_w, lang_b_b;  // caption projection for the spatial affinity

    Lsca(std::int64_t channels, Rng& rng);
    TensorPtr forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                      LscaState* state = nullptr) const;
    // Attention maps come from `descriptor`; modulation applies to `value`.
    // forward() passes the same tensor for both.
    TensorPtr apply(const TensorPtr& value, const TensorPtr& descriptor,
                    const TensorPtr& lang_feat, LscaState* state = nullptr) const;
    std::vector<TensorPtr> params() const;
};

// Transformer-style block around Lsca: attention maps are computed from
// pre-normalized features and modulate the raw stream, then a pre-normalized
// pointwise feed-forward (expansion 2) adds its residual. The feed-forward
// output projection starts at zero, so a freshly built block without a
// caption is the identity.
struct Lsct {
    std::int64_t channels = 0;
    TensorPtr norm1_gain, norm1_shift;
    TensorPtr norm2_gain, norm2_shift;
    Lsca lsca;
    TensorPtr ffn_w1, ffn_b1;  // 1x1 conv, C -> 2C
    TensorPtr ffn_w2, ffn_b2;  // 1x1 conv, 2C -> C, zero-initialized

    Lsct(std::int64_t channels, Rng& rng);
    TensorPtr forward(const TensorPtr& x, const TensorPtr& lang_feat,
                      LscaState* state = nullptr) const;
    std::vector<TensorPtr> params() const;
};

// Multi-scale cross-stream gating. Channels split into one group per kernel
// size (remainder channels go to the smallest kernel's group); each group is
// convolved at its own receptive field and multiplied by the other stream's
// matching channels, then a pointwise fuse and a residual close each stream.
// The fuse weights start at zero, so a freshly built block is the identity on
// both streams and the cross-stream products enter only as the fuse learns.
struct MfdmStream {
    std::vector<TensorPtr> group_w, group_b;
    TensorPtr fuse_w, fuse_b;
};

struct Mfdm {
    std::int64_t channels = 0;
    std::vector<std::int64_t> kernel_sizes;
    std::vector<std::int64_t> group_sizes;
    MfdmStream trans, refl;

    Mfdm(std::int64_t channels, std::vector<std::int64_t> kernel_sizes, Rng& rng);
    std::pair<TensorPtr, TensorPtr> forward(const TensorPtr& trans_feat,
                                            const TensorPtr& refl_feat) const;
    std::vector<TensorPtr> params() const;
};

// One dual-stream block: per-stream Lcam with that stream's caption feature,
// then joint Mfdm mixing.
struct LasbState {
    LcamState trans_lcam, refl_lcam;
    TensorPtr trans_attended, refl_attended;
};

struct Lasb {
    Lcam trans_lcam, refl_lcam;
    Mfdm mfdm;

    Lasb(std::int64_t channels, const std::vector<std::int64_t>& kernel_sizes, Rng& rng,
         bool lcam_language = true, bool lcam_channel = true);
    std::pair<TensorPtr, TensorPtr> forward(const TensorPtr& trans_feat,
                                            const TensorPtr& refl_feat,
                                            const TensorPtr& trans_lang,
                                            const TensorPtr& refl_lang,
                                            LasbState* state = nullptr) const;
    std::vector<TensorPtr> params() const;
};

// Shared initializers.
TensorPtr glorot(std::int64_t rows, std::int64_t cols, Rng& rng);
TensorPtr he_conv(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k, Rng& rng);

} // namespace alanet
