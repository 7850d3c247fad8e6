#include "alanet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alanet/errors.hpp"

namespace alanet {

TensorPtr glorot(std::int64_t rows, std::int64_t cols, Rng& rng) {
    double sd = std::sqrt(2.0 / static_cast<double>(rows + cols));
    return randn({rows, cols}, rng, sd, true);
}

TensorPtr he_conv(std::int64_t out_ch, std::int64_t in_ch, std::int64_t k, Rng& rng) {
    double sd = std::sqrt(2.0 / static_cast<double>(in_ch * k * k));
    return randn({out_ch, in_ch, k, k}, rng, sd, true);
}

namespace {

std::int64_t mlp_hidden(std::int64_t channels) { return std::max<std::int64_t>(channels / 2, 1); }

TensorPtr mlp2(const TensorPtr& x, const TensorPtr& w1, const TensorPtr& b1,
               const TensorPtr& w2, const TensorPtr& b2) {
    return linear(relu(linear(x, w1, b1)), w2, b2);
}

void require_channels(const char* module, const TensorPtr& image_feat, std::int64_t channels) {
    if (image_feat->shape.size() != 3 || image_feat->shape[0] != channels) {
        throw DimensionError(std::string(module) + ": expected {" + std::to_string(channels) +
                             ",H,W} features");
    }
}

} // namespace

Lcam::Lcam(std::int64_t channels, Rng& rng, bool language_branch, bool channel_branch)
    : channels(channels), language_branch(language_branch), channel_branch(channel_branch) {
    if (channels <= 0) throw ConfigError("lcam: channel width must be positive");
    std::int64_t hidden = mlp_hidden(channels);
    if (language_branch) {
        lang_proj_w = glorot(channels, channels, rng);
        lang_proj_b = zeros({channels}, true);
        img_proj_w = glorot(channels, channels, rng);
        img_proj_b = zeros({channels}, true);
        lang_mlp_w1 = glorot(channels, hidden, rng);
        lang_mlp_b1 = zeros({hidden}, true);
        lang_mlp_w2 = glorot(hidden, channels, rng);
        lang_mlp_b2 = zeros({channels}, true);
    }
    if (channel_branch) {
        chan_mlp_w1 = glorot(channels, hidden, rng);
        chan_mlp_b1 = zeros({hidden}, true);
        chan_mlp_w2 = glorot(hidden, channels, rng);
        chan_mlp_b2 = zeros({channels}, true);
    }
}

TensorPtr Lcam::forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                        LcamState* state) const {
    require_channels("lcam", image_feat, channels);
    TensorPtr chan_gate;
    if (channel_branch) {
        chan_gate = sigmoid(mlp2(pool_spatial_avg(image_feat), chan_mlp_w1, chan_mlp_b1,
                                 chan_mlp_w2, chan_mlp_b2));
    }
    if (state) {
        *state = LcamState{};
        state->chan_gate = chan_gate;
    }

    TensorPtr gate;
    if (lang_feat && language_branch) {
        auto lang_desc = linear(lang_feat, lang_proj_w, lang_proj_b);
        auto img_desc = linear(pool_spatial_avg(image_feat), img_proj_w, img_proj_b);
        auto sim = matmul(transpose(lang_desc), img_desc);  // {C,C}
        // Mean over the language axis collapses rows.
        auto sim_scores = matmul(full({1, channels}, 1.0 / static_cast<double>(channels)), sim);
        auto lang_weight = sigmoid(sim_scores);
        auto lang_gate =
            sigmoid(mlp2(lang_desc, lang_mlp_w1, lang_mlp_b1, lang_mlp_w2, lang_mlp_b2));
        if (state) {
            state->sim_matrix = sim;
            state->sim_scores = sim_scores;
            state->lang_weight = lang_weight;
            state->lang_gate = lang_gate;
        }
        if (channel_branch) {
            gate = add(mul(lang_weight, lang_gate), mul(complement(lang_weight), chan_gate));
        } else {
            gate = lang_gate;
        }
    } else {
        gate = chan_gate;  // may stay null when both branches are disabled
    }
    if (!gate) return image_feat;
    return add(mul(gate, image_feat), image_feat);
}

std::vector<TensorPtr> Lcam::params() const {
    std::vector<TensorPtr> out;
    for (const auto& p :
         {lang_proj_w, lang_proj_b, img_proj_w, img_proj_b, lang_mlp_w1, lang_mlp_b1,
          lang_mlp_w2, lang_mlp_b2, chan_mlp_w1, chan_mlp_b1, chan_mlp_w2, chan_mlp_b2}) {
        if (p) out.push_back(p);
    }
    return out;
}

Alcm::Alcm(std::int64_t channels, Rng& rng) : channels(channels) {
    if (channels <= 0) throw ConfigError("alcm: channel width must be positive");
    img_w = glorot(channels, channels, rng);
    img_b = zeros({channels}, true);
    lang_w = glorot(channels, channels, rng);
    lang_b = zeros({channels}, true);
    gate_w = glorot(2 * channels, channels, rng);
    gate_b = zeros({channels}, true);
}

TensorPtr Alcm::forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                        AlcmState* state) const {
    require_channels("alcm", image_feat, channels);
    if (!lang_feat) throw ConfigError("alcm: called without a caption feature");
    auto image_desc = linear(pool_spatial_avg(image_feat), img_w, img_b);
    auto lang_desc = linear(lang_feat, lang_w, lang_b);
    auto gate = sigmoid(linear(concat_cols(image_desc, lang_desc), gate_w, gate_b));
    auto calibrated = add(mul(gate, lang_desc), mul(complement(gate), image_desc));
    if (state) *state = AlcmState{image_desc, lang_desc, gate, calibrated};
    return calibrated;
}

std::vector<TensorPtr> Alcm::params() const {
    return {img_w, img_b, lang_w, lang_b, gate_w, gate_b};
}

Lsca::Lsca(std::int64_t channels, Rng& rng) : channels(channels) {
    if (channels <= 0) throw ConfigError("lsca: channel width must be positive");
    lang_a_w = glorot(channels, channels, rng);
    lang_a_b = zeros({channels}, true);
    spat_w = glorot(channels, channels, rng);
    spat_b = zeros({channels}, true);
    chan_w = glorot(1, 1, rng);
    chan_b = zeros({1}, true);
    lang_b_w = glorot(channels, channels, rng);
    lang_b_b = zeros({channels}, true);
}

TensorPtr Lsca::forward(const TensorPtr& image_feat, const TensorPtr& lang_feat,
                        LscaState* state) const {
    return apply(image_feat, image_feat, lang_feat, state);
}

TensorPtr Lsca::apply(const TensorPtr& value, const TensorPtr& descriptor,
                      const TensorPtr& lang_feat, LscaState* state) const {
    require_channels("lsca", value, channels);
    if (!lang_feat) return value;
    if (!same_shape(*value, *descriptor)) {
        throw DimensionError("lsca: value and descriptor shapes differ");
    }
    std::int64_t h = value->shape[1], w = value->shape[2];

    auto spatial_pool = pool_spatial_avg(descriptor);  // {1,C}
    auto channel_pool = pool_channel_avg(descriptor);  // {HW,1}
    auto chan_affinity = matmul(transpose(linear(lang_feat, lang_a_w, lang_a_b)),
                                linear(spatial_pool, spat_w, spat_b));  // {C,C}
    auto spat_affinity = matmul(linear(channel_pool, chan_w, chan_b),
                                linear(lang_feat, lang_b_w, lang_b_b));  // {HW,C}
    auto chan_soft = softmax(chan_affinity, 1);
    auto spat_soft = softmax(spat_affinity, 1);
    auto cross = matmul(spat_soft, chan_soft);  // {HW,C}, rows still sum to 1
    if (state) {
        *state = LscaState{spatial_pool, channel_pool, chan_affinity, spat_affinity,
                           chan_soft,    spat_soft,    cross};
    }
    auto map = reshape(transpose(cross), {channels, h, w});
    return add(mul(value, map), value);
}

std::vector<TensorPtr> Lsca::params() const {
    return {lang_a_w, lang_a_b, spat_w, spat_b, chan_w, chan_b, lang_b_w, lang_b_b};
}

Lsct::Lsct(std::int64_t channels, Rng& rng)
    : channels(channels),
      norm1_gain(full({channels}, 1.0, true)),
      norm1_shift(zeros({channels}, true)),
      norm2_gain(full({channels}, 1.0, true)),
      norm2_shift(zeros({channels}, true)),
      lsca(channels, rng),
      ffn_w1(he_conv(2 * channels, channels, 1, rng)),
      ffn_b1(zeros({2 * channels}, true)),
      ffn_w2(zeros({channels, 2 * channels, 1, 1}, true)),
      ffn_b2(zeros({channels}, true)) {}

TensorPtr Lsct::forward(const TensorPtr& x, const TensorPtr& lang_feat,
                        LscaState* state) const {
    require_channels("lsct", x, channels);
    TensorPtr attended = x;
    if (lang_feat) {
        auto normed = channel_norm(x, norm1_gain, norm1_shift);
        attended = lsca.apply(x, normed, lang_feat, state);
    }
    auto pre = channel_norm(attended, norm2_gain, norm2_shift);
    auto expanded = relu(conv2d(pre, ffn_w1, ffn_b1));
    auto projected = conv2d(expanded, ffn_w2, ffn_b2);
    return add(attended, projected);
}

std::vector<TensorPtr> Lsct::params() const {
    std::vector<TensorPtr> out{norm1_gain, norm1_shift, norm2_gain, norm2_shift};
    auto inner = lsca.params();
    out.insert(out.end(), inner.begin(), inner.end());
    out.insert(out.end(), {ffn_w1, ffn_b1, ffn_w2, ffn_b2});
    return out;
}

Mfdm::Mfdm(std::int64_t channels, std::vector<std::int64_t> kernels, Rng& rng)
    : channels(channels), kernel_sizes(std::move(kernels)) {
    if (channels <= 0) throw ConfigError("mfdm: channel width must be positive");
    if (kernel_sizes.empty()) throw ConfigError("mfdm: needs at least one kernel size");
    std::size_t smallest = 0;
    for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
        if (kernel_sizes[i] <= 0) throw KernelError("mfdm: kernel sizes must be positive");
        if (kernel_sizes[i] % 2 == 0) {
            throw KernelError("mfdm: kernel size " + std::to_string(kernel_sizes[i]) +
                              " is even");
        }
        if (kernel_sizes[i] < kernel_sizes[smallest]) smallest = i;
    }
    std::int64_t count = static_cast<std::int64_t>(kernel_sizes.size());
    std::int64_t base = channels / count;
    if (base == 0) {
        throw ConfigError("mfdm: " + std::to_string(channels) + " channels cannot fill " +
                          std::to_string(count) + " groups");
    }
    group_sizes.assign(kernel_sizes.size(), base);
    group_sizes[smallest] += channels % count;

    for (MfdmStream* stream : {&trans, &refl}) {
        for (std::size_t g = 0; g < kernel_sizes.size(); ++g) {
            std::int64_t width = group_sizes[g], k = kernel_sizes[g];
            stream->group_w.push_back(he_conv(width, width, k, rng));
            stream->group_b.push_back(zeros({width}, true));
        }
        stream->fuse_w = zeros({channels, channels, 1, 1}, true);
        stream->fuse_b = zeros({channels}, true);
    }
}

std::pair<TensorPtr, TensorPtr> Mfdm::forward(const TensorPtr& trans_feat,
                                              const TensorPtr& refl_feat) const {
    require_channels("mfdm", trans_feat, channels);
    require_channels("mfdm", refl_feat, channels);
    if (!same_shape(*trans_feat, *refl_feat)) {
        throw DimensionError("mfdm: stream shapes differ");
    }
    auto run = [&](const MfdmStream& stream, const TensorPtr& own, const TensorPtr& other) {
        std::vector<TensorPtr> parts;
        std::int64_t begin = 0;
        for (std::size_t g = 0; g < group_sizes.size(); ++g) {
            std::int64_t end = begin + group_sizes[g];
            auto convolved =
                conv2d(slice_channels(own, begin, end), stream.group_w[g], stream.group_b[g]);
            parts.push_back(mul(convolved, slice_channels(other, begin, end)));
            begin = end;
        }
        auto fused = conv2d(concat_channels(parts), stream.fuse_w, stream.fuse_b);
        return add(fused, own);
    };
    return {run(trans, trans_feat, refl_feat), run(refl, refl_feat, trans_feat)};
}

std::vector<TensorPtr> Mfdm::params() const {
    std::vector<TensorPtr> out;
    for (const MfdmStream* stream : {&trans, &refl}) {
        for (std::size_t g = 0; g < stream->group_w.size(); ++g) {
            out.push_back(stream->group_w[g]);
            out.push_back(stream->group_b[g]);
        }
        out.push_back(stream->fuse_w);
        out.push_back(stream->fuse_b);
    }
    return out;
}

Lasb::Lasb(std::int64_t channels, const std::vector<std::int64_t>& kernel_sizes, Rng& rng,
           bool lcam_language, bool lcam_channel)
    : trans_lcam(channels, rng, lcam_language, lcam_channel),
      refl_lcam(channels, rng, lcam_language, lcam_channel),
      mfdm(channels, kernel_sizes, rng) {}

std::pair<TensorPtr, TensorPtr> Lasb::forward(const TensorPtr& trans_feat,
                                              const TensorPtr& refl_feat,
                                              const TensorPtr& trans_lang,
                                              const TensorPtr& refl_lang,
                                              LasbState* state) const {
    auto trans_attended =
        trans_lcam.forward(trans_feat, trans_lang, state ? &state->trans_lcam : nullptr);
    auto refl_attended =
        refl_lcam.forward(refl_feat, refl_lang, state ? &state->refl_lcam : nullptr);
    if (state) {
        state->trans_attended = trans_attended;
        state->refl_attended = refl_attended;
    }
    return mfdm.forward(trans_attended, refl_attended);
}

std::vector<TensorPtr> Lasb::params() const {
    std::vector<TensorPtr> out = trans_lcam.params();
    auto r = refl_lcam.params();
    auto m = mfdm.params();
    out.insert(out.end(), r.begin(), r.end());
    out.insert(out.end(), m.begin(), m.end());
    return out;
}

} // namespace alanet
