#include "alanet/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "alanet/errors.hpp"

namespace alanet {

namespace {

constexpr std::size_t kLevels = 5;

Rng tag_rng(std::uint64_t seed, const std::string& tag) { return Rng(seed ^ fnv1a(tag)); }

NetworkConfig validated(NetworkConfig c) {
    c.validate();
    return c;
}

TensorPtr maybe_level(const std::optional<LanguageFeature>& lang, std::size_t level) {
    return lang ? lang->per_level[level] : nullptr;
}

void append(std::vector<TensorPtr>& out, const std::vector<TensorPtr>& more) {
    out.insert(out.end(), more.begin(), more.end());
}

} // namespace

void NetworkConfig::validate() const {
    if (channels.size() != kLevels || blocks.size() != kLevels) {
        throw ConfigError("config: channels and blocks must list exactly 5 levels");
    }
    for (auto c : channels) {
        if (c <= 0) throw ConfigError("config: channel widths must be positive");
    }
    for (auto b : blocks) {
        if (b <= 0) throw ConfigError("config: block counts must be positive");
    }
    if (mfdm_kernel_sizes.empty()) throw ConfigError("config: needs at least one kernel size");
    for (auto k : mfdm_kernel_sizes) {
        if (k <= 0 || k % 2 == 0) {
            throw ConfigError("config: kernel sizes must be positive and odd");
        }
    }
    auto groups = static_cast<std::int64_t>(mfdm_kernel_sizes.size());
    for (auto c : channels) {
        if (c < groups) {
            throw ConfigError("config: " + std::to_string(c) + " channels cannot fill " +
                              std::to_string(groups) + " kernel groups");
        }
    }
    if (vocab_buckets <= 0) throw ConfigError("config: vocab_buckets must be positive");
    if (embed_dim <= 0) throw ConfigError("config: embed_dim must be positive");
}

std::string NetworkConfig::to_json() const {
    nlohmann::json j;
    j["channels"] = channels;
    j["blocks"] = blocks;
    j["mfdm_kernel_sizes"] = mfdm_kernel_sizes;
    j["seed"] = seed;
    j["vocab_buckets"] = vocab_buckets;
    j["embed_dim"] = embed_dim;
    j["use_alcm"] = use_alcm;
    j["use_lsct"] = use_lsct;
    j["lcam_language"] = lcam_language;
    j["lcam_channel"] = lcam_channel;
    return j.dump();
}

NetworkConfig NetworkConfig::from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        NetworkConfig c;
        c.channels = j.at("channels").get<std::vector<std::int64_t>>();
        c.blocks = j.at("blocks").get<std::vector<std::int64_t>>();
        c.mfdm_kernel_sizes = j.at("mfdm_kernel_sizes").get<std::vector<std::int64_t>>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.vocab_buckets = j.at("vocab_buckets").get<std::int64_t>();
        c.embed_dim = j.at("embed_dim").get<std::int64_t>();
        c.use_alcm = j.at("use_alcm").get<bool>();
        c.use_lsct = j.at("use_lsct").get<bool>();
        c.lcam_language = j.at("lcam_language").get<bool>();
        c.lcam_channel = j.at("lcam_channel").get<bool>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

PerceptionPyramid::PerceptionPyramid(const std::vector<std::int64_t>& widths, Rng& rng)
    : channels(widths) {
    if (channels.size() != kLevels) {
        throw ConfigError("perception: expected 5 channel widths");
    }
    stem_w = he_conv(channels[0], 3, 3, rng);
    stem_b = zeros({channels[0]}, true);
    for (std::size_t l = 1; l < kLevels; ++l) {
        down_w.push_back(he_conv(channels[l], channels[l - 1], 3, rng));
        down_b.push_back(zeros({channels[l]}, true));
    }
}

std::vector<TensorPtr> PerceptionPyramid::encode(const TensorPtr& image) const {
    if (image->shape.size() != 3 || image->shape[0] != 3) {
        throw DimensionError("perception: expected a {3,H,W} image");
    }
    std::vector<TensorPtr> levels;
    auto f = relu(conv2d(image, stem_w, stem_b));
    levels.push_back(f);
    for (std::size_t l = 1; l < kLevels; ++l) {
        f = relu(conv2d(f, down_w[l - 1], down_b[l - 1], 2));
        levels.push_back(f);
    }
    return levels;
}

std::vector<TensorPtr> PerceptionPyramid::params() const {
    std::vector<TensorPtr> out{stem_w, stem_b};
    for (std::size_t l = 0; l < down_w.size(); ++l) {
        out.push_back(down_w[l]);
        out.push_back(down_b[l]);
    }
    return out;
}

AlaNet::AlaNet(NetworkConfig cfg)
    : config(validated(std::move(cfg))),
      encoder(config.channels, config.vocab_buckets, config.embed_dim,
              config.seed ^ fnv1a("language")),
      perception([this] {
          Rng rng = tag_rng(config.seed, "perception");
          return PerceptionPyramid(config.channels, rng);
      }()) {
    {
        Rng rng = tag_rng(config.seed, "stem_t");
        stem_t_w = he_conv(config.channels[0], 3, 3, rng);
        stem_t_b = zeros({config.channels[0]}, true);
    }
    {
        Rng rng = tag_rng(config.seed, "stem_r");
        stem_r_w = he_conv(config.channels[0], 3, 3, rng);
        stem_r_b = zeros({config.channels[0]}, true);
    }
    alcm_t.resize(kLevels);
    alcm_r.resize(kLevels);
    lsct_t.resize(kLevels);
    lsct_r.resize(kLevels);
    enc_blocks.resize(kLevels);
    dec_blocks.resize(kLevels - 1);
    for (std::size_t l = 0; l < kLevels; ++l) {
        auto width = config.channels[l];
        auto tag = std::to_string(l);
        enc_norm_t.push_back(full({width}, 1.0, true));
        enc_norm_r.push_back(full({width}, 1.0, true));
        if (l + 1 < kLevels) {
            dec_norm_t.push_back(full({width}, 1.0, true));
            dec_norm_r.push_back(full({width}, 1.0, true));
        }
        if (config.use_alcm) {
            Rng rt = tag_rng(config.seed, "alcm_t/" + tag);
            alcm_t[l].emplace(width, rt);
            Rng rr = tag_rng(config.seed, "alcm_r/" + tag);
            alcm_r[l].emplace(width, rr);
        }
        if (config.use_lsct) {
            Rng rt = tag_rng(config.seed, "lsct_t/" + tag);
            lsct_t[l].emplace(width, rt);
            Rng rr = tag_rng(config.seed, "lsct_r/" + tag);
            lsct_r[l].emplace(width, rr);
        }
        for (std::int64_t b = 0; b < config.blocks[l]; ++b) {
            Rng rb = tag_rng(config.seed, "enc/" + tag + "/" + std::to_string(b));
            enc_blocks[l].emplace_back(width, config.mfdm_kernel_sizes, rb,
                                       config.lcam_language, config.lcam_channel);
        }
        if (l + 1 < kLevels) {
            auto next = config.channels[l + 1];
            Rng rt = tag_rng(config.seed, "down_t/" + tag);
            down_t_w.push_back(he_conv(next, width, 3, rt));
            down_t_b.push_back(zeros({next}, true));
            Rng rr = tag_rng(config.seed, "down_r/" + tag);
            down_r_w.push_back(he_conv(next, width, 3, rr));
            down_r_b.push_back(zeros({next}, true));
        }
    }
    for (std::size_t l = 0; l + 1 < kLevels; ++l) {
        auto width = config.channels[l];
        auto next = config.channels[l + 1];
        auto tag = std::to_string(l);
        Rng rt = tag_rng(config.seed, "up_t/" + tag);
        up_t_w.push_back(he_conv(width, next, 3, rt));
        up_t_b.push_back(zeros({width}, true));
        Rng rr = tag_rng(config.seed, "up_r/" + tag);
        up_r_w.push_back(he_conv(width, next, 3, rr));
        up_r_b.push_back(zeros({width}, true));
        for (std::int64_t b = 0; b < config.blocks[l]; ++b) {
            Rng rb = tag_rng(config.seed, "dec/" + tag + "/" + std::to_string(b));
            dec_blocks[l].emplace_back(width, config.mfdm_kernel_sizes, rb,
                                       config.lcam_language, config.lcam_channel);
        }
    }
    {
        Rng rng = tag_rng(config.seed, "head_t");
        head_t_w = he_conv(3, config.channels[0], 3, rng);
        head_t_b = zeros({3}, true);
    }
    {
        Rng rng = tag_rng(config.seed, "head_r");
        head_r_w = he_conv(3, config.channels[0], 3, rng);
        head_r_b = zeros({3}, true);
    }
}

LayerPrediction AlaNet::forward(const TensorPtr& image,
                                const std::optional<std::string>& caption_t,
                                const std::optional<std::string>& caption_r) const {
    if (image->shape.size() != 3 || image->shape[0] != 3) {
        throw DimensionError("alanet: expected a {3,H,W} image");
    }
    if (image->shape[1] % 16 != 0 || image->shape[2] % 16 != 0) {
        throw ConfigError("alanet: spatial size must be divisible by 16");
    }
    std::optional<LanguageFeature> lang_t, lang_r;
    if (caption_t) lang_t = encoder.encode(*caption_t);
    if (caption_r) lang_r = encoder.encode(*caption_r);

    auto pd = perception.encode(image);
    std::vector<TensorPtr> pd_t(kLevels), pd_r(kLevels);
    for (std::size_t l = 0; l < kLevels; ++l) {
        pd_t[l] = config.use_lsct ? lsct_t[l]->forward(pd[l], maybe_level(lang_t, l)) : pd[l];
        pd_r[l] = config.use_lsct ? lsct_r[l]->forward(pd[l], maybe_level(lang_r, l)) : pd[l];
    }

    auto calibrate = [&](const std::optional<Alcm>& alcm, const TensorPtr& feat,
                         const TensorPtr& raw_lang) -> TensorPtr {
        if (!raw_lang) return nullptr;
        if (!config.use_alcm) return raw_lang;
        return alcm->forward(feat, raw_lang);
    };

    auto t = conv2d(image, stem_t_w, stem_t_b);
    auto r = conv2d(image, stem_r_w, stem_r_b);
    std::vector<TensorPtr> skip_t(kLevels - 1), skip_r(kLevels - 1);
    std::vector<TensorPtr> cal_t(kLevels), cal_r(kLevels);
    for (std::size_t l = 0; l < kLevels; ++l) {
        if (l + 1 == kLevels) {
            t = add(t, pd_t[l]);
            r = add(r, pd_r[l]);
        }
        t = rms_norm(t, enc_norm_t[l]);
        r = rms_norm(r, enc_norm_r[l]);
        cal_t[l] = calibrate(alcm_t[l], t, maybe_level(lang_t, l));
        cal_r[l] = calibrate(alcm_r[l], r, maybe_level(lang_r, l));
        for (const auto& block : enc_blocks[l]) {
            auto [nt, nr] = block.forward(t, r, cal_t[l], cal_r[l]);
            t = nt;
            r = nr;
        }
        if (l + 1 < kLevels) {
            skip_t[l] = t;
            skip_r[l] = r;
            t = conv2d(t, down_t_w[l], down_t_b[l], 2);
            r = conv2d(r, down_r_w[l], down_r_b[l], 2);
        }
    }
    for (std::size_t l = kLevels - 1; l-- > 0;) {
        t = conv2d(upsample_nearest2(t), up_t_w[l], up_t_b[l]);
        r = conv2d(upsample_nearest2(r), up_r_w[l], up_r_b[l]);
        t = add(add(t, skip_t[l]), pd_t[l]);
        r = add(add(r, skip_r[l]), pd_r[l]);
        t = rms_norm(t, dec_norm_t[l]);
        r = rms_norm(r, dec_norm_r[l]);
        for (const auto& block : dec_blocks[l]) {
            auto [nt, nr] = block.forward(t, r, cal_t[l], cal_r[l]);
            t = nt;
            r = nr;
        }
    }
    return {conv2d(t, head_t_w, head_t_b), conv2d(r, head_r_w, head_r_b)};
}

LayerPrediction AlaNet::infer(const TensorPtr& image,
                              const std::optional<std::string>& caption_t,
                              const std::optional<std::string>& caption_r) const {
    auto pred = forward(image, caption_t, caption_r);
    return {clamp01(pred.t_hat), clamp01(pred.r_hat)};
}

std::vector<TensorPtr> AlaNet::params() const {
    std::vector<TensorPtr> out = encoder.params();
    append(out, perception.params());
    out.insert(out.end(), {stem_t_w, stem_t_b, stem_r_w, stem_r_b});
    for (std::size_t l = 0; l < kLevels; ++l) {
        out.push_back(enc_norm_t[l]);
        out.push_back(enc_norm_r[l]);
        if (l + 1 < kLevels) {
            out.push_back(dec_norm_t[l]);
            out.push_back(dec_norm_r[l]);
        }
        if (config.use_alcm) {
            append(out, alcm_t[l]->params());
            append(out, alcm_r[l]->params());
        }
        if (config.use_lsct) {
            append(out, lsct_t[l]->params());
            append(out, lsct_r[l]->params());
        }
        for (const auto& block : enc_blocks[l]) append(out, block.params());
        if (l + 1 < kLevels) {
            out.insert(out.end(),
                       {down_t_w[l], down_t_b[l], down_r_w[l], down_r_b[l]});
        }
    }
    for (std::size_t l = 0; l + 1 < kLevels; ++l) {
        out.insert(out.end(), {up_t_w[l], up_t_b[l], up_r_w[l], up_r_b[l]});
        for (const auto& block : dec_blocks[l]) append(out, block.params());
    }
    out.insert(out.end(), {head_t_w, head_t_b, head_r_w, head_r_b});
    return out;
}

std::int64_t AlaNet::parameter_count() const {
    std::int64_t total = 0;
    for (const auto& p : params()) total += p->size();
    return total;
}

std::int64_t parameter_count(const NetworkConfig& config) {
    return AlaNet(config).parameter_count();
}

namespace {

void put_bytes(std::ostream& out, std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, n);
}

class CheckpointReader {
  public:
    explicit CheckpointReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::uint64_t offset() const { return offset_; }
    bool exhausted() const { return offset_ == bytes_.size(); }

    std::uint64_t take(int n, const char* what) {
        if (offset_ + static_cast<std::uint64_t>(n) > bytes_.size()) {
            throw ParseError(std::string("checkpoint: truncated ") + what, offset_);
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_ + i]))
                 << (8 * i);
        }
        offset_ += static_cast<std::uint64_t>(n);
        return v;
    }

    std::string take_string(std::uint64_t n, const char* what) {
        if (offset_ + n > bytes_.size()) {
            throw ParseError(std::string("checkpoint: truncated ") + what, offset_);
        }
        std::string s = bytes_.substr(offset_, n);
        offset_ += n;
        return s;
    }

  private:
    std::string bytes_;
    std::uint64_t offset_ = 0;
};

} // namespace

void save_checkpoint(const AlaNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    out.write("ALNK", 4);
    put_bytes(out, 1, 4);
    put_bytes(out, static_cast<std::uint64_t>(net.parameter_count()), 8);
    for (const auto& p : net.params()) {
        for (double v : p->data) put_bytes(out, std::bit_cast<std::uint64_t>(v), 8);
    }
    std::string js = net.config.to_json();
    put_bytes(out, js.size(), 4);
    out.write(js.data(), static_cast<std::streamsize>(js.size()));
    out.flush();
    if (!out) throw IoError("checkpoint: write to " + path + " failed");
}

AlaNet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    CheckpointReader reader(ss.str());

    if (reader.take_string(4, "magic") != "ALNK") {
        throw ParseError("checkpoint: bad magic", 0);
    }
    if (auto version = reader.take(4, "version"); version != 1) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version), 4);
    }
    std::uint64_t count = reader.take(8, "parameter count");
    std::uint64_t values_at = reader.offset();
    std::vector<double> values(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto at = reader.offset();
        values[i] = std::bit_cast<double>(reader.take(8, "parameter data"));
        if (!std::isfinite(values[i])) {
            throw ParseError("checkpoint: non-finite parameter", at);
        }
    }
    std::uint64_t json_len = reader.take(4, "config length");
    std::uint64_t json_at = reader.offset();
    std::string js = reader.take_string(json_len, "config");
    if (!reader.exhausted()) {
        throw ParseError("checkpoint: trailing bytes", reader.offset());
    }
    NetworkConfig config;
    try {
        config = NetworkConfig::from_json(js);
        config.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), json_at);
    }
    AlaNet net(config);
    if (static_cast<std::uint64_t>(net.parameter_count()) != count) {
        throw ParseError("checkpoint: parameter count does not match config", values_at - 8);
    }
    std::size_t cursor = 0;
    for (const auto& p : net.params()) {
        for (auto& v : p->data) v = values[cursor++];
    }
    return net;
}

} // namespace alanet
