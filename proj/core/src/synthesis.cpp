#include "alanet/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alanet/errors.hpp"
#include "alanet/rng.hpp"

namespace fs = std::filesystem;

namespace alanet {

namespace {

void require_image(const char* op, const Tensor& img) {
    if (img.shape.size() != 3 || img.shape[0] != 3) {
        throw DimensionError(std::string(op) + ": expected a {3,H,W} image");
    }
}

} // namespace

TensorPtr gaussian_blur(const TensorPtr& image, double sigma) {
    require_image("gaussian_blur", *image);
    if (!(sigma > 0.0)) throw ConfigError("gaussian_blur: sigma must be positive");
    std::int64_t h = image->shape[1], w = image->shape[2];
    auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> profile(static_cast<std::size_t>(radius) + 1);
    for (std::int64_t d = 0; d <= radius; ++d) {
        profile[d] = std::exp(-static_cast<double>(d * d) / (2.0 * sigma * sigma));
    }
    auto out = zeros(image->shape);
    for (std::int64_t c = 0; c < 3; ++c) {
        const double* src = image->data.data() + c * h * w;
        double* dst = out->data.data() + c * h * w;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                double center = src[y * w + x];
                double acc = 0.0, den = 0.0;
                for (std::int64_t dy = -radius; dy <= radius; ++dy) {
                    std::int64_t sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    for (std::int64_t dx = -radius; dx <= radius; ++dx) {
                        std::int64_t sx = x + dx;
                        if (sx < 0 || sx >= w) continue;
                        double wgt = profile[std::abs(dy)] * profile[std::abs(dx)];
                        acc += wgt * (src[sy * w + sx] - center);
                        den += wgt;
                    }
                }
                dst[y * w + x] = center + acc / den;
            }
        }
    }
    return out;
}

TensorPtr blend(const TensorPtr& t, const TensorPtr& r, double alpha, double sigma_blur) {
    require_image("blend", *t);
    require_image("blend", *r);
    if (!same_shape(*t, *r)) throw DimensionError("blend: T and R shapes differ");
    if (alpha == 1.0) {
        auto out = zeros(t->shape);
        for (std::size_t i = 0; i < out->data.size(); ++i) {
            out->data[i] = std::clamp(t->data[i], 0.0, 1.0);
        }
        return out;
    }
    auto blurred = gaussian_blur(r, sigma_blur);
    auto out = zeros(t->shape);
    for (std::size_t i = 0; i < out->data.size(); ++i) {
        double v = alpha * t->data[i] + (1.0 - alpha) * blurred->data[i];
        out->data[i] = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

namespace {

class PpmParser {
  public:
    explicit PpmParser(std::string bytes) : bytes_(std::move(bytes)) {}

    TensorPtr parse() {
        if (bytes_.size() < 2 || bytes_[0] != 'P' || bytes_[1] != '6') {
            throw ParseError("ppm: not a P6 file", 0);
        }
        pos_ = 2;
        std::int64_t w = next_number("width");
        std::int64_t h = next_number("height");
        std::int64_t maxval = next_number("maxval");
        if (maxval != 255) {
            throw ParseError("ppm: maxval must be 255, got " + std::to_string(maxval),
                             maxval_at_);
        }
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
            throw ParseError("ppm: expected single whitespace after maxval", pos_);
        }
        ++pos_;
        if (w <= 0 || h <= 0) {
            throw ParseError("ppm: dimensions must be positive", dims_at_);
        }
        auto need = static_cast<std::uint64_t>(w) * static_cast<std::uint64_t>(h) * 3u;
        if (bytes_.size() - pos_ < need) {
            throw ParseError("ppm: truncated payload", bytes_.size());
        }
        if (bytes_.size() - pos_ > need) {
            throw ParseError("ppm: trailing bytes after payload", pos_ + need);
        }
        auto img = zeros({3, h, w});
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                for (std::int64_t c = 0; c < 3; ++c) {
                    auto byte = static_cast<unsigned char>(bytes_[pos_ + (y * w + x) * 3 + c]);
                    img->data[c * h * w + y * w + x] = static_cast<double>(byte) / 255.0;
                }
            }
        }
        return img;
    }

  private:
    static bool is_space(char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }

    void skip_separators(const char* what) {
        bool any = false;
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
                any = true;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
                any = true;
            } else {
                break;
            }
        }
        if (!any && pos_ < bytes_.size()) {
            throw ParseError(std::string("ppm: expected whitespace before ") + what, pos_);
        }
    }

    std::int64_t next_number(const char* what) {
        skip_separators(what);
        if (pos_ >= bytes_.size()) {
            throw ParseError(std::string("ppm: missing ") + what, bytes_.size());
        }
        if (bytes_[pos_] < '0' || bytes_[pos_] > '9') {
            throw ParseError(std::string("ppm: invalid ") + what, pos_);
        }
        if (std::string(what) == "width") dims_at_ = pos_;
        if (std::string(what) == "maxval") maxval_at_ = pos_;
        std::int64_t v = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1000000000) {
                throw ParseError(std::string("ppm: ") + what + " out of range", pos_);
            }
            ++pos_;
        }
        return v;
    }

    std::string bytes_;
    std::size_t pos_ = 0;
    std::uint64_t dims_at_ = 0;
    std::uint64_t maxval_at_ = 0;
};

} // namespace

TensorPtr read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("ppm: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return PpmParser(ss.str()).parse();
}

void write_ppm(const TensorPtr& image, const std::string& path) {
    require_image("write_ppm", *image);
    std::int64_t h = image->shape[1], w = image->shape[2];
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("ppm: cannot open " + path + " for writing");
    out << "P6\n" << w << " " << h << "\n255\n";
    std::string payload(static_cast<std::size_t>(h * w * 3), '\0');
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t c = 0; c < 3; ++c) {
                double v = std::clamp(image->data[c * h * w + y * w + x], 0.0, 1.0);
                payload[(y * w + x) * 3 + c] =
                    static_cast<char>(static_cast<int>(std::lround(v * 255.0)));
            }
        }
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) throw IoError("ppm: write to " + path + " failed");
}

TensorPtr center_crop_square(const TensorPtr& image) {
    require_image("center_crop_square", *image);
    std::int64_t h = image->shape[1], w = image->shape[2];
    std::int64_t side = std::min(h, w);
    std::int64_t top = (h - side) / 2, left = (w - side) / 2;
    auto out = zeros({3, side, side});
    for (std::int64_t c = 0; c < 3; ++c) {
        for (std::int64_t y = 0; y < side; ++y) {
            for (std::int64_t x = 0; x < side; ++x) {
                out->data[(c * side + y) * side + x] =
                    image->data[(c * h + top + y) * w + left + x];
            }
        }
    }
    return out;
}

TensorPtr resize_nearest(const TensorPtr& image, std::int64_t out_h, std::int64_t out_w) {
    require_image("resize_nearest", *image);
    if (out_h <= 0 || out_w <= 0) throw ConfigError("resize_nearest: size must be positive");
    std::int64_t h = image->shape[1], w = image->shape[2];
    auto out = zeros({3, out_h, out_w});
    for (std::int64_t y = 0; y < out_h; ++y) {
        auto sy = std::min((2 * y + 1) * h / (2 * out_h), h - 1);
        for (std::int64_t x = 0; x < out_w; ++x) {
            auto sx = std::min((2 * x + 1) * w / (2 * out_w), w - 1);
            for (std::int64_t c = 0; c < 3; ++c) {
                out->data[(c * out_h + y) * out_w + x] = image->data[(c * h + sy) * w + sx];
            }
        }
    }
    return out;
}

std::string manifest_line(const DatasetRecord& record) {
    nlohmann::json j;
    j["id"] = record.id;
    j["path_I"] = record.path_i;
    j["path_T"] = record.path_t;
    j["path_R"] = record.path_r;
    j["alpha"] = record.alpha;
    j["sigma"] = record.sigma;
    j["caption_T"] = record.caption_t;
    j["caption_R"] = record.caption_r;
    return j.dump();
}

DatasetRecord parse_manifest_line(const std::string& line) {
    try {
        auto j = nlohmann::json::parse(line);
        DatasetRecord r;
        r.id = j.at("id").get<std::string>();
        r.path_i = j.at("path_I").get<std::string>();
        r.path_t = j.at("path_T").get<std::string>();
        r.path_r = j.at("path_R").get<std::string>();
        r.alpha = j.at("alpha").get<double>();
        r.sigma = j.at("sigma").get<double>();
        r.caption_t = j.at("caption_T").get<std::string>();
        r.caption_r = j.at("caption_R").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what(), 0);
    }
}

void write_manifest(const std::vector<DatasetRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("manifest: cannot open " + path + " for writing");
    for (const auto& r : records) out << manifest_line(r) << "\n";
    out.flush();
    if (!out) throw IoError("manifest: write to " + path + " failed");
}

std::vector<DatasetRecord> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("manifest: cannot open " + path);
    auto base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        if (p.empty() || fs::path(p).is_absolute()) return p;
        return (base / p).string();
    };
    std::vector<DatasetRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto r = parse_manifest_line(line);
        r.path_i = resolve(r.path_i);
        r.path_t = resolve(r.path_t);
        r.path_r = resolve(r.path_r);
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

std::string sidecar_caption(const fs::path& image_path) {
    auto txt = image_path;
    txt.replace_extension(".txt");
    std::ifstream in(txt);
    if (!in) return "";
    std::string caption;
    std::getline(in, caption);
    while (!caption.empty() && (caption.back() == '\r' || caption.back() == '\n')) {
        caption.pop_back();
    }
    return caption;
}

std::string zero_padded(const char* prefix, std::int64_t index, std::size_t digits) {
    auto number = std::to_string(index);
    if (number.size() < digits) number.insert(0, digits - number.size(), '0');
    return prefix + number;
}

std::string pair_id(std::int64_t index) { return zero_padded("p", index, 5); }

} // namespace

std::vector<DatasetRecord> make_dataset(const std::string& source_dir, std::int64_t n_pairs,
                                        std::uint64_t seed, const std::string& out_dir,
                                        const DatasetOptions& opts) {
    if (n_pairs < 0) throw ConfigError("make_dataset: n_pairs must be non-negative");
    if (opts.patch <= 0) throw ConfigError("make_dataset: patch size must be positive");
    std::vector<fs::path> sources;
    for (const auto& entry : fs::directory_iterator(source_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            sources.push_back(entry.path());
        }
    }
    std::sort(sources.begin(), sources.end());
    if (sources.size() < 2) {
        throw ConfigError("make_dataset: need at least 2 source images, found " +
                          std::to_string(sources.size()));
    }
    fs::create_directories(out_dir);
    std::vector<DatasetRecord> records;
    for (std::int64_t i = 0; i < n_pairs; ++i) {
        DatasetRecord rec;
        rec.id = pair_id(i);
        Rng rng(seed ^ fnv1a(rec.id));
        auto n = static_cast<std::uint64_t>(sources.size());
        auto t_idx = rng.below(n);
        auto r_idx = rng.below(n - 1);
        if (r_idx >= t_idx) ++r_idx;  // distinct sources per pair
        rec.alpha = rng.uniform(opts.alpha_lo, opts.alpha_hi);
        rec.sigma = rng.uniform(opts.sigma_lo, opts.sigma_hi);
        rec.caption_t = sidecar_caption(sources[t_idx]);
        rec.caption_r = sidecar_caption(sources[r_idx]);

        auto prep = [&](const fs::path& p) {
            return resize_nearest(center_crop_square(read_ppm(p.string())), opts.patch,
                                  opts.patch);
        };
        auto t = prep(sources[t_idx]);
        auto r = prep(sources[r_idx]);
        auto blended = blend(t, r, rec.alpha, rec.sigma);

        rec.path_t = rec.id + "_T.ppm";
        rec.path_r = rec.id + "_R.ppm";
        rec.path_i = rec.id + "_I.ppm";
        write_ppm(t, (fs::path(out_dir) / rec.path_t).string());
        write_ppm(r, (fs::path(out_dir) / rec.path_r).string());
        write_ppm(blended, (fs::path(out_dir) / rec.path_i).string());
        records.push_back(std::move(rec));
    }
    write_manifest(records, (fs::path(out_dir) / "manifest.jsonl").string());
    return records;
}

namespace {

struct PaletteColor {
    const char* name;
    double rgb[3];
};

constexpr PaletteColor kPalette[] = {
    {"red", {0.85, 0.15, 0.15}},    {"green", {0.15, 0.65, 0.2}},
    {"blue", {0.15, 0.3, 0.8}},     {"yellow", {0.9, 0.85, 0.2}},
    {"purple", {0.55, 0.2, 0.7}},   {"orange", {0.95, 0.55, 0.1}},
    {"teal", {0.1, 0.6, 0.6}},      {"gray", {0.5, 0.5, 0.5}},
    {"brown", {0.5, 0.33, 0.16}},   {"pink", {0.95, 0.6, 0.7}},
};

} // namespace

void generate_procedural_sources(const std::string& dir, std::int64_t n, std::uint64_t seed,
                                 std::int64_t size) {
    if (n < 0) throw ConfigError("procedural sources: n must be non-negative");
    if (size < 8) throw ConfigError("procedural sources: size must be at least 8");
    fs::create_directories(dir);
    constexpr std::size_t palette_n = sizeof(kPalette) / sizeof(kPalette[0]);
    for (std::int64_t k = 0; k < n; ++k) {
        auto stem = zero_padded("src", k, 4);
        Rng rng(seed ^ fnv1a(stem));
        auto bg = kPalette[rng.below(palette_n)];
        auto bg2 = kPalette[rng.below(palette_n)];
        auto img = zeros({3, size, size});
        for (std::int64_t y = 0; y < size; ++y) {
            double fy = static_cast<double>(y) / static_cast<double>(size - 1);
            for (std::int64_t x = 0; x < size; ++x) {
                double fx = static_cast<double>(x) / static_cast<double>(size - 1);
                double blend_f = 0.5 * (fx + fy);
                for (std::int64_t c = 0; c < 3; ++c) {
                    img->data[(c * size + y) * size + x] =
                        (1.0 - blend_f) * bg.rgb[c] + blend_f * bg2.rgb[c];
                }
            }
        }
        auto shapes = 2 + static_cast<std::int64_t>(rng.below(3));
        std::string caption = "a scene with";
        for (std::int64_t s = 0; s < shapes; ++s) {
            auto color = kPalette[rng.below(palette_n)];
            bool circle = rng.coin();
            auto cx = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size)));
            auto cy = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size)));
            auto half = size / 8 + static_cast<std::int64_t>(rng.below(
                            static_cast<std::uint64_t>(size / 4)));
            for (std::int64_t y = std::max<std::int64_t>(0, cy - half);
                 y < std::min(size, cy + half); ++y) {
                for (std::int64_t x = std::max<std::int64_t>(0, cx - half);
                     x < std::min(size, cx + half); ++x) {
                    if (circle) {
                        auto dx = x - cx, dy = y - cy;
                        if (dx * dx + dy * dy > half * half) continue;
                    }
                    for (std::int64_t c = 0; c < 3; ++c) {
                        img->data[(c * size + y) * size + x] = color.rgb[c];
                    }
                }
            }
            caption += (s == 0 ? " " : " and ") + std::string(color.name) +
                       (circle ? " circle" : " square");
        }
        auto base = fs::path(dir) / stem;
        write_ppm(img, base.string() + ".ppm");
        std::ofstream txt(base.string() + ".txt", std::ios::binary);
        txt << caption << "\n";
        if (!txt) throw IoError("procedural sources: cannot write caption for " +
                                std::string(stem));
    }
}

} // namespace alanet
