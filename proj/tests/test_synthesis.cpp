#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "alanet/errors.hpp"
#include "alanet/rng.hpp"
#include "alanet/synthesis.hpp"
#include "alanet/tensor.hpp"

using namespace alanet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("alanet_synth_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

TensorPtr random_image(std::int64_t h, std::int64_t w, std::uint64_t seed) {
    Rng rng(seed);
    auto img = zeros({3, h, w});
    for (auto& v : img->data) v = rng.uniform();
    return img;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Direct weighted sum with an explicit truncated kernel, renormalized over
// in-bounds taps. Intentionally a separate implementation from the library.
double blur_oracle_at(const TensorPtr& img, std::int64_t c, std::int64_t y, std::int64_t x,
                      double sigma) {
    std::int64_t h = img->shape[1], w = img->shape[2];
    auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    double num = 0.0, den = 0.0;
    for (std::int64_t dy = -radius; dy <= radius; ++dy) {
        for (std::int64_t dx = -radius; dx <= radius; ++dx) {
            std::int64_t sy = y + dy, sx = x + dx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            double wgt = std::exp(-(double(dy) * dy + double(dx) * dx) / (2.0 * sigma * sigma));
            num += wgt * img->data[(c * h + sy) * w + sx];
            den += wgt;
        }
    }
    return num / den;
}

} // namespace

TEST(GaussianBlur, ConstantImagePassesThroughExactly) {
    auto img = full({3, 7, 9}, 0.37);
    auto out = gaussian_blur(img, 2.5);
    for (std::size_t i = 0; i < img->data.size(); ++i) {
        EXPECT_EQ(out->data[i], 0.37) << i;
    }
}

TEST(GaussianBlur, MatchesExplicitKernelOracle) {
    auto img = random_image(4, 4, 91);
    for (double sigma : {1.0, 2.0, 5.0}) {
        auto out = gaussian_blur(img, sigma);
        for (std::int64_t c = 0; c < 3; ++c) {
            for (std::int64_t y = 0; y < 4; ++y) {
                for (std::int64_t x = 0; x < 4; ++x) {
                    EXPECT_NEAR(out->data[(c * 4 + y) * 4 + x],
                                blur_oracle_at(img, c, y, x, sigma), 1e-12);
                }
            }
        }
    }
}

TEST(GaussianBlur, RejectsBadInputs) {
    EXPECT_THROW(gaussian_blur(random_image(4, 4, 92), 0.0), ConfigError);
    EXPECT_THROW(gaussian_blur(random_image(4, 4, 92), -1.0), ConfigError);
    EXPECT_THROW(gaussian_blur(zeros({2, 4, 4}), 1.0), DimensionError);
}

TEST(Blend, AlphaOneReturnsTExactly) {
    auto t = random_image(5, 5, 93);
    auto r = random_image(5, 5, 94);
    auto out = blend(t, r, 1.0, 2.0);
    for (std::size_t i = 0; i < t->data.size(); ++i) EXPECT_EQ(out->data[i], t->data[i]);
}

TEST(Blend, ConstantReflectionUsesPlainMix) {
    auto t = random_image(6, 6, 95);
    auto r = full({3, 6, 6}, 0.25);
    double alpha = 0.7;
    auto out = blend(t, r, alpha, 3.0);
    for (std::size_t i = 0; i < t->data.size(); ++i) {
        double expect = std::clamp(alpha * t->data[i] + (1 - alpha) * 0.25, 0.0, 1.0);
        EXPECT_DOUBLE_EQ(out->data[i], expect);
    }
}

TEST(Blend, ShapeMismatchThrows) {
    EXPECT_THROW(blend(random_image(4, 4, 96), random_image(4, 5, 97), 0.7, 2.0),
                 DimensionError);
}

TEST(Blend, MonotoneInAlphaAwayFromClipping) {
    auto t = random_image(4, 4, 98);
    auto r = random_image(4, 4, 99);
    // Scale both into [0.2, 0.8] so no pixel clips for any alpha.
    for (auto& v : t->data) v = 0.2 + 0.6 * v;
    for (auto& v : r->data) v = 0.2 + 0.6 * v;
    auto a1 = blend(t, r, 0.6, 2.0);
    auto a2 = blend(t, r, 0.7, 2.0);
    auto a3 = blend(t, r, 0.85, 2.0);
    auto blurred = gaussian_blur(r, 2.0);
    for (std::size_t i = 0; i < t->data.size(); ++i) {
        double direction = t->data[i] - blurred->data[i];
        if (std::abs(direction) < 1e-9) continue;
        double d12 = a2->data[i] - a1->data[i];
        double d23 = a3->data[i] - a2->data[i];
        if (direction > 0) {
            EXPECT_GT(d12, 0.0);
            EXPECT_GT(d23, 0.0);
        } else {
            EXPECT_LT(d12, 0.0);
            EXPECT_LT(d23, 0.0);
        }
    }
}

TEST(Ppm, AllZeroRoundTripsExactly) {
    TempDir dir;
    auto img = zeros({3, 2, 2});
    auto path = dir.file("zero.ppm");
    write_ppm(img, path);
    auto back = read_ppm(path);
    ASSERT_EQ(back->shape, img->shape);
    for (std::size_t i = 0; i < img->data.size(); ++i) EXPECT_EQ(back->data[i], 0.0);
}

TEST(Ppm, QuantizedDataRoundTripsExactly) {
    TempDir dir;
    auto img = random_image(5, 3, 100);
    for (auto& v : img->data) v = std::round(v * 255.0) / 255.0;
    auto path = dir.file("q.ppm");
    write_ppm(img, path);
    auto back = read_ppm(path);
    for (std::size_t i = 0; i < img->data.size(); ++i) EXPECT_EQ(back->data[i], img->data[i]);
}

TEST(Ppm, HeaderExampleParses) {
    TempDir dir;
    std::string bytes = "P6\n2 2\n255\n";
    for (int i = 0; i < 12; ++i) bytes.push_back(static_cast<char>(i * 20));
    auto path = dir.file("hand.ppm");
    write_bytes(path, bytes);
    auto img = read_ppm(path);
    EXPECT_EQ(img->shape, (std::vector<std::int64_t>{3, 2, 2}));
    // byte layout is RGB interleaved row-major; tensor layout is planar
    EXPECT_DOUBLE_EQ(img->data[0], 0.0 / 255.0);        // R at (0,0)
    EXPECT_DOUBLE_EQ(img->data[1 * 4], 20.0 / 255.0);   // G at (0,0)
    EXPECT_DOUBLE_EQ(img->data[2 * 4], 40.0 / 255.0);   // B at (0,0)
    EXPECT_DOUBLE_EQ(img->data[3], 180.0 / 255.0);      // R at (1,1)
}

TEST(Ppm, HeaderCommentsAccepted) {
    TempDir dir;
    std::string bytes = "P6\n# made by hand\n2 1 # dims\n255\n";
    for (int i = 0; i < 6; ++i) bytes.push_back('\x10');
    auto path = dir.file("comment.ppm");
    write_bytes(path, bytes);
    EXPECT_NO_THROW(read_ppm(path));
}

TEST(Ppm, MalformedFilesReportByteOffsets) {
    TempDir dir;
    auto expect_parse_error = [&](const std::string& name, const std::string& bytes,
                                  std::uint64_t offset) {
        auto path = dir.file(name);
        write_bytes(path, bytes);
        try {
            read_ppm(path);
            FAIL() << name << ": expected ParseError";
        } catch (const ParseError& e) {
            EXPECT_EQ(e.offset, offset) << name << ": " << e.what();
        }
    };
    expect_parse_error("magic.ppm", "P5\n1 1\n255\n\0\0\0", 0);
    expect_parse_error("maxval.ppm", "P6\n1 1\n254\n\0\0\0", 7);
    std::string truncated = "P6\n2 2\n255\n";
    truncated += std::string(5, '\0');
    expect_parse_error("trunc.ppm", truncated, truncated.size());
    std::string trailing = "P6\n1 1\n255\n";
    trailing += std::string(4, '\0');
    expect_parse_error("trail.ppm", trailing, 11 + 3);
    expect_parse_error("alpha.ppm", "P6\nab 1\n255\n", 3);
}

TEST(Ppm, MissingFileThrowsIoError) {
    EXPECT_THROW(read_ppm("/nonexistent/nothing.ppm"), IoError);
}

TEST(Ppm, WriterClampsOutOfRange) {
    TempDir dir;
    auto img = zeros({3, 1, 1});
    img->data[0] = -0.5;
    img->data[1] = 1.5;
    img->data[2] = 0.5;
    auto path = dir.file("clamp.ppm");
    write_ppm(img, path);
    auto back = read_ppm(path);
    EXPECT_EQ(back->data[0], 0.0);
    EXPECT_EQ(back->data[1], 1.0);
    EXPECT_NEAR(back->data[2], 0.5, 1.0 / 255.0);
}

TEST(Resize, CropAndNearestKeepGridValues) {
    auto img = random_image(10, 6, 101);
    auto cropped = center_crop_square(img);
    EXPECT_EQ(cropped->shape, (std::vector<std::int64_t>{3, 6, 6}));
    // crop offset is (10-6)/2 = 2 rows
    EXPECT_EQ(cropped->data[0], img->data[2 * 6]);
    auto resized = resize_nearest(cropped, 4, 4);
    EXPECT_EQ(resized->shape, (std::vector<std::int64_t>{3, 4, 4}));
    for (double v : resized->data) {
        bool found = false;
        for (double s : cropped->data) {
            if (s == v) found = true;
        }
        EXPECT_TRUE(found);  // nearest neighbor never invents values
    }
    auto up = resize_nearest(cropped, 12, 12);
    EXPECT_EQ(up->data[0], cropped->data[0]);
}

TEST(Manifest, LineRoundTrip) {
    DatasetRecord rec{"p00003", "p00003_I.ppm", "p00003_T.ppm", "p00003_R.ppm",
                      0.72,     3.25,           "a red circle", ""};
    auto line = manifest_line(rec);
    for (const char* field : {"\"id\"", "\"path_I\"", "\"path_T\"", "\"path_R\"",
                              "\"alpha\"", "\"sigma\"", "\"caption_T\"", "\"caption_R\""}) {
        EXPECT_NE(line.find(field), std::string::npos) << field;
    }
    auto back = parse_manifest_line(line);
    EXPECT_EQ(back.id, rec.id);
    EXPECT_EQ(back.path_i, rec.path_i);
    EXPECT_EQ(back.alpha, rec.alpha);
    EXPECT_EQ(back.sigma, rec.sigma);
    EXPECT_EQ(back.caption_t, rec.caption_t);
    EXPECT_EQ(back.caption_r, rec.caption_r);
    EXPECT_THROW(parse_manifest_line("{\"id\":\"x\"}"), ParseError);
}

TEST(Dataset, ProceduralSourcesAreDeterministic) {
    TempDir a, b;
    generate_procedural_sources(a.path.string(), 3, 7, 32);
    generate_procedural_sources(b.path.string(), 3, 7, 32);
    for (int k = 0; k < 3; ++k) {
        char stem[16];
        std::snprintf(stem, sizeof(stem), "src%04d", k);
        EXPECT_EQ(read_bytes(a.file(std::string(stem) + ".ppm")),
                  read_bytes(b.file(std::string(stem) + ".ppm")));
        auto caption = read_bytes(a.file(std::string(stem) + ".txt"));
        EXPECT_EQ(caption, read_bytes(b.file(std::string(stem) + ".txt")));
        EXPECT_FALSE(caption.empty());
    }
}

TEST(Dataset, ZeroPairsWritesEmptyManifestOnly) {
    TempDir src, out;
    generate_procedural_sources(src.path.string(), 2, 8, 32);
    auto records = make_dataset(src.path.string(), 0, 1, out.path.string());
    EXPECT_TRUE(records.empty());
    EXPECT_TRUE(fs::exists(out.file("manifest.jsonl")));
    EXPECT_EQ(read_bytes(out.file("manifest.jsonl")), "");
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(out.path)) {
        (void)e;
        ++files;
    }
    EXPECT_EQ(files, 1u);
}

TEST(Dataset, InsufficientSourcesThrow) {
    TempDir src, out;
    generate_procedural_sources(src.path.string(), 1, 9, 32);
    EXPECT_THROW(make_dataset(src.path.string(), 2, 1, out.path.string()), ConfigError);
}

TEST(Dataset, SameSeedReproducesBytes) {
    TempDir src, out1, out2;
    generate_procedural_sources(src.path.string(), 4, 10, 48);
    DatasetOptions opts;
    opts.patch = 16;
    auto r1 = make_dataset(src.path.string(), 3, 42, out1.path.string(), opts);
    auto r2 = make_dataset(src.path.string(), 3, 42, out2.path.string(), opts);
    ASSERT_EQ(r1.size(), 3u);
    EXPECT_EQ(read_bytes(out1.file("manifest.jsonl")), read_bytes(out2.file("manifest.jsonl")));
    for (const auto& rec : r1) {
        EXPECT_EQ(read_bytes(out1.file(rec.path_i)), read_bytes(out2.file(rec.path_i)));
        EXPECT_EQ(read_bytes(out1.file(rec.path_t)), read_bytes(out2.file(rec.path_t)));
        EXPECT_EQ(read_bytes(out1.file(rec.path_r)), read_bytes(out2.file(rec.path_r)));
    }
    auto r3 = make_dataset(src.path.string(), 3, 43, out2.path.string(), opts);
    bool differs = read_bytes(out1.file(r1[0].path_i)) != read_bytes(out2.file(r3[0].path_i));
    EXPECT_TRUE(differs);
}

TEST(Dataset, EmittedTriplesSatisfyReblend) {
    TempDir src, out;
    generate_procedural_sources(src.path.string(), 4, 11, 48);
    DatasetOptions opts;
    opts.patch = 16;
    auto records = make_dataset(src.path.string(), 4, 5, out.path.string(), opts);
    auto listed = read_manifest(out.file("manifest.jsonl"));
    ASSERT_EQ(listed.size(), records.size());
    for (const auto& rec : listed) {
        EXPECT_GE(rec.alpha, opts.alpha_lo);
        EXPECT_LE(rec.alpha, opts.alpha_hi);
        EXPECT_GE(rec.sigma, opts.sigma_lo);
        EXPECT_LE(rec.sigma, opts.sigma_hi);
        EXPECT_FALSE(rec.caption_t.empty());
        auto t = read_ppm(rec.path_t);
        auto r = read_ppm(rec.path_r);
        auto i = read_ppm(rec.path_i);
        // Sources are 8-bit and resize is nearest, so the decoded T and R are
        // the exact blend inputs; the stored I is the blend quantized.
        auto reblend = blend(t, r, rec.alpha, rec.sigma);
        for (std::size_t k = 0; k < i->data.size(); ++k) {
            EXPECT_EQ(i->data[k], std::round(reblend->data[k] * 255.0) / 255.0);
        }
    }
}

TEST(Dataset, AlphaOnePairsMatchTransmissionBytes) {
    TempDir src, out;
    generate_procedural_sources(src.path.string(), 3, 12, 32);
    DatasetOptions opts;
    opts.patch = 16;
    opts.alpha_lo = opts.alpha_hi = 1.0;
    auto records = make_dataset(src.path.string(), 2, 6, out.path.string(), opts);
    for (const auto& rec : records) {
        EXPECT_EQ(read_bytes(out.file(rec.path_i)), read_bytes(out.file(rec.path_t)));
    }
}
