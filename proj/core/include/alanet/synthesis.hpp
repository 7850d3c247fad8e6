#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alanet/tensor.hpp"

namespace alanet {

// Gaussian blur with the kernel truncated at 3 sigma (radius ceil(3*sigma)).
// Weights renormalize per pixel over the in-bounds taps, and the weighted sum
// is taken in difference-from-center form, so constant images pass through
// bit-exactly even at the borders.
TensorPtr gaussian_blur(const TensorPtr& image, double sigma);

// I = clip(alpha*T + (1-alpha)*blur(R, sigma_blur), 0, 1). alpha = 1 returns
// T bit-exactly for T already inside [0,1].
TensorPtr blend(const TensorPtr& t, const TensorPtr& r, double alpha, double sigma_blur);

// Binary PPM (P6, maxval 255) codec for {3,H,W} tensors in [0,1]. Bytes map
// as v = byte/255 on read and byte = round(v*255) on write (values clamped
// into [0,1] first), so any image already on the 1/255 grid round-trips
// losslessly. Header comments (#...) are accepted anywhere whitespace is.
TensorPtr read_ppm(const std::string& path);
void write_ppm(const TensorPtr& image, const std::string& path);

TensorPtr center_crop_square(const TensorPtr& image);
TensorPtr resize_nearest(const TensorPtr& image, std::int64_t out_h, std::int64_t out_w);

// One generated training pair plus everything needed to rebuild it.
struct DatasetRecord {
    std::string id;
    std::string path_i, path_t, path_r;
    double alpha = 0.0;
    double sigma = 0.0;
    std::string caption_t, caption_r;
};

struct DatasetOptions {
    std::int64_t patch = 32;
    double alpha_lo = 0.6, alpha_hi = 0.85;
    double sigma_lo = 1.0, sigma_hi = 5.0;
};

// Samples distinct (T,R) source pairs, center-crops to square, resizes with
// nearest neighbor, blends, and writes I/T/R triplets plus manifest.jsonl
// into out_dir. Captions come from sidecar text files (image.ppm ->
// image.txt) when present. Fully reproducible from (sorted source list,
// seed); per-pair randomness derives from the pair id so records are
// independent of generation order. Returned records mirror the manifest,
// image paths relative to out_dir; read_manifest resolves them.
std::vector<DatasetRecord> make_dataset(const std::string& source_dir, std::int64_t n_pairs,
                                        std::uint64_t seed, const std::string& out_dir,
                                        const DatasetOptions& opts = {});

// Manifest records as one JSON object per line with fields
// {id, path_I, path_T, path_R, alpha, sigma, caption_T, caption_R}.
std::string manifest_line(const DatasetRecord& record);
DatasetRecord parse_manifest_line(const std::string& line);
void write_manifest(const std::vector<DatasetRecord>& records, const std::string& path);
// Reads a manifest and resolves relative image paths against its directory.
std::vector<DatasetRecord> read_manifest(const std::string& path);

// Writes n deterministic synthetic photos (gradient background plus a few
// shapes) with caption sidecars, giving the pipeline a self-contained source
// folder to draw from.
void generate_procedural_sources(const std::string& dir, std::int64_t n, std::uint64_t seed,
                                 std::int64_t size = 64);

} // namespace alanet
