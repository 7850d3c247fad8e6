#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alanet/tensor.hpp"

namespace alanet {

// Lowercases ASCII, splits on whitespace and punctuation, discards the
// punctuation. Bytes outside ASCII are kept as word characters untouched.
std::vector<std::string> tokenize(const std::string& text);

// Fixed random embedding table addressed by hashing tokens into buckets.
// The table is seeded and frozen; trainable capacity lives in the adapters.
struct Vocabulary {
    std::int64_t buckets;
    std::int64_t embed_dim;
    TensorPtr table;  // {buckets, embed_dim}

    Vocabulary(std::int64_t buckets, std::int64_t embed_dim, std::uint64_t seed);
    std::int64_t bucket_of(const std::string& token) const;
};

// One caption encoded for every pyramid level. An absent caption is
// represented by the absence of this object, never by a zero vector.
struct LanguageFeature {
    std::vector<TensorPtr> per_level;  // {1, C_l} each
    std::size_t token_count = 0;
    std::string source_text;
};

// Mean-pools hashed token embeddings and maps the pooled vector through one
// trainable affine adapter per level. Pooling accumulates in sorted bucket
// order so captions that differ only in token order encode bit-identically.
struct LanguageEncoder {
    Vocabulary vocab;
    std::vector<std::int64_t> level_widths;
    std::vector<TensorPtr> adapter_weight;  // {embed_dim, C_l}
    std::vector<TensorPtr> adapter_bias;    // {C_l}

    LanguageEncoder(std::vector<std::int64_t> level_widths, std::int64_t buckets,
                    std::int64_t embed_dim, std::uint64_t seed);

    // Empty or all-punctuation text encodes to nullopt.
    std::optional<LanguageFeature> encode(const std::string& text) const;

    std::vector<TensorPtr> params() const;  // adapters only, in level order
};

} // namespace alanet
