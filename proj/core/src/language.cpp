#include "alanet/language.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "alanet/errors.hpp"
#include "alanet/rng.hpp"

namespace alanet {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        bool word = std::isalnum(c) || c >= 0x80;
        if (word) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary::Vocabulary(std::int64_t buckets, std::int64_t embed_dim, std::uint64_t seed)
    : buckets(buckets), embed_dim(embed_dim) {
    if (buckets <= 0 || embed_dim <= 0) {
        throw ConfigError("vocabulary needs positive bucket count and embedding width");
    }
    Rng rng(seed);
    table = randn({buckets, embed_dim}, rng, 1.0, false);
}

std::int64_t Vocabulary::bucket_of(const std::string& token) const {
    return static_cast<std::int64_t>(fnv1a(token) % static_cast<std::uint64_t>(buckets));
}

LanguageEncoder::LanguageEncoder(std::vector<std::int64_t> widths, std::int64_t buckets,
                                 std::int64_t embed_dim, std::uint64_t seed)
    : vocab(buckets, embed_dim, seed), level_widths(std::move(widths)) {
    if (level_widths.empty()) throw ConfigError("language encoder needs at least one level");
    Rng rng(seed + 1);
    for (std::int64_t width : level_widths) {
        if (width <= 0) throw ConfigError("language encoder level widths must be positive");
        double sd = std::sqrt(2.0 / static_cast<double>(embed_dim + width));
        adapter_weight.push_back(randn({embed_dim, width}, rng, sd, true));
        adapter_bias.push_back(zeros({width}, true));
    }
}

std::optional<LanguageFeature> LanguageEncoder::encode(const std::string& text) const {
    auto tokens = tokenize(text);
    if (tokens.empty()) return std::nullopt;

    std::vector<std::int64_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.bucket_of(t));
    std::sort(ids.begin(), ids.end());

    std::vector<double> pooled(static_cast<std::size_t>(vocab.embed_dim), 0.0);
    for (std::int64_t id : ids) {
        const double* row = vocab.table->data.data() +
                            static_cast<std::size_t>(id * vocab.embed_dim);
        for (std::int64_t d = 0; d < vocab.embed_dim; ++d)
            pooled[static_cast<std::size_t>(d)] += row[d];
    }
    double inv = 1.0 / static_cast<double>(ids.size());
    for (auto& v : pooled) v *= inv;

    LanguageFeature feature;
    feature.token_count = tokens.size();
    feature.source_text = text;
    auto pooled_row = tensor({1, vocab.embed_dim}, std::move(pooled));
    for (std::size_t l = 0; l < level_widths.size(); ++l) {
        feature.per_level.push_back(linear(pooled_row, adapter_weight[l], adapter_bias[l]));
    }
    return feature;
}

std::vector<TensorPtr> LanguageEncoder::params() const {
    std::vector<TensorPtr> out;
    for (std::size_t l = 0; l < level_widths.size(); ++l) {
        out.push_back(adapter_weight[l]);
        out.push_back(adapter_bias[l]);
    }
    return out;
}

} // namespace alanet
