#include "alanet/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "alanet/errors.hpp"
#include "alanet/language.hpp"

namespace alanet {

namespace {

using Tokens = std::vector<std::string>;

std::map<Tokens, std::int64_t> ngram_counts(const Tokens& tokens, std::int64_t n) {
    std::map<Tokens, std::int64_t> counts;
    if (static_cast<std::int64_t>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)]++;
    }
    return counts;
}

// Sum over shared n-grams of min(candidate count, reference count).
std::int64_t clipped_overlap(const std::map<Tokens, std::int64_t>& cand,
                             const std::map<Tokens, std::int64_t>& ref) {
    std::int64_t total = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) total += std::min(count, it->second);
    }
    return total;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

struct Alignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

// Exact search over matchings via a DP on (scan position, mask of used short
// positions, short position matched by the previous scan token). A chunk ends
// whenever a match is not the immediate diagonal successor of the previous
// one; that adjacency is symmetric, so scanning either text gives the same
// chunk count.
Alignment align_exact(const Tokens& scan, const Tokens& mask_side) {
    std::size_t m = mask_side.size();
    std::size_t states = (std::size_t{1} << m) * (m + 1);
    // score = matches * 1024 - chunks, maximized; -1 marks unreachable.
    std::vector<std::int32_t> layer(states, -1), next_layer(states, -1);
    layer[0] = 0;
    auto offer = [](std::int32_t& slot, std::int32_t score) {
        if (score > slot) slot = score;
    };
    for (const auto& token : scan) {
        std::fill(next_layer.begin(), next_layer.end(), -1);
        for (std::size_t state = 0; state < states; ++state) {
            if (layer[state] < 0) continue;
            std::size_t mask = state / (m + 1);
            std::size_t last = state % (m + 1);
            offer(next_layer[mask * (m + 1)], layer[state]);
            for (std::size_t j = 0; j < m; ++j) {
                if (mask & (std::size_t{1} << j)) continue;
                if (mask_side[j] != token) continue;
                bool continues = last != 0 && j == last;
                std::int32_t score = layer[state] + 1024 - (continues ? 0 : 1);
                offer(next_layer[(mask | (std::size_t{1} << j)) * (m + 1) + j + 1], score);
            }
        }
        std::swap(layer, next_layer);
    }
    std::int32_t best = 0;
    for (std::int32_t score : layer) best = std::max(best, score);
    return {static_cast<std::size_t>(best + 1023) / 1024,
            static_cast<std::size_t>(best > 0 ? (1024 - best % 1024) % 1024 : 0)};
}

// Greedy fallback for long texts: prefer extending the previous chunk, then
// the leftmost unused occurrence. Matches stay maximal; chunks may exceed the
// optimum.
Alignment align_greedy(const Tokens& scan, const Tokens& mask_side) {
    std::map<std::string, std::int64_t> budget;
    {
        auto scan_counts = ngram_counts(scan, 1);
        auto mask_counts = ngram_counts(mask_side, 1);
        for (const auto& [gram, count] : scan_counts) {
            auto it = mask_counts.find(gram);
            if (it != mask_counts.end()) budget[gram[0]] = std::min(count, it->second);
        }
    }
    std::vector<bool> used(mask_side.size(), false);
    Alignment result;
    std::size_t last = mask_side.size();
    for (const auto& token : scan) {
        auto it = budget.find(token);
        if (it == budget.end() || it->second == 0) {
            last = mask_side.size();
            continue;
        }
        std::size_t pick = mask_side.size();
        if (last + 1 < mask_side.size() && !used[last + 1] && mask_side[last + 1] == token) {
            pick = last + 1;
        } else {
            for (std::size_t j = 0; j < mask_side.size(); ++j) {
                if (!used[j] && mask_side[j] == token) {
                    pick = j;
                    break;
                }
            }
        }
        ++result.matches;
        result.chunks += (pick == last + 1) ? 0 : 1;
        used[pick] = true;
        --it->second;
        last = pick;
    }
    return result;
}

} // namespace

double rouge_n(const std::string& candidate, const std::string& reference, std::int64_t n) {
    if (n < 1) throw ConfigError("rouge_n: n must be at least 1");
    auto ref = ngram_counts(tokenize(reference), n);
    std::int64_t total = 0;
    for (const auto& [gram, count] : ref) total += count;
    if (total == 0) return 0.0;
    auto cand = ngram_counts(tokenize(candidate), n);
    return static_cast<double>(clipped_overlap(cand, ref)) / static_cast<double>(total);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    auto cand = tokenize(candidate);
    auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    auto lcs = static_cast<double>(lcs_length(cand, ref));
    if (lcs == 0.0) return 0.0;
    constexpr double b2 = 8.0;
    double precision = lcs / static_cast<double>(cand.size());
    double recall = lcs / static_cast<double>(ref.size());
    return (1.0 + b2) * precision * recall / (recall + b2 * precision);
}

double meteor_simplified(const std::string& candidate, const std::string& reference) {
    auto cand = tokenize(candidate);
    auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) return 0.0;
    constexpr std::size_t kExactMask = 14;
    constexpr std::size_t kExactScan = 30;
    bool ref_shorter = ref.size() <= cand.size();
    const Tokens& scan = ref_shorter ? cand : ref;
    const Tokens& mask_side = ref_shorter ? ref : cand;
    bool exact = mask_side.size() <= kExactMask && scan.size() <= kExactScan;
    Alignment aligned =
        exact ? align_exact(scan, mask_side) : align_greedy(scan, mask_side);
    if (aligned.matches == 0) return 0.0;
    auto m = static_cast<double>(aligned.matches);
    double precision = m / static_cast<double>(cand.size());
    double recall = m / static_cast<double>(ref.size());
    double f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    double ratio = static_cast<double>(aligned.chunks) / m;
    return f_mean * (1.0 - 0.5 * ratio * ratio * ratio);
}

double bleu(const std::string& candidate, const std::string& reference, std::int64_t max_n) {
    if (max_n < 1) throw ConfigError("bleu: max_n must be at least 1");
    auto cand = tokenize(candidate);
    auto ref = tokenize(reference);
    if (cand.empty()) return 0.0;
    constexpr double epsilon = 1e-9;
    double log_sum = 0.0;
    std::int64_t levels = 0;
    for (std::int64_t n = 1; n <= max_n; ++n) {
        auto cand_grams = ngram_counts(cand, n);
        std::int64_t total = 0;
        for (const auto& [gram, count] : cand_grams) total += count;
        if (total == 0) break;
        auto overlap = clipped_overlap(cand_grams, ngram_counts(ref, n));
        double precision =
            overlap > 0 ? static_cast<double>(overlap) / static_cast<double>(total) : epsilon;
        log_sum += std::log(precision);
        ++levels;
    }
    if (levels == 0) return 0.0;
    double brevity = 1.0;
    if (cand.size() <= ref.size()) {
        brevity = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
    }
    return brevity * std::exp(log_sum / static_cast<double>(levels));
}

} // namespace alanet
