#pragma once

#include <cstdint>
#include <string>

namespace alanet {

// All scores are deterministic, live in [0, 1], and are not symmetric in
// their arguments: `candidate` is graded against `reference`.

// N-gram recall with clipped counts. An empty reference scores 0.
// n must be at least 1.
double rouge_n(const std::string& candidate, const std::string& reference, std::int64_t n);

// LCS F-measure weighted toward recall: F = (1+b2)PR / (R + b2*P) with b2 = 8.
// Either side empty scores 0.
double rouge_l(const std::string& candidate, const std::string& reference);

// Exact-match unigram alignment maximizing matches, then minimizing chunks.
// F_mean = 10PR/(R+9P); penalty = 0.5*(chunks/matches)^3; score is
// F_mean*(1-penalty). Zero matches score 0. The chunk minimization is exact
// when the shorter text has at most 14 tokens and the longer at most 30;
// beyond that a greedy alignment may overcount chunks slightly.
double meteor_simplified(const std::string& candidate, const std::string& reference);

// Geometric mean of clipped n-gram precisions times a brevity penalty.
// Orders longer than the candidate are excluded from the mean; a present
// order with zero matches contributes epsilon = 1e-9. An empty candidate
// scores 0. max_n must be at least 1.
double bleu(const std::string& candidate, const std::string& reference, std::int64_t max_n = 4);

} // namespace alanet
