#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace alanet {

enum class Layer { T, R };

enum class CorruptionKind { accurate, incorrect, confused, incomplete };

// Word classes used by the corruption rules. Every word maps to exactly one
// class; unknown words fall back to suffix rules and finally to `other`.
enum class PosClass { noun, verb, adjective, adverb, preposition, numeral, other };

// Word -> class map over a bundled ~1500-word vocabulary. The fallback chain
// makes tagging total: exact entry, then all-digits -> numeral, -ly -> adverb,
// -ing/-ed -> verb, anything else -> other.
class PosLexicon {
public:
    // Bundled vocabulary. Throws ConfigError if the bundled word lists ever
    // introduce a duplicate entry.
    PosLexicon();
    // Custom entries, primarily for tests with a controlled vocabulary.
    explicit PosLexicon(std::map<std::string, PosClass> entries);

    PosClass tag(const std::string& word) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, PosClass> entries_;
};

struct CaptionRecord {
    std::string image_id;
    Layer layer = Layer::T;
    std::string text;
    CorruptionKind kind = CorruptionKind::accurate;
    // Engaged exactly when kind != accurate.
    std::optional<double> degree;
};

struct ConfusedResult {
    CaptionRecord t;
    CaptionRecord r;
    // Set when either caption was empty and the swap was skipped.
    bool warned = false;
};

// Replaces a seeded subset of ceil(degree * replaceable) words, where the
// replaceable classes are noun, verb, adjective, adverb, preposition and
// numeral. Each word is replaced by its class sentinel (noun -> "error",
// verb -> "misdo", adjective -> "incorrect", adverb -> "incorrectly"), a
// random preposition from a fixed pool, or a random integer in [0, 100).
// Degree 1.0 replaces the whole text with "incorrect sentence".
// Degree must be one of {0.25, 0.5, 0.75, 1.0}.
CaptionRecord corrupt_incorrect(const CaptionRecord& record, double degree,
                                const PosLexicon& lexicon, std::uint64_t seed);

// The word-level rule of corrupt_incorrect without the degree-1.0 override:
// replaces `count` seeded-random replaceable words and returns the rebuilt
// token list. `count` larger than the replaceable total replaces all of them.
std::vector<std::string> replace_incorrect_words(const std::vector<std::string>& tokens,
                                                 std::size_t count, const PosLexicon& lexicon,
                                                 std::uint64_t seed);

// Swaps the tokens at ceil(degree * min(len_T, len_R)) seeded positions
// between the two captions; the same position is exchanged in both, so
// applying the operation twice with one seed restores the originals.
// Degree 1.0 exchanges the full texts. An empty caption on either side makes
// the swap a warned no-op. Degree must be one of {0.25, 0.5, 0.75, 1.0}.
ConfusedResult corrupt_confused(const CaptionRecord& record_t, const CaptionRecord& record_r,
                                double degree, std::uint64_t seed);

// Removes ceil(degree * word_count) seeded-random words, preserving the order
// of the survivors. Degree 1.0 leaves an empty text, which downstream
// encoding treats as no language input.
// Degree must be one of {0.25, 0.5, 0.75, 1.0}.
CaptionRecord corrupt_incomplete(const CaptionRecord& record, double degree, std::uint64_t seed);

// One caption record as a JSON line with keys
// {image_id, layer, text, kind, degree}; degree serializes as "none" for
// accurate records and as a number otherwise.
std::string caption_line(const CaptionRecord& record);
CaptionRecord parse_caption_line(const std::string& line);

void write_captions(const std::vector<CaptionRecord>& records, const std::string& path);
std::vector<CaptionRecord> read_captions(const std::string& path);

// Seeded sentence corpus for corruption experiments. Sentences are built from
// fixed pools of lexicon words ("the <adj> <noun> <verb> <prep> the <adj>
// <noun>" and variants), so every content word has a known class and none of
// the corruption sentinels appear.
std::vector<std::string> generate_caption_corpus(std::size_t n, std::uint64_t seed);

} // namespace alanet
