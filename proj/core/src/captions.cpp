#include "alanet/captions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "alanet/errors.hpp"
#include "alanet/language.hpp"
#include "alanet/rng.hpp"

namespace alanet {

namespace {

using nlohmann::json;

void check_degree(double degree) {
    for (double allowed : {0.25, 0.5, 0.75, 1.0}) {
        if (degree == allowed) return;
    }
    throw ConfigError("corruption degree must be one of 0.25, 0.5, 0.75, 1.0");
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

// ceil(degree * count) without floating-point edge cases on exact quarters.
std::size_t corrupted_count(double degree, std::size_t count) {
    return static_cast<std::size_t>(std::ceil(degree * static_cast<double>(count) - 1e-12));
}

// Sorted seeded choice of k positions out of n.
std::vector<std::size_t> choose_positions(std::size_t n, std::size_t k, Rng& rng) {
    auto picked = rng.sample_indices(n, k);
    std::sort(picked.begin(), picked.end());
    return picked;
}

const char* const kPrepositionPool[] = {"in",     "on",   "at",     "under",   "over",
                                        "beside", "near", "behind", "between", "through"};

bool replaceable(PosClass cls) {
    return cls != PosClass::other;
}

std::string replacement_for(PosClass cls, Rng& rng) {
    switch (cls) {
        case PosClass::noun: return "error";
        case PosClass::verb: return "misdo";
        case PosClass::adjective: return "incorrect";
        case PosClass::adverb: return "incorrectly";
        case PosClass::preposition:
            return kPrepositionPool[rng.below(std::size(kPrepositionPool))];
        case PosClass::numeral: return std::to_string(rng.below(100));
        case PosClass::other: break;
    }
    return "";
}

std::string layer_name(Layer layer) { return layer == Layer::T ? "T" : "R"; }

Layer layer_from(const std::string& name) {
    if (name == "T") return Layer::T;
    if (name == "R") return Layer::R;
    throw ParseError("caption record: layer must be \"T\" or \"R\"", 0);
}

std::string kind_name(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::accurate: return "accurate";
        case CorruptionKind::incorrect: return "incorrect";
        case CorruptionKind::confused: return "confused";
        case CorruptionKind::incomplete: return "incomplete";
    }
    return "";
}

CorruptionKind kind_from(const std::string& name) {
    if (name == "accurate") return CorruptionKind::accurate;
    if (name == "incorrect") return CorruptionKind::incorrect;
    if (name == "confused") return CorruptionKind::confused;
    if (name == "incomplete") return CorruptionKind::incomplete;
    throw ParseError("caption record: unknown kind '" + name + "'", 0);
}

} // namespace

std::vector<std::string> replace_incorrect_words(const std::vector<std::string>& tokens,
                                                 std::size_t count, const PosLexicon& lexicon,
                                                 std::uint64_t seed) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (replaceable(lexicon.tag(tokens[i]))) candidates.push_back(i);
    }
    Rng rng(seed);
    auto out = tokens;
    auto picks = choose_positions(candidates.size(), std::min(count, candidates.size()), rng);
    for (std::size_t p : picks) {
        std::size_t pos = candidates[p];
        out[pos] = replacement_for(lexicon.tag(tokens[pos]), rng);
    }
    return out;
}

CaptionRecord corrupt_incorrect(const CaptionRecord& record, double degree,
                                const PosLexicon& lexicon, std::uint64_t seed) {
    check_degree(degree);
    auto out = record;
    out.kind = CorruptionKind::incorrect;
    out.degree = degree;
    if (degree == 1.0) {
        out.text = "incorrect sentence";
        return out;
    }
    auto tokens = tokenize(record.text);
    std::size_t total = 0;
    for (const auto& t : tokens) {
        if (replaceable(lexicon.tag(t))) ++total;
    }
    out.text = join(replace_incorrect_words(tokens, corrupted_count(degree, total), lexicon, seed));
    return out;
}

ConfusedResult corrupt_confused(const CaptionRecord& record_t, const CaptionRecord& record_r,
                                double degree, std::uint64_t seed) {
    check_degree(degree);
    ConfusedResult result{record_t, record_r, false};
    auto t_tokens = tokenize(record_t.text);
    auto r_tokens = tokenize(record_r.text);
    if (t_tokens.empty() || r_tokens.empty()) {
        result.warned = true;
        return result;
    }
    result.t.kind = result.r.kind = CorruptionKind::confused;
    result.t.degree = result.r.degree = degree;
    if (degree == 1.0) {
        result.t.text = record_r.text;
        result.r.text = record_t.text;
        return result;
    }
    std::size_t shared = std::min(t_tokens.size(), r_tokens.size());
    Rng rng(seed);
    for (std::size_t pos : choose_positions(shared, corrupted_count(degree, shared), rng)) {
        std::swap(t_tokens[pos], r_tokens[pos]);
    }
    result.t.text = join(t_tokens);
    result.r.text = join(r_tokens);
    return result;
}

CaptionRecord corrupt_incomplete(const CaptionRecord& record, double degree, std::uint64_t seed) {
    check_degree(degree);
    auto tokens = tokenize(record.text);
    Rng rng(seed);
    auto removed = choose_positions(tokens.size(), corrupted_count(degree, tokens.size()), rng);
    std::vector<std::string> kept;
    std::size_t next = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (next < removed.size() && removed[next] == i) {
            ++next;
            continue;
        }
        kept.push_back(tokens[i]);
    }
    auto out = record;
    out.kind = CorruptionKind::incomplete;
    out.degree = degree;
    out.text = join(kept);
    return out;
}

std::string caption_line(const CaptionRecord& record) {
    json j;
    j["image_id"] = record.image_id;
    j["layer"] = layer_name(record.layer);
    j["text"] = record.text;
    j["kind"] = kind_name(record.kind);
    if (record.degree) {
        j["degree"] = *record.degree;
    } else {
        j["degree"] = "none";
    }
    return j.dump();
}

CaptionRecord parse_caption_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("caption record: ") + e.what(), 0);
    }
    CaptionRecord record;
    try {
        record.image_id = j.at("image_id").get<std::string>();
        record.layer = layer_from(j.at("layer").get<std::string>());
        record.text = j.at("text").get<std::string>();
        record.kind = kind_from(j.at("kind").get<std::string>());
        const auto& degree = j.at("degree");
        if (degree.is_number()) {
            record.degree = degree.get<double>();
        } else if (!(degree.is_string() && degree.get<std::string>() == "none")) {
            throw ParseError("caption record: degree must be a number or \"none\"", 0);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("caption record: ") + e.what(), 0);
    }
    bool accurate = record.kind == CorruptionKind::accurate;
    if (accurate == record.degree.has_value()) {
        throw ParseError("caption record: kind \"accurate\" requires degree \"none\" and "
                         "corrupted kinds require a numeric degree",
                         0);
    }
    return record;
}

void write_captions(const std::vector<CaptionRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& record : records) out << caption_line(record) << '\n';
    if (!out.flush()) throw IoError("failed writing " + path);
}

std::vector<CaptionRecord> read_captions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::vector<CaptionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(parse_caption_line(line));
    }
    return records;
}

std::vector<std::string> generate_caption_corpus(std::size_t n, std::uint64_t seed) {
    // Every word below carries its intended class in the bundled lexicon, and
    // none of the corruption sentinels appear.
    static const char* const kCorpusNouns[] = {"dog",   "cat",   "house", "tree",  "river",
                                               "stone", "bird",  "chair", "garden", "cloud",
                                               "horse", "boat",  "lamp",  "book",  "road"};
    static const char* const kCorpusAdjectives[] = {"red",   "green", "small", "large", "bright",
                                                    "quiet", "old",   "fresh", "smooth", "cold"};
    static const char* const kCorpusVerbs[] = {"standing", "resting", "waiting", "sleeping",
                                               "turning",  "floating", "glowing", "shaking"};
    static const char* const kCorpusPreps[] = {"near", "behind", "beside", "under",
                                               "above", "within", "beyond"};
    std::vector<std::string> corpus;
    corpus.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed ^ fnv1a("caption/" + std::to_string(i)));
        std::ostringstream text;
        text << "the " << kCorpusAdjectives[rng.below(std::size(kCorpusAdjectives))] << ' '
             << kCorpusNouns[rng.below(std::size(kCorpusNouns))] << ' '
             << kCorpusVerbs[rng.below(std::size(kCorpusVerbs))] << ' '
             << kCorpusPreps[rng.below(std::size(kCorpusPreps))] << " the "
             << kCorpusAdjectives[rng.below(std::size(kCorpusAdjectives))] << ' '
             << kCorpusNouns[rng.below(std::size(kCorpusNouns))];
        if (rng.coin()) {
            text << " and the " << kCorpusAdjectives[rng.below(std::size(kCorpusAdjectives))]
                 << ' ' << kCorpusNouns[rng.below(std::size(kCorpusNouns))];
        }
        corpus.push_back(text.str());
    }
    return corpus;
}

} // namespace alanet
