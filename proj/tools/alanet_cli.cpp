#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alanet/captions.hpp"
#include "alanet/errors.hpp"
#include "alanet/gradcheck_suite.hpp"
#include "alanet/image_metrics.hpp"
#include "alanet/network.hpp"
#include "alanet/rng.hpp"
#include "alanet/synthesis.hpp"
#include "alanet/tensor.hpp"
#include "alanet/text_metrics.hpp"
#include "alanet/train.hpp"

namespace fs = std::filesystem;
using alanet::CaptionRecord;
using alanet::ConfigError;
using alanet::IoError;
using alanet::Layer;
using alanet::ParseError;
using json = nlohmann::json;

namespace {

constexpr const char* kConfigHelp =
    "JSON config file; flags override file values, file values override defaults";

std::string fmt_num(double v) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << v;
    return out.str();
}

// Seed precedence: --seed flag, then ALANET_SEED, then 0.
std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t flag_value) {
    if (seed_opt->count()) return flag_value;
    if (const char* env = std::getenv("ALANET_SEED")) {
        std::string text(env);
        std::size_t used = 0;
        std::uint64_t value = 0;
        try {
            value = std::stoull(text, &used);
        } catch (const std::exception&) {
            throw ConfigError("ALANET_SEED is not an unsigned integer: " + text);
        }
        if (used != text.size()) {
            throw ConfigError("ALANET_SEED is not an unsigned integer: " + text);
        }
        return value;
    }
    return 0;
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("config: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("config " + path + ": " + e.what(), e.byte);
    }
}

// Applies one config key unless the matching flag was given on the command
// line, which always wins.
template <typename T>
void overlay(const CLI::Option* opt, T& target, const json& section, const char* key) {
    if (opt && opt->count()) return;
    if (!section.contains(key)) return;
    try {
        target = section.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

// Partial "network" sections overlay the defaults key by key.
alanet::NetworkConfig network_from_section(const json& section) {
    alanet::NetworkConfig config;
    overlay(nullptr, config.channels, section, "channels");
    overlay(nullptr, config.blocks, section, "blocks");
    overlay(nullptr, config.mfdm_kernel_sizes, section, "mfdm_kernel_sizes");
    overlay(nullptr, config.seed, section, "seed");
    overlay(nullptr, config.vocab_buckets, section, "vocab_buckets");
    overlay(nullptr, config.embed_dim, section, "embed_dim");
    overlay(nullptr, config.use_alcm, section, "use_alcm");
    overlay(nullptr, config.use_lsct, section, "use_lsct");
    overlay(nullptr, config.lcam_language, section, "lcam_language");
    overlay(nullptr, config.lcam_channel, section, "lcam_channel");
    return config;
}

std::uint64_t record_seed(std::uint64_t base, const std::string& scope, std::size_t index,
                          const std::string& id) {
    return base ^ alanet::fnv1a(scope + "/" + std::to_string(index) + "/" + id);
}

std::vector<CaptionRecord> manifest_captions(const std::string& path) {
    std::vector<CaptionRecord> records;
    for (const auto& rec : alanet::read_manifest(path)) {
        records.push_back({rec.id, Layer::T, rec.caption_t, alanet::CorruptionKind::accurate, {}});
        records.push_back({rec.id, Layer::R, rec.caption_r, alanet::CorruptionKind::accurate, {}});
    }
    return records;
}

// First T and first R record per image id; extras stay unpaired.
std::vector<std::pair<std::size_t, std::size_t>> confusion_pairs(
    const std::vector<CaptionRecord>& records, std::vector<bool>& paired) {
    std::map<std::string, std::pair<std::ptrdiff_t, std::ptrdiff_t>> slots;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, fresh] = slots.try_emplace(records[i].image_id, -1, -1);
        (void)fresh;
        auto& slot = records[i].layer == Layer::T ? it->second.first : it->second.second;
        if (slot < 0) slot = static_cast<std::ptrdiff_t>(i);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    paired.assign(records.size(), false);
    for (const auto& [id, slot] : slots) {
        if (slot.first < 0 || slot.second < 0) continue;
        pairs.emplace_back(static_cast<std::size_t>(slot.first),
                           static_cast<std::size_t>(slot.second));
        paired[static_cast<std::size_t>(slot.first)] = true;
        paired[static_cast<std::size_t>(slot.second)] = true;
    }
    return pairs;
}

int run_synth(const std::string& config_path, const CLI::App& cmd, std::string source,
              const std::string& out, std::int64_t pairs, std::int64_t procedural,
              std::int64_t source_size, alanet::DatasetOptions opts, std::uint64_t seed) {
    auto section = load_config(config_path).value("synth", json::object());
    overlay(cmd.get_option("--patch"), opts.patch, section, "patch");
    overlay(cmd.get_option("--alpha-lo"), opts.alpha_lo, section, "alpha_lo");
    overlay(cmd.get_option("--alpha-hi"), opts.alpha_hi, section, "alpha_hi");
    overlay(cmd.get_option("--sigma-lo"), opts.sigma_lo, section, "sigma_lo");
    overlay(cmd.get_option("--sigma-hi"), opts.sigma_hi, section, "sigma_hi");

    if (procedural > 0) {
        if (source.empty()) source = (fs::path(out) / "sources").string();
        alanet::generate_procedural_sources(source, procedural, seed, source_size);
        std::cout << "generated " << procedural << " procedural sources in " << source << "\n";
    }
    if (source.empty()) {
        throw ConfigError("synth: --source or --procedural is required");
    }
    auto records = alanet::make_dataset(source, pairs, seed, out, opts);
    std::cout << "wrote " << records.size() << " pairs to " << out << " (manifest.jsonl)\n";
    return 0;
}

int run_corrupt(const std::string& captions_path, const std::string& manifest_path,
                const std::string& out, const std::string& kind, double degree,
                std::uint64_t seed) {
    std::vector<CaptionRecord> records = captions_path.empty()
                                             ? manifest_captions(manifest_path)
                                             : alanet::read_captions(captions_path);
    std::vector<CaptionRecord> result = records;
    if (kind == "incorrect") {
        alanet::PosLexicon lexicon;
        for (std::size_t i = 0; i < records.size(); ++i) {
            result[i] = alanet::corrupt_incorrect(records[i], degree, lexicon,
                                                  record_seed(seed, "incorrect", i,
                                                              records[i].image_id));
        }
    } else if (kind == "incomplete") {
        for (std::size_t i = 0; i < records.size(); ++i) {
            result[i] = alanet::corrupt_incomplete(records[i], degree,
                                                   record_seed(seed, "incomplete", i,
                                                               records[i].image_id));
        }
    } else {
        std::vector<bool> paired;
        auto pairs = confusion_pairs(records, paired);
        for (auto [t, r] : pairs) {
            auto swapped = alanet::corrupt_confused(records[t], records[r], degree,
                                                    record_seed(seed, "confused", t,
                                                                records[t].image_id));
            result[t] = swapped.t;
            result[r] = swapped.r;
            if (swapped.warned) {
                std::cerr << "warning: empty caption for " << records[t].image_id
                          << ", swap skipped\n";
            }
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!paired[i]) {
                std::cerr << "warning: no partner caption for " << records[i].image_id
                          << ", record copied unchanged\n";
            }
        }
    }
    alanet::write_captions(result, out);
    std::cout << "wrote " << result.size() << " caption records to " << out << "\n";
    return 0;
}

int run_caption_score(const std::string& captions_path, std::int64_t corpus_size,
                      const std::string& out, std::uint64_t seed) {
    std::vector<CaptionRecord> records;
    if (!captions_path.empty()) {
        records = alanet::read_captions(captions_path);
    } else {
        auto texts = alanet::generate_caption_corpus(static_cast<std::size_t>(corpus_size), seed);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            std::string id = "c" + std::to_string(i / 2);
            records.push_back({id, i % 2 == 0 ? Layer::T : Layer::R, texts[i],
                               alanet::CorruptionKind::accurate, {}});
        }
    }
    if (records.empty()) throw ConfigError("caption-score: no captions to score");

    const std::pair<const char*, double (*)(const std::string&, const std::string&)> metrics[] = {
        {"rouge1", [](const std::string& c, const std::string& r) { return alanet::rouge_n(c, r, 1); }},
        {"rouge2", [](const std::string& c, const std::string& r) { return alanet::rouge_n(c, r, 2); }},
        {"rougeL", alanet::rouge_l},
        {"meteor", alanet::meteor_simplified},
        {"bleu", [](const std::string& c, const std::string& r) { return alanet::bleu(c, r, 4); }},
    };

    alanet::PosLexicon lexicon;
    std::ofstream csv(out, std::ios::binary);
    if (!csv) throw IoError("caption-score: cannot open " + out);
    csv << "kind,degree,metric,mean,std,n\n";
    for (const std::string kind : {"incorrect", "confused", "incomplete"}) {
        for (double degree : {0.25, 0.5, 0.75, 1.0}) {
            // Candidate/reference text pairs: each corrupted caption scored
            // against its own original.
            std::vector<std::pair<std::string, std::string>> scored;
            if (kind == "confused") {
                std::vector<bool> paired;
                for (auto [t, r] : confusion_pairs(records, paired)) {
                    auto swapped = alanet::corrupt_confused(
                        records[t], records[r], degree,
                        record_seed(seed, "score-confused", t, records[t].image_id));
                    scored.emplace_back(swapped.t.text, records[t].text);
                    scored.emplace_back(swapped.r.text, records[r].text);
                }
            } else {
                for (std::size_t i = 0; i < records.size(); ++i) {
                    auto seeded = record_seed(seed, "score-" + kind, i, records[i].image_id);
                    auto corrupted = kind == "incorrect"
                                         ? alanet::corrupt_incorrect(records[i], degree, lexicon,
                                                                     seeded)
                                         : alanet::corrupt_incomplete(records[i], degree, seeded);
                    scored.emplace_back(corrupted.text, records[i].text);
                }
            }
            if (scored.empty()) throw ConfigError("caption-score: no confusable caption pairs");
            for (const auto& [name, metric] : metrics) {
                double sum = 0.0, sumsq = 0.0;
                for (const auto& [cand, ref] : scored) {
                    double v = metric(cand, ref);
                    sum += v;
                    sumsq += v * v;
                }
                auto n = static_cast<double>(scored.size());
                double mean = sum / n;
                double var = std::max(0.0, sumsq / n - mean * mean);
                csv << kind << ',' << fmt_num(degree) << ',' << name << ',' << fmt_num(mean)
                    << ',' << fmt_num(std::sqrt(var)) << ',' << scored.size() << "\n";
            }
        }
    }
    std::cout << "wrote metric table to " << out << "\n";
    return 0;
}

int run_gradcheck(double tol, std::uint64_t seed) {
    auto reports = alanet::run_grad_check_suite(tol, seed);
    int failed = 0;
    for (const auto& r : reports) {
        if (!r.passed) ++failed;
        std::ostringstream line;
        line.precision(3);
        line << (r.passed ? "pass" : "FAIL") << "  " << r.name << "  max_rel_error="
             << std::scientific << r.max_rel_error << "  tolerance=" << r.tolerance;
        std::cout << line.str() << "\n";
    }
    std::cout << reports.size() - failed << "/" << reports.size() << " gradient checks passed\n";
    return failed == 0 ? 0 : 1;
}

int run_train(const std::string& config_path, const CLI::App& cmd,
              const std::vector<std::string>& manifests, const std::string& out_checkpoint,
              const std::string& trace_path, alanet::TrainOptions opts, bool no_flip,
              const CLI::Option* seed_opt, std::uint64_t seed) {
    auto config = load_config(config_path);
    auto net_config = network_from_section(config.value("network", json::object()));
    if (seed_opt->count() || !config.value("network", json::object()).contains("seed")) {
        net_config.seed = seed;
    }

    auto section = config.value("train", json::object());
    overlay(cmd.get_option("--epochs"), opts.epochs, section, "epochs");
    overlay(cmd.get_option("--lr"), opts.lr, section, "lr");
    overlay(cmd.get_option("--lr-final"), opts.lr_final, section, "lr_final");
    overlay(cmd.get_option("--lr-drop-fraction"), opts.lr_drop_fraction, section,
            "lr_drop_fraction");
    overlay(cmd.get_option("--mixture-weight"), opts.mixture_weights, section, "mixture_weights");
    overlay(cmd.get_option("--lambda1"), opts.weights.lambda1, section, "lambda1");
    overlay(cmd.get_option("--lambda2"), opts.weights.lambda2, section, "lambda2");
    overlay(cmd.get_option("--lambda3"), opts.weights.lambda3, section, "lambda3");
    if (cmd.get_option("--no-flip")->count()) {
        opts.augment_flip = false;
    } else {
        overlay(nullptr, opts.augment_flip, section, "augment_flip");
    }
    (void)no_flip;

    std::vector<std::vector<alanet::DatasetRecord>> sources;
    for (const auto& path : manifests) sources.push_back(alanet::read_manifest(path));

    alanet::AlaNet net(net_config);
    auto result = alanet::train(net, sources, opts, seed);
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";

    alanet::save_checkpoint(net, out_checkpoint);
    if (!trace_path.empty()) alanet::write_trace_csv(result.trace, trace_path);

    std::cout << "trained " << opts.epochs << " epochs, " << result.trace.size()
              << " iterations\n";
    if (!result.trace.empty()) {
        std::cout << "final loss " << fmt_num(result.trace.back().total) << "\n";
    }
    std::cout << "checkpoint written to " << out_checkpoint << "\n";
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& manifest, const std::string& out) {
    auto net = alanet::load_checkpoint(checkpoint);
    auto records = alanet::read_manifest(manifest);
    auto rows = alanet::evaluate(net, records);
    alanet::write_eval_csv(rows, out);
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& row : rows) {
        psnr_sum += row.psnr;
        ssim_sum += row.ssim;
    }
    auto n = static_cast<double>(rows.size());
    std::cout << "evaluated " << rows.size() << " pairs: mean psnr " << fmt_num(psnr_sum / n)
              << " dB, mean ssim " << fmt_num(ssim_sum / n) << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
}

int run_infer(const std::string& checkpoint, const std::string& image_path,
              const std::string& out_t, const std::string& out_r,
              const std::optional<std::string>& caption_t,
              const std::optional<std::string>& caption_r) {
    auto net = alanet::load_checkpoint(checkpoint);
    auto image = alanet::read_ppm(image_path);
    auto prediction = net.infer(image, caption_t, caption_r);
    alanet::write_ppm(prediction.t_hat, out_t);
    alanet::write_ppm(prediction.r_hat, out_r);
    std::cout << "wrote " << out_t << " and " << out_r << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Language-guided reflection separation pipeline"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string config_path;

    // synth
    auto* synth = app.add_subcommand("synth", "Blend (T,R) sources into a training dataset");
    std::string synth_source, synth_out;
    std::int64_t synth_pairs = 0, synth_procedural = 0, synth_source_size = 64;
    alanet::DatasetOptions synth_opts;
    synth->add_option("--source", synth_source, "directory of source .ppm images");
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--pairs", synth_pairs, "number of (I,T,R) pairs")->required();
    synth->add_option("--procedural", synth_procedural,
                      "generate this many procedural sources first");
    synth->add_option("--source-size", synth_source_size, "procedural source side length");
    synth->add_option("--patch", synth_opts.patch, "output patch side length");
    synth->add_option("--alpha-lo", synth_opts.alpha_lo, "blend weight lower bound");
    synth->add_option("--alpha-hi", synth_opts.alpha_hi, "blend weight upper bound");
    synth->add_option("--sigma-lo", synth_opts.sigma_lo, "reflection blur sigma lower bound");
    synth->add_option("--sigma-hi", synth_opts.sigma_hi, "reflection blur sigma upper bound");

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "Apply one corruption kind to a caption file");
    std::string corrupt_captions, corrupt_manifest, corrupt_out, corrupt_kind;
    double corrupt_degree = 0.0;
    auto* corrupt_captions_opt =
        corrupt->add_option("--captions", corrupt_captions, "caption records (JSONL)");
    corrupt->add_option("--manifest", corrupt_manifest, "dataset manifest to take captions from")
        ->excludes(corrupt_captions_opt);
    corrupt->add_option("--out", corrupt_out, "output caption file")->required();
    corrupt->add_option("--kind", corrupt_kind, "corruption kind")
        ->required()
        ->check(CLI::IsMember({"incorrect", "confused", "incomplete"}));
    corrupt->add_option("--degree", corrupt_degree, "corruption degree")
        ->required()
        ->check(CLI::IsMember({0.25, 0.5, 0.75, 1.0}));

    // caption-score
    auto* score = app.add_subcommand("caption-score",
                                     "Text-metric table over corruption kinds and degrees");
    std::string score_captions, score_out;
    std::int64_t score_corpus = 50;
    auto* score_captions_opt =
        score->add_option("--captions", score_captions, "accurate caption records (JSONL)");
    score->add_option("--corpus", score_corpus, "size of the generated caption corpus")
        ->excludes(score_captions_opt);
    score->add_option("--out", score_out, "output CSV")->required();

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    double gradcheck_tol = 1e-4;
    gradcheck->add_option("--tol", gradcheck_tol, "relative-error tolerance");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train from dataset manifests");
    std::vector<std::string> train_manifests;
    std::string train_checkpoint, train_trace;
    alanet::TrainOptions train_opts;
    bool train_no_flip = false;
    train_cmd->add_option("--manifest", train_manifests, "dataset manifest (repeat to mix)")
        ->required();
    train_cmd->add_option("--out-checkpoint", train_checkpoint, "checkpoint path")->required();
    train_cmd->add_option("--trace", train_trace, "per-iteration loss CSV");
    train_cmd->add_option("--epochs", train_opts.epochs, "training epochs");
    train_cmd->add_option("--lr", train_opts.lr, "initial learning rate");
    train_cmd->add_option("--lr-final", train_opts.lr_final, "learning rate after the drop");
    train_cmd->add_option("--lr-drop-fraction", train_opts.lr_drop_fraction,
                          "fraction of epochs before the drop");
    train_cmd->add_option("--mixture-weight", train_opts.mixture_weights,
                          "per-source sampling weight (repeat per manifest)");
    train_cmd->add_option("--lambda1", train_opts.weights.lambda1, "intensity loss weight");
    train_cmd->add_option("--lambda2", train_opts.weights.lambda2, "edge loss weight");
    train_cmd->add_option("--lambda3", train_opts.weights.lambda3, "feature loss weight");
    train_cmd->add_flag("--no-flip", train_no_flip, "disable horizontal flip augmentation");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM table from checkpoint and manifest");
    std::string eval_checkpoint, eval_manifest, eval_out;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--out", eval_out, "output CSV")->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Separate one image into T and R layers");
    std::string infer_checkpoint, infer_image, infer_out_t, infer_out_r;
    std::string infer_caption_t, infer_caption_r;
    infer_cmd->add_option("--checkpoint", infer_checkpoint, "model checkpoint")->required();
    infer_cmd->add_option("--image", infer_image, "input image (PPM)")->required();
    infer_cmd->add_option("--out-t", infer_out_t, "transmission output path")->required();
    infer_cmd->add_option("--out-r", infer_out_r, "reflection output path")->required();
    auto* cap_t_opt =
        infer_cmd->add_option("--caption-t", infer_caption_t, "transmission caption");
    auto* cap_r_opt = infer_cmd->add_option("--caption-r", infer_caption_r, "reflection caption");

    for (auto* cmd : {synth, corrupt, score, gradcheck, train_cmd, eval_cmd, infer_cmd}) {
        cmd->add_option("--seed", seed, "run seed (fallback: ALANET_SEED, then 0)");
    }
    for (auto* cmd : {synth, train_cmd}) {
        cmd->add_option("--config", config_path, kConfigHelp);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        auto seed_opt = [](const CLI::App* cmd) { return cmd->get_option("--seed"); };
        if (synth->parsed()) {
            auto run_seed = resolve_seed(seed_opt(synth), seed);
            return run_synth(config_path, *synth, synth_source, synth_out, synth_pairs,
                             synth_procedural, synth_source_size, synth_opts, run_seed);
        }
        if (corrupt->parsed()) {
            if (corrupt_captions.empty() && corrupt_manifest.empty()) {
                throw ConfigError("corrupt: --captions or --manifest is required");
            }
            auto run_seed = resolve_seed(seed_opt(corrupt), seed);
            return run_corrupt(corrupt_captions, corrupt_manifest, corrupt_out, corrupt_kind,
                               corrupt_degree, run_seed);
        }
        if (score->parsed()) {
            auto run_seed = resolve_seed(seed_opt(score), seed);
            return run_caption_score(score_captions, score_corpus, score_out, run_seed);
        }
        if (gradcheck->parsed()) {
            return run_gradcheck(gradcheck_tol, resolve_seed(seed_opt(gradcheck), seed));
        }
        if (train_cmd->parsed()) {
            auto run_seed = resolve_seed(seed_opt(train_cmd), seed);
            return run_train(config_path, *train_cmd, train_manifests, train_checkpoint,
                             train_trace, train_opts, train_no_flip, seed_opt(train_cmd),
                             run_seed);
        }
        if (eval_cmd->parsed()) {
            resolve_seed(seed_opt(eval_cmd), seed);
            return run_eval(eval_checkpoint, eval_manifest, eval_out);
        }
        if (infer_cmd->parsed()) {
            resolve_seed(seed_opt(infer_cmd), seed);
            std::optional<std::string> cap_t, cap_r;
            if (cap_t_opt->count()) cap_t = infer_caption_t;
            if (cap_r_opt->count()) cap_r = infer_caption_r;
            return run_infer(infer_checkpoint, infer_image, infer_out_t, infer_out_r, cap_t,
                             cap_r);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
