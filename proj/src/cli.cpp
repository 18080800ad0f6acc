#include "frsum/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "frsum/attack.hpp"
#include "frsum/checkpoint.hpp"
#include "frsum/common.hpp"
#include "frsum/corpus.hpp"
#include "frsum/extraction.hpp"
#include "frsum/frsum.hpp"
#include "frsum/model.hpp"
#include "frsum/report.hpp"
#include "frsum/train.hpp"

namespace frsum {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// JSON config accessor that rejects unknown keys: every key must be consumed
// by a get/sub call before finish().
class ConfigView {
public:
    ConfigView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_ + ": expected a JSON object");
        }
    }

    template <typename T>
    T get(const char* key, T fallback) {
        used_.insert(key);
        if (!j_.contains(key)) {
            return fallback;
        }
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    template <typename T>
    T require(const char* key) {
        used_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError(path_ + "." + key + " is required");
        }
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    ConfigView sub(const char* key) {
        used_.insert(key);
        static const json empty = json::object();
        const json& child = j_.contains(key) ? j_.at(key) : empty;
        return ConfigView(child, path_ + "." + key);
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) {
                throw ConfigError(path_ + ": unknown key \"" + key + "\"");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

json load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return j;
}

std::uint64_t seed_or(std::optional<std::int64_t> cli_seed, std::uint64_t config_seed) {
    return cli_seed.has_value() ? static_cast<std::uint64_t>(*cli_seed) : config_seed;
}

// ---------------------------------------------------------------------------
// gen-synth
// ---------------------------------------------------------------------------

int cmd_gen_synth(const std::string& config_path, std::optional<std::int64_t> cli_seed) {
    const json raw = load_config(config_path);
    ConfigView cfg(raw, "config");
    SynthConfig sc;
    const std::string out = cfg.require<std::string>("out");
    sc.n_pairs = cfg.get<int>("n_pairs", sc.n_pairs);
    sc.n_entities = cfg.get<int>("n_entities", sc.n_entities);
    sc.n_numbers = cfg.get<int>("n_numbers", sc.n_numbers);
    sc.seed = seed_or(cli_seed, cfg.get<std::uint64_t>("seed", sc.seed));
    cfg.finish();

    const std::vector<SummaryPair> corpus = gen_synthetic_corpus(sc);
    save_jsonl(corpus, out);

    ordered_json effective{{"out", out},
                           {"n_pairs", sc.n_pairs},
                           {"n_entities", sc.n_entities},
                           {"n_numbers", sc.n_numbers},
                           {"seed", sc.seed}};
    ordered_json meta{{"type", "corpus_meta"},
                      {"command", "gen-synth"},
                      {"config", effective},
                      {"n_pairs", corpus.size()},
                      {"corpus_hash", hash_tag(hash_file(out))}};
    write_file(out + ".meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << corpus.size() << " pairs to " << out << " ("
              << meta["corpus_hash"].get<std::string>() << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract-spans
// ---------------------------------------------------------------------------

ordered_json span_json(const FactualSpan& sp) {
    return {{"kind", to_string(sp.kind)},
            {"surface", sp.surface},
            {"begin", sp.begin},
            {"end", sp.end}};
}

int cmd_extract_spans(const std::string& config_path) {
    const json raw = load_config(config_path);
    ConfigView cfg(raw, "config");
    const std::string corpus_path = cfg.require<std::string>("corpus");
    const std::string out = cfg.get<std::string>("out", "");
    cfg.finish();

    const std::vector<SummaryPair> corpus = load_jsonl(corpus_path);
    Vocab vocab;
    ordered_json pairs = ordered_json::array();
    for (const SummaryPair& pair : corpus) {
        const TokenizedPair tok = tokenize_pair(pair, VocabMode::Build, vocab);
        ordered_json rec;
        rec["id"] = pair.id;
        ordered_json ssp = ordered_json::array();
        for (const FactualSpan& sp : extract_spans(tok.tgt, SpanHost::Summary)) {
            ssp.push_back(span_json(sp));
        }
        ordered_json dsp = ordered_json::array();
        for (const FactualSpan& sp : extract_spans(tok.src, SpanHost::Document)) {
            dsp.push_back(span_json(sp));
        }
        rec["summary_spans"] = ssp;
        rec["document_spans"] = dsp;
        pairs.push_back(rec);
    }

    ordered_json doc{{"type", "spans"},
                     {"config", ordered_json{{"corpus", corpus_path}, {"out", out}}},
                     {"corpus_hash", hash_tag(hash_file(corpus_path))},
                     {"pairs", pairs}};
    const std::string text = doc.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file(out, text);
        std::cout << "wrote spans for " << corpus.size() << " pairs to " << out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainSetup {
    ordered_json effective;
    std::string corpus_path;
    std::string out_dir;
    std::string warm_start;
    std::string resume;
    ModelHParams hp;
    bool hp_explicit = false;
    FloatMode mode = FloatMode::F32;
    TrainRunConfig run;
};

TrainSetup read_train_config(const json& raw, std::optional<std::int64_t> cli_seed,
                             const std::string& strategy_override) {
    TrainSetup s;
    ConfigView cfg(raw, "config");
    s.corpus_path = cfg.require<std::string>("corpus");
    s.out_dir = cfg.require<std::string>("out_dir");
    s.run.strategy = cfg.get<std::string>("strategy", "nll");
    if (!strategy_override.empty()) {
        s.run.strategy = strategy_override;
    }
    s.run.epochs = cfg.get<int>("epochs", 5);
    s.run.seed = seed_or(cli_seed, cfg.get<std::uint64_t>("seed", 7));
    s.warm_start = cfg.get<std::string>("warm_start", "");
    s.resume = cfg.get<std::string>("resume", "");

    std::string float_mode = cfg.get<std::string>("float_mode", "float32");
    const char* env = std::getenv("FRSUM_FLOAT64");
    if (env != nullptr && std::string(env) == "1") {
        float_mode = "float64";
    }
    s.mode = float_mode_from_string(float_mode);

    s.hp_explicit = cfg.has("model");
    ConfigView model = cfg.sub("model");
    s.hp.d_model = model.get<int>("d_model", 64);
    s.hp.n_layers = model.get<int>("n_layers", 2);
    s.hp.n_heads = model.get<int>("n_heads", 4);
    s.hp.d_ff = model.get<int>("d_ff", 256);
    s.hp.max_src_len = model.get<int>("max_src_len", kDefaultMaxSrcLen);
    s.hp.max_tgt_len = model.get<int>("max_tgt_len", kDefaultMaxTgtLen);
    model.finish();

    ConfigView opt = cfg.sub("optimizer");
    s.run.adam.lr = opt.get<double>("lr", 3e-4);
    s.run.adam.beta1 = opt.get<double>("beta1", 0.9);
    s.run.adam.beta2 = opt.get<double>("beta2", 0.999);
    s.run.adam.eps = opt.get<double>("eps", 1e-8);
    s.run.adam.clip_norm = opt.get<double>("clip_norm", 1.0);
    opt.finish();

    ConfigView fr = cfg.sub("frsum");
    s.run.frsum.gamma = fr.get<double>("gamma", 0.05);
    s.run.frsum.eta = fr.get<double>("eta", 0.3);
    s.run.frsum.adv_cap = fr.get<int>("adv_cap", 10);
    s.run.frsum.start_epoch = fr.get<int>("start_epoch", 2);
    s.run.frsum.tau_step = fr.get<double>("tau_step", 0.1);
    s.run.frsum.tau_cap = fr.get<double>("tau_cap", 0.5);
    s.run.frsum.span_sample_count = fr.get<int>("span_sample_count", 1);
    fr.finish();
    s.run.frsum.seed = s.run.seed;
    cfg.finish();
    s.run.validate();

    s.effective = ordered_json{
        {"corpus", s.corpus_path},
        {"out_dir", s.out_dir},
        {"strategy", s.run.strategy},
        {"epochs", s.run.epochs},
        {"seed", s.run.seed},
        {"float_mode", to_string(s.mode)},
        {"warm_start", s.warm_start},
        {"resume", s.resume},
        {"model",
         ordered_json{{"d_model", s.hp.d_model},
                      {"n_layers", s.hp.n_layers},
                      {"n_heads", s.hp.n_heads},
                      {"d_ff", s.hp.d_ff},
                      {"max_src_len", s.hp.max_src_len},
                      {"max_tgt_len", s.hp.max_tgt_len}}},
        {"optimizer",
         ordered_json{{"lr", s.run.adam.lr},
                      {"beta1", s.run.adam.beta1},
                      {"beta2", s.run.adam.beta2},
                      {"eps", s.run.adam.eps},
                      {"clip_norm", s.run.adam.clip_norm}}},
        {"frsum",
         ordered_json{{"gamma", s.run.frsum.gamma},
                      {"eta", s.run.frsum.eta},
                      {"adv_cap", s.run.frsum.adv_cap},
                      {"start_epoch", s.run.frsum.start_epoch},
                      {"tau_step", s.run.frsum.tau_step},
                      {"tau_cap", s.run.frsum.tau_cap},
                      {"span_sample_count", s.run.frsum.span_sample_count}}}};
    return s;
}

std::string epoch_checkpoint_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
    return buf;
}

int cmd_train(const std::string& config_path, std::optional<std::int64_t> cli_seed,
              const std::string& strategy_override) {
    TrainSetup s = read_train_config(load_config(config_path), cli_seed, strategy_override);
    std::filesystem::create_directories(s.out_dir);

    const std::vector<SummaryPair> corpus = load_jsonl(s.corpus_path);
    if (corpus.empty()) {
        throw DataError("training corpus " + s.corpus_path + " is empty");
    }

    Vocab vocab;
    ModelHParams hp = s.hp;
    std::optional<Checkpoint> start;
    int first_epoch = 1;
    std::string start_hash;

    if (!s.resume.empty() && !s.warm_start.empty()) {
        throw ConfigError("set either \"resume\" or \"warm_start\", not both");
    }
    if (!s.resume.empty() || !s.warm_start.empty()) {
        const std::string path = s.resume.empty() ? s.warm_start : s.resume;
        start = load_checkpoint(path);
        start_hash = hash_tag(hash_file(path));
        if (s.hp_explicit) {
            ModelHParams expect = s.hp;
            expect.vocab_size = start->params.hp.vocab_size;
            if (!(expect == start->params.hp)) {
                throw ConfigError("config model hyperparameters differ from checkpoint " + path);
            }
        }
        hp = start->params.hp;
        vocab = start->vocab;
        if (!s.resume.empty()) {
            if (!start->has_optimizer) {
                throw IntegrityError("resume checkpoint lacks optimizer state: " + path);
            }
            first_epoch = start->train_meta.value("epochs_completed", 0) + 1;
        }
    } else if (s.run.strategy == "frsum") {
        throw ConfigError(
            "frsum training requires \"warm_start\": the FRSUM phase starts from an NLL "
            "checkpoint trained close to coverage");
    }

    // Vocab is built from the training corpus only when starting fresh;
    // checkpoints freeze it.
    std::vector<TokenizedPair> pairs;
    pairs.reserve(corpus.size());
    const VocabMode mode = start.has_value() ? VocabMode::Frozen : VocabMode::Build;
    for (const SummaryPair& p : corpus) {
        pairs.push_back(tokenize_pair(p, mode, vocab, hp.max_src_len, hp.max_tgt_len));
    }

    Transformer model = [&] {
        if (start.has_value()) {
            ModelParams params = start->params;
            if (params.mode != s.mode) {
                params.mode = s.mode;
                params.quantize_to_mode();
            }
            return Transformer(std::move(params));
        }
        hp.vocab_size = vocab.size();
        return Transformer(ModelParams::init(hp, s.mode, s.run.seed));
    }();
    AdamState opt = (start.has_value() && !s.resume.empty()) ? start->opt
                                                             : AdamState::init(model.params());

    const std::string log_path = s.out_dir + "/train_log.jsonl";
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) {
        throw DataError("cannot open training log " + log_path);
    }
    ordered_json header{{"type", "header"},
                        {"command", "train"},
                        {"config", s.effective},
                        {"corpus_hash", hash_tag(hash_file(s.corpus_path))},
                        {"start_checkpoint_hash", start_hash},
                        {"first_epoch", first_epoch},
                        {"vocab_size", vocab.size()}};
    log << header.dump() << "\n";

    std::string last_ckpt;
    const auto on_step = [&](const StepRecord& rec) {
        ordered_json line{{"type", "step"},     {"step", rec.step},
                          {"epoch", rec.epoch}, {"pair", rec.pair_id},
                          {"tau", rec.tau},     {"l_nll", rec.l_nll},
                          {"l_fa", rec.l_fa},   {"l_total", rec.l_total}};
        if (!rec.skipped_reason.empty()) {
            line["skipped_reason"] = rec.skipped_reason;
        }
        log << line.dump() << "\n";
    };
    const auto on_epoch = [&](int epoch, double mean_nll) {
        Checkpoint ckpt;
        ckpt.params = model.params();
        ckpt.vocab = vocab;
        ckpt.has_optimizer = true;
        ckpt.opt = opt;
        ckpt.train_meta = ordered_json{{"epochs_completed", epoch},
                                       {"strategy", s.run.strategy},
                                       {"seed", s.run.seed},
                                       {"config", s.effective}};
        last_ckpt = s.out_dir + "/" + epoch_checkpoint_name(epoch);
        save_checkpoint(ckpt, last_ckpt);
        ordered_json line{{"type", "epoch_end"},
                          {"epoch", epoch},
                          {"mean_l_nll", mean_nll},
                          {"checkpoint", epoch_checkpoint_name(epoch)}};
        log << line.dump() << "\n";
        std::cout << "epoch " << epoch << ": mean NLL " << mean_nll << "\n";
    };

    train_epochs(model, opt, pairs, s.run, first_epoch, on_step, on_epoch);

    const std::string final_path = s.out_dir + "/final.ckpt";
    std::filesystem::copy_file(last_ckpt, final_path,
                               std::filesystem::copy_options::overwrite_existing);
    ordered_json footer{{"type", "done"},
                        {"epochs_completed", first_epoch + s.run.epochs - 1},
                        {"final_checkpoint", "final.ckpt"}};
    log << footer.dump() << "\n";
    log.close();
    std::cout << "final checkpoint: " << final_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

int cmd_attack(const std::string& config_path, std::optional<std::int64_t> cli_seed,
               std::optional<int> cli_workers) {
    const json raw = load_config(config_path);
    ConfigView cfg(raw, "config");
    const std::string corpus_path = cfg.require<std::string>("corpus");
    const std::string ckpt_path = cfg.require<std::string>("checkpoint");
    const std::string out_report = cfg.require<std::string>("out_report");
    const KindFilter kinds = kind_filter_from_string(cfg.get<std::string>("kinds", "mix"));
    const int adv_cap = cfg.get<int>("adv_cap", 10);
    const std::uint64_t seed = seed_or(cli_seed, cfg.get<std::uint64_t>("seed", 7));
    int workers = cfg.get<int>("workers", 1);
    cfg.finish();
    if (cli_workers.has_value()) {
        workers = *cli_workers;
    }

    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Vocab vocab = ckpt.vocab;
    const ModelHParams& hp = ckpt.params.hp;
    const Transformer model(ckpt.params);

    const std::vector<SummaryPair> corpus = load_jsonl(corpus_path);
    std::vector<TokenizedPair> pairs;
    pairs.reserve(corpus.size());
    for (const SummaryPair& p : corpus) {
        pairs.push_back(tokenize_pair(p, VocabMode::Frozen, vocab, hp.max_src_len,
                                      hp.max_tgt_len));
    }

    const TransformerScorer scorer(model);
    const RobustnessReport report =
        corpus_success_rate(scorer, pairs, kinds, seed, adv_cap, workers);

    // workers deliberately left out of the echo: reports are independent of it
    ordered_json effective{{"corpus", corpus_path},
                           {"checkpoint", ckpt_path},
                           {"out_report", out_report},
                           {"kinds", to_string(kinds)},
                           {"adv_cap", adv_cap},
                           {"seed", seed}};
    const ordered_json j =
        robustness_report_json(report, effective, hash_tag(hash_file(corpus_path)),
                               hash_tag(hash_file(ckpt_path)));
    write_file(out_report, j.dump(2) + "\n");

    auto show = [](const std::optional<double>& e) {
        return e.has_value() ? std::to_string(*e) : std::string("n/a");
    };
    std::cout << "e_mix=" << show(report.e_mix) << " e_entity=" << show(report.e_entity)
              << " e_number=" << show(report.e_number) << " skipped=" << report.skipped_spans
              << " -> " << out_report << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& paths, const std::string& out_text,
               const std::string& out_json) {
    if (paths.empty()) {
        throw ConfigError("report: at least one report path is required");
    }
    std::vector<ordered_json> reports;
    reports.reserve(paths.size());
    for (const std::string& p : paths) {
        try {
            reports.push_back(ordered_json::parse(read_file(p)));
        } catch (const json::exception& e) {
            throw DataError("report " + p + " is not valid JSON: " + e.what());
        }
    }
    const ReportComparison cmp = compare_reports(paths, reports);
    std::cout << cmp.text;
    if (!out_text.empty()) {
        write_file(out_text, cmp.text);
    }
    if (!out_json.empty()) {
        write_file(out_json, cmp.summary.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Factual robustness measurement and FRSUM training for toy seq2seq models"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::int64_t> seed;
    std::optional<int> workers;
    std::string strategy_override;
    std::vector<std::string> report_paths;
    std::string report_out, report_json;

    CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus");
    gen->add_option("--config", config_path, "JSON config")->required();
    gen->add_option("--seed", seed, "override config seed");

    CLI::App* spans = app.add_subcommand("extract-spans", "emit extracted spans as JSON");
    spans->add_option("--config", config_path, "JSON config")->required();

    CLI::App* train = app.add_subcommand("train", "train with NLL or FRSUM");
    train->add_option("--config", config_path, "JSON config")->required();
    train->add_option("--seed", seed, "override config seed");
    train->add_option("--strategy", strategy_override, "override strategy (nll|frsum)");

    CLI::App* attack = app.add_subcommand("attack", "measure factual robustness");
    attack->add_option("--config", config_path, "JSON config")->required();
    attack->add_option("--seed", seed, "override config seed");
    attack->add_option("--workers", workers, "parallel scoring workers");

    CLI::App* report = app.add_subcommand("report", "compare robustness reports");
    report->add_option("reports", report_paths, "report JSON paths")->required();
    report->add_option("--out", report_out, "write the text table here");
    report->add_option("--json", report_json, "write the JSON summary here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_synth(config_path, seed);
        if (spans->parsed()) return cmd_extract_spans(config_path);
        if (train->parsed()) return cmd_train(config_path, seed, strategy_override);
        if (attack->parsed()) return cmd_attack(config_path, seed, workers);
        if (report->parsed()) return cmd_report(report_paths, report_out, report_json);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace frsum
