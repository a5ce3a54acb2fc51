#include "psguard/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "psguard/corpus_stats.hpp"
#include "psguard/evaluation.hpp"
#include "psguard/experiment.hpp"
#include "psguard/nn/checkpoint.hpp"
#include "psguard/parser.hpp"
#include "psguard/synth.hpp"

namespace psguard::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
    using runtime_error::runtime_error;
};

spdlog::logger& log() {
    static auto logger =
        std::make_shared<spdlog::logger>("psguard", std::make_shared<spdlog::sinks::stderr_sink_st>());
    return *logger;
}

void configure_logging() {
    const char* env = std::getenv("PSGUARD_LOG");
    log().set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
    log().set_pattern("[%l] %v");
}

/// A manifest argument may name the CSV itself, the CSV without its
/// extension, or the corpus directory holding manifest.csv.
fs::path resolve_manifest(const fs::path& p) {
    if (fs::is_directory(p)) return p / "manifest.csv";
    if (!fs::exists(p) && fs::exists(fs::path(p.string() + ".csv"))) return p.string() + ".csv";
    return p;
}

const CLI::Validator kManifestPath(
    [](std::string& arg) -> std::string {
        const fs::path p = resolve_manifest(arg);
        return fs::is_regular_file(p) ? std::string{} : "no manifest at " + p.string();
    },
    "MANIFEST");

// ---- shared options ---------------------------------------------------------

struct DataOptions {
    std::string data;
    std::vector<std::string> manifests;
    std::string mode = "ast";
};

void add_data_options(CLI::App* app, DataOptions& d, bool with_mode = true) {
    app->add_option("--data", d.data, "JSONL produced by `pipeline` (AST mode only)")->check(CLI::ExistingFile);
    app->add_option("--manifest", d.manifests, "Corpus manifest CSV or a directory holding manifest.csv")
        ->check(kManifestPath);
    if (with_mode) app->add_option("--mode", d.mode, "Tokenization mode")->check(CLI::IsMember({"ast", "raw"}));
}

struct ModelOptions {
    std::string model = "lstm";
    std::uint64_t seed = 0;
    std::size_t epochs = 200;
    std::size_t patience = 5;
    std::size_t batch = 8;
    double lr = 1e-3;
    std::size_t embed_dim = 128;
    std::size_t hidden_dim = 64;
    std::size_t dense_dim = 64;
    double dropout = 0.5;
    std::size_t vocab_cap = kDefaultVocabCap;
    std::size_t max_len = kDefaultMaxLen;
    std::string stoplist;
};

void add_model_options(CLI::App* app, ModelOptions& m) {
    app->add_option("--model", m.model, "Sequence model")->check(CLI::IsMember({"lstm", "bilstm"}));
    app->add_option("--seed", m.seed, "Random seed (required)")->required();
    app->add_option("--epochs", m.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    app->add_option("--patience", m.patience, "Early-stopping patience");
    app->add_option("--batch", m.batch, "Mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", m.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app->add_option("--embed-dim", m.embed_dim, "Embedding width")->check(CLI::PositiveNumber);
    app->add_option("--hidden-dim", m.hidden_dim, "LSTM units per direction")->check(CLI::PositiveNumber);
    app->add_option("--dense-dim", m.dense_dim, "ReLU layer width")->check(CLI::PositiveNumber);
    app->add_option("--dropout", m.dropout, "Dropout rate of both dropout layers")->check(CLI::Range(0.0, 0.999999));
    app->add_option("--vocab-cap", m.vocab_cap, "Vocabulary size limit")->check(CLI::PositiveNumber);
    app->add_option("--max-len", m.max_len, "Sequence length after padding or truncation")->check(CLI::PositiveNumber);
    app->add_option("--stoplist", m.stoplist, "Stoplist file (default: built-in admin cmdlets)")
        ->check(CLI::ExistingFile);
}

Stoplist load_stoplist(const std::string& path) { return path.empty() ? default_stoplist() : read_stoplist(path); }

ExperimentConfig experiment_config(const ModelOptions& m) {
    ExperimentConfig c;
    c.model.embed_dim = m.embed_dim;
    c.model.hidden_dim = m.hidden_dim;
    c.model.dense_dim = m.dense_dim;
    c.model.dropout_rate = m.dropout;
    c.model.bidirectional = m.model == "bilstm";
    c.model.max_len = m.max_len;
    c.model.vocab_size = m.vocab_cap;
    c.train.max_epochs = m.epochs;
    c.train.patience = m.patience;
    c.train.batch_size = m.batch;
    c.train.learning_rate = m.lr;
    c.train.seed = m.seed;
    c.vocab_cap = m.vocab_cap;
    c.stoplist = load_stoplist(m.stoplist);
    return c;
}

std::string model_label(const std::string& model, const std::string& mode) {
    return std::string(mode == "ast" ? "AST-based " : "Non-AST ") + (model == "bilstm" ? "BiLSTM" : "LSTM");
}

json model_options_json(const ModelOptions& m) {
    return {{"model", m.model},         {"seed", m.seed},           {"epochs", m.epochs},
            {"patience", m.patience},   {"batch", m.batch},         {"lr", m.lr},
            {"embed_dim", m.embed_dim}, {"hidden_dim", m.hidden_dim}, {"dense_dim", m.dense_dim},
            {"dropout", m.dropout},     {"vocab_cap", m.vocab_cap}, {"max_len", m.max_len}};
}

// ---- data loading -------------------------------------------------------------


struct LoadedScripts {
    std::vector<SourceScript> scripts;
    std::vector<IngestError> errors;
};

LoadedScripts load_scripts(const std::vector<std::string>& manifests) {
    LoadedScripts out;
    for (const auto& m : manifests) {
        auto result = ingest_corpus(read_manifest(resolve_manifest(m)));
        for (const auto& e : result.errors) log().warn("skipping {}: {}", e.path, e.message);
        out.errors.insert(out.errors.end(), result.errors.begin(), result.errors.end());
        const std::size_t before = out.scripts.size() + result.scripts.size();
        out.scripts = merge_corpora(std::move(out.scripts), result.scripts);
        if (out.scripts.size() < before) log().info("dropped {} duplicate scripts", before - out.scripts.size());
    }
    if (out.scripts.empty()) throw Error("no scripts could be read from the manifest");
    return out;
}

json ingest_errors_json(const std::vector<IngestError>& errors) {
    json arr = json::array();
    for (const auto& e : errors) arr.push_back({{"path", e.path}, {"message", e.message}});
    return arr;
}

struct LoadedSamples {
    std::vector<TokenizedSample> samples;
    std::size_t skipped = 0;
};

LoadedSamples load_samples(const DataOptions& d) {
    const TokenMode mode = token_mode_from_string(d.mode);
    if (!d.data.empty() && !d.manifests.empty()) throw UsageError("give either --data or --manifest, not both");
    if (d.data.empty() && d.manifests.empty()) throw UsageError("--data or --manifest is required");
    LoadedSamples out;
    if (!d.data.empty()) {
        if (mode == TokenMode::Raw) throw UsageError("raw mode needs --manifest (JSONL holds no raw text)");
        const auto read = read_jsonl(fs::path(d.data));
        for (const auto& e : read.errors) log().warn("{}:{}: {}", d.data, e.line, e.message);
        if (read.records.empty()) throw Error(d.data + ": no valid records");
        out.samples = tokenize_records(read.records);
        out.skipped = read.errors.size();
    } else {
        const auto loaded = load_scripts(d.manifests);
        out.samples = tokenize_scripts(loaded.scripts, mode);
        out.skipped = loaded.errors.size();
    }
    std::set<std::string> ids;
    for (const auto& s : out.samples) {
        if (!ids.insert(s.id).second) throw Error("duplicate script id " + s.id);
    }
    return out;
}

// ---- output -------------------------------------------------------------------

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) ensure_dir(file.parent_path());
}

void write_json(const fs::path& file, const json& j) {
    ensure_parent(file);
    std::ofstream f(file);
    if (!f) throw Error("cannot write " + file.string());
    f << j.dump(2) << '\n';
}

json read_json(const fs::path& file) {
    std::ifstream f(file);
    if (!f) throw Error("cannot read " + file.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error(file.string() + ": " + e.what());
    }
}

void emit(std::ostream& out, const fs::path& file, const json& summary) {
    write_json(file, summary);
    out << summary.dump(2) << '\n';
}

fs::path sibling_summary(const fs::path& artifact) {
    fs::path p = artifact;
    p.replace_extension(".summary.json");
    return p;
}

json metric_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const Metrics& m) {
    return {{"accuracy", metric_json(m.accuracy)},
            {"precision", metric_json(m.precision)},
            {"recall", metric_json(m.recall)},
            {"f1", metric_json(m.f1)}};
}

json confusion_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

std::optional<double> metric_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Metrics metrics_from_json(const json& j) {
    return {metric_from_json(j.at("accuracy")), metric_from_json(j.at("precision")),
            metric_from_json(j.at("recall")), metric_from_json(j.at("f1"))};
}

// ---- subcommands ----------------------------------------------------------------

struct GenOptions {
    std::uint64_t seed = 0;
    std::size_t benign = 20;
    std::size_t malicious = 20;
    double obfuscation = 1.0;
    std::string out;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
    const auto scripts = generate({o.seed, o.benign, o.malicious, o.obfuscation});
    const fs::path manifest = write_corpus(o.out, scripts);
    log().info("wrote {} scripts to {}", scripts.size(), o.out);
    emit(out, fs::path(o.out) / "summary.json",
         {{"command", "gen"},
          {"seed", o.seed},
          {"benign", o.benign},
          {"malicious", o.malicious},
          {"obfuscation", o.obfuscation},
          {"files", scripts.size()},
          {"manifest", manifest.generic_string()}});
    return kExitOk;
}

struct PipelineOptions {
    std::vector<std::string> manifests;
    std::string out;
};

std::size_t count_kind(const AstNode& n, AstKind kind) {
    std::size_t c = n.kind == kind ? 1 : 0;
    for (const auto& ch : n.children) c += count_kind(ch, kind);
    return c;
}

int cmd_pipeline(const PipelineOptions& o, std::ostream& out) {
    const auto loaded = load_scripts(o.manifests);
    std::vector<PipelineRecord> records;
    std::size_t error_nodes = 0;
    std::map<int, std::size_t> labels;
    for (const auto& s : loaded.scripts) {
        if (!s.label) throw Error("script " + s.id + " has no label");
        const AstNode root = parse(s.text);
        error_nodes += count_kind(root, AstKind::ErrorAst);
        records.push_back(linearize(root, s.id, *s.label));
        ++labels[*s.label];
    }
    ensure_parent(o.out);
    write_jsonl(fs::path(o.out), records);
    emit(out, sibling_summary(o.out),
         {{"command", "pipeline"},
          {"records", records.size()},
          {"benign", labels[0]},
          {"malicious", labels[1]},
          {"error_nodes", error_nodes},
          {"ingest_errors", ingest_errors_json(loaded.errors)},
          {"out", o.out}});
    return kExitOk;
}

struct VocabOptions {
    DataOptions data;
    std::size_t cap = kDefaultVocabCap;
    std::string stoplist;
    std::string out;
};

int cmd_vocab(const VocabOptions& o, std::ostream& out) {
    const auto loaded = load_samples(o.data);
    std::vector<std::vector<std::string>> corpus;
    std::size_t total = 0;
    std::set<std::string> distinct;
    for (const auto& s : loaded.samples) {
        corpus.push_back(s.tokens);
        total += s.tokens.size();
        distinct.insert(s.tokens.begin(), s.tokens.end());
    }
    const Vocabulary vocab = build_vocab(corpus, o.cap, load_stoplist(o.stoplist));
    ensure_parent(o.out);
    vocab.save(o.out);
    json top = json::array();
    for (std::size_t k = 0; k < std::min<std::size_t>(10, vocab.size()); ++k) {
        top.push_back({vocab.ranked()[k].token, vocab.ranked()[k].count});
    }
    emit(out, sibling_summary(o.out),
         {{"command", "vocab"},
          {"mode", o.data.mode},
          {"samples", loaded.samples.size()},
          {"corpus_tokens", total},
          {"distinct_tokens", distinct.size()},
          {"size", vocab.size()},
          {"cap", vocab.cap()},
          {"stoplist_hash", vocab.stoplist_hash()},
          {"top", top},
          {"out", o.out}});
    return kExitOk;
}

struct StatsOptions {
    std::vector<std::string> manifests;
    std::string out;
};

int cmd_stats(const StatsOptions& o, std::ostream& out) {
    const auto loaded = load_scripts(o.manifests);
    const CorpusReport report = corpus_report(loaded.scripts);
    ensure_parent(o.out);
    {
        std::ofstream f(o.out);
        if (!f) throw Error("cannot write " + o.out);
        f << format_report(report);
    }
    json labels = json::object();
    for (const auto& [label, s] : report.by_label) {
        labels[std::to_string(label)] = {{"count", s.count},
                                         {"median_bytes", s.median_bytes},
                                         {"entropy_mean", s.entropy_mean},
                                         {"entropy_stddev", s.entropy_stddev}};
    }
    emit(out, sibling_summary(o.out),
         {{"command", "stats"}, {"scripts", report.total()}, {"labels", labels}, {"out", o.out}});
    return kExitOk;
}

struct TrainOptions {
    DataOptions data;
    ModelOptions model;
    bool balance = false;
    std::string out;
};

json ids_json(const std::vector<std::string>& ids) { return json(ids); }

int cmd_train(const TrainOptions& o, std::ostream& out) {
    const auto loaded = load_samples(o.data);
    const ExperimentConfig config = experiment_config(o.model);
    const fs::path dir = o.out;
    ensure_dir(dir);
    const TraditionalRun run = run_traditional(loaded.samples, config, o.balance);

    nn::save_checkpoint(dir / "model.ckpt", run.result.model);
    run.vocab.save(dir / "vocab.json");
    nn::write_history_csv(dir / "history.csv", run.result.history);
    write_json(dir / "splits.json", {{"train", ids_json(run.splits.train)},
                                     {"validation", ids_json(run.splits.validation)},
                                     {"test", ids_json(run.splits.test)}});
    json run_info = model_options_json(o.model);
    run_info["mode"] = o.data.mode;
    run_info["balance"] = o.balance;
    write_json(dir / "run.json", run_info);

    emit(out, dir / "summary.json",
         {{"command", "train"},
          {"label", model_label(o.model.model, o.data.mode)},
          {"config", run_info},
          {"samples", loaded.samples.size()},
          {"skipped", loaded.skipped},
          {"split_sizes", {run.splits.train.size(), run.splits.validation.size(), run.splits.test.size()}},
          {"vocab_size", run.vocab.size()},
          {"epochs_run", run.result.history.size()},
          {"best_epoch", run.result.best_epoch},
          {"stopped_early", run.result.stopped_early},
          {"confusion", confusion_json(run.test_confusion)},
          {"metrics", metrics_json(run.test_metrics)}});
    return kExitOk;
}

struct EvalOptions {
    std::string run_dir;
    DataOptions data;
    std::string split = "test";
    std::string out;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
    const fs::path dir = o.run_dir;
    const json run_info = read_json(dir / "run.json");
    DataOptions data = o.data;
    data.mode = run_info.at("mode").get<std::string>();
    const auto loaded = load_samples(data);
    const nn::Model model = nn::load_checkpoint(dir / "model.ckpt");
    const Vocabulary vocab = Vocabulary::load(dir / "vocab.json");

    std::vector<std::string> ids;
    if (o.split == "all") {
        for (const auto& s : loaded.samples) ids.push_back(s.id);
    } else {
        ids = read_json(dir / "splits.json").at(o.split).get<std::vector<std::string>>();
    }
    if (ids.empty()) throw Error("split '" + o.split + "' is empty");
    const auto examples = encode_samples(loaded.samples, ids, vocab, model.config.max_len);
    std::vector<int> labels;
    for (const auto& e : examples) labels.push_back(e.label);
    const ConfusionMatrix cm = confusion(predict_all(model, examples), labels);
    const fs::path file = o.out.empty() ? dir / ("eval_" + o.split + ".json") : fs::path(o.out);
    emit(out, file,
         {{"command", "eval"},
          {"label", model_label(run_info.at("model").get<std::string>(), data.mode)},
          {"split", o.split},
          {"samples", examples.size()},
          {"confusion", confusion_json(cm)},
          {"metrics", metrics_json(metrics(cm))}});
    return kExitOk;
}

struct CrossvalOptions {
    DataOptions data;
    ModelOptions model;
    std::size_t k = 5;
    std::string out;
};

json summary_json(const MetricSummary& s) {
    return {{"mean", metric_json(s.mean)}, {"stddev", metric_json(s.stddev)}, {"defined_folds", s.defined_folds}};
}

int cmd_crossval(const CrossvalOptions& o, std::ostream& out) {
    const auto loaded = load_samples(o.data);
    const ExperimentConfig config = experiment_config(o.model);
    const fs::path dir = o.out;
    ensure_dir(dir);
    const auto trainer = sequence_fold_trainer(loaded.samples, config);
    const auto result = cross_validate(
        [&](const std::vector<LabeledId>& train, const std::vector<LabeledId>& validation, std::size_t fold) {
            log().info("fold {}: {} training, {} validation", fold, train.size(), validation.size());
            return trainer(train, validation, fold);
        },
        labeled_ids(loaded.samples), o.k, o.model.seed);

    {
        std::ofstream f(dir / "folds.csv");
        if (!f) throw Error("cannot write " + (dir / "folds.csv").string());
        f << "fold,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
        for (std::size_t i = 0; i < result.fold_metrics.size(); ++i) {
            const auto& cm = result.confusions[i];
            const auto& m = result.fold_metrics[i];
            f << i << ',' << cm.tp << ',' << cm.fp << ',' << cm.fn << ',' << cm.tn << ',' << format_metric(m.accuracy)
              << ',' << format_metric(m.precision) << ',' << format_metric(m.recall) << ',' << format_metric(m.f1)
              << '\n';
        }
    }
    const std::string label = model_label(o.model.model, o.data.mode);
    const Metrics mean{result.accuracy.mean, result.precision.mean, result.recall.mean, result.f1.mean};
    write_report_csv(dir / "report.csv", {{label, mean}});

    json folds = json::array();
    for (std::size_t i = 0; i < result.fold_metrics.size(); ++i) {
        folds.push_back({{"fold", i},
                         {"size", result.plan.folds[i].size()},
                         {"confusion", confusion_json(result.confusions[i])},
                         {"metrics", metrics_json(result.fold_metrics[i])}});
    }
    json run_info = model_options_json(o.model);
    run_info["mode"] = o.data.mode;
    run_info["k"] = o.k;
    emit(out, dir / "summary.json",
         {{"command", "crossval"},
          {"label", label},
          {"config", run_info},
          {"samples", loaded.samples.size()},
          {"skipped", loaded.skipped},
          {"folds", folds},
          {"metrics", metrics_json(mean)},
          {"summary",
           {{"accuracy", summary_json(result.accuracy)},
            {"precision", summary_json(result.precision)},
            {"recall", summary_json(result.recall)},
            {"f1", summary_json(result.f1)}}}});
    return kExitOk;
}

struct ReportOptions {
    std::vector<std::string> inputs;
    std::string out;
};

int cmd_report(const ReportOptions& o, std::ostream& out) {
    std::vector<ReportRow> rows;
    for (const auto& in : o.inputs) {
        const fs::path file = fs::is_directory(in) ? fs::path(in) / "summary.json" : fs::path(in);
        const json j = read_json(file);
        try {
            rows.push_back({j.at("label").get<std::string>(), metrics_from_json(j.at("metrics"))});
        } catch (const json::exception& e) {
            throw Error(file.string() + ": not a train, eval or crossval summary (" + e.what() + ")");
        }
    }
    ensure_parent(o.out);
    write_report_csv(fs::path(o.out), rows);
    write_report_csv(out, rows);
    return kExitOk;
}

struct ParseOptions {
    std::string file;
    bool pairs = false;
};

int cmd_parse(const ParseOptions& o, std::ostream& out) {
    std::ifstream f(o.file, std::ios::binary);
    if (!f) throw Error("cannot read " + o.file);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const AstNode root = parse(decode_script_bytes(std::move(bytes)));
    if (o.pairs) {
        out << to_json_line(linearize(root, o.file, 0)) << '\n';
    } else {
        out << dump_ast(root);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();
    CLI::App app{"PowerShell AST pipeline and sequence classifiers", "psguard"};
    app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
    app.allow_config_extras(false);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled synthetic corpus");
    gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
    gen_cmd->add_option("--benign", gen.benign, "Number of benign scripts");
    gen_cmd->add_option("--malicious", gen.malicious, "Number of malicious scripts");
    gen_cmd->add_option("--obfuscation", gen.obfuscation, "Obfuscation rate of malicious scripts")->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    PipelineOptions pipe;
    auto* pipe_cmd = app.add_subcommand("pipeline", "Parse scripts and write AST pairs as JSONL");
    pipe_cmd->add_option("--manifest", pipe.manifests)->required()->check(kManifestPath);
    pipe_cmd->add_option("--out", pipe.out, "Output JSONL file")->required();

    VocabOptions voc;
    auto* voc_cmd = app.add_subcommand("vocab", "Build a token vocabulary");
    add_data_options(voc_cmd, voc.data);
    voc_cmd->add_option("--cap", voc.cap)->check(CLI::PositiveNumber);
    voc_cmd->add_option("--stoplist", voc.stoplist)->check(CLI::ExistingFile);
    voc_cmd->add_option("--out", voc.out, "Output vocabulary JSON")->required();

    StatsOptions stats;
    auto* stats_cmd = app.add_subcommand("stats", "Per-script size, line and entropy statistics");
    stats_cmd->add_option("--manifest", stats.manifests)->required()->check(kManifestPath);
    stats_cmd->add_option("--out", stats.out, "Output report file")->required();

    TrainOptions tr;
    auto* tr_cmd = app.add_subcommand("train", "Train on a 70/15/15 split and score the test split");
    add_data_options(tr_cmd, tr.data);
    add_model_options(tr_cmd, tr.model);
    tr_cmd->add_flag("--balance", tr.balance, "Undersample the majority label first");
    tr_cmd->add_option("--out", tr.out, "Run directory")->required();

    EvalOptions ev;
    auto* ev_cmd = app.add_subcommand("eval", "Score a trained run on one of its splits");
    ev_cmd->add_option("--run", ev.run_dir, "Run directory written by train")->required()->check(CLI::ExistingDirectory);
    add_data_options(ev_cmd, ev.data, false);
    ev_cmd->add_option("--split", ev.split)->check(CLI::IsMember({"train", "validation", "test", "all"}));
    ev_cmd->add_option("--out", ev.out, "Output JSON (default: <run>/eval_<split>.json)");

    CrossvalOptions cv;
    auto* cv_cmd = app.add_subcommand("crossval", "Stratified K-fold cross-validation");
    add_data_options(cv_cmd, cv.data);
    add_model_options(cv_cmd, cv.model);
    cv_cmd->add_option("--k", cv.k, "Number of folds")->check(CLI::Range(2, 1000));
    cv_cmd->add_option("--out", cv.out, "Output directory")->required();

    ReportOptions rep;
    auto* rep_cmd = app.add_subcommand("report", "Comparison table of train, eval or crossval summaries");
    rep_cmd->add_option("--input", rep.inputs, "summary.json files or their directories")
        ->required()
        ->check(CLI::ExistingPath);
    rep_cmd->add_option("--out", rep.out, "Output CSV")->required();

    ParseOptions ps;
    auto* ps_cmd = app.add_subcommand("parse", "Print the AST of one script");
    ps_cmd->add_option("file", ps.file)->required()->check(CLI::ExistingFile);
    ps_cmd->add_flag("--pairs", ps.pairs, "Print the linearized pairs instead of the tree");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen_cmd) return cmd_gen(gen, out);
        if (*pipe_cmd) return cmd_pipeline(pipe, out);
        if (*voc_cmd) return cmd_vocab(voc, out);
        if (*stats_cmd) return cmd_stats(stats, out);
        if (*tr_cmd) return cmd_train(tr, out);
        if (*ev_cmd) return cmd_eval(ev, out);
        if (*cv_cmd) return cmd_crossval(cv, out);
        if (*rep_cmd) return cmd_report(rep, out);
        if (*ps_cmd) return cmd_parse(ps, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitUsage;
}

}  // namespace psguard::cli
