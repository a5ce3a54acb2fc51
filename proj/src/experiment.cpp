#include "psguard/experiment.hpp"

#include <unordered_map>

#include "psguard/parser.hpp"

namespace psguard {

std::string to_string(TokenMode mode) { return mode == TokenMode::Ast ? "ast" : "raw"; }

TokenMode token_mode_from_string(const std::string& name) {
    if (name == "ast") return TokenMode::Ast;
    if (name == "raw") return TokenMode::Raw;
    throw Error("unknown tokenization mode '" + name + "' (expected ast or raw)");
}

std::vector<TokenizedSample> tokenize_records(const std::vector<PipelineRecord>& records) {
    std::vector<TokenizedSample> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.script_id, r.label, record_tokens(r)});
    return out;
}

std::vector<TokenizedSample> tokenize_scripts(const std::vector<SourceScript>& scripts, TokenMode mode) {
    std::vector<TokenizedSample> out;
    out.reserve(scripts.size());
    for (const auto& s : scripts) {
        if (!s.label) throw Error("script " + s.id + " has no label");
        if (mode == TokenMode::Raw) {
            out.push_back({s.id, *s.label, raw_tokens(s.text)});
        } else {
            out.push_back({s.id, *s.label, record_tokens(linearize(parse(s.text), s.id, *s.label))});
        }
    }
    return out;
}

std::vector<LabeledId> labeled_ids(const std::vector<TokenizedSample>& samples) {
    std::vector<LabeledId> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({s.id, s.label});
    return out;
}

namespace {

std::vector<const TokenizedSample*> select(const std::vector<TokenizedSample>& samples,
                                           const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const TokenizedSample*> index;
    for (const auto& s : samples) index.emplace(s.id, &s);
    std::vector<const TokenizedSample*> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw Error("unknown sample id " + id);
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

Vocabulary vocab_for(const std::vector<TokenizedSample>& samples, const std::vector<std::string>& ids,
                     std::size_t cap, const Stoplist& stoplist) {
    std::vector<std::vector<std::string>> corpus;
    for (const auto* s : select(samples, ids)) corpus.push_back(s->tokens);
    return build_vocab(corpus, cap, stoplist);
}

std::vector<Example> encode_samples(const std::vector<TokenizedSample>& samples, const std::vector<std::string>& ids,
                                    const Vocabulary& vocab, std::size_t max_len) {
    std::vector<Example> out;
    for (const auto* s : select(samples, ids)) out.push_back({s->id, encode_tokens(s->tokens, vocab, max_len), s->label});
    return out;
}

std::vector<double> predict_all(const nn::Model& model, const std::vector<Example>& examples) {
    std::vector<double> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back(nn::predict(model, e.seq));
    return out;
}

namespace {

std::vector<std::string> ids_of(const std::vector<LabeledId>& items) {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& i : items) out.push_back(i.id);
    return out;
}

nn::ModelConfig sized(const ExperimentConfig& config) {
    nn::ModelConfig m = config.model;
    m.vocab_size = config.vocab_cap;
    return m;
}

}  // namespace

FoldTrainer sequence_fold_trainer(const std::vector<TokenizedSample>& samples, const ExperimentConfig& config) {
    return [&samples, config](const std::vector<LabeledId>& train, const std::vector<LabeledId>& validation,
                              std::size_t fold) {
        const auto train_ids = ids_of(train);
        const auto val_ids = ids_of(validation);
        const Vocabulary vocab = vocab_for(samples, train_ids, config.vocab_cap, config.stoplist);
        const nn::ModelConfig model_config = sized(config);
        const auto train_set = encode_samples(samples, train_ids, vocab, model_config.max_len);
        const auto val_set = encode_samples(samples, val_ids, vocab, model_config.max_len);
        nn::TrainConfig tc = config.train;
        tc.seed = Rng::derive(config.train.seed, fold);
        const auto result = nn::train(model_config, train_set, val_set, tc);
        return predict_all(result.model, val_set);
    };
}

TraditionalRun run_traditional(const std::vector<TokenizedSample>& samples, const ExperimentConfig& config,
                               bool balance) {
    TraditionalRun run;
    run.splits = nn::split_traditional(labeled_ids(samples), {0.70, 0.15, 0.15}, config.train.seed, balance);
    run.vocab = vocab_for(samples, run.splits.train, config.vocab_cap, config.stoplist);
    const nn::ModelConfig model_config = sized(config);
    const auto train_set = encode_samples(samples, run.splits.train, run.vocab, model_config.max_len);
    const auto val_set = encode_samples(samples, run.splits.validation, run.vocab, model_config.max_len);
    const auto test_set = encode_samples(samples, run.splits.test, run.vocab, model_config.max_len);
    run.result = nn::train(model_config, train_set, val_set, config.train);
    std::vector<int> labels;
    for (const auto& e : test_set) labels.push_back(e.label);
    run.test_confusion = confusion(predict_all(run.result.model, test_set), labels);
    run.test_metrics = metrics(run.test_confusion);
    return run;
}

}  // namespace psguard
