#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psguard/dataset.hpp"
#include "psguard/evaluation.hpp"
#include "psguard/nn/training.hpp"
#include "psguard/pipeline.hpp"
#include "psguard/tokenizer.hpp"

namespace psguard {

enum class TokenMode { Ast, Raw };

[[nodiscard]] std::string to_string(TokenMode mode);
/// Accepts "ast" or "raw"; throws psguard::Error otherwise.
[[nodiscard]] TokenMode token_mode_from_string(const std::string& name);

/// A labeled script reduced to its token stream.
struct TokenizedSample {
    std::string id;
    int label = 0;
    std::vector<std::string> tokens;
};

[[nodiscard]] std::vector<TokenizedSample> tokenize_records(const std::vector<PipelineRecord>& records);
/// AST mode parses and linearizes each script; raw mode splits its text.
/// Throws when a script has no label.
[[nodiscard]] std::vector<TokenizedSample> tokenize_scripts(const std::vector<SourceScript>& scripts, TokenMode mode);

[[nodiscard]] std::vector<LabeledId> labeled_ids(const std::vector<TokenizedSample>& samples);

/// Vocabulary over the samples whose id is listed.
[[nodiscard]] Vocabulary vocab_for(const std::vector<TokenizedSample>& samples, const std::vector<std::string>& ids,
                                   std::size_t cap, const Stoplist& stoplist);

[[nodiscard]] std::vector<Example> encode_samples(const std::vector<TokenizedSample>& samples,
                                                  const std::vector<std::string>& ids, const Vocabulary& vocab,
                                                  std::size_t max_len);

struct ExperimentConfig {
    nn::ModelConfig model;  // vocab_size is overwritten by the cap
    nn::TrainConfig train;
    std::size_t vocab_cap = kDefaultVocabCap;
    Stoplist stoplist = default_stoplist();
};

/// Probabilities from a trained model, in example order.
[[nodiscard]] std::vector<double> predict_all(const nn::Model& model, const std::vector<Example>& examples);

/// Fold trainer for cross_validate: builds the vocabulary from the fold's
/// training ids, trains with the validation fold driving early stopping,
/// and scores the validation fold. Fold f trains with seed derive(seed, f).
/// `samples` must outlive the returned trainer.
[[nodiscard]] FoldTrainer sequence_fold_trainer(const std::vector<TokenizedSample>& samples,
                                                const ExperimentConfig& config);

struct TraditionalRun {
    nn::Splits splits;
    Vocabulary vocab;
    nn::TrainResult result;
    ConfusionMatrix test_confusion;
    Metrics test_metrics;
};

/// 70/15/15 split, vocabulary from the training split, training with
/// validation-driven early stopping and scoring on the test split.
[[nodiscard]] TraditionalRun run_traditional(const std::vector<TokenizedSample>& samples,
                                             const ExperimentConfig& config, bool balance);

}  // namespace psguard
