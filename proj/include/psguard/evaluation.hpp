#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psguard/dataset.hpp"
#include "psguard/error.hpp"

namespace psguard {

/// Positive class is malicious (label 1).
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    [[nodiscard]] std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Prediction is positive iff probability >= threshold. Throws on a length
/// mismatch or a label other than 0/1.
[[nodiscard]] ConfusionMatrix confusion(const std::vector<double>& probabilities, const std::vector<int>& labels,
                                        double threshold = 0.5);

/// nullopt marks an undefined value (zero denominator).
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Throws psguard::Error when the matrix is empty.
[[nodiscard]] Metrics metrics(const ConfusionMatrix& cm);

/// Text for a metric value: fixed 4 decimals, or "undefined".
[[nodiscard]] std::string format_metric(const std::optional<double>& value);

/// Validation id sets of the K folds; the training set of fold k is the
/// complement of folds[k].
struct FoldPlan {
    std::vector<std::vector<std::string>> folds;

    [[nodiscard]] std::size_t k() const { return folds.size(); }
    /// All ids outside fold `k`, in plan order.
    [[nodiscard]] std::vector<std::string> training_ids(std::size_t k) const;
};

/// Stratified K-fold. Within each label the ids are shuffled and dealt round
/// robin; the dealing offset carries over from one label to the next so that
/// fold sizes also stay within one of each other.
/// Throws when K < 2, ids repeat, or a label has fewer than K samples.
[[nodiscard]] FoldPlan kfold(const std::vector<LabeledId>& samples, std::size_t k = 5, std::uint64_t seed = 0);

/// Trains on the first argument and returns validation probabilities in the
/// order of the second.
using FoldTrainer = std::function<std::vector<double>(const std::vector<LabeledId>& train,
                                                      const std::vector<LabeledId>& validation, std::size_t fold)>;

/// Mean and population standard deviation over the folds where the metric
/// is defined; nullopt when it is undefined in every fold.
struct MetricSummary {
    std::optional<double> mean;
    std::optional<double> stddev;
    std::size_t defined_folds = 0;
};

struct CrossValidationResult {
    FoldPlan plan;
    std::vector<ConfusionMatrix> confusions;
    std::vector<Metrics> fold_metrics;
    MetricSummary accuracy, precision, recall, f1;
};

/// Error from a fold trainer, tagged with the fold index.
class FoldError : public Error {
public:
    FoldError(std::size_t fold, const std::string& message) : Error(message), fold_(fold) {}
    [[nodiscard]] std::size_t fold() const { return fold_; }

private:
    std::size_t fold_;
};

[[nodiscard]] CrossValidationResult cross_validate(const FoldTrainer& trainer, const std::vector<LabeledId>& samples,
                                                   std::size_t k = 5, std::uint64_t seed = 0,
                                                   double threshold = 0.5);

[[nodiscard]] MetricSummary summarize(const std::vector<std::optional<double>>& values);

/// One row of the model comparison table.
struct ReportRow {
    std::string model;
    Metrics metrics;
};

/// CSV with header `Model,Accuracy,Precision,Recall,F1`.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
void write_report_csv(const std::filesystem::path& file, const std::vector<ReportRow>& rows);
[[nodiscard]] std::vector<ReportRow> read_report_csv(const std::filesystem::path& file);

}  // namespace psguard
