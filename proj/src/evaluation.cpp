#include "psguard/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "psguard/rng.hpp"

namespace psguard {

ConfusionMatrix confusion(const std::vector<double>& probabilities, const std::vector<int>& labels,
                          double threshold) {
    if (probabilities.size() != labels.size()) {
        throw Error("confusion: " + std::to_string(probabilities.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const bool positive = probabilities[k] >= threshold;
        switch (labels[k]) {
            case 1: ++(positive ? cm.tp : cm.fn); break;
            case 0: ++(positive ? cm.fp : cm.tn); break;
            default: throw Error("confusion: label must be 0 or 1");
        }
    }
    return cm;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

std::string format_metric(const std::optional<double>& value) {
    if (!value) return "undefined";
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << *value;
    return out.str();
}

std::vector<std::string> FoldPlan::training_ids(std::size_t k) const {
    std::vector<std::string> out;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        if (f != k) out.insert(out.end(), folds[f].begin(), folds[f].end());
    }
    return out;
}

FoldPlan kfold(const std::vector<LabeledId>& samples, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("kfold: K must be at least 2");
    std::map<int, std::vector<std::string>> by_label;
    std::unordered_set<std::string> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.id).second) throw Error("kfold: duplicate sample id " + s.id);
        by_label[s.label].push_back(s.id);
    }
    for (const auto& [label, ids] : by_label) {
        if (ids.size() < k) {
            throw Error("kfold: label " + std::to_string(label) + " has " + std::to_string(ids.size()) +
                        " samples, fewer than K=" + std::to_string(k));
        }
    }
    FoldPlan plan;
    plan.folds.resize(k);
    std::size_t offset = 0;
    for (auto& [label, ids] : by_label) {
        std::sort(ids.begin(), ids.end());
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(ids);
        for (const auto& id : ids) {
            plan.folds[offset % k].push_back(id);
            ++offset;
        }
    }
    return plan;
}

MetricSummary summarize(const std::vector<std::optional<double>>& values) {
    MetricSummary s;
    double sum = 0.0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++s.defined_folds;
        }
    }
    if (s.defined_folds == 0) return s;
    const double mean = sum / static_cast<double>(s.defined_folds);
    double sq = 0.0;
    for (const auto& v : values) {
        if (v) sq += (*v - mean) * (*v - mean);
    }
    s.mean = mean;
    s.stddev = std::sqrt(sq / static_cast<double>(s.defined_folds));
    return s;
}

CrossValidationResult cross_validate(const FoldTrainer& trainer, const std::vector<LabeledId>& samples,
                                     std::size_t k, std::uint64_t seed, double threshold) {
    CrossValidationResult result;
    result.plan = kfold(samples, k, seed);
    std::map<std::string, int> label_of;
    for (const auto& s : samples) label_of.emplace(s.id, s.label);
    const auto with_labels = [&](const std::vector<std::string>& ids) {
        std::vector<LabeledId> out;
        out.reserve(ids.size());
        for (const auto& id : ids) out.push_back({id, label_of.at(id)});
        return out;
    };

    for (std::size_t f = 0; f < k; ++f) {
        const auto validation = with_labels(result.plan.folds[f]);
        const auto training = with_labels(result.plan.training_ids(f));
        std::unordered_set<std::string> train_ids;
        for (const auto& s : training) train_ids.insert(s.id);
        for (const auto& s : validation) {
            if (train_ids.count(s.id) != 0) throw FoldError(f, "fold " + std::to_string(f) + ": id leaked " + s.id);
        }
        std::vector<double> probs;
        try {
            probs = trainer(training, validation, f);
        } catch (const std::exception& e) {
            throw FoldError(f, "fold " + std::to_string(f) + ": " + e.what());
        }
        std::vector<int> labels;
        labels.reserve(validation.size());
        for (const auto& s : validation) labels.push_back(s.label);
        if (probs.size() != labels.size()) {
            throw FoldError(f, "fold " + std::to_string(f) + ": trainer returned " + std::to_string(probs.size()) +
                                   " probabilities for " + std::to_string(labels.size()) + " samples");
        }
        const ConfusionMatrix cm = confusion(probs, labels, threshold);
        result.confusions.push_back(cm);
        result.fold_metrics.push_back(metrics(cm));
    }

    const auto collect = [&](auto member) {
        std::vector<std::optional<double>> v;
        for (const auto& m : result.fold_metrics) v.push_back(m.*member);
        return summarize(v);
    };
    result.accuracy = collect(&Metrics::accuracy);
    result.precision = collect(&Metrics::precision);
    result.recall = collect(&Metrics::recall);
    result.f1 = collect(&Metrics::f1);
    return result;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "Model,Accuracy,Precision,Recall,F1\n";
    for (const auto& r : rows) {
        if (r.model.find_first_of(",\n\"") != std::string::npos) throw Error("report: model name needs no quoting");
        out << r.model << ',' << format_metric(r.metrics.accuracy) << ',' << format_metric(r.metrics.precision) << ','
            << format_metric(r.metrics.recall) << ',' << format_metric(r.metrics.f1) << '\n';
    }
}

void write_report_csv(const std::filesystem::path& file, const std::vector<ReportRow>& rows) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    write_report_csv(out, rows);
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != "Model,Accuracy,Precision,Recall,F1") {
        throw Error(file.string() + ": not a report CSV");
    }
    const auto parse_value = [&](const std::string& s) -> std::optional<double> {
        if (s == "undefined") return std::nullopt;
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw Error("");
            return v;
        } catch (const std::exception&) {
            throw Error(file.string() + ": bad metric value '" + s + "'");
        }
    };
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw Error(file.string() + ": expected 5 columns in '" + line + "'");
        rows.push_back({f[0], {parse_value(f[1]), parse_value(f[2]), parse_value(f[3]), parse_value(f[4])}});
    }
    return rows;
}

}  // namespace psguard
