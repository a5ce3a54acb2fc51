#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "psguard/evaluation.hpp"
#include "support.hpp"

using namespace psguard;
using doctest::Approx;

namespace {

/// Brute-force recomputation straight from (prediction, label) pairs.
struct Oracle {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    Oracle(const std::vector<double>& p, const std::vector<int>& y, double threshold) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const bool pos = !(p[i] < threshold);
            if (pos && y[i] == 1) ++tp;
            if (pos && y[i] == 0) ++fp;
            if (!pos && y[i] == 1) ++fn;
            if (!pos && y[i] == 0) ++tn;
        }
    }
};

std::vector<LabeledId> make_ids(std::size_t benign, std::size_t malicious) {
    std::vector<LabeledId> out;
    for (std::size_t i = 0; i < benign; ++i) out.push_back({"b" + std::to_string(i), 0});
    for (std::size_t i = 0; i < malicious; ++i) out.push_back({"m" + std::to_string(i), 1});
    return out;
}

void check_plan(const FoldPlan& plan, const std::vector<LabeledId>& ids, std::size_t k) {
    REQUIRE(plan.k() == k);
    std::multiset<std::string> seen;
    std::map<std::string, int> label;
    for (const auto& i : ids) label[i.id] = i.label;
    std::vector<std::map<int, std::size_t>> per(k);
    for (std::size_t f = 0; f < k; ++f) {
        for (const auto& id : plan.folds[f]) {
            seen.insert(id);
            ++per[f][label.at(id)];
        }
    }
    std::multiset<std::string> all;
    for (const auto& i : ids) all.insert(i.id);
    REQUIRE(seen == all);  // disjoint and covering
    for (int l : {0, 1}) {
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& p : per) {
            const std::size_t n = p.count(l) ? p.at(l) : 0;
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        REQUIRE(hi - lo <= 1);
    }
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : plan.folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
    }
    REQUIRE(hi - lo <= 1);
}

}  // namespace

TEST_SUITE("metrics") {
    TEST_CASE("confusion examples") {
        CHECK(confusion({0.9, 0.2}, {1, 0}) == ConfusionMatrix{1, 0, 0, 1});
        const auto all_pos = confusion({1.0, 1.0, 1.0, 1.0}, {1, 0, 1, 0});
        CHECK(all_pos.fp == 2);
        CHECK(all_pos.fn == 0);
        CHECK(confusion({0.0, 0.1}, {0, 1}, 0.0) == ConfusionMatrix{1, 1, 0, 0});
        CHECK(confusion({0.5}, {1}) == ConfusionMatrix{1, 0, 0, 0});
        CHECK_THROWS_AS((void)confusion({0.5}, {1, 0}), Error);
        CHECK_THROWS_AS((void)confusion({0.5}, {2}), Error);
    }

    TEST_CASE("fixture tp=3 fp=1 fn=0 tn=6") {
        const auto m = metrics({3, 1, 0, 6});
        CHECK(*m.recall == 1.0);
        CHECK(*m.precision == 0.75);
        CHECK(*m.accuracy == 0.9);
        CHECK(*m.f1 == Approx(2 * 0.75 / 1.75));
    }

    TEST_CASE("undefined values are marked, not zero") {
        const auto m = metrics({0, 0, 2, 3});
        CHECK_FALSE(m.precision.has_value());
        CHECK(*m.recall == 0.0);
        CHECK_FALSE(m.f1.has_value());
        const auto n = metrics({0, 2, 0, 3});
        CHECK_FALSE(n.recall.has_value());
        CHECK(*n.precision == 0.0);
        CHECK_FALSE(n.f1.has_value());
        const auto z = metrics({0, 1, 1, 0});
        CHECK(*z.precision == 0.0);
        CHECK_FALSE(z.f1.has_value());
        CHECK_THROWS_AS((void)metrics({}), Error);
        CHECK(format_metric(std::nullopt) == "undefined");
        CHECK(format_metric(0.953) == "0.9530");
    }

    TEST_CASE("agrees with brute force on random vectors") {
        Rng rng(123);
        for (int t = 0; t < 1000; ++t) {
            const std::size_t n = 1 + rng.uniform_index(60);
            std::vector<double> p(n);
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = rng.bernoulli(0.1) ? 0.5 : rng.uniform01();
                y[i] = static_cast<int>(rng.uniform_index(2));
            }
            const double th = rng.bernoulli(0.5) ? 0.5 : rng.uniform01();
            const auto cm = confusion(p, y, th);
            const Oracle o(p, y, th);
            REQUIRE(static_cast<double>(cm.tp) == o.tp);
            REQUIRE(static_cast<double>(cm.fp) == o.fp);
            REQUIRE(static_cast<double>(cm.fn) == o.fn);
            REQUIRE(static_cast<double>(cm.tn) == o.tn);
            const auto m = metrics(cm);
            REQUIRE(*m.accuracy == Approx((o.tp + o.tn) / n).epsilon(1e-15));
            REQUIRE(m.precision.has_value() == (o.tp + o.fp > 0));
            REQUIRE(m.recall.has_value() == (o.tp + o.fn > 0));
            if (m.precision) REQUIRE(*m.precision == Approx(o.tp / (o.tp + o.fp)).epsilon(1e-15));
            if (m.recall) REQUIRE(*m.recall == Approx(o.tp / (o.tp + o.fn)).epsilon(1e-15));
            if (m.f1) REQUIRE(*m.f1 == Approx(2 * o.tp / (2 * o.tp + o.fp + o.fn)).epsilon(1e-12));
            else REQUIRE((!m.precision || !m.recall || o.tp == 0));
        }
    }

    TEST_CASE("shared fixture file matches its stored expectations") {
        std::istringstream in(testing::slurp(testing::golden("metrics_fixture.csv")));
        std::string line;
        std::getline(in, line);
        std::vector<double> p;
        std::vector<int> y;
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            p.push_back(std::stod(line.substr(0, comma)));
            y.push_back(std::stoi(line.substr(comma + 1)));
        }
        const auto expected = nlohmann::json::parse(testing::slurp(testing::golden("metrics_fixture.json")));
        const auto cm = confusion(p, y, expected["threshold"].get<double>());
        CHECK(cm.tp == expected["tp"].get<std::size_t>());
        CHECK(cm.fp == expected["fp"].get<std::size_t>());
        CHECK(cm.fn == expected["fn"].get<std::size_t>());
        CHECK(cm.tn == expected["tn"].get<std::size_t>());
        const auto m = metrics(cm);
        for (const auto& [name, value] : {std::pair{"accuracy", m.accuracy}, std::pair{"precision", m.precision},
                                          std::pair{"recall", m.recall}, std::pair{"f1", m.f1}}) {
            CHECK(std::abs(*value - expected[name].get<double>()) <= 1e-9);
        }
    }

    TEST_CASE("raising the threshold never increases recall") {
        Rng rng(5);
        for (int t = 0; t < 200; ++t) {
            const std::size_t n = 2 + rng.uniform_index(40);
            std::vector<double> p(n);
            std::vector<int> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = rng.uniform01();
                y[i] = static_cast<int>(i % 2);
            }
            double prev = 2.0;
            for (double th = 0.0; th <= 1.0001; th += 0.05) {
                const double r = *metrics(confusion(p, y, th)).recall;
                REQUIRE(r <= prev);
                prev = r;
            }
        }
    }

    TEST_CASE("summaries skip undefined folds and use the population deviation") {
        const auto s = summarize({1.0, std::nullopt, 0.5});
        CHECK(s.defined_folds == 2);
        CHECK(*s.mean == 0.75);
        CHECK(*s.stddev == 0.25);
        const auto none = summarize({std::nullopt, std::nullopt});
        CHECK_FALSE(none.mean.has_value());
        CHECK(none.defined_folds == 0);
    }
}

TEST_SUITE("kfold") {
    TEST_CASE("ten samples into five folds") {
        const auto ids = make_ids(5, 5);
        const auto plan = kfold(ids, 5, 1);
        for (const auto& f : plan.folds) {
            REQUIRE(f.size() == 2);
            CHECK(f[0][0] != f[1][0]);  // one per label
        }
        check_plan(plan, ids, 5);
    }

    TEST_CASE("six benign and four malicious into two folds") {
        const auto ids = make_ids(6, 4);
        const auto plan = kfold(ids, 2, 3);
        for (const auto& f : plan.folds) {
            std::size_t b = 0, m = 0;
            for (const auto& id : f) (id[0] == 'b' ? b : m)++;
            CHECK(b == 3);
            CHECK(m == 2);
        }
    }

    TEST_CASE("plans are deterministic and seed dependent") {
        const auto ids = make_ids(20, 20);
        CHECK(kfold(ids, 5, 9).folds == kfold(ids, 5, 9).folds);
        CHECK(kfold(ids, 5, 9).folds != kfold(ids, 5, 10).folds);
    }

    TEST_CASE("partition laws over random inputs") {
        Rng rng(77);
        for (int t = 0; t < 500; ++t) {
            const std::size_t k = 2 + rng.uniform_index(9);
            const std::size_t nb = k + rng.uniform_index(60), nm = k + rng.uniform_index(60);
            auto ids = make_ids(nb, nm);
            rng.shuffle(ids);
            const auto plan = kfold(ids, k, rng.next());
            check_plan(plan, ids, k);
            for (std::size_t f = 0; f < k; ++f) {
                const auto tr = plan.training_ids(f);
                REQUIRE(tr.size() + plan.folds[f].size() == ids.size());
                std::set<std::string> val(plan.folds[f].begin(), plan.folds[f].end());
                for (const auto& id : tr) REQUIRE(val.count(id) == 0);
            }
        }
    }

    TEST_CASE("invalid plans") {
        CHECK_THROWS_AS((void)kfold(make_ids(4, 10), 5), Error);
        CHECK_THROWS_AS((void)kfold(make_ids(10, 10), 1), Error);
        auto dup = make_ids(10, 10);
        dup[3].id = dup[2].id;
        CHECK_THROWS_AS((void)kfold(dup, 5), Error);
    }
}

TEST_SUITE("cross validation") {
    TEST_CASE("constant classifier has recall one in every fold") {
        const auto ids = make_ids(12, 13);
        const auto r = cross_validate(
            [](const std::vector<LabeledId>&, const std::vector<LabeledId>& val, std::size_t) {
                return std::vector<double>(val.size(), 0.5);
            },
            ids, 5, 2);
        REQUIRE(r.fold_metrics.size() == 5);
        for (const auto& m : r.fold_metrics) CHECK(*m.recall == 1.0);
        CHECK(*r.recall.mean == 1.0);
        CHECK(*r.recall.stddev == 0.0);
    }

    TEST_CASE("training never sees validation ids") {
        Rng rng(3);
        for (int t = 0; t < 100; ++t) {
            const std::size_t k = 2 + rng.uniform_index(5);
            const auto ids = make_ids(k + rng.uniform_index(20), k + rng.uniform_index(20));
            std::size_t calls = 0;
            const auto r = cross_validate(
                [&](const std::vector<LabeledId>& train, const std::vector<LabeledId>& val, std::size_t fold) {
                    REQUIRE(fold == calls++);
                    std::set<std::string> seen;
                    for (const auto& x : train) seen.insert(x.id);
                    for (const auto& x : val) REQUIRE(seen.count(x.id) == 0);
                    REQUIRE(train.size() + val.size() == ids.size());
                    std::vector<double> p;
                    for (const auto& x : val) p.push_back(x.label == 1 ? 0.9 : 0.1);  // perfect oracle
                    return p;
                },
                ids, k, rng.next());
            REQUIRE(calls == k);
            REQUIRE(*r.accuracy.mean == 1.0);
        }
    }

    TEST_CASE("trainer errors carry the fold index") {
        const auto ids = make_ids(10, 10);
        try {
            (void)cross_validate(
                [](const std::vector<LabeledId>&, const std::vector<LabeledId>& val, std::size_t fold) {
                    if (fold == 2) throw Error("boom");
                    return std::vector<double>(val.size(), 0.0);
                },
                ids, 5, 1);
            FAIL("expected FoldError");
        } catch (const FoldError& e) {
            CHECK(e.fold() == 2);
            CHECK(std::string(e.what()).find("boom") != std::string::npos);
        }
        CHECK_THROWS_AS((void)cross_validate(
                            [](const std::vector<LabeledId>&, const std::vector<LabeledId>&, std::size_t) {
                                return std::vector<double>{};
                            },
                            ids, 5, 1),
                        FoldError);
    }
}

TEST_SUITE("report") {
    TEST_CASE("comparison table round trip") {
        testing::TempDir dir("report");
        const std::vector<ReportRow> rows = {{"AST-based LSTM", {0.9, 0.75, 1.0, 0.857142857}},
                                             {"Non-AST LSTM", {0.5, std::nullopt, 0.0, std::nullopt}}};
        write_report_csv(dir / "r.csv", rows);
        CHECK(testing::slurp(dir / "r.csv") ==
              "Model,Accuracy,Precision,Recall,F1\nAST-based LSTM,0.9000,0.7500,1.0000,0.8571\n"
              "Non-AST LSTM,0.5000,undefined,0.0000,undefined\n");
        const auto back = read_report_csv(dir / "r.csv");
        REQUIRE(back.size() == 2);
        CHECK(back[0].model == "AST-based LSTM");
        CHECK(*back[0].metrics.f1 == Approx(0.8571));
        CHECK_FALSE(back[1].metrics.precision.has_value());
    }
}
