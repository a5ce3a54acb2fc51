#include <doctest.h>

#include <cmath>
#include <map>

#include "psguard/corpus_stats.hpp"
#include "psguard/synth.hpp"
#include "support.hpp"

using namespace psguard;
using doctest::Approx;

namespace {

double reference_entropy(const std::string& s) {
    std::map<char, double> counts;
    for (char c : s) counts[c] += 1.0;
    double h = 0.0;
    for (const auto& [c, n] : counts) h += n / s.size() * std::log(s.size() / n);
    return h / std::log(2.0);
}

double mean_entropy(const std::vector<SourceScript>& scripts, int label) {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : scripts) {
        if (*s.label != label) continue;
        sum += reference_entropy(s.text);
        ++n;
    }
    return sum / n;
}

}  // namespace

TEST_SUITE("entropy") {
    TEST_CASE("small cases") {
        CHECK(shannon_entropy("aaaa") == 0.0);
        CHECK(shannon_entropy("ab") == Approx(1.0));
        CHECK(shannon_entropy("abcd") == Approx(2.0));
        CHECK_THROWS_AS((void)shannon_entropy(""), Error);
        std::string all;
        for (int b = 0; b < 256; ++b) all += static_cast<char>(b);
        CHECK(shannon_entropy(all) == Approx(8.0));
    }

    TEST_CASE("bounds, reference agreement and shuffle invariance") {
        Rng rng(4);
        for (int t = 0; t < 500; ++t) {
            std::string s = testing::random_bytes(rng, 300);
            if (s.empty()) continue;
            const double h = shannon_entropy(s);
            REQUIRE(h >= 0.0);
            REQUIRE(h <= 8.0);
            REQUIRE(h == Approx(reference_entropy(s)).epsilon(1e-12));
            std::vector<char> v(s.begin(), s.end());
            rng.shuffle(v);
            s.assign(v.begin(), v.end());
            REQUIRE(shannon_entropy(s) == Approx(h).epsilon(1e-12));
        }
    }
}

TEST_SUITE("corpus report") {
    TEST_CASE("toy corpus counts and medians") {
        const std::vector<SourceScript> s = {
            {"a", "aa\nbb\n", 0, ""}, {"b", "abcd", 0, ""}, {"c", "x", 1, ""}, {"d", "xyz\n", 1, ""}};
        const auto r = corpus_report(s);
        CHECK(r.total() == 4);
        REQUIRE(r.by_label.size() == 2);
        CHECK(r.by_label.at(0).count == 2);
        CHECK(r.by_label.at(1).count == 2);
        CHECK(r.by_label.at(0).median_bytes == 5.0);
        CHECK(r.by_label.at(1).median_bytes == 2.5);
        CHECK(r.scripts[0].line_count == 2);
        CHECK(r.scripts[1].line_count == 1);
        CHECK(r.by_label.at(0).line_histogram[0] == 2);
        const std::string text = format_report(r);
        CHECK(text.rfind("script_id,label,byte_size,line_count,entropy\n", 0) == 0);
        CHECK(text.find("[summary label=1]") != std::string::npos);
    }

    TEST_CASE("single label and empty corpus") {
        const auto r = corpus_report({{"a", "x", 1, ""}});
        CHECK(r.by_label.size() == 1);
        CHECK_THROWS_AS((void)corpus_report({}), Error);
        CHECK_THROWS_AS((void)corpus_report({{"a", "x", std::nullopt, ""}}), Error);
    }

    TEST_CASE("line counts and overflow bucket") {
        CHECK(count_lines("") == 0);
        CHECK(count_lines("a") == 1);
        CHECK(count_lines("a\n") == 1);
        CHECK(count_lines("a\nb") == 2);
        std::string big;
        for (int i = 0; i < 1500; ++i) big += "x\n";
        const auto r = corpus_report({{"big", big, 0, ""}, {"mid", std::string(250, '\n'), 0, ""}});
        CHECK(r.by_label.at(0).line_histogram[kLineBuckets - 1] == 1);
        CHECK(r.by_label.at(0).line_histogram[2] == 1);
    }

    TEST_CASE("counts always sum to the corpus size") {
        Rng rng(9);
        for (int t = 0; t < 100; ++t) {
            std::vector<SourceScript> s;
            const std::size_t n = 1 + rng.uniform_index(30);
            for (std::size_t i = 0; i < n; ++i) {
                s.push_back({std::to_string(i), testing::random_bytes(rng, 50), static_cast<int>(rng.uniform_index(2)), ""});
            }
            const auto r = corpus_report(s);
            std::size_t total = 0, hist = 0;
            for (const auto& [label, summary] : r.by_label) {
                total += summary.count;
                for (auto b : summary.line_histogram) hist += b;
            }
            REQUIRE(total == n);
            REQUIRE(hist == n);
        }
    }

    TEST_CASE("obfuscated malicious class has higher mean entropy than benign") {
        for (std::uint64_t seed : {1, 7, 42, 1234}) {
            const auto scripts = generate({seed, 20, 20, 1.0});
            const auto r = corpus_report(scripts);
            CHECK(r.by_label.at(1).entropy_mean > r.by_label.at(0).entropy_mean);
            CHECK(r.by_label.at(1).entropy_mean == Approx(mean_entropy(scripts, 1)).epsilon(1e-12));
            CHECK(r.by_label.at(0).entropy_mean == Approx(mean_entropy(scripts, 0)).epsilon(1e-12));
        }
    }
}
