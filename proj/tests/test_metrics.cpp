#include <algorithm>

#include <doctest.h>

#include "m2d/errors.hpp"
#include "m2d/metrics.hpp"
#include "m2d/rng.hpp"

using namespace m2d;

namespace {

// Independent oracle: per-class tp/fp/fn by direct pair counting, no
// confusion matrix involved.
MetricsReport brute_force(const std::vector<int>& truths, const std::vector<int>& preds, int k) {
    MetricsReport r;
    r.per_class.resize(static_cast<std::size_t>(k));
    r.total = truths.size();
    double f1_sum = 0.0;
    double recall_sum = 0.0;
    int supported = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) correct += truths[i] == preds[i];
    for (int c = 0; c < k; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (truths[i] == c) {
                ++support;
                if (preds[i] == c) ++tp; else ++fn;
            } else if (preds[i] == c) {
                ++fp;
            }
        }
        auto& m = r.per_class[static_cast<std::size_t>(c)];
        m.support = support;
        m.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        m.f1 = m.precision + m.recall > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        f1_sum += m.f1;
        if (support > 0) {
            recall_sum += m.recall;
            ++supported;
        }
    }
    r.macro_f1 = f1_sum / double(k);
    r.balanced_accuracy = supported > 0 ? recall_sum / double(supported) : 0.0;
    r.accuracy = truths.empty() ? 0.0 : double(correct) / double(truths.size());
    return r;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("confusion matrix counting") {
    auto m = confusion_matrix({0, 1, 2}, {0, 1, 2}, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(m[i][j] == (i == j ? 1 : 0));

    m = confusion_matrix({0, 0}, {1, 1}, 3);
    CHECK(m[0][1] == 2);

    m = confusion_matrix({}, {}, 3);
    for (const auto& row : m)
        for (auto v : row) CHECK(v == 0);

    CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 3), Error);
    CHECK_THROWS_AS(confusion_matrix({3}, {0}, 3), Error);
}

TEST_CASE("hand-computed report") {
    const std::vector<std::vector<std::int64_t>> confusion = {
        {2, 0, 0}, {0, 1, 1}, {0, 0, 2}};
    const auto r = report(confusion);
    CHECK(r.per_class[0].f1 == doctest::Approx(1.0));
    CHECK(r.per_class[1].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_class[2].f1 == doctest::Approx(0.8));
    CHECK(r.macro_f1 == doctest::Approx(0.8222).epsilon(1e-3));
    CHECK(r.balanced_accuracy == doctest::Approx(0.8333).epsilon(1e-3));
    CHECK(r.accuracy == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("perfect diagonal") {
    const auto r = report({{5, 0, 0}, {0, 3, 0}, {0, 0, 2}});
    CHECK(r.macro_f1 == doctest::Approx(1.0));
    CHECK(r.balanced_accuracy == doctest::Approx(1.0));
}

TEST_CASE("zero-support class rules") {
    // class 2 has no truth examples; others perfect
    const auto r = report({{4, 0, 0}, {0, 3, 0}, {0, 0, 0}});
    CHECK(r.per_class[2].f1 == 0.0);
    CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.balanced_accuracy == doctest::Approx(1.0));
}

TEST_CASE("report is invariant to example order") {
    Rng rng(41);
    std::vector<int> truths, preds;
    for (int i = 0; i < 200; ++i) {
        truths.push_back(static_cast<int>(rng.below(3)));
        preds.push_back(static_cast<int>(rng.below(3)));
    }
    const auto a = evaluate(truths, preds, 3);
    std::vector<std::size_t> perm(truths.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<int> t2(truths.size()), p2(preds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        t2[i] = truths[perm[i]];
        p2[i] = preds[perm[i]];
    }
    const auto b = evaluate(t2, p2, 3);
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    CHECK(a.balanced_accuracy == doctest::Approx(b.balanced_accuracy).epsilon(1e-12));
    CHECK(a.confusion == b.confusion);
}

TEST_CASE("metrics are invariant under consistent class relabelling") {
    Rng rng(43);
    std::vector<int> truths, preds;
    for (int i = 0; i < 300; ++i) {
        truths.push_back(static_cast<int>(rng.below(3)));
        preds.push_back(static_cast<int>(rng.below(3)));
    }
    const int perm[3] = {2, 0, 1};
    std::vector<int> t2, p2;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        t2.push_back(perm[truths[i]]);
        p2.push_back(perm[preds[i]]);
    }
    const auto a = evaluate(truths, preds, 3);
    const auto b = evaluate(t2, p2, 3);
    CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    CHECK(a.balanced_accuracy == doctest::Approx(b.balanced_accuracy).epsilon(1e-12));
}

TEST_CASE("report agrees exactly with brute force on exhaustive n=4 assignments") {
    // all 3^4 x 3^4 (truth, prediction) assignments
    for (int t = 0; t < 81; ++t)
        for (int p = 0; p < 81; ++p) {
            std::vector<int> truths(4), preds(4);
            int tt = t, pp = p;
            for (int i = 0; i < 4; ++i) {
                truths[static_cast<std::size_t>(i)] = tt % 3;
                preds[static_cast<std::size_t>(i)] = pp % 3;
                tt /= 3;
                pp /= 3;
            }
            const auto a = evaluate(truths, preds, 3);
            const auto b = brute_force(truths, preds, 3);
            REQUIRE(a.macro_f1 == b.macro_f1);
            REQUIRE(a.balanced_accuracy == b.balanced_accuracy);
            REQUIRE(a.accuracy == b.accuracy);
            for (int c = 0; c < 3; ++c) {
                REQUIRE(a.per_class[c].precision == b.per_class[c].precision);
                REQUIRE(a.per_class[c].recall == b.per_class[c].recall);
                REQUIRE(a.per_class[c].f1 == b.per_class[c].f1);
            }
        }
}

TEST_CASE("json serialization carries the headline fields") {
    const auto r = report({{2, 0, 0}, {0, 1, 1}, {0, 0, 2}});
    const std::string j = report_to_json(r);
    CHECK(j.find("macro_f1") != std::string::npos);
    CHECK(j.find("balanced_accuracy") != std::string::npos);
    CHECK(j.find("per_class") != std::string::npos);
    CHECK(j.find("confusion") != std::string::npos);
}

TEST_SUITE_END();
