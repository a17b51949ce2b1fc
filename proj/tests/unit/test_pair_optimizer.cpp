#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "cascade/errors.hpp"
#include "cascade/manifest.hpp"
#include "cascade/pair_optimizer.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using namespace cascade;

namespace {

CascadePoint point(double threshold, std::int64_t correct, std::int64_t n, double macs) {
    CascadePoint p;
    p.thresholds = {threshold};
    p.n_rows = n;
    p.n_correct = correct;
    p.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    p.expected_macs = macs;
    p.stage_counts = {n, 0};
    return p;
}

TradeoffCurve curve_of(std::vector<CascadePoint> points, double little_macs = 1.0, double big_macs = 10.0) {
    return {{"little", little_macs, 0, 0}, {"big", big_macs, 0, 0}, std::move(points)};
}

SelectionCriterion baseline(std::int64_t correct, std::int64_t n, double tol = 0.0) {
    return {correct, n, tol};
}

}  // namespace

TEST(Criterion, ExactAtTheBoundary) {
    const auto c = baseline(843, 1000);
    EXPECT_TRUE(c.feasible(point(0, 843, 1000, 1)));
    EXPECT_FALSE(c.feasible(point(0, 842, 1000, 1)));
    // Same ratio, different denominators.
    EXPECT_TRUE(baseline(1, 3).feasible(point(0, 2, 6, 1)));
    const auto loose = baseline(843, 1000, 0.001);
    EXPECT_TRUE(loose.feasible(point(0, 842, 1000, 1)));
    EXPECT_FALSE(loose.feasible(point(0, 841, 1000, 1)));
    EXPECT_FALSE(baseline(843, 1000, -1.0).feasible(point(0, 1000, 1000, 1)));
}

TEST(Select, LittleMeetsBaselineMeansReplacement) {
    auto first = point(0.0, 900, 1000, 1.0);
    first.stage_counts = {1000, 0};
    auto second = point(0.02, 901, 1000, 1.5);
    second.stage_counts = {950, 50};
    const auto r = select_threshold(curve_of({first, second}), baseline(880, 1000));
    EXPECT_TRUE(r.feasible);
    EXPECT_TRUE(r.replacement);
    EXPECT_EQ(r.index, 0u);
    EXPECT_DOUBLE_EQ(r.config.thresholds[0], 0.0);
    EXPECT_DOUBLE_EQ(r.macs_reduction, 0.9);
}

TEST(Select, OnlyTheMostExpensivePointIsFeasible) {
    // Big model at 10 GMACs, cascade costs more than big alone.
    auto a = point(0.0, 700, 1000, 1.0);
    auto b = point(0.5, 780, 1000, 6.0);
    auto c = point(0.98, 800, 1000, 10.5);
    c.stage_counts = {10, 990};
    const auto r = select_threshold(curve_of({a, b, c}), baseline(800, 1000));
    EXPECT_TRUE(r.feasible);
    EXPECT_FALSE(r.replacement);
    EXPECT_EQ(r.index, 2u);
    EXPECT_NEAR(r.macs_reduction, -0.05, 1e-12);
}

TEST(Select, NothingFeasibleReportsMostAccurate) {
    const auto r = select_threshold(curve_of({point(0.0, 700, 1000, 1), point(0.5, 760, 1000, 4),
                                              point(0.9, 750, 1000, 9)}),
                                    baseline(800, 1000));
    EXPECT_FALSE(r.feasible);
    EXPECT_FALSE(r.replacement);
    EXPECT_EQ(r.index, 1u);
}

TEST(Select, AgreesWithExhaustiveScan) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::int64_t> correct(0, 500);
    std::uniform_int_distribution<int> tol_pick(0, 3);
    const double tols[] = {0.0, 0.001, 0.01, -0.5};
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<CascadePoint> pts;
        std::vector<std::pair<std::int64_t, std::int64_t>> raw;
        for (int i = 0; i < 50; ++i) {
            const auto c = correct(rng);
            pts.push_back(point(i / 50.0, c, 500, 1.0 + i));
            raw.emplace_back(c, 500);
        }
        const auto base = correct(rng);
        const double tol = tols[tol_pick(rng)];
        const auto r = select_threshold(curve_of(pts), baseline(base, 500, tol));
        const long expect = cascade::testing::exhaustive_first_feasible(raw, base, 500, tol);
        ASSERT_EQ(r.feasible, expect >= 0);
        if (expect >= 0) ASSERT_EQ(r.index, static_cast<std::size_t>(expect));
    }
}

TEST(Select, FromModelUsesBigAccuracy) {
    std::mt19937_64 rng(43);
    const auto sets = cascade::testing::random_record_sets(rng, 300, 2);
    const auto a = align(sets);
    const auto c = SelectionCriterion::from_model(a, "model1", 0.0);
    EXPECT_EQ(c.baseline_correct, a.correct_count(1));
    EXPECT_EQ(c.baseline_total, 300);
    EXPECT_THROW(SelectionCriterion::from_model(a, "nope", 0.0), ConfigError);
    // The threshold that forwards everything reproduces the big model, so it
    // is always feasible at zero tolerance.
    const double grid[] = {0.0, 0.5, 1.0};
    const auto curve = sweep(a, a.models(), grid);
    auto all_forwarded = std::all_of(sets[0].records.begin(), sets[0].records.end(),
                                     [](const PredictionRecord& r) { return r.confidence < 1.0; });
    if (all_forwarded) EXPECT_TRUE(select_threshold(curve, c).feasible);
}

TEST(KPassSelect, CheapestFeasibleAcrossTheGrid) {
    const ModelProfile chain[] = {{"t", 1, 0, 0}, {"l", 3, 0, 0}, {"b", 10, 0, 0}};
    std::vector<CascadePoint> pts{point(0.0, 80, 100, 5.0), point(0.1, 90, 100, 4.0), point(0.2, 95, 100, 7.0),
                                  point(0.3, 91, 100, 4.0)};
    for (auto& p : pts) p.thresholds.push_back(0.5);
    const auto r = select_kpass(pts, chain, baseline(90, 100));
    EXPECT_TRUE(r.feasible);
    EXPECT_EQ(r.index, 1u);  // ties on cost keep input order
    EXPECT_DOUBLE_EQ(r.macs_reduction, 0.6);
    EXPECT_EQ(r.config.chain_label(), "t+l+b");
}

TEST(Pareto, SinglePoint) {
    const CascadePoint pts[] = {point(0, 1, 2, 3)};
    EXPECT_EQ(pareto_front_indices(pts), std::vector<std::size_t>{0});
}

TEST(Pareto, CheaperAndMoreAccurateDominates) {
    const CascadePoint pts[] = {point(0, 80, 100, 5.0), point(0.1, 81, 100, 4.0)};
    EXPECT_EQ(pareto_front_indices(pts), std::vector<std::size_t>{1});
}

TEST(Pareto, IdenticalPointsBothSurvive) {
    const CascadePoint pts[] = {point(0, 80, 100, 5.0), point(0.1, 80, 100, 5.0), point(0.2, 79, 100, 5.0)};
    EXPECT_EQ(pareto_front_indices(pts), (std::vector<std::size_t>{0, 1}));
}

TEST(Pareto, MatchesBruteForce) {
    std::mt19937_64 rng(47);
    std::uniform_int_distribution<std::int64_t> correct(0, 40);
    std::uniform_int_distribution<int> macs(1, 30);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<CascadePoint> pts;
        std::vector<cascade::testing::SimplePoint> simple;
        for (int i = 0; i < 200; ++i) {
            pts.push_back(point(0, correct(rng), 40, macs(rng) / 4.0));
            simple.push_back({pts.back().accuracy, pts.back().expected_macs});
        }
        auto got = pareto_front_indices(pts);
        auto want = cascade::testing::brute_force_front(simple);
        for (std::size_t i = 1; i < got.size(); ++i) ASSERT_LE(pts[got[i - 1]].expected_macs, pts[got[i]].expected_macs);
        std::sort(got.begin(), got.end());
        ASSERT_EQ(got, want);
    }
}

TEST(Dispersion, PopulationStandardDeviation) {
    // Accuracy deltas and MACs reductions of one pair tuned on three datasets,
    // with the mean and SD rounded the way they are usually reported.
    struct Row {
        double a[3];
        double m[3];
        double mean_a, sd_a, mean_m, sd_m;
    };
    const Row rows[] = {
        {{0.02, -0.01, -0.11}, {-47, -48, -49}, -0.03, 0.06, -48, 1},
        {{0.01, 0.05, 0.09}, {-81, -80, -78}, 0.05, 0.03, -80, 1},
        {{0.00, 0.01, -0.16}, {-59, -53, -67}, -0.05, 0.08, -60, 6},
        {{0.01, -0.01, -0.12}, {-13, -18, -51}, -0.04, 0.06, -27, 17},
    };
    for (const auto& r : rows) {
        const auto da = dispersion(r.a);
        const auto dm = dispersion(r.m);
        EXPECT_NEAR(da.mean, r.mean_a, 0.005);
        EXPECT_NEAR(da.stddev, r.sd_a, 0.005);
        EXPECT_NEAR(dm.mean, r.mean_m, 0.5);
        EXPECT_NEAR(dm.stddev, r.sd_m, 0.5);
    }
    const double one[] = {3.0};
    EXPECT_DOUBLE_EQ(dispersion(one).stddev, 0.0);
}

TEST(CrossEvaluate, TuningRowMatchesSelection) {
    std::mt19937_64 rng(53);
    auto sets = cascade::testing::random_record_sets(rng, 400, 2);
    const auto tuning = align(sets);
    for (auto& s : sets) s.dataset_name = "other";
    auto target_sets = cascade::testing::random_record_sets(rng, 300, 2);
    for (std::size_t m = 0; m < 2; ++m) {
        target_sets[m].model = sets[m].model;
        target_sets[m].dataset_name = "target";
    }
    const auto target = align(target_sets);

    const auto curve = sweep(tuning, tuning.models(), default_grid());
    const auto crit = SelectionCriterion::from_model(tuning, "model1", 0.0);
    const auto sel = select_threshold(curve, crit);
    const AlignedRecordSet* targets[] = {&target};
    const auto report = cross_evaluate(sel.config, tuning, targets);
    ASSERT_EQ(report.datasets.size(), 2u);
    EXPECT_EQ(report.datasets[0].dataset_name, "random");
    EXPECT_EQ(report.datasets[0].point.n_correct, sel.point.n_correct);
    EXPECT_DOUBLE_EQ(report.datasets[0].macs_reduction, sel.macs_reduction);
    EXPECT_DOUBLE_EQ(report.datasets[0].big_accuracy, tuning.accuracy(1));
    EXPECT_EQ(report.datasets[1].dataset_name, "target");
    EXPECT_EQ(report.datasets[1].point.n_correct, evaluate(target, sel.config).n_correct);
    EXPECT_NEAR(report.datasets[1].accuracy_delta, report.datasets[1].point.accuracy - target.accuracy(1), 1e-15);
}

TEST(Robustness, SelfReferenceHasZeroSpread) {
    std::mt19937_64 rng(59);
    const auto sets = cascade::testing::random_record_sets(rng, 500, 2);
    const auto a = align(sets);
    const AlignedRecordSet* tuning[] = {&a, &a, &a};
    const auto rep = threshold_robustness(a.models(), tuning, a, default_grid(), 0.0);
    ASSERT_EQ(rep.entries.size(), 3u);
    EXPECT_NEAR(rep.accuracy_delta.stddev, 0.0, 1e-12);
    EXPECT_NEAR(rep.macs_reduction.stddev, 0.0, 1e-12);
    const auto sel = select_threshold(sweep(a, a.models(), default_grid()),
                                      SelectionCriterion::from_model(a, "model1", 0.0));
    EXPECT_EQ(rep.entries[0].selection.config.thresholds, sel.config.thresholds);
    EXPECT_NEAR(rep.macs_reduction.mean, sel.macs_reduction, 1e-12);
}

TEST(CrossEvaluate, HarderTargetSavesLess) {
    const auto m = load_manifest(std::filesystem::path(CASCADE_FIXTURE_DIR) / "synthetic" / "manifest.json");
    const auto tuning = load_aligned(m.tuning());
    const auto target = load_aligned(*m.targets().at(0));
    const AlignedRecordSet* targets[] = {&target};
    for (double t : default_grid(10)) {
        const std::size_t cols[] = {0, 2};
        const auto pair = tuning.select_models(cols);
        const auto rep = cross_evaluate({pair.models(), {t}}, tuning, targets);
        const auto& own = rep.datasets[0];
        const auto& other = rep.datasets[1];
        if (other.point.forwarded_fraction() > own.point.forwarded_fraction())
            EXPECT_LE(other.macs_reduction, own.macs_reduction) << "T=" << t;
    }
}
