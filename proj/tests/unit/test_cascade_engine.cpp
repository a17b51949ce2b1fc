#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cascade/cascade_engine.hpp"
#include "cascade/errors.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using namespace cascade;

namespace {

// Four hand-built rows: little/big confidences and whether each is right.
// Little: 0.9 ok, 0.8 ok, 0.3 wrong, 0.1 wrong. Big: ok, wrong, ok, wrong.
AlignedRecordSet four_rows(double little_macs = 1.0, double big_macs = 5.0) {
    RecordSet little, big;
    little.model = {"little", little_macs, 0, 0};
    big.model = {"big", big_macs, 0, 0};
    const double lc[] = {0.9, 0.8, 0.3, 0.1};
    const bool lok[] = {true, true, false, false};
    const bool bok[] = {true, false, true, true};
    for (int i = 0; i < 4; ++i) {
        const auto id = "s" + std::to_string(i);
        little.records.push_back({id, lok[i] ? 1 : 2, lc[i], 1});
        big.records.push_back({id, bok[i] ? 1 : 3, 0.7, 1});
    }
    const RecordSet sets[] = {little, big};
    return align(sets);
}

CascadeConfig config_of(const AlignedRecordSet& a, std::vector<double> thresholds) {
    return {a.models(), std::move(thresholds)};
}

bool close_rel(double a, double b, double rel = 1e-9) {
    return std::fabs(a - b) <= rel * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace

TEST(Gate, TieStaysAtCheaperStage) {
    const double t[] = {0.9};
    const double c[] = {0.9, 0.2};
    EXPECT_EQ(route_stage(c, t), 0u);
    const double below[] = {0.899999, 0.2};
    EXPECT_EQ(route_stage(below, t), 1u);
}

TEST(Gate, ZeroThresholdNeverForwards) {
    const double t[] = {0.0};
    const double c[] = {0.0, 1.0};
    EXPECT_EQ(route_stage(c, t), 0u);
}

TEST(Gate, ThreeStageExample) {
    const double t[] = {0.74, 0.26};
    const double c[] = {0.5, 0.8, 0.1};
    EXPECT_EQ(route_stage(c, t), 1u);
    const double c2[] = {0.5, 0.2, 0.1};
    EXPECT_EQ(route_stage(c2, t), 2u);
    const double c3[] = {0.74, 0.0, 0.0};
    EXPECT_EQ(route_stage(c3, t), 0u);
}

TEST(Evaluate, HandComputedPoint) {
    const auto a = four_rows();
    // T = 0.5: rows 0,1 stay (both right), rows 2,3 go to big (both right).
    const auto p = evaluate(a, config_of(a, {0.5}));
    EXPECT_EQ(p.n_correct, 4);
    EXPECT_DOUBLE_EQ(p.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(p.expected_macs, 1.0 + 0.5 * 5.0);
    EXPECT_EQ(p.stage_counts, (std::vector<std::int64_t>{2, 2}));
    EXPECT_DOUBLE_EQ(p.forwarded_fraction(), 0.5);

    // T = 0.85: row 1 is forwarded too and the big model gets it wrong.
    const auto q = evaluate(a, config_of(a, {0.85}));
    EXPECT_EQ(q.n_correct, 3);
    EXPECT_DOUBLE_EQ(q.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(q.expected_macs, 1.0 + 0.75 * 5.0);
}

TEST(Evaluate, OneForwardedRow) {
    RecordSet little, big;
    little.model = {"little", 1.0, 0, 0};
    big.model = {"big", 10.0, 0, 0};
    const double lc[] = {0.9, 0.6, 0.4, 0.95};
    const bool lok[] = {true, false, false, true};
    const bool bok[] = {true, true, true, false};
    for (int i = 0; i < 4; ++i) {
        const auto id = "s" + std::to_string(i + 1);
        little.records.push_back({id, lok[i] ? 0 : 1, lc[i], 0});
        big.records.push_back({id, bok[i] ? 0 : 2, 0.5, 0});
    }
    const RecordSet sets[] = {little, big};
    const auto a = align(sets);
    const auto p = evaluate(a, config_of(a, {0.5}));
    EXPECT_EQ(p.stage_counts, (std::vector<std::int64_t>{3, 1}));
    EXPECT_EQ(route(a, 2, config_of(a, {0.5})).stage, 1u);  // s3
    EXPECT_DOUBLE_EQ(p.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(p.expected_macs, 3.5);
}

TEST(Evaluate, Endpoints) {
    const auto a = four_rows();
    const auto all_little = evaluate(a, config_of(a, {0.0}));
    EXPECT_DOUBLE_EQ(all_little.accuracy, a.accuracy(0));
    EXPECT_DOUBLE_EQ(all_little.expected_macs, 1.0);
    const auto all_big = evaluate(a, config_of(a, {1.0}));  // 0.9 < 1.0, everything forwarded
    EXPECT_DOUBLE_EQ(all_big.accuracy, a.accuracy(1));
    EXPECT_DOUBLE_EQ(all_big.expected_macs, 6.0);
}

TEST(Evaluate, ConfigValidation) {
    const auto a = four_rows();
    EXPECT_THROW(evaluate(a, config_of(a, {})), ConfigError);
    EXPECT_THROW(evaluate(a, config_of(a, {1.5})), ConfigError);
    EXPECT_THROW(evaluate(a, config_of(a, {-0.1})), ConfigError);
    EXPECT_THROW(evaluate(a, config_of(a, {std::nan("")})), ConfigError);
    CascadeConfig wrong{{{"absent", 1.0, 0, 0}, a.models()[1]}, {0.5}};
    EXPECT_THROW(evaluate(a, wrong), ConfigError);
    CascadeConfig macs_mismatch{{{"little", 2.0, 0, 0}, a.models()[1]}, {0.5}};
    EXPECT_THROW(evaluate(a, macs_mismatch), ConfigError);
}

TEST(Evaluate, MatchesNaiveOracle) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> lattice(0, 50);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t k = 2 + trial % 2;
        const auto sets = cascade::testing::random_record_sets(rng, 1 + (trial * 37) % 400, k);
        const auto a = align(sets);
        std::vector<double> t(k - 1);
        for (auto& x : t) x = unit(rng) < 0.5 ? lattice(rng) / 50.0 : unit(rng);
        const auto p = evaluate(a, config_of(a, t));
        const auto o = cascade::testing::naive_cascade(sets, t);
        ASSERT_EQ(p.n_correct, o.correct);
        ASSERT_TRUE(close_rel(p.expected_macs, o.cost)) << p.expected_macs << " vs " << o.cost;
        for (std::size_t r = 0; r < a.row_count(); ++r) {
            ASSERT_EQ(a.sample_ids()[r], o.ids[r]);
            ASSERT_EQ(route(a, r, config_of(a, t)).stage, static_cast<std::size_t>(o.stage[r]));
        }
    }
}

TEST(ExpectedMacs, FromCounts) {
    const ModelProfile chain[] = {{"a", 1.0, 0, 0}, {"b", 2.0, 0, 0}, {"c", 10.0, 0, 0}};
    const std::int64_t counts[] = {5, 3, 2};
    // 1 + 0.5 * 2 + 0.2 * 10
    EXPECT_DOUBLE_EQ(expected_macs_from_counts(chain, counts), 4.0);
}

TEST(Sweep, ForwardedFractionIsEcdfBelowThreshold) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const auto sets = cascade::testing::random_record_sets(rng, 50 + trial * 11, 2);
        const auto a = align(sets);
        const auto grid = cascade::testing::random_grid(rng, 30);
        const auto curve = sweep(a, a.models(), grid);
        ASSERT_EQ(curve.points.size(), grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            ASSERT_DOUBLE_EQ(curve.points[i].forwarded_fraction(), cascade::testing::ecdf_below(sets[0], grid[i]));
    }
}

TEST(Sweep, CostIsMonotoneInThreshold) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sets = cascade::testing::random_record_sets(rng, 1 + trial * 7, 2);
        const auto a = align(sets);
        const auto curve = sweep(a, a.models(), default_grid());
        for (std::size_t i = 1; i < curve.points.size(); ++i)
            ASSERT_LE(curve.points[i - 1].expected_macs, curve.points[i].expected_macs);
        ASSERT_DOUBLE_EQ(curve.points.front().expected_macs, a.models()[0].macs_per_sample);
        ASSERT_DOUBLE_EQ(curve.points.front().accuracy, a.accuracy(0));
    }
}

TEST(Sweep, DefaultGridIsTheTwoHundredthsLattice) {
    const auto g = default_grid();
    ASSERT_EQ(g.size(), 50u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g[12], 12.0 / 50.0);
    EXPECT_EQ(g.back(), 49.0 / 50.0);
    EXPECT_EQ(default_grid(4), (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
    EXPECT_THROW(default_grid(0), ConfigError);
}

TEST(Sweep, ZeroOneGridGivesEndpoints) {
    const auto a = four_rows();
    const double grid[] = {0.0, 1.0};
    const auto c = sweep(a, a.models(), grid);
    EXPECT_DOUBLE_EQ(c.points[0].accuracy, a.accuracy(0));
    EXPECT_DOUBLE_EQ(c.points[0].expected_macs, 1.0);
    // Only rows with confidence exactly 1.0 stay at the little model.
    EXPECT_DOUBLE_EQ(c.points[1].forwarded_fraction(), 1.0);
    EXPECT_DOUBLE_EQ(c.points[1].accuracy, a.accuracy(1));
}

TEST(Sweep, RejectsBadGrids) {
    const auto a = four_rows();
    const double unsorted[] = {0.5, 0.2};
    const double out_of_range[] = {0.2, 1.2};
    EXPECT_THROW(sweep(a, a.models(), unsorted), ConfigError);
    EXPECT_THROW(sweep(a, a.models(), out_of_range), ConfigError);
    EXPECT_THROW(sweep(a, a.models(), std::span<const double>{}), ConfigError);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    std::mt19937_64 rng(29);
    const auto sets = cascade::testing::random_record_sets(rng, 3000, 3);
    const auto a = align(sets);
    const auto pair = std::vector<ModelProfile>{a.models()[0], a.models()[2]};
    const auto one = sweep(a, pair, default_grid(), 1);
    const auto many = sweep(a, pair, default_grid(), 7);
    for (std::size_t i = 0; i < one.points.size(); ++i) {
        EXPECT_EQ(one.points[i].n_correct, many.points[i].n_correct);
        EXPECT_EQ(one.points[i].expected_macs, many.points[i].expected_macs);
    }
    const auto g = default_grid(10);
    const auto k1 = sweep_kpass(a, a.models(), g, g, 1);
    const auto k4 = sweep_kpass(a, a.models(), g, g, 4);
    ASSERT_EQ(k1.size(), 100u);
    for (std::size_t i = 0; i < k1.size(); ++i) {
        EXPECT_EQ(k1[i].stage_counts, k4[i].stage_counts);
        EXPECT_EQ(k1[i].thresholds, k4[i].thresholds);
    }
}

TEST(KPass, DegeneratesToSimplerCascades) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto sets = cascade::testing::random_record_sets(rng, 200, 3);
        for (auto& r : sets[0].records) r.confidence = std::min(r.confidence, 0.999999);
        const auto a = align(sets);
        const auto g = default_grid(25);
        const auto points = sweep_kpass(a, a.models(), g, g);
        const std::vector<ModelProfile> little_big{a.models()[1], a.models()[2]};
        const std::size_t cols[] = {1, 2};
        const auto lb = a.select_models(cols);
        for (const auto& p : points) {
            if (p.thresholds[0] == 0.0) {
                ASSERT_EQ(p.stage_counts[0], p.n_rows);  // tiny answers everything
                ASSERT_EQ(p.n_correct, a.correct_count(0));
                ASSERT_DOUBLE_EQ(p.expected_macs, a.models()[0].macs_per_sample);
            }
        }
        // T2 = 0: anything the tiny model forwards is answered by the little one.
        for (const auto& p : points) {
            if (p.thresholds[1] != 0.0) continue;
            ASSERT_EQ(p.stage_counts[2], 0);
        }
        // T1 = 1 (everything past tiny) and T2 on the grid: equals the two-pass
        // little+big curve plus the tiny model's cost.
        const auto pass2 = sweep(lb, little_big, g);
        const std::vector<ModelProfile> chain = a.models();
        for (std::size_t j = 0; j < g.size(); ++j) {
            const auto p = evaluate(a, {chain, {1.0, g[j]}});
            ASSERT_EQ(p.n_correct, pass2.points[j].n_correct);
            ASSERT_NEAR(p.expected_macs, pass2.points[j].expected_macs + chain[0].macs_per_sample, 1e-9);
        }
    }
}

TEST(Scaling, CompoundFormula) {
    EXPECT_DOUBLE_EQ(estimate_scaling_cost({2, 2, 2, 1}), 32.0);
    EXPECT_DOUBLE_EQ(estimate_scaling_cost({}), 1.0);
    EXPECT_NEAR(estimate_scaling_cost({2.7, 2.0, 3.1, 1.0}), 2.7 * 2.7 * 4.0 * 3.1, 1e-12);
    EXPECT_NEAR(estimate_scaling_cost({2.7, 2.0, 3.1, 1.0}), 90.396, 1e-9);
}
