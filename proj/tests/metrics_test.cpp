#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "framestamp/metrics.hpp"

using namespace framestamp;

namespace {

std::vector<MatchedPair> random_pairs(std::mt19937_64& rng, std::size_t examples) {
    std::vector<std::vector<double>> preds, truths;
    std::uniform_int_distribution<int> count(1, 30);
    std::uniform_real_distribution<double> time(0.0, 20.0);
    std::normal_distribution<double> err(0.0, 0.08);
    for (std::size_t e = 0; e < examples; ++e) {
        const int n = count(rng);
        std::vector<double> t, p;
        for (int i = 0; i < n; ++i) {
            t.push_back(time(rng));
            p.push_back(t.back() + err(rng));
        }
        preds.push_back(p);
        truths.push_back(t);
    }
    return match_pairs(preds, truths);
}

}  // namespace

TEST(ScoreTest, TwoPairArithmetic) {
    const auto pairs = match_pairs({{1.00, 2.00}}, {{1.05, 2.50}});
    const auto r = report_from_pairs(pairs, {0.1});
    EXPECT_EQ(r.accuracy_by_tolerance.at(0.1), 0.5);
    EXPECT_DOUBLE_EQ(r.mad_s, 0.275);
    EXPECT_EQ(r.n_events, 2u);
}

TEST(ScoreTest, IdentityIsPerfect) {
    const FrameGrid grid(100);
    const auto labels = EventLabels::from_frames({3.5, 10.5, 50.5}, grid);
    std::vector<TimestampPrediction> preds;
    for (int i = 0; i < 3; ++i) preds.push_back(make_prediction(grid, i + 1, labels.times_frames()[static_cast<std::size_t>(i)]));
    const auto r = score({preds}, {labels}, {0.02, 0.04, 0.1});
    for (const auto& [tol, acc] : r.accuracy_by_tolerance) EXPECT_EQ(acc, 1.0);
    EXPECT_EQ(r.mad_s, 0.0);
}

TEST(ScoreTest, MatchesBySortedIndex) {
    const auto r = report_from_pairs(match_pairs({{2.0, 1.0}}, {{1.0, 2.0}}), {0.01});
    EXPECT_EQ(r.mad_s, 0.0);
}

TEST(ScoreTest, CountMismatchNamesExample) {
    try {
        match_pairs({{1.0}, {1.0, 2.0}}, {{1.0}, {1.0}}, {"first", "second"});
        FAIL() << "expected EvaluationError";
    } catch (const EvaluationError& e) {
        EXPECT_NE(std::string(e.what()).find("second"), std::string::npos);
    }
}

TEST(ScoreTest, AccuracyIsNondecreasingInTolerance) {
    std::mt19937_64 rng(1);
    const auto pairs = random_pairs(rng, 50);
    const auto r = stratify(pairs, event_count_buckets(), {0.02, 0.04, 0.1});
    auto check = [](const MetricReport& m) {
        double prev = -1.0;
        for (const auto& [tol, acc] : m.accuracy_by_tolerance) {
            EXPECT_GE(acc, prev);
            EXPECT_GE(acc, 0.0);
            EXPECT_LE(acc, 1.0);
            prev = acc;
        }
    };
    check(r);
    for (const auto& s : r.strata) check(s.report);
}

TEST(ScoreTest, PermutationInvariantOverExamples) {
    std::vector<std::vector<double>> p{{1.0, 2.0}, {3.3}, {0.2, 0.9, 4.0}};
    std::vector<std::vector<double>> t{{1.1, 2.3}, {3.0}, {0.25, 1.0, 3.9}};
    const auto a = report_from_pairs(match_pairs(p, t), kDefaultTolerancesS);
    std::swap(p[0], p[2]);
    std::swap(t[0], t[2]);
    const auto b = report_from_pairs(match_pairs(p, t), kDefaultTolerancesS);
    EXPECT_NEAR(a.mad_s, b.mad_s, 1e-15);
    EXPECT_EQ(a.accuracy_by_tolerance, b.accuracy_by_tolerance);
}

TEST(StratifyTest, EventCountBucketEdges) {
    const auto rule = event_count_buckets();
    auto name = [&](std::size_t n) { return rule.assign(MatchedPair{0, n, 0.0, 0.0}).second; };
    EXPECT_EQ(name(1), "1-5");
    EXPECT_EQ(name(5), "1-5");
    EXPECT_EQ(name(6), "6-10");
    EXPECT_EQ(name(10), "6-10");
    EXPECT_EQ(name(11), "11-15");
    EXPECT_EQ(name(16), "16-20");
    EXPECT_EQ(name(21), "21-25");
    EXPECT_EQ(name(25), "21-25");
    EXPECT_EQ(name(26), "26+");
    EXPECT_EQ(name(300), "26+");
}

TEST(StratifyTest, SingleBucketEqualsPooled) {
    const auto pairs = match_pairs({{1.0, 2.0}, {0.5}}, {{1.02, 2.2}, {0.45}});
    const auto r = stratify(pairs, event_count_buckets());
    ASSERT_EQ(r.strata.size(), 1u);
    EXPECT_EQ(r.strata[0].bucket, "1-5");
    EXPECT_EQ(r.strata[0].report.mad_s, r.mad_s);
    EXPECT_EQ(r.strata[0].report.accuracy_by_tolerance, r.accuracy_by_tolerance);
}

TEST(StratifyTest, TimeBucketsPartitionEvents) {
    const auto pairs = match_pairs({{1.0, 5.0, 7.9}, {3.0, 4.5}}, {{1.0, 5.0, 7.9}, {3.9, 4.1}});
    const auto r = stratify(pairs, time_range_buckets(4.0));
    ASSERT_EQ(r.strata.size(), 2u);
    EXPECT_EQ(r.strata[0].bucket, "0-4s");
    EXPECT_EQ(r.strata[1].bucket, "4-8s");
    EXPECT_EQ(r.strata[0].report.n_events + r.strata[1].report.n_events, r.n_events);
    EXPECT_EQ(r.strata[0].report.n_events, 2u);
}

TEST(StratifyTest, PooledMadIsWeightedMeanOfBuckets) {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const auto pairs = random_pairs(rng, 40);
        for (const auto& rule : {event_count_buckets(), time_range_buckets(4.0)}) {
            const auto r = stratify(pairs, rule);
            double weighted = 0.0;
            std::size_t total = 0;
            for (const auto& s : r.strata) {
                weighted += s.report.mad_s * static_cast<double>(s.report.n_events);
                total += s.report.n_events;
            }
            ASSERT_EQ(total, r.n_events);
            ASSERT_NEAR(weighted / static_cast<double>(total), r.mad_s, 1e-12);
        }
    }
}

TEST(ReportOutputTest, JsonTableAndCsv) {
    const auto pairs = match_pairs({{1.00, 2.00}}, {{1.05, 2.50}});
    const auto r = stratify(pairs, event_count_buckets(), {0.04, 0.1});
    const auto j = report_to_json(r);
    EXPECT_EQ(j.at("n_events"), 2);
    EXPECT_EQ(j.at("accuracy_by_tolerance").at("0.1"), 0.5);
    EXPECT_TRUE(j.at("strata").contains("1-5"));
    const auto table = report_to_table(r);
    EXPECT_NE(table.find("acc@100ms"), std::string::npos);
    EXPECT_NE(table.find("50.0%"), std::string::npos);
    const auto csv = report_to_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "bucket,events,acc@0.04,acc@0.1,mad_s");
}
