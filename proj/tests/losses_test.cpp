#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "framestamp/losses.hpp"
#include "test_support.hpp"

using namespace framestamp;
using ftest::central_difference;
using ftest::relative_error;

namespace {

FrameScores scores_of(std::vector<double> v) {
    const std::size_t T = v.size();
    return FrameScores(std::move(v), FrameGrid(T));
}

// Direct evaluation of the conditional Poisson NLL, written independently of
// poisson_nll: -sum log lambda(t_j) + n log sum_k lambda_k.
double poisson_reference(std::span<const double> scores, std::span<const double> times) {
    double total = 0.0;
    for (double s : scores) total += std::exp(s);
    double out = static_cast<double>(times.size()) * std::log(total);
    for (double t : times) {
        auto k = static_cast<std::size_t>(std::floor(t));
        if (k == scores.size()) --k;
        out -= scores[k];
    }
    return out;
}

// Direct weighted BCE with p = 1 / (1 + e^-s).
double binary_reference(std::span<const double> scores, std::span<const int> marks, double w) {
    double out = 0.0;
    for (std::size_t t = 0; t < scores.size(); ++t) {
        const double p = 1.0 / (1.0 + std::exp(-scores[t]));
        out -= marks[t] ? w * std::log(p) : std::log(1.0 - p);
    }
    return out;
}

}  // namespace

TEST(BinaryLossTest, SymmetricHalfProbability) {
    const FrameGrid grid(4);
    const auto labels = EventLabels::from_frames({1.5}, grid);
    const auto r = binary_loss(scores_of({0, 0, 0, 0}), labels, ClassWeight::fixed(3.0));
    EXPECT_NEAR(r.value, 6.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(r.value, 4.1589, 1e-4);
    EXPECT_DOUBLE_EQ(r.gradient[1], 3.0 * (0.5 - 1.0));
    EXPECT_DOUBLE_EQ(r.gradient[0], 0.5);
}

TEST(BinaryLossTest, AutomaticWeightIsNegativeToPositiveRatio) {
    const FrameGrid grid(750);
    const auto labels = EventLabels::from_frames({10.2, 400.7}, grid);
    EXPECT_DOUBLE_EQ(ClassWeight::automatic().resolve(labels.marks()), 374.0);
}

TEST(BinaryLossTest, AutomaticWeightNeedsBothClasses) {
    const FrameGrid grid(2);
    EXPECT_THROW(binary_loss(scores_of({0, 0}), EventLabels::from_frames({}, grid), ClassWeight::automatic()),
                 ConfigError);
    EXPECT_THROW(binary_loss(scores_of({0, 0}), EventLabels::from_frames({0.5, 1.5}, grid), ClassWeight::automatic()),
                 ConfigError);
    EXPECT_THROW(ClassWeight::fixed(0.0), ConfigError);
}

TEST(BinaryLossTest, FixedExampleMatchesFiniteDifferences) {
    const FrameGrid grid(4);
    const auto labels = EventLabels::from_frames({1.5}, grid);
    const std::vector<double> logits{-1, 2, 0, 1};
    const auto r = binary_loss(scores_of(logits), labels, ClassWeight::fixed(3.0));
    EXPECT_NEAR(r.value, binary_reference(logits, labels.marks(), 3.0), 1e-12);
    const auto fd = central_difference(
        [&](std::span<const double> s) { return binary_reference(s, labels.marks(), 3.0); }, logits, 1e-5);
    EXPECT_LT(relative_error(r.gradient, fd), 1e-6);
}

TEST(BinaryLossTest, SaturatedLogitsStayFinite) {
    const FrameGrid grid(3);
    const auto labels = EventLabels::from_frames({0.5}, grid);
    const auto r = binary_loss(scores_of({-800, 800, -800}), labels, ClassWeight::fixed(2.0));
    EXPECT_TRUE(std::isfinite(r.value));
    for (double g : r.gradient) EXPECT_TRUE(std::isfinite(g));
    EXPECT_NEAR(r.value, 2.0 * 800.0 + 800.0, 1e-9);
}

TEST(BinaryLossTest, MinimizedAtMatchingLabels) {
    const FrameGrid grid(6);
    const auto labels = EventLabels::from_frames({1.2, 4.9}, grid);
    std::vector<double> logits(6);
    for (std::size_t t = 0; t < 6; ++t) logits[t] = labels.marks()[t] ? 20.0 : -20.0;
    EXPECT_LT(binary_loss(scores_of(logits), labels, ClassWeight::automatic()).value, 1e-6);
}

TEST(BinaryLossTest, AutomaticWeightBalancesClassTerms) {
    // With equal p everywhere the positive and negative terms carry equal total weight.
    const FrameGrid grid(10);
    const auto labels = EventLabels::from_frames({2.5, 7.5}, grid);
    const double w = ClassWeight::automatic().resolve(labels.marks());
    double pos = 0.0, neg = 0.0;
    for (int m : labels.marks()) (m ? pos : neg) += m ? w : 1.0;
    EXPECT_DOUBLE_EQ(pos, neg);
    // Gradient at p = 0.5: positives push with w * (-0.5), negatives with 0.5.
    const auto r = binary_loss(scores_of(std::vector<double>(10, 0.0)), labels, ClassWeight::automatic());
    double sum = 0.0;
    for (double g : r.gradient) sum += g;
    EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(PoissonLossTest, UniformSingleEvent) {
    const FrameGrid grid(4);
    const auto r = poisson_nll(scores_of({0, 0, 0, 0}), EventLabels::from_frames({1.5}, grid));
    EXPECT_NEAR(r.value, std::log(4.0), 1e-12);
    const std::vector<double> expected{0.25, -0.75, 0.25, 0.25};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(r.gradient[k], expected[k], 1e-12);
}

TEST(PoissonLossTest, TwoEventExample) {
    const FrameGrid grid(4);
    const std::vector<double> s{std::log(2.0), 0, 0, 0};
    const auto r = poisson_nll(scores_of(s), EventLabels::from_frames({0.25, 2.5}, grid));
    // Frozen from an independent evaluation of the formula.
    EXPECT_NEAR(r.value, 2.525728644308255, 1e-12);
}

TEST(PoissonLossTest, RejectsEmptyEventSet) {
    EXPECT_THROW(poisson_nll(scores_of({0, 0}), EventLabels::from_frames({}, FrameGrid(2))), DomainError);
}

TEST(PoissonLossTest, ShapeMismatch) {
    EXPECT_THROW(poisson_nll(scores_of({0, 0, 0}), EventLabels::from_frames({0.5}, FrameGrid(2))), ShapeError);
}

TEST(PoissonLossTest, MultipleEventsInOneFrame) {
    const FrameGrid grid(3);
    const std::vector<double> s{0.3, -0.2, 0.5};
    const auto labels = EventLabels::from_frames({1.1, 1.4, 1.9}, grid);
    const auto r = poisson_nll(scores_of(s), labels);
    EXPECT_NEAR(r.value, poisson_reference(s, labels.times_frames()), 1e-12);
    EXPECT_NEAR(r.gradient[1], -3.0 + 3.0 * std::exp(-0.2) / (std::exp(0.3) + std::exp(-0.2) + std::exp(0.5)), 1e-12);
}

TEST(LossGradientProperty, RandomInstancesMatchFiniteDifferences) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(2, 64);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t T = len(rng);
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(8, T - 1))(rng);
        const FrameGrid grid(T);
        const auto scores = ftest::normal_vector(rng, T);
        const auto labels = EventLabels::from_frames(ftest::random_event_times(rng, n, T), grid);

        const auto p = poisson_nll(scores_of(scores), labels);
        ASSERT_NEAR(p.value, poisson_reference(scores, labels.times_frames()), 1e-10);
        const auto pfd = central_difference(
            [&](std::span<const double> s) { return poisson_reference(s, labels.times_frames()); }, scores);
        ASSERT_LT(relative_error(p.gradient, pfd), 1e-5) << "poisson, rep " << rep;

        const double w = ClassWeight::automatic().resolve(labels.marks());
        const auto b = binary_loss(scores_of(scores), labels, ClassWeight::automatic());
        const auto bfd = central_difference(
            [&](std::span<const double> s) { return binary_reference(s, labels.marks(), w); }, scores);
        ASSERT_LT(relative_error(b.gradient, bfd), 1e-5) << "binary, rep " << rep;
    }
}

TEST(LossGradientProperty, PoissonShiftInvariance) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> shift(-5.0, 5.0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t T = 32;
        const FrameGrid grid(T);
        auto s = ftest::normal_vector(rng, T);
        const auto labels = EventLabels::from_frames(ftest::random_event_times(rng, 4, T), grid);
        const auto base = poisson_nll(scores_of(s), labels);
        const double c = shift(rng);
        for (auto& x : s) x += c;
        const auto moved = poisson_nll(scores_of(s), labels);
        ASSERT_NEAR(moved.value, base.value, 1e-9);
        double sum = 0.0;
        for (double g : moved.gradient) sum += g;
        ASSERT_NEAR(sum, 0.0, 1e-9);
    }
}

TEST(LossGradientProperty, ConditionalDensityIntegratesToOne) {
    // Importance-sampled integral of n! prod lambda(t_i) / Lambda(T)^n over
    // the ordered simplex, proposal = sorted uniforms on [0, T].
    std::mt19937_64 rng(77);
    const std::size_t T = 5;
    const auto logs = ftest::normal_vector(rng, T);
    std::vector<double> rates(T);
    double total = 0.0;
    for (std::size_t k = 0; k < T; ++k) total += (rates[k] = std::exp(logs[k]));
    std::uniform_real_distribution<double> u(0.0, static_cast<double>(T));
    for (std::size_t n : {1u, 2u, 3u}) {
        double acc = 0.0;
        const int samples = 1'000'000;
        for (int j = 0; j < samples; ++j) {
            double w = 1.0;
            for (std::size_t i = 0; i < n; ++i) w *= rates[static_cast<std::size_t>(u(rng))] * T / total;
            acc += w;
        }
        EXPECT_NEAR(acc / samples, 1.0, 0.02) << "n = " << n;
    }
}

TEST(InterpolatedLossTest, CombinesValueAndGradient) {
    const LossResult a{1.0, {0.5, -0.5}};
    const LossResult b{2.0, {1.0, 3.0}};
    const auto zero = interpolated_loss(a, b, 0.0);
    EXPECT_EQ(zero.value, a.value);
    EXPECT_EQ(zero.gradient, a.gradient);
    const auto r = interpolated_loss(a, b, 0.05);
    EXPECT_DOUBLE_EQ(r.value, 1.1);
    EXPECT_DOUBLE_EQ(r.gradient[1], -0.5 + 0.15);
    EXPECT_THROW(interpolated_loss(a, LossResult{0.0, {1.0}}, 0.1), ShapeError);
    EXPECT_THROW(interpolated_loss(a, b, -1.0), ConfigError);
}

TEST(InterpolatedLossTest, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t T = 16;
        const FrameGrid grid(T);
        const auto s = ftest::normal_vector(rng, T);
        const auto labels = EventLabels::from_frames(ftest::random_event_times(rng, 3, T), grid);
        const double c = 0.05 + rep * 0.1;
        const auto r = interpolated_loss(binary_loss(scores_of(s), labels, ClassWeight::fixed(4.0)),
                                         poisson_nll(scores_of(s), labels), c);
        const auto fd = central_difference(
            [&](std::span<const double> x) {
                return binary_reference(x, labels.marks(), 4.0) + c * poisson_reference(x, labels.times_frames());
            },
            s);
        ASSERT_LT(relative_error(r.gradient, fd), 1e-6);
    }
}
