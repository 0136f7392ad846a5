#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "framestamp/synthdata.hpp"

using namespace framestamp;

namespace {

GenConfig small_config() {
    GenConfig c;
    c.num_examples = 20;
    c.duration_frames = {40, 60};
    c.feature_dim = 4;
    c.events_per_example = {1, 4};
    c.seed = 3;
    return c;
}

double energy(std::span<const double> v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
}

std::string serialize(const TrainingSet& s) {
    std::ostringstream out;
    write_dataset(out, s);
    return out.str();
}

}  // namespace

TEST(GenerateTest, NoiselessSingleEventTouchesThreeFrames) {
    GenConfig c = small_config();
    c.noise_sigma = 0.0;
    c.signal_amplitude = 1.0;
    c.events_per_example = {1, 1};
    c.event_time_range_frames = std::pair{5.0, 35.0};
    for (const auto& ex : generate(c).examples) {
        const std::size_t f = frame_of(ex.features.grid(), ex.labels.times_frames()[0]);
        int nonzero = 0;
        for (std::size_t t = 0; t < ex.features.num_frames(); ++t) {
            if (energy(ex.features.frame(t)) > 0.0) {
                ++nonzero;
                EXPECT_LE(std::abs(static_cast<long>(t) - static_cast<long>(f)), 1);
            }
        }
        EXPECT_EQ(nonzero, 3);
    }
}

TEST(GenerateTest, DeterministicInSeed) {
    const auto c = small_config();
    EXPECT_EQ(serialize(generate(c)), serialize(generate(c)));
    auto other = c;
    other.seed = 4;
    EXPECT_NE(serialize(generate(c)), serialize(generate(other)));
}

TEST(GenerateTest, EventRangeIsRespected) {
    GenConfig c = small_config();
    c.num_examples = 1000;
    c.duration_frames = {200, 200};
    c.event_time_range_frames = std::pair{0.0, 100.0};
    double lo = 1e9, hi = -1e9;
    for (const auto& ex : generate(c).examples) {
        for (double t : ex.labels.times_frames()) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        const int n = static_cast<int>(ex.labels.count());
        EXPECT_GE(n, c.events_per_example.lo);
        EXPECT_LE(n, c.events_per_example.hi);
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 100.0 + 1e-9);
}

TEST(GenerateTest, NoiselessEnergyPeaksAtEventFrames) {
    GenConfig c = small_config();
    c.noise_sigma = 0.0;
    c.num_examples = 200;
    for (const auto& ex : generate(c).examples) {
        const auto marks = ex.labels.marks();
        double best_event = 1e300, best_other = 0.0;
        for (std::size_t t = 0; t < ex.features.num_frames(); ++t) {
            const double e = energy(ex.features.frame(t));
            if (marks[t]) best_event = std::min(best_event, e);
            else best_other = std::max(best_other, e);
        }
        EXPECT_GT(best_event, best_other) << ex.id;
    }
}

TEST(GenerateTest, SplitsFollowFractions) {
    GenConfig c = small_config();
    c.num_examples = 50;
    const auto set = generate(c);
    EXPECT_EQ(set.select(Split::train).size(), 40u);
    EXPECT_EQ(set.select(Split::dev).size(), 5u);
    EXPECT_EQ(set.select(Split::test).size(), 5u);
}

TEST(GenerateTest, ImpossibleSeparationIsAnError) {
    GenConfig c = small_config();
    c.events_per_example = {10, 10};
    c.event_time_range_frames = std::pair{0.0, 10.0};
    EXPECT_THROW(generate(c), GenerationError);
    c.event_time_range_frames = std::pair{0.0, 100.0};
    EXPECT_THROW(generate(c), ConfigError);  // beyond the shortest duration
}

TEST(GenerateTest, SeparationCanBeDisabled) {
    GenConfig c = small_config();
    c.events_per_example = {30, 30};
    c.event_time_range_frames = std::pair{10.0, 12.0};
    c.min_separation_frames = 0.0;
    const auto set = generate(c);
    bool shared = false;
    for (const auto& ex : set.examples)
        for (int m : ex.labels.multiplicity()) shared |= m > 1;
    EXPECT_TRUE(shared);
}

TEST(DatasetIoTest, WriteReadWriteIsByteIdentical) {
    const auto set = generate(small_config());
    const std::string first = serialize(set);
    std::istringstream in(first);
    const auto back = read_dataset(in);
    EXPECT_EQ(serialize(back), first);
    ASSERT_EQ(back.examples.size(), set.examples.size());
    for (std::size_t j = 0; j < set.examples.size(); ++j) {
        const auto a = set.examples[j].labels.times_frames();
        const auto b = back.examples[j].labels.times_frames();
        ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
}

TEST(DatasetIoTest, MissingFieldIsNamed) {
    std::istringstream in(
        "{\"id\":\"a\",\"frame_ms\":40.0,\"num_frames\":1,\"feature_dim\":1,\"features\":[[0.0]],\"query\":0,"
        "\"split\":\"train\"}\n");
    try {
        read_dataset(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("event_times_s"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
}

TEST(DatasetIoTest, FrameRateMismatchAcrossLines) {
    const std::string a =
        "{\"id\":\"a\",\"frame_ms\":40.0,\"num_frames\":1,\"feature_dim\":1,\"features\":[[0.0]],\"query\":0,"
        "\"event_times_s\":[0.01],\"split\":\"train\"}\n";
    std::string b = a;
    b.replace(b.find("40.0"), 4, "20.0");
    std::istringstream in(a + b);
    try {
        read_dataset(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(DatasetIoTest, MalformedJsonReportsLine) {
    std::istringstream in("\n{not json}\n");
    try {
        read_dataset(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}
