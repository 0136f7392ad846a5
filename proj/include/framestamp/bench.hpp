#pragma once

// Cost model for single-pass frame-level extraction versus autoregressive
// timestamp generation. The baseline reruns the same scorer over the whole
// sequence once per emitted character, with a fixed number of characters per
// timestamp.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "framestamp/features.hpp"
#include "framestamp/predict.hpp"
#include "framestamp/scorer.hpp"

namespace framestamp {

inline constexpr std::size_t kCharsPerTimestamp = 10;

struct BenchRow {
    std::size_t frames = 0;
    std::size_t timestamps = 0;
    std::size_t single_pass_invocations = 0;
    std::size_t baseline_invocations = 0;
    double single_pass_s = 0.0;
    double baseline_s = 0.0;

    double speedup() const { return single_pass_s > 0.0 ? baseline_s / single_pass_s : 0.0; }
};

inline FrameFeatures random_features(std::size_t frames, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> v(frames * dim);
    for (auto& x : v) x = nd(rng);
    return FrameFeatures(std::move(v), dim, FrameGrid(frames));
}

/// True when scoring a sequence delayed by `shift` frames yields the original
/// scores delayed by the same amount (bitwise).
inline bool shift_equivariant(const ScorerModel& model, const FrameFeatures& features, std::size_t shift) {
    const std::size_t T = features.num_frames();
    const std::size_t d = features.feature_dim();
    std::vector<double> padded((T + shift) * d, 0.0);
    std::copy(features.values().begin(), features.values().end(), padded.begin() + static_cast<std::ptrdiff_t>(shift * d));
    const FrameFeatures moved(std::move(padded), d, FrameGrid(T + shift, features.grid().frame_duration_s()));
    const auto a = score_frames(model, features);
    const auto b = score_frames(model, moved);
    for (std::size_t t = 0; t < T; ++t)
        if (a[t] != b[t + shift]) return false;
    return true;
}

inline BenchRow run_bench(const ScorerModel& model, std::size_t frames, std::size_t timestamps, int repeats,
                          std::uint64_t seed = 0) {
    using clock = std::chrono::steady_clock;
    const FrameFeatures features = random_features(frames, model.config().feature_dim, seed);
    BenchRow row;
    row.frames = frames;
    row.timestamps = timestamps;
    row.single_pass_s = std::numeric_limits<double>::infinity();
    row.baseline_s = std::numeric_limits<double>::infinity();
    volatile double sink = 0.0;

    for (int r = 0; r < std::max(1, repeats); ++r) {
        std::size_t calls = 0;
        auto t0 = clock::now();
        {
            ++calls;
            const auto preds = predict_timestamps(model, features, timestamps);
            sink = sink + preds.back().time_frames;
        }
        auto t1 = clock::now();
        row.single_pass_invocations = calls;
        row.single_pass_s = std::min(row.single_pass_s, std::chrono::duration<double>(t1 - t0).count());

        calls = 0;
        t0 = clock::now();
        for (std::size_t c = 0; c < kCharsPerTimestamp * timestamps; ++c) {
            ++calls;
            const auto scores = score_frames(model, features);
            sink = sink + scores[c % frames];
        }
        t1 = clock::now();
        row.baseline_invocations = calls;
        row.baseline_s = std::min(row.baseline_s, std::chrono::duration<double>(t1 - t0).count());
    }
    return row;
}

inline nlohmann::ordered_json bench_to_json(const std::vector<BenchRow>& rows, bool shift_ok) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        out.push_back({{"frames", r.frames},
                       {"timestamps", r.timestamps},
                       {"single_pass_invocations", r.single_pass_invocations},
                       {"baseline_invocations", r.baseline_invocations},
                       {"single_pass_s", r.single_pass_s},
                       {"baseline_s", r.baseline_s},
                       {"speedup", r.speedup()}});
    return {{"chars_per_timestamp", kCharsPerTimestamp}, {"shift_equivariance", shift_ok}, {"rows", out}};
}

}  // namespace framestamp
