#pragma once

// Span-based entry points for foreign callers that hold plain contiguous
// arrays (e.g. a Python extension). They only adapt arguments and delegate.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "framestamp/errors.hpp"
#include "framestamp/inference.hpp"
#include "framestamp/losses.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp::dense {

inline LossResult poisson_nll(std::span<const double> scores, std::span<const double> event_times_frames,
                              double frame_duration_s = kDefaultFrameDurationS) {
    const FrameGrid grid(scores.size(), frame_duration_s);
    std::vector<double> times(event_times_frames.begin(), event_times_frames.end());
    std::sort(times.begin(), times.end());
    return framestamp::poisson_nll(FrameScores({scores.begin(), scores.end()}, grid),
                                   EventLabels::from_frames(std::move(times), grid));
}

/// marks[t] in {0, 1}; weight unset means the per-example automatic ratio.
inline LossResult binary_loss(std::span<const double> scores, std::span<const int> marks,
                              std::optional<double> weight = std::nullopt,
                              double frame_duration_s = kDefaultFrameDurationS) {
    if (marks.size() != scores.size()) throw ShapeError("marks and scores differ in length");
    const FrameGrid grid(scores.size(), frame_duration_s);
    std::vector<double> centres;
    for (std::size_t t = 0; t < marks.size(); ++t) {
        if (marks[t] != 0 && marks[t] != 1) throw DomainError("marks must be 0 or 1");
        if (marks[t] == 1) centres.push_back(static_cast<double>(t) + 0.5);
    }
    return framestamp::binary_loss(FrameScores({scores.begin(), scores.end()}, grid),
                                   EventLabels::from_frames(std::move(centres), grid),
                                   weight ? ClassWeight::fixed(*weight) : ClassWeight::automatic());
}

/// Extracted timestamps in seconds. mode is "binary" or "poisson".
inline std::vector<double> extract(std::span<const double> scores, std::string_view mode, std::size_t count,
                                   double frame_duration_s = kDefaultFrameDurationS) {
    const FrameGrid grid(scores.size(), frame_duration_s);
    const FrameScores fs({scores.begin(), scores.end()}, grid);
    std::vector<TimestampPrediction> preds;
    if (mode == "binary") preds = binary_extract(fs, count);
    else if (mode == "poisson") preds = poisson_extract(fs, count);
    else throw ConfigError("unknown extraction mode '" + std::string(mode) + "'");
    std::vector<double> out;
    out.reserve(preds.size());
    for (const auto& p : preds) out.push_back(p.time_s);
    return out;
}

}  // namespace framestamp::dense
