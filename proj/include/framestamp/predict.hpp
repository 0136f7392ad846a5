#pragma once

#include <cstddef>
#include <vector>

#include "framestamp/inference.hpp"
#include "framestamp/scorer.hpp"

namespace framestamp {

/// Scores one example and extracts `count` timestamps with the head's rule.
inline std::vector<TimestampPrediction> predict_timestamps(const ScorerModel& model, const FrameFeatures& features,
                                                           std::size_t count) {
    const FrameScores scores = score_frames(model, features);
    if (model.config().head_kind == HeadKind::binary) return binary_extract(scores, count);
    return poisson_extract(scores, count);
}

}  // namespace framestamp
