#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "framestamp/errors.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp {

/// Per-frame feature vectors (T x feature_dim, row-major) standing in for
/// query-conditioned decoder outputs.
class FrameFeatures {
public:
    FrameFeatures(std::vector<double> values, std::size_t feature_dim, FrameGrid grid, int query_id = 0)
        : values_(std::move(values)), feature_dim_(feature_dim), grid_(grid), query_id_(query_id) {
        if (feature_dim_ < 1) throw ShapeError("feature dimension must be at least 1");
        if (values_.size() != grid_.num_frames() * feature_dim_)
            throw ShapeError("feature matrix holds " + std::to_string(values_.size()) + " values, expected " +
                             std::to_string(grid_.num_frames()) + " x " + std::to_string(feature_dim_));
        for (double v : values_)
            if (!std::isfinite(v)) throw DomainError("non-finite feature value");
    }

    std::size_t num_frames() const noexcept { return grid_.num_frames(); }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    const FrameGrid& grid() const noexcept { return grid_; }
    int query_id() const noexcept { return query_id_; }
    std::span<const double> values() const noexcept { return values_; }

    std::span<const double> frame(std::size_t t) const {
        return std::span<const double>(values_).subspan(t * feature_dim_, feature_dim_);
    }

private:
    std::vector<double> values_;
    std::size_t feature_dim_;
    FrameGrid grid_;
    int query_id_;
};

}  // namespace framestamp
