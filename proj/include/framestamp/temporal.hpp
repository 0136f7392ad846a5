#pragma once

// Frame grid, piecewise-constant intensity profiles and their piecewise-linear
// cumulative hazards. All times inside this header are in frame units; frame k
// (1-based) covers the half-open interval [k-1, k).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "framestamp/errors.hpp"

namespace framestamp {

inline constexpr double kDefaultFrameDurationS = 0.04;

class FrameGrid {
public:
    FrameGrid(std::size_t num_frames, double frame_duration_s = kDefaultFrameDurationS)
        : num_frames_(num_frames), frame_duration_s_(frame_duration_s) {
        if (num_frames_ < 1) throw DomainError("frame grid needs at least one frame");
        if (!(frame_duration_s_ > 0.0) || !std::isfinite(frame_duration_s_))
            throw DomainError("frame duration must be positive and finite");
    }

    std::size_t num_frames() const noexcept { return num_frames_; }
    double frame_duration_s() const noexcept { return frame_duration_s_; }
    double duration_frames() const noexcept { return static_cast<double>(num_frames_); }
    double duration_s() const noexcept { return duration_frames() * frame_duration_s_; }

    bool operator==(const FrameGrid&) const = default;

private:
    std::size_t num_frames_;
    double frame_duration_s_;
};

inline double frames_to_seconds(const FrameGrid& grid, double t_frames) {
    return t_frames * grid.frame_duration_s();
}

inline double seconds_to_frames(const FrameGrid& grid, double t_s) {
    return t_s / grid.frame_duration_s();
}

/// 0-based index of the frame containing t. A time on a boundary k belongs to
/// the frame that starts there; t == T is clamped into the last frame.
inline std::size_t frame_of(const FrameGrid& grid, double t_frames) {
    if (!(t_frames >= 0.0) || t_frames > grid.duration_frames())
        throw DomainError("time " + std::to_string(t_frames) + " outside [0, " +
                          std::to_string(grid.num_frames()) + "]");
    auto k = static_cast<std::size_t>(std::floor(t_frames));
    return std::min(k, grid.num_frames() - 1);
}

class IntensityProfile {
public:
    IntensityProfile(std::vector<double> rates, FrameGrid grid)
        : rates_(std::move(rates)), grid_(grid) {
        if (rates_.size() != grid_.num_frames())
            throw ShapeError("intensity profile has " + std::to_string(rates_.size()) +
                             " rates for " + std::to_string(grid_.num_frames()) + " frames");
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            if (!(rates_[k] > 0.0) || !std::isfinite(rates_[k]))
                throw DomainError("rate at frame " + std::to_string(k) +
                                  " must be strictly positive and finite");
        }
    }

    /// Builds the profile from per-frame log-intensities.
    static IntensityProfile from_log_rates(std::span<const double> log_rates, double frame_duration_s = kDefaultFrameDurationS) {
        if (log_rates.empty()) throw DomainError("empty log-rate sequence");
        std::vector<double> rates(log_rates.size());
        std::transform(log_rates.begin(), log_rates.end(), rates.begin(),
                       [](double s) { return std::exp(s); });
        return IntensityProfile(std::move(rates), FrameGrid(log_rates.size(), frame_duration_s));
    }

    std::span<const double> rates() const noexcept { return rates_; }
    double rate(std::size_t k) const { return rates_.at(k); }
    const FrameGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return rates_.size(); }

    IntensityProfile scaled(double c) const {
        std::vector<double> r(rates_);
        for (auto& x : r) x *= c;
        return IntensityProfile(std::move(r), grid_);
    }

private:
    std::vector<double> rates_;
    FrameGrid grid_;
};

/// Cumulative hazard Lambda(t): piecewise linear through knots H_0..H_T.
class CumulativeHazard {
public:
    explicit CumulativeHazard(const IntensityProfile& profile)
        : rates_(profile.rates().begin(), profile.rates().end()), knots_(profile.size() + 1, 0.0),
          grid_(profile.grid()) {
        std::partial_sum(rates_.begin(), rates_.end(), knots_.begin() + 1);
    }

    std::span<const double> knots() const noexcept { return knots_; }
    std::span<const double> rates() const noexcept { return rates_; }
    double knot(std::size_t k) const { return knots_.at(k); }
    double total() const noexcept { return knots_.back(); }
    const FrameGrid& grid() const noexcept { return grid_; }

private:
    std::vector<double> rates_;
    std::vector<double> knots_;
    FrameGrid grid_;
};

inline CumulativeHazard build_cumulative(const IntensityProfile& profile) {
    return CumulativeHazard(profile);
}

/// lambda(t) for t in [0, T).
inline double eval_hazard(const IntensityProfile& profile, double t) {
    if (!(t >= 0.0) || !(t < profile.grid().duration_frames()))
        throw DomainError("hazard evaluated outside [0, T): t=" + std::to_string(t));
    return profile.rate(static_cast<std::size_t>(std::floor(t)));
}

/// Lambda(t) for t in [0, T].
inline double eval_cumulative(const CumulativeHazard& hazard, double t) {
    const double T = hazard.grid().duration_frames();
    if (!(t >= 0.0) || t > T)
        throw DomainError("cumulative hazard evaluated outside [0, T]: t=" + std::to_string(t));
    if (t == T) return hazard.total();
    const auto k = static_cast<std::size_t>(std::floor(t));
    return hazard.knot(k) + (t - static_cast<double>(k)) * hazard.rates()[k];
}

/// The unique t in [0, T] with Lambda(t) == z.
inline double invert_cumulative(const CumulativeHazard& hazard, double z) {
    const auto knots = hazard.knots();
    if (!(z >= 0.0) || z > hazard.total())
        throw DomainError("cumulative value outside [0, Lambda(T)]: z=" + std::to_string(z));
    if (z == hazard.total()) return hazard.grid().duration_frames();
    // First knot strictly greater than z closes the containing interval.
    const auto it = std::upper_bound(knots.begin(), knots.end(), z);
    const auto k = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
    const double t = static_cast<double>(k) + (z - knots[k]) / hazard.rates()[k];
    return std::min(t, static_cast<double>(k + 1));
}

/// Ground-truth event times and the per-frame marks derived from them.
class EventLabels {
public:
    static EventLabels from_frames(std::vector<double> times_frames, const FrameGrid& grid) {
        std::vector<double> secs(times_frames.size());
        for (std::size_t i = 0; i < secs.size(); ++i) secs[i] = frames_to_seconds(grid, times_frames[i]);
        return EventLabels(std::move(times_frames), std::move(secs), grid);
    }

    /// Seconds are kept verbatim so that serialization round-trips bit-exactly.
    static EventLabels from_seconds(std::vector<double> times_s, const FrameGrid& grid) {
        std::vector<double> frames(times_s.size());
        for (std::size_t i = 0; i < frames.size(); ++i) {
            double f = seconds_to_frames(grid, times_s[i]);
            // Absorb the rounding of s / duration at the right edge.
            if (f > grid.duration_frames() && f - grid.duration_frames() < 1e-9) f = grid.duration_frames();
            frames[i] = f;
        }
        return EventLabels(std::move(frames), std::move(times_s), grid);
    }

    std::span<const double> times_frames() const noexcept { return times_frames_; }
    std::span<const double> times_s() const noexcept { return times_s_; }
    std::span<const int> marks() const noexcept { return marks_; }
    /// Number of events falling in each frame.
    std::span<const int> multiplicity() const noexcept { return multiplicity_; }
    std::size_t count() const noexcept { return times_frames_.size(); }
    const FrameGrid& grid() const noexcept { return grid_; }

private:
    EventLabels(std::vector<double> frames, std::vector<double> secs, const FrameGrid& grid)
        : times_frames_(std::move(frames)), times_s_(std::move(secs)), grid_(grid),
          marks_(grid.num_frames(), 0), multiplicity_(grid.num_frames(), 0) {
        if (!std::is_sorted(times_frames_.begin(), times_frames_.end()))
            throw DomainError("event times must be sorted nondecreasing");
        for (double t : times_frames_) {
            const std::size_t k = frame_of(grid_, t);
            marks_[k] = 1;
            ++multiplicity_[k];
        }
    }

    std::vector<double> times_frames_;
    std::vector<double> times_s_;
    FrameGrid grid_;
    std::vector<int> marks_;
    std::vector<int> multiplicity_;
};

}  // namespace framestamp
