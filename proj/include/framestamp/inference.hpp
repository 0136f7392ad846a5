#pragma once

// Timestamp extraction from per-frame scores.
//
// Binary head: top-k frames, reported at frame midpoints.
//
// Poisson head: given n events, the i-th event time has marginal density
//   p(t) ~ Lambda(t)^(i-1) * (Lambda(T) - Lambda(t))^(n-i) * lambda(t)
// obtained by mapping the uniform order statistics of the rescaled process
// back through z = Lambda(t). Inside one frame lambda is constant and Lambda
// is linear, so p is a Beta kernel in z and its maximum over the frame is at
// a knot or at the Beta mode z* = Lambda(T) (i-1)/(n-1). The exact mode is
// therefore found by evaluating O(1) candidates per frame.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "framestamp/errors.hpp"
#include "framestamp/losses.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp {

struct TimestampPrediction {
    int event_index = 1;  // 1-based
    double time_frames = 0.0;
    double time_s = 0.0;
    std::size_t frame_index = 0;  // 0-based frame containing time_frames
};

inline TimestampPrediction make_prediction(const FrameGrid& grid, int event_index, double time_frames) {
    return {event_index, time_frames, frames_to_seconds(grid, time_frames), frame_of(grid, time_frames)};
}

/// Marginal posterior of the i-th of n event times.
class PosteriorDensity {
public:
    PosteriorDensity(IntensityProfile profile, std::size_t n, std::size_t i)
        : profile_(std::move(profile)), hazard_(profile_), n_(n), i_(i) {
        if (n_ < 1) throw DomainError("posterior needs at least one event");
        if (i_ < 1 || i_ > n_)
            throw DomainError("event index " + std::to_string(i_) + " outside [1, " + std::to_string(n_) + "]");
    }

    const IntensityProfile& profile() const noexcept { return profile_; }
    const CumulativeHazard& hazard() const noexcept { return hazard_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t i() const noexcept { return i_; }

private:
    IntensityProfile profile_;
    CumulativeHazard hazard_;
    std::size_t n_;
    std::size_t i_;
};

/// Unnormalized log p(t) on [0, T]. Terms with a zero exponent are dropped,
/// so 0 * log 0 counts as 0; a positive exponent on log 0 gives -infinity.
/// At t == T the last frame's rate is used.
inline double posterior_log_density(const PosteriorDensity& density, double t) {
    const auto& grid = density.profile().grid();
    if (!(t >= 0.0) || t > grid.duration_frames())
        throw DomainError("posterior evaluated outside [0, T]: t=" + std::to_string(t));
    const double cum = eval_cumulative(density.hazard(), t);
    const double rest = std::max(0.0, density.hazard().total() - cum);
    const double rate = density.profile().rate(frame_of(grid, t));
    const double a = static_cast<double>(density.i() - 1);
    const double b = static_cast<double>(density.n() - density.i());
    double out = std::log(rate);
    if (a > 0.0) out += a * std::log(cum);
    if (b > 0.0) out += b * std::log(rest);
    return out;
}

namespace detail {

// Logs of the rates and of both knot tails, shared by every event index.
struct PosteriorTable {
    std::vector<double> rates;
    std::vector<double> knots;
    std::vector<double> log_rate;
    std::vector<double> log_head;     // log H_k, k = 0..T
    std::vector<double> log_tail;     // log (Lambda(T) - H_k), from suffix sums
    std::vector<double> log_rate_at;  // larger log rate of the frames meeting at knot k
    double total = 0.0;

    explicit PosteriorTable(const IntensityProfile& profile)
        : rates(profile.rates().begin(), profile.rates().end()) {
        const std::size_t T = rates.size();
        knots.assign(T + 1, 0.0);
        std::partial_sum(rates.begin(), rates.end(), knots.begin() + 1);
        total = knots[T];
        std::vector<double> tail(T + 1, 0.0);
        for (std::size_t k = T; k-- > 0;) tail[k] = tail[k + 1] + rates[k];
        log_rate.resize(T);
        log_head.resize(T + 1);
        log_tail.resize(T + 1);
        log_rate_at.resize(T + 1);
        for (std::size_t k = 0; k < T; ++k) log_rate[k] = std::log(rates[k]);
        for (std::size_t k = 0; k <= T; ++k) {
            log_head[k] = std::log(knots[k]);
            log_tail[k] = std::log(tail[k]);
        }
        log_rate_at[0] = log_rate[0];
        log_rate_at[T] = log_rate[T - 1];
        for (std::size_t k = 1; k < T; ++k) log_rate_at[k] = std::max(log_rate[k - 1], log_rate[k]);
    }
};

// Earliest knot maximizing log_rate_at[k] + a log H_k + b log(Lambda(T) - H_k).
// Each knot stands for both one-sided limits, the frame ending there and the
// frame starting there. Zero exponents drop their term so log 0 never meets 0.
template <bool UseHead, bool UseTail>
std::pair<double, std::size_t> best_knot(const PosteriorTable& tab, double a, double b) {
    const std::size_t K = tab.log_rate_at.size();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < K; ++k) {
        double v = tab.log_rate_at[k];
        if constexpr (UseHead) v += a * tab.log_head[k];
        if constexpr (UseTail) v += b * tab.log_tail[k];
        if (v > best) {
            best = v;
            arg = k;
        }
    }
    return {best, arg};
}

inline TimestampPrediction mode_from_table(const PosteriorTable& tab, const FrameGrid& grid, std::size_t n,
                                           std::size_t i) {
    const int index = static_cast<int>(i);
    if (n == 1) {
        // Flat within each frame: take the midpoint of the highest-rate frame.
        const auto best = static_cast<std::size_t>(
            std::distance(tab.rates.begin(), std::max_element(tab.rates.begin(), tab.rates.end())));
        return make_prediction(grid, index, static_cast<double>(best) + 0.5);
    }

    const double a = static_cast<double>(i - 1);
    const double b = static_cast<double>(n - i);
    const auto [knot_value, knot] = a == 0.0 ? best_knot<false, true>(tab, a, b)
                                    : b == 0.0 ? best_knot<true, false>(tab, a, b)
                                               : best_knot<true, true>(tab, a, b);
    double best_value = knot_value;
    double best_time = static_cast<double>(knot);

    // Interior stationary point of the Beta factor, inside the frame whose
    // knots bracket z* (the earliest such frame when z* is itself a knot).
    if (a > 0.0 && b > 0.0) {
        const double z_star = tab.total * a / static_cast<double>(n - 1);
        const auto it = std::lower_bound(tab.knots.begin() + 1, tab.knots.end(), z_star);
        if (it != tab.knots.end()) {
            const auto k = static_cast<std::size_t>(std::distance(tab.knots.begin(), it)) - 1;
            const double beta_log = a * std::log(z_star) + b * std::log(tab.total * b / static_cast<double>(n - 1));
            const double value = beta_log + tab.log_rate[k];
            const double t = std::min(static_cast<double>(k) + (z_star - tab.knots[k]) / tab.rates[k],
                                      static_cast<double>(k + 1));
            if (value > best_value || (value == best_value && t < best_time)) {
                best_value = value;
                best_time = t;
            }
        }
    }
    return make_prediction(grid, index, best_time);
}

}  // namespace detail

inline TimestampPrediction posterior_mode(const PosteriorDensity& density) {
    const detail::PosteriorTable tab(density.profile());
    return detail::mode_from_table(tab, density.profile().grid(), density.n(), density.i());
}

/// Per-index posterior modes for i = 1..n.
inline std::vector<TimestampPrediction> posterior_modes_all(const IntensityProfile& profile, std::size_t n) {
    if (n < 1) throw DomainError("posterior needs at least one event");
    const detail::PosteriorTable tab(profile);
    std::vector<TimestampPrediction> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) out.push_back(detail::mode_from_table(tab, profile.grid(), n, i));
    return out;
}

/// Brute-force argmax of posterior_log_density over {step, 2 step, ...} and
/// every knot. When the maximum is a flat run of grid points, the centre of
/// the earliest such run is returned.
inline TimestampPrediction grid_oracle_mode(const PosteriorDensity& density, double step) {
    if (!(step > 0.0) || step > 0.01) throw DomainError("oracle grid step must lie in (0, 0.01]");
    const auto& grid = density.profile().grid();
    const double T = grid.duration_frames();

    std::vector<double> points;
    points.reserve(static_cast<std::size_t>(T / step) + grid.num_frames() + 2);
    for (std::size_t k = 0; k <= grid.num_frames(); ++k) points.push_back(static_cast<double>(k));
    for (std::size_t m = 1;; ++m) {
        const double t = static_cast<double>(m) * step;
        if (t > T) break;
        points.push_back(t);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    std::vector<double> values(points.size());
    for (std::size_t j = 0; j < points.size(); ++j) values[j] = posterior_log_density(density, points[j]);

    const auto first = static_cast<std::size_t>(
        std::distance(values.begin(), std::max_element(values.begin(), values.end())));
    std::size_t last = first;
    while (last + 1 < values.size() && values[last + 1] == values[first]) ++last;
    const double t = 0.5 * (points[first] + points[last]);
    return make_prediction(grid, static_cast<int>(density.i()), t);
}

/// One realization of the process on [0, T] by Lewis-Shedler thinning against
/// the maximum rate. Deterministic in the seed.
inline std::vector<double> sample_ihp(const IntensityProfile& profile, std::uint64_t seed) {
    const auto rates = profile.rates();
    const double rate_max = *std::max_element(rates.begin(), rates.end());
    const double T = profile.grid().duration_frames();
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate_max);
    std::uniform_real_distribution<double> accept(0.0, 1.0);
    std::vector<double> out;
    double t = 0.0;
    while (true) {
        t += gap(rng);
        if (t >= T) break;
        if (accept(rng) * rate_max < eval_hazard(profile, t)) out.push_back(t);
    }
    return out;
}

/// Top-k frames by score, reported at frame midpoints in time order. Equal
/// scores prefer the lower frame index.
inline std::vector<TimestampPrediction> binary_extract(const FrameScores& scores, std::size_t k) {
    const std::size_t T = scores.size();
    if (k < 1 || k > T)
        throw DomainError("cannot extract " + std::to_string(k) + " timestamps from " + std::to_string(T) + " frames");
    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    std::vector<TimestampPrediction> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j)
        out.push_back(make_prediction(scores.grid(), static_cast<int>(j + 1), static_cast<double>(order[j]) + 0.5));
    return out;
}

/// Poisson-head extraction straight from log-intensity scores.
inline std::vector<TimestampPrediction> poisson_extract(const FrameScores& scores, std::size_t n) {
    std::vector<double> clamped(scores.values().begin(), scores.values().end());
    for (auto& s : clamped) s = std::clamp(s, -detail::kLogRateClamp, detail::kLogRateClamp);
    return posterior_modes_all(IntensityProfile::from_log_rates(clamped, scores.grid().frame_duration_s()), n);
}

}  // namespace framestamp
