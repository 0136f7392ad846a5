#pragma once

// Frame-level training objectives: class-reweighted binary cross-entropy and
// the conditional inhomogeneous Poisson negative log-likelihood. Both return
// the loss in nats together with its gradient w.r.t. the raw per-frame scores.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "framestamp/errors.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp {

/// Raw per-frame head outputs: logits for the binary head, log-intensities
/// for the Poisson head.
class FrameScores {
public:
    FrameScores(std::vector<double> values, FrameGrid grid) : values_(std::move(values)), grid_(grid) {
        if (values_.size() != grid_.num_frames())
            throw ShapeError("score sequence has " + std::to_string(values_.size()) + " entries for " +
                             std::to_string(grid_.num_frames()) + " frames");
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (!std::isfinite(values_[k])) throw DomainError("non-finite score at frame " + std::to_string(k));
    }

    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    std::size_t size() const noexcept { return values_.size(); }
    const FrameGrid& grid() const noexcept { return grid_; }

private:
    std::vector<double> values_;
    FrameGrid grid_;
};

struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Positive-class weight: either fixed or the per-example ratio of negative to
/// positive frames.
class ClassWeight {
public:
    static ClassWeight automatic() { return ClassWeight(std::nullopt); }
    static ClassWeight fixed(double w) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("class weight must be positive");
        return ClassWeight(w);
    }

    bool is_auto() const noexcept { return !weight_; }
    double value() const { return *weight_; }

    /// Resolves the weight for one example's marks.
    double resolve(std::span<const int> marks) const {
        if (weight_) return *weight_;
        const auto pos = static_cast<std::size_t>(std::count(marks.begin(), marks.end(), 1));
        const std::size_t neg = marks.size() - pos;
        if (pos == 0 || neg == 0)
            throw ConfigError("automatic class weight needs both positive and negative frames (positives=" +
                              std::to_string(pos) + ", negatives=" + std::to_string(neg) + ")");
        return static_cast<double>(neg) / static_cast<double>(pos);
    }

private:
    explicit ClassWeight(std::optional<double> w) : weight_(w) {}
    std::optional<double> weight_;
};

namespace detail {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline constexpr double kLogRateClamp = 30.0;

}  // namespace detail

inline LossResult binary_loss(const FrameScores& scores, const EventLabels& labels, const ClassWeight& weight) {
    const auto marks = labels.marks();
    if (marks.size() != scores.size())
        throw ShapeError("labels cover " + std::to_string(marks.size()) + " frames, scores " +
                         std::to_string(scores.size()));
    const double w = weight.resolve(marks);
    LossResult out;
    out.gradient.resize(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) {
        const double s = scores[t];
        const double p = detail::sigmoid(s);
        if (marks[t] == 1) {
            // -log p = softplus(-s)
            out.value += w * detail::softplus(-s);
            out.gradient[t] = w * (p - 1.0);
        } else {
            // -log(1 - p) = softplus(s)
            out.value += detail::softplus(s);
            out.gradient[t] = p;
        }
    }
    return out;
}

/// Negative log-likelihood of the event times conditioned on their count:
///   -sum_j log lambda(t_j) + n log Lambda(T).
/// The n! term is constant in the scores and omitted.
inline LossResult poisson_nll(const FrameScores& scores, const EventLabels& labels) {
    const auto mult = labels.multiplicity();
    if (mult.size() != scores.size())
        throw ShapeError("labels cover " + std::to_string(mult.size()) + " frames, scores " +
                         std::to_string(scores.size()));
    const std::size_t n = labels.count();
    if (n == 0) throw DomainError("Poisson loss is undefined for an example with no events");

    const std::size_t T = scores.size();
    std::vector<double> rates(T);
    double total = 0.0;
    double event_term = 0.0;
    for (std::size_t k = 0; k < T; ++k) {
        const double s = std::clamp(scores[k], -detail::kLogRateClamp, detail::kLogRateClamp);
        rates[k] = std::exp(s);
        total += rates[k];
        event_term += static_cast<double>(mult[k]) * s;
    }
    const double nd = static_cast<double>(n);
    LossResult out;
    out.value = -event_term + nd * std::log(total);
    out.gradient.resize(T);
    for (std::size_t k = 0; k < T; ++k)
        out.gradient[k] = -static_cast<double>(mult[k]) + nd * rates[k] / total;
    return out;
}

/// primary + coefficient * auxiliary, value and gradient alike.
inline LossResult interpolated_loss(const LossResult& primary, const LossResult& auxiliary, double coefficient) {
    if (primary.gradient.size() != auxiliary.gradient.size())
        throw ShapeError("interpolated losses disagree on frame count (" + std::to_string(primary.gradient.size()) +
                         " vs " + std::to_string(auxiliary.gradient.size()) + ")");
    if (!(coefficient >= 0.0)) throw ConfigError("interpolation coefficient must be nonnegative");
    LossResult out;
    out.value = primary.value + coefficient * auxiliary.value;
    out.gradient.resize(primary.gradient.size());
    for (std::size_t k = 0; k < out.gradient.size(); ++k)
        out.gradient[k] = primary.gradient[k] + coefficient * auxiliary.gradient[k];
    return out;
}

}  // namespace framestamp
