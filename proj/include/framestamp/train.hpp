#pragma once

// Mini-batch AdamW training of the frame scorer against the binary, Poisson
// or interpolated objective. Single-threaded and deterministic in the seed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "framestamp/errors.hpp"
#include "framestamp/losses.hpp"
#include "framestamp/metrics.hpp"
#include "framestamp/predict.hpp"
#include "framestamp/scorer.hpp"
#include "framestamp/synthdata.hpp"

namespace framestamp {

enum class LossKind { binary, poisson, interp };

inline std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::binary: return "binary";
        case LossKind::poisson: return "poisson";
        case LossKind::interp: return "interp";
    }
    return "poisson";
}

inline LossKind parse_loss_kind(std::string_view s) {
    if (s == "binary") return LossKind::binary;
    if (s == "poisson") return LossKind::poisson;
    if (s == "interp") return LossKind::interp;
    throw ConfigError("unknown loss kind '" + std::string(s) + "' (expected binary, poisson or interp)");
}

/// The head a loss trains: interp keeps the Poisson head for extraction.
inline HeadKind head_for(LossKind k) { return k == LossKind::binary ? HeadKind::binary : HeadKind::poisson; }

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 20;
    int batch_size = 8;
    LossKind loss_kind = LossKind::poisson;
    double interp_coefficient = 0.05;
    std::uint64_t seed = 0;
    ClassWeight class_weight = ClassWeight::automatic();
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
    bool shuffle = true;
};

inline void validate(const TrainConfig& c) {
    if (!(c.learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
    if (c.epochs < 1) throw ConfigError("epochs must be positive");
    if (c.batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(c.interp_coefficient >= 0.0)) throw ConfigError("interp_coefficient must be nonnegative");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0))
        throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(c.weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
}

/// Training objective for one example, differentiated w.r.t. the frame scores.
inline LossResult example_loss(const FrameScores& scores, const EventLabels& labels, const TrainConfig& c) {
    switch (c.loss_kind) {
        case LossKind::binary: return binary_loss(scores, labels, c.class_weight);
        case LossKind::poisson: return poisson_nll(scores, labels);
        case LossKind::interp:
            // The frame-level binary loss stands in for the host's token loss.
            return interpolated_loss(binary_loss(scores, labels, c.class_weight), poisson_nll(scores, labels),
                                     c.interp_coefficient);
    }
    throw ConfigError("unknown loss kind");
}

/// Loss and d(loss)/d(params) for one example, added into grad.
inline double accumulate_example(const ScorerModel& model, const Example& ex, const TrainConfig& c,
                                 std::span<double> grad) {
    std::optional<FrameScores> held;
    try {
        held.emplace(score_frames(model, ex.features));
    } catch (const DomainError& e) {
        throw TrainingError("example " + ex.id + ": " + e.what());
    }
    const FrameScores& scores = *held;
    const LossResult loss = example_loss(scores, ex.labels, c);
    if (!std::isfinite(loss.value)) throw TrainingError("non-finite loss on example " + ex.id);
    backprop_scores(model, ex.features, loss.gradient, grad);
    return loss.value;
}

/// Decoupled-weight-decay Adam over a flat parameter vector.
class AdamW {
public:
    AdamW(std::size_t size, const TrainConfig& c) : m_(size, 0.0), v_(size, 0.0), c_(c) {}

    void step(ScorerModel& model, std::span<const double> grad) {
        ++t_;
        const double lr = c_.learning_rate;
        const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(t_));
        auto p = model.parameters();
        for (std::size_t j = 0; j < p.size(); ++j) {
            m_[j] = c_.beta1 * m_[j] + (1.0 - c_.beta1) * grad[j];
            v_[j] = c_.beta2 * v_[j] + (1.0 - c_.beta2) * grad[j] * grad[j];
            if (!model.is_bias(j)) p[j] -= lr * c_.weight_decay * p[j];
            p[j] -= lr * (m_[j] / bc1) / (std::sqrt(v_[j] / bc2) + c_.epsilon);
        }
    }

private:
    std::vector<double> m_;
    std::vector<double> v_;
    TrainConfig c_;
    long t_ = 0;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;  // mean per example, before the epoch's updates
    double select_accuracy = 0.0;
    double select_mad_s = 0.0;
};

struct TrainResult {
    ScorerModel model;
    int best_epoch = 0;
    std::vector<EpochMetrics> history;
};

/// Accuracy at a one-frame tolerance and MAD over a set of examples.
inline MetricReport evaluate(const ScorerModel& model, const std::vector<const Example*>& examples,
                             double tolerance_s) {
    std::vector<std::vector<double>> preds, truths;
    for (const Example* e : examples) {
        preds.push_back(prediction_seconds(predict_timestamps(model, e->features, e->labels.count())));
        truths.push_back(label_seconds(e->labels));
    }
    return report_from_pairs(match_pairs(preds, truths), {tolerance_s});
}

/// Trains on the train split and keeps the epoch with the best accuracy at a
/// one-frame tolerance on the dev split (the train split when there is no
/// dev data). Ties keep the earlier epoch unless MAD improves.
inline TrainResult train(const TrainConfig& config, ScorerConfig scorer, const TrainingSet& dataset,
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
    validate(config);
    const auto train_set = dataset.select(Split::train);
    if (train_set.empty()) throw ConfigError("dataset has no training examples");
    auto select_set = dataset.select(Split::dev);
    if (select_set.empty()) select_set = train_set;
    for (const Example* e : train_set)
        if (e->features.feature_dim() != scorer.feature_dim)
            throw ShapeError("example " + e->id + " has feature dimension " +
                             std::to_string(e->features.feature_dim()) + ", scorer expects " +
                             std::to_string(scorer.feature_dim));
    scorer.head_kind = head_for(config.loss_kind);
    const double tolerance_s = train_set.front()->features.grid().frame_duration_s();

    ScorerModel model = ScorerModel::initialized(scorer, config.seed);
    AdamW opt(model.parameters().size(), config);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.parameters().size());

    TrainResult result{model, 0, {}};
    double best_acc = -1.0;
    double best_mad = 0.0;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t j = start; j < stop; ++j) loss_sum += accumulate_example(model, *train_set[order[j]], config, grad);
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto& g : grad) g *= inv;
            opt.step(model, grad);
            for (double w : model.parameters())
                if (!std::isfinite(w)) throw TrainingError("non-finite weights at epoch " + std::to_string(epoch));
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(m.train_loss)) throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
        const MetricReport rep = evaluate(model, select_set, tolerance_s);
        m.select_accuracy = rep.accuracy_by_tolerance.begin()->second;
        m.select_mad_s = rep.mad_s;
        result.history.push_back(m);
        if (m.select_accuracy > best_acc || (m.select_accuracy == best_acc && m.select_mad_s < best_mad)) {
            best_acc = m.select_accuracy;
            best_mad = m.select_mad_s;
            result.model = model;
            result.best_epoch = epoch;
        }
        if (on_epoch) on_epoch(m);
    }
    return result;
}

inline nlohmann::ordered_json history_to_json(const TrainResult& r, const TrainConfig& c) {
    nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
    for (const auto& m : r.history)
        epochs.push_back({{"epoch", m.epoch},
                          {"train_loss", m.train_loss},
                          {"select_accuracy", m.select_accuracy},
                          {"select_mad_s", m.select_mad_s}});
    return {{"loss", to_string(c.loss_kind)},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"best_epoch", r.best_epoch},
            {"epochs", epochs}};
}

}  // namespace framestamp
