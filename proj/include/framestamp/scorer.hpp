#pragma once

// Frame-local scorer: a linear head or a single tanh hidden layer applied
// independently to every frame's feature vector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "framestamp/errors.hpp"
#include "framestamp/features.hpp"
#include "framestamp/losses.hpp"

namespace framestamp {

enum class HeadKind { binary, poisson };

inline std::string_view to_string(HeadKind h) { return h == HeadKind::binary ? "binary" : "poisson"; }

inline HeadKind parse_head_kind(std::string_view s) {
    if (s == "binary") return HeadKind::binary;
    if (s == "poisson") return HeadKind::poisson;
    throw ConfigError("unknown head kind '" + std::string(s) + "'");
}

struct ScorerConfig {
    std::size_t feature_dim = 16;
    std::size_t hidden_dim = 0;  // 0 = linear head
    HeadKind head_kind = HeadKind::poisson;

    bool operator==(const ScorerConfig&) const = default;
};

/// Parameters live in one flat vector so the optimizer and gradient checks
/// can treat them uniformly. Layout:
///   linear: [w (d), b]
///   hidden: [W1 (h x d, row-major), b1 (h), w2 (h), b2]
class ScorerModel {
public:
    ScorerModel(ScorerConfig config, std::uint64_t seed, std::vector<double> params)
        : config_(config), seed_(seed), params_(std::move(params)) {
        if (config_.feature_dim < 1) throw ShapeError("feature dimension must be at least 1");
        if (params_.size() != parameter_count(config_))
            throw ShapeError("scorer expects " + std::to_string(parameter_count(config_)) + " parameters, got " +
                             std::to_string(params_.size()));
        for (double p : params_)
            if (!std::isfinite(p)) throw DomainError("non-finite scorer weight");
    }

    static std::size_t parameter_count(const ScorerConfig& c) {
        if (c.hidden_dim == 0) return c.feature_dim + 1;
        return c.hidden_dim * c.feature_dim + 2 * c.hidden_dim + 1;
    }

    static ScorerModel zeros(ScorerConfig config, std::uint64_t seed = 0) {
        return ScorerModel(config, seed, std::vector<double>(parameter_count(config), 0.0));
    }

    /// Glorot-style Gaussian initialization; output biases start at zero.
    static ScorerModel initialized(ScorerConfig config, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::vector<double> p(parameter_count(config), 0.0);
        const double d = static_cast<double>(config.feature_dim);
        if (config.hidden_dim == 0) {
            std::normal_distribution<double> nd(0.0, std::sqrt(1.0 / d));
            for (std::size_t j = 0; j < config.feature_dim; ++j) p[j] = nd(rng);
        } else {
            const std::size_t h = config.hidden_dim;
            std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / (d + static_cast<double>(h))));
            std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(h)));
            for (std::size_t j = 0; j < h * config.feature_dim; ++j) p[j] = n1(rng);
            for (std::size_t j = 0; j < h; ++j) p[h * config.feature_dim + h + j] = n2(rng);
        }
        return ScorerModel(config, seed, std::move(p));
    }

    const ScorerConfig& config() const noexcept { return config_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }

    /// True for entries that are biases (excluded from weight decay).
    bool is_bias(std::size_t index) const {
        const std::size_t d = config_.feature_dim;
        const std::size_t h = config_.hidden_dim;
        if (h == 0) return index == d;
        return (index >= h * d && index < h * d + h) || index == params_.size() - 1;
    }

    double score_frame(std::span<const double> x) const {
        const std::size_t d = config_.feature_dim;
        if (config_.hidden_dim == 0) {
            double s = params_[d];
            for (std::size_t j = 0; j < d; ++j) s += params_[j] * x[j];
            return s;
        }
        const std::size_t h = config_.hidden_dim;
        const double* w1 = params_.data();
        const double* b1 = w1 + h * d;
        const double* w2 = b1 + h;
        double s = w2[h];
        for (std::size_t u = 0; u < h; ++u) {
            double a = b1[u];
            const double* row = w1 + u * d;
            for (std::size_t j = 0; j < d; ++j) a += row[j] * x[j];
            s += w2[u] * std::tanh(a);
        }
        return s;
    }

    /// Adds d(loss)/d(params) to grad, given d(loss)/d(score) for one frame.
    void accumulate_gradient(std::span<const double> x, double dscore, std::span<double> grad) const {
        const std::size_t d = config_.feature_dim;
        if (config_.hidden_dim == 0) {
            for (std::size_t j = 0; j < d; ++j) grad[j] += dscore * x[j];
            grad[d] += dscore;
            return;
        }
        const std::size_t h = config_.hidden_dim;
        const double* w1 = params_.data();
        const double* b1 = w1 + h * d;
        const double* w2 = b1 + h;
        double* g_w1 = grad.data();
        double* g_b1 = g_w1 + h * d;
        double* g_w2 = g_b1 + h;
        g_w2[h] += dscore;
        for (std::size_t u = 0; u < h; ++u) {
            double a = b1[u];
            const double* row = w1 + u * d;
            for (std::size_t j = 0; j < d; ++j) a += row[j] * x[j];
            const double act = std::tanh(a);
            g_w2[u] += dscore * act;
            const double da = dscore * w2[u] * (1.0 - act * act);
            g_b1[u] += da;
            double* g_row = g_w1 + u * d;
            for (std::size_t j = 0; j < d; ++j) g_row[j] += da * x[j];
        }
    }

private:
    ScorerConfig config_;
    std::uint64_t seed_;
    std::vector<double> params_;
};

inline FrameScores score_frames(const ScorerModel& model, const FrameFeatures& features) {
    if (features.feature_dim() != model.config().feature_dim)
        throw ShapeError("features have dimension " + std::to_string(features.feature_dim()) + ", scorer expects " +
                         std::to_string(model.config().feature_dim));
    std::vector<double> out(features.num_frames());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = model.score_frame(features.frame(t));
    return FrameScores(std::move(out), features.grid());
}

/// Chain rule through score_frames: d(loss)/d(params) from d(loss)/d(scores).
inline void backprop_scores(const ScorerModel& model, const FrameFeatures& features, std::span<const double> dscores,
                            std::span<double> grad) {
    if (dscores.size() != features.num_frames()) throw ShapeError("score gradient length does not match frames");
    if (grad.size() != model.parameters().size()) throw ShapeError("parameter gradient has wrong length");
    for (std::size_t t = 0; t < dscores.size(); ++t) {
        if (dscores[t] != 0.0) model.accumulate_gradient(features.frame(t), dscores[t], grad);
    }
}

// ---- checkpoint JSON -------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

inline nlohmann::json model_to_json(const ScorerModel& model) {
    using nlohmann::json;
    const auto& c = model.config();
    const auto p = model.parameters();
    const std::size_t d = c.feature_dim;
    json weights = json::object();
    auto matrix = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
        json m = json::array();
        for (std::size_t r = 0; r < rows; ++r)
            m.push_back(std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(offset + r * cols),
                                            p.begin() + static_cast<std::ptrdiff_t>(offset + (r + 1) * cols)));
        return m;
    };
    auto vec = [&](std::size_t offset, std::size_t len) {
        return std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(offset),
                                   p.begin() + static_cast<std::ptrdiff_t>(offset + len));
    };
    if (c.hidden_dim == 0) {
        weights["w1"] = matrix(0, 1, d);
        weights["b1"] = vec(d, 1);
    } else {
        const std::size_t h = c.hidden_dim;
        weights["w1"] = matrix(0, h, d);
        weights["b1"] = vec(h * d, h);
        weights["w2"] = matrix(h * d + h, 1, h);
        weights["b2"] = vec(h * d + 2 * h, 1);
    }
    return json{{"format_version", kCheckpointFormatVersion},
                {"config", {{"feature_dim", c.feature_dim}, {"hidden_dim", c.hidden_dim}, {"head_kind", to_string(c.head_kind)}}},
                {"seed", model.seed()},
                {"weights", weights}};
}

inline ScorerModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
            throw ParseError("unsupported checkpoint format_version " + j.at("format_version").dump());
        ScorerConfig c;
        const auto& jc = j.at("config");
        c.feature_dim = jc.at("feature_dim").get<std::size_t>();
        c.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
        c.head_kind = parse_head_kind(jc.at("head_kind").get<std::string>());
        const auto seed = j.at("seed").get<std::uint64_t>();
        const auto& w = j.at("weights");

        std::vector<double> params;
        auto take_matrix = [&](const char* name, std::size_t rows, std::size_t cols) {
            const auto m = w.at(name).get<std::vector<std::vector<double>>>();
            if (m.size() != rows) throw ShapeError(std::string(name) + " has " + std::to_string(m.size()) + " rows, expected " + std::to_string(rows));
            for (const auto& row : m) {
                if (row.size() != cols)
                    throw ShapeError(std::string(name) + " row has " + std::to_string(row.size()) + " columns, expected " + std::to_string(cols));
                params.insert(params.end(), row.begin(), row.end());
            }
        };
        auto take_vector = [&](const char* name, std::size_t len) {
            const auto v = w.at(name).get<std::vector<double>>();
            if (v.size() != len) throw ShapeError(std::string(name) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(len));
            params.insert(params.end(), v.begin(), v.end());
        };
        if (c.hidden_dim == 0) {
            take_matrix("w1", 1, c.feature_dim);
            take_vector("b1", 1);
        } else {
            take_matrix("w1", c.hidden_dim, c.feature_dim);
            take_vector("b1", c.hidden_dim);
            take_matrix("w2", 1, c.hidden_dim);
            take_vector("b2", 1);
        }
        return ScorerModel(c, seed, std::move(params));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_model(const std::string& path, const ScorerModel& model) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << model_to_json(model).dump(1) << '\n';
}

inline ScorerModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("checkpoint '" + path + "' at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace framestamp
