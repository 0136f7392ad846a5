#pragma once

// Synthetic temporal-grounding tasks. Each example is a feature sequence in
// which the queried event type leaves its signature vector on the event frame
// and (at reduced strength) on its two neighbours, plus Gaussian noise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "framestamp/errors.hpp"
#include "framestamp/features.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp {

enum class Split { train, dev, test };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw ParseError("unknown split '" + std::string(s) + "'");
}

struct IntRange {
    int lo = 0;
    int hi = 0;  // inclusive
};

struct GenConfig {
    int num_examples = 100;
    IntRange duration_frames{100, 200};
    int feature_dim = 16;
    int num_event_types = 8;
    IntRange events_per_example{1, 10};
    double signal_amplitude = 3.0;
    double noise_sigma = 0.1;
    /// Events are drawn in [lo, hi) frames; unset means the whole example.
    std::optional<std::pair<double, double>> event_time_range_frames;
    double frame_ms = 40.0;
    double min_separation_frames = 2.0;  // 0 disables the separation rule
    double train_fraction = 0.8;
    double dev_fraction = 0.1;
    std::uint64_t seed = 0;
    /// Seeds the per-type signature vectors; keep it fixed across datasets
    /// that must share a task (e.g. train and shifted test sets).
    std::uint64_t signature_seed = 7;
};

struct Example {
    std::string id;
    FrameFeatures features;
    EventLabels labels;
    Split split = Split::train;
};

struct TrainingSet {
    std::vector<Example> examples;

    std::vector<const Example*> select(std::optional<Split> split) const {
        std::vector<const Example*> out;
        for (const auto& e : examples)
            if (!split || e.split == *split) out.push_back(&e);
        return out;
    }
};

inline constexpr double kNeighbourSignal = 0.4;

inline void validate(const GenConfig& c) {
    if (c.num_examples < 1) throw ConfigError("num_examples must be positive");
    if (c.duration_frames.lo < 1 || c.duration_frames.hi < c.duration_frames.lo)
        throw ConfigError("duration_frames range is empty or nonpositive");
    if (c.feature_dim < 1) throw ConfigError("feature_dim must be positive");
    if (c.num_event_types < 1) throw ConfigError("num_event_types must be positive");
    if (c.events_per_example.lo < 1 || c.events_per_example.hi < c.events_per_example.lo)
        throw ConfigError("events_per_example range is empty or below 1");
    if (!(c.signal_amplitude > 0.0)) throw ConfigError("signal_amplitude must be positive");
    if (!(c.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
    if (!(c.frame_ms > 0.0)) throw ConfigError("frame_ms must be positive");
    if (!(c.min_separation_frames >= 0.0)) throw ConfigError("min_separation_frames must be nonnegative");
    if (c.train_fraction < 0.0 || c.dev_fraction < 0.0 || c.train_fraction + c.dev_fraction > 1.0)
        throw ConfigError("split fractions must be nonnegative and sum to at most 1");
    if (c.event_time_range_frames) {
        const auto [lo, hi] = *c.event_time_range_frames;
        if (!(lo >= 0.0) || !(lo < hi)) throw ConfigError("event_time_range needs 0 <= lo < hi");
        if (hi > c.duration_frames.lo)
            throw ConfigError("event_time_range upper end exceeds the shortest example duration");
    }
}

/// Unit-norm signature vector per event type.
inline std::vector<std::vector<double>> event_signatures(const GenConfig& c) {
    std::mt19937_64 rng(c.signature_seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::vector<double>> sigs(static_cast<std::size_t>(c.num_event_types),
                                          std::vector<double>(static_cast<std::size_t>(c.feature_dim)));
    for (auto& s : sigs) {
        double norm = 0.0;
        for (auto& v : s) {
            v = nd(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : s) v /= norm;
    }
    return sigs;
}

namespace detail {

inline std::vector<double> draw_event_times(std::mt19937_64& rng, int n, double lo, double hi, double sep,
                                            std::size_t example_index) {
    if (sep > 0.0 && static_cast<double>(n - 1) * sep >= hi - lo)
        throw GenerationError("example " + std::to_string(example_index) + ": cannot place " + std::to_string(n) +
                              " events " + std::to_string(sep) + " frames apart in [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + ")");
    std::uniform_real_distribution<double> u(lo, hi);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<double> times;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            ok = false;
            for (int tries = 0; tries < 1000; ++tries) {
                const double t = u(rng);
                const bool clear = std::none_of(times.begin(), times.end(),
                                                [&](double s) { return std::abs(s - t) < sep; });
                if (clear) {
                    times.push_back(t);
                    ok = true;
                    break;
                }
            }
        }
        if (ok) {
            std::sort(times.begin(), times.end());
            return times;
        }
    }
    throw GenerationError("example " + std::to_string(example_index) + ": failed to place " + std::to_string(n) +
                          " separated events in [" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
}

}  // namespace detail

inline Example generate_example(const GenConfig& c, const std::vector<std::vector<double>>& sigs, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    const int T = std::uniform_int_distribution<int>(c.duration_frames.lo, c.duration_frames.hi)(rng);
    const int n = std::uniform_int_distribution<int>(c.events_per_example.lo, c.events_per_example.hi)(rng);
    const int query = std::uniform_int_distribution<int>(0, c.num_event_types - 1)(rng);
    double lo = 0.0;
    double hi = static_cast<double>(T);
    if (c.event_time_range_frames) std::tie(lo, hi) = *c.event_time_range_frames;
    const auto times = detail::draw_event_times(rng, n, lo, hi, c.min_separation_frames, index);

    const FrameGrid grid(static_cast<std::size_t>(T), c.frame_ms / 1000.0);
    const auto d = static_cast<std::size_t>(c.feature_dim);
    std::vector<double> values(static_cast<std::size_t>(T) * d, 0.0);
    if (c.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, c.noise_sigma);
        for (auto& v : values) v = noise(rng);
    }
    const auto& sig = sigs[static_cast<std::size_t>(query)];
    for (double t : times) {
        const auto f = static_cast<long>(frame_of(grid, t));
        for (long off = -1; off <= 1; ++off) {
            const long g = f + off;
            if (g < 0 || g >= T) continue;
            const double a = c.signal_amplitude * (off == 0 ? 1.0 : kNeighbourSignal);
            for (std::size_t j = 0; j < d; ++j) values[static_cast<std::size_t>(g) * d + j] += a * sig[j];
        }
    }

    std::vector<double> secs(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) secs[j] = frames_to_seconds(grid, times[j]);

    const auto N = static_cast<std::size_t>(c.num_examples);
    const auto n_train = static_cast<std::size_t>(std::llround(c.train_fraction * static_cast<double>(N)));
    const auto n_dev = static_cast<std::size_t>(std::llround(c.dev_fraction * static_cast<double>(N)));
    Split split = Split::test;
    if (index < n_train) split = Split::train;
    else if (index < n_train + n_dev) split = Split::dev;

    char id[48];
    std::snprintf(id, sizeof id, "s%llu-%06zu", static_cast<unsigned long long>(c.seed), index);
    return Example{id, FrameFeatures(std::move(values), d, grid, query),
                   EventLabels::from_seconds(std::move(secs), grid), split};
}

inline TrainingSet generate(const GenConfig& config) {
    validate(config);
    const auto sigs = event_signatures(config);
    TrainingSet out;
    out.examples.reserve(static_cast<std::size_t>(config.num_examples));
    for (std::size_t i = 0; i < static_cast<std::size_t>(config.num_examples); ++i)
        out.examples.push_back(generate_example(config, sigs, i));
    return out;
}

// ---- JSONL ----------------------------------------------------------------

inline nlohmann::ordered_json example_to_json(const Example& e) {
    const auto& f = e.features;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < f.num_frames(); ++t) {
        const auto fr = f.frame(t);
        rows.push_back(std::vector<double>(fr.begin(), fr.end()));
    }
    const auto secs = e.labels.times_s();
    return {{"id", e.id},
            {"frame_ms", f.grid().frame_duration_s() * 1000.0},
            {"num_frames", f.num_frames()},
            {"feature_dim", f.feature_dim()},
            {"features", std::move(rows)},
            {"query", f.query_id()},
            {"event_times_s", std::vector<double>(secs.begin(), secs.end())},
            {"split", to_string(e.split)}};
}

inline void write_dataset(std::ostream& out, const TrainingSet& set) {
    for (const auto& e : set.examples) out << example_to_json(e).dump() << '\n';
}

inline void write_dataset(const std::string& path, const TrainingSet& set) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    write_dataset(out, set);
}

namespace detail {

template <class Json>
const Json& require(const Json& j, const char* field, std::size_t line) {
    const auto it = j.find(field);
    if (it == j.end()) throw ParseError("line " + std::to_string(line) + ": missing field '" + field + "'");
    return *it;
}

}  // namespace detail

inline Example example_from_json(const nlohmann::json& j, std::size_t line) {
    using detail::require;
    try {
        if (!j.is_object()) throw ParseError("line " + std::to_string(line) + ": record is not a JSON object");
        const auto id = require(j, "id", line).get<std::string>();
        const double frame_ms = require(j, "frame_ms", line).get<double>();
        const auto T = require(j, "num_frames", line).get<std::size_t>();
        const auto d = require(j, "feature_dim", line).get<std::size_t>();
        const auto& rows = require(j, "features", line);
        const int query = require(j, "query", line).get<int>();
        auto secs = require(j, "event_times_s", line).get<std::vector<double>>();
        const Split split = parse_split(require(j, "split", line).get<std::string>());
        if (!rows.is_array() || rows.size() != T)
            throw ParseError("line " + std::to_string(line) + ": 'features' must hold num_frames rows");
        std::vector<double> values;
        values.reserve(T * d);
        for (const auto& r : rows) {
            if (!r.is_array() || r.size() != d)
                throw ParseError("line " + std::to_string(line) + ": feature row length differs from feature_dim");
            for (const auto& v : r) values.push_back(v.get<double>());
        }
        const FrameGrid grid(T, frame_ms / 1000.0);
        return Example{id, FrameFeatures(std::move(values), d, grid, query),
                       EventLabels::from_seconds(std::move(secs), grid), split};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError("line " + std::to_string(line) + ": " + e.what());
    }
}

inline TrainingSet read_dataset(std::istream& in) {
    TrainingSet set;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line) + ": " + e.what());
        }
        Example ex = example_from_json(j, line);
        if (!set.examples.empty()) {
            const auto& first = set.examples.front().features;
            if (ex.features.grid().frame_duration_s() != first.grid().frame_duration_s())
                throw ParseError("line " + std::to_string(line) + ": frame_ms differs from earlier records");
            if (ex.features.feature_dim() != first.feature_dim())
                throw ParseError("line " + std::to_string(line) + ": feature_dim differs from earlier records");
        }
        set.examples.push_back(std::move(ex));
    }
    return set;
}

inline TrainingSet read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

}  // namespace framestamp
