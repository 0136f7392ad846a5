#pragma once

// Run configuration file: flat `key = value` lines grouped under [gen],
// [train], [eval] and [bench] headers. '#' starts a comment. Unknown sections
// and keys are rejected with the offending line number.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "framestamp/errors.hpp"
#include "framestamp/synthdata.hpp"
#include "framestamp/train.hpp"

namespace framestamp {

struct EvalConfig {
    std::vector<double> tolerances_s = kDefaultTolerancesS;
    std::string stratify = "none";  // none | count | time
    double bucket_width_s = 4.0;
};

struct BenchConfig {
    std::vector<std::size_t> frames{1000, 8000};
    std::size_t timestamps = 25;
    int repeats = 5;
    std::size_t hidden_dim = 0;
    std::size_t feature_dim = 16;
};

struct RunConfig {
    GenConfig gen;
    TrainConfig train;
    std::size_t hidden_dim = 0;
    EvalConfig eval;
    BenchConfig bench;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
}

inline long long to_int(const std::string& v) {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
}

inline std::vector<std::string> split_list(const std::string& v, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

/// "a" or "a-b" (also "a..b").
inline IntRange to_range(const std::string& v) {
    auto dots = v.find("..");
    auto dash = v.find('-', 1);
    if (dots != std::string::npos)
        return {static_cast<int>(to_int(trim(v.substr(0, dots)))), static_cast<int>(to_int(trim(v.substr(dots + 2))))};
    if (dash != std::string::npos)
        return {static_cast<int>(to_int(trim(v.substr(0, dash)))), static_cast<int>(to_int(trim(v.substr(dash + 1))))};
    const int x = static_cast<int>(to_int(v));
    return {x, x};
}

inline std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

inline const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table{
        {"gen",
         {{"num_examples", [](RunConfig& c, const std::string& v) { c.gen.num_examples = static_cast<int>(to_int(v)); }},
          {"duration_frames", [](RunConfig& c, const std::string& v) { c.gen.duration_frames = to_range(v); }},
          {"feature_dim", [](RunConfig& c, const std::string& v) { c.gen.feature_dim = static_cast<int>(to_int(v)); }},
          {"num_event_types", [](RunConfig& c, const std::string& v) { c.gen.num_event_types = static_cast<int>(to_int(v)); }},
          {"events_per_example", [](RunConfig& c, const std::string& v) { c.gen.events_per_example = to_range(v); }},
          {"signal_amplitude", [](RunConfig& c, const std::string& v) { c.gen.signal_amplitude = to_double(v); }},
          {"noise_sigma", [](RunConfig& c, const std::string& v) { c.gen.noise_sigma = to_double(v); }},
          {"event_time_range_frames",
           [](RunConfig& c, const std::string& v) {
               const auto xs = to_doubles(v);
               if (xs.size() != 2) throw std::invalid_argument(v);
               c.gen.event_time_range_frames = std::pair{xs[0], xs[1]};
           }},
          {"frame_ms", [](RunConfig& c, const std::string& v) { c.gen.frame_ms = to_double(v); }},
          {"min_separation_frames", [](RunConfig& c, const std::string& v) { c.gen.min_separation_frames = to_double(v); }},
          {"train_fraction", [](RunConfig& c, const std::string& v) { c.gen.train_fraction = to_double(v); }},
          {"dev_fraction", [](RunConfig& c, const std::string& v) { c.gen.dev_fraction = to_double(v); }},
          {"seed", [](RunConfig& c, const std::string& v) { c.gen.seed = static_cast<std::uint64_t>(to_int(v)); }},
          {"signature_seed", [](RunConfig& c, const std::string& v) { c.gen.signature_seed = static_cast<std::uint64_t>(to_int(v)); }}}},
        {"train",
         {{"loss", [](RunConfig& c, const std::string& v) { c.train.loss_kind = parse_loss_kind(v); }},
          {"learning_rate", [](RunConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); }},
          {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = static_cast<int>(to_int(v)); }},
          {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = static_cast<int>(to_int(v)); }},
          {"interp_coefficient", [](RunConfig& c, const std::string& v) { c.train.interp_coefficient = to_double(v); }},
          {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = static_cast<std::uint64_t>(to_int(v)); }},
          {"class_weight",
           [](RunConfig& c, const std::string& v) {
               c.train.class_weight = v == "auto" ? ClassWeight::automatic() : ClassWeight::fixed(to_double(v));
           }},
          {"weight_decay", [](RunConfig& c, const std::string& v) { c.train.weight_decay = to_double(v); }},
          {"hidden_dim", [](RunConfig& c, const std::string& v) { c.hidden_dim = static_cast<std::size_t>(to_int(v)); }}}},
        {"eval",
         {{"tolerances", [](RunConfig& c, const std::string& v) { c.eval.tolerances_s = to_doubles(v); }},
          {"stratify",
           [](RunConfig& c, const std::string& v) {
               if (v != "none" && v != "count" && v != "time") throw std::invalid_argument(v);
               c.eval.stratify = v;
           }},
          {"bucket_width_s", [](RunConfig& c, const std::string& v) { c.eval.bucket_width_s = to_double(v); }}}},
        {"bench",
         {{"frames",
           [](RunConfig& c, const std::string& v) {
               c.bench.frames.clear();
               for (const auto& s : split_list(v)) c.bench.frames.push_back(static_cast<std::size_t>(to_int(s)));
           }},
          {"timestamps", [](RunConfig& c, const std::string& v) { c.bench.timestamps = static_cast<std::size_t>(to_int(v)); }},
          {"repeats", [](RunConfig& c, const std::string& v) { c.bench.repeats = static_cast<int>(to_int(v)); }},
          {"hidden_dim", [](RunConfig& c, const std::string& v) { c.bench.hidden_dim = static_cast<std::size_t>(to_int(v)); }},
          {"feature_dim", [](RunConfig& c, const std::string& v) { c.bench.feature_dim = static_cast<std::size_t>(to_int(v)); }}}},
    };
    return table;
}

}  // namespace config_detail

inline RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>") {
    using namespace config_detail;
    RunConfig cfg;
    std::string section;
    std::string raw;
    std::size_t line = 0;
    auto fail = [&](const std::string& why) { throw ConfigError(source + ":" + std::to_string(line) + ": " + why); };
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail("unterminated section header");
            section = trim(text.substr(1, text.size() - 2));
            if (!setters().count(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (section.empty()) fail("key '" + key + "' outside any section");
        const auto& keys = setters().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) fail("unknown key '" + key + "' in [" + section + "]");
        try {
            it->second(cfg, value);
        } catch (const Error& e) {
            fail(e.what());
        } catch (const std::exception&) {
            fail("invalid value '" + value + "' for " + key);
        }
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_run_config(in, path);
}

}  // namespace framestamp
