#pragma once

// Timestamp metrics: accuracy within a tolerance and mean absolute deviation,
// both in seconds, with optional stratification by event count or by time
// range. Predictions and truths are paired index-wise after sorting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "framestamp/errors.hpp"
#include "framestamp/inference.hpp"
#include "framestamp/temporal.hpp"

namespace framestamp {

inline const std::vector<double> kDefaultTolerancesS{0.02, 0.04, 0.1};

struct Stratum;

struct MetricReport {
    std::map<double, double> accuracy_by_tolerance;
    double mad_s = 0.0;
    std::size_t n_events = 0;
    std::vector<Stratum> strata;
};

struct Stratum {
    std::string bucket;
    MetricReport report;
};

struct MatchedPair {
    std::size_t example = 0;
    std::size_t example_count = 0;  // events in the example
    double pred_s = 0.0;
    double truth_s = 0.0;
};

/// Pairs the i-th earliest prediction with the i-th earliest truth, per
/// example. Inputs are event times in seconds.
inline std::vector<MatchedPair> match_pairs(const std::vector<std::vector<double>>& preds_s,
                                            const std::vector<std::vector<double>>& truths_s,
                                            const std::vector<std::string>& names = {}) {
    if (preds_s.size() != truths_s.size())
        throw EvaluationError("prediction set has " + std::to_string(preds_s.size()) + " examples, truth set " +
                              std::to_string(truths_s.size()));
    std::vector<MatchedPair> pairs;
    for (std::size_t e = 0; e < preds_s.size(); ++e) {
        auto p = preds_s[e];
        auto t = truths_s[e];
        if (p.size() != t.size()) {
            const std::string name = e < names.size() ? names[e] : "#" + std::to_string(e);
            throw EvaluationError("example " + name + ": " + std::to_string(p.size()) + " predictions for " +
                                  std::to_string(t.size()) + " true events");
        }
        std::sort(p.begin(), p.end());
        std::sort(t.begin(), t.end());
        for (std::size_t i = 0; i < p.size(); ++i) pairs.push_back({e, t.size(), p[i], t[i]});
    }
    return pairs;
}

inline MetricReport report_from_pairs(std::span<const MatchedPair> pairs, const std::vector<double>& tolerances_s) {
    MetricReport r;
    r.n_events = pairs.size();
    double sum = 0.0;
    std::vector<std::size_t> hits(tolerances_s.size(), 0);
    for (const auto& p : pairs) {
        const double err = std::abs(p.pred_s - p.truth_s);
        sum += err;
        for (std::size_t j = 0; j < tolerances_s.size(); ++j)
            // 1e-12 s absorbs representation error at exact-tolerance ties.
            if (err <= tolerances_s[j] + 1e-12) ++hits[j];
    }
    r.mad_s = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
    for (std::size_t j = 0; j < tolerances_s.size(); ++j)
        r.accuracy_by_tolerance[tolerances_s[j]] =
            pairs.empty() ? 0.0 : static_cast<double>(hits[j]) / static_cast<double>(pairs.size());
    return r;
}

inline std::vector<double> prediction_seconds(const std::vector<TimestampPrediction>& preds) {
    std::vector<double> out;
    out.reserve(preds.size());
    for (const auto& p : preds) out.push_back(p.time_s);
    return out;
}

inline std::vector<double> label_seconds(const EventLabels& labels) {
    return {labels.times_s().begin(), labels.times_s().end()};
}

inline MetricReport score(const std::vector<std::vector<TimestampPrediction>>& preds,
                          const std::vector<EventLabels>& truths,
                          const std::vector<double>& tolerances_s = kDefaultTolerancesS) {
    std::vector<std::vector<double>> p, t;
    for (const auto& x : preds) p.push_back(prediction_seconds(x));
    for (const auto& x : truths) t.push_back(label_seconds(x));
    const auto pairs = match_pairs(p, t);
    return report_from_pairs(pairs, tolerances_s);
}

// ---- stratification ---------------------------------------------------------

/// Assigns every matched pair to a named bucket; buckets are ordered by key.
struct BucketRule {
    std::function<std::pair<int, std::string>(const MatchedPair&)> assign;
};

/// Buckets by number of events in the example: 1-5, 6-10, ..., 26+.
inline BucketRule event_count_buckets(std::vector<int> lower_edges = {1, 6, 11, 16, 21, 26}) {
    return {[edges = std::move(lower_edges)](const MatchedPair& p) {
        const int n = static_cast<int>(p.example_count);
        int b = 0;
        while (b + 1 < static_cast<int>(edges.size()) && n >= edges[static_cast<std::size_t>(b + 1)]) ++b;
        const auto ub = static_cast<std::size_t>(b);
        std::string name = ub + 1 < edges.size()
                               ? std::to_string(edges[ub]) + "-" + std::to_string(edges[ub + 1] - 1)
                               : std::to_string(edges[ub]) + "+";
        return std::pair{b, name};
    }};
}

/// Buckets by the true event time in windows of width_s seconds.
inline BucketRule time_range_buckets(double width_s = 4.0) {
    if (!(width_s > 0.0)) throw ConfigError("time bucket width must be positive");
    return {[width_s](const MatchedPair& p) {
        const int b = static_cast<int>(std::floor(p.truth_s / width_s));
        auto fmt = [](double x) {
            std::ostringstream s;
            s << x;
            return s.str();
        };
        return std::pair{b, fmt(b * width_s) + "-" + fmt((b + 1) * width_s) + "s"};
    }};
}

inline MetricReport stratify(std::span<const MatchedPair> pairs, const BucketRule& rule,
                             const std::vector<double>& tolerances_s = kDefaultTolerancesS) {
    MetricReport pooled = report_from_pairs(pairs, tolerances_s);
    std::map<int, std::pair<std::string, std::vector<MatchedPair>>> groups;
    for (const auto& p : pairs) {
        auto [key, name] = rule.assign(p);
        auto& g = groups[key];
        g.first = name;
        g.second.push_back(p);
    }
    for (const auto& [key, g] : groups) pooled.strata.push_back({g.first, report_from_pairs(g.second, tolerances_s)});
    return pooled;
}

// ---- output -----------------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const MetricReport& r) {
    nlohmann::ordered_json acc = nlohmann::ordered_json::object();
    for (const auto& [tol, a] : r.accuracy_by_tolerance) {
        std::ostringstream key;
        key << tol;
        acc[key.str()] = a;
    }
    nlohmann::ordered_json j{{"n_events", r.n_events}, {"mad_s", r.mad_s}, {"accuracy_by_tolerance", acc}};
    if (!r.strata.empty()) {
        nlohmann::ordered_json s = nlohmann::ordered_json::object();
        for (const auto& st : r.strata) s[st.bucket] = report_to_json(st.report);
        j["strata"] = s;
    }
    return j;
}

namespace detail {

inline std::vector<std::pair<std::string, const MetricReport*>> report_rows(const MetricReport& r) {
    std::vector<std::pair<std::string, const MetricReport*>> rows{{"all", &r}};
    for (const auto& s : r.strata) rows.emplace_back(s.bucket, &s.report);
    return rows;
}

inline std::string tol_label(double tol) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "acc@%gms", tol * 1000.0);
    return buf;
}

}  // namespace detail

/// Aligned plain-text table, one row per stratum after the pooled row.
inline std::string report_to_table(const MetricReport& r) {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s %8s", "bucket", "events");
    out << buf;
    for (const auto& [tol, a] : r.accuracy_by_tolerance) {
        std::snprintf(buf, sizeof buf, " %10s", detail::tol_label(tol).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %10s\n", "MAD(s)");
    out << buf;
    for (const auto& [name, rep] : detail::report_rows(r)) {
        std::snprintf(buf, sizeof buf, "%-10s %8zu", name.c_str(), rep->n_events);
        out << buf;
        for (const auto& [tol, a] : rep->accuracy_by_tolerance) {
            std::snprintf(buf, sizeof buf, " %9.1f%%", 100.0 * a);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, " %10.4f\n", rep->mad_s);
        out << buf;
    }
    return out.str();
}

inline std::string report_to_csv(const MetricReport& r) {
    std::ostringstream out;
    out << "bucket,events";
    for (const auto& [tol, a] : r.accuracy_by_tolerance) out << ",acc@" << tol;
    out << ",mad_s\n";
    out.precision(17);
    for (const auto& [name, rep] : detail::report_rows(r)) {
        out << name << ',' << rep->n_events;
        for (const auto& [tol, a] : rep->accuracy_by_tolerance) out << ',' << a;
        out << ',' << rep->mad_s << '\n';
    }
    return out.str();
}

}  // namespace framestamp
