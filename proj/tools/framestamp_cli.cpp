// framestamp: generate synthetic data, train a frame scorer, extract
// timestamps, score predictions and benchmark extraction cost.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "framestamp/framestamp.hpp"

namespace fs = std::filesystem;
using namespace framestamp;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    return out;
}

// Prediction files hold one JSON array of {"index", "start"} objects per example.
std::string prediction_line(const std::vector<TimestampPrediction>& preds) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : preds) arr.push_back({{"index", p.event_index}, {"start", p.time_s}});
    return arr.dump();
}

struct TimeRecord {
    std::string name;
    std::vector<double> times_s;
};

// Accepts both prediction files and dataset files. Dataset records can be
// filtered by split; prediction lines have no split and are always kept.
std::vector<TimeRecord> read_times(const std::string& path, std::optional<Split> split) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<TimeRecord> out;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + ": line " + std::to_string(line);
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        try {
            TimeRecord r{"line " + std::to_string(line), {}};
            if (j.is_array()) {
                for (const auto& p : j) r.times_s.push_back(p.at("start").get<double>());
            } else if (j.is_object()) {
                if (split && parse_split(j.at("split").get<std::string>()) != *split) continue;
                r.name = j.at("id").get<std::string>();
                r.times_s = j.at("event_times_s").get<std::vector<double>>();
            } else {
                throw ParseError(where + ": expected a JSON array or object");
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    return out;
}

std::vector<const Example*> select_split(const TrainingSet& data, const std::string& split) {
    if (split == "all") return data.select(std::nullopt);
    return data.select(parse_split(split));
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---- gen ----

struct GenArgs {
    std::string config, out;
    std::optional<int> num_examples, feature_dim, num_event_types;
    std::optional<std::string> duration, events, event_range;
    std::optional<double> amplitude, noise;
    std::optional<std::uint64_t> seed;
};

void run_gen(const GenArgs& a) {
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    GenConfig& g = rc.gen;
    if (a.num_examples) g.num_examples = *a.num_examples;
    if (a.feature_dim) g.feature_dim = *a.feature_dim;
    if (a.num_event_types) g.num_event_types = *a.num_event_types;
    if (a.duration) g.duration_frames = config_detail::to_range(*a.duration);
    if (a.events) g.events_per_example = config_detail::to_range(*a.events);
    if (a.event_range) {
        const auto xs = config_detail::to_doubles(*a.event_range);
        if (xs.size() != 2) throw ConfigError("--event-range expects lo,hi");
        g.event_time_range_frames = std::pair{xs[0], xs[1]};
    }
    if (a.amplitude) g.signal_amplitude = *a.amplitude;
    if (a.noise) g.noise_sigma = *a.noise;
    if (a.seed) g.seed = *a.seed;
    const auto set = generate(g);
    write_dataset(a.out, set);
    std::cout << ordered_json{{"examples", set.examples.size()},
                              {"train", set.select(Split::train).size()},
                              {"dev", set.select(Split::dev).size()},
                              {"test", set.select(Split::test).size()},
                              {"out", a.out}}
                     .dump()
              << '\n';
}

// ---- train ----

struct TrainArgs {
    std::string config, data, out, history;
    std::optional<std::string> loss, class_weight;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs, batch_size;
    std::optional<double> lr, interp_coef, weight_decay;
    std::optional<std::size_t> hidden;
    bool quiet = false;
};

void run_train(const TrainArgs& a) {
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    TrainConfig& c = rc.train;
    if (a.loss) c.loss_kind = parse_loss_kind(*a.loss);
    if (a.seed) c.seed = *a.seed;
    if (a.epochs) c.epochs = *a.epochs;
    if (a.batch_size) c.batch_size = *a.batch_size;
    if (a.lr) c.learning_rate = *a.lr;
    if (a.interp_coef) c.interp_coefficient = *a.interp_coef;
    if (a.weight_decay) c.weight_decay = *a.weight_decay;
    if (a.class_weight)
        c.class_weight = *a.class_weight == "auto" ? ClassWeight::automatic()
                                                   : ClassWeight::fixed(config_detail::to_double(*a.class_weight));
    if (a.hidden) rc.hidden_dim = *a.hidden;
    validate(c);

    const auto data = read_dataset(a.data);
    if (data.examples.empty()) throw ConfigError("dataset '" + a.data + "' is empty");
    const ScorerConfig sc{data.examples.front().features.feature_dim(), rc.hidden_dim, head_for(c.loss_kind)};
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = train(c, sc, data, [&](const EpochMetrics& m) {
        if (!a.quiet)
            std::cerr << "epoch " << m.epoch << " loss " << m.train_loss << " acc " << m.select_accuracy << " mad "
                      << m.select_mad_s << '\n';
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_model(a.out, result.model);
    const std::string history = a.history.empty() ? a.out + ".history.json" : a.history;
    auto h = history_to_json(result, c);
    h["train_seconds"] = secs;
    open_out(history) << h.dump(2) << '\n';
    const auto& best = result.history[static_cast<std::size_t>(result.best_epoch - 1)];
    std::cout << ordered_json{{"model", a.out},
                              {"history", history},
                              {"best_epoch", result.best_epoch},
                              {"select_accuracy", best.select_accuracy},
                              {"select_mad_s", best.select_mad_s},
                              {"train_seconds", secs}}
                     .dump()
              << '\n';
}

// ---- infer ----

struct InferArgs {
    std::string model, data, out, split = "all";
    std::optional<std::size_t> count_override;
};

void run_infer(const InferArgs& a) {
    const auto model = load_model(a.model);
    const auto data = read_dataset(a.data);
    const auto examples = select_split(data, a.split);
    std::vector<std::string> lines(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) {
        const Example& e = *examples[i];
        const std::size_t k = a.count_override ? *a.count_override : e.labels.count();
        try {
            lines[i] = prediction_line(predict_timestamps(model, e.features, k));
        } catch (const Error& err) {
            throw Error(err.kind(), "example " + e.id + ": " + err.what());
        }
    });
    auto out = open_out(a.out);
    for (const auto& l : lines) out << l << '\n';
    std::cout << ordered_json{{"examples", lines.size()}, {"out", a.out}}.dump() << '\n';
}

// ---- eval ----

struct EvalArgs {
    std::string config, pred, truth, out, split = "all", format = "json";
    std::optional<std::string> tolerances, stratify;
    std::optional<double> bucket_width;
};

void run_eval(const EvalArgs& a) {
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    EvalConfig& ec = rc.eval;
    if (a.tolerances) ec.tolerances_s = config_detail::to_doubles(*a.tolerances);
    if (a.stratify) ec.stratify = *a.stratify;
    if (a.bucket_width) ec.bucket_width_s = *a.bucket_width;
    if (ec.tolerances_s.empty()) throw ConfigError("at least one tolerance is required");
    for (double t : ec.tolerances_s)
        if (!(t >= 0.0)) throw ConfigError("tolerances must be nonnegative");

    const std::optional<Split> split = a.split == "all" ? std::nullopt : std::optional{parse_split(a.split)};
    const auto preds = read_times(a.pred, std::nullopt);
    const auto truths = read_times(a.truth, split);
    if (preds.size() != truths.size())
        throw EvaluationError("prediction file has " + std::to_string(preds.size()) + " examples, truth has " +
                              std::to_string(truths.size()));
    std::vector<std::vector<double>> p, t;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        p.push_back(preds[i].times_s);
        t.push_back(truths[i].times_s);
        names.push_back(truths[i].name);
    }
    const auto pairs = match_pairs(p, t, names);
    MetricReport report;
    if (ec.stratify == "count") report = stratify(pairs, event_count_buckets(), ec.tolerances_s);
    else if (ec.stratify == "time") report = stratify(pairs, time_range_buckets(ec.bucket_width_s), ec.tolerances_s);
    else if (ec.stratify == "none") report = report_from_pairs(pairs, ec.tolerances_s);
    else throw ConfigError("unknown stratification '" + ec.stratify + "'");

    std::string text;
    if (a.format == "json") text = report_to_json(report).dump(2) + "\n";
    else if (a.format == "table") text = report_to_table(report);
    else if (a.format == "csv") text = report_to_csv(report);
    else throw ConfigError("unknown format '" + a.format + "'");
    if (a.out.empty()) std::cout << text;
    else open_out(a.out) << text;
}

// ---- bench ----

struct BenchArgs {
    std::string config, model, out;
    std::optional<std::string> frames;
    std::optional<std::size_t> timestamps, hidden;
    std::optional<int> repeats;
};

void run_bench(const BenchArgs& a) {
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    BenchConfig& bc = rc.bench;
    if (a.frames) {
        bc.frames.clear();
        for (const auto& s : config_detail::split_list(*a.frames))
            bc.frames.push_back(static_cast<std::size_t>(config_detail::to_int(s)));
    }
    if (a.timestamps) bc.timestamps = *a.timestamps;
    if (a.repeats) bc.repeats = *a.repeats;
    if (a.hidden) bc.hidden_dim = *a.hidden;
    if (bc.frames.empty()) throw ConfigError("--frames needs at least one length");
    const ScorerModel model = a.model.empty()
                                  ? ScorerModel::initialized({bc.feature_dim, bc.hidden_dim, HeadKind::poisson}, 0)
                                  : load_model(a.model);
    std::vector<BenchRow> rows;
    for (std::size_t T : bc.frames) {
        if (bc.timestamps > T) throw ConfigError("timestamps exceed frame count " + std::to_string(T));
        rows.push_back(framestamp::run_bench(model, T, bc.timestamps, bc.repeats));
    }
    const bool shift_ok = shift_equivariant(model, random_features(256, model.config().feature_dim, 1), 37);
    auto j = bench_to_json(rows, shift_ok);
    if (rows.size() >= 2) j["single_pass_time_ratio"] = rows.back().single_pass_s / rows.front().single_pass_s;
    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) std::cout << text;
    else open_out(a.out) << text;
}

void fail_json(std::string_view kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frame-level timestamp prediction: data generation, training, inference, evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "framestamp 0.1.0");

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic JSONL dataset");
    gen->add_option("--config", ga.config, "Run configuration file ([gen] section)");
    gen->add_option("--out", ga.out, "Output JSONL path")->required();
    gen->add_option("--num-examples", ga.num_examples);
    gen->add_option("--duration", ga.duration, "Frames per example, N or LO-HI");
    gen->add_option("--events", ga.events, "Events per example, N or LO-HI");
    gen->add_option("--event-range", ga.event_range, "Event window in frames, LO,HI");
    gen->add_option("--feature-dim", ga.feature_dim);
    gen->add_option("--event-types", ga.num_event_types);
    gen->add_option("--amplitude", ga.amplitude);
    gen->add_option("--noise", ga.noise);
    gen->add_option("--seed", ga.seed);

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train a frame scorer; writes a checkpoint and a history file");
    tr->add_option("--config", ta.config, "Run configuration file ([train] section)");
    tr->add_option("--data", ta.data, "Dataset JSONL")->required();
    tr->add_option("--out", ta.out, "Checkpoint path")->required();
    tr->add_option("--loss", ta.loss, "binary | poisson | interp");
    tr->add_option("--seed", ta.seed);
    tr->add_option("--epochs", ta.epochs);
    tr->add_option("--lr", ta.lr, "Learning rate");
    tr->add_option("--batch-size", ta.batch_size);
    tr->add_option("--hidden", ta.hidden, "Hidden units (0 = linear head)");
    tr->add_option("--interp-coef", ta.interp_coef, "Poisson coefficient for the interp loss");
    tr->add_option("--class-weight", ta.class_weight, "auto or a positive number");
    tr->add_option("--weight-decay", ta.weight_decay);
    tr->add_option("--history", ta.history, "History JSON path (default <out>.history.json)");
    tr->add_flag("--quiet", ta.quiet, "Suppress per-epoch progress");

    InferArgs ia;
    auto* inf = app.add_subcommand("infer", "Extract timestamps; counts come from the data file");
    inf->add_option("--model", ia.model, "Checkpoint path")->required();
    inf->add_option("--data", ia.data, "Dataset JSONL")->required();
    inf->add_option("--out", ia.out, "Prediction JSONL path")->required();
    inf->add_option("--split", ia.split, "train | dev | test | all")->capture_default_str();
    inf->add_option("--count-override", ia.count_override, "Extract this many timestamps per example");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Score predictions against a dataset or another prediction file");
    ev->add_option("--config", ea.config, "Run configuration file ([eval] section)");
    ev->add_option("--pred", ea.pred, "Prediction JSONL")->required();
    ev->add_option("--truth", ea.truth, "Dataset or prediction JSONL")->required();
    ev->add_option("--tolerances", ea.tolerances, "Comma-separated seconds (default 0.02,0.04,0.1)");
    ev->add_option("--stratify", ea.stratify, "none | count | time");
    ev->add_option("--bucket-width", ea.bucket_width, "Time bucket width in seconds");
    ev->add_option("--split", ea.split, "Truth split to keep (must match infer --split)")->capture_default_str();
    ev->add_option("--format", ea.format, "json | table | csv")->capture_default_str();
    ev->add_option("--out", ea.out, "Report path (default stdout)");

    BenchArgs ba;
    auto* be = app.add_subcommand("bench", "Single-pass extraction versus a simulated autoregressive decoder");
    be->add_option("--config", ba.config, "Run configuration file ([bench] section)");
    be->add_option("--model", ba.model, "Checkpoint (default: random linear scorer)");
    be->add_option("--frames", ba.frames, "Comma-separated sequence lengths");
    be->add_option("--timestamps", ba.timestamps);
    be->add_option("--repeats", ba.repeats);
    be->add_option("--hidden", ba.hidden, "Hidden units of the default scorer");
    be->add_option("--out", ba.out, "Report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_json("usage", e.what());
        return 2;
    }

    try {
        for (std::string* p : {&ga.config, &ga.out, &ta.config, &ta.data, &ta.out, &ta.history, &ia.model, &ia.data,
                               &ia.out, &ea.config, &ea.pred, &ea.truth, &ea.out, &ba.config, &ba.model, &ba.out})
            *p = absolute(*p);
        if (*gen) run_gen(ga);
        else if (*tr) run_train(ta);
        else if (*inf) run_infer(ia);
        else if (*ev) run_eval(ea);
        else if (*be) run_bench(ba);
    } catch (const Error& e) {
        fail_json(e.kind(), e.what());
        return 2;
    } catch (const std::exception& e) {
        fail_json("internal", e.what());
        return 2;
    }
    return 0;
}
