#include <opath/opath.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

using namespace opath;

namespace {

struct usage_error : error {
    using error::error;
};

struct data_flags {
    std::string path;
    std::string task = "svc";
    std::string format;
    std::size_t target_column = 0;
    bool header = false;

    void add(CLI::App* app, bool required = true) {
        auto* o = app->add_option("--data", path, "training data file");
        if (required) o->required();
        app->add_option("--task", task, "svc or svr")->check(CLI::IsMember({"svc", "svr"}));
        app->add_option("--format", format, "svmlight or csv (default: from the file extension)")
            ->check(CLI::IsMember({"svmlight", "libsvm", "csv"}));
        app->add_option("--target-column", target_column, "0-based target column for CSV input");
        app->add_flag("--header", header, "CSV input has a header row");
    }

    load_options options(const std::string& file) const {
        load_options opt;
        opt.task = parse_task(task);
        if (!format.empty())
            opt.format = parse_format(format);
        else
            opt.format = file.size() >= 4 && file.substr(file.size() - 4) == ".csv" ? data_format::csv : data_format::svmlight;
        opt.target_column = target_column;
        opt.has_header = header;
        return opt;
    }

    dataset load(const std::string& file) const { return load_dataset(file, options(file)); }
    dataset load() const { return load(path); }
};

struct model_flags {
    std::string kernel = "rbf";
    std::optional<double> gamma;
    double c = 1.0;
    std::string traj = "theta";
    std::optional<double> s;
    std::optional<double> stop_at;
    bool normalize = false;

    void add(CLI::App* app, bool with_c = true) {
        app->add_option("--kernel", kernel, "linear or rbf")->check(CLI::IsMember({"linear", "rbf"}));
        app->add_option("--gamma", gamma, "RBF width (default 1/d)")->check(CLI::PositiveNumber);
        if (with_c) app->add_option("--c", c, "regularization constant")->check(CLI::PositiveNumber);
        if (with_c) app->add_option("--trajectory", traj, "theta or s")->check(CLI::IsMember({"theta", "s"}));
        app->add_option("--s", s, "threshold held fixed along theta (default 0 for svc, 1 for svr)");
        if (with_c) app->add_option("--stop-at", stop_at, "final theta or s");
        app->add_flag("--normalize", normalize, "standardize features (and regression targets)");
    }

    kernel_spec kernel_of() const {
        kernel_spec k;
        k.kind = parse_kernel(kernel);
        if (gamma) {
            if (k.kind == kernel_kind::linear) throw usage_error("--gamma applies to the rbf kernel only");
            k.gamma = *gamma;
        }
        return k;
    }

    homotopy_params start(task_kind task) const {
        homotopy_params p;
        p.c = c;
        const auto t = parse_trajectory(traj);
        p.theta = t == trajectory::op_theta ? 1.0 : 0.0;
        p.s = t == trajectory::op_theta ? s.value_or(task == task_kind::regression ? 1.0 : 0.0) : 0.0;
        if (t == trajectory::op_s && s) throw usage_error("--s applies to the theta trajectory only");
        return p;
    }
};

std::pair<dataset, std::optional<normalization_params>> prepare(const dataset& raw, bool normalize_inputs) {
    if (!normalize_inputs) return {raw, std::nullopt};
    auto [ds, norm] = normalize(raw);
    return {std::move(ds), std::move(norm)};
}

void set_jobs(std::optional<std::size_t>& jobs) {
    if (!jobs) jobs = default_jobs();
    if (*jobs == 0) throw usage_error("--jobs must be positive");
}

void print_event(const path_event& e) {
    std::fprintf(stderr, "%s %.17g %s n_E=%zu n_O=%zu J=%.17g\n", to_string(e.kind), e.param, e.set_change.c_str(), e.n_e,
                 e.n_o, e.objective);
}

// -- train / path -------------------------------------------------------------

struct train_cmd {
    data_flags data;
    model_flags mdl;
    std::string out;
    bool certify = false;
    std::optional<bool> embed;
    std::string trace_out;
    std::string snapshots;
    std::size_t snapshot_every = 1;
    bool verbose = false;
    std::uint64_t seed = 0;
    std::optional<std::size_t> jobs;

    void add(CLI::App* app, bool path_mode) {
        data.add(app);
        mdl.add(app);
        app->add_option("--seed", seed, "accepted for uniformity; tracing is deterministic");
        app->add_option("--jobs", jobs, "worker cap (default OPATH_SVM_JOBS or all cores)");
        app->add_flag("--verbose", verbose, "one line per event on stderr");
        if (path_mode) {
            app->add_option("--trace-out", trace_out, "events CSV")->required();
            app->add_option("--snapshots", snapshots, "alpha snapshots as JSON lines");
            app->add_option("--snapshot-every", snapshot_every, "keep a snapshot at every k-th breakpoint")
                ->check(CLI::PositiveNumber);
            app->add_option("--out", out, "also write the terminal model");
        } else {
            app->add_option("--out", out, "model file")->required();
        }
        app->add_flag("--certify", certify, "embed the local-optimality certificate");
        app->add_flag("--embed-sv,!--no-embed-sv", embed, "store support vectors in the model (default when n <= 10000)");
    }

    int run() {
        set_jobs(jobs);
        const auto kernel = mdl.kernel_of();
        const dataset raw = data.load();
        auto [train, norm] = prepare(raw, mdl.normalize);
        const auto p0 = mdl.start(train.task);
        const auto traj = parse_trajectory(mdl.traj);
        path_options opt;
        opt.stop_at = mdl.stop_at;
        opt.snapshot_every = snapshot_every;
        const auto q = build_q(train, kernel);
        const auto tr = trace_path(q, p0, traj, opt);
        if (verbose)
            for (const auto& e : tr.events) print_event(e);
        if (!trace_out.empty()) write_file(trace_out, path_csv(tr));
        if (!snapshots.empty()) write_file(snapshots, snapshots_jsonl(tr));
        if (!out.empty()) {
            auto m = make_model(train, kernel, tr.final_alpha, tr.params_at(tr.end), traj, embed.value_or(train.n() <= 10000),
                                norm);
            m.method = "op";
            if (certify) {
                const auto it = tr.certificates.find(tr.end);
                if (it == tr.certificates.end()) throw solver_error("no certificate at the terminal point");
                m.certificate = it->second;
                if (!it->second.is_conditionally_optimal) std::fprintf(stderr, "warning: terminal solution not certified\n");
            }
            save_model(out, m);
        }
        return 0;
    }
};

// -- select -------------------------------------------------------------------

struct select_cmd {
    data_flags data;
    model_flags mdl;
    std::string val;
    std::string method = "op-theta";
    std::string c_grid = "0.01,0.1,1,10,100";
    std::size_t candidates = 0;
    std::vector<double> fractions{0.4, 0.3, 0.3};
    std::string out;
    std::string report;
    std::optional<bool> embed;
    std::uint64_t seed = 0;
    std::optional<std::size_t> jobs;

    void add(CLI::App* app) {
        data.add(app);
        mdl.add(app, false);
        app->add_option("--val", val, "validation data (default: split --data with --fractions)");
        app->add_option("--method", method, "op-theta, op-s, cccp-theta, cccp-s or standard");
        app->add_option("--c-grid", c_grid, "comma-separated C values");
        app->add_option("--candidates", candidates, "candidates per C (0: every breakpoint for OP, 5 for CCCP)");
        app->add_option("--fractions", fractions, "train/validation/test fractions")->expected(3);
        app->add_option("--seed", seed, "split seed");
        app->add_option("--jobs", jobs, "worker cap (default OPATH_SVM_JOBS or all cores)");
        app->add_option("--out", out, "selected model")->required();
        app->add_option("--report", report, "selection report (JSON)");
        app->add_flag("--embed-sv,!--no-embed-sv", embed, "store support vectors in the model (default when n <= 10000)");
    }

    int run() {
        set_jobs(jobs);
        const auto m = parse_method(method);
        selection_spec spec;
        spec.kernel = mdl.kernel_of();
        spec.candidates = candidates;
        spec.jobs = *jobs;
        spec.c_grid.clear();
        for (const auto& v : detail::split_list(c_grid)) {
            const auto c = detail::to_double(v);
            if (!c || !(*c > 0.0)) throw usage_error("bad C value '" + v + "'");
            spec.c_grid.push_back(*c);
        }
        if (spec.c_grid.empty()) throw usage_error("empty --c-grid");
        if (mdl.s && m.traj == trajectory::op_s) throw usage_error("--s applies to the theta trajectory only");
        const dataset raw = data.load();
        spec.svr_s = mdl.s.value_or(1.0);
        dataset train, validation;
        std::optional<normalization_params> norm;
        if (val.empty()) {
            auto [ds, nrm] = prepare(raw, mdl.normalize);
            norm = nrm;
            auto parts = split(ds, {{fractions[0], fractions[1], fractions[2]}, seed});
            train = std::move(parts.train);
            validation = std::move(parts.validation);
        } else {
            auto [ds, nrm] = prepare(raw, mdl.normalize);
            train = std::move(ds);
            norm = nrm;
            validation = data.load(val);
            if (norm) validation = norm->apply(validation);
        }
        const auto sel = select_model(train, validation, m, spec);
        auto mm = make_model(train, spec.kernel, sel.alpha, sel.params, m.traj, embed.value_or(train.n() <= 10000), norm);
        mm.method = m.kind == method_kind::op ? "op" : m.kind == method_kind::cccp ? "cccp" : "standard";
        save_model(out, mm);
        const nlohmann::json rep{{"method", m.name()},
                                 {"C", sel.params.c},
                                 {"theta", sel.params.theta},
                                 {"s", sel.params.s},
                                 {"validation_error", sel.validation_error},
                                 {"candidates_evaluated", sel.candidates_evaluated},
                                 {"n_train", train.n()},
                                 {"n_validation", validation.n()}};
        if (!report.empty()) write_file(report, rep.dump(2) + "\n");
        std::cout << rep.dump() << "\n";
        return 0;
    }
};

// -- bench --------------------------------------------------------------------

struct bench_cmd {
    std::string config;
    std::string out = "results.csv";
    std::string summary;
    std::string runs;
    std::string scaling;
    std::vector<std::size_t> ks{5, 20, 80};
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;

    void add(CLI::App* app) {
        app->add_option("--config", config, "experiment config (key = value lines)")->required();
        app->add_option("--out", out, "result rows (CSV)");
        app->add_option("--summary", summary, "result rows (JSON)");
        app->add_option("--runs", runs, "per-run records (JSON lines)");
        app->add_option("--scaling", scaling, "candidate-count scaling timings (CSV)");
        app->add_option("--k", ks, "candidate counts for --scaling");
        app->add_option("--seed", seed, "overrides the config seed");
        app->add_option("--jobs", jobs, "worker cap (default OPATH_SVM_JOBS or all cores)");
    }

    int run() {
        set_jobs(jobs);
        auto spec = parse_experiment_config(read_file(config));
        if (seed) spec.seed = *seed;
        const auto res = run_benchmark(spec, *jobs);
        write_file(out, results_csv(res.rows));
        if (!summary.empty()) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : res.rows) j.push_back(to_json(r));
            write_file(summary, j.dump(2) + "\n");
        }
        if (!runs.empty()) {
            std::string text;
            for (const auto& r : res.runs) text += to_json(r).dump() + "\n";
            write_file(runs, text);
        }
        if (!scaling.empty()) {
            const auto full = materialize(spec.datasets.front(), spec.task, derive_seed(spec.seed, 100, 0));
            const auto parts = prepare_split(full, spec, 0);
            std::string text = "method,k,seconds\n";
            std::vector<trajectory> trajs;
            for (const auto& m : spec.methods)
                if (m.kind != method_kind::standard && std::find(trajs.begin(), trajs.end(), m.traj) == trajs.end())
                    trajs.push_back(m.traj);
            if (trajs.empty()) trajs.push_back(trajectory::op_theta);
            for (auto t : trajs) {
                auto sel = spec.select;
                sel.traj = t;
                for (const auto& pt : candidate_scaling(parts.train, parts.validation, sel, ks))
                    text += pt.method + ',' + std::to_string(pt.k) + ',' + detail::fmt17(pt.seconds) + '\n';
            }
            write_file(scaling, text);
        }
        std::cout << results_csv(res.rows);
        return 0;
    }
};

// -- predict / inject ---------------------------------------------------------

struct predict_cmd {
    data_flags data;
    std::string model_path;
    std::string train_path;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--model", model_path, "model file")->required();
        data.add(app);
        app->add_option("--train", train_path, "training data, for models without embedded support vectors");
        app->add_option("--out", out, "predictions CSV (default stdout)");
    }

    int run() {
        const auto m = load_model(model_path);
        data.task = to_string(m.task);
        const dataset ds = data.load();
        std::optional<dataset> train;
        if (!train_path.empty()) train = data.load(train_path);
        const Eigen::VectorXd f = predict(m, ds.x, train ? &*train : nullptr);
        const std::string text = predictions_csv(f, m.task);
        if (out.empty())
            std::cout << text;
        else
            write_file(out, text);
        return 0;
    }
};

struct inject_cmd {
    data_flags data;
    std::optional<double> fraction;
    double low = -2.0;
    double high = 2.0;
    double sigma = 10.0;
    std::uint64_t seed = 0;
    std::string out;

    void add(CLI::App* app) {
        data.add(app);
        app->add_option("--fraction", fraction, "share of corrupted instances (default 0.15 svc, 0.05 svr)")
            ->check(CLI::Range(0.0, 1.0));
        app->add_option("--low", low, "regression: lower end of the replacement inputs");
        app->add_option("--high", high, "regression: upper end of the replacement inputs");
        app->add_option("--sigma", sigma, "regression: output noise standard deviation")->check(CLI::NonNegativeNumber);
        app->add_option("--seed", seed, "noise seed");
        app->add_option("--out", out, "output file (format follows --data)")->required();
    }

    int run() {
        const auto opt = data.options(data.path);
        const dataset ds = load_dataset(data.path, opt);
        const dataset noisy = ds.task == task_kind::classification
                                  ? flip_labels(ds, fraction.value_or(0.15), seed)
                                  : inject_regression_noise(ds, fraction.value_or(0.05), low, high, sigma, seed);
        write_file(out, opt.format == data_format::csv ? write_csv(noisy, std::min(opt.target_column, noisy.d()))
                                                       : write_svmlight(noisy));
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust SVM training along the outlier path"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "opath_svm 1.0");

    train_cmd train, path;
    select_cmd select;
    bench_cmd bench;
    predict_cmd pred;
    inject_cmd inject;
    train.add(app.add_subcommand("train", "trace the path and write the terminal model"), false);
    path.add(app.add_subcommand("path", "trace the path and export its events"), true);
    select.add(app.add_subcommand("select", "choose C and theta or s on validation data"));
    bench.add(app.add_subcommand("bench", "run a benchmark experiment from a config file"));
    pred.add(app.add_subcommand("predict", "apply a model to new data"));
    inject.add(app.add_subcommand("inject", "corrupt a dataset with label flips or regression outliers"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand("train")) return train.run();
        if (app.got_subcommand("path")) return path.run();
        if (app.got_subcommand("select")) return select.run();
        if (app.got_subcommand("bench")) return bench.run();
        if (app.got_subcommand("predict")) return pred.run();
        if (app.got_subcommand("inject")) return inject.run();
    } catch (const usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
