#pragma once

#include <opath/cccp.hpp>
#include <opath/convex_solver.hpp>
#include <opath/dataset.hpp>
#include <opath/error.hpp>
#include <opath/io.hpp>
#include <opath/kernel.hpp>
#include <opath/loss.hpp>
#include <opath/parallel.hpp>
#include <opath/path.hpp>
#include <opath/rng.hpp>
#include <opath/synthetic.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace opath {

enum class method_kind { op, cccp, standard };

struct method_spec {
    method_kind kind = method_kind::op;
    trajectory traj = trajectory::op_theta;

    std::string name() const {
        if (kind == method_kind::standard) return "standard";
        return std::string(kind == method_kind::op ? "op-" : "cccp-") + to_string(traj);
    }
    friend bool operator==(const method_spec&, const method_spec&) = default;
};

inline method_spec parse_method(std::string_view s) {
    if (s == "standard" || s == "svm") return {method_kind::standard, trajectory::op_theta};
    if (s == "op-theta") return {method_kind::op, trajectory::op_theta};
    if (s == "op-s") return {method_kind::op, trajectory::op_s};
    if (s == "cccp-theta") return {method_kind::cccp, trajectory::op_theta};
    if (s == "cccp-s") return {method_kind::cccp, trajectory::op_s};
    throw validation_error("unknown method '" + std::string(s) + "'");
}

/// What select_* searches over.
struct selection_spec {
    kernel_spec kernel;
    std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
    trajectory traj = trajectory::op_theta;
    /// Candidate count per C. 0 means every recorded breakpoint for OP and
    /// the five-point grid for CCCP.
    std::size_t candidates = 0;
    /// Threshold used by regression along theta.
    double svr_s = 1.0;
    std::size_t jobs = 1;
};

struct selection {
    Eigen::VectorXd alpha;
    homotopy_params params;
    trajectory traj = trajectory::op_theta;
    double validation_error = 0.0;
    std::size_t candidates_evaluated = 0;
};

/// 0-1 error of sign(f) (f = 0 counts as +1) or mean absolute error.
inline double prediction_error(task_kind task, const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
    if (y.size() == 0) return 0.0;
    if (task == task_kind::classification) {
        std::size_t wrong = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if ((f[i] >= 0.0 ? 1.0 : -1.0) != y[i]) ++wrong;
        return static_cast<double>(wrong) / static_cast<double>(y.size());
    }
    return (f - y).cwiseAbs().mean();
}

/**
 * Parameter grid of k points from the convex end to the robust end:
 * theta from 1 to 0, s from s_C to 0 (classification) or from s_R to
 * 0.2 s_R (regression). k = 5 gives the usual five-point grids.
 */
inline std::vector<double> candidate_grid(task_kind task, trajectory traj, std::size_t k, double anchor) {
    if (k == 0) throw precondition_error("candidate grid needs at least one point");
    double from = 1.0, to = 0.0;
    if (traj == trajectory::op_s) {
        from = anchor;
        to = task == task_kind::classification ? 0.0 : 0.2 * anchor;
    }
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i)
        out[i] = k == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(k - 1);
    out.back() = to;
    if (k == 1) out[0] = from;
    return out;
}

namespace detail {

struct candidate {
    double error;
    double robust_key; // smaller is more robust
    double c;
    std::size_t order; // position along the path; later wins among equals
    Eigen::VectorXd alpha;
    homotopy_params params;
};

inline bool better(const candidate& a, const candidate& b) {
    return std::tie(a.error, a.robust_key, a.c) < std::tie(b.error, b.robust_key, b.c) ||
           (std::tie(a.error, a.robust_key, a.c) == std::tie(b.error, b.robust_key, b.c) && a.order > b.order);
}

inline double robust_key(trajectory traj, const homotopy_params& p) {
    return traj == trajectory::op_theta ? p.theta : std::abs(p.s);
}

struct validation_context {
    Eigen::MatrixXd k_val; // K(x_val, x_train)
    const dataset* train;
    const dataset* val;

    Eigen::VectorXd scores(const Eigen::VectorXd& alpha) const {
        const Eigen::VectorXd w =
            train->task == task_kind::classification ? Eigen::VectorXd(alpha.cwiseProduct(train->y)) : alpha;
        return k_val * w;
    }
    double error(const Eigen::VectorXd& alpha) const { return prediction_error(train->task, scores(alpha), val->y); }
};

inline homotopy_params start_params(task_kind task, trajectory traj, double c, double svr_s) {
    homotopy_params p;
    p.c = c;
    p.theta = traj == trajectory::op_theta ? 1.0 : 0.0;
    p.s = traj == trajectory::op_theta && task == task_kind::regression ? svr_s : 0.0;
    return p;
}

inline double s_anchor(const q_matrix& q, const Eigen::VectorXd& std_alpha) {
    const Eigen::VectorXd z = margins(q, std_alpha);
    return q.task() == task_kind::classification ? std::min(z.minCoeff(), 0.0) : z.cwiseAbs().maxCoeff();
}

template <class PerC>
selection run_grid(const dataset& train, const dataset& val, const selection_spec& spec, PerC per_c) {
    if (spec.c_grid.empty()) throw validation_error("empty C grid");
    if (train.n() == 0) throw precondition_error("empty training set");
    validation_context ctx{cross_kernel(spec.kernel.resolved(train.d()), val.x, train.x), &train, &val};
    const q_matrix q = build_q(train, spec.kernel);
    std::vector<std::vector<candidate>> per(spec.c_grid.size());
    parallel_for(spec.c_grid.size(), spec.jobs, [&](std::size_t k) { per[k] = per_c(q, ctx, spec.c_grid[k]); });
    std::optional<candidate> best;
    std::size_t count = 0;
    for (auto& list : per) {
        for (auto& cand : list) {
            ++count;
            if (!best || better(cand, *best)) best = std::move(cand);
        }
    }
    if (!best) throw validation_error("no model-selection candidates");
    return {std::move(best->alpha), best->params, spec.traj, best->error, count};
}

} // namespace detail

/**
 * Outlier-path selection: one trace per C, validation error at every
 * recorded breakpoint (or on a k-point grid read off the path), best
 * candidate by validation error, then the more robust parameter, then the
 * smaller C.
 */
inline selection select_op(const dataset& train, const dataset& val, const selection_spec& spec) {
    return detail::run_grid(train, val, spec, [&](const q_matrix& q, const detail::validation_context& ctx, double c) {
        const auto p0 = detail::start_params(train.task, spec.traj, c, spec.svr_s);
        const auto tr = trace_path(q, p0, spec.traj);
        std::vector<detail::candidate> out;
        auto add = [&](double t, const Eigen::VectorXd& a) {
            const auto p = tr.params_at(t);
            out.push_back({ctx.error(a), detail::robust_key(spec.traj, p), c, out.size(), a, p});
        };
        if (spec.candidates == 0) {
            for (const auto& e : tr.events)
                if (e.alpha) add(e.param, *e.alpha);
            add(tr.end, tr.final_alpha);
        } else {
            // validation scores are linear in t on a segment: two products per segment, O(n_val) per candidate
            const segment_coefficients* cached = nullptr;
            Eigen::VectorXd fa, fb;
            for (double t : candidate_grid(train.task, spec.traj, spec.candidates, tr.start)) {
                const auto& seg = tr.segment_at(t);
                if (&seg != cached) {
                    cached = &seg;
                    fa = ctx.scores(seg.a);
                    fb = ctx.scores(seg.b);
                }
                const auto p = tr.params_at(t);
                out.push_back({prediction_error(train.task, fa + fb * t, val.y), detail::robust_key(spec.traj, p), c,
                               out.size(), seg.alpha(t), p});
            }
        }
        return out;
    });
}

/// Grid search with CCCP, each cell warm-started from the previous, more convex one.
inline selection select_cccp(const dataset& train, const dataset& val, const selection_spec& spec,
                             const cccp_options& opt = {}) {
    return detail::run_grid(train, val, spec, [&](const q_matrix& q, const detail::validation_context& ctx, double c) {
        const auto p0 = detail::start_params(train.task, spec.traj, c, spec.svr_s);
        const auto std_sol = solve_standard_svm(q, p0);
        const double anchor = spec.traj == trajectory::op_s ? detail::s_anchor(q, std_sol.alpha) : 1.0;
        const std::size_t k = spec.candidates ? spec.candidates : 5;
        std::vector<detail::candidate> out;
        Eigen::VectorXd warm = std_sol.alpha;
        for (double t : candidate_grid(train.task, spec.traj, k, anchor)) {
            homotopy_params p = p0;
            (spec.traj == trajectory::op_theta ? p.theta : p.s) = t;
            auto r = cccp_train(q, p, warm, opt);
            warm = r.sol.alpha;
            out.push_back({ctx.error(warm), detail::robust_key(spec.traj, p), c, out.size(), warm, p});
        }
        return out;
    });
}

/// Standard SVM: only C is selected.
inline selection select_standard(const dataset& train, const dataset& val, const selection_spec& spec) {
    auto s = spec;
    s.traj = trajectory::op_theta;
    return detail::run_grid(train, val, s, [&](const q_matrix& q, const detail::validation_context& ctx, double c) {
        const auto p = detail::start_params(train.task, trajectory::op_theta, c, 0.0);
        auto sol = solve_standard_svm(q, p);
        return std::vector<detail::candidate>{{ctx.error(sol.alpha), 1.0, c, 0, std::move(sol.alpha), p}};
    });
}

inline selection select_model(const dataset& train, const dataset& val, const method_spec& m, selection_spec spec) {
    spec.traj = m.traj;
    switch (m.kind) {
    case method_kind::op: return select_op(train, val, spec);
    case method_kind::cccp: return select_cccp(train, val, spec);
    case method_kind::standard: return select_standard(train, val, spec);
    }
    throw precondition_error("unknown method");
}

// -- benchmark ------------------------------------------------------------

/// A data file, or a synthetic generator: `synthetic:gaussian:N:D[:SHIFT]`
/// (class means at +/- SHIFT along the diagonal, default 2) or
/// `synthetic:sine:N:D[:NOISE]` (default 0.3).
struct dataset_source {
    std::string id;
    load_options load;
};

struct noise_spec {
    double flip_fraction = 0.15;
    double fraction = 0.05;
    double low = -2.0;
    double high = 2.0;
    double sigma = 10.0;
};

struct experiment_spec {
    task_kind task = task_kind::classification;
    selection_spec select;
    std::vector<method_spec> methods{{method_kind::op, trajectory::op_theta}};
    std::vector<dataset_source> datasets;
    noise_spec noise;
    std::array<double, 3> fractions{0.4, 0.3, 0.3};
    std::size_t n_repeats = 10;
    std::uint64_t seed = 0;
    bool normalize = true;
};

struct run_record {
    std::string dataset;
    std::string method;
    std::size_t repeat = 0;
    double test_error = 0.0;
    double validation_error = 0.0;
    double seconds = 0.0;
    double c = 0.0;
    double param = 0.0;
};

struct result_row {
    std::string method;
    std::string dataset;
    double mean_error = 0.0;
    double std_error = 0.0;
    double mean_time = 0.0;
    /// Most frequently selected C (smallest among ties) and the mean selected theta or s.
    double selected_c = 0.0;
    double selected_param = 0.0;
    std::size_t n_repeats = 0;
};

struct benchmark_result {
    std::vector<result_row> rows;
    std::vector<run_record> runs;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    rng g(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
    return g.next();
}

inline bool is_synthetic(const dataset_source& src) { return src.id.rfind("synthetic:", 0) == 0; }

inline dataset materialize(const dataset_source& src, task_kind task, std::uint64_t seed) {
    if (is_synthetic(src)) {
        std::vector<std::string> parts;
        std::string cur;
        for (char ch : src.id.substr(10)) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3 && parts.size() != 4)
            throw validation_error("synthetic source must look like synthetic:KIND:N:D[:P]");
        auto number = [&](const std::string& v) {
            const auto x = detail::to_double(v);
            if (!x || *x < 0.0) throw validation_error("bad synthetic parameter '" + v + "' in " + src.id);
            return *x;
        };
        const auto n = static_cast<std::size_t>(number(parts[1]));
        const auto d = static_cast<std::size_t>(number(parts[2]));
        if (n == 0 || d == 0) throw validation_error("synthetic source needs N, D > 0: " + src.id);
        if (parts[0] == "gaussian") {
            if (task != task_kind::classification) throw validation_error("synthetic:gaussian is a classification source");
            return make_gaussian_classes(n, d, parts.size() == 4 ? number(parts[3]) : 2.0, seed);
        }
        if (parts[0] == "sine") {
            if (task != task_kind::regression) throw validation_error("synthetic:sine is a regression source");
            return make_sine_regression(n, d, parts.size() == 4 ? number(parts[3]) : 0.3, seed);
        }
        throw validation_error("unknown synthetic source '" + parts[0] + "'");
    }
    auto opt = src.load;
    opt.task = task;
    return load_dataset(src.id, opt);
}

struct prepared_split {
    dataset train, validation, test;
};

/// Normalize, split, then corrupt the training and validation folds (the test fold stays clean).
inline prepared_split prepare_split(const dataset& full, const experiment_spec& spec, std::size_t repeat) {
    const dataset base = spec.normalize && full.n() >= 2 ? normalize(full).first : full;
    auto parts = split(base, {spec.fractions, derive_seed(spec.seed, 1, repeat)});
    auto corrupt = [&](const dataset& ds, std::uint64_t k) {
        const auto s = derive_seed(spec.seed, k, repeat);
        if (ds.task == task_kind::classification)
            return spec.noise.flip_fraction > 0.0 ? flip_labels(ds, spec.noise.flip_fraction, s) : ds;
        return spec.noise.fraction > 0.0
                   ? inject_regression_noise(ds, spec.noise.fraction, spec.noise.low, spec.noise.high, spec.noise.sigma, s)
                   : ds;
    };
    return {corrupt(parts.train, 2), corrupt(parts.validation, 3), std::move(parts.test)};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/**
 * n_repeats split + noise + select + test cycles for every dataset and
 * method. Cells run on up to `jobs` workers; each cell is timed around
 * selection (training included). Results do not depend on `jobs`.
 */
inline benchmark_result run_benchmark(const experiment_spec& spec, std::size_t jobs = 1) {
    if (spec.methods.empty()) throw validation_error("no methods configured");
    if (spec.datasets.empty()) throw validation_error("no datasets configured");
    if (spec.n_repeats == 0) throw validation_error("n_repeats must be positive");
    // files are read once; synthetic sources draw a fresh sample per repeat
    const std::size_t n_sets = spec.datasets.size();
    std::vector<dataset> full(n_sets * spec.n_repeats);
    for (std::size_t d = 0; d < n_sets; ++d) {
        const bool synthetic = is_synthetic(spec.datasets[d]);
        for (std::size_t r = 0; r < spec.n_repeats; ++r)
            full[d * spec.n_repeats + r] = synthetic || r == 0
                                               ? materialize(spec.datasets[d], spec.task, derive_seed(spec.seed, 100 + d, r))
                                               : full[d * spec.n_repeats];
    }
    struct cell {
        std::size_t ds, rep, method;
    };
    std::vector<cell> cells;
    for (std::size_t d = 0; d < n_sets; ++d)
        for (std::size_t r = 0; r < spec.n_repeats; ++r)
            for (std::size_t m = 0; m < spec.methods.size(); ++m) cells.push_back({d, r, m});
    std::vector<run_record> runs(cells.size());
    selection_spec inner = spec.select;
    inner.jobs = 1;
    parallel_for(cells.size(), jobs, [&](std::size_t k) {
        const auto& c = cells[k];
        const auto parts = prepare_split(full[c.ds * spec.n_repeats + c.rep], spec, c.rep);
        const auto& m = spec.methods[c.method];
        const auto t0 = std::chrono::steady_clock::now();
        const auto sel = select_model(parts.train, parts.validation, m, inner);
        const double secs = seconds_since(t0);
        const Eigen::VectorXd f = evaluate_model(sel.alpha, parts.train, inner.kernel, parts.test.x);
        const double param = m.kind == method_kind::standard ? 1.0
                             : m.traj == trajectory::op_theta ? sel.params.theta
                                                              : sel.params.s;
        runs[k] = {spec.datasets[c.ds].id, m.name(), c.rep, prediction_error(spec.task, f, parts.test.y),
                   sel.validation_error, secs, sel.params.c, param};
    });
    benchmark_result out;
    out.runs = runs;
    for (std::size_t d = 0; d < n_sets; ++d) {
        for (const auto& m : spec.methods) {
            result_row row;
            row.method = m.name();
            row.dataset = spec.datasets[d].id;
            std::vector<const run_record*> mine;
            for (const auto& r : runs)
                if (r.dataset == row.dataset && r.method == row.method) mine.push_back(&r);
            const double n = static_cast<double>(mine.size());
            std::map<double, std::size_t> c_votes;
            for (const auto* r : mine) {
                row.mean_error += r->test_error;
                row.mean_time += r->seconds;
                row.selected_param += r->param;
                ++c_votes[r->c];
            }
            row.mean_error /= n;
            row.mean_time /= n;
            row.selected_param /= n;
            for (const auto* r : mine) row.std_error += (r->test_error - row.mean_error) * (r->test_error - row.mean_error) / n;
            row.std_error = std::sqrt(row.std_error);
            std::size_t top = 0;
            for (const auto& [cv, votes] : c_votes)
                if (votes > top) {
                    top = votes;
                    row.selected_c = cv;
                }
            row.n_repeats = mine.size();
            out.rows.push_back(row);
        }
    }
    return out;
}

inline std::string results_csv(const std::vector<result_row>& rows) {
    std::string out = "method,dataset,mean_error,std_error,mean_time,selected_c,selected_param,n_repeats\n";
    for (const auto& r : rows)
        out += r.method + ',' + r.dataset + ',' + detail::fmt17(r.mean_error) + ',' + detail::fmt17(r.std_error) + ',' +
               detail::fmt17(r.mean_time) + ',' + detail::fmt17(r.selected_c) + ',' + detail::fmt17(r.selected_param) +
               ',' + std::to_string(r.n_repeats) + '\n';
    return out;
}

inline nlohmann::json to_json(const run_record& r) {
    return {{"dataset", r.dataset}, {"method", r.method}, {"repeat", r.repeat},  {"test_error", r.test_error},
            {"validation_error", r.validation_error},     {"seconds", r.seconds}, {"C", r.c}, {"param", r.param}};
}

inline nlohmann::json to_json(const result_row& r) {
    return {{"method", r.method},         {"dataset", r.dataset},       {"mean_error", r.mean_error},
            {"std_error", r.std_error},   {"mean_time", r.mean_time},   {"selected_c", r.selected_c},
            {"selected_param", r.selected_param}, {"n_repeats", r.n_repeats}};
}

// -- candidate-count scaling ----------------------------------------------

struct scaling_point {
    std::string method;
    std::size_t k = 0;
    double seconds = 0.0;
};

/**
 * Wall time of selection with k candidates per C, for OP and CCCP on the
 * same split. Each timing is the minimum over `reps` single-threaded runs.
 */
inline std::vector<scaling_point> candidate_scaling(const dataset& train, const dataset& val, selection_spec spec,
                                                    const std::vector<std::size_t>& ks, std::size_t reps = 3) {
    spec.jobs = 1;
    std::vector<scaling_point> out;
    for (auto kind : {method_kind::op, method_kind::cccp}) {
        for (std::size_t k : ks) {
            spec.candidates = k;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                if (kind == method_kind::op)
                    (void)select_op(train, val, spec);
                else
                    (void)select_cccp(train, val, spec);
                best = std::min(best, seconds_since(t0));
            }
            out.push_back({method_spec{kind, spec.traj}.name(), k, best});
        }
    }
    return out;
}

// -- experiment config ----------------------------------------------------

namespace detail {

inline std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : v) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace detail

/**
 * Experiment config: one `key = value` per line, `#` starts a comment.
 * Keys: task, kernel, gamma, c_grid, methods, dataset (repeatable),
 * format, target_column, header, n_repeats, seed, fractions,
 * flip_fraction, noise_fraction, noise_low, noise_high, noise_sigma,
 * candidates, svr_s, normalize. Lists are comma or space separated.
 */
inline experiment_spec parse_experiment_config(std::string_view text) {
    experiment_spec spec;
    spec.methods.clear();
    load_options load;
    bool kernel_set = false;
    std::optional<double> gamma;
    const auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::size_t line_no = ln + 1;
        std::string_view line = lines[ln];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw parse_error("expected 'key = value'", line_no);
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw parse_error("missing key", line_no);
        if (value.empty()) throw parse_error("missing value for '" + key + "'", line_no);
        auto number = [&](std::string_view v) {
            const auto d = detail::to_double(v);
            if (!d) throw parse_error("'" + std::string(v) + "' is not a number", line_no);
            return *d;
        };
        auto count = [&](std::string_view v) {
            const double d = number(v);
            if (d < 0.0 || d != std::floor(d)) throw parse_error("'" + std::string(v) + "' is not a count", line_no);
            return static_cast<std::size_t>(d);
        };
        auto flag = [&](std::string_view v) {
            if (v == "true" || v == "1" || v == "yes") return true;
            if (v == "false" || v == "0" || v == "no") return false;
            throw parse_error("'" + std::string(v) + "' is not a boolean", line_no);
        };
        try {
            if (key == "task") {
                spec.task = parse_task(value);
            } else if (key == "kernel") {
                spec.select.kernel.kind = parse_kernel(value);
                kernel_set = true;
            } else if (key == "gamma") {
                gamma = number(value);
                if (!(*gamma > 0.0)) throw parse_error("gamma must be positive", line_no);
            } else if (key == "c_grid") {
                spec.select.c_grid.clear();
                for (const auto& v : detail::split_list(value)) {
                    const double c = number(v);
                    if (!(c > 0.0)) throw parse_error("C values must be positive", line_no);
                    spec.select.c_grid.push_back(c);
                }
                if (spec.select.c_grid.empty()) throw parse_error("empty C grid", line_no);
            } else if (key == "methods") {
                for (const auto& v : detail::split_list(value)) spec.methods.push_back(parse_method(v));
            } else if (key == "dataset") {
                spec.datasets.push_back({std::string(value), {}});
            } else if (key == "format") {
                load.format = parse_format(value);
            } else if (key == "target_column") {
                load.target_column = count(value);
            } else if (key == "header") {
                load.has_header = flag(value);
            } else if (key == "n_repeats") {
                spec.n_repeats = count(value);
                if (spec.n_repeats == 0) throw parse_error("n_repeats must be positive", line_no);
            } else if (key == "seed") {
                spec.seed = count(value);
            } else if (key == "fractions") {
                const auto parts = detail::split_list(value);
                if (parts.size() != 3) throw parse_error("fractions needs three values", line_no);
                for (int k = 0; k < 3; ++k) spec.fractions[static_cast<std::size_t>(k)] = number(parts[static_cast<std::size_t>(k)]);
                (void)split_sizes(0, spec.fractions);
            } else if (key == "flip_fraction") {
                spec.noise.flip_fraction = number(value);
            } else if (key == "noise_fraction") {
                spec.noise.fraction = number(value);
            } else if (key == "noise_low") {
                spec.noise.low = number(value);
            } else if (key == "noise_high") {
                spec.noise.high = number(value);
            } else if (key == "noise_sigma") {
                spec.noise.sigma = number(value);
            } else if (key == "candidates") {
                spec.select.candidates = count(value);
            } else if (key == "svr_s") {
                spec.select.svr_s = number(value);
            } else if (key == "normalize") {
                spec.normalize = flag(value);
            } else {
                throw parse_error("unknown key '" + key + "'", line_no);
            }
        } catch (const parse_error&) {
            throw;
        } catch (const error& e) {
            throw parse_error(e.what(), line_no);
        }
    }
    if (gamma) {
        if (kernel_set && spec.select.kernel.kind == kernel_kind::linear)
            throw validation_error("gamma given for a linear kernel");
        spec.select.kernel.gamma = *gamma;
    }
    for (auto& d : spec.datasets) d.load = load;
    if (spec.methods.empty()) spec.methods = {{method_kind::standard, trajectory::op_theta}, {method_kind::op, trajectory::op_theta}};
    return spec;
}

} // namespace opath
