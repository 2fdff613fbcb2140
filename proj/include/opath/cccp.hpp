#pragma once

#include <opath/convex_solver.hpp>
#include <opath/detail/piecewise.hpp>
#include <opath/error.hpp>
#include <opath/kernel.hpp>
#include <opath/loss.hpp>
#include <opath/partition.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>

// The robust losses split as a convex part minus a concave ramp:
//
//   classification  [1-z]_+ - (1-theta)[s-z]_+
//   regression      |z|     - (1-theta)[|z|-s]_+
//
// (exact on the two trajectories). CCCP replaces the ramp by its tangent at
// the current margins. For a marked instance the tangent is linear in z and
// only shifts that coefficient's box, so every outer step is a plain kernel
// machine with per-instance bounds.

namespace opath {

struct cccp_options {
    std::size_t max_outer = 100;
    /// Stop once |J_k - J_{k-1}| <= rel_tol * max(1, |J_{k-1}|).
    double rel_tol = 1e-8;
};

struct cccp_result {
    solution sol;
    /// Instances treated as outliers in the last surrogate.
    std::vector<bool> outlier_flags;
    std::size_t outer_iterations = 0;
    /// True objective after each outer step, starting with the initial point.
    std::vector<double> objective_history;
    /// The outlier set stopped changing.
    bool converged = false;

    /// Partition induced by the flags (regression outliers split by residual sign).
    partition induced_partition(const q_matrix& q) const {
        partition part(outlier_flags.size());
        const Eigen::VectorXd z = margins(q, sol.alpha);
        for (std::size_t i = 0; i < outlier_flags.size(); ++i) {
            if (!outlier_flags[i]) continue;
            const bool low = q.task() == task_kind::regression && z[static_cast<Eigen::Index>(i)] < 0.0;
            part.set(i, low ? side::outlier_low : side::outlier);
        }
        return part;
    }
};

namespace detail {

inline std::vector<bool> mark_outliers(task_kind task, const Eigen::VectorXd& z, double s) {
    std::vector<bool> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i)
        out[static_cast<std::size_t>(i)] = task == task_kind::classification ? z[i] < s : std::abs(z[i]) > s;
    return out;
}

inline std::vector<coord_model> cccp_models(const q_matrix& q, const Eigen::VectorXd& z, const std::vector<bool>& marked,
                                            const homotopy_params& p) {
    std::vector<coord_model> models;
    models.reserve(q.n());
    const double shift = p.c * (1.0 - p.theta);
    for (std::size_t i = 0; i < q.n(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double y = q.targets()[ii];
        double lo = q.is_signed() ? 0.0 : -p.c;
        double hi = p.c;
        if (marked[i]) {
            const double sign = q.is_signed() || z[ii] >= 0.0 ? 1.0 : -1.0;
            lo -= sign * shift;
            hi -= sign * shift;
        }
        models.push_back(make_interval_model(q.task(), y, lo, hi));
    }
    return models;
}

} // namespace detail

/**
 * Concave-convex procedure at fixed (theta, s, C). Starts from `init`
 * (the standard SVM when absent), marks outliers by the current margins,
 * solves the convexified problem warm-started from the previous
 * coefficients and repeats until the marks repeat, the objective settles
 * or `max_outer` steps have run.
 */
inline cccp_result cccp_train(const q_matrix& q, const homotopy_params& p, const std::optional<Eigen::VectorXd>& init = std::nullopt,
                              const cccp_options& opt = {}) {
    p.check(q.task());
    if (!p.on_trajectory(q.task())) throw precondition_error("CCCP needs theta = 0 or s = 0 for classification");
    if (init && static_cast<std::size_t>(init->size()) != q.n()) throw precondition_error("initial alpha size mismatch");
    cccp_result out;
    Eigen::VectorXd alpha;
    if (init) {
        alpha = *init;
    } else {
        auto std_sol = solve_standard_svm(q, p);
        if (std_sol.status != solution_status::optimal) throw solver_error("standard SVM did not converge");
        alpha = std::move(std_sol.alpha);
    }
    double j = objective(q, alpha, p);
    out.objective_history.push_back(j);
    Eigen::VectorXd z = margins(q, alpha);
    std::vector<bool> marks = detail::mark_outliers(q.task(), z, p.s);
    std::size_t total_iters = 0;
    for (out.outer_iterations = 0; out.outer_iterations < opt.max_outer;) {
        auto step = detail::run_fixed(q.dense(), detail::cccp_models(q, z, marks, p), alpha);
        ++out.outer_iterations;
        total_iters += step.iterations;
        if (step.status != solution_status::optimal)
            throw solver_error(std::string("CCCP surrogate solve failed: ") + to_string(step.status));
        const double j_new = objective(q, step.alpha, p);
        // the surrogate majorizes J, so a rise can only be round-off; keep the better point
        if (j_new > j + 1e-12 * std::max(1.0, std::abs(j))) break;
        out.sol = std::move(step);
        alpha = out.sol.alpha;
        out.objective_history.push_back(j_new);
        const double prev = j;
        j = j_new;
        z = margins(q, alpha);
        auto next = detail::mark_outliers(q.task(), z, p.s);
        if (next == marks) {
            out.converged = true;
            break;
        }
        if (std::abs(j - prev) <= opt.rel_tol * std::max(1.0, std::abs(prev))) break;
        marks = std::move(next);
    }
    out.sol.alpha = alpha;
    out.sol.objective = j;
    out.sol.iterations = total_iters;
    out.outlier_flags = marks;
    return out;
}

} // namespace opath
