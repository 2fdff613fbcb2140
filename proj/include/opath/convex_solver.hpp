#pragma once

#include <opath/detail/piecewise.hpp>
#include <opath/error.hpp>
#include <opath/kernel.hpp>
#include <opath/loss.hpp>
#include <opath/partition.hpp>

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace opath {

enum class solution_status { optimal, infeasible, iteration_limit };

inline const char* to_string(solution_status s) {
    switch (s) {
    case solution_status::optimal: return "optimal";
    case solution_status::infeasible: return "infeasible";
    case solution_status::iteration_limit: return "iteration_limit";
    }
    return "?";
}

/// Convex problem over one partition's polytope at fixed (theta, s, C).
struct conditional_problem {
    const q_matrix* q = nullptr;
    partition part;
    homotopy_params params;
    std::optional<Eigen::VectorXd> warm_start;
};

struct solution {
    Eigen::VectorXd alpha;
    double objective = 0.0;
    std::size_t iterations = 0;
    solution_status status = solution_status::optimal;
    bool degenerate = false;
    /// Final working set, reusable as a warm start by the path tracer.
    std::vector<detail::coord_state> states;
};

namespace detail {

inline std::vector<coord_state> start_states(const std::vector<coord_model>& models,
                                             const std::optional<Eigen::VectorXd>& warm, Eigen::VectorXd& alpha) {
    const auto n = static_cast<Eigen::Index>(models.size());
    std::vector<coord_state> states(models.size());
    alpha.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = models[static_cast<std::size_t>(i)];
        if (!warm) {
            states[static_cast<std::size_t>(i)] = cold_state(m);
            alpha[i] = state_value(m, states[static_cast<std::size_t>(i)], 0.0);
            if (states[static_cast<std::size_t>(i)].kind == coord_kind::free) alpha[i] = 0.0;
            continue;
        }
        double v = (*warm)[i];
        const double lo = m.points.front().c0;
        const double hi = m.points.back().c0;
        if (std::isfinite(lo)) v = std::max(v, lo);
        if (std::isfinite(hi)) v = std::min(v, hi);
        states[static_cast<std::size_t>(i)] = derive_state(m, v, 0.0);
        alpha[i] = states[static_cast<std::size_t>(i)].kind == coord_kind::free
                       ? v
                       : state_value(m, states[static_cast<std::size_t>(i)], 0.0);
    }
    return states;
}

inline solution run_fixed(const Eigen::MatrixXd& q, std::vector<coord_model> models,
                          const std::optional<Eigen::VectorXd>& warm) {
    Eigen::VectorXd alpha;
    auto states = start_states(models, warm, alpha);
    piecewise_system sys(q, std::move(models), std::move(states));
    const auto rep = sys.solve_fixed(0.0, alpha, 50 * static_cast<std::size_t>(std::max<Eigen::Index>(q.rows(), 1)));
    solution out;
    out.alpha = std::move(alpha);
    out.iterations = rep.iterations;
    out.status = rep.status == solve_status::optimal     ? solution_status::optimal
                 : rep.status == solve_status::infeasible ? solution_status::infeasible
                                                          : solution_status::iteration_limit;
    out.degenerate = sys.degenerate();
    out.states = sys.states();
    return out;
}

inline std::vector<coord_model> conditional_models(const q_matrix& q, const partition& part,
                                                   const homotopy_params& p) {
    std::vector<coord_model> models;
    models.reserve(q.n());
    for (std::size_t i = 0; i < q.n(); ++i)
        models.push_back(make_coord_model(q.task(), part[i], q.targets()[static_cast<Eigen::Index>(i)], p, false));
    return models;
}

} // namespace detail

/**
 * Conditionally optimal solution of the given partition by a primal
 * active-set method. A polytope admitting no solution shows up as an
 * unbounded dual ray and is reported as `infeasible`.
 */
inline solution solve_conditional(const conditional_problem& prob) {
    if (!prob.q) throw precondition_error("conditional problem without a kernel matrix");
    const q_matrix& q = *prob.q;
    if (prob.part.n() != q.n()) throw precondition_error("partition size does not match the kernel matrix");
    if (prob.warm_start && static_cast<std::size_t>(prob.warm_start->size()) != q.n())
        throw precondition_error("warm start size does not match the kernel matrix");
    prob.params.check(q.task());
    auto out = detail::run_fixed(q.dense(), detail::conditional_models(q, prob.part, prob.params), prob.warm_start);
    out.objective = objective(q, out.alpha, prob.params);
    return out;
}

/**
 * Hinge (classification) or absolute-loss (regression) kernel machine with
 * per-instance caps: 1/2 a'Qa + sum_i caps_i loss(z_i).
 */
inline solution solve_box(const q_matrix& q, const Eigen::VectorXd& caps,
                          const std::optional<Eigen::VectorXd>& warm = std::nullopt) {
    if (static_cast<std::size_t>(caps.size()) != q.n()) throw precondition_error("caps size mismatch");
    std::vector<detail::coord_model> models;
    models.reserve(q.n());
    for (Eigen::Index i = 0; i < caps.size(); ++i)
        models.push_back(detail::make_box_model(q.task(), q.targets()[i], caps[i]));
    auto out = detail::run_fixed(q.dense(), std::move(models), warm);
    const Eigen::VectorXd qa = q.dense() * out.alpha;
    const Eigen::VectorXd z = margins_from_scores(q, qa);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        loss += caps[i] * (q.is_signed() ? std::max(0.0, 1.0 - z[i]) : std::abs(z[i]));
    out.objective = 0.5 * out.alpha.dot(qa) + loss;
    return out;
}

/// Standard convex SVM (hinge or absolute loss, no intercept) at regularization p.c.
inline solution solve_standard_svm(const q_matrix& q, const homotopy_params& p) {
    if (!(p.c > 0.0)) throw precondition_error("C must be positive");
    return solve_box(q, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q.n()), p.c));
}

} // namespace opath
