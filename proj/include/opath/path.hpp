#pragma once

#include <opath/convex_solver.hpp>
#include <opath/dataset.hpp>
#include <opath/detail/piecewise.hpp>
#include <opath/error.hpp>
#include <opath/kernel.hpp>
#include <opath/loss.hpp>
#include <opath/partition.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace opath {

enum class trajectory { op_theta, op_s };

inline const char* to_string(trajectory t) { return t == trajectory::op_theta ? "theta" : "s"; }

inline trajectory parse_trajectory(std::string_view s) {
    if (s == "theta") return trajectory::op_theta;
    if (s == "s") return trajectory::op_s;
    throw validation_error("unknown trajectory '" + std::string(s) + "'");
}

enum class event_kind { breakpoint, boundary_hit, jump, terminal };

inline const char* to_string(event_kind k) {
    switch (k) {
    case event_kind::breakpoint: return "breakpoint";
    case event_kind::boundary_hit: return "boundary_hit";
    case event_kind::jump: return "jump";
    case event_kind::terminal: return "terminal";
    }
    return "?";
}

struct path_event {
    event_kind kind = event_kind::breakpoint;
    double param = 0.0;
    std::optional<std::size_t> moved_index;
    std::string set_change;
    double objective = 0.0;
    std::size_t n_e = 0;
    std::size_t n_o = 0;
    bool degenerate = false;
    std::optional<Eigen::VectorXd> alpha;
    /// Partition the snapshot belongs to (set together with `alpha`).
    std::optional<partition> part;
    /// Jumps only: objective just before the flip and the distance of the
    /// mu = 1 end of the jump path from the pre-flip coefficients.
    double objective_before = std::numeric_limits<double>::quiet_NaN();
    double mu_one_deviation = std::numeric_limits<double>::quiet_NaN();
};

/// alpha(t) = a + b t for t between `from` and `to`, under partition `part`.
struct segment_coefficients {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    double from = 0.0;
    double to = 0.0;
    partition part;
    bool degenerate = false;

    bool contains(double t) const { return t >= std::min(from, to) && t <= std::max(from, to); }
    Eigen::VectorXd alpha(double t) const { return a + b * t; }
};

struct path_options {
    /// Final theta (OP-theta) or s (OP-s). Defaults to 0, except regression
    /// OP-s which stops at 0.2 s_R: at s = 0 every zero-residual instance
    /// sits on the threshold and no solution can be certified.
    std::optional<double> stop_at;
    /// Parameter values where a certificate is recorded in addition to the terminal point.
    std::vector<double> checkpoints;
    /// Keep an alpha snapshot at every k-th breakpoint (jumps always keep one).
    std::size_t snapshot_every = 1;
    /// Upper bound on the number of events; 0 picks 200 n + 1000.
    std::size_t max_events = 0;
    /// Margin tolerance for threshold detection; <= 0 uses 1e-9 max(1, |s|).
    double boundary_tol = 0.0;
};

class path_trace {
public:
    trajectory traj = trajectory::op_theta;
    task_kind task = task_kind::classification;
    /// C, and for OP-theta the fixed threshold s.
    homotopy_params base;
    double start = 1.0;
    double end = 0.0;
    std::vector<path_event> events;
    std::vector<segment_coefficients> segments;
    Eigen::VectorXd final_alpha;
    partition final_partition;
    std::map<double, optimality_certificate> certificates;

    homotopy_params params_at(double t) const {
        homotopy_params p = base;
        if (traj == trajectory::op_theta)
            p.theta = t;
        else
            p.s = t;
        return p;
    }

    bool covers(double t) const { return t >= std::min(start, end) && t <= std::max(start, end); }

    /// Solution at t; at a jump this is the post-jump solution.
    Eigen::VectorXd alpha_at(double t) const { return segment_at(t).alpha(t); }
    partition partition_at(double t) const { return segment_at(t).part; }

    /// Latest segment containing t.
    const segment_coefficients& segment_at(double t) const {
        if (segments.empty()) throw precondition_error("path trace has no segments");
        for (auto it = segments.rbegin(); it != segments.rend(); ++it)
            if (it->contains(t)) return *it;
        throw precondition_error("parameter " + std::to_string(t) + " lies outside the traced range");
    }

    /// Parameter values of all events that carry an alpha snapshot.
    std::vector<double> snapshot_params() const {
        std::vector<double> out;
        for (const auto& e : events)
            if (e.alpha) out.push_back(e.param);
        return out;
    }

    std::size_t count(event_kind k) const {
        return static_cast<std::size_t>(
            std::count_if(events.begin(), events.end(), [k](const path_event& e) { return e.kind == k; }));
    }
};

namespace detail {

struct bound_choice {
    int index;
    double value;
};

/// Breakpoint a flipped coefficient is driven to during a jump, in the new side's model.
inline bound_choice flip_bound(task_kind task, side from, side to, double c, double ct) {
    if (task == task_kind::classification) return from == side::inlier ? bound_choice{1, ct} : bound_choice{1, c};
    if (from == side::inlier) return to == side::outlier ? bound_choice{1, ct} : bound_choice{0, -ct};
    return from == side::outlier ? bound_choice{2, c} : bound_choice{1, -c};
}

} // namespace detail

/**
 * One point on a robustification path: partition, working set and the
 * conditionally optimal solution at the current parameter value.
 */
class homotopy_state {
public:
    /**
     * State at the convex anchor. OP-theta starts at theta = 1 with the
     * given s (0 for classification) and the partition implied by the
     * standard solution; OP-s starts at theta = 0 with every instance an
     * inlier and s at the smallest margin (classification, capped at 0) or
     * the largest absolute residual (regression).
     */
    static homotopy_state anchor(const q_matrix& q, trajectory traj, const homotopy_params& p0, double tol = 0.0) {
        const task_kind task = q.task();
        homotopy_params p = p0;
        if (traj == trajectory::op_theta) {
            p.theta = 1.0;
            if (task == task_kind::classification && p.s != 0.0)
                throw precondition_error("OP-theta for classification runs at s = 0");
        } else {
            p.theta = 0.0;
        }
        if (task == task_kind::regression && p.s < 0.0) throw precondition_error("regression needs s >= 0");
        const auto std_sol = solve_standard_svm(q, p);
        if (std_sol.status != solution_status::optimal) throw solver_error("standard SVM did not converge");
        homotopy_state st;
        st.q_ = &q;
        st.traj_ = traj;
        st.tol_ = tol;
        st.standard_objective_ = std_sol.objective;
        const Eigen::VectorXd qa = q.dense() * std_sol.alpha;
        const Eigen::VectorXd z = margins_from_scores(q, qa);
        if (traj == trajectory::op_theta) {
            st.part_ = partition_from_margins(task, z, p.s);
        } else {
            p.s = task == task_kind::classification ? std::min(z.minCoeff(), 0.0) : z.cwiseAbs().maxCoeff();
            st.part_ = partition(q.n());
        }
        st.p_ = p;
        st.t_ = traj == trajectory::op_theta ? 1.0 : p.s;
        std::vector<detail::coord_model> models;
        std::vector<detail::coord_state> states;
        for (std::size_t i = 0; i < q.n(); ++i) {
            models.push_back(st.model_for(i, st.part_[i]));
            states.push_back(detail::derive_state(models.back(), std_sol.alpha[static_cast<Eigen::Index>(i)], st.sys_t()));
        }
        st.sys_ = std::make_unique<detail::piecewise_system>(q.dense(), std::move(models), std::move(states));
        st.refresh();
        return st;
    }

    homotopy_state() = default;
    homotopy_state(homotopy_state&&) noexcept = default;
    homotopy_state& operator=(homotopy_state&&) noexcept = default;

    trajectory traj() const { return traj_; }
    task_kind task() const { return q_->task(); }
    const q_matrix& q() const { return *q_; }
    /// Current (theta, s, C).
    homotopy_params params() const {
        homotopy_params p = p_;
        if (traj_ == trajectory::op_theta) p.theta = t_;
        return p;
    }
    double param() const { return t_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::VectorXd& scores() const { return v_; }
    Eigen::VectorXd margins() const { return margins_from_scores(*q_, v_); }
    const partition& part() const { return part_; }
    double objective() const { return objective_of(alpha_, v_); }
    double standard_objective() const { return standard_objective_; }
    bool degenerate() const { return sys_->degenerate(); }
    const detail::piecewise_system& system() const { return *sys_; }
    double tolerance() const { return tol_ > 0.0 ? tol_ : 1e-9 * std::max(1.0, std::abs(params().s)); }

    std::size_t n_e() const {
        std::size_t k = 0;
        for (std::size_t i = 0; i < part_.n(); ++i)
            if (label(i) == active_label::e) ++k;
        return k;
    }

    active_label label(std::size_t i) const {
        return detail::state_label(task(), part_[i], sys_->state(static_cast<Eigen::Index>(i)));
    }

    /// Instances currently at the threshold.
    std::vector<std::size_t> boundary() const {
        std::vector<std::size_t> out;
        const Eigen::VectorXd z = margins();
        const double s = params().s;
        for (std::size_t i = 0; i < part_.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            if (detail::on_boundary_piece(sys_->model(ii), sys_->state(ii)) ||
                boundary_gap(task(), z[ii], s) <= tolerance())
                out.push_back(i);
        }
        return out;
    }

    path_event make_event(event_kind kind, std::optional<std::size_t> moved, std::string change) const {
        path_event e;
        e.kind = kind;
        e.param = t_;
        e.moved_index = moved;
        e.set_change = std::move(change);
        e.objective = objective();
        e.n_e = n_e();
        e.n_o = part_.outlier_count();
        e.degenerate = degenerate();
        return e;
    }

    // -- steps --------------------------------------------------------------

    struct c_step_result {
        segment_coefficients segment;
        path_event event;
    };

    /**
     * Advances theta towards `theta_end` up to the first change of the
     * active sets. Ordinary transitions are applied and reported as
     * breakpoints; a threshold crossing is reported as a boundary hit and
     * left for d_step; reaching `theta_end` gives a terminal event.
     */
    c_step_result c_step_theta(double theta_end) {
        if (traj_ != trajectory::op_theta) throw precondition_error("c_step_theta needs an OP-theta state");
        sys_->refresh();
        const auto ev = sys_->next_event(t_, theta_end, skip_, &parked_);
        c_step_result out;
        out.segment = {sys_->a(), sys_->b(), t_, t_, part_, sys_->degenerate()};
        const double remaining = std::abs(t_ - theta_end);
        if (ev.index < 0 || ev.delta >= remaining) {
            t_ = theta_end;
            out.segment.to = t_;
            sync();
            out.event = make_event(event_kind::terminal, std::nullopt, "terminal");
            return out;
        }
        zero_steps_ = ev.delta <= 1e-12 ? zero_steps_ + 1 : 0;
        if (ev.delta > 1e-12) parked_.clear();
        t_ = theta_end < t_ ? t_ - ev.delta : t_ + ev.delta;
        out.segment.to = t_;
        sync();
        const auto i = static_cast<std::size_t>(ev.index);
        const std::string change = std::string(to_string(label(i))) + "->" +
                                   to_string(detail::state_label(task(), part_[i], ev.next));
        if (ev.boundary) {
            out.event = make_event(event_kind::boundary_hit, i, change);
            skip_ = -1;
            return out;
        }
        out.event = make_event(event_kind::breakpoint, i, change);
        sys_->set_state(ev.index, ev.next);
        skip_ = ev.index;
        if (zero_steps_ > 2 * part_.n() + 10) recover();
        return out;
    }

    /**
     * OP-s step: the solution stays fixed while s moves towards `s_end`
     * until an inlier margin (|residual| for regression) meets s.
     */
    path_event c_step_s(double s_end) {
        if (traj_ != trajectory::op_s) throw precondition_error("c_step_s needs an OP-s state");
        const Eigen::VectorXd z = margins();
        const bool svc = task() == task_kind::classification;
        double next = svc ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        std::optional<std::size_t> who;
        for (std::size_t i = 0; i < part_.n(); ++i) {
            if (part_.is_outlier(i) || std::find(parked_.begin(), parked_.end(), i) != parked_.end()) continue;
            const double m = svc ? z[static_cast<Eigen::Index>(i)] : std::abs(z[static_cast<Eigen::Index>(i)]);
            if (svc ? m < next : m > next) {
                next = m;
                who = i;
            }
        }
        const bool done = !who || (svc ? next >= s_end : next <= s_end);
        if (done || next != t_) parked_.clear();
        set_s(done ? s_end : next);
        if (done) return make_event(event_kind::terminal, std::nullopt, "terminal");
        return make_event(event_kind::boundary_hit, who, std::string(to_string(label(*who))) + "->I'");
    }

    /**
     * Flips every instance at the threshold and moves to the conditionally
     * optimal solution of the new partition, repeating until no instance
     * is left at the threshold. The first boundary hit is expected to have
     * been reported by the caller (`hit` is always flipped in the first
     * round); every further round adds its own hit.
     */
    std::vector<path_event> d_step(std::optional<std::size_t> hit = std::nullopt) {
        std::vector<path_event> out;
        std::vector<std::vector<side>> seen{part_.sides()};
        bool cycling = false;
        const std::size_t cap = 4 * part_.n() + 10;
        for (std::size_t round = 0;; ++round) {
            auto bnd = boundary();
            if (round == 0 && hit && std::find(bnd.begin(), bnd.end(), *hit) == bnd.end()) {
                bnd.push_back(*hit);
                std::sort(bnd.begin(), bnd.end());
            }
            // once a partition repeats, only inliers are moved out; outliers left at s stay parked
            if (cycling) std::erase_if(bnd, [&](std::size_t i) { return part_.is_outlier(i); });
            if (bnd.empty()) break;
            if (round >= cap) throw solver_error("D-step did not leave the threshold after " + std::to_string(cap) + " rounds");
            if (round > 0) out.push_back(make_event(event_kind::boundary_hit, bnd.front(), "boundary"));
            out.push_back(jump(bnd));
            if (std::find(seen.begin(), seen.end(), part_.sides()) != seen.end()) {
                cycling = true;
                out.back().degenerate = true;
            }
            seen.push_back(part_.sides());
        }
        parked_ = boundary();
        skip_ = -1;
        zero_steps_ = 0;
        return out;
    }

    /// Objective of the given coefficients at the current parameters.
    double objective_of(const Eigen::VectorXd& a, const Eigen::VectorXd& v) const {
        const auto p = params();
        const Eigen::VectorXd z = margins_from_scores(*q_, v);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            loss += task() == task_kind::classification ? loss_svc(z[i], p) : loss_svr(z[i], p);
        return 0.5 * a.dot(v) + p.c * loss;
    }

private:
    double sys_t() const { return traj_ == trajectory::op_theta ? t_ : 0.0; }

    detail::coord_model model_for(std::size_t i, side sd) const {
        const double y = q_->targets()[static_cast<Eigen::Index>(i)];
        if (traj_ == trajectory::op_theta) return detail::make_coord_model(task(), sd, y, p_, true);
        homotopy_params p = p_;
        p.theta = 0.0;
        return detail::make_coord_model(task(), sd, y, p, false);
    }

    void refresh() {
        sys_->refresh();
        sync();
    }

    void sync() {
        alpha_ = sys_->alpha(sys_t());
        v_ = sys_->scores(sys_t());
    }

    void set_s(double s) {
        p_.s = s;
        t_ = s;
        std::vector<detail::coord_model> models;
        for (std::size_t i = 0; i < part_.n(); ++i) models.push_back(model_for(i, part_[i]));
        sys_->set_models(std::move(models));
    }

    // Re-solves at the current parameter when zero-length steps pile up.
    void recover() {
        solve_here();
        zero_steps_ = 0;
        skip_ = -1;
    }

    void solve_here() {
        std::vector<detail::coord_model> sweep = sys_->models();
        std::vector<detail::coord_model> fixed;
        for (const auto& m : sweep) fixed.push_back(detail::frozen(m, sys_t()));
        sys_->set_models(std::move(fixed));
        Eigen::VectorXd a = alpha_;
        for (std::size_t i = 0; i < part_.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            if (sys_->state(ii).kind == detail::coord_kind::pinned) {
                sys_->set_state(ii, detail::derive_state(sys_->model(ii), sys_->state(ii).pin.at(0.0), 0.0));
                if (sys_->state(ii).kind != detail::coord_kind::free) a[ii] = detail::state_value(sys_->model(ii), sys_->state(ii), 0.0);
            }
        }
        auto rep = sys_->solve_fixed(0.0, a, 50 * part_.n() + 50);
        if (rep.status != detail::solve_status::optimal) {
            for (std::size_t i = 0; i < part_.n(); ++i)
                sys_->set_state(static_cast<Eigen::Index>(i), detail::cold_state(sys_->model(static_cast<Eigen::Index>(i))));
            a = detail::feasible_alpha(sys_->models(), sys_->states(), nullptr, 0.0);
            rep = sys_->solve_fixed(0.0, a, 50 * part_.n() + 50);
            if (rep.status != detail::solve_status::optimal)
                throw solver_error(std::string("conditional re-solve failed: ") +
                                   (rep.status == detail::solve_status::infeasible ? "infeasible" : "iteration limit"));
        }
        sys_->set_models(std::move(sweep));
        refresh();
    }

    path_event jump(const std::vector<std::size_t>& bnd) {
        const Eigen::VectorXd a_bef = alpha_;
        const double j_bef = objective();
        const auto p = params();
        const double ct = p.c * p.theta;
        // freeze the models at the current parameter; mu becomes the sweep variable
        std::vector<detail::coord_model> fixed;
        for (std::size_t i = 0; i < part_.n(); ++i) fixed.push_back(detail::frozen(sys_->model(static_cast<Eigen::Index>(i)), sys_t()));
        sys_->set_models(std::move(fixed));
        const Eigen::VectorXd z = margins();
        int to_out = 0, to_in = 0;
        std::vector<detail::bound_choice> bounds;
        for (std::size_t i : bnd) {
            const auto ii = static_cast<Eigen::Index>(i);
            const side from = part_[i];
            side to = side::inlier;
            if (from == side::inlier) {
                to = task() == task_kind::classification || z[ii] >= 0.0 ? side::outlier : side::outlier_low;
                ++to_out;
            } else {
                ++to_in;
            }
            part_.set(i, to);
            const auto bc = detail::flip_bound(task(), from, to, p.c, ct);
            bounds.push_back(bc);
            sys_->set_model(ii, detail::frozen(model_for(i, to), sys_t()));
            sys_->set_state(ii, detail::coord_state::pinned({bc.value, a_bef[ii] - bc.value}));
        }
        // mu sweep from 1 to 0
        sys_->refresh();
        const double dev = (sys_->alpha(1.0) - a_bef).lpNorm<Eigen::Infinity>();
        double mu = 1.0;
        Eigen::Index skip = -1;
        const std::size_t cap = 20 * part_.n() + 100;
        for (std::size_t k = 0; k < cap && mu > 0.0; ++k) {
            const auto ev = sys_->next_event(mu, 0.0, skip);
            if (ev.index < 0 || ev.delta >= mu) {
                mu = 0.0;
                break;
            }
            mu -= ev.delta;
            sys_->set_state(ev.index, ev.next);
            skip = ev.index;
            sys_->refresh();
        }
        Eigen::VectorXd a = sys_->alpha(mu);
        // feasibility for the free coordinates is kept by the sweep; release the pins
        for (std::size_t k = 0; k < bnd.size(); ++k) {
            const auto ii = static_cast<Eigen::Index>(bnd[k]);
            sys_->set_state(ii, detail::coord_state::at(bounds[k].index));
            a[ii] = bounds[k].value;
        }
        for (std::size_t i = 0; i < part_.n(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto& st = sys_->state(ii);
            if (st.kind == detail::coord_kind::pinned) continue;
            if (st.kind == detail::coord_kind::at_point) {
                a[ii] = detail::state_value(sys_->model(ii), st, 0.0);
            } else {
                const auto& m = sys_->model(ii);
                const double lo = m.points[static_cast<std::size_t>(st.index)].c0;
                const double hi = m.points[static_cast<std::size_t>(st.index) + 1].c0;
                if (std::isfinite(lo)) a[ii] = std::max(a[ii], lo);
                if (std::isfinite(hi)) a[ii] = std::min(a[ii], hi);
            }
        }
        auto rep = sys_->solve_fixed(0.0, a, 50 * part_.n() + 50);
        if (rep.status != detail::solve_status::optimal) {
            for (std::size_t i = 0; i < part_.n(); ++i)
                sys_->set_state(static_cast<Eigen::Index>(i), detail::cold_state(sys_->model(static_cast<Eigen::Index>(i))));
            a = detail::feasible_alpha(sys_->models(), sys_->states(), nullptr, 0.0);
            rep = sys_->solve_fixed(0.0, a, 50 * part_.n() + 50);
            if (rep.status != detail::solve_status::optimal) throw solver_error("D-step re-solve failed");
        }
        std::vector<detail::coord_model> sweep;
        for (std::size_t i = 0; i < part_.n(); ++i) sweep.push_back(model_for(i, part_[i]));
        sys_->set_models(std::move(sweep));
        refresh();
        std::string change;
        if (to_out) change += "I->O";
        if (to_in) change += std::string(change.empty() ? "" : "+") + "O->I";
        auto e = make_event(event_kind::jump, bnd.front(), change);
        e.objective_before = j_bef;
        e.mu_one_deviation = dev;
        return e;
    }

    const q_matrix* q_ = nullptr;
    trajectory traj_ = trajectory::op_theta;
    homotopy_params p_;
    partition part_;
    std::unique_ptr<detail::piecewise_system> sys_;
    double t_ = 1.0;
    double tol_ = 0.0;
    double standard_objective_ = 0.0;
    Eigen::VectorXd alpha_, v_;
    Eigen::Index skip_ = -1;
    std::vector<std::size_t> parked_;
    std::size_t zero_steps_ = 0;
};

/**
 * Traces the robustification path from the convex anchor to `stop_at`
 * (default 0 for theta and s alike).
 */
inline path_trace trace_path(const q_matrix& q, const homotopy_params& p0, trajectory traj,
                             const path_options& opt = {}) {
    p0.check(q.task());
    auto st = homotopy_state::anchor(q, traj, p0, opt.boundary_tol);
    path_trace tr;
    tr.traj = traj;
    tr.task = q.task();
    tr.base = st.params();
    tr.start = st.param();
    const bool svr_s = traj == trajectory::op_s && q.task() == task_kind::regression;
    tr.end = opt.stop_at.value_or(svr_s ? 0.2 * tr.start : 0.0);
    if (traj == trajectory::op_theta && !(tr.end >= 0.0 && tr.end <= 1.0))
        throw precondition_error("theta stop value must lie in [0, 1]");
    if (traj == trajectory::op_s) {
        const bool svc = q.task() == task_kind::classification;
        if (svc && tr.end > 0.0) throw precondition_error("classification s stop value must be <= 0");
        if (!svc && !(tr.end > 0.0)) throw precondition_error("regression s stop value must be > 0");
        // nothing to trace when the anchor already lies beyond the stop value
        if (svc ? tr.start > tr.end : tr.start < tr.end) tr.end = tr.start;
    }
    const std::size_t cap = opt.max_events ? opt.max_events : 200 * q.n() + 1000;
    const std::size_t every = std::max<std::size_t>(opt.snapshot_every, 1);
    std::size_t breakpoints = 0;

    auto push = [&](path_event e) {
        if (tr.events.size() >= cap) throw solver_error("trace-length safety cap exceeded");
        if ((e.kind == event_kind::breakpoint && breakpoints++ % every == 0) || e.kind == event_kind::jump) {
            e.alpha = st.alpha();
            e.part = st.part();
        }
        tr.events.push_back(std::move(e));
    };
    auto hold = [&](double from, double to) {
        tr.segments.push_back({st.alpha(), Eigen::VectorXd::Zero(st.alpha().size()), from, to, st.part(), st.degenerate()});
    };
    auto jumps = [&](std::optional<std::size_t> hit) {
        for (auto& e : st.d_step(hit)) push(std::move(e));
    };

    push(st.make_event(event_kind::breakpoint, std::nullopt, "anchor"));
    if (traj == trajectory::op_theta) {
        if (!st.boundary().empty()) {
            tr.events.push_back(st.make_event(event_kind::boundary_hit, st.boundary().front(), "anchor"));
            hold(st.param(), st.param());
            jumps(std::nullopt);
        }
        for (;;) {
            auto r = st.c_step_theta(tr.end);
            tr.segments.push_back(std::move(r.segment));
            const auto kind = r.event.kind;
            const auto hit = r.event.moved_index;
            push(std::move(r.event));
            if (kind == event_kind::terminal) break;
            if (kind == event_kind::boundary_hit) jumps(hit);
        }
    } else {
        if (tr.start != tr.end && !st.boundary().empty()) {
            tr.events.push_back(st.make_event(event_kind::boundary_hit, st.boundary().front(), "anchor"));
            hold(st.param(), st.param());
            jumps(std::nullopt);
        }
        for (;;) {
            const double from = st.param();
            const Eigen::VectorXd before = st.alpha();
            auto e = st.c_step_s(tr.end);
            tr.segments.push_back({before, Eigen::VectorXd::Zero(before.size()), from, st.param(), st.part(), st.degenerate()});
            const auto kind = e.kind;
            const auto hit = e.moved_index;
            push(std::move(e));
            if (kind == event_kind::terminal) break;
            jumps(hit);
        }
    }
    hold(st.param(), st.param());
    tr.final_alpha = st.alpha();
    tr.final_partition = st.part();

    auto certify_at = [&](double t) {
        const auto a = tr.alpha_at(t);
        const auto part = tr.partition_at(t);
        const auto p = tr.params_at(t);
        tolerances tol = tolerances::defaults(p);
        tol.alpha = std::max(tol.alpha, 1e-9);
        tr.certificates[t] = certify_local_optimality(q.task(), margins(q, a), a, part, p, tol);
    };
    for (double t : opt.checkpoints)
        if (tr.covers(t)) certify_at(t);
    certify_at(tr.end);
    return tr;
}

inline path_trace trace_path(const dataset& ds, const q_matrix& q, const homotopy_params& p0, trajectory traj,
                             const path_options& opt = {}) {
    if (ds.n() != q.n() || ds.task != q.task()) throw precondition_error("dataset does not match the kernel matrix");
    return trace_path(q, p0, traj, opt);
}

/// Decision values sum_j alpha_j y_j K(x, x_j) (classification) or sum_j alpha_j K(x, x_j).
inline Eigen::VectorXd evaluate_model(const Eigen::VectorXd& alpha, const dataset& train, const kernel_spec& spec,
                                      const Eigen::MatrixXd& x_new) {
    if (static_cast<std::size_t>(alpha.size()) != train.n()) throw precondition_error("alpha size mismatch");
    if (x_new.cols() != train.x.cols() && x_new.rows() > 0)
        throw precondition_error("dimension mismatch: model has " + std::to_string(train.x.cols()) +
                                 " features, input has " + std::to_string(x_new.cols()));
    const Eigen::VectorXd w = train.task == task_kind::classification ? Eigen::VectorXd(alpha.cwiseProduct(train.y))
                                                                      : alpha;
    if (x_new.rows() == 0) return Eigen::VectorXd(0);
    return cross_kernel(spec.resolved(train.d()), x_new, train.x) * w;
}

inline double evaluate_model(const Eigen::VectorXd& alpha, const dataset& train, const kernel_spec& spec,
                             const Eigen::VectorXd& x) {
    return evaluate_model(alpha, train, spec, Eigen::MatrixXd(x.transpose()))[0];
}

} // namespace opath
