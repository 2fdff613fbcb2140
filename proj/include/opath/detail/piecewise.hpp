#pragma once

#include <opath/dataset.hpp>
#include <opath/detail/cholesky.hpp>
#include <opath/loss.hpp>
#include <opath/partition.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

// Every conditional problem handled here is written as
//
//   minimize  1/2 a'Qa - sum_i g_i(a_i)
//
// with each g_i concave and piecewise linear on its own interval. With
// v = Qa the optimality condition is v_i in the superdifferential of g_i:
// v_i equals the slope of the piece a_i lies in, or sits between the two
// adjacent slopes when a_i is at a breakpoint. Inlier/outlier membership,
// the threshold s and the outlier weight theta only change the breakpoints
// and slopes, so one engine serves both tasks and every problem variant.

namespace opath::detail {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// c0 + c1 t; an infinite c0 stays infinite.
struct affine {
    double c0 = 0.0;
    double c1 = 0.0;

    double at(double t) const { return std::isfinite(c0) ? c0 + c1 * t : c0; }
    bool finite() const { return std::isfinite(c0); }
};

inline affine constant(double v) { return {v, 0.0}; }

struct coord_model {
    std::vector<affine> points; // pieces() + 1 breakpoints; the ends may be infinite
    std::vector<affine> slopes; // slope of g on each piece
    std::vector<char> boundary; // piece corresponds to a margin sitting exactly at s

    int pieces() const { return static_cast<int>(slopes.size()); }
};

inline coord_model frozen(const coord_model& m, double t) {
    coord_model out = m;
    for (auto& p : out.points) p = constant(p.at(t));
    for (auto& s : out.slopes) s = constant(s.at(t));
    return out;
}

/**
 * Coordinate model for one instance of the robust problem. With
 * `theta_sweep` the outlier cap C*theta is kept as an affine function of
 * theta; otherwise everything is evaluated at `p`.
 */
inline coord_model make_coord_model(task_kind task, side sd, double y, const homotopy_params& p, bool theta_sweep) {
    const affine ct = theta_sweep ? affine{0.0, p.c} : constant(p.c * p.theta);
    const affine neg_ct{-ct.c0, -ct.c1};
    coord_model m;
    if (task == task_kind::classification) {
        if (sd == side::inlier) {
            m.points = {constant(0.0), constant(p.c), constant(inf)};
            m.slopes = {constant(1.0), constant(p.s)};
            m.boundary = {0, 1};
        } else {
            m.points = {constant(-inf), ct};
            m.slopes = {constant(p.s)};
            m.boundary = {1};
        }
        return m;
    }
    switch (sd) {
    case side::inlier:
        m.points = {constant(-inf), constant(-p.c), constant(p.c), constant(inf)};
        m.slopes = {constant(y + p.s), constant(y), constant(y - p.s)};
        m.boundary = {1, 0, 1};
        break;
    case side::outlier:
        m.points = {constant(-inf), ct};
        m.slopes = {constant(y - p.s)};
        m.boundary = {1};
        break;
    case side::outlier_low:
        m.points = {neg_ct, constant(inf)};
        m.slopes = {constant(y + p.s)};
        m.boundary = {1};
        break;
    }
    return m;
}

/// Linear reward (1 or y) on the interval [lo, hi]; a single point when lo >= hi.
inline coord_model make_interval_model(task_kind task, double y, double lo, double hi) {
    coord_model m;
    if (!(lo < hi)) {
        m.points = {constant(lo)};
        return m;
    }
    m.points = {constant(lo), constant(hi)};
    m.slopes = {constant(task == task_kind::classification ? 1.0 : y)};
    m.boundary = {0};
    return m;
}

/// Plain hinge / absolute-loss coordinate with cap `c` (the convex SVM dual box).
inline coord_model make_box_model(task_kind task, double y, double c) {
    coord_model m;
    if (c <= 0.0) {
        m.points = {constant(0.0)};
        return m;
    }
    if (task == task_kind::classification) {
        m.points = {constant(0.0), constant(c)};
        m.slopes = {constant(1.0)};
    } else {
        m.points = {constant(-c), constant(c)};
        m.slopes = {constant(y)};
    }
    m.boundary = {0};
    return m;
}

enum class coord_kind : std::uint8_t { at_point, free, pinned };

struct coord_state {
    coord_kind kind = coord_kind::at_point;
    int index = 0; // breakpoint or piece index
    affine pin{};  // value when pinned

    static coord_state at(int k) { return {coord_kind::at_point, k, {}}; }
    static coord_state on(int p) { return {coord_kind::free, p, {}}; }
    static coord_state pinned(affine a) { return {coord_kind::pinned, -1, a}; }

    friend bool operator==(const coord_state& a, const coord_state& b) {
        return a.kind == b.kind && a.index == b.index && a.pin.c0 == b.pin.c0 && a.pin.c1 == b.pin.c1;
    }
};

/// Starting state with a trivially feasible coefficient.
inline coord_state cold_state(const coord_model& m) {
    for (int k = 0; k < static_cast<int>(m.points.size()); ++k) {
        const double v = m.points[static_cast<std::size_t>(k)].c0;
        if (v == 0.0) return coord_state::at(k);
    }
    for (int p = 0; p < m.pieces(); ++p) {
        const double lo = m.points[static_cast<std::size_t>(p)].c0;
        const double hi = m.points[static_cast<std::size_t>(p) + 1].c0;
        if (lo < 0.0 && 0.0 < hi) return coord_state::on(p);
    }
    // zero lies outside the domain: sit on the finite breakpoint closest to it
    int best = 0;
    double gap = inf;
    for (int k = 0; k < static_cast<int>(m.points.size()); ++k) {
        const double v = m.points[static_cast<std::size_t>(k)].c0;
        if (std::isfinite(v) && std::abs(v) < gap) {
            gap = std::abs(v);
            best = k;
        }
    }
    return coord_state::at(best);
}

/// State reproducing coefficient `a` at parameter `t`.
inline coord_state derive_state(const coord_model& m, double a, double t) {
    for (int k = 0; k < static_cast<int>(m.points.size()); ++k) {
        const double v = m.points[static_cast<std::size_t>(k)].at(t);
        if (std::isfinite(v) && std::abs(a - v) <= 1e-12 * std::max(1.0, std::abs(v))) return coord_state::at(k);
    }
    for (int p = 0; p < m.pieces(); ++p) {
        const double lo = m.points[static_cast<std::size_t>(p)].at(t);
        const double hi = m.points[static_cast<std::size_t>(p) + 1].at(t);
        if (lo < a && a < hi) return coord_state::on(p);
    }
    throw solver_error("coefficient " + std::to_string(a) + " lies outside its admissible interval");
}

inline double state_value(const coord_model& m, const coord_state& s, double t) {
    if (s.kind == coord_kind::pinned) return s.pin.at(t);
    return m.points[static_cast<std::size_t>(s.index)].at(t);
}

inline bool on_boundary_piece(const coord_model& m, const coord_state& s) {
    return s.kind == coord_kind::free && m.boundary[static_cast<std::size_t>(s.index)] != 0;
}

/// Active-set label of a coordinate state, as used in event descriptions.
inline active_label state_label(task_kind task, side sd, const coord_state& s) {
    if (s.kind == coord_kind::pinned) return sd == side::inlier ? active_label::i_at : active_label::o_at;
    if (sd != side::inlier) return s.kind == coord_kind::free ? active_label::o_at : active_label::o_below;
    if (task == task_kind::classification) {
        if (s.kind == coord_kind::free) return s.index == 0 ? active_label::e : active_label::i_at;
        return s.index == 0 ? active_label::r : active_label::l;
    }
    if (s.kind == coord_kind::free) return s.index == 1 ? active_label::e : active_label::i_at;
    return active_label::l;
}

/// Same labels for the plain box model (no threshold pieces).
inline active_label box_label(task_kind task, const coord_state& s) {
    if (s.kind == coord_kind::free) return active_label::e;
    if (task == task_kind::classification && s.index == 0) return active_label::r;
    return active_label::l;
}

struct transition {
    double delta = inf;
    Eigen::Index index = -1;
    coord_state next{};
    bool boundary = false;
};

enum class solve_status : std::uint8_t { optimal, infeasible, iteration_limit };

struct solve_report {
    solve_status status = solve_status::optimal;
    std::size_t iterations = 0;
};

/**
 * Working state of one conditional problem: coordinate models, their
 * states, and the affine solution a + b t of the current working set.
 */
class piecewise_system {
public:
    piecewise_system(const Eigen::MatrixXd& q, std::vector<coord_model> models, std::vector<coord_state> states)
        : q_(&q), models_(std::move(models)), states_(std::move(states)), chol_(&q) {
        if (static_cast<Eigen::Index>(models_.size()) != q.rows() || models_.size() != states_.size())
            throw precondition_error("piecewise_system: size mismatch");
        for (std::size_t i = 0; i < states_.size(); ++i)
            if (states_[i].kind == coord_kind::free) chol_.append(static_cast<Eigen::Index>(i));
        const auto n = q.rows();
        a_.setZero(n);
        b_.setZero(n);
        va_.setZero(n);
        vb_.setZero(n);
    }

    Eigen::Index n() const { return q_->rows(); }
    const Eigen::MatrixXd& q() const { return *q_; }
    const coord_model& model(Eigen::Index i) const { return models_[static_cast<std::size_t>(i)]; }
    const coord_state& state(Eigen::Index i) const { return states_[static_cast<std::size_t>(i)]; }
    const std::vector<coord_state>& states() const { return states_; }
    const std::vector<coord_model>& models() const { return models_; }
    bool degenerate() const { return chol_.degenerate(); }
    std::size_t free_count() const { return chol_.size(); }

    void set_model(Eigen::Index i, coord_model m) { models_[static_cast<std::size_t>(i)] = std::move(m); }
    void set_models(std::vector<coord_model> m) { models_ = std::move(m); }

    void set_state(Eigen::Index i, const coord_state& s) {
        auto& cur = states_[static_cast<std::size_t>(i)];
        const bool was_free = cur.kind == coord_kind::free;
        const bool is_free = s.kind == coord_kind::free;
        cur = s;
        if (was_free && !is_free) chol_.remove(i);
        if (!was_free && is_free) chol_.append(i);
    }

    /// Solves the working-set system for alpha(t) = a + b t and v(t) = Q alpha(t).
    void refresh() {
        const auto n = this->n();
        bool sloped = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& s = states_[static_cast<std::size_t>(i)];
            if (s.kind == coord_kind::free) {
                a_[i] = 0.0;
                b_[i] = 0.0;
                if (models_[static_cast<std::size_t>(i)].slopes[static_cast<std::size_t>(s.index)].c1 != 0.0)
                    sloped = true;
                continue;
            }
            const affine v = s.kind == coord_kind::pinned ? s.pin
                                                          : models_[static_cast<std::size_t>(i)]
                                                                .points[static_cast<std::size_t>(s.index)];
            a_[i] = v.c0;
            b_[i] = v.c1;
            if (v.c1 != 0.0) sloped = true;
        }
        va_.noalias() = (*q_) * a_;
        if (sloped)
            vb_.noalias() = (*q_) * b_;
        else
            vb_.setZero();
        const auto& f = chol_.members();
        const auto m = static_cast<Eigen::Index>(f.size());
        if (m == 0) return;
        Eigen::VectorXd r0(m), r1(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto i = f[static_cast<std::size_t>(k)];
            const auto& sl = models_[static_cast<std::size_t>(i)].slopes[static_cast<std::size_t>(
                states_[static_cast<std::size_t>(i)].index)];
            r0[k] = sl.c0 - va_[i];
            r1[k] = sl.c1 - vb_[i];
        }
        Eigen::VectorXd x0, x1;
        if (sloped) {
            chol_.solve2(r0, r1, x0, x1);
        } else {
            x0 = chol_.solve(r0);
            x1.setZero(m);
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto i = f[static_cast<std::size_t>(k)];
            a_[i] = x0[k];
            b_[i] = x1[k];
            va_.noalias() += q_->col(i) * x0[k];
            if (sloped) vb_.noalias() += q_->col(i) * x1[k];
        }
    }

    const Eigen::VectorXd& a() const { return a_; }
    const Eigen::VectorXd& b() const { return b_; }
    Eigen::VectorXd alpha(double t) const { return a_ + b_ * t; }
    Eigen::VectorXd scores(double t) const { return va_ + vb_ * t; }

    /**
     * First change of the working set when t moves from t0 towards t_end,
     * measured as delta = |t - t0|. Among near-simultaneous candidates an
     * ordinary transition wins over a threshold crossing, then the lowest
     * index. `skip` and the indices in `parked` are excluded from
     * zero-length events.
     */
    transition next_event(double t0, double t_end, Eigen::Index skip = -1,
                          const std::vector<std::size_t>* parked = nullptr) const {
        const double dir = t_end >= t0 ? 1.0 : -1.0;
        const double tie = 1e-12 * std::max(1.0, std::abs(t0));
        std::vector<transition> cands;
        auto offer = [&](Eigen::Index i, double q0, double q1, double scale, coord_state next, bool bnd) {
            if (!(q1 < -1e-13 * (1.0 + scale))) return;
            const double d = std::max(q0, 0.0) / -q1;
            if (d <= tie && (i == skip || (parked && std::find(parked->begin(), parked->end(),
                                                                static_cast<std::size_t>(i)) != parked->end())))
                return;
            cands.push_back({d, i, next, bnd});
        };
        for (Eigen::Index i = 0; i < n(); ++i) {
            const auto& m = models_[static_cast<std::size_t>(i)];
            const auto& s = states_[static_cast<std::size_t>(i)];
            if (s.kind == coord_kind::free) {
                const auto p = static_cast<std::size_t>(s.index);
                const double ai = a_[i] + b_[i] * t0;
                const affine& lo = m.points[p];
                const affine& hi = m.points[p + 1];
                if (lo.finite())
                    offer(i, ai - lo.at(t0), dir * (b_[i] - lo.c1), std::abs(b_[i]) + std::abs(lo.c1),
                          coord_state::at(s.index), false);
                if (hi.finite())
                    offer(i, hi.at(t0) - ai, dir * (hi.c1 - b_[i]), std::abs(b_[i]) + std::abs(hi.c1),
                          coord_state::at(s.index + 1), false);
            } else if (s.kind == coord_kind::at_point) {
                const int k = s.index;
                const double vi = va_[i] + vb_[i] * t0;
                if (k < m.pieces()) {
                    const affine& sl = m.slopes[static_cast<std::size_t>(k)];
                    offer(i, vi - sl.at(t0), dir * (vb_[i] - sl.c1), std::abs(vb_[i]) + std::abs(sl.c1),
                          coord_state::on(k), m.boundary[static_cast<std::size_t>(k)] != 0);
                }
                if (k > 0) {
                    const affine& sl = m.slopes[static_cast<std::size_t>(k - 1)];
                    offer(i, sl.at(t0) - vi, dir * (sl.c1 - vb_[i]), std::abs(vb_[i]) + std::abs(sl.c1),
                          coord_state::on(k - 1), m.boundary[static_cast<std::size_t>(k - 1)] != 0);
                }
            }
        }
        transition best;
        for (const auto& c : cands) best.delta = std::min(best.delta, c.delta);
        if (!std::isfinite(best.delta)) return best;
        const double limit = best.delta + tie;
        bool found = false;
        for (const auto& c : cands) {
            if (c.delta > limit) continue;
            const bool better = !found || (best.boundary && !c.boundary) ||
                                (best.boundary == c.boundary && c.index < best.index);
            if (better) {
                best = c;
                found = true;
            }
        }
        return best;
    }

    /**
     * Primal active-set method at fixed t. `alpha` must be feasible for the
     * current states (at-point coordinates exactly on their breakpoint) and
     * is overwritten with the solution.
     */
    solve_report solve_fixed(double t, Eigen::VectorXd& alpha, std::size_t max_iter, double tol = 1e-10) {
        solve_report rep;
        double scale = 1.0;
        for (const auto& m : models_)
            for (const auto& p : m.points)
                if (p.finite()) scale = std::max(scale, std::abs(p.at(t)));
        for (rep.iterations = 0; rep.iterations < max_iter; ++rep.iterations) {
            refresh();
            const Eigen::VectorXd target = alpha_at_fixed(t);
            double tau = 1.0;
            Eigen::Index block = -1;
            int block_to = 0;
            for (Eigen::Index i = 0; i < n(); ++i) {
                const auto& s = states_[static_cast<std::size_t>(i)];
                if (s.kind != coord_kind::free) continue;
                const auto& m = models_[static_cast<std::size_t>(i)];
                const double d = target[i] - alpha[i];
                const double lo = m.points[static_cast<std::size_t>(s.index)].at(t);
                const double hi = m.points[static_cast<std::size_t>(s.index) + 1].at(t);
                if (d < 0.0 && std::isfinite(lo)) {
                    const double r = std::max(0.0, alpha[i] - lo) / -d;
                    if (r < tau) {
                        tau = r;
                        block = i;
                        block_to = s.index;
                    }
                } else if (d > 0.0 && std::isfinite(hi)) {
                    const double r = std::max(0.0, hi - alpha[i]) / d;
                    if (r < tau) {
                        tau = r;
                        block = i;
                        block_to = s.index + 1;
                    }
                }
            }
            if (block >= 0) {
                for (Eigen::Index i = 0; i < n(); ++i)
                    if (states_[static_cast<std::size_t>(i)].kind == coord_kind::free)
                        alpha[i] += tau * (target[i] - alpha[i]);
                set_state(block, coord_state::at(block_to));
                alpha[block] = models_[static_cast<std::size_t>(block)].points[static_cast<std::size_t>(block_to)].at(t);
                continue;
            }
            if (target.lpNorm<Eigen::Infinity>() > 1e9 * scale) {
                rep.status = solve_status::infeasible;
                return rep;
            }
            alpha = target;
            const Eigen::VectorXd v = scores(t);
            double worst = tol;
            Eigen::Index rel = -1;
            int rel_to = 0;
            for (Eigen::Index i = 0; i < n(); ++i) {
                const auto& s = states_[static_cast<std::size_t>(i)];
                if (s.kind != coord_kind::at_point) continue;
                const auto& m = models_[static_cast<std::size_t>(i)];
                if (s.index < m.pieces()) {
                    const double viol = m.slopes[static_cast<std::size_t>(s.index)].at(t) - v[i];
                    if (viol > worst) {
                        worst = viol;
                        rel = i;
                        rel_to = s.index;
                    }
                }
                if (s.index > 0) {
                    const double viol = v[i] - m.slopes[static_cast<std::size_t>(s.index) - 1].at(t);
                    if (viol > worst) {
                        worst = viol;
                        rel = i;
                        rel_to = s.index - 1;
                    }
                }
            }
            if (rel < 0) return rep;
            set_state(rel, coord_state::on(rel_to));
        }
        rep.status = solve_status::iteration_limit;
        refresh();
        return rep;
    }

    /// Largest violation of the piece/breakpoint conditions at t (0 when optimal).
    double violation(double t) const {
        const Eigen::VectorXd v = scores(t);
        const Eigen::VectorXd al = alpha(t);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n(); ++i) {
            const auto& s = states_[static_cast<std::size_t>(i)];
            const auto& m = models_[static_cast<std::size_t>(i)];
            if (s.kind == coord_kind::free) {
                worst = std::max(worst, std::abs(v[i] - m.slopes[static_cast<std::size_t>(s.index)].at(t)));
                const double lo = m.points[static_cast<std::size_t>(s.index)].at(t);
                const double hi = m.points[static_cast<std::size_t>(s.index) + 1].at(t);
                if (std::isfinite(lo)) worst = std::max(worst, lo - al[i]);
                if (std::isfinite(hi)) worst = std::max(worst, al[i] - hi);
            } else if (s.kind == coord_kind::at_point) {
                if (s.index < m.pieces())
                    worst = std::max(worst, m.slopes[static_cast<std::size_t>(s.index)].at(t) - v[i]);
                if (s.index > 0)
                    worst = std::max(worst, v[i] - m.slopes[static_cast<std::size_t>(s.index) - 1].at(t));
            }
        }
        return worst;
    }

private:
    Eigen::VectorXd alpha_at_fixed(double t) const { return a_ + b_ * t; }

    const Eigen::MatrixXd* q_;
    std::vector<coord_model> models_;
    std::vector<coord_state> states_;
    incremental_cholesky chol_;
    Eigen::VectorXd a_, b_, va_, vb_;
};

/// Feasible coefficient vector matching `states` at t.
inline Eigen::VectorXd feasible_alpha(const std::vector<coord_model>& models, const std::vector<coord_state>& states,
                                      const Eigen::VectorXd* hint, double t) {
    Eigen::VectorXd a(static_cast<Eigen::Index>(models.size()));
    for (std::size_t i = 0; i < models.size(); ++i) {
        const auto& s = states[i];
        const auto idx = static_cast<Eigen::Index>(i);
        if (s.kind != coord_kind::free) {
            a[idx] = state_value(models[i], s, t);
            continue;
        }
        const double lo = models[i].points[static_cast<std::size_t>(s.index)].at(t);
        const double hi = models[i].points[static_cast<std::size_t>(s.index) + 1].at(t);
        double v = hint ? (*hint)[idx] : 0.0;
        if (std::isfinite(lo)) v = std::max(v, lo);
        if (std::isfinite(hi)) v = std::min(v, hi);
        a[idx] = v;
    }
    return a;
}

} // namespace opath::detail
