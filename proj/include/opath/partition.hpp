#pragma once

#include <opath/dataset.hpp>
#include <opath/error.hpp>
#include <opath/loss.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace opath {

/**
 * Which side of the threshold an instance is constrained to. Regression
 * outliers carry the sign of their residual (`outlier` means y - f >= s,
 * `outlier_low` means y - f <= -s) so that each region stays convex.
 */
enum class side : std::uint8_t { inlier, outlier, outlier_low };

class partition {
public:
    partition() = default;
    explicit partition(std::size_t n) : sides_(n, side::inlier) {}
    explicit partition(std::vector<side> sides) : sides_(std::move(sides)) {}

    std::size_t n() const { return sides_.size(); }
    side operator[](std::size_t i) const { return sides_[i]; }
    void set(std::size_t i, side s) { sides_[i] = s; }
    bool is_outlier(std::size_t i) const { return sides_[i] != side::inlier; }
    const std::vector<side>& sides() const { return sides_; }

    std::vector<std::size_t> inliers() const { return collect(false); }
    std::vector<std::size_t> outliers() const { return collect(true); }
    std::size_t outlier_count() const {
        return static_cast<std::size_t>(std::count_if(sides_.begin(), sides_.end(),
                                                      [](side s) { return s != side::inlier; }));
    }

    friend bool operator==(const partition&, const partition&) = default;

private:
    std::vector<std::size_t> collect(bool outlier) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < sides_.size(); ++i)
            if ((sides_[i] != side::inlier) == outlier) out.push_back(i);
        return out;
    }

    std::vector<side> sides_;
};

/// Equality bands: `margin` for z = 1 / z = s tests, `alpha` for coefficient bounds.
struct tolerances {
    double margin = 1e-9;
    double alpha = 1e-9;

    static tolerances defaults(const homotopy_params& p) {
        return {1e-9 * std::max(1.0, std::abs(p.s)), 1e-9 * p.c};
    }
};

enum class active_label : std::uint8_t { r, e, l, i_at, o_at, o_below };

inline const char* to_string(active_label a) {
    switch (a) {
    case active_label::r: return "R";
    case active_label::e: return "E";
    case active_label::l: return "L";
    case active_label::i_at: return "I'";
    case active_label::o_at: return "O'";
    case active_label::o_below: return "O''";
    }
    return "?";
}

/**
 * R: margin beyond 1 (never populated for regression); E: elbow (z = 1, or
 * zero residual); L: inliers strictly between the elbow and the threshold;
 * I'/O': inliers/outliers exactly at the threshold; O'': strict outliers.
 */
struct active_sets {
    std::vector<std::size_t> r, e, l, i_at, o_at, o_below;
    std::vector<active_label> label;
};

inline active_label classify_index(task_kind task, double z, side sd, double s, double tol) {
    if (task == task_kind::classification) {
        const bool near_one = std::abs(z - 1.0) <= tol;
        const bool near_s = std::abs(z - s) <= tol;
        if (near_one && near_s) throw degenerate_error("margin is within tolerance of both 1 and s");
        if (near_s) return sd == side::inlier ? active_label::i_at : active_label::o_at;
        if (near_one) return active_label::e;
        if (z > 1.0) return active_label::r;
        if (z > s) return active_label::l;
        return active_label::o_below;
    }
    const double a = std::abs(z);
    const bool near_zero = a <= tol;
    const bool near_s = std::abs(a - s) <= tol;
    if (near_zero && near_s) throw degenerate_error("residual is within tolerance of both 0 and s");
    if (near_s) return sd == side::inlier ? active_label::i_at : active_label::o_at;
    if (near_zero) return active_label::e;
    if (a < s) return active_label::l;
    return active_label::o_below;
}

inline active_sets classify_active_sets(task_kind task, const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                        const partition& part, const homotopy_params& p, double tol) {
    if (z.size() != alpha.size() || static_cast<std::size_t>(z.size()) != part.n())
        throw precondition_error("size mismatch in classify_active_sets");
    active_sets out;
    out.label.resize(part.n());
    for (std::size_t i = 0; i < part.n(); ++i) {
        const auto a = classify_index(task, z[static_cast<Eigen::Index>(i)], part[i], p.s, tol);
        out.label[i] = a;
        switch (a) {
        case active_label::r: out.r.push_back(i); break;
        case active_label::e: out.e.push_back(i); break;
        case active_label::l: out.l.push_back(i); break;
        case active_label::i_at: out.i_at.push_back(i); break;
        case active_label::o_at: out.o_at.push_back(i); break;
        case active_label::o_below: out.o_below.push_back(i); break;
        }
    }
    return out;
}

namespace detail {

inline double dist_to_interval(double v, double lo, double hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
}

inline double pos(double v) { return v > 0.0 ? v : 0.0; }

} // namespace detail

/**
 * Per-instance violation of the conditional-optimality conditions for
 * classification. Each index is scored against every condition whose
 * margin test holds within `tol` and keeps the smallest violation; an
 * instance on the wrong side of the threshold for its partition adds the
 * size of that infeasibility.
 */
inline Eigen::VectorXd kkt_residuals_svc(const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                         const partition& part, const homotopy_params& p, double tol) {
    const double c = p.c;
    const double ct = p.c * p.theta;
    const double s = p.s;
    Eigen::VectorXd res(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double zi = z[i];
        const double a = alpha[i];
        const bool outlier = part.is_outlier(static_cast<std::size_t>(i));
        double best = std::numeric_limits<double>::infinity();
        if (zi > 1.0 - tol) best = std::min(best, std::abs(a));
        if (std::abs(zi - 1.0) <= tol) best = std::min(best, detail::dist_to_interval(a, 0.0, c));
        if (zi > s - tol && zi < 1.0 + tol) best = std::min(best, std::abs(a - c));
        if (std::abs(zi - s) <= tol) best = std::min(best, outlier ? detail::pos(a - ct) : detail::pos(c - a));
        if (zi < s + tol) best = std::min(best, std::abs(a - ct));
        double infeasible = 0.0;
        if (!outlier && zi < s - tol) infeasible = s - zi;
        if (outlier && zi > s + tol) infeasible = zi - s;
        res[i] = best + infeasible;
    }
    return res;
}

/// Regression counterpart of kkt_residuals_svc on residuals z_i = y_i - f(x_i).
inline Eigen::VectorXd kkt_residuals_svr(const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                         const partition& part, const homotopy_params& p, double tol) {
    const double c = p.c;
    const double ct = p.c * p.theta;
    const double s = p.s;
    Eigen::VectorXd res(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double r = z[i];
        const double ar = std::abs(r);
        const double a = alpha[i];
        const side sd = part[static_cast<std::size_t>(i)];
        double best = std::numeric_limits<double>::infinity();
        if (ar <= tol) best = std::min(best, detail::pos(std::abs(a) - c));
        if (ar < s + tol) {
            if (ar <= tol)
                best = std::min(best, std::min(std::abs(a - c), std::abs(a + c)));
            else
                best = std::min(best, std::abs(a - (r > 0.0 ? c : -c)));
        }
        if (std::abs(ar - s) <= tol) {
            const double sg = r >= 0.0 ? 1.0 : -1.0;
            best = std::min(best, sd == side::inlier ? detail::pos(c - sg * a) : detail::pos(sg * a - ct));
        }
        if (ar > s - tol) best = std::min(best, std::abs(a - (r >= 0.0 ? ct : -ct)));
        double infeasible = 0.0;
        if (sd == side::inlier && ar > s + tol) infeasible = ar - s;
        if (sd == side::outlier && r < s - tol) infeasible = s - r;
        if (sd == side::outlier_low && r > -s + tol) infeasible = r + s;
        res[i] = best + infeasible;
    }
    return res;
}

inline Eigen::VectorXd kkt_residuals(task_kind task, const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                     const partition& part, const homotopy_params& p, double tol) {
    return task == task_kind::classification ? kkt_residuals_svc(z, alpha, part, p, tol)
                                             : kkt_residuals_svr(z, alpha, part, p, tol);
}

/// Distance of each instance from the threshold: |z - s|, or ||r| - s| for regression.
inline double boundary_gap(task_kind task, double z, double s) {
    return task == task_kind::classification ? std::abs(z - s) : std::abs(std::abs(z) - s);
}

struct optimality_certificate {
    Eigen::VectorXd kkt_residuals;
    double max_residual = 0.0;
    double boundary_clearance = std::numeric_limits<double>::infinity();
    bool is_conditionally_optimal = false;
    bool is_locally_optimal = false;

    friend void to_json(nlohmann::json& j, const optimality_certificate& c) {
        j = nlohmann::json{{"kkt_residuals", std::vector<double>(c.kkt_residuals.data(),
                                                                 c.kkt_residuals.data() + c.kkt_residuals.size())},
                           {"max_residual", c.max_residual},
                           {"boundary_clearance", c.boundary_clearance},
                           {"is_conditionally_optimal", c.is_conditionally_optimal},
                           {"is_locally_optimal", c.is_locally_optimal}};
    }
};

/**
 * Conditional optimality means every KKT residual is within `tol.alpha`.
 * Local optimality additionally needs theta < 1 and no instance within
 * `tol.margin` of the threshold. At theta = 1 the problem is convex and
 * only conditional optimality is reported.
 */
inline optimality_certificate certify_local_optimality(task_kind task, const Eigen::VectorXd& z,
                                                       const Eigen::VectorXd& alpha, const partition& part,
                                                       const homotopy_params& p, const tolerances& tol) {
    optimality_certificate cert;
    cert.kkt_residuals = kkt_residuals(task, z, alpha, part, p, tol.margin);
    cert.max_residual = cert.kkt_residuals.size() ? cert.kkt_residuals.maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        cert.boundary_clearance = std::min(cert.boundary_clearance, boundary_gap(task, z[i], p.s));
    cert.is_conditionally_optimal = cert.max_residual <= tol.alpha;
    cert.is_locally_optimal = cert.is_conditionally_optimal && p.theta < 1.0 && cert.boundary_clearance > tol.margin;
    return cert;
}

/// Indices within `tol` of the threshold.
inline std::vector<std::size_t> boundary_indices(task_kind task, const Eigen::VectorXd& z, double s, double tol) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (boundary_gap(task, z[i], s) <= tol) out.push_back(static_cast<std::size_t>(i));
    return out;
}

/**
 * Move every instance at the threshold to the opposite side; all other
 * memberships are unchanged. Regression inliers leaving become outliers on
 * the side of their residual's sign.
 */
inline partition flip_partition(task_kind task, const partition& part, const Eigen::VectorXd& z, double s,
                                double tol) {
    const auto at = boundary_indices(task, z, s, tol);
    if (at.empty()) throw precondition_error("flip_partition: no instance lies on the threshold");
    partition out = part;
    for (std::size_t i : at) {
        if (part.is_outlier(i))
            out.set(i, side::inlier);
        else if (task == task_kind::classification)
            out.set(i, side::outlier);
        else
            out.set(i, z[static_cast<Eigen::Index>(i)] >= 0.0 ? side::outlier : side::outlier_low);
    }
    return out;
}

/**
 * Partition consistent with the given margins: classification inliers are
 * z >= s; regression inliers are |r| <= s, outliers split by residual sign.
 */
inline partition partition_from_margins(task_kind task, const Eigen::VectorXd& z, double s) {
    partition part(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (task == task_kind::classification) {
            if (z[i] < s) part.set(k, side::outlier);
        } else if (z[i] > s) {
            part.set(k, side::outlier);
        } else if (z[i] < -s) {
            part.set(k, side::outlier_low);
        }
    }
    return part;
}

} // namespace opath
