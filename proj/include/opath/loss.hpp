#pragma once

#include <opath/dataset.hpp>
#include <opath/error.hpp>
#include <opath/kernel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace opath {

/**
 * Homotopy parameters of the robust loss. `theta` weighs the outlier
 * losses, `s` is the inlier/outlier threshold (a margin <= 0 for
 * classification, a residual magnitude >= 0 for regression) and `c` is the
 * usual regularization constant.
 */
struct homotopy_params {
    double theta = 1.0;
    double s = 0.0;
    double c = 1.0;

    /// Throws precondition_error for values outside the admissible ranges.
    void check(task_kind task) const {
        if (!(theta >= 0.0 && theta <= 1.0)) throw precondition_error("theta must lie in [0, 1]");
        if (!(c > 0.0)) throw precondition_error("C must be positive");
        if (task == task_kind::classification && s > 0.0) throw precondition_error("classification needs s <= 0");
        if (task == task_kind::regression && s < 0.0) throw precondition_error("regression needs s >= 0");
    }

    /**
     * True on the two one-parameter families the path algorithm traverses:
     * theta varying at a fixed s, or s varying at theta = 0. For
     * classification the first family is s = 0; off these families the
     * loss jumps at z = s.
     */
    bool on_trajectory(task_kind task) const {
        if (task == task_kind::regression) return true;
        return s == 0.0 || theta == 0.0;
    }
};

/// Robust classification loss of margin `z`.
inline double loss_svc(double z, const homotopy_params& p) {
    if (z >= p.s) return std::max(0.0, 1.0 - z);
    return 1.0 - p.theta * z - p.s;
}

/// Robust least-absolute-deviation loss of residual `z`.
inline double loss_svr(double z, const homotopy_params& p) {
    const double a = std::abs(z);
    if (a < p.s) return a;
    return p.theta * (a - p.s) + p.s;
}

/// Classification margins y_i f(x_i) = (Q alpha)_i, or regression residuals y_i - f(x_i).
inline Eigen::VectorXd margins(const q_matrix& q, const Eigen::VectorXd& alpha) {
    if (static_cast<std::size_t>(alpha.size()) != q.n()) throw precondition_error("alpha size mismatch");
    Eigen::VectorXd f = q.dense() * alpha;
    if (q.is_signed()) return f;
    return q.targets() - f;
}

/// Margins from precomputed q * alpha.
inline Eigen::VectorXd margins_from_scores(const q_matrix& q, const Eigen::VectorXd& q_alpha) {
    return q.is_signed() ? Eigen::VectorXd(q_alpha) : Eigen::VectorXd(q.targets() - q_alpha);
}

/// 1/2 alpha' Q alpha + C sum_i loss(z_i).
inline double objective(const q_matrix& q, const Eigen::VectorXd& alpha, const homotopy_params& p) {
    if (static_cast<std::size_t>(alpha.size()) != q.n()) throw precondition_error("alpha size mismatch");
    const Eigen::VectorXd qa = q.dense() * alpha;
    const Eigen::VectorXd z = margins_from_scores(q, qa);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        loss += q.is_signed() ? loss_svc(z[i], p) : loss_svr(z[i], p);
    return 0.5 * alpha.dot(qa) + p.c * loss;
}

inline double objective(const dataset& ds, const q_matrix& q, const Eigen::VectorXd& alpha,
                        const homotopy_params& p) {
    if (ds.n() != q.n()) throw precondition_error("dataset/kernel size mismatch");
    return objective(q, alpha, p);
}

} // namespace opath
