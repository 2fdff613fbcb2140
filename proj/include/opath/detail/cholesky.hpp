#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

namespace opath::detail {

/**
 * Cholesky factor of Q restricted to a working set that grows and shrinks
 * one index at a time. Appends cost O(m^2) (one triangular solve), removals
 * O(m^2) (row/column deletion plus a rank-one update of the trailing block).
 *
 * When a pivot is not safely positive the working set is singular. The
 * factor is then rebuilt for Q_FF + eps I and stays in that form (flagged by
 * `degenerate()`) until a periodic refactor finds the set regular again.
 */
class incremental_cholesky {
public:
    incremental_cholesky() = default;
    explicit incremental_cholesky(const Eigen::MatrixXd* q) { reset(q); }

    void reset(const Eigen::MatrixXd* q) {
        q_ = q;
        const auto n = q->rows();
        l_.setZero(n, n);
        members_.clear();
        pos_.assign(static_cast<std::size_t>(n), -1);
        updates_ = 0;
        ridge_ = 0.0;
        double tr = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) tr += (*q)(i, i);
        ridge_unit_ = 1e-10 * (n > 0 ? std::max(tr / static_cast<double>(n), 1e-300) : 1.0);
    }

    std::size_t size() const { return members_.size(); }
    const std::vector<Eigen::Index>& members() const { return members_; }
    bool contains(Eigen::Index i) const { return pos_[static_cast<std::size_t>(i)] >= 0; }
    bool degenerate() const { return ridge_ > 0.0; }

    void append(Eigen::Index idx) {
        members_.push_back(idx);
        pos_[static_cast<std::size_t>(idx)] = static_cast<int>(members_.size()) - 1;
        ++updates_;
        if (!append_row(members_.size() - 1)) rebuild(ridge_unit_);
    }

    void remove(Eigen::Index idx) {
        const int k = pos_[static_cast<std::size_t>(idx)];
        if (k < 0) return;
        const auto m = static_cast<Eigen::Index>(members_.size());
        const Eigen::Index tail = m - k - 1;
        if (tail > 0) {
            Eigen::VectorXd w = l_.block(k + 1, k, tail, 1);
            // shift the trailing rows up and left by one
            for (Eigen::Index r = k + 1; r < m; ++r) {
                l_.row(r - 1).head(k) = l_.row(r).head(k);
                for (Eigen::Index c = k + 1; c <= r; ++c) l_(r - 1, c - 1) = l_(r, c);
            }
            rank_one_update(k, tail, w);
        }
        l_.row(m - 1).setZero();
        l_.col(m - 1).setZero();
        members_.erase(members_.begin() + k);
        pos_[static_cast<std::size_t>(idx)] = -1;
        for (std::size_t j = static_cast<std::size_t>(k); j < members_.size(); ++j)
            pos_[static_cast<std::size_t>(members_[j])] = static_cast<int>(j);
        ++updates_;
    }

    /// Rebuilds the factor from scratch over the current working set, without a ridge if possible.
    void refactor() { rebuild(0.0); }

    /// Solves Q_FF x = rhs, with rhs ordered like `members()`. A singular
    /// working set gets a few refinement steps on top of the ridged solve.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
        if (updates_ >= 64) refactor();
        Eigen::VectorXd x = raw_solve(rhs);
        if (residual(x, rhs, ridge_).lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
            refactor();
            x = raw_solve(rhs);
        }
        refine(x, rhs);
        return x;
    }

    /// Solves two right-hand sides sharing one drift check.
    void solve2(const Eigen::VectorXd& r0, const Eigen::VectorXd& r1, Eigen::VectorXd& x0, Eigen::VectorXd& x1) {
        x0 = solve(r0);
        x1 = raw_solve(r1);
        refine(x1, r1);
    }

private:
    // Factors row k of the working set; false if the pivot collapses.
    bool append_row(std::size_t k) {
        const auto m = static_cast<Eigen::Index>(k);
        const auto idx = members_[k];
        double d = (*q_)(idx, idx) + ridge_;
        if (m > 0) {
            Eigen::VectorXd col(m);
            for (Eigen::Index j = 0; j < m; ++j) col[j] = (*q_)(members_[static_cast<std::size_t>(j)], idx);
            l_.block(0, 0, m, m).triangularView<Eigen::Lower>().solveInPlace(col);
            l_.row(m).head(m) = col.transpose();
            d -= col.squaredNorm();
        }
        if (ridge_ > 0.0) {
            d = std::max(d, ridge_);
        } else if (!(d > 1e-10 * std::max(1.0, std::abs((*q_)(idx, idx))))) {
            return false;
        }
        l_(m, m) = std::sqrt(d);
        return true;
    }

    void rebuild(double ridge) {
        ridge_ = ridge;
        l_.setZero();
        for (std::size_t k = 0; k < members_.size(); ++k) {
            if (!append_row(k)) {
                rebuild(ridge_unit_);
                return;
            }
        }
        updates_ = 0;
    }

    Eigen::VectorXd raw_solve(const Eigen::VectorXd& rhs) const {
        const auto m = static_cast<Eigen::Index>(members_.size());
        Eigen::VectorXd x = rhs;
        if (m == 0) return x;
        const auto lv = l_.topLeftCorner(m, m);
        lv.triangularView<Eigen::Lower>().solveInPlace(x);
        lv.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
        return x;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& rhs, double ridge) const {
        const auto m = static_cast<Eigen::Index>(members_.size());
        Eigen::VectorXd res(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            double acc = ridge * x[a];
            const auto ia = members_[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < m; ++b) acc += (*q_)(ia, members_[static_cast<std::size_t>(b)]) * x[b];
            res[a] = rhs[a] - acc;
        }
        return res;
    }

    void refine(Eigen::VectorXd& x, const Eigen::VectorXd& rhs) const {
        if (ridge_ <= 0.0) return;
        for (int k = 0; k < 3; ++k) x += raw_solve(residual(x, rhs, 0.0));
    }

    // L33 L33' + w w' for the block starting at (k, k) of size `len`.
    void rank_one_update(Eigen::Index k, Eigen::Index len, Eigen::VectorXd w) {
        for (Eigen::Index j = 0; j < len; ++j) {
            const Eigen::Index jj = k + j;
            const double ljj = l_(jj, jj);
            const double r = std::hypot(ljj, w[j]);
            const double c = r / ljj;
            const double s = w[j] / ljj;
            l_(jj, jj) = r;
            for (Eigen::Index i = j + 1; i < len; ++i) {
                const Eigen::Index ii = k + i;
                l_(ii, jj) = (l_(ii, jj) + s * w[i]) / c;
                w[i] = c * w[i] - s * l_(ii, jj);
            }
        }
    }

    const Eigen::MatrixXd* q_ = nullptr;
    Eigen::MatrixXd l_;
    std::vector<Eigen::Index> members_;
    std::vector<int> pos_;
    std::size_t updates_ = 0;
    double ridge_ = 0.0;
    double ridge_unit_ = 1e-10;
};

} // namespace opath::detail
