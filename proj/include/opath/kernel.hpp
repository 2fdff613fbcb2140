#pragma once

#include <opath/dataset.hpp>
#include <opath/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <string_view>

namespace opath {

enum class kernel_kind { linear, rbf };

struct kernel_spec {
    kernel_kind kind = kernel_kind::rbf;
    /// RBF width; a non-positive value means "use 1/d" when the Gram matrix is built.
    double gamma = 0.0;

    static kernel_spec linear() { return {kernel_kind::linear, 0.0}; }
    static kernel_spec rbf(double gamma = 0.0) { return {kernel_kind::rbf, gamma}; }

    /// Spec with gamma resolved for inputs of dimension `d`.
    kernel_spec resolved(std::size_t d) const {
        kernel_spec k = *this;
        if (k.kind == kernel_kind::rbf && !(k.gamma > 0.0)) k.gamma = d > 0 ? 1.0 / static_cast<double>(d) : 1.0;
        return k;
    }
};

inline const char* to_string(kernel_kind k) { return k == kernel_kind::linear ? "linear" : "rbf"; }

inline kernel_kind parse_kernel(std::string_view s) {
    if (s == "linear") return kernel_kind::linear;
    if (s == "rbf") return kernel_kind::rbf;
    throw validation_error("unknown kernel '" + std::string(s) + "'");
}

template <class A, class B>
double eval_kernel(const kernel_spec& spec, const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    if (a.size() != b.size())
        throw precondition_error("kernel dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()));
    if (spec.kind == kernel_kind::linear) return a.dot(b);
    if (!(spec.gamma > 0.0)) throw precondition_error("RBF kernel needs gamma > 0");
    return std::exp(-spec.gamma * (a - b).squaredNorm());
}

/**
 * Dense Gram matrix. For classification the entries are label-signed,
 * Q_ij = y_i y_j K(x_i, x_j), so that the margins are Q * alpha; for
 * regression they are the plain kernel values. `targets` keeps the labels
 * or outputs the matrix was built from.
 */
class q_matrix {
public:
    q_matrix() = default;
    q_matrix(Eigen::MatrixXd entries, bool is_signed, Eigen::VectorXd targets)
        : entries_(std::move(entries)), signed_(is_signed), targets_(std::move(targets)) {}

    std::size_t n() const { return static_cast<std::size_t>(entries_.rows()); }
    bool is_signed() const { return signed_; }
    task_kind task() const { return signed_ ? task_kind::classification : task_kind::regression; }

    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
    const Eigen::MatrixXd& dense() const { return entries_; }
    const Eigen::VectorXd& targets() const { return targets_; }

    /// Submatrix over the given row and column index sets.
    Eigen::MatrixXd block(const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b)
                out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = entries_(rows[a], cols[b]);
        return out;
    }

private:
    Eigen::MatrixXd entries_;
    bool signed_ = true;
    Eigen::VectorXd targets_;
};

inline q_matrix build_q(const dataset& ds, const kernel_spec& spec_in) {
    if (ds.n() == 0) throw precondition_error("cannot build a kernel matrix for an empty dataset");
    const kernel_spec spec = spec_in.resolved(ds.d());
    const auto n = static_cast<Eigen::Index>(ds.n());
    Eigen::MatrixXd k(n, n);
    if (spec.kind == kernel_kind::linear) {
        k.noalias() = ds.x * ds.x.transpose();
    } else {
        const Eigen::MatrixXd xt = ds.x.transpose();
        for (Eigen::Index j = 0; j < n; ++j) {
            k(j, j) = 1.0;
            for (Eigen::Index i = j + 1; i < n; ++i)
                k(i, j) = std::exp(-spec.gamma * (xt.col(i) - xt.col(j)).squaredNorm());
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1; i < n; ++i) k(j, i) = k(i, j);
    const bool is_signed = ds.task == task_kind::classification;
    if (is_signed) k = ds.y.asDiagonal() * k * ds.y.asDiagonal();
    return q_matrix(std::move(k), is_signed, ds.y);
}

/// K(x_new_i, x_train_j) for every pair; rows follow `x_new`.
inline Eigen::MatrixXd cross_kernel(const kernel_spec& spec_in, const Eigen::MatrixXd& x_new,
                                    const Eigen::MatrixXd& x_train) {
    if (x_new.cols() != x_train.cols()) throw precondition_error("kernel dimension mismatch");
    const kernel_spec spec = spec_in.resolved(static_cast<std::size_t>(x_train.cols()));
    if (spec.kind == kernel_kind::linear) return x_new * x_train.transpose();
    const Eigen::MatrixXd a = x_new.transpose();
    const Eigen::MatrixXd b = x_train.transpose();
    Eigen::MatrixXd g(x_new.rows(), x_train.rows());
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            g(i, j) = std::exp(-spec.gamma * (a.col(i) - b.col(j)).squaredNorm());
    return g;
}

} // namespace opath
