#pragma once

#include <opath/dataset.hpp>
#include <opath/kernel.hpp>
#include <opath/partition.hpp>
#include <opath/rng.hpp>
#include <opath/synthetic.hpp>

#include <oracle.hpp>

#include <Eigen/Dense>

#include <vector>

namespace testing_support {

inline oracle::matrix to_oracle(const Eigen::MatrixXd& m) {
    oracle::matrix out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return out;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline oracle::task to_oracle(opath::task_kind t) {
    return t == opath::task_kind::classification ? oracle::task::svc : oracle::task::svr;
}

inline oracle::side to_oracle(opath::side s) {
    switch (s) {
    case opath::side::inlier: return oracle::side::in;
    case opath::side::outlier: return oracle::side::out;
    case opath::side::outlier_low: return oracle::side::out_low;
    }
    return oracle::side::in;
}

/// Small noisy problem of either task; labels/targets overlap enough to produce outliers.
inline opath::dataset random_problem(opath::task_kind task, std::size_t n, std::size_t d, std::uint64_t seed) {
    if (task == opath::task_kind::classification) {
        auto ds = opath::make_gaussian_classes(n, d, 1.0, seed);
        return ds;
    }
    return opath::make_sine_regression(n, d, 0.3, seed);
}

} // namespace testing_support
