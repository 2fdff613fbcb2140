#pragma once

#include <opath/dataset.hpp>
#include <opath/rng.hpp>

#include <cmath>

namespace opath {

/// Two spherical Gaussian classes with means +/- shift * (1, ..., 1) / sqrt(d).
inline dataset make_gaussian_classes(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
    rng g(seed);
    dataset ds;
    ds.task = task_kind::classification;
    ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.y.resize(static_cast<Eigen::Index>(n));
    const double m = d > 0 ? shift / std::sqrt(static_cast<double>(d)) : 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        const double label = g.uniform() < 0.5 ? -1.0 : 1.0;
        ds.y[i] = label;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) ds.x(i, j) = label * m + g.normal();
    }
    return ds;
}

/// y = sum_j sin(pi x_j) / sqrt(d) + N(0, noise^2) with inputs uniform on [-1, 1]^d.
inline dataset make_sine_regression(std::size_t n, std::size_t d, double noise, std::uint64_t seed) {
    rng g(seed);
    dataset ds;
    ds.task = task_kind::regression;
    ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.y.resize(static_cast<Eigen::Index>(n));
    const double scale = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        double f = 0.0;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
            ds.x(i, j) = g.uniform(-1.0, 1.0);
            f += std::sin(3.14159265358979323846 * ds.x(i, j));
        }
        ds.y[i] = scale * f + noise * g.normal();
    }
    return ds;
}

} // namespace opath
