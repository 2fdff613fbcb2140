#include <opath/kernel.hpp>
#include <opath/loss.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace opath;
namespace ts = testing_support;

TEST(Loss, ClassificationEndpoints) {
    const homotopy_params hinge{1.0, 0.0, 1.0};
    const homotopy_params ramp{0.0, -1.0, 1.0};
    for (double z : {-3.0, -1.0, -0.2, 0.0, 0.5, 1.0, 2.0}) {
        EXPECT_DOUBLE_EQ(loss_svc(z, hinge), std::max(0.0, 1.0 - z)) << z;
        EXPECT_DOUBLE_EQ(loss_svc(z, ramp), std::min(2.0, std::max(0.0, 1.0 - z))) << z;
    }
}

TEST(Loss, ClassificationIsContinuousOnBothTrajectories) {
    for (double theta : {0.0, 0.3, 1.0}) {
        const homotopy_params p{theta, 0.0, 1.0};
        EXPECT_NEAR(loss_svc(std::nextafter(0.0, -1.0), p), loss_svc(0.0, p), 1e-12);
    }
    for (double s : {-2.0, -0.5, 0.0}) {
        const homotopy_params p{0.0, s, 1.0};
        EXPECT_NEAR(loss_svc(std::nextafter(s, -10.0), p), loss_svc(s, p), 1e-12);
    }
    // off the trajectories the loss jumps at the threshold
    const homotopy_params off{0.5, -1.0, 1.0};
    EXPECT_GT(std::abs(loss_svc(-1.0 - 1e-12, off) - loss_svc(-1.0, off)), 0.1);
    EXPECT_FALSE(off.on_trajectory(task_kind::classification));
    EXPECT_TRUE(off.on_trajectory(task_kind::regression));
}

TEST(Loss, RegressionInterpolatesAbsoluteAndCapped) {
    for (double z : {-4.0, -1.0, 0.0, 0.7, 1.0, 3.0}) {
        EXPECT_DOUBLE_EQ(loss_svr(z, {1.0, 1.0, 1.0}), std::abs(z));
        EXPECT_DOUBLE_EQ(loss_svr(z, {0.0, 1.0, 1.0}), std::min(std::abs(z), 1.0));
        EXPECT_DOUBLE_EQ(loss_svr(z, {0.5, 1.0, 1.0}), std::abs(z) <= 1.0 ? std::abs(z) : 1.0 + 0.5 * (std::abs(z) - 1.0));
    }
}

TEST(Loss, ObjectiveMatchesDirectSum) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto task = seed % 2 ? task_kind::regression : task_kind::classification;
        const auto ds = ts::random_problem(task, 12, 2, seed);
        const auto q = build_q(ds, kernel_spec::rbf());
        rng g(seed);
        Eigen::VectorXd a(12);
        for (auto& v : a) v = task == task_kind::classification ? g.uniform(0, 2) : g.uniform(-2, 2);
        const homotopy_params p{0.4, task == task_kind::classification ? 0.0 : 0.5, 2.0};
        double want = 0.0;
        for (Eigen::Index i = 0; i < 12; ++i) {
            double fi = 0.0;
            for (Eigen::Index j = 0; j < 12; ++j) {
                const double k = std::exp(-0.5 * (ds.x.row(i) - ds.x.row(j)).squaredNorm());
                fi += task == task_kind::classification ? a[j] * ds.y[j] * k : a[j] * k;
            }
            const double z = task == task_kind::classification ? ds.y[i] * fi : ds.y[i] - fi;
            want += 2.0 * (task == task_kind::classification ? loss_svc(z, p) : loss_svr(z, p));
            want += 0.5 * (task == task_kind::classification ? a[i] * ds.y[i] * fi : a[i] * fi);
        }
        EXPECT_NEAR(objective(q, a, p), want, 1e-10 * std::abs(want));
        EXPECT_DOUBLE_EQ(objective(ds, q, a, p), objective(q, a, p));
    }
}

TEST(Loss, ParameterChecks) {
    EXPECT_THROW(homotopy_params({1.5, 0.0, 1.0}).check(task_kind::classification), precondition_error);
    EXPECT_THROW(homotopy_params({0.5, 0.0, 0.0}).check(task_kind::classification), precondition_error);
    EXPECT_THROW(homotopy_params({0.5, 0.1, 1.0}).check(task_kind::classification), precondition_error);
    EXPECT_THROW(homotopy_params({0.5, -0.1, 1.0}).check(task_kind::regression), precondition_error);
    EXPECT_NO_THROW(homotopy_params({0.0, -2.0, 1.0}).check(task_kind::classification));
    const auto q = build_q(ts::random_problem(task_kind::classification, 4, 1, 0), kernel_spec::linear());
    EXPECT_THROW((void)objective(q, Eigen::VectorXd::Zero(3), {}), precondition_error);
}
