#include <opath/dataset.hpp>
#include <opath/io.hpp>
#include <opath/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

using namespace opath;

namespace {

/// Random dataset with a mix of zero, integral and awkward values.
dataset random_dataset(task_kind task, std::size_t n, std::size_t d, std::uint64_t seed) {
    rng g(seed);
    dataset ds;
    ds.task = task;
    ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    ds.y.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
            const double u = g.uniform();
            ds.x(i, j) = u < 0.3 ? 0.0 : u < 0.5 ? std::round(g.normal() * 10.0) : g.normal() * std::pow(10.0, g.uniform(-8, 8));
        }
        ds.y[i] = task == task_kind::classification ? (g.uniform() < 0.5 ? -1.0 : 1.0) : g.normal(0.0, 3.0);
    }
    return ds;
}

std::size_t count_changed(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) k += a[i] != b[i];
    return k;
}

} // namespace

TEST(SvmLight, ParsesSparseRowsCommentsAndBlankLines) {
    const auto ds = parse_svmlight("# header comment\n+1 1:0.5 3:-2\n\n-1 2:1e-3 # trailing\n");
    ASSERT_EQ(ds.n(), 2u);
    ASSERT_EQ(ds.d(), 3u);
    EXPECT_EQ(ds.y[0], 1.0);
    EXPECT_EQ(ds.y[1], -1.0);
    EXPECT_EQ(ds.x(0, 0), 0.5);
    EXPECT_EQ(ds.x(0, 1), 0.0);
    EXPECT_EQ(ds.x(0, 2), -2.0);
    EXPECT_EQ(ds.x(1, 1), 1e-3);
}

TEST(SvmLight, AcceptsCrLfLineEndings) {
    const auto ds = parse_svmlight("1 1:2\r\n-1 1:3\r\n");
    ASSERT_EQ(ds.n(), 2u);
    EXPECT_EQ(ds.x(1, 0), 3.0);
}

TEST(SvmLight, ReportsLineAndColumnOfMalformedToken) {
    try {
        (void)parse_svmlight("1 1:2\n-1 1:3 x:4\n");
        FAIL() << "expected a parse error";
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 8u);
    }
}

TEST(SvmLight, RejectsZeroAndDecreasingIndices) {
    EXPECT_THROW((void)parse_svmlight("1 0:1\n"), parse_error);
    EXPECT_THROW((void)parse_svmlight("1 2:1 1:1\n"), parse_error);
    EXPECT_THROW((void)parse_svmlight("1 2:1 2:1\n"), parse_error);
    EXPECT_THROW((void)parse_svmlight("abc 1:1\n"), parse_error);
    EXPECT_THROW((void)parse_svmlight("1 1:zz\n"), parse_error);
}

TEST(SvmLight, ClassificationTargetsMustBeSigns) {
    EXPECT_THROW((void)parse_svmlight("2 1:1\n"), validation_error);
    EXPECT_NO_THROW((void)parse_svmlight("2.5 1:1\n", task_kind::regression));
}

TEST(SvmLight, RoundTripIsExactOnRandomData) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto task = seed % 2 ? task_kind::regression : task_kind::classification;
        auto ds = random_dataset(task, 1 + seed % 17, 1 + seed % 6, seed);
        // the last column must carry a nonzero somewhere or the width shrinks on reading
        ds.x(0, ds.x.cols() - 1) = 1.25;
        const std::string text = write_svmlight(ds);
        const auto back = parse_svmlight(text, task);
        EXPECT_TRUE(back == ds) << "seed " << seed;
        EXPECT_EQ(write_svmlight(back), text);
    }
}

TEST(Csv, TargetColumnHeaderAndRaggedRows) {
    const auto ds = parse_csv("a,b,c\n1,2,3\n4,5,6\n", 1, true, task_kind::regression);
    ASSERT_EQ(ds.n(), 2u);
    ASSERT_EQ(ds.d(), 2u);
    EXPECT_EQ(ds.y[1], 5.0);
    EXPECT_EQ(ds.x(1, 0), 4.0);
    EXPECT_EQ(ds.x(1, 1), 6.0);
    try {
        (void)parse_csv("1,2\n3\n", 0, false, task_kind::regression);
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW((void)parse_csv("1,2\n", 5, false, task_kind::regression), parse_error);
    EXPECT_THROW((void)parse_csv("1,q\n", 0, false, task_kind::regression), parse_error);
}

TEST(Csv, WriteThenParseRoundTrips) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = random_dataset(task_kind::regression, 1 + seed, 1 + seed % 4, seed + 100);
        const std::size_t target = seed % (ds.d() + 1);
        EXPECT_TRUE(parse_csv(write_csv(ds, target), target, false, task_kind::regression) == ds);
    }
}

TEST(LoadDataset, MissingFileNamesThePath) {
    try {
        (void)load_dataset("/definitely/not/here.svm", {});
        FAIL();
    } catch (const io_error& e) {
        EXPECT_NE(std::string(e.what()).find("/definitely/not/here.svm"), std::string::npos);
    }
}

TEST(LoadDataset, ReadsBothFormatsFromDisk) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto svm = (dir / "opath_load_test.svm").string();
    const auto csv = (dir / "opath_load_test.csv").string();
    write_file(svm, "1 1:1 2:2\n-1 2:3\n");
    write_file(csv, "y,x1,x2\n1,1,2\n-1,0,3\n");
    const auto a = load_dataset(svm, {});
    const auto b = load_dataset(csv, {task_kind::classification, data_format::csv, 0, true});
    EXPECT_TRUE(a == b);
    std::filesystem::remove(svm);
    std::filesystem::remove(csv);
}

TEST(Split, SizesUseLargestRemainder) {
    // independent reference: floor, then hand out leftovers by descending remainder
    for (std::size_t n = 0; n < 200; ++n) {
        const std::array<double, 3> f{0.4, 0.3, 0.3};
        const auto got = split_sizes(n, f);
        EXPECT_EQ(got[0] + got[1] + got[2], n);
        for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(static_cast<double>(got[k]) - f[k] * n), 1.0) << n;
    }
    EXPECT_EQ(split_sizes(10, {0.4, 0.3, 0.3}), (std::array<std::size_t, 3>{4, 3, 3}));
    EXPECT_EQ(split_sizes(11, {0.4, 0.3, 0.3}), (std::array<std::size_t, 3>{5, 3, 3}));
    EXPECT_EQ(split_sizes(3, {0.5, 0.25, 0.25}), (std::array<std::size_t, 3>{1, 1, 1}));
    EXPECT_THROW((void)split_sizes(10, {0.5, 0.5, 0.0}), precondition_error);
    EXPECT_THROW((void)split_sizes(10, {0.5, 0.4, 0.3}), precondition_error);
}

TEST(Split, FoldsPartitionTheIndicesAndDependOnlyOnSeed) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = split_indices(57, {{0.4, 0.3, 0.3}, seed});
        const auto b = split_indices(57, {{0.4, 0.3, 0.3}, seed});
        EXPECT_EQ(a, b);
        std::set<std::size_t> all;
        for (const auto& fold : a) all.insert(fold.begin(), fold.end());
        EXPECT_EQ(all.size(), 57u);
        EXPECT_EQ(*all.rbegin(), 56u);
    }
    EXPECT_NE(split_indices(57, {{0.4, 0.3, 0.3}, 1}), split_indices(57, {{0.4, 0.3, 0.3}, 2}));
}

TEST(Noise, FlipLabelsChangesExactlyTheRoundedCount) {
    const auto ds = random_dataset(task_kind::classification, 101, 2, 3);
    for (double frac : {0.0, 0.15, 0.5, 1.0}) {
        const auto noisy = flip_labels(ds, frac, 9);
        EXPECT_EQ(count_changed(ds.y, noisy.y), static_cast<std::size_t>(std::floor(frac * 101 + 0.5)));
        EXPECT_TRUE(noisy.x == ds.x);
    }
    EXPECT_TRUE(flip_labels(ds, 0.15, 9) == flip_labels(ds, 0.15, 9));
    EXPECT_THROW((void)flip_labels(random_dataset(task_kind::regression, 5, 1, 1), 0.1, 0), invalid_task_error);
    EXPECT_THROW((void)flip_labels(ds, 1.5, 0), precondition_error);
}

TEST(Noise, RegressionInjectionTouchesOnlyChosenRows) {
    const auto ds = random_dataset(task_kind::regression, 200, 3, 4);
    const auto noisy = inject_regression_noise(ds, 0.05, -2.0, 2.0, 10.0, 8);
    EXPECT_EQ(count_changed(ds.y, noisy.y), 10u);
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        const bool touched = ds.y[i] != noisy.y[i];
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
            const double dx = noisy.x(i, j) - ds.x(i, j);
            if (touched)
                EXPECT_LE(std::abs(dx), 2.0 + 1e-9 * std::max(1.0, std::abs(ds.x(i, j))));
            else
                EXPECT_EQ(dx, 0.0);
        }
    }
    EXPECT_TRUE(inject_regression_noise(ds, 0.0, -2, 2, 10, 1) == ds);
    EXPECT_THROW((void)inject_regression_noise(random_dataset(task_kind::classification, 5, 1, 1)), invalid_task_error);
}

TEST(Normalize, InputsSpanUnitBoxAndOutputsAreStandardized) {
    auto ds = random_dataset(task_kind::regression, 50, 4, 5);
    ds.x.col(2).setConstant(7.0);
    const auto [out, p] = normalize(ds);
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
        if (j == 2) {
            EXPECT_TRUE((out.x.col(j).array() == 0.0).all());
            continue;
        }
        EXPECT_DOUBLE_EQ(out.x.col(j).minCoeff(), -1.0);
        EXPECT_NEAR(out.x.col(j).maxCoeff(), 1.0, 1e-15);
    }
    double mean = 0.0, var = 0.0;
    for (Eigen::Index i = 0; i < out.y.size(); ++i) mean += out.y[i] / 50.0;
    for (Eigen::Index i = 0; i < out.y.size(); ++i) var += (out.y[i] - mean) * (out.y[i] - mean) / 50.0;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-12);
    // parameters survive JSON and map held-out data identically
    const normalization_params back = nlohmann::json(p).get<normalization_params>();
    EXPECT_TRUE(back.apply(ds) == out);
}

TEST(Fingerprint, SensitiveToEveryValue) {
    const auto ds = random_dataset(task_kind::regression, 10, 3, 6);
    const auto base = fingerprint(ds);
    EXPECT_EQ(fingerprint(ds), base);
    auto a = ds;
    a.x(4, 1) = std::nextafter(a.x(4, 1), 1e300);
    EXPECT_NE(fingerprint(a), base);
    auto b = ds;
    b.y[9] += 1.0;
    EXPECT_NE(fingerprint(b), base);
}
