#include <opath/io.hpp>
#include <opath/path.hpp>

#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

using namespace opath;
namespace ts = testing_support;

namespace {

bool bit_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

model trained(task_kind task, bool embed, bool with_norm, std::uint64_t seed, dataset* raw_out = nullptr) {
    dataset raw = ts::random_problem(task, 30, 3, seed);
    raw.x *= 7.0;
    std::optional<normalization_params> norm;
    dataset train = raw;
    if (with_norm) std::tie(train, norm) = normalize(raw);
    const auto q = build_q(train, kernel_spec::rbf());
    const homotopy_params p0{1.0, task == task_kind::classification ? 0.0 : 1.0, 1.0};
    const auto tr = trace_path(q, p0, trajectory::op_theta);
    if (raw_out) *raw_out = raw;
    return make_model(train, kernel_spec::rbf(), tr.final_alpha, tr.params_at(tr.end), trajectory::op_theta, embed, norm);
}

} // namespace

TEST(ModelFile, SaveLoadPredictIsBitIdentical) {
    const auto dir = std::filesystem::temp_directory_path();
    for (auto task : {task_kind::classification, task_kind::regression}) {
        for (bool norm : {false, true}) {
            dataset raw;
            const auto m = trained(task, true, norm, 3, &raw);
            const auto file = (dir / "opath_model_test.json").string();
            save_model(file, m);
            const auto back = load_model(file);
            EXPECT_TRUE(bit_equal(predict(m, raw.x), predict(back, raw.x)));
            EXPECT_EQ(back.alpha, m.alpha);
            EXPECT_EQ(back.support, m.support);
            EXPECT_EQ(back.fingerprint, m.fingerprint);
            EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
            std::filesystem::remove(file);
        }
    }
}

TEST(ModelFile, PredictionMatchesTrainingMarginsAndUndoesNormalization) {
    dataset raw;
    const auto m = trained(task_kind::regression, true, true, 4, &raw);
    const auto [train, norm] = normalize(raw);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(train.n()));
    for (std::size_t k = 0; k < m.support.size(); ++k) alpha[static_cast<Eigen::Index>(m.support[k])] = m.alpha[k];
    const Eigen::VectorXd f_std = evaluate_model(alpha, train, kernel_spec::rbf(), train.x);
    const Eigen::VectorXd f = predict(m, raw.x);
    for (Eigen::Index i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], f_std[i] * norm.output_std + norm.output_mean, 1e-10);
}

TEST(ModelFile, NonEmbeddedModelsNeedMatchingTrainingData) {
    dataset raw;
    const auto embedded = trained(task_kind::classification, true, true, 5, &raw);
    const auto bare = trained(task_kind::classification, false, true, 5);
    EXPECT_FALSE(bare.embedded());
    EXPECT_FALSE(to_json(bare).contains("support_vectors"));
    EXPECT_THROW((void)predict(bare, raw.x), precondition_error);
    EXPECT_TRUE(bit_equal(predict(bare, raw.x, &raw), predict(embedded, raw.x)));
    dataset other = raw;
    other.x(0, 0) += 1e-9;
    EXPECT_THROW((void)predict(bare, raw.x, &other), validation_error);
}

TEST(ModelFile, ZeroModelScoresZero) {
    const auto ds = ts::random_problem(task_kind::classification, 10, 2, 1);
    const auto m = make_model(ds, kernel_spec::linear(), Eigen::VectorXd::Zero(10), {1.0, 0.0, 1.0}, trajectory::op_theta, true);
    EXPECT_TRUE(m.support.empty());
    EXPECT_TRUE((predict(m, ds.x).array() == 0.0).all());
    const std::string csv = predictions_csv(predict(m, ds.x), task_kind::classification);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,decision,label");
    EXPECT_NE(csv.find("\n0,0,1\n"), std::string::npos);
}

TEST(ModelFile, RejectsMalformedDocuments) {
    const auto m = trained(task_kind::classification, true, false, 6);
    auto j = to_json(m);
    EXPECT_EQ(j.at("format_version"), model_format_version);
    j["format_version"] = 99;
    EXPECT_THROW((void)model_from_json(j), validation_error);
    j = to_json(m);
    j["alpha"].push_back(1.0);
    EXPECT_THROW((void)model_from_json(j), validation_error);
    j = to_json(m);
    j.erase("kernel");
    EXPECT_THROW((void)model_from_json(j), validation_error);
    j = to_json(m);
    j["fingerprint"] = "zz";
    EXPECT_THROW((void)model_from_json(j), validation_error);
    const auto file = (std::filesystem::temp_directory_path() / "opath_bad_model.json").string();
    write_file(file, "{not json");
    EXPECT_THROW((void)load_model(file), validation_error);
    std::filesystem::remove(file);
    EXPECT_THROW((void)load_model("/no/such/model.json"), io_error);
}

TEST(PathExport, CsvRowsFollowTheEvents) {
    const auto ds = ts::random_problem(task_kind::classification, 30, 2, 7);
    const auto tr = trace_path(build_q(ds, kernel_spec::rbf()), {1.0, 0.0, 1.0}, trajectory::op_theta);
    const std::string csv = path_csv(tr);
    std::vector<std::string> lines;
    std::size_t at = 0;
    while (at < csv.size()) {
        const auto nl = csv.find('\n', at);
        lines.push_back(csv.substr(at, nl - at));
        at = nl + 1;
    }
    ASSERT_EQ(lines.size(), tr.events.size() + 1);
    EXPECT_EQ(lines[1].rfind("0,breakpoint,1,,anchor,", 0), 0u);
    EXPECT_EQ(lines.back().rfind(std::to_string(tr.events.size() - 1) + ",terminal,0,", 0), 0u);
    for (std::size_t k = 1; k < lines.size(); ++k)
        EXPECT_EQ(std::count(lines[k].begin(), lines[k].end(), ','), 7) << lines[k];
    // 17 significant digits reproduce the objective exactly
    const auto& e = tr.events[1];
    const auto row = lines[2];
    std::size_t pos = 0;
    for (int c = 0; c < 5; ++c) pos = row.find(',', pos) + 1;
    EXPECT_EQ(std::stod(row.substr(pos, row.find(',', pos) - pos)), e.objective);
}

TEST(PathExport, SnapshotsCarryAlphaAndOutliers) {
    const auto ds = ts::random_problem(task_kind::classification, 20, 2, 8);
    const auto tr = trace_path(build_q(ds, kernel_spec::rbf()), {1.0, 0.0, 1.0}, trajectory::op_theta);
    const std::string text = snapshots_jsonl(tr);
    std::size_t at = 0, k = 0;
    while (at < text.size()) {
        const auto nl = text.find('\n', at);
        const auto j = nlohmann::json::parse(text.substr(at, nl - at));
        at = nl + 1;
        const auto idx = j.at("event_idx").get<std::size_t>();
        const auto& e = tr.events.at(idx);
        ASSERT_TRUE(e.alpha.has_value());
        EXPECT_EQ(j.at("alpha").get<std::vector<double>>(), ts::to_std(*e.alpha));
        EXPECT_EQ(j.at("outliers").get<std::vector<std::size_t>>(), e.part->outliers());
        EXPECT_EQ(j.at("kind").get<std::string>(), to_string(e.kind));
        ++k;
    }
    EXPECT_EQ(k, tr.count(event_kind::breakpoint) + tr.count(event_kind::jump));
}
