#pragma once

#include <opath/dataset.hpp>
#include <opath/error.hpp>
#include <opath/kernel.hpp>
#include <opath/partition.hpp>
#include <opath/path.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace opath {

class io_error : public error {
public:
    using error::error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw io_error("write to '" + path + "' failed");
}

enum class data_format { svmlight, csv };

inline data_format parse_format(std::string_view s) {
    if (s == "svmlight" || s == "libsvm") return data_format::svmlight;
    if (s == "csv") return data_format::csv;
    throw validation_error("unknown data format '" + std::string(s) + "'");
}

struct load_options {
    task_kind task = task_kind::classification;
    data_format format = data_format::svmlight;
    std::size_t target_column = 0;
    bool has_header = false;
};

inline dataset load_dataset(const std::string& path, const load_options& opt) {
    const std::string text = read_file(path);
    if (opt.format == data_format::svmlight) return parse_svmlight(text, opt.task);
    return parse_csv(text, opt.target_column, opt.has_header, opt.task);
}

// -- path export ----------------------------------------------------------

inline const char* path_csv_header() { return "event_idx,kind,param,moved_index,set_change,objective,n_E,n_O"; }

/// One row per event; `moved_index` is empty when no single instance moved.
inline std::string path_csv(const path_trace& tr) {
    std::string out = path_csv_header();
    out += '\n';
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        const auto& e = tr.events[k];
        out += std::to_string(k);
        out += ',';
        out += to_string(e.kind);
        out += ',';
        out += detail::fmt17(e.param);
        out += ',';
        if (e.moved_index) out += std::to_string(*e.moved_index);
        out += ',';
        out += e.set_change;
        out += ',';
        out += detail::fmt17(e.objective);
        out += ',';
        out += std::to_string(e.n_e);
        out += ',';
        out += std::to_string(e.n_o);
        out += '\n';
    }
    return out;
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// One JSON object per snapshot event: index, kind, parameter, alpha, outlier indices.
inline std::string snapshots_jsonl(const path_trace& tr) {
    std::string out;
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        const auto& e = tr.events[k];
        if (!e.alpha) continue;
        nlohmann::json j = {{"event_idx", k},
                            {"kind", to_string(e.kind)},
                            {"param", e.param},
                            {"alpha", to_vector(*e.alpha)},
                            {"outliers", e.part ? e.part->outliers() : std::vector<std::size_t>{}}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

// -- model files ----------------------------------------------------------

inline constexpr int model_format_version = 1;

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/**
 * Trained kernel machine: the nonzero coefficients, the indices of their
 * training instances and (optionally) the instances themselves.
 * f(x) = sum_k alpha_k w_k K(x, x_k) with w_k the label for classification
 * and 1 for regression.
 */
struct model {
    task_kind task = task_kind::classification;
    kernel_spec kernel;
    double c = 1.0;
    std::string method = "op";
    trajectory traj = trajectory::op_theta;
    double theta = 1.0;
    double s = 0.0;
    std::vector<std::size_t> support;
    std::vector<double> alpha;
    std::uint64_t fingerprint = 0;
    std::size_t n_train = 0;
    std::size_t d = 0;
    std::optional<normalization_params> norm;
    /// Support instances and their targets, when embedded.
    std::optional<Eigen::MatrixXd> sv;
    std::optional<Eigen::VectorXd> sv_y;
    std::optional<nlohmann::json> certificate;

    bool embedded() const { return sv.has_value(); }
};

/// Model for coefficient vector `alpha` trained on `train` (already normalized, if `norm` is set).
inline model make_model(const dataset& train, const kernel_spec& kernel, const Eigen::VectorXd& alpha,
                        const homotopy_params& p, trajectory traj, bool embed,
                        std::optional<normalization_params> norm = std::nullopt) {
    if (static_cast<std::size_t>(alpha.size()) != train.n()) throw precondition_error("alpha size mismatch");
    model m;
    m.task = train.task;
    m.kernel = kernel.resolved(train.d());
    m.c = p.c;
    m.traj = traj;
    m.theta = p.theta;
    m.s = p.s;
    m.fingerprint = fingerprint(train);
    m.n_train = train.n();
    m.d = train.d();
    m.norm = std::move(norm);
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] == 0.0) continue;
        m.support.push_back(static_cast<std::size_t>(i));
        m.alpha.push_back(alpha[i]);
    }
    if (embed) {
        const dataset sub = subset(train, m.support);
        m.sv = sub.x;
        m.sv_y = sub.y;
    }
    return m;
}

/**
 * Decision values on raw inputs `x` (normalized first when the model
 * carries normalization; regression outputs are mapped back). Without
 * embedded support vectors the training set must be given and match the
 * stored fingerprint.
 */
inline Eigen::VectorXd predict(const model& m, const Eigen::MatrixXd& x_raw, const dataset* train = nullptr) {
    Eigen::MatrixXd sv;
    Eigen::VectorXd sv_y;
    if (m.embedded()) {
        sv = *m.sv;
        sv_y = *m.sv_y;
    } else {
        if (!train) throw precondition_error("model has no embedded support vectors; the training data is required");
        // the fingerprint covers the training data as the solver saw it
        const dataset seen = m.norm ? m.norm->apply(*train) : *train;
        if (fingerprint(seen) != m.fingerprint)
            throw validation_error("training data fingerprint " + hex64(fingerprint(seen)) +
                                   " does not match the model's " + hex64(m.fingerprint));
        const dataset sub = subset(seen, m.support);
        sv = sub.x;
        sv_y = sub.y;
    }
    if (x_raw.rows() > 0 && static_cast<std::size_t>(x_raw.cols()) != m.d)
        throw precondition_error("dimension mismatch: model has " + std::to_string(m.d) + " features, input has " +
                                 std::to_string(x_raw.cols()));
    Eigen::MatrixXd x = x_raw;
    if (m.norm) {
        dataset tmp;
        tmp.task = m.task;
        tmp.x = x_raw;
        tmp.y = Eigen::VectorXd::Zero(x_raw.rows());
        normalization_params inputs_only = *m.norm;
        inputs_only.standardize_output = false;
        x = inputs_only.apply(tmp).x;
    }
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(m.alpha.data(), static_cast<Eigen::Index>(m.alpha.size()));
    if (m.task == task_kind::classification) w = w.cwiseProduct(sv_y);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(x.rows());
    if (x.rows() > 0 && w.size() > 0) f = cross_kernel(m.kernel, x, sv) * w;
    if (m.norm && m.norm->standardize_output) f = (f.array() * m.norm->output_std + m.norm->output_mean).matrix();
    return f;
}

inline nlohmann::json to_json(const model& m) {
    nlohmann::json j;
    j["format_version"] = model_format_version;
    j["task"] = to_string(m.task);
    j["kernel"] = {{"kind", to_string(m.kernel.kind)}, {"gamma", m.kernel.gamma}};
    j["C"] = m.c;
    j["method"] = m.method;
    j["trajectory"] = to_string(m.traj);
    j["theta"] = m.theta;
    j["s"] = m.s;
    j["n_train"] = m.n_train;
    j["d"] = m.d;
    j["fingerprint"] = hex64(m.fingerprint);
    j["support_indices"] = m.support;
    j["alpha"] = m.alpha;
    j["normalization"] = m.norm ? nlohmann::json(*m.norm) : nlohmann::json(nullptr);
    if (m.sv) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.sv->rows(); ++i) rows.push_back(to_vector(m.sv->row(i).transpose()));
        j["support_vectors"] = std::move(rows);
        j["support_targets"] = to_vector(*m.sv_y);
    }
    if (m.certificate) j["certificate"] = *m.certificate;
    return j;
}

inline model model_from_json(const nlohmann::json& j) {
    try {
        model m;
        const int version = j.at("format_version").get<int>();
        if (version != model_format_version)
            throw validation_error("unsupported model format version " + std::to_string(version));
        m.task = parse_task(j.at("task").get<std::string>());
        m.kernel.kind = parse_kernel(j.at("kernel").at("kind").get<std::string>());
        m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
        m.c = j.at("C").get<double>();
        m.method = j.at("method").get<std::string>();
        m.traj = parse_trajectory(j.at("trajectory").get<std::string>());
        m.theta = j.at("theta").get<double>();
        m.s = j.at("s").get<double>();
        m.n_train = j.at("n_train").get<std::size_t>();
        m.d = j.at("d").get<std::size_t>();
        m.fingerprint = std::stoull(j.at("fingerprint").get<std::string>(), nullptr, 16);
        m.support = j.at("support_indices").get<std::vector<std::size_t>>();
        m.alpha = j.at("alpha").get<std::vector<double>>();
        if (m.support.size() != m.alpha.size()) throw validation_error("support index and alpha lists differ in length");
        if (!j.at("normalization").is_null()) m.norm = j.at("normalization").get<normalization_params>();
        if (j.contains("support_vectors")) {
            const auto& rows = j.at("support_vectors");
            if (rows.size() != m.support.size()) throw validation_error("support vector count mismatch");
            Eigen::MatrixXd sv(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.d));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto r = rows[i].get<std::vector<double>>();
                if (r.size() != m.d) throw validation_error("support vector " + std::to_string(i) + " has wrong dimension");
                for (std::size_t k = 0; k < m.d; ++k) sv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
            }
            const auto ty = j.at("support_targets").get<std::vector<double>>();
            if (ty.size() != m.support.size()) throw validation_error("support target count mismatch");
            m.sv = std::move(sv);
            m.sv_y = Eigen::Map<const Eigen::VectorXd>(ty.data(), static_cast<Eigen::Index>(ty.size()));
        }
        if (j.contains("certificate")) m.certificate = j.at("certificate");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed model file: ") + e.what());
    } catch (const std::logic_error&) {
        throw validation_error("malformed model fingerprint");
    }
}

inline void save_model(const std::string& path, const model& m) { write_file(path, to_json(m).dump(2) + "\n"); }

inline model load_model(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("'" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

/// Predictions CSV: one `index,value` row per instance (value at 17 significant digits).
inline std::string predictions_csv(const Eigen::VectorXd& f, task_kind task) {
    std::string out = task == task_kind::classification ? "index,decision,label\n" : "index,prediction\n";
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        out += std::to_string(i) + ',' + detail::fmt17(f[i]);
        if (task == task_kind::classification) out += f[i] >= 0.0 ? ",1" : ",-1";
        out += '\n';
    }
    return out;
}

} // namespace opath
