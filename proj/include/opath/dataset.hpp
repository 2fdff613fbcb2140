#pragma once

#include <opath/error.hpp>
#include <opath/rng.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace opath {

enum class task_kind { classification, regression };

inline const char* to_string(task_kind t) {
    return t == task_kind::classification ? "svc" : "svr";
}

inline task_kind parse_task(std::string_view s) {
    if (s == "svc" || s == "classification") return task_kind::classification;
    if (s == "svr" || s == "regression") return task_kind::regression;
    throw validation_error("unknown task '" + std::string(s) + "'");
}

/**
 * Instances stored densely as rows of `x`; `y` holds labels (+1/-1) for
 * classification and real outputs for regression.
 */
struct dataset {
    task_kind task = task_kind::classification;
    Eigen::MatrixXd x;
    Eigen::VectorXd y;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t d() const { return static_cast<std::size_t>(x.cols()); }

    friend bool operator==(const dataset& a, const dataset& b) {
        return a.task == b.task && a.x.rows() == b.x.rows() && a.x.cols() == b.x.cols() &&
               a.y.size() == b.y.size() && (a.x.array() == b.x.array()).all() &&
               (a.y.array() == b.y.array()).all();
    }
};

/// Throws validation_error unless every classification target is exactly +1 or -1.
inline void validate(const dataset& ds) {
    if (ds.x.rows() != ds.y.size()) throw validation_error("instance/target count mismatch");
    if (ds.task != task_kind::classification) return;
    for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
        if (ds.y[i] != 1.0 && ds.y[i] != -1.0)
            throw validation_error("classification target at instance " + std::to_string(i + 1) +
                                   " is not +1 or -1");
    }
}

inline dataset subset(const dataset& ds, const std::vector<std::size_t>& idx) {
    dataset out;
    out.task = ds.task;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), ds.x.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(idx[k]);
        out.x.row(static_cast<Eigen::Index>(k)) = ds.x.row(i);
        out.y[static_cast<Eigen::Index>(k)] = ds.y[i];
    }
    return out;
}

/// FNV-1a over the task, shape and raw bytes of the features and targets.
inline std::uint64_t fingerprint(const dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t header[3] = {static_cast<std::uint64_t>(ds.task), ds.n(), ds.d()};
    mix(header, sizeof(header));
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
            const double v = ds.x(i, j);
            mix(&v, sizeof(v));
        }
    mix(ds.y.data(), sizeof(double) * static_cast<std::size_t>(ds.y.size()));
    return h;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> to_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

/// 17 significant digits; enough for any double to round-trip.
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

} // namespace detail

/**
 * Parse SVMLight/LIBSVM text: `<target> <idx>:<val> ...` with 1-based indices.
 * Text after `#` is ignored; blank lines are skipped. Feature dimension is
 * the largest index seen.
 */
inline dataset parse_svmlight(std::string_view text, task_kind task = task_kind::classification) {
    struct row {
        double target;
        std::vector<std::pair<std::size_t, double>> feats;
    };
    std::vector<row> rows;
    std::size_t dim = 0;
    const auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        std::string_view line = lines[ln];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        row r{};
        std::size_t pos = 0;
        bool first = true;
        std::size_t last_index = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            if (pos >= line.size()) break;
            std::size_t end = pos;
            while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
            const std::string_view tok = line.substr(pos, end - pos);
            const std::size_t col = pos + 1;
            pos = end;
            if (first) {
                const auto v = detail::to_double(tok);
                if (!v) throw parse_error("malformed target '" + std::string(tok) + "'", ln + 1, col);
                r.target = *v;
                first = false;
                continue;
            }
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw parse_error("expected <index>:<value>, got '" + std::string(tok) + "'", ln + 1, col);
            std::size_t idx = 0;
            const auto idx_s = tok.substr(0, colon);
            const auto [p, ec] = std::from_chars(idx_s.data(), idx_s.data() + idx_s.size(), idx);
            if (ec != std::errc{} || p != idx_s.data() + idx_s.size() || idx == 0)
                throw parse_error("malformed feature index '" + std::string(idx_s) + "'", ln + 1, col);
            if (idx <= last_index)
                throw parse_error("feature indices must be strictly increasing", ln + 1, col);
            last_index = idx;
            const auto v = detail::to_double(tok.substr(colon + 1));
            if (!v) throw parse_error("malformed feature value in '" + std::string(tok) + "'", ln + 1, col);
            r.feats.emplace_back(idx - 1, *v);
            dim = std::max(dim, idx);
        }
        if (task == task_kind::classification && r.target != 1.0 && r.target != -1.0)
            throw validation_error("line " + std::to_string(ln + 1) + ": classification target must be +1 or -1");
        rows.push_back(std::move(r));
    }

    dataset ds;
    ds.task = task;
    ds.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    ds.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ds.y[static_cast<Eigen::Index>(i)] = rows[i].target;
        for (const auto& [j, v] : rows[i].feats)
            ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    return ds;
}

/// Canonical SVMLight output: zero features omitted, 17 significant digits.
inline std::string write_svmlight(const dataset& ds) {
    std::string out;
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        out += detail::fmt17(ds.y[i]);
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
            if (ds.x(i, j) == 0.0) continue;
            out += ' ';
            out += std::to_string(j + 1);
            out += ':';
            out += detail::fmt17(ds.x(i, j));
        }
        out += '\n';
    }
    return out;
}

/**
 * Dense numeric CSV. The column `target_column` (0-based) becomes the
 * target; the remaining columns, in order, become features.
 */
inline dataset parse_csv(std::string_view text, std::size_t target_column, bool has_header = false,
                         task_kind task = task_kind::classification) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    const auto lines = detail::split_lines(text);
    bool header_skipped = !has_header;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string_view line = detail::trim(lines[ln]);
        if (line.empty()) continue;
        if (!header_skipped) {
            header_skipped = true;
            continue;
        }
        std::vector<double> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            const auto cell = detail::trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
            const auto v = detail::to_double(cell);
            if (!v) throw parse_error("non-numeric cell '" + std::string(cell) + "'", ln + 1, cells.size() + 1);
            cells.push_back(*v);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows.empty()) {
            width = cells.size();
            if (target_column >= width)
                throw parse_error("target column " + std::to_string(target_column) + " out of range", ln + 1);
        } else if (cells.size() != width) {
            throw parse_error("ragged row: expected " + std::to_string(width) + " columns, got " +
                                  std::to_string(cells.size()),
                              ln + 1, std::min(cells.size(), width) + 1);
        }
        rows.push_back(std::move(cells));
    }

    dataset ds;
    ds.task = task;
    const auto n = static_cast<Eigen::Index>(rows.size());
    ds.x.resize(n, rows.empty() ? 0 : static_cast<Eigen::Index>(width - 1));
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j == target_column)
                ds.y[i] = rows[static_cast<std::size_t>(i)][j];
            else
                ds.x(i, c++) = rows[static_cast<std::size_t>(i)][j];
        }
    }
    validate(ds);
    return ds;
}

/// CSV with the target in column `target_column` and the features around it, no header.
inline std::string write_csv(const dataset& ds, std::size_t target_column = 0) {
    if (target_column > ds.d()) throw precondition_error("target column out of range");
    std::string out;
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        Eigen::Index c = 0;
        for (std::size_t j = 0; j <= ds.d(); ++j) {
            if (j) out += ',';
            out += detail::fmt17(j == target_column ? ds.y[i] : ds.x(i, c++));
        }
        out += '\n';
    }
    return out;
}

/// Negate round(fraction * n) distinct, seed-chosen targets.
inline dataset flip_labels(const dataset& ds, double fraction, std::uint64_t seed) {
    if (ds.task != task_kind::classification) throw invalid_task_error("flip_labels requires a classification dataset");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw precondition_error("flip fraction must lie in [0, 1]");
    dataset out = ds;
    rng gen(seed);
    for (std::size_t i : gen.sample(ds.n(), detail::round_half_up(fraction * static_cast<double>(ds.n()))))
        out.y[static_cast<Eigen::Index>(i)] = -out.y[static_cast<Eigen::Index>(i)];
    return out;
}

/**
 * Outlier injection for regression: round(fraction * n) seed-chosen
 * instances get U(input_low, input_high) added to every input coordinate
 * and N(0, output_sigma^2) added to the output. Selected instances are
 * perturbed in ascending index order.
 */
inline dataset inject_regression_noise(const dataset& ds, double fraction = 0.05, double input_low = -2.0,
                                       double input_high = 2.0, double output_sigma = 10.0,
                                       std::uint64_t seed = 0) {
    if (ds.task != task_kind::regression) throw invalid_task_error("regression noise requires a regression dataset");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw precondition_error("noise fraction must lie in [0, 1]");
    dataset out = ds;
    rng gen(seed);
    auto chosen = gen.sample(ds.n(), detail::round_half_up(fraction * static_cast<double>(ds.n())));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t k : chosen) {
        const auto i = static_cast<Eigen::Index>(k);
        for (Eigen::Index j = 0; j < out.x.cols(); ++j) out.x(i, j) += gen.uniform(input_low, input_high);
        out.y[i] += gen.normal(0.0, output_sigma);
    }
    return out;
}

/// Affine maps learned by normalize(); apply() reuses them on held-out data.
struct normalization_params {
    std::vector<double> input_min;
    std::vector<double> input_max;
    bool standardize_output = false;
    double output_mean = 0.0;
    double output_std = 1.0;

    dataset apply(const dataset& ds) const {
        if (ds.d() != input_min.size()) throw validation_error("normalization dimension mismatch");
        dataset out = ds;
        for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
            const double lo = input_min[static_cast<std::size_t>(j)];
            const double hi = input_max[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < out.x.rows(); ++i)
                out.x(i, j) = hi > lo ? 2.0 * (out.x(i, j) - lo) / (hi - lo) - 1.0 : 0.0;
        }
        if (standardize_output) out.y = (out.y.array() - output_mean) / output_std;
        return out;
    }

    friend void to_json(nlohmann::json& j, const normalization_params& p) {
        j = nlohmann::json{{"input_min", p.input_min},
                           {"input_max", p.input_max},
                           {"standardize_output", p.standardize_output},
                           {"output_mean", p.output_mean},
                           {"output_std", p.output_std}};
    }
    friend void from_json(const nlohmann::json& j, normalization_params& p) {
        j.at("input_min").get_to(p.input_min);
        j.at("input_max").get_to(p.input_max);
        j.at("standardize_output").get_to(p.standardize_output);
        j.at("output_mean").get_to(p.output_mean);
        j.at("output_std").get_to(p.output_std);
    }
};

/**
 * Map every input coordinate onto [-1, 1] (constant coordinates to 0) and,
 * for regression, standardize outputs to mean 0 / population variance 1.
 */
inline std::pair<dataset, normalization_params> normalize(const dataset& ds) {
    if (ds.task == task_kind::regression && ds.n() < 2)
        throw precondition_error("output standardization needs at least two instances");
    normalization_params p;
    p.input_min.resize(ds.d());
    p.input_max.resize(ds.d());
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
        p.input_min[static_cast<std::size_t>(j)] = ds.n() ? ds.x.col(j).minCoeff() : 0.0;
        p.input_max[static_cast<std::size_t>(j)] = ds.n() ? ds.x.col(j).maxCoeff() : 0.0;
    }
    if (ds.task == task_kind::regression) {
        p.standardize_output = true;
        p.output_mean = ds.y.mean();
        const double var = (ds.y.array() - p.output_mean).square().mean();
        p.output_std = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return {p.apply(ds), p};
}

struct split_spec {
    std::array<double, 3> fractions{0.4, 0.3, 0.3};
    std::uint64_t seed = 0;
};

/**
 * Fold sizes: floor(f_k * n) each, then the remaining instances go one
 * apiece to the folds with the largest fractional parts (ties to the
 * lower fold).
 */
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& f) {
    for (double v : f)
        if (!(v > 0.0)) throw precondition_error("split fractions must be positive");
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-12) throw precondition_error("split fractions must sum to 1");
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = f[k] * static_cast<double>(n);
        sizes[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[k] = exact - static_cast<double>(sizes[k]);
        used += sizes[k];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t r = 0; used < n; ++r, ++used) ++sizes[order[r % 3]];
    return sizes;
}

/// Seeded permutation sliced into (train, validation, test) index lists.
inline std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const split_spec& spec) {
    const auto sizes = split_sizes(n, spec.fractions);
    rng gen(spec.seed);
    const auto perm = gen.permutation(n);
    std::array<std::vector<std::size_t>, 3> out;
    std::size_t at = 0;
    for (int k = 0; k < 3; ++k) {
        out[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                      perm.begin() + static_cast<std::ptrdiff_t>(at + sizes[k]));
        at += sizes[k];
    }
    return out;
}

struct split_result {
    dataset train, validation, test;
};

inline split_result split(const dataset& ds, const split_spec& spec) {
    const auto idx = split_indices(ds.n(), spec);
    return {subset(ds, idx[0]), subset(ds, idx[1]), subset(ds, idx[2])};
}

} // namespace opath
