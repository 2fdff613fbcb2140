#pragma once

// Slow reference solvers for the test suite. Nothing here includes the
// library's solver headers: matrices are plain row-major std::vectors and
// every linear-algebra step is written out by hand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

constexpr double inf = std::numeric_limits<double>::infinity();

struct matrix {
    std::size_t n = 0;
    std::vector<double> v;

    matrix() = default;
    explicit matrix(std::size_t n_) : n(n_), v(n_ * n_, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return v[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * n + j]; }
};

inline std::vector<double> mul(const matrix& q, const std::vector<double>& x) {
    std::vector<double> out(q.n, 0.0);
    for (std::size_t i = 0; i < q.n; ++i)
        for (std::size_t j = 0; j < q.n; ++j) out[i] += q(i, j) * x[j];
    return out;
}

// ---------------------------------------------------------------------------
// Box-constrained QP by accelerated projected gradient

struct pg_result {
    std::vector<double> x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

/**
 * minimize 1/2 x'Hx + f'x subject to lo <= x <= hi. FISTA with a constant
 * step 1/L (L a row-sum bound on the largest eigenvalue) and gradient-based
 * restarts. Stops once the projected-gradient residual drops below `tol`.
 */
inline pg_result projected_gradient_qp(const matrix& h, const std::vector<double>& f, const std::vector<double>& lo,
                                       const std::vector<double>& hi, std::size_t iters, double tol = 1e-13) {
    const std::size_t n = h.n;
    double lip = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < n; ++j) r += std::abs(h(i, j));
        lip = std::max(lip, r);
    }
    if (lip <= 0.0) lip = 1.0;
    auto clip = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i) x[i] = std::min(hi[i], std::max(lo[i], x[i]));
    };
    auto grad = [&](const std::vector<double>& x) {
        auto g = mul(h, x);
        for (std::size_t i = 0; i < n; ++i) g[i] += f[i];
        return g;
    };
    auto residual = [&](const std::vector<double>& x) {
        const auto g = grad(x);
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::min(hi[i], std::max(lo[i], x[i] - g[i])) - x[i];
            r = std::max(r, std::abs(p));
        }
        return r;
    };
    std::vector<double> x(n, 0.0);
    clip(x);
    std::vector<double> y = x, prev = x;
    double t = 1.0;
    pg_result out;
    for (out.iterations = 0; out.iterations < iters; ++out.iterations) {
        const auto g = grad(y);
        prev = x;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - g[i] / lip;
        clip(x);
        double restart = 0.0;
        for (std::size_t i = 0; i < n; ++i) restart += g[i] * (x[i] - prev[i]);
        if (restart > 0.0) {
            t = 1.0;
            y = x;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + (t - 1.0) / tn * (x[i] - prev[i]);
        t = tn;
        if (out.iterations % 64 == 0 && residual(x) < tol) break;
    }
    out.x = x;
    const auto hx = mul(h, x);
    for (std::size_t i = 0; i < n; ++i) out.objective += 0.5 * x[i] * hx[i] + f[i] * x[i];
    out.kkt_residual = residual(x);
    return out;
}

// ---------------------------------------------------------------------------
// Conditional problems written from the KKT conditions directly

enum class task { svc, svr };
enum class side { in, out, out_low };

/**
 * Dual of one instance's loss on its polytope: the coefficient ranges over
 * [knots.front(), knots.back()] and the (concave) linear reward has slope
 * slopes[p] between knots[p] and knots[p+1].
 */
struct piece {
    std::vector<double> knots;
    std::vector<double> slopes;
};

inline piece make_piece(task tk, side sd, double y, double theta, double s, double c) {
    const double ct = c * theta;
    if (tk == task::svc) {
        if (sd == side::in) return {{0.0, c, inf}, {1.0, s}};
        return {{-inf, ct}, {s}};
    }
    if (sd == side::in) return {{-inf, -c, c, inf}, {y + s, y, y - s}};
    if (sd == side::out) return {{-inf, ct}, {y - s}};
    return {{-ct, inf}, {y + s}};
}

inline piece make_box(task tk, double y, double c) {
    if (tk == task::svc) return {{0.0, c}, {1.0}};
    return {{-c, c}, {y}};
}

inline double reward(const piece& p, double a) {
    // g(a) accumulated from the first finite knot; constant offsets cancel in comparisons
    double anchor = 0.0;
    std::size_t k0 = 0;
    while (k0 < p.knots.size() && !std::isfinite(p.knots[k0])) ++k0;
    if (k0 < p.knots.size()) anchor = p.knots[k0];
    double g = 0.0;
    if (a >= anchor) {
        double x = anchor;
        for (std::size_t q = k0; q < p.slopes.size() && x < a; ++q) {
            const double end = std::min(a, p.knots[q + 1]);
            g += p.slopes[q] * (end - x);
            x = end;
        }
    } else {
        double x = anchor;
        for (std::size_t q = k0; q-- > 0 && x > a;) {
            const double end = std::max(a, p.knots[q]);
            g -= p.slopes[q] * (x - end);
            x = end;
        }
    }
    return g;
}

struct cd_result {
    std::vector<double> alpha;
    bool feasible = true;
    bool converged = false;
};

/// Exact coordinate minimization of 1/2 a'Qa - sum g_i(a_i).
inline cd_result coordinate_descent(const matrix& q, const std::vector<piece>& pieces, std::size_t sweeps,
                                    std::vector<double> start = {}) {
    const std::size_t n = q.n;
    cd_result out;
    out.alpha = start.empty() ? std::vector<double>(n, 0.0) : start;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& k = pieces[i].knots;
        out.alpha[i] = std::min(k.back(), std::max(k.front(), out.alpha[i]));
    }
    auto v = mul(q, out.alpha);
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double qii = q(i, i);
            const double rest = v[i] - qii * out.alpha[i];
            const auto& pc = pieces[i];
            double best = out.alpha[i];
            double best_val = inf;
            auto value = [&](double a) { return 0.5 * qii * a * a + rest * a - reward(pc, a); };
            for (std::size_t p = 0; p < pc.slopes.size(); ++p) {
                double a = (pc.slopes[p] - rest) / qii;
                a = std::min(pc.knots[p + 1], std::max(pc.knots[p], a));
                const double val = value(a);
                if (val < best_val) {
                    best_val = val;
                    best = a;
                }
            }
            if (pc.slopes.empty()) best = pc.knots.front();
            const double d = best - out.alpha[i];
            if (d != 0.0) {
                for (std::size_t j = 0; j < n; ++j) v[j] += q(j, i) * d;
                out.alpha[i] = best;
                change = std::max(change, std::abs(d));
            }
            if (!std::isfinite(best) || std::abs(best) > 1e9) {
                out.feasible = false;
                return out;
            }
        }
        if (change < 1e-15) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// Gaussian elimination with partial pivoting; returns false if singular.
inline bool gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
    const std::size_t m = b.size();
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (std::abs(a[piv][c]) < 1e-14) return false;
        std::swap(a[piv], a[c]);
        std::swap(b[piv], b[c]);
        for (std::size_t r = c + 1; r < m; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < m; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    x.assign(m, 0.0);
    for (std::size_t c = m; c-- > 0;) {
        double acc = b[c];
        for (std::size_t k = c + 1; k < m; ++k) acc -= a[c][k] * x[k];
        x[c] = acc / a[c][c];
    }
    return true;
}

/// Largest violation of the superdifferential condition v_i in dg_i(a_i).
inline double optimality_gap(const matrix& q, const std::vector<piece>& pieces, const std::vector<double>& alpha,
                             double snap = 1e-9) {
    const auto v = mul(q, alpha);
    double worst = 0.0;
    for (std::size_t i = 0; i < q.n; ++i) {
        const auto& pc = pieces[i];
        const double a = alpha[i];
        if (a < pc.knots.front() - snap || a > pc.knots.back() + snap) return inf;
        double best = inf;
        for (std::size_t k = 0; k < pc.knots.size(); ++k) {
            if (!std::isfinite(pc.knots[k]) || std::abs(a - pc.knots[k]) > snap * std::max(1.0, std::abs(a)))
                continue;
            const double upper = k > 0 ? pc.slopes[k - 1] : inf;
            const double lower = k < pc.slopes.size() ? pc.slopes[k] : -inf;
            best = std::min(best, std::max({0.0, lower - v[i], v[i] - upper}));
        }
        for (std::size_t p = 0; p < pc.slopes.size(); ++p)
            if (a >= pc.knots[p] && a <= pc.knots[p + 1]) best = std::min(best, std::abs(v[i] - pc.slopes[p]));
        worst = std::max(worst, best);
    }
    return worst;
}

/// Re-solves the equality system suggested by `rough` to full precision.
inline std::vector<double> polish(const matrix& q, const std::vector<piece>& pieces, const std::vector<double>& rough,
                                  double snap) {
    const std::size_t n = q.n;
    std::vector<int> piece_of(n, -1);
    std::vector<double> fixed(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pc = pieces[i];
        bool at_knot = false;
        for (double k : pc.knots)
            if (std::isfinite(k) && std::abs(rough[i] - k) <= snap) {
                fixed[i] = k;
                at_knot = true;
            }
        if (at_knot) continue;
        for (std::size_t p = 0; p < pc.slopes.size(); ++p)
            if (rough[i] > pc.knots[p] && rough[i] < pc.knots[p + 1]) piece_of[i] = static_cast<int>(p);
    }
    std::vector<std::size_t> fr;
    for (std::size_t i = 0; i < n; ++i)
        if (piece_of[i] >= 0) fr.push_back(i);
    std::vector<std::vector<double>> a(fr.size(), std::vector<double>(fr.size()));
    std::vector<double> b(fr.size());
    for (std::size_t r = 0; r < fr.size(); ++r) {
        const std::size_t i = fr[r];
        b[r] = pieces[i].slopes[static_cast<std::size_t>(piece_of[i])];
        for (std::size_t j = 0; j < n; ++j)
            if (piece_of[j] < 0) b[r] -= q(i, j) * fixed[j];
        for (std::size_t c = 0; c < fr.size(); ++c) a[r][c] = q(i, fr[c]);
    }
    std::vector<double> x;
    if (!gauss_solve(a, b, x)) return rough;
    std::vector<double> out = fixed;
    for (std::size_t r = 0; r < fr.size(); ++r) out[fr[r]] = x[r];
    return out;
}

inline double piecewise_objective(const matrix& q, const std::vector<piece>& pieces, const std::vector<double>& alpha) {
    const auto v = mul(q, alpha);
    double out = 0.0;
    for (std::size_t i = 0; i < q.n; ++i) out += 0.5 * alpha[i] * v[i] - reward(pieces[i], alpha[i]);
    return out;
}

/// Minimizer of 1/2 a'Qa - sum g_i(a_i); coordinate descent then an exact polish.
/// CD runs in chunks and stops early once a polished point passes the optimality test.
inline cd_result solve_pieces(const matrix& q, const std::vector<piece>& pieces, double accept = 1e-11) {
    cd_result cd;
    for (std::size_t done = 0; done < 200000; done += 250) {
        cd = coordinate_descent(q, pieces, 250, cd.alpha);
        if (!cd.feasible) return cd;
        double gap = optimality_gap(q, pieces, cd.alpha);
        bool polished = false;
        for (double snap : {1e-7, 1e-9, 1e-5}) {
            auto p = polish(q, pieces, cd.alpha, snap);
            const double pg = optimality_gap(q, pieces, p);
            if (pg <= gap) {
                cd.alpha = p;
                gap = pg;
                polished = true;
                break;
            }
        }
        if (!polished) {
            // the polished point may overshoot its pieces: backtrack along the segment
            const auto target = polish(q, pieces, cd.alpha, 1e-9);
            const double base = piecewise_objective(q, pieces, cd.alpha);
            for (double lam = 1.0; lam > 1e-6; lam *= 0.5) {
                std::vector<double> trial(cd.alpha.size());
                for (std::size_t i = 0; i < trial.size(); ++i) {
                    const auto& k = pieces[i].knots;
                    trial[i] = std::min(k.back(), std::max(k.front(), cd.alpha[i] + lam * (target[i] - cd.alpha[i])));
                }
                if (piecewise_objective(q, pieces, trial) < base) {
                    cd.alpha = trial;
                    gap = optimality_gap(q, pieces, trial);
                    break;
                }
            }
        }
        double scale = 1.0;
        for (double a : cd.alpha) scale = std::max(scale, std::abs(a));
        if (cd.converged || gap <= accept * scale) {
            cd.converged = true;
            break;
        }
    }
    return cd;
}

// ---------------------------------------------------------------------------
// Losses and objective, evaluated pointwise

inline double loss(task tk, double z, double theta, double s) {
    if (tk == task::svc) return z >= s ? std::max(0.0, 1.0 - z) : 1.0 - theta * z - s;
    const double a = std::abs(z);
    return a < s ? a : theta * (a - s) + s;
}

/// Margins y_i f(x_i) (classification, q label-signed) or residuals y_i - f(x_i).
inline std::vector<double> margins(task tk, const matrix& q, const std::vector<double>& y,
                                   const std::vector<double>& alpha) {
    auto f = mul(q, alpha);
    if (tk == task::svr)
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = y[i] - f[i];
    return f;
}

inline double objective(task tk, const matrix& q, const std::vector<double>& y, const std::vector<double>& alpha,
                        double theta, double s, double c) {
    const auto qa = mul(q, alpha);
    double j = 0.0;
    for (std::size_t i = 0; i < q.n; ++i) j += 0.5 * alpha[i] * qa[i];
    const auto z = margins(tk, q, y, alpha);
    for (double zi : z) j += c * loss(tk, zi, theta, s);
    return j;
}

// ---------------------------------------------------------------------------
// Exhaustive partition enumeration

struct partition_record {
    std::vector<side> sides;
    bool feasible = false;
    double objective = inf;
    std::vector<double> alpha;
    bool locally_optimal = false;
};

struct enumeration_result {
    std::vector<partition_record> records;
    std::size_t best = 0;
    std::vector<std::size_t> local_optima;
};

/**
 * Solves every partition's convex problem. Classification enumerates 2^n
 * inlier/outlier assignments; regression 3^n (inlier, upper and lower
 * outlier), since the two outlier half-lines form separate polytopes.
 * A record is locally optimal when its solution is conditionally optimal,
 * theta < 1 and no margin sits within `tol` of s.
 */
inline enumeration_result enumerate_partitions(task tk, const matrix& q, const std::vector<double>& y, double theta,
                                               double s, double c, std::size_t n_cap = 12, double tol = 1e-7) {
    const std::size_t n = q.n;
    if (n > n_cap) return {};
    const std::size_t base = tk == task::svc ? 2 : 3;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= base;
    enumeration_result out;
    out.records.reserve(total);
    double best = inf;
    for (std::size_t code = 0; code < total; ++code) {
        partition_record rec;
        rec.sides.resize(n);
        std::size_t rem = code;
        for (std::size_t i = 0; i < n; ++i) {
            rec.sides[i] = static_cast<side>(rem % base);
            rem /= base;
        }
        std::vector<piece> pcs;
        for (std::size_t i = 0; i < n; ++i) pcs.push_back(make_piece(tk, rec.sides[i], y[i], theta, s, c));
        auto sol = solve_pieces(q, pcs);
        rec.feasible = sol.feasible;
        if (sol.feasible) {
            rec.alpha = sol.alpha;
            rec.objective = objective(tk, q, y, rec.alpha, theta, s, c);
            const auto z = margins(tk, q, y, rec.alpha);
            bool clear = theta < 1.0;
            for (double zi : z) {
                const double gap = tk == task::svc ? std::abs(zi - s) : std::abs(std::abs(zi) - s);
                if (gap <= tol) clear = false;
            }
            rec.locally_optimal = clear && optimality_gap(q, pcs, rec.alpha) <= 1e-8;
            if (rec.objective < best) {
                best = rec.objective;
                out.best = out.records.size();
            }
            if (rec.locally_optimal) out.local_optima.push_back(out.records.size());
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Split-variable form of a piecewise problem as a box QP for projected_gradient_qp

struct split_qp {
    matrix h;
    std::vector<double> f, lo, hi;
    std::vector<std::size_t> owner; // coordinate each split variable belongs to
    std::vector<double> sign;       // +1: fills upwards from the anchor, -1: downwards
    std::vector<double> anchor;     // per coordinate
};

/**
 * Each coefficient becomes anchor_i + sum of nonnegative fills, one per
 * piece, with infinite pieces truncated at `big`. Concavity makes the
 * fills enter in order, so the box QP is equivalent to the original.
 */
inline split_qp make_split_qp(const matrix& q, const std::vector<piece>& pieces, double big) {
    split_qp out;
    const std::size_t n = q.n;
    out.anchor.resize(n);
    std::vector<double> lin;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pc = pieces[i];
        std::size_t k0 = 0;
        while (!std::isfinite(pc.knots[k0])) ++k0;
        out.anchor[i] = pc.knots[k0];
        for (std::size_t p = 0; p < pc.slopes.size(); ++p) {
            const bool up = p >= k0;
            const double width = pc.knots[p + 1] - pc.knots[p];
            out.owner.push_back(i);
            out.sign.push_back(up ? 1.0 : -1.0);
            out.lo.push_back(0.0);
            out.hi.push_back(std::isfinite(width) ? width : big);
            lin.push_back(up ? -pc.slopes[p] : pc.slopes[p]);
        }
    }
    const std::size_t m = out.owner.size();
    out.h = matrix(m);
    std::vector<double> qa(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) qa[i] += q(i, j) * out.anchor[j];
    out.f.resize(m);
    for (std::size_t a = 0; a < m; ++a) {
        out.f[a] = lin[a] + out.sign[a] * qa[out.owner[a]];
        for (std::size_t b = 0; b < m; ++b) out.h(a, b) = out.sign[a] * out.sign[b] * q(out.owner[a], out.owner[b]);
    }
    return out;
}

inline std::vector<double> unsplit(const split_qp& sq, const std::vector<double>& x) {
    std::vector<double> alpha = sq.anchor;
    for (std::size_t a = 0; a < x.size(); ++a) alpha[sq.owner[a]] += sq.sign[a] * x[a];
    return alpha;
}

} // namespace oracle
