#pragma once

#include "sl2dyn/transfer.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// stable rescaled products: log of vector and operator norms of g_n ... g_1
// ---------------------------------------------------------------------------

struct RescaledProduct {
    GroupElement m = GroupElement::identity();  // Frobenius-normalized, det tracked implicitly
    double log_scale = 0.0;

    void push_left(const GroupElement& g) {
        // raw product, no det renormalization (the scale factor carries the size)
        GroupElement p;
        p.a = g.a * m.a + g.b * m.c;
        p.b = g.a * m.b + g.b * m.d;
        p.c = g.c * m.a + g.d * m.c;
        p.d = g.c * m.b + g.d * m.d;
        const double fro = std::sqrt(std::norm(p.a) + std::norm(p.b) + std::norm(p.c) +
                                     std::norm(p.d));
        p.a /= fro;
        p.b /= fro;
        p.c /= fro;
        p.d /= fro;
        m = p;
        log_scale += std::log(fro);
    }

    // log of the largest singular value of the accumulated product
    double log_operator_norm() const {
        const double detsq = std::norm(m.a * m.d - m.b * m.c);
        const double s1sq = 0.5 * (1.0 + std::sqrt(std::max(1.0 - 4.0 * detsq, 0.0)));
        return log_scale + 0.5 * std::log(s1sq);
    }
};

// log ||g v|| accumulated along a trajectory of unit-renormalized vectors
struct RescaledVector {
    cplx v0, v1;
    double log_norm = 0.0;

    explicit RescaledVector(const ProjPoint& p) : v0(p.z0), v1(p.z1) {}

    void push(const GroupElement& g) {
        const cplx w0 = g.a * v0 + g.b * v1;
        const cplx w1 = g.c * v0 + g.d * v1;
        const double n = std::sqrt(std::norm(w0) + std::norm(w1));
        v0 = w0 / n;
        v1 = w1 / n;
        log_norm += std::log(n);
    }

    ProjPoint point() const { return ProjPoint(v0, v1); }
};

// ---------------------------------------------------------------------------
// Lyapunov exponent estimators
// ---------------------------------------------------------------------------

struct LyapunovReport {
    enum class Route { Kingman, FurstenbergFormula };
    Route route = Route::Kingman;
    double gamma_hat = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    std::size_t trials = 0;
};

inline LyapunovReport lyapunov_kingman(const MatrixMeasure& mu, std::size_t n, std::size_t trials,
                                       std::uint64_t master_seed, int threads = 1) {
    if (n < 1 || trials < 2) throw config_error("lyapunov_kingman: n >= 1 and trials >= 2");
    std::vector<double> vals(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream rng = RngStream::derive(master_seed, "kingman", t);
        RescaledProduct prod;
        for (std::size_t k = 0; k < n; ++k) prod.push_left(mu.draw(rng));
        vals[t] = prod.log_operator_norm() / double(n);
    });
    const MeanErr me = mean_stderr(vals);
    LyapunovReport rep;
    rep.route = LyapunovReport::Route::Kingman;
    rep.gamma_hat = me.mean;
    rep.stderr_ = me.stderr_;
    rep.n = n;
    rep.trials = trials;
    return rep;
}

inline LyapunovReport lyapunov_furstenberg(const MatrixMeasure& mu, const EmpiricalMeasure& nu_emp,
                                           std::size_t trials = 0,
                                           RngStream rng = RngStream{2}) {
    LyapunovReport rep;
    rep.route = LyapunovReport::Route::FurstenbergFormula;
    if (mu.is_atomic()) {
        std::vector<double> vals(nu_emp.points.size());
        for (std::size_t i = 0; i < nu_emp.points.size(); ++i) {
            double s = 0.0;
            for (std::size_t ai = 0; ai < mu.atoms.size(); ++ai)
                s += mu.weights[ai] * theta(mu.atoms[ai], nu_emp.points[i]);
            vals[i] = s;
        }
        // empirical points carry equal weights in practice; use weighted mean +
        // unweighted spread as the error scale
        double mean = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) mean += nu_emp.weights[i] * vals[i];
        rep.gamma_hat = mean;
        rep.stderr_ = std::sqrt(sample_variance(vals) / double(vals.size()));
        rep.trials = vals.size();
        return rep;
    }
    if (trials < 2) throw config_error("lyapunov_furstenberg: sampler variant needs trials");
    std::vector<double> vals(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const GroupElement g = mu.draw(rng);
        const std::size_t pick = rng.uniform_index(nu_emp.points.size());
        vals[t] = theta(g, nu_emp.points[pick]);
    }
    const MeanErr me = mean_stderr(vals);
    rep.gamma_hat = me.mean;
    rep.stderr_ = me.stderr_;
    rep.trials = trials;
    return rep;
}

// ---------------------------------------------------------------------------
// Furstenberg boundary map Z(g) = lim g_1 ... g_n x0 with stability doubling
// ---------------------------------------------------------------------------

struct SkewSample {
    std::vector<GroupElement> prefix;  // g_1 .. g_T
    ProjPoint z_point;
    bool stable = false;  // extension from T to 2T moved < 1e-6
};

inline const ProjPoint& boundary_base_point() {
    static const ProjPoint x0 = ProjPoint(cplx(1.0), cplx(1.0));
    return x0;
}

// right-multiplied running product g_1 ... g_j with Frobenius rescaling; only
// the projective action is consumed, so the scale factor is dropped
struct ScaledRightProduct {
    GroupElement m = GroupElement::identity();

    void push_right(const GroupElement& g) {
        GroupElement p;
        p.a = m.a * g.a + m.b * g.c;
        p.b = m.a * g.b + m.b * g.d;
        p.c = m.c * g.a + m.d * g.c;
        p.d = m.c * g.b + m.d * g.d;
        const double fro =
            std::sqrt(std::norm(p.a) + std::norm(p.b) + std::norm(p.c) + std::norm(p.d));
        p.a /= fro;
        p.b /= fro;
        p.c /= fro;
        p.d /= fro;
        m = p;
    }
};

inline SkewSample boundary_map(const MatrixMeasure& mu, std::size_t T, RngStream& rng,
                               std::size_t max_doublings = 4) {
    if (T < 1) throw config_error("boundary_map: T >= 1 required");
    SkewSample out;
    out.prefix.reserve(T);
    ScaledRightProduct prod;
    for (std::size_t j = 0; j < T; ++j) {
        const GroupElement g = mu.draw(rng);
        out.prefix.push_back(g);
        prod.push_right(g);
    }
    ProjPoint z = apply(prod.m, boundary_base_point());
    std::size_t len = T;
    double move = 1.0;
    for (std::size_t d = 0; d < max_doublings; ++d) {
        for (std::size_t j = 0; j < len; ++j) prod.push_right(mu.draw(rng));
        const ProjPoint z2 = apply(prod.m, boundary_base_point());
        move = spherical_distance(z, z2);
        if (d == 0) out.stable = move < 1e-6;
        z = z2;
        len *= 2;
        if (move < 1e-6) break;
    }
    if (move > 1e-4)
        throw unstable_error("boundary_map: sequence not contracted after doubling");
    out.z_point = z;
    return out;
}

// bulk harvest of the stationary measure (and first letters, for the skew
// observables); slim path that skips prefix storage
struct NuHarvest {
    EmpiricalMeasure nu;
    std::vector<GroupElement> first_letters;
    std::size_t unstable_count = 0;
};

inline NuHarvest nu_harvest(const MatrixMeasure& mu, std::size_t T, std::size_t count,
                            std::uint64_t master_seed, int threads = 1,
                            bool keep_first = false) {
    NuHarvest out;
    out.nu.points.resize(count);
    if (keep_first) out.first_letters.resize(count);
    std::vector<char> unstable(count, 0);
    parallel_for(count, threads, [&](std::size_t i) {
        RngStream rng = RngStream::derive(master_seed, "boundary", i);
        const GroupElement first = mu.draw(rng);
        if (keep_first) out.first_letters[i] = first;
        ScaledRightProduct prod;
        prod.push_right(first);
        for (std::size_t j = 1; j < T; ++j) prod.push_right(mu.draw(rng));
        ProjPoint z = apply(prod.m, boundary_base_point());
        // double the prefix until the limit point settles (records the first try)
        std::size_t len = T;
        for (std::size_t d = 0; d < 4; ++d) {
            for (std::size_t j = 0; j < len; ++j) prod.push_right(mu.draw(rng));
            const ProjPoint z2 = apply(prod.m, boundary_base_point());
            const double move = spherical_distance(z, z2);
            if (d == 0 && move > 1e-6) unstable[i] = 1;
            z = z2;
            len *= 2;
            if (move < 1e-6) break;
        }
        out.nu.points[i] = z;
    });
    out.nu.weights.assign(count, 1.0 / double(count));
    for (char u : unstable) out.unstable_count += std::size_t(u);
    return out;
}

// ---------------------------------------------------------------------------
// psi = Lambda phi~ : psi(x) = gamma - sum_i w_i theta(g_i, x)
// ---------------------------------------------------------------------------

inline GridFunction psi_function(const MatrixMeasure& mu, double gamma,
                                 std::shared_ptr<const SphereGrid> grid) {
    if (!mu.is_atomic()) throw config_error("psi_function: atomic measure required");
    return GridFunction::sample(std::move(grid), [&](const ProjPoint& p) {
        double s = 0.0;
        for (std::size_t ai = 0; ai < mu.atoms.size(); ++ai)
            s += mu.weights[ai] * theta(mu.atoms[ai], p);
        return gamma - s;
    });
}

// ---------------------------------------------------------------------------
// Gordin tail ||(f*)^{n-1} psi||_{L2(nu_emp)}, n = 1..K, and its decay fit
// ---------------------------------------------------------------------------

struct GordinTailReport {
    std::vector<double> values;
    double fitted_ratio = 0.0;
    double r_squared = 0.0;
    std::size_t fit_count = 0;
};

inline GordinTailReport gordin_tail(const MatrixMeasure& mu, double gamma, std::size_t K,
                                    const EmpiricalMeasure& nu_emp,
                                    std::shared_ptr<const SphereGrid> grid, int threads = 1) {
    if (K < 2) throw config_error("gordin_tail: K >= 2 required");
    GordinTailReport rep;
    GridFunction cur = psi_function(mu, gamma, grid);
    for (std::size_t n = 1; n <= K; ++n) {
        rep.values.push_back(empirical_l2(nu_emp, cur));
        if (n < K) cur = pullback_function(mu, cur, threads);
    }
    // fit above the interpolation noise floor (median of the last three terms)
    std::vector<double> tail_end(rep.values.end() - std::min<std::size_t>(3, rep.values.size()),
                                 rep.values.end());
    std::sort(tail_end.begin(), tail_end.end());
    const double floor_val = tail_end[tail_end.size() / 2];
    std::vector<double> xs, ys;
    for (std::size_t n = 0; n < rep.values.size(); ++n) {
        if (rep.values[n] <= 5.0 * floor_val && n + 1 > 1) break;
        if (rep.values[n] <= 0.0) break;
        xs.push_back(double(n + 1));
        ys.push_back(std::log(rep.values[n]));
    }
    if (xs.size() < 3 && rep.values.size() >= 3) {
        xs.clear();
        ys.clear();
        for (std::size_t n = 0; n < 3; ++n) {
            xs.push_back(double(n + 1));
            ys.push_back(std::log(std::max(rep.values[n], 1e-300)));
        }
    }
    const LineFit fit = fit_line(xs, ys);
    rep.fitted_ratio = std::exp(fit.slope);
    rep.r_squared = fit.r_squared;
    rep.fit_count = xs.size();
    return rep;
}

// ---------------------------------------------------------------------------
// Green-Kubo variance via the skew-product correlation sum
// sigma^2 = <m, phi~^2> + 2 sum_{n>=1} <m, phi~ . (f*)^{n-1} psi>
// ---------------------------------------------------------------------------

struct GreenKuboReport {
    double sigma2 = 0.0;
    double phi2_mean = 0.0;
    double phi_mean = 0.0;  // should be ~0 (centering diagnostic)
    std::vector<double> terms;
    std::vector<double> partial_sums;
};

inline GreenKuboReport green_kubo_variance(const MatrixMeasure& mu, double gamma, std::size_t K,
                                           std::size_t mc_samples, std::size_t T,
                                           std::uint64_t master_seed,
                                           std::shared_ptr<const SphereGrid> grid,
                                           int threads = 1) {
    if (!mu.is_atomic()) throw config_error("green_kubo_variance: atomic measure required");
    const NuHarvest h = nu_harvest(mu, T, mc_samples, master_seed, threads, /*keep_first=*/true);
    std::vector<double> phi_tilde(mc_samples);
    for (std::size_t i = 0; i < mc_samples; ++i)
        phi_tilde[i] = theta(h.first_letters[i].inverse(), h.nu.points[i]) + gamma;

    GreenKuboReport rep;
    {
        double s = 0.0, s2 = 0.0;
        for (double v : phi_tilde) {
            s += v;
            s2 += v * v;
        }
        rep.phi_mean = s / double(mc_samples);
        rep.phi2_mean = s2 / double(mc_samples);
    }
    GridFunction cur = psi_function(mu, gamma, grid);
    double sum = rep.phi2_mean;
    for (std::size_t n = 1; n <= K; ++n) {
        double term = 0.0;
        for (std::size_t i = 0; i < mc_samples; ++i)
            term += phi_tilde[i] * read_function_at(cur, h.nu.points[i]);
        term /= double(mc_samples);
        rep.terms.push_back(term);
        sum += 2.0 * term;
        rep.partial_sums.push_back(sum);
        if (n < K) cur = pullback_function(mu, cur, threads);
    }
    rep.sigma2 = sum;
    if (rep.partial_sums.size() >= 4) {
        const double a = rep.partial_sums[rep.partial_sums.size() - 4];
        const double b = rep.partial_sums.back();
        if (std::abs(b - a) > 1e-3 * std::max(1.0, std::abs(b)))
            throw not_converged_error("green_kubo_variance: partial sums not stabilized by K");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CLT experiment for the norm cocycle
// ---------------------------------------------------------------------------

struct CltReport {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::vector<double> samples;  // Y_n values
    double ks_statistic = 0.0;    // against the mean/variance-fitted Gaussian
    double sigma2_empirical = 0.0;
    double sigma2_green_kubo = std::numeric_limits<double>::quiet_NaN();
};

inline CltReport clt_experiment(const MatrixMeasure& mu, const ProjPoint& v, double gamma,
                                std::size_t n, std::size_t trials, std::uint64_t master_seed,
                                int threads = 1) {
    try {
        (void)moment(mu, MomentSpec::power(2.0), mu.is_atomic() ? 0 : 1000,
                     RngStream::derive(master_seed, "clt-moment"));
    } catch (const non_finite_error&) {
        throw moment_violation_error("clt_experiment: second moment diverges");
    }
    CltReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.samples.resize(trials);
    const double sq_n = std::sqrt(double(n));
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream rng = RngStream::derive(master_seed, "clt", t);
        RescaledVector traj(v);
        for (std::size_t k = 0; k < n; ++k) traj.push(mu.draw(rng));
        rep.samples[t] = (traj.log_norm - double(n) * gamma) / sq_n;
    });
    double mean = 0.0;
    for (double x : rep.samples) mean += x;
    mean /= double(trials);
    rep.sigma2_empirical = sample_variance(rep.samples);
    rep.ks_statistic = ks_statistic_gaussian(rep.samples, mean, rep.sigma2_empirical);
    return rep;
}

// Z_n samples for the inverse-word Birkhoff sums. Literal backward iteration
// of g_j^{-1} on a computed boundary point is exponentially unstable (rounding
// leaves the unstable manifold after ~ 37/(2 gamma) steps), so the samples use
// the cocycle identity g_n^{-1}...g_1^{-1} W(g) ~ W(T^n g):
//   Z_n = (-log ||g_1...g_n w|| / ||w|| + n gamma)/sqrt(n),
// with w the boundary point of the shifted letter sequence, all forward-stable.
inline std::vector<double> inverse_word_samples(const MatrixMeasure& mu, double gamma,
                                                std::size_t n, std::size_t trials,
                                                std::size_t boundary_T,
                                                std::uint64_t master_seed, int threads = 1) {
    std::vector<double> zs(trials);
    const double sq_n = std::sqrt(double(n));
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream rng = RngStream::derive(master_seed, "invword", t);
        std::vector<GroupElement> gs(n);
        for (auto& g : gs) g = mu.draw(rng);
        ScaledRightProduct shifted;
        shifted.push_right(mu.draw(rng));
        for (std::size_t j = 1; j < boundary_T; ++j) shifted.push_right(mu.draw(rng));
        const ProjPoint w = apply(shifted.m, boundary_base_point());  // ~ Z(T^n g)
        RescaledVector traj(w);
        for (std::size_t k = n; k-- > 0;) traj.push(gs[k]);  // g_1 ... g_n applied to w
        zs[t] = (-traj.log_norm + double(n) * gamma) / sq_n;
    });
    return zs;
}

// ---------------------------------------------------------------------------
// norm-comparison fractions (Prop on ||g_n...g_1 v|| vs ||g_n...g_1||)
// ---------------------------------------------------------------------------

struct NormComparisonRow {
    double delta;
    double fraction;  // trajectories with delta <= ratio <= 1 for all k <= n
};

inline std::vector<NormComparisonRow> norm_comparison_check(
    const MatrixMeasure& mu, const ProjPoint& v, std::size_t n, std::size_t trials,
    const std::vector<double>& delta_grid, std::uint64_t master_seed, int threads = 1) {
    std::vector<double> min_ratio(trials, 1.0);
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream rng = RngStream::derive(master_seed, "normcheck", t);
        RescaledVector traj(v);
        RescaledProduct prod;
        double mr = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const GroupElement g = mu.draw(rng);
            traj.push(g);
            prod.push_left(g);
            mr = std::min(mr, std::exp(traj.log_norm - prod.log_operator_norm()));
        }
        min_ratio[t] = mr;
    });
    std::vector<NormComparisonRow> table;
    for (double d : delta_grid) {
        std::size_t c = 0;
        for (double r : min_ratio) c += std::size_t(r >= d);
        table.push_back({d, double(c) / double(trials)});
    }
    return table;
}

}  // namespace sl2dyn
