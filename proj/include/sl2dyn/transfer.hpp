#pragma once

#include "sl2dyn/calculus.hpp"
#include "sl2dyn/measure.hpp"
#include "sl2dyn/parallel.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// pullbacks along an atomic measure, with partition-blended chart reads
// ---------------------------------------------------------------------------

inline GridFunction pullback_function(const MatrixMeasure& mu, const GridFunction& f,
                                      int threads = 1) {
    if (!mu.is_atomic()) throw config_error("pullback_function: atomic measure required");
    const SphereGrid& g = *f.grid;
    GridFunction out(f.grid);
    for (int chart = 0; chart < 2; ++chart) {
        auto& ov = out.values[chart];
        parallel_for(std::size_t(g.nodes()), threads, [&](std::size_t id) {
            const cplx u = g.node_coord(int(id));
            double acc = 0.0;
            for (std::size_t ai = 0; ai < mu.atoms.size(); ++ai) {
                const GroupElement& e = mu.atoms[ai];
                cplx num, den;
                if (chart == 0) {
                    num = e.a * u + e.b;
                    den = e.c * u + e.d;
                } else {
                    num = e.a + e.b * u;
                    den = e.c + e.d * u;
                }
                acc += mu.weights[ai] * read_function(f, num, den);
            }
            ov[id] = acc;
        });
    }
    return out;
}

inline OneForm pullback_form(const MatrixMeasure& mu, const OneForm& phi, int threads = 1) {
    if (!mu.is_atomic()) throw config_error("pullback_form: atomic measure required");
    const SphereGrid& g = *phi.grid;
    OneForm out(phi.grid);
    for (int chart = 0; chart < 2; ++chart) {
        auto& ov = out.values[chart];
        parallel_for(std::size_t(g.nodes()), threads, [&](std::size_t id) {
            const cplx u = g.node_coord(int(id));
            cplx acc = 0.0;
            for (std::size_t ai = 0; ai < mu.atoms.size(); ++ai) {
                const GroupElement& e = mu.atoms[ai];
                cplx num, den;
                if (chart == 0) {
                    num = e.a * u + e.b;
                    den = e.c * u + e.d;
                } else {
                    num = e.a + e.b * u;
                    den = e.c + e.d * u;
                }
                const double an = std::abs(num), ad = std::abs(den);
                double c0;
                if (ad == 0.0)
                    c0 = 0.0;
                else if (an == 0.0)
                    c0 = 1.0;
                else
                    c0 = SphereGrid::chi_of_radius(an / ad);
                const double c1 = 1.0 - c0;
                cplx val = 0.0;
                if (c0 > 0.0) {
                    // coefficient read in the z'-chart, times d(z')/d(source coord)
                    const cplx deriv = (chart == 0 ? cplx(1.0) : cplx(-1.0)) / (den * den);
                    val += c0 * deriv * detail::read_chart(g, phi.values[0], num / den);
                }
                if (c1 > 0.0) {
                    const cplx deriv = (chart == 0 ? cplx(-1.0) : cplx(1.0)) / (num * num);
                    val += c1 * deriv * detail::read_chart(g, phi.values[1], den / num);
                }
                acc += mu.weights[ai] * val;
            }
            ov[id] = acc;
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// pushforward of an empirical measure: (f_mu)_* m = mu * m
// ---------------------------------------------------------------------------

inline constexpr std::size_t pushforward_default_cap = 2000000;
inline constexpr std::size_t pushforward_resample_to = 100000;

// systematic resampling with a single uniform offset
inline EmpiricalMeasure systematic_resample(const EmpiricalMeasure& m, std::size_t target,
                                            RngStream& rng) {
    EmpiricalMeasure out;
    out.points.reserve(target);
    const double step = 1.0 / double(target);
    double u = rng.uniform() * step;
    double acc = 0.0;
    std::size_t i = 0;
    for (std::size_t k = 0; k < target; ++k) {
        const double pos = u + double(k) * step;
        while (i + 1 < m.points.size() && acc + m.weights[i] < pos) acc += m.weights[i++];
        out.points.push_back(m.points[i]);
    }
    out.weights.assign(target, step);
    return out;
}

inline EmpiricalMeasure pushforward_exact(const MatrixMeasure& mu, const EmpiricalMeasure& m,
                                          RngStream* resample_rng = nullptr,
                                          std::size_t cap = pushforward_default_cap,
                                          std::size_t resample_to = pushforward_resample_to) {
    if (!mu.is_atomic()) throw config_error("pushforward_exact: atomic measure required");
    const std::size_t total = mu.atoms.size() * m.points.size();
    if (total > cap && resample_rng == nullptr)
        throw blowup_error("pushforward_exact: pair count exceeds cap and resampling disabled");
    EmpiricalMeasure out;
    out.points.reserve(total);
    out.weights.reserve(total);
    for (std::size_t ai = 0; ai < mu.atoms.size(); ++ai)
        for (std::size_t pi = 0; pi < m.points.size(); ++pi) {
            out.points.push_back(apply(mu.atoms[ai], m.points[pi]));
            out.weights.push_back(mu.weights[ai] * m.weights[pi]);
        }
    if (out.points.size() > cap) return systematic_resample(out, resample_to, *resample_rng);
    return out;
}

inline EmpiricalMeasure pushforward_sampled(const MatrixMeasure& mu, const EmpiricalMeasure& m,
                                            RngStream& rng) {
    EmpiricalMeasure out = m;
    for (auto& p : out.points) p = apply(mu.draw(rng), p);
    return out;
}

// ---------------------------------------------------------------------------
// spectral-gap estimate: asymptotic per-step contraction of the pullback on
// exact (1,0)-forms. The iterate is kept in the exact sector by pulling back
// the potential function and differentiating for the norm; a grid-scale
// low-pass inside the loop removes sub-mesh content the quadrature cannot
// represent. mu^{*N} acts as N single-step applications.
// ---------------------------------------------------------------------------

struct GapEstimate {
    std::size_t n_power = 1;
    double norm_estimate = 0.0;  // estimate for the mu^{*N} operator
    double per_step = 0.0;       // N-th root
    std::size_t iterations = 0;
    double residual = 0.0;       // spread of the log-ratios over the averaging window
    std::vector<double> log_ratios;  // per outer iteration (N pullbacks each)
};

inline GridFunction random_bandlimited_function(std::shared_ptr<const SphereGrid> grid,
                                                RngStream& rng) {
    std::array<double, 9> a{};
    for (auto& x : a) x = rng.normal();
    return GridFunction::sample(std::move(grid), [&](const ProjPoint& p) {
        const auto n = sphere_coords(p);
        return a[0] * n[0] + a[1] * n[1] + a[2] * n[2] + a[3] * n[0] * n[1] +
               a[4] * n[1] * n[2] + a[5] * n[0] * n[2] + a[6] * n[0] * n[0] +
               a[7] * n[1] * n[1] + a[8] * n[0] * n[1] * n[2];
    });
}

inline GapEstimate gap_estimate(const MatrixMeasure& mu, std::shared_ptr<const SphereGrid> grid,
                                std::size_t N, std::size_t iters, RngStream rng,
                                int threads = 1) {
    if (!mu.is_atomic()) throw config_error("gap_estimate: atomic measure required");
    if (N < 1 || iters < 4) throw config_error("gap_estimate: N >= 1, iters >= 4 required");
    GridFunction h = random_bandlimited_function(grid, rng);
    {
        const double c = integrate(h);
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : h.values[chart]) v -= c;
        const double d0 = l2_form_norm(del(h));
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : h.values[chart]) v /= d0;
    }
    std::vector<double> log_ratios(iters);
    for (std::size_t k = 0; k < iters; ++k) {
        for (std::size_t s = 0; s < N; ++s) {
            grid_lowpass(h);
            h = pullback_function(mu, h, threads);
        }
        const double c = integrate(h);
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : h.values[chart]) v -= c;
        const double d = l2_form_norm(del(h));
        if (!(d > 0.0)) {
            // fully contracted to a constant: rate below measurable floor
            GapEstimate out;
            out.n_power = N;
            out.iterations = k + 1;
            return out;
        }
        log_ratios[k] = std::log(d);
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : h.values[chart]) v /= d;
    }
    const std::size_t window = std::max<std::size_t>(10, iters / 3);
    const std::size_t start = iters - std::min(window, iters);
    double m = 0.0;
    for (std::size_t k = start; k < iters; ++k) m += log_ratios[k];
    m /= double(iters - start);
    double var = 0.0;
    for (std::size_t k = start; k < iters; ++k)
        var += (log_ratios[k] - m) * (log_ratios[k] - m);
    var /= double(std::max<std::size_t>(iters - start, 2) - 1);
    GapEstimate out;
    out.n_power = N;
    out.per_step = std::exp(m / double(N));
    out.norm_estimate = std::exp(m);
    out.iterations = iters;
    out.residual = std::sqrt(var);
    out.log_ratios = std::move(log_ratios);
    return out;
}

// ---------------------------------------------------------------------------
// exponential-convergence experiment: iterates of the transfer operator on a
// test function versus the limit constant, in W^{1,2} and sup distance
// ---------------------------------------------------------------------------

struct IterateRecord {
    std::size_t n;
    double w12_distance;
    double sup_distance;
    double c_partial;  // running telescoped constant
};

struct IterateReport {
    std::vector<IterateRecord> sequence;
    double c_limit = 0.0;
    LineFit fit;         // log w12-distance vs n over the usable window
    std::size_t fit_lo = 0, fit_hi = 0;
};

inline IterateReport iterate_pullback_experiment(const MatrixMeasure& mu, const GridFunction& h0,
                                                 std::size_t n_max, int threads = 1,
                                                 bool check_elementarity = true) {
    if (check_elementarity) {
        const auto verdict = elementarity_check(mu);
        if (verdict.elementary())
            throw elementary_measure_error("iterate_pullback_experiment: elementary measure");
    }
    IterateReport rep;
    // telescoped constants c_n and the plain iterates a_n = (f^n)* h
    GridFunction a = h0;
    std::vector<GridFunction> iterates;
    iterates.reserve(n_max + 1);
    iterates.push_back(a);
    double c_sum = integrate(h0);
    GridFunction centered = h0;
    {
        const double c0 = c_sum;
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : centered.values[chart]) v -= c0;
    }
    std::vector<double> c_partials{c_sum};
    for (std::size_t n = 1; n <= n_max; ++n) {
        centered = pullback_function(mu, centered, threads);
        const double cn = integrate(centered);
        c_sum += cn;
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : centered.values[chart]) v -= cn;
        c_partials.push_back(c_sum);
        a = pullback_function(mu, iterates.back(), threads);
        iterates.push_back(a);
    }
    rep.c_limit = c_sum;
    for (std::size_t n = 0; n <= n_max; ++n) {
        GridFunction diff = iterates[n];
        for (int chart = 0; chart < 2; ++chart)
            for (auto& v : diff.values[chart]) v -= rep.c_limit;
        IterateRecord rec;
        rec.n = n;
        rec.w12_distance = std::abs(integrate(diff)) + l2_form_norm(del(diff));
        rec.sup_distance = sup_norm(diff);
        rec.c_partial = c_partials[n];
        rep.sequence.push_back(rec);
    }
    // slope over the window above the numerical floor
    const double floor_val =
        std::max(1e-12, 1e-9 * std::max(rep.sequence.front().w12_distance, 1.0));
    std::vector<double> xs, ys;
    rep.fit_lo = 1;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (rep.sequence[n].w12_distance <= floor_val) break;
        xs.push_back(double(n));
        ys.push_back(std::log(rep.sequence[n].w12_distance));
        rep.fit_hi = n;
    }
    rep.fit = fit_line(xs, ys);
    return rep;
}

// ---------------------------------------------------------------------------
// equidistribution experiment with coupled stationary companions: the same
// sampled words act on the start point and on nu-distributed companions, so
// the mean difference estimates <(f^n)_* delta_a - nu, phi> with a variance
// that decays along with the signal.
// ---------------------------------------------------------------------------

struct EquidistributionRecord {
    std::size_t n;
    double value;    // signed estimate of the pairing difference
    double stderr_;
};

struct EquidistributionReport {
    std::vector<EquidistributionRecord> sequence;
    LineFit fit;  // log |value| vs n over the trailing significant window
    std::size_t fit_lo = 0, fit_hi = 0;
};

inline EquidistributionReport equidistribution_experiment(
    const MatrixMeasure& mu, const ProjPoint& a, const GridFunction& phi,
    const EmpiricalMeasure& nu_companions, std::size_t n_max, std::size_t trials,
    std::uint64_t master_seed, int threads = 1, bool check_elementarity = true,
    std::size_t fit_hi_cap = 0) {
    if (check_elementarity) {
        if (mu.is_atomic() && elementarity_check(mu).elementary())
            throw elementary_measure_error("equidistribution_experiment: elementary measure");
    }
    if (nu_companions.points.size() < trials)
        throw config_error("equidistribution_experiment: companions fewer than trials");
    std::vector<std::vector<double>> diffs(n_max, std::vector<double>(trials));
    parallel_for(trials, threads, [&](std::size_t t) {
        RngStream rng = RngStream::derive(master_seed, "equidistribute", t);
        ProjPoint x = a;
        ProjPoint z = nu_companions.points[t];
        for (std::size_t n = 0; n < n_max; ++n) {
            const GroupElement g = mu.draw(rng);
            x = apply(g, x);
            z = apply(g, z);
            diffs[n][t] = read_function_at(phi, x) - read_function_at(phi, z);
        }
    });
    EquidistributionReport rep;
    for (std::size_t n = 0; n < n_max; ++n) {
        const MeanErr me = mean_stderr(diffs[n]);
        rep.sequence.push_back({n + 1, me.mean, me.stderr_});
    }
    // asymptotic-rate fit: the start-dependent transient occupies the early
    // sequence, so the rate is fitted over the last significant points (the
    // coupled estimator keeps the tail marginally significant, its error
    // decaying together with the signal)
    std::vector<std::size_t> significant;
    for (std::size_t n = 0; n < n_max; ++n) {
        const auto& rec = rep.sequence[n];
        if (fit_hi_cap > 0 && rec.n > fit_hi_cap) break;
        if (std::abs(rec.value) > std::max(rec.stderr_, 1e-14)) significant.push_back(n);
    }
    const std::size_t window = 15;
    const std::size_t start_idx =
        significant.size() > window ? significant.size() - window : 0;
    std::vector<double> xs, ys;
    for (std::size_t k = start_idx; k < significant.size(); ++k) {
        const auto& rec = rep.sequence[significant[k]];
        xs.push_back(double(rec.n));
        ys.push_back(std::log(std::abs(rec.value)));
    }
    if (!xs.empty()) {
        rep.fit_lo = std::size_t(xs.front());
        rep.fit_hi = std::size_t(xs.back());
    }
    rep.fit = fit_line(xs, ys);
    return rep;
}

}  // namespace sl2dyn
