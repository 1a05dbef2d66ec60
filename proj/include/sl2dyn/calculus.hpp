#pragma once

#include <functional>

#include "sl2dyn/empirical.hpp"
#include "sl2dyn/grid.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// quadrature and derivatives on the two-chart grid
// ---------------------------------------------------------------------------

inline double integrate(const GridFunction& f) {
    double s = 0.0;
    for (int chart = 0; chart < 2; ++chart) {
        const auto& v = f.values[chart];
        for (int id = 0; id < f.grid->nodes(); ++id) s += f.grid->fs_weight(id) * v[std::size_t(id)];
    }
    return s;
}

// d/dz = (1/2) e^{-i theta} (d/dr - (i/r) d/dtheta); central differences,
// polar wrap below ring 0, one-sided at the rim (partition weight 0 there)
inline OneForm del(const GridFunction& f) {
    const SphereGrid& g = *f.grid;
    const int n_r = g.radial_count(), n_t = g.angular_count();
    OneForm out(f.grid);
    for (int chart = 0; chart < 2; ++chart) {
        const auto& v = f.values[chart];
        auto& c = out.values[chart];
        for (int i = 0; i < n_r; ++i) {
            for (int j = 0; j < n_t; ++j) {
                const int id = i * n_t + j;
                const int jp = (j + 1) % n_t, jm = (j + n_t - 1) % n_t;
                const double dth = (v[std::size_t(i * n_t + jp)] - v[std::size_t(i * n_t + jm)]) /
                                   (2.0 * g.dtheta());
                double drr;
                if (i == 0) {
                    const int jongle = (j + n_t / 2) % n_t;
                    drr = (v[std::size_t(n_t + j)] - v[std::size_t(jongle)]) / (2.0 * g.dr());
                } else if (i == n_r - 1) {
                    drr = (3.0 * v[std::size_t(id)] - 4.0 * v[std::size_t((i - 1) * n_t + j)] +
                           v[std::size_t((i - 2) * n_t + j)]) /
                          (2.0 * g.dr());
                } else {
                    drr = (v[std::size_t((i + 1) * n_t + j)] - v[std::size_t((i - 1) * n_t + j)]) /
                          (2.0 * g.dr());
                }
                const cplx e = std::polar(1.0, -g.angle(j));
                c[std::size_t(id)] = 0.5 * e * cplx(drr, -dth / g.radius(i));
            }
        }
    }
    return out;
}

// L2 norm of a (1,0)-form against the raw density i dz^dzbar
inline double l2_form_norm(const OneForm& phi) {
    double s = 0.0;
    for (int chart = 0; chart < 2; ++chart) {
        const auto& c = phi.values[chart];
        for (int id = 0; id < phi.grid->nodes(); ++id)
            s += phi.grid->flat_weight(id) * std::norm(c[std::size_t(id)]);
    }
    return std::sqrt(s);
}

// sup over the covering region |coordinate| <= 1 of both charts
inline double sup_norm(const GridFunction& f) {
    const SphereGrid& g = *f.grid;
    double m = 0.0;
    for (int chart = 0; chart < 2; ++chart)
        for (int i = 0; i < g.radial_count(); ++i) {
            if (g.radius(i) > 1.0) break;
            for (int j = 0; j < g.angular_count(); ++j)
                m = std::max(m, std::abs(f.values[chart][std::size_t(i * g.angular_count() + j)]));
        }
    return m;
}

// ---------------------------------------------------------------------------
// W^{1,2} norms: mass term per variant + L2 norm of the del coefficient
// ---------------------------------------------------------------------------

struct W12Variant {
    enum class Kind { FS, L1, L2, SubsetU, Nu };
    Kind kind = Kind::FS;
    std::function<bool(const ProjPoint&)> region;  // SubsetU
    const EmpiricalMeasure* nu = nullptr;          // Nu

    static W12Variant fs() { return {}; }
    static W12Variant l1() { return {Kind::L1, nullptr, nullptr}; }
    static W12Variant l2() { return {Kind::L2, nullptr, nullptr}; }
    static W12Variant subset(std::function<bool(const ProjPoint&)> r) {
        return {Kind::SubsetU, std::move(r), nullptr};
    }
    static W12Variant nu_variant(const EmpiricalMeasure& m) { return {Kind::Nu, nullptr, &m}; }
};

inline double w12_mass_term(const GridFunction& f, const W12Variant& variant) {
    switch (variant.kind) {
        case W12Variant::Kind::FS: return std::abs(integrate(f));
        case W12Variant::Kind::L1: {
            double s = 0.0;
            for (int chart = 0; chart < 2; ++chart)
                for (int id = 0; id < f.grid->nodes(); ++id)
                    s += f.grid->fs_weight(id) * std::abs(f.values[chart][std::size_t(id)]);
            return s;
        }
        case W12Variant::Kind::L2: {
            double s = 0.0;
            for (int chart = 0; chart < 2; ++chart)
                for (int id = 0; id < f.grid->nodes(); ++id)
                    s += f.grid->fs_weight(id) * f.values[chart][std::size_t(id)] *
                         f.values[chart][std::size_t(id)];
            return std::sqrt(s);
        }
        case W12Variant::Kind::SubsetU: {
            double s = 0.0, mass = 0.0;
            for (int chart = 0; chart < 2; ++chart)
                for (int id = 0; id < f.grid->nodes(); ++id) {
                    if (!variant.region(f.grid->node_point(chart, id))) continue;
                    mass += f.grid->fs_weight(id);
                    s += f.grid->fs_weight(id) * f.values[chart][std::size_t(id)];
                }
            if (mass <= 0.0) throw empty_region_error("w12_norm: SubsetU region has no mass");
            return std::abs(s);
        }
        case W12Variant::Kind::Nu:
            return std::abs(empirical_pairing(*variant.nu, f));
    }
    return 0.0;
}

inline double w12_norm(const GridFunction& f, const W12Variant& variant = W12Variant::fs()) {
    return w12_mass_term(f, variant) + l2_form_norm(del(f));
}

// ---------------------------------------------------------------------------
// bump functions u^eps_{a,r}(z) = max(-log(dist(z,a)/(2r)), 0)^{1/2-eps}
// ---------------------------------------------------------------------------

inline GridFunction bump_u(std::shared_ptr<const SphereGrid> grid, const ProjPoint& a, double r,
                           double eps) {
    if (!(r > 0.0 && r <= 1.0)) throw config_error("bump_u: r in (0,1] required");
    if (!(eps > 0.0 && eps < 0.5)) throw config_error("bump_u: eps in (0,1/2) required");
    if (r < 4.0 * grid->mesh_size())
        throw unresolved_radius_error("bump_u: r below grid resolvability (r >= 4 mesh)");
    const double expo = 0.5 - eps;
    return GridFunction::sample(std::move(grid), [&](const ProjPoint& p) {
        const double d = std::max(spherical_distance(p, a), 1e-14);
        const double t = -std::log(d / (2.0 * r));
        return t > 0.0 ? std::pow(t, expo) : 0.0;
    });
}

// ---------------------------------------------------------------------------
// Young functions and the Luxemburg gauge norm
// ---------------------------------------------------------------------------

struct YoungFunction {
    enum class Kind { PowerQ, HybridExpCube, Custom };
    Kind kind = Kind::Custom;
    double q = 2.0;
    std::function<double(double)> phi;

    double operator()(double t) const { return phi(t); }

    static YoungFunction power_q(double q) {
        YoungFunction y;
        y.kind = Kind::PowerQ;
        y.q = q;
        y.phi = [q](double t) { return std::pow(t, q); };
        return y;
    }

    // exp(-t^-3) near 0, then its common tangent with exp(t^2) at tau = 0.8,
    // then exp(t^2); convex increasing, and minimal among such extensions
    static YoungFunction hybrid_exp_cube() {
        const double tau = 0.8;
        const double ev = std::exp(tau * tau);
        const double slope = 2.0 * tau * ev;
        auto lin = [=](double t) { return ev + slope * (t - tau); };
        auto cube = [](double t) { return std::exp(-1.0 / (t * t * t)); };
        // crossing of the tangent line with exp(-t^-3) in (0, tau)
        double lo = 1e-3, hi = tau;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (lin(mid) - cube(mid) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double t_c = 0.5 * (lo + hi);
        YoungFunction y;
        y.kind = Kind::HybridExpCube;
        y.phi = [=](double t) {
            if (t <= 0.0) return 0.0;
            if (t <= t_c) return cube(t);
            if (t <= tau) return std::max(lin(t), 0.0);
            return std::exp(t * t);
        };
        return y;
    }

    // sampled shape check: Phi(0)=0, increasing and midpoint-convex on a log grid
    bool valid() const {
        if (phi(0.0) != 0.0 && phi(1e-12) > 1e-6) return false;
        double prev = 0.0;
        for (double t = 1e-3; t < 8.0; t *= 1.15) {
            const double v = phi(t);
            if (v + 1e-15 < prev) return false;
            const double mid = phi(t * 1.075);
            if (mid > 0.5 * (v + phi(t * 1.15)) + 1e-9 * (1.0 + v)) return false;
            prev = v;
        }
        return true;
    }
};

// Luxemburg norm inf{A : integral Phi(|f|/A) omega <= 1} by bisection
inline double luxemburg_norm(const GridFunction& f, const YoungFunction& Phi,
                             double a_lo = 1e-12, double a_hi = 1e6, int max_iter = 80) {
    double fmax = 0.0;
    for (int chart = 0; chart < 2; ++chart)
        for (double v : f.values[chart]) fmax = std::max(fmax, std::abs(v));
    if (fmax == 0.0) return 0.0;
    auto constraint = [&](double A) {
        double s = 0.0;
        for (int chart = 0; chart < 2; ++chart)
            for (int id = 0; id < f.grid->nodes(); ++id) {
                const double w = f.grid->fs_weight(id);
                if (w == 0.0) continue;
                const double v = Phi(std::abs(f.values[chart][std::size_t(id)]) / A);
                if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
                s += w * v;
            }
        return s;
    };
    if (!(constraint(a_hi) <= 1.0))
        throw diverged_error("luxemburg_norm: constraint not satisfiable below A_hi");
    double lo = a_lo, hi = a_hi;
    for (int it = 0; it < max_iter; ++it) {
        const double mid = std::sqrt(lo * hi);  // geometric bisection over 18 decades
        if (constraint(mid) <= 1.0)
            hi = mid;
        else
            lo = mid;
        if (hi / lo < 1.0 + 1e-8) break;
    }
    return hi;
}

// ---------------------------------------------------------------------------
// Moser-Trudinger probe: max over a family of integral e^{alpha phi^2} omega
// ---------------------------------------------------------------------------

struct MoserTrudingerReport {
    double probe = 0.0;         // max of the exponential integrals
    double max_w12 = 0.0;       // family boundedness check, reported
};

inline MoserTrudingerReport moser_trudinger_probe(const std::vector<GridFunction>& family,
                                                  double alpha) {
    if (!(alpha > 0.0)) throw config_error("moser_trudinger_probe: alpha > 0 required");
    MoserTrudingerReport rep;
    for (const auto& f : family) {
        rep.max_w12 = std::max(rep.max_w12, w12_norm(f));
        double s = 0.0;
        for (int chart = 0; chart < 2; ++chart)
            for (int id = 0; id < f.grid->nodes(); ++id) {
                const double v = f.values[chart][std::size_t(id)];
                const double e = std::exp(alpha * v * v);
                if (!std::isfinite(e))
                    throw overflow_probe_error("moser_trudinger_probe: alpha too large");
                s += f.grid->fs_weight(id) * e;
            }
        rep.probe = std::max(rep.probe, s);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// exact derivative form of the norm cocycle theta_g (used by the closed-form
// energy checks; del() covers generic grid functions)
// ---------------------------------------------------------------------------

inline OneForm theta_form(std::shared_ptr<const SphereGrid> grid, const GroupElement& g) {
    OneForm out(std::move(grid));
    const SphereGrid& gr = *out.grid;
    for (int chart = 0; chart < 2; ++chart) {
        for (int id = 0; id < gr.nodes(); ++id) {
            const cplx u = gr.node_coord(id);
            cplx n0, n1, d_n0, d_n1;
            if (chart == 0) {  // lift (z, 1): g v = (a z + b, c z + d)
                n0 = g.a * u + g.b;
                n1 = g.c * u + g.d;
                d_n0 = g.a;
                d_n1 = g.c;
            } else {  // lift (1, w): g v = (a + b w, c + d w)
                n0 = g.a + g.b * u;
                n1 = g.c + g.d * u;
                d_n0 = g.b;
                d_n1 = g.d;
            }
            const double den = std::norm(n0) + std::norm(n1);
            const cplx dlog_g = (d_n0 * std::conj(n0) + d_n1 * std::conj(n1)) / den;
            const cplx dlog_v = std::conj(u) / (1.0 + std::norm(u));
            out.values[chart][std::size_t(id)] = 0.5 * (dlog_g - dlog_v);
        }
    }
    return out;
}

}  // namespace sl2dyn
