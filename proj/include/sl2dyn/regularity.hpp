#pragma once

#include "sl2dyn/limits.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// disc masses of an empirical measure and regularity-exponent fits
// ---------------------------------------------------------------------------

inline double disc_mass(const EmpiricalMeasure& nu, const ProjPoint& a, double r) {
    if (!(r > 0.0 && r <= 1.0)) throw config_error("disc_mass: r in (0,1] required");
    double s = 0.0;
    for (std::size_t i = 0; i < nu.points.size(); ++i)
        if (spherical_distance(nu.points[i], a) <= r) s += nu.weights[i];
    return s;
}

struct RegularityFit {
    enum class Model { PowerLaw, LogPower };
    Model model = Model::PowerLaw;
    double alpha_hat = 0.0;
    double c_hat = 0.0;
    std::vector<double> r_grid;
    std::vector<double> worst_center_masses;
    double r_squared = 0.0;
};

// 64 well-spread centers (Fibonacci lattice on the sphere) plus the heaviest
// cluster modes of the sample
inline std::vector<ProjPoint> spread_centers(std::size_t count) {
    std::vector<ProjPoint> out;
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (double(k) + 0.5) / double(count);
        const double phi = 2.0 * pi * double(k) / golden;
        const double s = std::sqrt(std::max(1.0 - z * z, 0.0));
        // unit vector (s cos phi, s sin phi, z) -> homogeneous pair
        const double half = std::sqrt(std::max(0.5 * (1.0 + z), 0.0));
        const double other = std::sqrt(std::max(0.5 * (1.0 - z), 0.0));
        (void)s;
        out.emplace_back(cplx(half), std::polar(other, -phi));
    }
    return out;
}

inline std::vector<ProjPoint> heavy_modes(const EmpiricalMeasure& nu, std::size_t count,
                                          double cell = 1.0 / 32.0) {
    // crude clustering: snap points to a chart grid and keep the heaviest cells
    std::unordered_map<std::int64_t, std::pair<double, std::size_t>> cells;
    for (std::size_t i = 0; i < nu.points.size(); ++i) {
        const auto n = sphere_coords(nu.points[i]);
        const std::int64_t kx = std::llround(n[0] / cell);
        const std::int64_t ky = std::llround(n[1] / cell);
        const std::int64_t kz = std::llround(n[2] / cell);
        const std::int64_t key = (kx & 0x1fffff) | ((ky & 0x1fffff) << 21) |
                                 ((kz & 0x1fffff) << 42);
        auto& slot = cells[key];
        slot.first += nu.weights[i];
        slot.second = i;
    }
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(cells.size());
    for (const auto& [k, v] : cells) ranked.push_back(v);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ProjPoint> out;
    for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i)
        out.push_back(nu.points[ranked[i].second]);
    return out;
}

inline RegularityFit regularity_fit(const EmpiricalMeasure& nu,
                                    const std::vector<ProjPoint>& centers,
                                    const std::vector<double>& radii,
                                    RegularityFit::Model model, int threads = 1) {
    if (radii.size() < 3) throw config_error("regularity_fit: need >= 3 radii");
    RegularityFit fit;
    fit.model = model;
    fit.r_grid = radii;
    fit.worst_center_masses.assign(radii.size(), 0.0);
    std::vector<std::vector<double>> per_center(centers.size(),
                                                std::vector<double>(radii.size(), 0.0));
    parallel_for(centers.size(), threads, [&](std::size_t ci) {
        for (std::size_t ri = 0; ri < radii.size(); ++ri)
            per_center[ci][ri] = disc_mass(nu, centers[ci], radii[ri]);
    });
    for (std::size_t ri = 0; ri < radii.size(); ++ri)
        for (std::size_t ci = 0; ci < centers.size(); ++ci)
            fit.worst_center_masses[ri] = std::max(fit.worst_center_masses[ri],
                                                   per_center[ci][ri]);
    // resolvability: expected count in the smallest disc at the densest center
    const double min_mass =
        *std::max_element(per_center.begin(), per_center.end(),
                          [&](const auto& a, const auto& b) {
                              return a.back() < b.back();
                          })
             ->rbegin();
    if (min_mass * double(nu.points.size()) < 30.0)
        throw underresolved_error("regularity_fit: smallest disc under 30 expected points");
    std::vector<double> xs, ys;
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        if (fit.worst_center_masses[ri] <= 0.0) continue;
        const double r = radii[ri];
        xs.push_back(model == RegularityFit::Model::PowerLaw ? std::log(r)
                                                             : std::log(-std::log(r)));
        ys.push_back(std::log(fit.worst_center_masses[ri]));
    }
    const LineFit lf = fit_line(xs, ys);
    // PowerLaw: log m = log c + alpha log r; LogPower: log m = log c - alpha log|log r|
    fit.alpha_hat = model == RegularityFit::Model::PowerLaw ? lf.slope : -lf.slope;
    fit.c_hat = std::exp(lf.intercept);
    fit.r_squared = lf.r_squared;
    return fit;
}

// ---------------------------------------------------------------------------
// V_eps(r): Luxemburg norm of the bump at a canonical center (PSU(2)
// invariance makes it center-independent; spot-checked in tests)
// ---------------------------------------------------------------------------

inline double v_eps(std::shared_ptr<const SphereGrid> grid, double r, double eps,
                    const YoungFunction& Phi) {
    // canonical center away from chart seams and off the node lattice
    const ProjPoint a = ProjPoint::from_affine(cplx(0.1, 0.07));
    const GridFunction u = bump_u(std::move(grid), a, r, eps);
    return luxemburg_norm(u, Phi);
}

// ---------------------------------------------------------------------------
// exponential integrability of W^{1,2} test functions against nu
// ---------------------------------------------------------------------------

struct ExpIntegrabilityReport {
    double probe = 0.0;        // max over the family of <nu, e^{theta f^2}>
    double max_w12 = 0.0;
    double largest_stable_theta = 0.0;
};

inline ExpIntegrabilityReport exp_integrability_probe(const EmpiricalMeasure& nu,
                                                      const std::vector<GridFunction>& family,
                                                      double theta_exponent) {
    if (!(theta_exponent > 0.0))
        throw config_error("exp_integrability_probe: theta > 0 required");
    ExpIntegrabilityReport rep;
    auto probe_at = [&](double th) {
        double worst = 0.0;
        for (const auto& f : family) {
            double s = 0.0;
            for (std::size_t i = 0; i < nu.points.size(); ++i) {
                const double v = read_function_at(f, nu.points[i]);
                const double e = std::exp(th * v * v);
                if (!std::isfinite(e))
                    throw overflow_probe_error("exp_integrability_probe: theta too large");
                s += nu.weights[i] * e;
            }
            worst = std::max(worst, s);
        }
        return worst;
    };
    for (const auto& f : family) rep.max_w12 = std::max(rep.max_w12, w12_norm(f));
    rep.probe = probe_at(theta_exponent);
    // doubling search for the largest theta that stays finite and moderate
    double th = theta_exponent;
    double last_good = theta_exponent;
    for (int step = 0; step < 12; ++step) {
        th *= 2.0;
        try {
            if (probe_at(th) > 1e12) break;
            last_good = th;
        } catch (const overflow_probe_error&) {
            break;
        }
    }
    rep.largest_stable_theta = last_good;
    return rep;
}

}  // namespace sl2dyn
