#include <catch2/catch_amalgamated.hpp>

#include "sl2dyn/limits.hpp"
#include "sl2dyn/transfer.hpp"

using namespace sl2dyn;

namespace {

GridFunction smooth_test_function(std::shared_ptr<const SphereGrid> grid, int which = 0) {
    return GridFunction::sample(std::move(grid), [which](const ProjPoint& p) {
        const auto n = sphere_coords(p);
        switch (which) {
            case 0: return n[0];
            case 1: return n[1] * n[2] + 0.3 * n[0];
            default: return n[2] * n[2] - n[0] * n[1];
        }
    });
}

}  // namespace

TEST_CASE("pullback_function basics") {
    const auto grid = make_grid(128, 256);
    const GridFunction f = smooth_test_function(grid, 1);

    // identity measure leaves a smooth function unchanged up to interpolation
    const GridFunction pid =
        pullback_function(MatrixMeasure::dirac(GroupElement::identity()), f);
    double worst = 0.0;
    for (int chart = 0; chart < 2; ++chart)
        for (int id = 0; id < grid->nodes(); ++id)
            worst = std::max(worst, std::abs(pid.values[chart][std::size_t(id)] -
                                             f.values[chart][std::size_t(id)]));
    REQUIRE(worst < 1e-5);

    // Markov property: constants are exactly preserved
    for (const char* name : {"schottky2", "parabolic_pair"}) {
        const GridFunction c = GridFunction::constant(grid, -0.7);
        const GridFunction pc = pullback_function(fixture(name), c);
        for (int chart = 0; chart < 2; ++chart)
            for (double v : pc.values[chart]) REQUIRE(v == Catch::Approx(-0.7).margin(1e-13));
    }

    // single atom equals composition with g up to interpolation error
    const GroupElement g(1.2, cplx(0.1, 0.2), cplx(-0.05, 0.1), 0.9);
    const GridFunction pg = pullback_function(MatrixMeasure::dirac(g), f);
    const GridFunction composed = GridFunction::sample(
        grid, [&](const ProjPoint& p) {
            const auto n = sphere_coords(apply(g, p));
            return n[1] * n[2] + 0.3 * n[0];
        });
    double err = 0.0;
    for (int chart = 0; chart < 2; ++chart)
        for (int id = 0; id < grid->nodes(); ++id)
            err = std::max(err, std::abs(pg.values[chart][std::size_t(id)] -
                                         composed.values[chart][std::size_t(id)]));
    REQUIRE(err < 1e-4);

    // positivity up to interpolation slack
    GridFunction pos = f;
    for (int chart = 0; chart < 2; ++chart)
        for (auto& v : pos.values[chart]) v = std::abs(v) + 0.1;
    const GridFunction ppos = pullback_function(fixture("schottky2"), pos);
    double pmin = 1e300;
    for (int chart = 0; chart < 2; ++chart)
        for (double v : ppos.values[chart]) pmin = std::min(pmin, v);
    REQUIRE(pmin > 0.1 - 1e-3);
}

TEST_CASE("pullback_form: isometries and contraction") {
    const auto grid = make_grid(128, 256);
    const GridFunction f = smooth_test_function(grid, 2);
    const OneForm phi = del(f);
    const double base = l2_form_norm(phi);

    // identity
    const OneForm pid = pullback_form(MatrixMeasure::dirac(GroupElement::identity()), phi);
    REQUIRE(l2_form_norm(pid) == Catch::Approx(base).epsilon(1e-5));

    // unitary pullback preserves the norm within 1e-4
    for (const GroupElement& k : {rotation_z(0.9), rotation_x(0.37)}) {
        const OneForm pk = pullback_form(MatrixMeasure::dirac(k), phi);
        REQUIRE(std::abs(l2_form_norm(pk) - base) / base < 1e-4);
    }

    // schottky2 pullback of an exact bump form does not expand
    const GridFunction bump = bump_u(grid, ProjPoint::from_affine(cplx(0.4, 0.2)), 0.125, 0.25);
    const OneForm dbump = del(bump);
    const OneForm pb = pullback_form(fixture("schottky2"), dbump);
    REQUIRE(l2_form_norm(pb) <= l2_form_norm(dbump) * (1.0 + 1e-3));

    // contraction across fixtures on random smooth forms
    RngStream rng = RngStream::derive(31, "forms");
    for (const char* name : {"schottky2", "elementary_rot", "elementary_diag",
                             "parabolic_pair"}) {
        const MatrixMeasure mu = fixture(name);
        for (int t = 0; t < 10; ++t) {
            GridFunction h = random_bandlimited_function(grid, rng);
            const OneForm w = del(h);
            REQUIRE(l2_form_norm(pullback_form(mu, w)) <= l2_form_norm(w) * (1.0 + 2e-3));
        }
    }
}

TEST_CASE("pushforward of empirical measures") {
    const auto grid = make_grid(64, 128);
    RngStream rng = RngStream::derive(32, "push");
    const MatrixMeasure sch = fixture("schottky2");

    const ProjPoint x = ProjPoint::from_affine(cplx(0.3, -0.4));
    const EmpiricalMeasure dx = EmpiricalMeasure::dirac(x);
    const EmpiricalMeasure once = pushforward_exact(sch, dx);
    REQUIRE(once.points.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(spherical_distance(once.points[i], apply(sch.atoms[i], x)) < 1e-12);
        REQUIRE(once.weights[i] == Catch::Approx(0.5).margin(1e-15));
    }

    // identity measure leaves the cloud unchanged
    const EmpiricalMeasure same =
        pushforward_exact(MatrixMeasure::dirac(GroupElement::identity()), once);
    REQUIRE(spherical_distance(same.points[0], once.points[0]) < 1e-12);

    // duality <(f)_* m, f> = <m, f^* f> for the exact mode
    std::vector<ProjPoint> pts;
    for (int i = 0; i < 300; ++i)
        pts.push_back(ProjPoint(cplx(rng.normal(), rng.normal()),
                                cplx(rng.normal(), rng.normal())));
    const EmpiricalMeasure m = EmpiricalMeasure::equal_weights(pts);
    const GridFunction f = smooth_test_function(grid, 1);
    const double lhs = empirical_pairing(pushforward_exact(sch, m), f);
    const double rhs = empirical_pairing(m, pullback_function(sch, f));
    REQUIRE(std::abs(lhs - rhs) < 2e-3);

    // iterated exact pushforward from delta_a matches the word-sample law
    EmpiricalMeasure iter = EmpiricalMeasure::dirac(x);
    const std::size_t steps = 7;
    for (std::size_t s = 0; s < steps; ++s) iter = pushforward_exact(sch, iter);
    const double exact_mean = empirical_pairing(iter, f);
    std::vector<double> mc(20000);
    for (std::size_t t = 0; t < mc.size(); ++t) {
        RngStream tr = RngStream::derive(77, "pushmc", t);
        mc[t] = read_function_at(f, apply(word_sample(sch, steps, tr), x));
    }
    const MeanErr me = mean_stderr(mc);
    REQUIRE(std::abs(me.mean - exact_mean) < 5.0 * me.stderr_ + 1e-4);

    // blowup honoring and systematic resampling
    REQUIRE_THROWS_AS(pushforward_exact(sch, m, nullptr, 400), blowup_error);
    RngStream rr = RngStream::derive(33, "resample");
    const EmpiricalMeasure res = pushforward_exact(sch, m, &rr, 400, 128);
    REQUIRE(res.points.size() == 128);
    double ws = 0.0;
    for (double w : res.weights) ws += w;
    REQUIRE(ws == Catch::Approx(1.0).margin(1e-12));

    // sampled mode
    const EmpiricalMeasure sm = pushforward_sampled(sch, m, rr);
    REQUIRE(sm.points.size() == m.points.size());
}

TEST_CASE("sobolev boundedness of the transfer operator") {
    RngStream rng = RngStream::derive(34, "sobolev");
    auto fitted_K = [&](int n_r) {
        const auto g = make_grid(n_r, 2 * n_r);
        const MatrixMeasure mu = fixture("schottky2");
        RngStream local = RngStream::derive(34, "sobolev-f");
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const GridFunction f = random_bandlimited_function(g, local);
            worst = std::max(worst, w12_norm(pullback_function(mu, f)) / w12_norm(f));
        }
        return worst;
    };
    const double k128 = fitted_K(128), k64 = fitted_K(64);
    INFO("fitted K at 64/128: " << k64 << " " << k128);
    REQUIRE(k128 < 10.0);
    REQUIRE(std::abs(k128 - k64) / k128 < 0.25);
}

TEST_CASE("gap estimate: unitary atom and sub-multiplicativity") {
    const auto grid = make_grid(128, 256);
    const MatrixMeasure rot = MatrixMeasure::dirac(rotation_z(0.9));
    const GapEstimate gu = gap_estimate(rot, grid, 2, 20, RngStream::derive(1, "gapu"));
    REQUIRE(gu.norm_estimate == Catch::Approx(1.0).margin(1e-3));
    REQUIRE(gu.norm_estimate <= 1.0 + 1e-3);

    const MatrixMeasure sch = fixture("schottky2");
    const GapEstimate g1 = gap_estimate(sch, grid, 1, 120, RngStream::derive(2, "gap1"));
    const GapEstimate g2 = gap_estimate(sch, grid, 2, 60, RngStream::derive(2, "gap2"));
    REQUIRE(g1.norm_estimate < 1.0);
    REQUIRE(g2.norm_estimate <= g1.norm_estimate * g1.norm_estimate + 5e-3);
    REQUIRE(g1.residual < 0.05);
}

TEST_CASE("iterate experiment: constants, decay, elementary refusal") {
    const auto grid = make_grid(128, 256);
    const MatrixMeasure sch = fixture("schottky2");

    const IterateReport flat =
        iterate_pullback_experiment(sch, GridFunction::constant(grid, 0.42), 5);
    for (const auto& rec : flat.sequence) {
        REQUIRE(rec.w12_distance < 1e-10);
        REQUIRE(rec.sup_distance < 1e-10);
    }
    REQUIRE(flat.c_limit == Catch::Approx(0.42).margin(1e-12));

    const IterateReport rep =
        iterate_pullback_experiment(sch, smooth_test_function(grid, 0), 25);
    REQUIRE(rep.fit.slope < 0.0);
    REQUIRE(rep.fit.r_squared > 0.98);
    // telescoped constants converge to the same limit
    REQUIRE(rep.sequence.back().c_partial == Catch::Approx(rep.c_limit).margin(1e-6));

    REQUIRE_THROWS_AS(iterate_pullback_experiment(fixture("elementary_rot"),
                                                  smooth_test_function(grid, 0), 4),
                      elementary_measure_error);
}

TEST_CASE("grid function stays chart-consistent through pullbacks") {
    const auto grid = make_grid(128, 256);
    const MatrixMeasure sch = fixture("schottky2");
    GridFunction f = smooth_test_function(grid, 1);
    for (int k = 0; k < 3; ++k) f = pullback_function(sch, f);
    // compare the chart-0 value at overlap nodes with the chart-1 read of the
    // same sphere point
    double worst = 0.0;
    for (int i = 0; i < grid->radial_count(); ++i) {
        const double r = grid->radius(i);
        if (r < 1.0 / SphereGrid::chart_radius || r > 1.0) continue;
        for (int j = 0; j < grid->angular_count(); j += 17) {
            const int id = i * grid->angular_count() + j;
            const cplx z = grid->node_coord(id);
            const double other = detail::read_chart(*grid, f.values[1], 1.0 / z);
            worst = std::max(worst, std::abs(f.values[0][std::size_t(id)] - other));
        }
    }
    REQUIRE(worst < 1e-4);
}

TEST_CASE("w12 norm against an empirical measure") {
    const auto grid = make_grid(64, 128);
    const MatrixMeasure sch = fixture("schottky2");
    const NuHarvest h = nu_harvest(sch, 60, 5000, 7);
    const GridFunction f = smooth_test_function(grid, 0);
    const double nu_norm = w12_norm(f, W12Variant::nu_variant(h.nu));
    const double expected = std::abs(empirical_pairing(h.nu, f)) + l2_form_norm(del(f));
    REQUIRE(nu_norm == Catch::Approx(expected).margin(1e-12));
    REQUIRE(std::isfinite(nu_norm));
    REQUIRE(nu_norm > 0.0);
}

TEST_CASE("equidistribution: constants vanish, decay is log-linear") {
    const auto grid = make_grid(64, 128);
    const MatrixMeasure sch = fixture("schottky2");
    const NuHarvest companions = nu_harvest(sch, 60, 4000, 99);

    // constant phi gives exactly zero coupled differences
    const EquidistributionReport flat = equidistribution_experiment(
        sch, ProjPoint::from_affine(0.0), GridFunction::constant(grid, 3.0), companions.nu, 10,
        2000, 5);
    for (const auto& rec : flat.sequence) REQUIRE(std::abs(rec.value) < 1e-12);

    const GridFunction phi = smooth_test_function(grid, 0);
    const EquidistributionReport rep = equidistribution_experiment(
        sch, ProjPoint::from_affine(0.0), phi, companions.nu, 40, 4000, 5);
    REQUIRE(rep.fit.slope < 0.0);
    REQUIRE(rep.fit_hi >= 8);

    REQUIRE_THROWS_AS(
        equidistribution_experiment(fixture("elementary_diag"), ProjPoint::from_affine(0.0),
                                    phi, companions.nu, 5, 100, 5),
        elementary_measure_error);

    // first-moment regime: the parabolic pair still equidistributes
    const MatrixMeasure par = fixture("parabolic_pair");
    const NuHarvest pcomp = nu_harvest(par, 200, 4000, 98);
    const EquidistributionReport prep = equidistribution_experiment(
        par, ProjPoint::from_affine(0.0), phi, pcomp.nu, 40, 4000, 6);
    REQUIRE(prep.fit.slope < 0.0);
}
