// sl2dyn experiment driver: every module behind a seeded, reproducible
// subcommand writing summary.json plus CSV artifacts.

#include <chrono>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "sl2dyn/io.hpp"
#include "sl2dyn/regularity.hpp"

namespace fs = std::filesystem;
using namespace sl2dyn;

namespace {

struct RunContext {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    bool seed_from_cli = false;
    int threads = default_threads();
    std::chrono::steady_clock::time_point t0;

    ExperimentConfig load() {
        t0 = std::chrono::steady_clock::now();
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig()
                                                   : ExperimentConfig::from_file(config_path);
        if (seed_from_cli) cfg.override_value("seed", seed);
        fs::create_directories(out_dir);
        return cfg;
    }

    double wall_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void write(const std::string& subcommand, ExperimentConfig& cfg, json outputs) {
        cfg.finish();
        json summary;
        summary["subcommand"] = subcommand;
        summary["config"] = cfg.echo();
        summary["outputs"] = std::move(outputs);
        summary["wall_time_s"] = wall_seconds();
        summary["rng"] = "xoshiro256++ streams derived from (seed, stage label, trial index)";
        write_summary(out_dir, summary);
    }
};

ProjPoint parse_point(const std::string& s) {
    if (s == "inf") return ProjPoint::infinity_point();
    double re = 0.0, im = 0.0;
    if (std::sscanf(s.c_str(), "%lf,%lf", &re, &im) < 1)
        throw config_error("point: expected 're,im' or 'inf'");
    return ProjPoint::from_affine(cplx(re, im));
}

int run_classify(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    (void)cfg.get<std::uint64_t>("seed", 1);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    CsvWriter csv(ctx.out_dir + "/classify.csv",
                  {"atom", "class", "tr2_re", "tr2_im", "op_norm", "n_fixed_points"});
    json rows = json::array();
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        const GroupElement& g = mu.atoms[i];
        const MobiusClass c = classify(g);
        const cplx tr2 = g.trace() * g.trace();
        std::size_t nf = 0;
        if (c != MobiusClass::Identity) nf = fixed_points(g).size();
        csv.row({double(i), double(int(c)), tr2.real(), tr2.imag(), operator_norm(g),
                 double(nf)});
        rows.push_back({{"atom", i}, {"class", to_string(c)}, {"op_norm", operator_norm(g)}});
    }
    ctx.write("classify", cfg, json{{"atoms", rows}});
    return 0;
}

int run_elementarity(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    (void)cfg.get<std::uint64_t>("seed", 1);
    const auto max_len = cfg.get<std::uint64_t>("elementarity.max_len", 6);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const ElementarityVerdict v = elementarity_check(mu, max_len);
    json out{{"status", to_string(v.status)}, {"depth_searched", v.depth_searched}};
    if (v.witness) {
        out["witness_word"] = v.witness->word;
        out["witness_class"] = to_string(classify(v.witness->element));
    }
    if (!v.orbit.empty()) {
        json orbit = json::array();
        for (const auto& p : v.orbit)
            orbit.push_back({p.z0.real(), p.z0.imag(), p.z1.real(), p.z1.imag()});
        out["orbit"] = orbit;
    }
    std::cout << fixture_name << ": " << to_string(v.status) << "\n";
    ctx.write("elementarity", cfg, out);
    return 0;
}

int run_gap(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto N = cfg.get<std::uint64_t>("gap.N", 4);
    const auto iters = cfg.get<std::uint64_t>("gap.iters", 60);
    const auto n_r = cfg.get<int>("mesh.n_r", 128);
    const auto n_t = cfg.get<int>("mesh.n_theta", 256);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const auto grid = make_grid(n_r, n_t);
    const GapEstimate est = gap_estimate(mu, grid, N, iters,
                                         RngStream::derive(seed, "gap"), ctx.threads);
    CsvWriter csv(ctx.out_dir + "/gap.csv", {"iteration", "log_ratio"});
    for (std::size_t k = 0; k < est.log_ratios.size(); ++k)
        csv.row({double(k + 1), est.log_ratios[k]});
    std::cout << "gap " << fixture_name << " N=" << N << ": norm_estimate="
              << est.norm_estimate << " per_step=" << est.per_step << "\n";
    ctx.write("gap", cfg,
              json{{"norm_estimate", est.norm_estimate},
                   {"per_step", est.per_step},
                   {"iterations", est.iterations},
                   {"residual", est.residual}});
    return 0;
}

int run_iterate(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    (void)cfg.get<std::uint64_t>("seed", 1);
    const auto n_max = cfg.get<std::uint64_t>("iterate.n_max", 30);
    const auto n_r = cfg.get<int>("mesh.n_r", 128);
    const auto n_t = cfg.get<int>("mesh.n_theta", 256);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const auto grid = make_grid(n_r, n_t);
    const GridFunction h = GridFunction::sample(
        grid, [](const ProjPoint& p) { return sphere_coords(p)[0]; });
    const IterateReport rep = iterate_pullback_experiment(mu, h, n_max, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/iterate.csv", {"n", "w12_distance", "sup_distance", "c_partial"});
    for (const auto& rec : rep.sequence)
        csv.row({double(rec.n), rec.w12_distance, rec.sup_distance, rec.c_partial});
    std::cout << "iterate " << fixture_name << ": slope=" << rep.fit.slope
              << " r2=" << rep.fit.r_squared << "\n";
    ctx.write("iterate", cfg,
              json{{"slope", rep.fit.slope},
                   {"r_squared", rep.fit.r_squared},
                   {"c_limit", rep.c_limit},
                   {"fit_window", {rep.fit_lo, rep.fit_hi}}});
    return 0;
}

int run_equidistribute(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto n_max = cfg.get<std::uint64_t>("equid.n_max", 60);
    const auto trials = cfg.get<std::uint64_t>("equid.trials", 10000);
    const auto T = cfg.get<std::uint64_t>("equid.boundary_T", 60);
    const auto start = parse_point(cfg.get<std::string>("equid.start", "0,0"));
    const auto n_r = cfg.get<int>("mesh.n_r", 128);
    const auto n_t = cfg.get<int>("mesh.n_theta", 256);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const auto grid = make_grid(n_r, n_t);
    const GridFunction phi = GridFunction::sample(
        grid, [](const ProjPoint& p) { return sphere_coords(p)[0]; });
    const NuHarvest companions = nu_harvest(mu, T, trials, seed ^ 0x9e3779b9ULL, ctx.threads);
    const EquidistributionReport rep = equidistribution_experiment(
        mu, start, phi, companions.nu, n_max, trials, seed, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/equidistribute.csv", {"n", "value", "stderr"});
    for (const auto& rec : rep.sequence) csv.row({double(rec.n), rec.value, rec.stderr_});
    std::cout << "equidistribute " << fixture_name << ": slope=" << rep.fit.slope
              << " r2=" << rep.fit.r_squared << " window=" << rep.fit_hi << "\n";
    ctx.write("equidistribute", cfg,
              json{{"slope", rep.fit.slope},
                   {"r_squared", rep.fit.r_squared},
                   {"fit_hi", rep.fit_hi},
                   {"companions_unstable", companions.unstable_count}});
    return 0;
}

int run_lyapunov(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto n = cfg.get<std::uint64_t>("lyapunov.n", 1000);
    const auto trials = cfg.get<std::uint64_t>("lyapunov.trials", 10000);
    const auto T = cfg.get<std::uint64_t>("lyapunov.boundary_T", 60);
    const auto nu_samples = cfg.get<std::uint64_t>("lyapunov.nu_samples", 200000);
    const bool write_samples = cfg.get<bool>("lyapunov.write_samples", false);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const LyapunovReport king = lyapunov_kingman(mu, n, trials, seed, ctx.threads);
    const NuHarvest h = nu_harvest(mu, T, nu_samples, seed ^ 0x51ed2701ULL, ctx.threads);
    const LyapunovReport furst = lyapunov_furstenberg(mu, h.nu);
    const double combined = std::sqrt(king.stderr_ * king.stderr_ +
                                      furst.stderr_ * furst.stderr_);
    if (write_samples) {
        CsvWriter csv(ctx.out_dir + "/lyapunov_kingman_samples.csv", {"value"});
        // re-generate deterministically for the dump
        for (std::size_t t = 0; t < trials; ++t) {
            RngStream rng = RngStream::derive(seed, "kingman", t);
            RescaledProduct prod;
            for (std::size_t k = 0; k < n; ++k) prod.push_left(mu.draw(rng));
            csv.row({prod.log_operator_norm() / double(n)});
        }
    }
    std::cout << "lyapunov " << fixture_name << ": kingman=" << king.gamma_hat << "(+/-"
              << king.stderr_ << ") furstenberg=" << furst.gamma_hat << "(+/-" << furst.stderr_
              << ")\n";
    ctx.write("lyapunov", cfg,
              json{{"gamma_kingman", king.gamma_hat},
                   {"stderr_kingman", king.stderr_},
                   {"gamma_furstenberg", furst.gamma_hat},
                   {"stderr_furstenberg", furst.stderr_},
                   {"combined_stderr", combined},
                   {"discrepancy_sigmas",
                    std::abs(king.gamma_hat - furst.gamma_hat) / std::max(combined, 1e-300)}});
    return 0;
}

int run_clt(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto n = cfg.get<std::uint64_t>("clt.n", 2000);
    const auto trials = cfg.get<std::uint64_t>("clt.trials", 10000);
    const auto gamma_n = cfg.get<std::uint64_t>("clt.gamma_n", 1000);
    const auto gamma_trials = cfg.get<std::uint64_t>("clt.gamma_trials", 10000);
    const auto v = parse_point(cfg.get<std::string>("clt.v", "inf"));
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const LyapunovReport king = lyapunov_kingman(mu, gamma_n, gamma_trials, seed, ctx.threads);
    const CltReport rep = clt_experiment(mu, v, king.gamma_hat, n, trials, seed, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/clt_samples.csv", {"y"});
    for (double y : rep.samples) csv.row({y});
    std::cout << "clt " << fixture_name << ": ks=" << rep.ks_statistic
              << " sigma2=" << rep.sigma2_empirical << "\n";
    ctx.write("clt", cfg,
              json{{"gamma", king.gamma_hat},
                   {"ks_statistic", rep.ks_statistic},
                   {"sigma2_empirical", rep.sigma2_empirical}});
    return 0;
}

int run_variance(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto K = cfg.get<std::uint64_t>("variance.K", 25);
    const auto mc_samples = cfg.get<std::uint64_t>("variance.mc_samples", 200000);
    const auto T = cfg.get<std::uint64_t>("variance.boundary_T", 60);
    const auto gamma_n = cfg.get<std::uint64_t>("variance.gamma_n", 1000);
    const auto gamma_trials = cfg.get<std::uint64_t>("variance.gamma_trials", 10000);
    const auto n_r = cfg.get<int>("mesh.n_r", 128);
    const auto n_t = cfg.get<int>("mesh.n_theta", 256);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const auto grid = make_grid(n_r, n_t);
    const LyapunovReport king = lyapunov_kingman(mu, gamma_n, gamma_trials, seed, ctx.threads);
    const GreenKuboReport gk =
        green_kubo_variance(mu, king.gamma_hat, K, mc_samples, T, seed, grid, ctx.threads);
    const NuHarvest h = nu_harvest(mu, T, 100000, seed ^ 0x7777ULL, ctx.threads);
    const GordinTailReport tail = gordin_tail(mu, king.gamma_hat, K, h.nu, grid, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/gordin_tail.csv", {"n", "tail_norm"});
    for (std::size_t i = 0; i < tail.values.size(); ++i)
        csv.row({double(i + 1), tail.values[i]});
    std::cout << "variance " << fixture_name << ": sigma2_gk=" << gk.sigma2
              << " gordin_ratio=" << tail.fitted_ratio << "\n";
    ctx.write("variance", cfg,
              json{{"gamma", king.gamma_hat},
                   {"sigma2_green_kubo", gk.sigma2},
                   {"phi_tilde_mean", gk.phi_mean},
                   {"gordin_ratio", tail.fitted_ratio},
                   {"gordin_r_squared", tail.r_squared}});
    return 0;
}

int run_normcheck(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto n = cfg.get<std::uint64_t>("normcheck.n", 500);
    const auto trials = cfg.get<std::uint64_t>("normcheck.trials", 4000);
    const auto v = parse_point(cfg.get<std::string>("normcheck.v", "1,0"));
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const std::vector<double> deltas = {0.3, 0.1, 0.03, 0.01, 3e-3, 1e-3, 1e-4, 0.0};
    const auto table = norm_comparison_check(mu, v, n, trials, deltas, seed, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/normcheck.csv", {"delta", "fraction"});
    json rows = json::array();
    for (const auto& row : table) {
        csv.row({row.delta, row.fraction});
        rows.push_back({{"delta", row.delta}, {"fraction", row.fraction}});
    }
    std::cout << "normcheck " << fixture_name << ": fraction(1e-3)="
              << table[table.size() - 3].fraction << "\n";
    ctx.write("normcheck", cfg, json{{"table", rows}});
    return 0;
}

int run_regularity(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    const std::string fixture_name = cfg.get<std::string>("fixture", "schottky2");
    const auto seed = cfg.get<std::uint64_t>("seed", 1);
    const auto nu_samples = cfg.get<std::uint64_t>("regularity.nu_samples", 1000000);
    const auto T = cfg.get<std::uint64_t>("regularity.boundary_T", 60);
    const auto r_hi_log2 = cfg.get<int>("regularity.r_hi_log2", -2);
    const auto r_lo_log2 = cfg.get<int>("regularity.r_lo_log2", -7);
    const MatrixMeasure mu = resolve_fixture(fixture_name);
    const NuHarvest h = nu_harvest(mu, T, nu_samples, seed, ctx.threads);
    std::vector<double> radii;
    for (int e = r_hi_log2; e >= r_lo_log2; --e) radii.push_back(std::ldexp(1.0, e));
    std::vector<ProjPoint> centers = spread_centers(64);
    for (const auto& p : heavy_modes(h.nu, 16)) centers.push_back(p);
    const RegularityFit power =
        regularity_fit(h.nu, centers, radii, RegularityFit::Model::PowerLaw, ctx.threads);
    const RegularityFit logp =
        regularity_fit(h.nu, centers, radii, RegularityFit::Model::LogPower, ctx.threads);
    CsvWriter csv(ctx.out_dir + "/regularity.csv", {"r", "worst_mass"});
    for (std::size_t i = 0; i < power.r_grid.size(); ++i)
        csv.row({power.r_grid[i], power.worst_center_masses[i]});
    std::cout << "regularity " << fixture_name << ": alpha=" << power.alpha_hat
              << " r2=" << power.r_squared << "\n";
    ctx.write("regularity", cfg,
              json{{"power_alpha", power.alpha_hat},
                   {"power_c", power.c_hat},
                   {"power_r_squared", power.r_squared},
                   {"logpower_alpha", logp.alpha_hat},
                   {"logpower_r_squared", logp.r_squared},
                   {"unstable_boundary_samples", h.unstable_count}});
    return 0;
}

int run_checks(RunContext& ctx) {
    ExperimentConfig cfg = ctx.load();
    (void)cfg.get<std::uint64_t>("seed", 1);
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << (ok ? "PASS  " : "FAIL  ") << name << "\n";
        if (!ok) ++failures;
    };
    RngStream rng = RngStream::derive(7, "checks");
    auto random_element = [&](double scale) {
        GroupElement g(cplx(1.0 + scale * rng.normal(), scale * rng.normal()),
                       cplx(scale * rng.normal(), scale * rng.normal()),
                       cplx(scale * rng.normal(), scale * rng.normal()),
                       cplx(1.0 + scale * rng.normal(), scale * rng.normal()));
        return g;
    };

    {  // determinant drift over 1e6 compositions (balanced chain stays in range)
        GroupElement w = GroupElement::identity();
        const MatrixMeasure mu = fixture("schottky2");
        double worst = 0.0;
        RngStream r2 = RngStream::derive(11, "drift");
        for (int i = 0; i < 500000; ++i) {
            const GroupElement g = mu.draw(r2);
            w = compose(g, w);
            worst = std::max(worst, std::abs(w.det() - cplx(1.0)));
            w = compose(g.inverse(), w);
            worst = std::max(worst, std::abs(w.det() - cplx(1.0)));
        }
        check("det-1 drift < 1e-9 over 1e6 compositions", worst < 1e-9);
    }
    {  // classification is conjugation invariant
        bool ok = true;
        for (int i = 0; i < 10000 && ok; ++i) {
            const GroupElement g = random_element(0.7);
            const GroupElement h = random_element(0.7);
            ok = classify(compose(compose(h, g), h.inverse())) == classify(g);
        }
        check("classify invariant under 1e4 conjugations", ok);
    }
    {  // operator norm sub-multiplicativity
        bool ok = true;
        for (int i = 0; i < 10000 && ok; ++i) {
            const GroupElement g = random_element(0.5), h = random_element(0.5);
            ok = operator_norm(compose(g, h)) <=
                 operator_norm(g) * operator_norm(h) * (1.0 + 1e-12);
        }
        check("operator norm sub-multiplicative (1e4 pairs)", ok);
    }
    const auto grid = make_grid(128, 256);
    {
        const GridFunction one = GridFunction::constant(grid, 1.0);
        check("integrate(1) == 1 within 1e-6", std::abs(integrate(one) - 1.0) < 1e-6);
    }
    {
        bool ok = true;
        for (const char* name : {"schottky2", "elementary_rot", "elementary_diag",
                                 "parabolic_pair"}) {
            const MatrixMeasure mu = fixture(name);
            const GridFunction c = GridFunction::constant(grid, 1.7);
            const GridFunction pc = pullback_function(mu, c, ctx.threads);
            for (int chart = 0; chart < 2 && ok; ++chart)
                for (double v : pc.values[chart])
                    if (std::abs(v - 1.7) > 1e-12) {
                        ok = false;
                        break;
                    }
        }
        check("pullback preserves constants exactly", ok);
    }
    {
        bool ok = true;
        RngStream r3 = RngStream::derive(13, "forms");
        for (const char* name : {"schottky2", "elementary_rot", "elementary_diag",
                                 "parabolic_pair"}) {
            const MatrixMeasure mu = fixture(name);
            for (int t = 0; t < 10 && ok; ++t) {
                GridFunction f = random_bandlimited_function(grid, r3);
                const OneForm phi = del(f);
                const double before = l2_form_norm(phi);
                const double after = l2_form_norm(pullback_form(mu, phi, ctx.threads));
                ok = after <= before * (1.0 + 2e-3);
            }
        }
        check("form pullback does not expand L2 norms", ok);
    }
    {  // duality of exact pushforward and pullback
        const MatrixMeasure mu = fixture("schottky2");
        RngStream r4 = RngStream::derive(17, "duality");
        std::vector<ProjPoint> pts;
        for (int i = 0; i < 200; ++i)
            pts.push_back(ProjPoint(cplx(r4.normal(), r4.normal()),
                                    cplx(r4.normal(), r4.normal())));
        const EmpiricalMeasure m = EmpiricalMeasure::equal_weights(pts);
        const GridFunction f = random_bandlimited_function(grid, r4);
        const EmpiricalMeasure fm = pushforward_exact(mu, m);
        const double lhs = empirical_pairing(fm, f);
        const double rhs = empirical_pairing(m, pullback_function(mu, f, ctx.threads));
        check("pushforward/pullback duality within 1e-3", std::abs(lhs - rhs) < 1e-3);
    }
    {  // gap sub-multiplicativity across N and 2N (windows in the converged regime)
        const MatrixMeasure mu = fixture("schottky2");
        const GapEstimate g1 = gap_estimate(mu, grid, 1, 120, RngStream::derive(3, "g1"),
                                            ctx.threads);
        const GapEstimate g2 = gap_estimate(mu, grid, 2, 60, RngStream::derive(3, "g2"),
                                            ctx.threads);
        check("gap norm(2N) <= norm(N)^2 + 5e-3",
              g2.norm_estimate <= g1.norm_estimate * g1.norm_estimate + 5e-3);
    }
    {  // word sampling is deterministic given the stream
        const MatrixMeasure mu = fixture("parabolic_pair");
        RngStream a = RngStream::derive(23, "w"), b = RngStream::derive(23, "w");
        check("word_sample deterministic given seed",
              approx_equal_psl(word_sample(mu, 50, a), word_sample(mu, 50, b)));
    }
    ctx.write("checks", cfg, json{{"failures", failures}});
    std::cout << (failures == 0 ? "all checks passed\n" : "checks FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random products of SL2(C) matrices on the Riemann sphere"};
    app.require_subcommand(1);

    RunContext ctx;
    app.add_option("--config", ctx.config_path, "flat JSON config with dotted keys");
    app.add_option("--out", ctx.out_dir, "output directory");
    app.add_option("--threads", ctx.threads, "worker count (results thread-count independent)");
    auto* seed_opt = app.add_option("--seed", ctx.seed, "master seed (overrides config)");

    std::map<std::string, std::function<int(RunContext&)>> handlers = {
        {"classify", run_classify},       {"elementarity", run_elementarity},
        {"gap", run_gap},                 {"iterate", run_iterate},
        {"equidistribute", run_equidistribute}, {"lyapunov", run_lyapunov},
        {"clt", run_clt},                 {"variance", run_variance},
        {"normcheck", run_normcheck},     {"regularity", run_regularity},
        {"checks", run_checks},
    };
    for (auto& [name, fn] : handlers) app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);
    ctx.seed_from_cli = seed_opt->count() > 0;

    try {
        for (auto& [name, fn] : handlers)
            if (app.got_subcommand(name)) return fn(ctx);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "experiment error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
