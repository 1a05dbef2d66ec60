#include <catch2/catch_amalgamated.hpp>

#include "sl2dyn/io.hpp"
#include "sl2dyn/measure.hpp"

using namespace sl2dyn;

TEST_CASE("moments") {
    const MatrixMeasure id = MatrixMeasure::dirac(GroupElement::identity());
    REQUIRE(moment(id, MomentSpec::power(1.0)).value == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(moment(id, MomentSpec::exponential(2.0)).value == Catch::Approx(1.0).margin(1e-14));

    // schottky2: both atoms have operator norm 2 (unitary conjugation)
    const MatrixMeasure sch = fixture("schottky2");
    for (const auto& g : sch.atoms) REQUIRE(operator_norm(g) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(moment(sch, MomentSpec::power(1.0)).value ==
            Catch::Approx(std::log(2.0)).margin(1e-12));

    const MatrixMeasure mixed =
        MatrixMeasure::atomic({diag_element(2.0), rotation_z(0.31)}, {0.5, 0.5});
    REQUIRE(moment(mixed, MomentSpec::power(1.0)).value ==
            Catch::Approx(0.5 * std::log(2.0)).margin(1e-12));

    // chi overflow on an atom signals an infinite moment numerically
    const MatrixMeasure huge = MatrixMeasure::dirac(diag_element(1e200));
    REQUIRE_THROWS_AS(moment(huge, MomentSpec::exponential(2.0)), non_finite_error);

    // sampler variant returns a Monte Carlo mean with stderr
    const MatrixMeasure samp = MatrixMeasure::from_sampler(
        [](RngStream& rng) { return diag_element(std::exp(0.2 + 0.05 * rng.normal())); });
    const MomentResult mr = moment(samp, MomentSpec::power(1.0), 20000, RngStream{5});
    REQUIRE(mr.stderr_ > 0.0);
    REQUIRE(std::abs(mr.value - 0.2) < 5.0 * mr.stderr_ + 1e-3);
}

TEST_CASE("moment sub-additivity under convolution") {
    const MatrixMeasure sch = fixture("schottky2");
    const double m1 = moment(sch, MomentSpec::power(1.0)).value;
    for (std::size_t n : {2u, 3u}) {
        const MatrixMeasure conv = convolution_power(sch, n);
        REQUIRE(moment(conv, MomentSpec::power(1.0)).value <= double(n) * m1 + 1e-12);
    }
}

TEST_CASE("word sampling") {
    const GroupElement g = diag_element(1.3);
    const MatrixMeasure dg = MatrixMeasure::dirac(g);
    RngStream rng = RngStream::derive(1, "words");
    REQUIRE(approx_equal_psl(word_sample(dg, 1, rng), g, 1e-12));
    GroupElement g5 = g;
    for (int i = 0; i < 4; ++i) g5 = compose(g, g5);
    REQUIRE(approx_equal_psl(word_sample(dg, 5, rng), g5, 1e-10));

    // n = 2 word law matches the exhaustive pair enumeration for schottky2
    const MatrixMeasure sch = fixture("schottky2");
    const MatrixMeasure pairs = convolution_power(sch, 2);
    REQUIRE(pairs.atoms.size() == 4);
    std::vector<std::size_t> counts(pairs.atoms.size(), 0);
    const std::size_t trials = 100000;
    for (std::size_t t = 0; t < trials; ++t) {
        RngStream tr = RngStream::derive(9, "word-law", t);
        const GroupElement w = word_sample(sch, 2, tr);
        for (std::size_t k = 0; k < pairs.atoms.size(); ++k)
            if (approx_equal_psl(w, pairs.atoms[k], 1e-9)) {
                ++counts[k];
                break;
            }
    }
    std::size_t total = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        total += counts[k];
        const double freq = double(counts[k]) / double(trials);
        const double expect = pairs.weights[k];
        const double sigma = std::sqrt(expect * (1 - expect) / double(trials));
        REQUIRE(std::abs(freq - expect) < 5.0 * sigma);
    }
    REQUIRE(total == trials);
}

TEST_CASE("convolution power") {
    const MatrixMeasure sch = fixture("schottky2");
    const MatrixMeasure c1 = convolution_power(sch, 1);
    REQUIRE(c1.atoms.size() == 2);

    const GroupElement g = diag_element(1.5);
    const MatrixMeasure d3 = convolution_power(MatrixMeasure::dirac(g), 3);
    REQUIRE(d3.atoms.size() == 1);
    REQUIRE(approx_equal_psl(d3.atoms[0], compose(g, compose(g, g)), 1e-10));

    // free pair: no merges at n = 2, each weight 1/4
    const MatrixMeasure c2 = convolution_power(sch, 2);
    REQUIRE(c2.atoms.size() == 4);
    for (double w : c2.weights) REQUIRE(w == Catch::Approx(0.25).margin(1e-12));

    // merging: diagonal measure words commute, so counts collapse
    const MatrixMeasure diag = fixture("elementary_diag");
    const MatrixMeasure dd = convolution_power(diag, 3);
    REQUIRE(dd.atoms.size() == 4);  // multiset {a^3, a^2 b, a b^2, b^3}
    double s = 0.0;
    for (double w : dd.weights) s += w;
    REQUIRE(s == Catch::Approx(1.0).margin(1e-12));

    REQUIRE_THROWS_AS(convolution_power(sch, 30, 1000), blowup_error);
}

TEST_CASE("find_loxodromic") {
    const MatrixMeasure dg = MatrixMeasure::dirac(diag_element(2.0));
    const auto w1 = find_loxodromic(dg, 3);
    REQUIRE(w1.has_value());
    REQUIRE(w1->word == Word{0});

    // two rotations about the same axis: never loxodromic
    const MatrixMeasure rots =
        MatrixMeasure::atomic({rotation_z(0.7), rotation_z(1.9)}, {0.5, 0.5});
    REQUIRE(!find_loxodromic(rots, 6).has_value());

    const auto w2 = find_loxodromic(fixture("schottky2"), 3);
    REQUIRE(w2.has_value());
    REQUIRE(w2->word.size() == 1);
    REQUIRE(classify(w2->element) == MobiusClass::Loxodromic);

    // parabolic pair needs length 2
    const auto w3 = find_loxodromic(fixture("parabolic_pair"), 4);
    REQUIRE(w3.has_value());
    REQUIRE(classify(w3->element) == MobiusClass::Loxodromic);
    REQUIRE(approx_equal_psl(word_to_element(fixture("parabolic_pair"), w3->word),
                             w3->element, 1e-9));
}

TEST_CASE("power products of loxodromic and elliptic become loxodromic") {
    // disjoint fixed sets: diag fixes {0, inf}, the x-rotation fixes {-1, 1}
    const GroupElement g = diag_element(2.0);
    const GroupElement h = rotation_x(1.0);
    bool found = false;
    GroupElement gp = g, hp = h;
    for (int N = 1; N <= 10 && !found; ++N) {
        if (classify(compose(gp, hp)) == MobiusClass::Loxodromic) found = true;
        gp = compose(gp, g);
        hp = compose(hp, h);
    }
    REQUIRE(found);
}

TEST_CASE("commutator of loxodromics sharing one fixed point is parabolic") {
    // g fixes {0, inf}; h fixes {0, 1.5}; exactly one common fixed point
    const GroupElement g = diag_element(2.0);
    const GroupElement h(2.0, 0.0, 1.0, 0.5);
    REQUIRE(classify(g) == MobiusClass::Loxodromic);
    REQUIRE(classify(h) == MobiusClass::Loxodromic);
    const auto fg = fixed_points(g), fh = fixed_points(h);
    int common = 0;
    for (const auto& p : fg)
        for (const auto& q : fh)
            if (spherical_distance(p, q) < 1e-10) ++common;
    REQUIRE(common == 1);
    const GroupElement comm = compose(compose(g, h), compose(g.inverse(), h.inverse()));
    REQUIRE(classify(comm) == MobiusClass::Parabolic);
}

TEST_CASE("elementarity verdicts on the fixtures") {
    const auto rot = elementarity_check(fixture("elementary_rot"), 5);
    REQUIRE(rot.status == ElementarityVerdict::Status::ElementaryCompact);

    const auto diag = elementarity_check(fixture("elementary_diag"), 5);
    REQUIRE(diag.status == ElementarityVerdict::Status::ElementaryFiniteOrbit);
    REQUIRE(diag.orbit.size() == 2);
    const ProjPoint zero = ProjPoint::from_affine(0.0), inf = ProjPoint::infinity_point();
    for (const auto& p : diag.orbit)
        REQUIRE(std::min(spherical_distance(p, zero), spherical_distance(p, inf)) < 1e-10);

    const auto sch = elementarity_check(fixture("schottky2"), 5);
    REQUIRE(sch.status == ElementarityVerdict::Status::NonElementary);
    REQUIRE(sch.witness.has_value());
    REQUIRE(classify(sch.witness->element) == MobiusClass::Loxodromic);
    REQUIRE(approx_equal_psl(word_to_element(fixture("schottky2"), sch.witness->word),
                             sch.witness->element, 1e-9));

    const auto par = elementarity_check(fixture("parabolic_pair"), 5);
    REQUIRE(par.status == ElementarityVerdict::Status::NonElementary);

    // sampler measures are refused
    const MatrixMeasure samp =
        MatrixMeasure::from_sampler([](RngStream&) { return diag_element(2.0); });
    REQUIRE_THROWS_AS(elementarity_check(samp, 3), config_error);
}

TEST_CASE("elementarity agrees between mu and its convolution powers") {
    for (const char* name : {"schottky2", "elementary_rot", "elementary_diag",
                             "parabolic_pair"}) {
        const MatrixMeasure mu = fixture(name);
        const bool base = elementarity_check(mu, 5).elementary();
        for (std::size_t n : {2u, 3u}) {
            const MatrixMeasure conv = convolution_power(mu, n);
            REQUIRE(elementarity_check(conv, n == 2 ? 3 : 2).elementary() == base);
        }
    }
}

TEST_CASE("schottky2 atoms have disjoint fixed sets {0,inf} vs {-1,1}") {
    const MatrixMeasure sch = fixture("schottky2");
    const auto fa = fixed_points(sch.atoms[0]);
    const auto fb = fixed_points(sch.atoms[1]);
    const ProjPoint m1 = ProjPoint::from_affine(-1.0), p1 = ProjPoint::from_affine(1.0);
    for (const auto& p : fb)
        REQUIRE(std::min(spherical_distance(p, m1), spherical_distance(p, p1)) < 1e-10);
    for (const auto& p : fa)
        for (const auto& q : fb) REQUIRE(spherical_distance(p, q) > 0.3);
}

TEST_CASE("measure JSON round trip and file fixtures") {
    const MatrixMeasure sch = fixture("schottky2");
    const json doc = measure_to_json(sch);
    const MatrixMeasure back = measure_from_json(doc);
    REQUIRE(back.atoms.size() == sch.atoms.size());
    for (std::size_t i = 0; i < sch.atoms.size(); ++i) {
        REQUIRE(approx_equal_psl(back.atoms[i], sch.atoms[i], 1e-12));
        REQUIRE(back.weights[i] == Catch::Approx(sch.weights[i]).margin(1e-15));
    }
    // bare-array form
    const MatrixMeasure bare = measure_from_json(doc.at("atoms"));
    REQUIRE(bare.atoms.size() == sch.atoms.size());

    REQUIRE_THROWS_AS(fixture("nope"), config_error);
}
