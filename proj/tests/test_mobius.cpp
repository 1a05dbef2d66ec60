#include <catch2/catch_amalgamated.hpp>

#include "sl2dyn/mobius.hpp"

using namespace sl2dyn;

namespace {

GroupElement random_element(RngStream& rng, double scale = 1.0) {
    while (true) {
        const cplx a(1.0 + scale * rng.normal(), scale * rng.normal());
        const cplx b(scale * rng.normal(), scale * rng.normal());
        const cplx c(scale * rng.normal(), scale * rng.normal());
        const cplx d(1.0 + scale * rng.normal(), scale * rng.normal());
        if (std::abs(a * d - b * c) > 0.1) return GroupElement(a, b, c, d);
    }
}

ProjPoint random_point(RngStream& rng) {
    return ProjPoint(cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal()));
}

// independent largest-singular-value oracle: eigenvalues of g^H g by the
// quadratic formula on trace/determinant
double svd_norm_oracle(const GroupElement& g) {
    const double p = std::norm(g.a) + std::norm(g.c);
    const double r = std::norm(g.b) + std::norm(g.d);
    const cplx q = std::conj(g.a) * g.b + std::conj(g.c) * g.d;
    const double tr = p + r;
    const double det = p * r - std::norm(q);
    const double lam = 0.5 * (tr + std::sqrt(std::max(tr * tr - 4.0 * det, 0.0)));
    return std::sqrt(lam);
}

}  // namespace

TEST_CASE("compose basics and associativity") {
    RngStream rng = RngStream::derive(1, "mobius");
    const GroupElement g = random_element(rng);
    REQUIRE(approx_equal_psl(compose(GroupElement::identity(), g), g, 1e-12));

    const GroupElement d2 = diag_element(2.0);
    const GroupElement d4 = compose(d2, d2);
    REQUIRE(std::abs(d4.a - cplx(4.0)) < 1e-12);
    REQUIRE(std::abs(d4.d - cplx(0.25)) < 1e-12);

    for (int t = 0; t < 100; ++t) {
        const GroupElement A = random_element(rng), B = random_element(rng),
                           C = random_element(rng);
        const GroupElement lhs = compose(compose(A, B), C);
        const GroupElement rhs = compose(A, compose(B, C));
        REQUIRE(std::abs(lhs.a - rhs.a) < 1e-10);
        REQUIRE(std::abs(lhs.b - rhs.b) < 1e-10);
        REQUIRE(std::abs(lhs.c - rhs.c) < 1e-10);
        REQUIRE(std::abs(lhs.d - rhs.d) < 1e-10);
    }
}

TEST_CASE("determinant invariant survives long composition chains") {
    RngStream rng = RngStream::derive(2, "mobius");
    // balanced chain (g then g^-1) keeps the product in floating-point range
    // while exercising the renormalization a million times
    GroupElement w = GroupElement::identity();
    double worst = 0.0;
    for (int i = 0; i < 500000; ++i) {
        const GroupElement g = random_element(rng);
        w = compose(g, w);
        worst = std::max(worst, std::abs(w.det() - cplx(1.0)));
        w = compose(g.inverse(), w);
        worst = std::max(worst, std::abs(w.det() - cplx(1.0)));
    }
    REQUIRE(worst < 1e-9);
}

TEST_CASE("mobius action") {
    RngStream rng = RngStream::derive(3, "mobius");
    // diagonal acts as z -> lambda^2 z
    const double lam = 1.7;
    const GroupElement g = diag_element(lam);
    const ProjPoint p = ProjPoint::from_affine(cplx(0.3, -0.2));
    const ProjPoint gp = apply(g, p);
    REQUIRE(std::abs(gp.affine() - lam * lam * cplx(0.3, -0.2)) < 1e-12);

    // fixed point stays fixed
    const ProjPoint inf = ProjPoint::infinity_point();
    REQUIRE(spherical_distance(apply(g, inf), inf) < 1e-14);

    // inverse round trip
    for (int t = 0; t < 1000; ++t) {
        const GroupElement a = random_element(rng);
        const ProjPoint x = random_point(rng);
        REQUIRE(spherical_distance(apply(a.inverse(), apply(a, x)), x) < 1e-10);
    }
}

TEST_CASE("operator norm") {
    REQUIRE(operator_norm(diag_element(2.0)) == Catch::Approx(2.0).margin(1e-14));
    REQUIRE(operator_norm(rotation_z(0.83)) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(operator_norm(rotation_x(1.21)) == Catch::Approx(1.0).margin(1e-12));

    // unitary conjugation preserves singular values; oracle = direct 2x2 SVD
    const double s2 = 1.0 / std::sqrt(2.0);
    const GroupElement R(s2, -s2, s2, s2);
    const GroupElement conj = compose(compose(R, diag_element(2.0)), R.inverse());
    REQUIRE(operator_norm(conj) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(operator_norm(conj) == Catch::Approx(svd_norm_oracle(conj)).margin(1e-12));

    RngStream rng = RngStream::derive(4, "mobius");
    for (int t = 0; t < 500; ++t) {
        const GroupElement g = random_element(rng);
        REQUIRE(operator_norm(g) == Catch::Approx(svd_norm_oracle(g)).margin(1e-10));
        REQUIRE(operator_norm(g) >= 1.0 - 1e-12);
        REQUIRE(operator_norm(g.inverse()) == Catch::Approx(operator_norm(g)).margin(1e-10));
    }
}

TEST_CASE("operator norm sub-multiplicative") {
    RngStream rng = RngStream::derive(5, "mobius");
    for (int t = 0; t < 10000; ++t) {
        const GroupElement g = random_element(rng, 0.6), h = random_element(rng, 0.6);
        REQUIRE(operator_norm(compose(g, h)) <=
                operator_norm(g) * operator_norm(h) * (1.0 + 1e-12));
    }
}

TEST_CASE("cartan decomposition") {
    const CartanTriple tu = cartan(rotation_z(0.4));
    REQUIRE(tu.lambda == Catch::Approx(1.0).margin(1e-12));

    const CartanTriple td = cartan(diag_element(3.0));
    REQUIRE(td.lambda == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(std::abs(td.k.b) < 1e-10);  // diagonal unitary factors
    REQUIRE(std::abs(td.k_prime.b) < 1e-10);

    RngStream rng = RngStream::derive(6, "mobius");
    for (int t = 0; t < 1000; ++t) {
        const GroupElement g = random_element(rng);
        const CartanTriple ct = cartan(g);
        REQUIRE(is_unitary(ct.k, 1e-9));
        REQUIRE(is_unitary(ct.k_prime, 1e-9));
        REQUIRE(ct.lambda == Catch::Approx(operator_norm(g)).margin(1e-9));
        const GroupElement mid(ct.lambda, 0.0, 0.0, 1.0 / ct.lambda);
        const GroupElement rec = compose(compose(ct.k, mid), ct.k_prime);
        REQUIRE(approx_equal_psl(rec, g, 1e-10));
    }
}

TEST_CASE("trace classification") {
    REQUIRE(classify(diag_element(2.0)) == MobiusClass::Loxodromic);  // Tr^2 = 6.25
    REQUIRE(classify(GroupElement(1, 1, 0, 1)) == MobiusClass::Parabolic);
    REQUIRE(classify(rotation_z(pi / 2)) == MobiusClass::Elliptic);  // Tr^2 = 2
    REQUIRE(classify(GroupElement::identity()) == MobiusClass::Identity);
    REQUIRE(classify(GroupElement(-1, 0, 0, -1)) == MobiusClass::Identity);

    RngStream rng = RngStream::derive(7, "mobius");
    for (int t = 0; t < 10000; ++t) {
        const GroupElement g = random_element(rng, 0.7);
        const GroupElement h = random_element(rng, 0.7);
        REQUIRE(classify(compose(compose(h, g), h.inverse())) == classify(g));
    }
}

TEST_CASE("fixed points") {
    const auto fd = fixed_points(diag_element(2.0));
    REQUIRE(fd.size() == 2);
    const ProjPoint zero = ProjPoint::from_affine(0.0);
    const ProjPoint inf = ProjPoint::infinity_point();
    REQUIRE(std::min(spherical_distance(fd[0], zero), spherical_distance(fd[0], inf)) < 1e-12);
    REQUIRE(std::min(spherical_distance(fd[1], zero), spherical_distance(fd[1], inf)) < 1e-12);
    REQUIRE(spherical_distance(fd[0], fd[1]) > 0.5);

    const auto fp = fixed_points(GroupElement(1, 1, 0, 1));
    REQUIRE(fp.size() == 1);
    REQUIRE(spherical_distance(fp[0], inf) < 1e-12);

    REQUIRE_THROWS_AS(fixed_points(GroupElement::identity()), identity_input_error);

    RngStream rng = RngStream::derive(8, "mobius");
    int loxo_seen = 0;
    for (int t = 0; t < 2000 && loxo_seen < 500; ++t) {
        const GroupElement g = random_element(rng);
        if (classify(g) != MobiusClass::Loxodromic) continue;
        ++loxo_seen;
        for (const auto& p : fixed_points(g))
            REQUIRE(spherical_distance(apply(g, p), p) <= 1e-8);
    }
    REQUIRE(loxo_seen == 500);
}

TEST_CASE("loxodromic iterates converge to a fixed point") {
    RngStream rng = RngStream::derive(9, "mobius");
    for (int t = 0; t < 50; ++t) {
        const GroupElement g = random_element(rng);
        if (classify(g) != MobiusClass::Loxodromic) continue;
        const auto fps = fixed_points(g);
        ProjPoint x = random_point(rng);
        if (spherical_distance(x, fps[0]) < 1e-3 || spherical_distance(x, fps[1]) < 1e-3)
            continue;
        for (int k = 0; k < 400; ++k) x = apply(g, x);
        const double d = std::min(spherical_distance(x, fps[0]),
                                  spherical_distance(x, fps[1]));
        REQUIRE(d < 1e-6);
    }
}

TEST_CASE("spherical distance") {
    RngStream rng = RngStream::derive(10, "mobius");
    const ProjPoint p = random_point(rng);
    REQUIRE(spherical_distance(p, p) == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(spherical_distance(ProjPoint::from_affine(0.0), ProjPoint::infinity_point()) ==
            Catch::Approx(1.0).margin(1e-14));
    for (int t = 0; t < 1000; ++t) {
        const ProjPoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
        REQUIRE(spherical_distance(a, c) <=
                spherical_distance(a, b) + spherical_distance(b, c) + 1e-12);
        REQUIRE(spherical_distance(a, b) == Catch::Approx(spherical_distance(b, a)).margin(1e-14));
    }
}

TEST_CASE("theta cocycle") {
    RngStream rng = RngStream::derive(11, "mobius");
    for (int t = 0; t < 20; ++t)
        REQUIRE(theta(GroupElement::identity(), random_point(rng)) ==
                Catch::Approx(0.0).margin(1e-14));

    const GroupElement g = diag_element(2.0);
    REQUIRE(theta(g, ProjPoint::infinity_point()) == Catch::Approx(std::log(2.0)).margin(1e-12));

    // direct vector arithmetic oracle at [1:1]/sqrt(2): ||g v||^2 = (4 + 1/4)/2
    const ProjPoint diagp(cplx(1.0), cplx(1.0));
    REQUIRE(theta(g, diagp) == Catch::Approx(0.5 * std::log(4.25 / 2.0)).margin(1e-12));

    // |theta_g| <= log ||g||, with the sup attained on a dense grid
    for (int t = 0; t < 50; ++t) {
        const GroupElement a = random_element(rng);
        const double bound = std::log(operator_norm(a));
        double sup = 0.0;
        for (int k = 0; k < 4000; ++k) {
            const ProjPoint x = random_point(rng);
            const double v = std::abs(theta(a, x));
            REQUIRE(v <= bound + 1e-10);
            sup = std::max(sup, v);
        }
        REQUIRE(sup >= bound * 0.98 - 1e-3);
    }
}

TEST_CASE("psl canonicalization and keys") {
    RngStream rng = RngStream::derive(12, "mobius");
    for (int t = 0; t < 200; ++t) {
        const GroupElement g = random_element(rng);
        const GroupElement mg(-g.a, -g.b, -g.c, -g.d);
        REQUIRE(approx_equal_psl(g, mg));
        REQUIRE(psl_key(g) == psl_key(mg));
        const GroupElement h = random_element(rng);
        if (!approx_equal_psl(g, h)) REQUIRE(!(psl_key(g) == psl_key(h)));
    }
    const ProjPoint p(cplx(0.0, 0.7), cplx(0.5, -0.1));
    ProjPoint q = p;
    q.normalize();
    REQUIRE(std::abs(q.z0 - p.z0) < 1e-14);
    REQUIRE(std::abs(std::norm(p.z0) + std::norm(p.z1) - 1.0) < 1e-12);
}
