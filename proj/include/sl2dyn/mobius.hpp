#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sl2dyn/core.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// GroupElement: 2x2 complex matrix with det 1, acting on P^1 by z -> (az+b)/(cz+d).
// Stored values are an SL_2(C) representative; equality is modulo sign (PSL_2).
// ---------------------------------------------------------------------------

struct GroupElement {
    cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

    GroupElement() = default;
    GroupElement(cplx a_, cplx b_, cplx c_, cplx d_) : a(a_), b(b_), c(c_), d(d_) {
        renormalize();
    }

    static GroupElement identity() { return {}; }

    cplx det() const { return a * d - b * c; }
    cplx trace() const { return a + d; }

    // divide by a square root of det so |det - 1| stays below 1e-12.
    // The floating-point det of a product carries cancellation error
    // ~ ||g||^2 eps, so the correction is applied only while that error is
    // below the 1e-12 budget; the projective action is scale-free and long
    // products go through the rescaled carriers.
    void renormalize() {
        if (frobenius_sq() > 1e4) return;
        const cplx dt = det();
        if (std::abs(dt - cplx(1.0)) < 1e-15) return;
        const cplx s = std::sqrt(dt);
        a /= s;
        b /= s;
        c /= s;
        d /= s;
    }

    GroupElement inverse() const { return GroupElement(d, -b, -c, a); }

    double frobenius_sq() const {
        return std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    }
};

inline GroupElement compose(const GroupElement& g, const GroupElement& h) {
    return GroupElement(g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
                        g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d);
}

// largest singular value; for det 1 the singular values are L, 1/L with
// L^2 + 1/L^2 = |a|^2+|b|^2+|c|^2+|d|^2.
inline double operator_norm(const GroupElement& g) {
    const double s = g.frobenius_sq();
    if (s <= 2.0) return 1.0;
    return std::sqrt(0.5 * (s + std::sqrt(s * s - 4.0)));
}

// canonical SL_2 representative of the PSL_2 class: the first entry of
// (a,b,c,d) with modulus > tol gets positive real part (positive imaginary
// part when its real part vanishes).
inline GroupElement canonical_psl(const GroupElement& g) {
    const std::array<cplx, 4> e = {g.a, g.b, g.c, g.d};
    for (const cplx& v : e) {
        if (std::abs(v) > 1e-12) {
            double key = v.real();
            if (std::abs(key) <= 1e-12) key = v.imag();
            if (key < 0.0) return GroupElement(-g.a, -g.b, -g.c, -g.d);
            return g;
        }
    }
    return g;
}

inline bool approx_equal_psl(const GroupElement& g, const GroupElement& h, double tol = 1e-9) {
    auto close = [tol](const GroupElement& x, const GroupElement& y) {
        return std::abs(x.a - y.a) <= tol && std::abs(x.b - y.b) <= tol &&
               std::abs(x.c - y.c) <= tol && std::abs(x.d - y.d) <= tol;
    };
    const GroupElement mh(-h.a, -h.b, -h.c, -h.d);
    return close(g, h) || close(g, mh);
}

inline bool is_identity_psl(const GroupElement& g, double tol = 1e-9) {
    return approx_equal_psl(g, GroupElement::identity(), tol);
}

inline bool is_unitary(const GroupElement& g, double tol = 1e-9) {
    // g^H g = Id  <=>  |a|^2+|c|^2 = 1, |b|^2+|d|^2 = 1, conj(a)b + conj(c)d = 0
    return std::abs(std::norm(g.a) + std::norm(g.c) - 1.0) < tol &&
           std::abs(std::norm(g.b) + std::norm(g.d) - 1.0) < tol &&
           std::abs(std::conj(g.a) * g.b + std::conj(g.c) * g.d) < tol;
}

// snap-to-grid dedup key of the canonical representative (1e-9 grid)
struct PslKey {
    std::array<std::int64_t, 8> q{};
    bool operator==(const PslKey&) const = default;
};

inline PslKey psl_key(const GroupElement& g, double grid = 1e-9) {
    const GroupElement cg = canonical_psl(g);
    const std::array<cplx, 4> e = {cg.a, cg.b, cg.c, cg.d};
    PslKey k;
    for (int i = 0; i < 4; ++i) {
        k.q[2 * i] = std::llround(e[i].real() / grid);
        k.q[2 * i + 1] = std::llround(e[i].imag() / grid);
    }
    return k;
}

struct PslKeyHash {
    std::size_t operator()(const PslKey& k) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::int64_t v : k.q) {
            h ^= std::uint64_t(v);
            h *= 0x100000001b3ULL;
        }
        return std::size_t(h);
    }
};

// ---------------------------------------------------------------------------
// ProjPoint: unit homogeneous pair, phase fixed so the first coordinate with
// modulus > tol is real positive. Normalization is idempotent.
// ---------------------------------------------------------------------------

struct ProjPoint {
    cplx z0{0.0}, z1{1.0};

    ProjPoint() = default;
    ProjPoint(cplx h0, cplx h1) : z0(h0), z1(h1) { normalize(); }

    static ProjPoint from_affine(cplx z) { return ProjPoint(z, cplx(1.0)); }
    static ProjPoint infinity_point() { return ProjPoint(cplx(1.0), cplx(0.0)); }

    void normalize() {
        const double n = std::sqrt(std::norm(z0) + std::norm(z1));
        if (n == 0.0) {
            z0 = 0.0;
            z1 = 1.0;
            return;
        }
        z0 /= n;
        z1 /= n;
        cplx lead = (std::abs(z0) > 1e-12) ? z0 : z1;
        const double m = std::abs(lead);
        if (m > 0.0) {
            const cplx phase = std::conj(lead) / m;
            z0 *= phase;
            z1 *= phase;
        }
    }

    // affine coordinate z0/z1; infinity maps to a huge value
    cplx affine() const {
        if (std::abs(z1) < 1e-300) return cplx(1e300);
        return z0 / z1;
    }
};

inline ProjPoint apply(const GroupElement& g, const ProjPoint& p) {
    return ProjPoint(g.a * p.z0 + g.b * p.z1, g.c * p.z0 + g.d * p.z1);
}

// chordal metric on unit homogeneous representatives; diameter 1
inline double spherical_distance(const ProjPoint& p, const ProjPoint& q) {
    const double d = std::abs(p.z0 * q.z1 - p.z1 * q.z0);
    return std::min(d, 1.0);
}

// norm cocycle log ||g v|| / ||v|| for the unit lift v of p
inline double theta(const GroupElement& g, const ProjPoint& p) {
    const cplx w0 = g.a * p.z0 + g.b * p.z1;
    const cplx w1 = g.c * p.z0 + g.d * p.z1;
    return 0.5 * std::log(std::norm(w0) + std::norm(w1));
}

// unit vector in R^3 of the corresponding sphere point (handy for test functions)
inline std::array<double, 3> sphere_coords(const ProjPoint& p) {
    const cplx w = p.z0 * std::conj(p.z1);
    return {2.0 * w.real(), 2.0 * w.imag(), std::norm(p.z0) - std::norm(p.z1)};
}

// ---------------------------------------------------------------------------
// Cartan decomposition g = k diag(L, 1/L) k' with unitary k, k'
// ---------------------------------------------------------------------------

struct CartanTriple {
    GroupElement k;
    double lambda = 1.0;
    GroupElement k_prime;
};

inline CartanTriple cartan(const GroupElement& g) {
    // eigen-decomposition of H = g^H g (hermitian, det 1)
    const double p = std::norm(g.a) + std::norm(g.c);
    const double r = std::norm(g.b) + std::norm(g.d);
    const cplx q = std::conj(g.a) * g.b + std::conj(g.c) * g.d;
    const double mean = 0.5 * (p + r);
    const double disc = std::sqrt(std::max(0.25 * (p - r) * (p - r) + std::norm(q), 0.0));
    const double lam_sq = mean + disc;
    if (lam_sq <= 1.0 + 1e-14) {
        CartanTriple t;
        t.k = g;
        t.lambda = 1.0;
        t.k_prime = GroupElement::identity();
        return t;
    }
    const double lam = std::sqrt(lam_sq);
    // eigenvector of H for lam_sq: pick the better-conditioned formula
    cplx v0, v1;
    if (std::abs(lam_sq - p) > std::abs(lam_sq - r)) {
        v0 = q;
        v1 = cplx(lam_sq - p);
    } else {
        v0 = cplx(lam_sq - r);
        v1 = std::conj(q);
    }
    double vn = std::sqrt(std::norm(v0) + std::norm(v1));
    if (vn < 1e-300) {
        v0 = 1.0;
        v1 = 0.0;
        vn = 1.0;
    }
    v0 /= vn;
    v1 /= vn;
    // V = [v (-conj(v1), conj(v0))] is special unitary; k' = V^H, k = g V diag(1/L, L)
    const cplx u0 = -std::conj(v1), u1 = std::conj(v0);
    CartanTriple t;
    t.lambda = lam;
    t.k_prime = GroupElement(std::conj(v0), std::conj(v1), std::conj(u0), std::conj(u1));
    t.k = GroupElement((g.a * v0 + g.b * v1) / lam, (g.a * u0 + g.b * u1) * lam,
                       (g.c * v0 + g.d * v1) / lam, (g.c * u0 + g.d * u1) * lam);
    return t;
}

// ---------------------------------------------------------------------------
// trace classification (Appendix thresholds on Tr^2)
// ---------------------------------------------------------------------------

enum class MobiusClass { Identity, Parabolic, Elliptic, Loxodromic };

inline const char* to_string(MobiusClass c) {
    switch (c) {
        case MobiusClass::Identity: return "Identity";
        case MobiusClass::Parabolic: return "Parabolic";
        case MobiusClass::Elliptic: return "Elliptic";
        case MobiusClass::Loxodromic: return "Loxodromic";
    }
    return "?";
}

inline constexpr double classify_tolerance = 1e-9;

inline MobiusClass classify(const GroupElement& g) {
    if (is_identity_psl(g, classify_tolerance)) return MobiusClass::Identity;
    const cplx tr = g.trace();
    const cplx tr2 = tr * tr;
    if (std::abs(tr2 - cplx(4.0)) <= classify_tolerance) return MobiusClass::Parabolic;
    // distance from tr2 to the real segment [0,4]
    const double x = std::clamp(tr2.real(), 0.0, 4.0);
    const double dist = std::abs(tr2 - cplx(x));
    if (dist <= classify_tolerance) return MobiusClass::Elliptic;
    return MobiusClass::Loxodromic;
}

// fixed points: roots of c z^2 + (d-a) z - b = 0 in homogeneous form.
// Parabolic elements return the single fixed point.
inline std::vector<ProjPoint> fixed_points(const GroupElement& g) {
    if (is_identity_psl(g, classify_tolerance))
        throw identity_input_error("fixed_points: identity has no isolated fixed points");
    const MobiusClass cls = classify(g);
    const cplx A = g.c;
    const cplx B = g.d - g.a;
    const cplx C = -g.b;

    if (std::abs(A) < 1e-14) {
        // infinity is fixed
        std::vector<ProjPoint> out;
        out.push_back(ProjPoint::infinity_point());
        if (cls != MobiusClass::Parabolic && std::abs(B) > 1e-14) {
            out.emplace_back(-C, B);  // z = -C/B = b/(d-a)
        }
        return out;
    }
    const cplx disc = g.trace() * g.trace() - cplx(4.0);  // = B^2 - 4AC for det 1
    if (cls == MobiusClass::Parabolic) {
        return {ProjPoint(-B, 2.0 * A)};
    }
    cplx s = std::sqrt(disc);
    // pick the sign that avoids cancellation in -B +- s
    if (std::abs(-B + s) < std::abs(-B - s)) s = -s;
    const cplx r1 = (-B + s) / (2.0 * A);
    std::vector<ProjPoint> out;
    out.push_back(ProjPoint(r1, cplx(1.0)));
    if (std::abs(r1) > 1e-14) {
        out.push_back(ProjPoint(C / (A * r1), cplx(1.0)));  // product of roots = C/A
    } else {
        out.push_back(ProjPoint((-B - s), 2.0 * A));
    }
    return out;
}

// ---------------------------------------------------------------------------
// constructors for common elements
// ---------------------------------------------------------------------------

inline GroupElement diag_element(cplx lambda) {
    return GroupElement(lambda, 0.0, 0.0, cplx(1.0) / lambda);
}

// rotation by angle about the axis through 0/infinity (z -> e^{i angle} z)
inline GroupElement rotation_z(double angle) {
    const cplx e = std::exp(cplx(0.0, 0.5 * angle));
    return GroupElement(e, 0.0, 0.0, std::conj(e));
}

// rotation by angle about the axis through -1/1 on the sphere (x-axis)
inline GroupElement rotation_x(double angle) {
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    return GroupElement(cplx(c, 0.0), cplx(0.0, s), cplx(0.0, s), cplx(c, 0.0));
}

}  // namespace sl2dyn
