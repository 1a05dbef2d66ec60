#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sl2dyn/mobius.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// MatrixMeasure: atomic list or seeded generative sampler
// ---------------------------------------------------------------------------

struct MatrixMeasure {
    enum class Kind { Atomic, Sampler };
    Kind kind = Kind::Atomic;

    std::vector<GroupElement> atoms;
    std::vector<double> weights;

    std::function<GroupElement(RngStream&)> sampler;
    std::optional<double> moment_hint;

    static MatrixMeasure atomic(std::vector<GroupElement> gs, std::vector<double> ws) {
        MatrixMeasure m;
        m.kind = Kind::Atomic;
        m.atoms = std::move(gs);
        m.weights = std::move(ws);
        m.validate_atomic();
        return m;
    }

    static MatrixMeasure dirac(const GroupElement& g) { return atomic({g}, {1.0}); }

    static MatrixMeasure from_sampler(std::function<GroupElement(RngStream&)> draw,
                                      std::optional<double> hint = std::nullopt) {
        MatrixMeasure m;
        m.kind = Kind::Sampler;
        m.sampler = std::move(draw);
        m.moment_hint = hint;
        return m;
    }

    bool is_atomic() const { return kind == Kind::Atomic; }

    void validate_atomic() const {
        if (kind != Kind::Atomic) return;
        if (atoms.empty() || atoms.size() != weights.size())
            throw config_error("atomic measure: atoms/weights mismatch");
        double s = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw config_error("atomic measure: weights must be positive");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-12) throw config_error("atomic measure: weights must sum to 1");
        for (std::size_t i = 0; i < atoms.size(); ++i)
            for (std::size_t j = i + 1; j < atoms.size(); ++j)
                if (approx_equal_psl(atoms[i], atoms[j]))
                    throw config_error("atomic measure: atoms must be distinct in PSL2");
    }

    GroupElement draw(RngStream& rng) const {
        if (kind == Kind::Sampler) return sampler(rng);
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            acc += weights[i];
            if (u < acc) return atoms[i];
        }
        return atoms.back();
    }
};

// ---------------------------------------------------------------------------
// chi-moments (Def of moment classes)
// ---------------------------------------------------------------------------

struct MomentSpec {
    enum class Kind { Power, Exponential, Custom };
    Kind kind = Kind::Power;
    double p = 1.0;
    std::function<double(double)> chi_fn;

    static MomentSpec power(double p) { return {Kind::Power, p, nullptr}; }
    static MomentSpec exponential(double p) { return {Kind::Exponential, p, nullptr}; }
    static MomentSpec custom(std::function<double(double)> f) {
        return {Kind::Custom, 0.0, std::move(f)};
    }

    double chi(double s) const {
        switch (kind) {
            case Kind::Power: return std::pow(s, p);
            case Kind::Exponential: return std::exp(p * s);
            case Kind::Custom: return chi_fn(s);
        }
        return 0.0;
    }
};

struct MomentResult {
    double value = 0.0;
    double stderr_ = 0.0;  // zero for exact atomic sums
};

inline MomentResult moment(const MatrixMeasure& mu, const MomentSpec& spec,
                           std::size_t trials = 0, RngStream rng = RngStream{1}) {
    MomentResult out;
    if (mu.is_atomic()) {
        double s = 0.0;
        for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
            const double v = spec.chi(std::log(operator_norm(mu.atoms[i])));
            if (!std::isfinite(v)) throw non_finite_error("moment: chi overflows on an atom");
            s += mu.weights[i] * v;
        }
        out.value = s;
        return out;
    }
    if (trials < 1) throw config_error("moment: sampler variant needs trials >= 1");
    std::vector<double> vals(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const double v = spec.chi(std::log(operator_norm(mu.draw(rng))));
        if (!std::isfinite(v)) throw non_finite_error("moment: chi overflows on a sample");
        vals[t] = v;
    }
    const MeanErr me = mean_stderr(vals);
    out.value = me.mean;
    out.stderr_ = me.stderr_;
    return out;
}

// g_n ... g_1 with g_i iid ~ mu (deterministic given the stream)
inline GroupElement word_sample(const MatrixMeasure& mu, std::size_t n, RngStream& rng) {
    if (n < 1) throw config_error("word_sample: n >= 1 required");
    GroupElement w = mu.draw(rng);
    for (std::size_t i = 1; i < n; ++i) w = compose(mu.draw(rng), w);
    return w;
}

// ---------------------------------------------------------------------------
// exact convolution power with PSL2 dedup merging
// ---------------------------------------------------------------------------

inline MatrixMeasure convolution_power(const MatrixMeasure& mu, std::size_t n,
                                       std::size_t max_atoms = 100000) {
    if (!mu.is_atomic()) throw config_error("convolution_power: atomic measure required");
    if (n < 1) throw config_error("convolution_power: n >= 1 required");
    std::vector<GroupElement> cur = mu.atoms;
    std::vector<double> curw = mu.weights;
    for (std::size_t step = 1; step < n; ++step) {
        std::unordered_map<PslKey, std::size_t, PslKeyHash> index;
        std::vector<GroupElement> next;
        std::vector<double> nextw;
        for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
            for (std::size_t j = 0; j < cur.size(); ++j) {
                const GroupElement prod = compose(mu.atoms[i], cur[j]);
                const double w = mu.weights[i] * curw[j];
                const PslKey key = psl_key(prod);
                auto it = index.find(key);
                if (it == index.end()) {
                    if (next.size() >= max_atoms)
                        throw blowup_error("convolution_power: atom bound exceeded");
                    index.emplace(key, next.size());
                    next.push_back(prod);
                    nextw.push_back(w);
                } else {
                    nextw[it->second] += w;
                }
            }
        }
        cur = std::move(next);
        curw = std::move(nextw);
    }
    MatrixMeasure out;
    out.kind = MatrixMeasure::Kind::Atomic;
    out.atoms = std::move(cur);
    out.weights = std::move(curw);
    return out;
}

// ---------------------------------------------------------------------------
// loxodromic word search (breadth-first words plus commutator and power-product probes)
// ---------------------------------------------------------------------------

// word encoding: index i >= 0 means atom i; ~i (negative) means atom i inverse
using Word = std::vector<int>;

inline GroupElement word_to_element(const MatrixMeasure& mu, const Word& w) {
    GroupElement out = GroupElement::identity();
    for (int idx : w) {
        const GroupElement g = idx >= 0 ? mu.atoms[std::size_t(idx)]
                                        : mu.atoms[std::size_t(~idx)].inverse();
        out = compose(g, out);
    }
    return out;
}

struct LoxodromicWitness {
    Word word;
    GroupElement element;
};

namespace detail {

struct WordLevel {
    std::vector<GroupElement> elems;
    std::vector<Word> words;
};

// dedup'd words of length exactly L, built level by level
inline std::vector<WordLevel> enumerate_levels(const MatrixMeasure& mu, std::size_t max_len,
                                               std::size_t cap = 20000) {
    std::vector<WordLevel> levels;
    std::unordered_map<PslKey, char, PslKeyHash> seen;
    WordLevel l1;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        const PslKey k = psl_key(mu.atoms[i]);
        if (seen.emplace(k, 1).second) {
            l1.elems.push_back(mu.atoms[i]);
            l1.words.push_back({int(i)});
        }
    }
    levels.push_back(std::move(l1));
    for (std::size_t len = 2; len <= max_len; ++len) {
        WordLevel next;
        for (std::size_t j = 0; j < levels.back().elems.size(); ++j) {
            for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
                const GroupElement prod = compose(mu.atoms[i], levels.back().elems[j]);
                const PslKey k = psl_key(prod);
                if (!seen.emplace(k, 1).second) continue;
                Word w = levels.back().words[j];
                w.push_back(int(i));
                next.elems.push_back(prod);
                next.words.push_back(std::move(w));
                if (seen.size() > cap) return levels;
            }
        }
        if (next.elems.empty()) break;
        levels.push_back(std::move(next));
    }
    return levels;
}

}  // namespace detail

inline std::optional<LoxodromicWitness> find_loxodromic(const MatrixMeasure& mu,
                                                        std::size_t max_len,
                                                        std::size_t power_search = 8) {
    if (!mu.is_atomic()) throw config_error("find_loxodromic: atomic measure required");
    if (max_len < 1) throw config_error("find_loxodromic: max_len >= 1 required");
    const auto levels = detail::enumerate_levels(mu, max_len);
    for (const auto& lvl : levels) {
        for (std::size_t j = 0; j < lvl.elems.size(); ++j) {
            if (classify(lvl.elems[j]) == MobiusClass::Loxodromic)
                return LoxodromicWitness{lvl.words[j], lvl.elems[j]};
        }
        // probes on pairs of this level's elements: commutators g h g^-1 h^-1
        // and power products g^N h^N
        for (std::size_t x = 0; x < lvl.elems.size(); ++x) {
            for (std::size_t y = 0; y < lvl.elems.size(); ++y) {
                if (x == y) continue;
                const GroupElement &g = lvl.elems[x], &h = lvl.elems[y];
                const GroupElement comm =
                    compose(compose(g, h), compose(g.inverse(), h.inverse()));
                if (classify(comm) == MobiusClass::Loxodromic) {
                    Word w;
                    for (int idx : lvl.words[y]) w.push_back(~idx);  // h^-1 (reversed below)
                    std::reverse(w.begin(), w.end());
                    Word gi;
                    for (int idx : lvl.words[x]) gi.push_back(~idx);
                    std::reverse(gi.begin(), gi.end());
                    w.insert(w.end(), gi.begin(), gi.end());
                    w.insert(w.end(), lvl.words[y].begin(), lvl.words[y].end());
                    w.insert(w.end(), lvl.words[x].begin(), lvl.words[x].end());
                    return LoxodromicWitness{w, comm};
                }
                GroupElement gp = g, hp = h;
                for (std::size_t N = 1; N <= power_search; ++N) {
                    const GroupElement prod = compose(gp, hp);
                    if (classify(prod) == MobiusClass::Loxodromic) {
                        Word w;
                        for (std::size_t rep = 0; rep < N; ++rep)
                            w.insert(w.end(), lvl.words[y].begin(), lvl.words[y].end());
                        for (std::size_t rep = 0; rep < N; ++rep)
                            w.insert(w.end(), lvl.words[x].begin(), lvl.words[x].end());
                        return LoxodromicWitness{w, prod};
                    }
                    gp = compose(gp, g);
                    hp = compose(hp, h);
                }
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// elementarity verdict (compact / finite orbit / non-elementary / inconclusive)
// ---------------------------------------------------------------------------

struct ElementarityVerdict {
    enum class Status { ElementaryCompact, ElementaryFiniteOrbit, NonElementary, Inconclusive };
    Status status = Status::Inconclusive;
    std::vector<ProjPoint> orbit;                  // FiniteOrbit payload
    std::optional<LoxodromicWitness> witness;      // NonElementary payload
    std::size_t depth_searched = 0;

    bool elementary() const {
        return status == Status::ElementaryCompact || status == Status::ElementaryFiniteOrbit;
    }
};

inline const char* to_string(ElementarityVerdict::Status s) {
    using S = ElementarityVerdict::Status;
    switch (s) {
        case S::ElementaryCompact: return "ElementaryCompact";
        case S::ElementaryFiniteOrbit: return "ElementaryFiniteOrbit";
        case S::NonElementary: return "NonElementary";
        case S::Inconclusive: return "Inconclusive";
    }
    return "?";
}

inline ElementarityVerdict elementarity_check(const MatrixMeasure& mu, std::size_t max_len = 6) {
    if (!mu.is_atomic())
        throw config_error("elementarity_check: atomic measure required (sampler refused)");
    ElementarityVerdict out;
    out.depth_searched = max_len;

    const auto levels = detail::enumerate_levels(mu, max_len);

    // (a) all words elliptic/identity + invariant-form averaging converges
    bool all_elliptic = true;
    for (const auto& lvl : levels)
        for (const auto& e : lvl.elems) {
            const MobiusClass c = classify(e);
            if (c != MobiusClass::Elliptic && c != MobiusClass::Identity) all_elliptic = false;
        }
    if (all_elliptic) {
        // running average of w^H w over words, level by level; converged when
        // the relative Frobenius change between consecutive levels is < 1e-6
        double sum00 = 0.0, sum11 = 0.0;
        cplx sum01 = 0.0;
        std::size_t count = 0;
        double prev00 = 0.0, prev11 = 0.0;
        cplx prev01 = 0.0;
        bool converged = false;
        for (std::size_t li = 0; li < levels.size(); ++li) {
            for (const auto& e : levels[li].elems) {
                sum00 += std::norm(e.a) + std::norm(e.c);
                sum01 += std::conj(e.a) * e.b + std::conj(e.c) * e.d;
                sum11 += std::norm(e.b) + std::norm(e.d);
                ++count;
            }
            const double c00 = sum00 / double(count), c11 = sum11 / double(count);
            const cplx c01 = sum01 / double(count);
            if (li > 0) {
                const double diff = std::sqrt((c00 - prev00) * (c00 - prev00) +
                                              (c11 - prev11) * (c11 - prev11) +
                                              2.0 * std::norm(c01 - prev01));
                const double scale =
                    std::sqrt(c00 * c00 + c11 * c11 + 2.0 * std::norm(c01));
                if (diff / std::max(scale, 1e-300) < 1e-6) converged = true;
            }
            prev00 = c00;
            prev11 = c11;
            prev01 = c01;
        }
        if (converged || levels.size() == 1) {
            out.status = ElementarityVerdict::Status::ElementaryCompact;
            return out;
        }
    }

    // (b) invariant finite set of size <= 2 from atom fixed points
    std::vector<ProjPoint> pts;
    for (const auto& g : mu.atoms) {
        if (is_identity_psl(g)) continue;
        for (const auto& p : fixed_points(g)) {
            bool dup = false;
            for (const auto& q : pts)
                if (spherical_distance(p, q) <= 1e-8) dup = true;
            if (!dup) pts.push_back(p);
        }
    }
    auto set_invariant = [&](const std::vector<ProjPoint>& s) {
        for (const auto& g : mu.atoms) {
            for (const auto& p : s) {
                const ProjPoint ip = apply(g, p);
                bool found = false;
                for (const auto& q : s)
                    if (spherical_distance(ip, q) <= 1e-8) found = true;
                if (!found) return false;
            }
        }
        return true;
    };
    // pairs first: a common fixed pair is reported over either of its points
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (set_invariant({pts[i], pts[j]})) {
                out.status = ElementarityVerdict::Status::ElementaryFiniteOrbit;
                out.orbit = {pts[i], pts[j]};
                return out;
            }
    for (const auto& p : pts) {
        if (set_invariant({p})) {
            out.status = ElementarityVerdict::Status::ElementaryFiniteOrbit;
            out.orbit = {p};
            return out;
        }
    }

    // (c) two loxodromic words with disjoint fixed sets
    std::vector<LoxodromicWitness> loxo;
    for (const auto& lvl : levels)
        for (std::size_t j = 0; j < lvl.elems.size(); ++j)
            if (classify(lvl.elems[j]) == MobiusClass::Loxodromic)
                loxo.push_back({lvl.words[j], lvl.elems[j]});
    if (auto probe = find_loxodromic(mu, max_len); probe && loxo.empty()) loxo.push_back(*probe);
    for (std::size_t x = 0; x < loxo.size(); ++x) {
        const auto fx = fixed_points(loxo[x].element);
        for (std::size_t y = x + 1; y < loxo.size(); ++y) {
            const auto fy = fixed_points(loxo[y].element);
            bool disjoint = true;
            for (const auto& p : fx)
                for (const auto& q : fy)
                    if (spherical_distance(p, q) <= 1e-6) disjoint = false;
            if (disjoint) {
                out.status = ElementarityVerdict::Status::NonElementary;
                out.witness = loxo[x];
                return out;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// built-in fixtures
// ---------------------------------------------------------------------------

inline MatrixMeasure fixture(const std::string& name) {
    const double s2 = 1.0 / std::sqrt(2.0);
    if (name == "schottky2") {
        const GroupElement A = diag_element(2.0);
        const GroupElement R(s2, -s2, s2, s2);
        const GroupElement B = compose(compose(R, A), R.inverse());
        return MatrixMeasure::atomic({A, B}, {0.5, 0.5});
    }
    if (name == "elementary_rot") {
        // two small rotations about distinct axes; the generated subgroup is
        // dense in PSU(2) but every word is an isometry. Larger angle pairs
        // exhibit a genuine uniform spectral gap on forms, which would mask
        // the no-gap side of the elementary/non-elementary dichotomy.
        return MatrixMeasure::atomic({rotation_z(0.0125), rotation_x(0.02)}, {0.5, 0.5});
    }
    if (name == "elementary_diag") {
        return MatrixMeasure::atomic({diag_element(2.0), diag_element(3.0)}, {0.5, 0.5});
    }
    if (name == "parabolic_pair") {
        return MatrixMeasure::atomic({GroupElement(1, 2, 0, 1), GroupElement(1, 0, 2, 1)},
                                     {0.5, 0.5});
    }
    throw config_error("unknown fixture: " + name);
}

}  // namespace sl2dyn
