#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sl2dyn {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// errors named by the operation contracts
// ---------------------------------------------------------------------------

struct identity_input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct blowup_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct non_finite_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct unresolved_radius_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct diverged_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct overflow_probe_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct empty_region_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct elementary_measure_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct unstable_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct moment_violation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct not_converged_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct underresolved_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// seeded RNG: xoshiro256++ with splitmix64 stream derivation.
// Streams are derived from (master seed, label, index) so trial-parallel
// loops are reproducible at any thread count.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RngStream {
  public:
    RngStream() : RngStream(0xdeadbeefULL) {}

    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
    }

    static RngStream derive(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
        std::uint64_t sm = master;
        sm ^= fnv1a64(label) + 0x9e3779b97f4a7c15ULL;
        (void)splitmix64(sm);
        sm ^= index * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
        RngStream r;
        for (auto& w : r.state_) w = splitmix64(sm);
        r.have_normal_ = false;
        return r;
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform index in [0, n)
    std::size_t uniform_index(std::size_t n) {
        return std::size_t(uniform() * double(n)) % n;
    }

    // standard normal via Box-Muller (no libstdc++ distribution, keeps streams portable)
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        have_normal_ = true;
        cached_ = r * std::sin(2.0 * pi * u2);
        return r * std::cos(2.0 * pi * u2);
    }

  private:
    std::uint64_t state_[4] = {1, 2, 3, 4};
    bool have_normal_ = false;
    double cached_ = 0.0;
};

// ---------------------------------------------------------------------------
// small statistics helpers
// ---------------------------------------------------------------------------

struct MeanErr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline MeanErr mean_stderr(std::span<const double> xs) {
    MeanErr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / double(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    return out;
}

inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= double(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / double(xs.size() - 1);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    LineFit f;
    f.n = std::min(xs.size(), ys.size());
    if (f.n < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double n = double(f.n);
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ym = sy / n;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double pred = f.slope * xs[i] + f.intercept;
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - ym) * (ys[i] - ym);
    }
    // constant data explains nothing
    f.r_squared = (ss_tot > 1e-300) ? 1.0 - ss_res / ss_tot : 0.0;
    return f;
}

inline double normal_cdf(double x, double mean, double var) {
    return 0.5 * (1.0 + std::erf((x - mean) / std::sqrt(2.0 * var)));
}

// Kolmogorov-Smirnov statistic of a sample against N(mean, var); sorts a copy.
inline double ks_statistic_gaussian(std::vector<double> xs, double mean, double var) {
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ph = normal_cdf(xs[i], mean, var);
        d = std::max(d, std::abs((double(i) + 1.0) / n - ph));
        d = std::max(d, std::abs(double(i) / n - ph));
    }
    return d;
}

// two-sample KS
inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

}  // namespace sl2dyn
