#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "sl2dyn/mobius.hpp"

namespace sl2dyn {

// ---------------------------------------------------------------------------
// SphereGrid: two stereographic polar charts of radius 1.2 (z and w = 1/z)
// glued by a cosine partition of unity in log|.|, with quadrature weights for
// the mass-one Fubini-Study form and for the raw flat density i dz^dzbar.
// ---------------------------------------------------------------------------

class SphereGrid {
  public:
    static constexpr double chart_radius = 1.2;

    SphereGrid(int n_r, int n_t) : n_r_(n_r), n_t_(n_t) {
        if (n_r < 8 || n_t < 8 || n_t % 2 != 0)
            throw config_error("SphereGrid: need n_r >= 8 and even n_t >= 8");
        dr_ = chart_radius / n_r;
        dt_ = 2.0 * pi / n_t;
        r_.resize(n_r);
        for (int i = 0; i < n_r; ++i) r_[i] = (i + 0.5) * dr_;
        theta_.resize(n_t);
        for (int j = 0; j < n_t; ++j) theta_[j] = j * dt_;
        chi_.resize(nodes());
        w_fs_.resize(nodes());
        w_flat_.resize(nodes());
        double total = 0.0;
        for (int i = 0; i < n_r; ++i) {
            const double c = chi_of_radius(r_[i]);
            const double cell = r_[i] * dr_ * dt_;
            const double fs_density = (1.0 / pi) / ((1.0 + r_[i] * r_[i]) * (1.0 + r_[i] * r_[i]));
            for (int j = 0; j < n_t; ++j) {
                const int id = i * n_t + j;
                chi_[id] = c;
                w_fs_[id] = c * fs_density * cell;
                w_flat_[id] = c * 2.0 * cell;
                total += w_fs_[id];
            }
        }
        total *= 2.0;  // two symmetric charts
        for (auto& w : w_fs_) w /= total;  // exact unit total mass
    }

    int radial_count() const { return n_r_; }
    int angular_count() const { return n_t_; }
    int nodes() const { return n_r_ * n_t_; }
    double dr() const { return dr_; }
    double dtheta() const { return dt_; }
    double radius(int i) const { return r_[i]; }
    double angle(int j) const { return theta_[j]; }
    double chi(int id) const { return chi_[id]; }
    double fs_weight(int id) const { return w_fs_[id]; }
    double flat_weight(int id) const { return w_flat_[id]; }
    double mesh_size() const { return dr_; }

    // partition weight of the chart containing a point at coordinate modulus r
    static double chi_of_radius(double r) {
        const double l = std::log(chart_radius);
        if (r <= 0.0) return 1.0;
        const double s = std::log(r);
        if (s <= -l) return 1.0;
        if (s >= l) return 0.0;
        return 0.5 * (1.0 + std::cos(pi * (s + l) / (2.0 * l)));
    }

    cplx node_coord(int id) const {
        const int i = id / n_t_, j = id % n_t_;
        return std::polar(r_[i], theta_[j]);
    }

    // sphere point of a node; chart 0 carries coordinate z, chart 1 carries w = 1/z
    ProjPoint node_point(int chart, int id) const {
        const cplx u = node_coord(id);
        return chart == 0 ? ProjPoint(u, cplx(1.0)) : ProjPoint(cplx(1.0), u);
    }

  private:
    int n_r_, n_t_;
    double dr_, dt_;
    std::vector<double> r_, theta_, chi_, w_fs_, w_flat_;
};

inline std::shared_ptr<const SphereGrid> make_grid(int n_r = 128, int n_t = 256) {
    return std::make_shared<const SphereGrid>(n_r, n_t);
}

// ---------------------------------------------------------------------------
// grid fields
// ---------------------------------------------------------------------------

template <class T>
struct GridField {
    std::shared_ptr<const SphereGrid> grid;
    std::array<std::vector<T>, 2> values;  // per chart, row-major (i * n_t + j)

    GridField() = default;
    explicit GridField(std::shared_ptr<const SphereGrid> g) : grid(std::move(g)) {
        values[0].assign(std::size_t(grid->nodes()), T{});
        values[1].assign(std::size_t(grid->nodes()), T{});
    }
};

struct GridFunction : GridField<double> {
    using GridField<double>::GridField;

    template <class F>
    static GridFunction sample(std::shared_ptr<const SphereGrid> g, F&& point_fn) {
        GridFunction out(std::move(g));
        for (int chart = 0; chart < 2; ++chart)
            for (int id = 0; id < out.grid->nodes(); ++id)
                out.values[chart][std::size_t(id)] =
                    point_fn(out.grid->node_point(chart, id));
        return out;
    }

    static GridFunction constant(std::shared_ptr<const SphereGrid> g, double c) {
        GridFunction out(std::move(g));
        out.values[0].assign(out.values[0].size(), c);
        out.values[1].assign(out.values[1].size(), c);
        return out;
    }
};

// coefficient of dz on chart 0 and of dw on chart 1
struct OneForm : GridField<cplx> {
    using GridField<cplx>::GridField;
};

// ---------------------------------------------------------------------------
// interpolation: bicubic Catmull-Rom in (r, theta) with polar wrap below the
// first ring (ring -1 is ring 0 at theta + pi) and clamping at the chart rim.
// Reads of a sphere point blend both charts with the partition weights, which
// keeps every grid operator an average of single-chart reads.
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<double, 4> catmull_weights(double f) {
    const double f2 = f * f, f3 = f2 * f;
    return {-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0,
            -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2};
}

template <class T>
T read_chart(const SphereGrid& g, const std::vector<T>& vals, cplx y) {
    const int n_r = g.radial_count(), n_t = g.angular_count();
    const double r = std::abs(y);
    double t = std::atan2(y.imag(), y.real());
    if (t < 0.0) t += 2.0 * pi;
    const double x = r / g.dr() - 0.5;
    int i0 = int(std::floor(x));
    const double fi = x - i0;
    const double jj = t / g.dtheta();
    int j0 = int(std::floor(jj)) % n_t;
    if (j0 < 0) j0 += n_t;
    const double fj = jj - std::floor(jj);
    const auto wr = catmull_weights(std::clamp(fi, 0.0, 1.0));
    const auto wt = catmull_weights(fj);
    T acc{};
    for (int a = 0; a < 4; ++a) {
        int ri = i0 + (a - 1);
        int shift = 0;
        if (ri < 0) {  // polar continuation through the origin
            ri = -1 - ri;
            shift = n_t / 2;
        }
        if (ri > n_r - 1) ri = n_r - 1;
        const T* row = vals.data() + std::size_t(ri) * n_t;
        const int jb = j0 + shift;
        T rowacc{};
        for (int b = 0; b < 4; ++b) {
            int j = (jb + (b - 1)) % n_t;
            if (j < 0) j += n_t;
            rowacc += wt[std::size_t(b)] * row[j];
        }
        acc += wr[std::size_t(a)] * rowacc;
    }
    return acc;
}

}  // namespace detail

// blended read of a scalar grid function at the point with chart-0 affine
// value num/den (homogeneous input keeps poles finite)
inline double read_function(const GridFunction& f, cplx num, cplx den) {
    const SphereGrid& g = *f.grid;
    const double an = std::abs(num), ad = std::abs(den);
    double c0;
    if (ad == 0.0)
        c0 = 0.0;
    else if (an == 0.0)
        c0 = 1.0;
    else
        c0 = SphereGrid::chi_of_radius(an / ad);
    const double c1 = 1.0 - c0;
    double out = 0.0;
    if (c0 > 0.0) out += c0 * detail::read_chart(g, f.values[0], num / den);
    if (c1 > 0.0) out += c1 * detail::read_chart(g, f.values[1], den / num);
    return out;
}

inline double read_function_at(const GridFunction& f, const ProjPoint& p) {
    return read_function(f, p.z0, p.z1);
}

// 4th-order-flat low-pass ([-1,4,10,4,-1]/16 in each grid direction): response
// 1 - O((k dx)^4) on smooth content, exactly 0 at the grid Nyquist frequency.
template <class T>
inline void grid_lowpass(GridField<T>& f) {
    const SphereGrid& g = *f.grid;
    const int n_r = g.radial_count(), n_t = g.angular_count();
    static const double k[5] = {-1.0 / 16, 4.0 / 16, 10.0 / 16, 4.0 / 16, -1.0 / 16};
    std::vector<T> tmp(std::size_t(n_r) * n_t);
    for (int chart = 0; chart < 2; ++chart) {
        auto& v = f.values[chart];
        // theta pass (periodic)
        for (int i = 0; i < n_r; ++i) {
            const T* row = v.data() + std::size_t(i) * n_t;
            T* out = tmp.data() + std::size_t(i) * n_t;
            for (int j = 0; j < n_t; ++j) {
                T acc{};
                for (int m = -2; m <= 2; ++m) {
                    int jj = (j + m) % n_t;
                    if (jj < 0) jj += n_t;
                    acc += k[m + 2] * row[jj];
                }
                out[j] = acc;
            }
        }
        // radial pass: pole wrap below ring 0, replicate at the rim
        for (int i = 0; i < n_r; ++i) {
            for (int j = 0; j < n_t; ++j) {
                T acc{};
                for (int m = -2; m <= 2; ++m) {
                    int ri = i + m;
                    int jj = j;
                    if (ri < 0) {
                        ri = -1 - ri;
                        jj = (j + n_t / 2) % n_t;
                    }
                    if (ri > n_r - 1) ri = n_r - 1;
                    acc += k[m + 2] * tmp[std::size_t(ri) * n_t + jj];
                }
                v[std::size_t(i) * n_t + j] = acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// serialization: flat binary (header + row-major payload) and CSV
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr std::uint64_t field_magic = 0x53325944464c4431ULL;  // "S2YDFLD1"
}

template <class T>
inline void write_binary(const GridField<T>& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_binary: cannot open " + path);
    const std::uint64_t magic = detail::field_magic;
    const std::uint32_t nr = std::uint32_t(f.grid->radial_count());
    const std::uint32_t nt = std::uint32_t(f.grid->angular_count());
    const std::uint32_t width = sizeof(T);
    os.write(reinterpret_cast<const char*>(&magic), 8);
    os.write(reinterpret_cast<const char*>(&nr), 4);
    os.write(reinterpret_cast<const char*>(&nt), 4);
    os.write(reinterpret_cast<const char*>(&width), 4);
    for (int chart = 0; chart < 2; ++chart)
        os.write(reinterpret_cast<const char*>(f.values[chart].data()),
                 std::streamsize(f.values[chart].size() * sizeof(T)));
}

template <class T>
inline GridField<T> read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_binary: cannot open " + path);
    std::uint64_t magic = 0;
    std::uint32_t nr = 0, nt = 0, width = 0;
    is.read(reinterpret_cast<char*>(&magic), 8);
    is.read(reinterpret_cast<char*>(&nr), 4);
    is.read(reinterpret_cast<char*>(&nt), 4);
    is.read(reinterpret_cast<char*>(&width), 4);
    if (magic != detail::field_magic || width != sizeof(T))
        throw std::runtime_error("read_binary: bad header in " + path);
    GridField<T> f(make_grid(int(nr), int(nt)));
    for (int chart = 0; chart < 2; ++chart)
        is.read(reinterpret_cast<char*>(f.values[chart].data()),
                std::streamsize(f.values[chart].size() * sizeof(T)));
    if (!is) throw std::runtime_error("read_binary: truncated payload in " + path);
    return f;
}

inline void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    os << "chart,i,j,r,theta,value\n";
    char buf[160];
    for (int chart = 0; chart < 2; ++chart)
        for (int i = 0; i < f.grid->radial_count(); ++i)
            for (int j = 0; j < f.grid->angular_count(); ++j) {
                const int id = i * f.grid->angular_count() + j;
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g\n", chart, i, j,
                              f.grid->radius(i), f.grid->angle(j),
                              f.values[chart][std::size_t(id)]);
                os << buf;
            }
}

inline void write_csv(const OneForm& phi, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_csv: cannot open " + path);
    os << "chart,i,j,r,theta,coeff_re,coeff_im\n";
    char buf[200];
    for (int chart = 0; chart < 2; ++chart)
        for (int i = 0; i < phi.grid->radial_count(); ++i)
            for (int j = 0; j < phi.grid->angular_count(); ++j) {
                const int id = i * phi.grid->angular_count() + j;
                const cplx c = phi.values[chart][std::size_t(id)];
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", chart, i,
                              j, phi.grid->radius(i), phi.grid->angle(j), c.real(), c.imag());
                os << buf;
            }
}

}  // namespace sl2dyn
