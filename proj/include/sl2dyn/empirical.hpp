#pragma once

#include "sl2dyn/grid.hpp"

namespace sl2dyn {

// weighted point cloud on P^1 approximating a measure
struct EmpiricalMeasure {
    std::vector<ProjPoint> points;
    std::vector<double> weights;

    static EmpiricalMeasure dirac(const ProjPoint& p) { return {{p}, {1.0}}; }

    static EmpiricalMeasure equal_weights(std::vector<ProjPoint> pts) {
        EmpiricalMeasure m;
        const double w = 1.0 / double(pts.size());
        m.weights.assign(pts.size(), w);
        m.points = std::move(pts);
        return m;
    }

    void validate() const {
        if (points.size() != weights.size() || points.empty())
            throw config_error("EmpiricalMeasure: points/weights mismatch");
        double s = 0.0;
        for (double w : weights) s += w;
        if (std::abs(s - 1.0) > 1e-10)
            throw config_error("EmpiricalMeasure: weights must sum to 1");
    }
};

inline double empirical_pairing(const EmpiricalMeasure& nu, const GridFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < nu.points.size(); ++i)
        s += nu.weights[i] * read_function_at(f, nu.points[i]);
    return s;
}

inline double empirical_l2(const EmpiricalMeasure& nu, const GridFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < nu.points.size(); ++i) {
        const double v = read_function_at(f, nu.points[i]);
        s += nu.weights[i] * v * v;
    }
    return std::sqrt(s);
}

}  // namespace sl2dyn
