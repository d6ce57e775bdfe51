#pragma once

#include "ks/field.hpp"

#include <cmath>
#include <random>

namespace test {

// Band-limited random real field built from explicit trig terms, so the
// same function can be evaluated anywhere (not only on grid nodes).
struct TrigField {
    struct Term {
        int j1, j2;
        double a, b;  // a cos + b sin
    };
    double l = 1.0;
    std::vector<Term> terms;

    double operator()(double x1, double x2) const {
        double s = 0.0;
        const double k = 2.0 * M_PI / l;
        for (const auto& t : terms) {
            const double ph = k * (t.j1 * x1 + t.j2 * x2);
            s += t.a * std::cos(ph) + t.b * std::sin(ph);
        }
        return s;
    }
};

inline TrigField random_trig(double l, int max_mode, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    TrigField f;
    f.l = l;
    for (int j1 = 0; j1 <= max_mode; ++j1)
        for (int j2 = -max_mode; j2 <= max_mode; ++j2) {
            if (j1 == 0 && j2 < 0) continue;
            f.terms.push_back({j1, j2, U(rng), j1 == 0 && j2 == 0 ? 0.0 : U(rng)});
        }
    return f;
}

inline ks::ScalarField random_grid_field(const ks::Grid2D& g, unsigned seed, int max_mode = 5) {
    const TrigField f = random_trig(g.l, max_mode, seed);
    return ks::sample(g, f);
}

inline double max_abs_diff(const ks::ScalarField& a, const ks::ScalarField& b) {
    return (a.values - b.values).abs().maxCoeff();
}

inline double max_abs(const ks::ScalarField& a) { return a.values.abs().maxCoeff(); }

}  // namespace test
