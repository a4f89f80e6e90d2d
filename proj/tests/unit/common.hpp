#ifndef FYONLINE_TESTS_UNIT_COMMON_HPP
#define FYONLINE_TESTS_UNIT_COMMON_HPP

#include "fyonline/common.hpp"
#include "fyonline/rng.hpp"

#include <cmath>
#include <initializer_list>
#include <vector>

namespace testing_util {

inline fyo::Vector vec(std::initializer_list<double> v) {
    fyo::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

/// Random point of conv(vs) with exponential (Dirichlet(1)) weights.
inline fyo::Vector hull_point(const std::vector<fyo::Vector>& vs, fyo::CounterRng& rng) {
    fyo::Vector w(static_cast<Eigen::Index>(vs.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = -std::log(1.0 - rng.uniform());
    w /= w.sum();
    fyo::Vector p = fyo::Vector::Zero(vs.front().size());
    for (std::size_t i = 0; i < vs.size(); ++i) p += w[static_cast<Eigen::Index>(i)] * vs[i];
    return p;
}

inline fyo::Vector gaussian(int d, double scale, fyo::CounterRng& rng) {
    fyo::Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
    return v;
}

}  // namespace testing_util

#endif
