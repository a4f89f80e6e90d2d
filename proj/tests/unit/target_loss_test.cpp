#include "fyonline/target_loss.hpp"
#include "common.hpp"
#include "support/brute_force.hpp"

#include <gtest/gtest.h>

using namespace fyo;
using testing_util::vec;

namespace {

struct Case {
    OutputSpace space;
    std::string loss;
};

std::vector<Case> builtins() {
    return {{OutputSpace::simplex(5), "zero_one"},
            {OutputSpace::hypercube(6), "hamming"},
            {OutputSpace::birkhoff(3), "rank_mismatch"},
            {OutputSpace::permutahedron(4), "permutahedron_align"},
            {OutputSpace::ordinal_chain(6), "ordinal_absolute"}};
}

}  // namespace

TEST(TargetLoss, SpecExamples) {
    const auto zo = TargetLoss::builtin(OutputSpace::simplex(3), "zero_one");
    EXPECT_DOUBLE_EQ(zo.eval(vec({0, 1, 0}), vec({1, 0, 0})), 1.0);
    EXPECT_DOUBLE_EQ(zo.eval(vec({1, 0, 0}), vec({1, 0, 0})), 0.0);
    const auto ham = TargetLoss::builtin(OutputSpace::hypercube(4), "hamming");
    EXPECT_DOUBLE_EQ(ham.eval(vec({1, 1, 0, 0}), vec({1, 0, 0, 1})), 0.5);
    const auto rank = TargetLoss::builtin(OutputSpace::birkhoff(2), "rank_mismatch");
    EXPECT_DOUBLE_EQ(rank.eval(vec({1, 0, 0, 1}), vec({0, 1, 1, 0})), 1.0);
    EXPECT_DOUBLE_EQ(TargetLoss::builtin(OutputSpace::simplex(5), "zero_one").gamma(), 0.5);
    EXPECT_DOUBLE_EQ(TargetLoss::builtin(OutputSpace::hypercube(25), "hamming").gamma(), 0.2);
    EXPECT_DOUBLE_EQ(TargetLoss::builtin(OutputSpace::permutahedron(3), "permutahedron_align").normalizer(), 4.0);
    EXPECT_DOUBLE_EQ(TargetLoss::builtin(OutputSpace::birkhoff(3), "rank_mismatch").gamma(), 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(TargetLoss::builtin(OutputSpace::ordinal_chain(25), "ordinal_absolute").gamma(), 0.2);
}

TEST(TargetLoss, OrdinalAbsoluteCountsLevels) {
    const auto l = TargetLoss::builtin(OutputSpace::ordinal_chain(4), "ordinal_absolute");
    EXPECT_DOUBLE_EQ(l.eval(vec({1, 1, 1, 0}), vec({1, 0, 0, 0})), 0.5);
}

TEST(TargetLoss, AlignmentGammaCoversCentroidDirection) {
    // Moving from (1,2,3) toward the centroid: L = 0.5 over a distance √2,
    // a ratio of 0.3536 that γ must dominate.
    const auto l = TargetLoss::builtin(OutputSpace::permutahedron(3), "permutahedron_align");
    const double ratio = l.eval(vec({2, 2, 2}), vec({1, 2, 3})) / std::sqrt(2.0);
    EXPECT_NEAR(ratio, std::sqrt(2.0) / 4.0, 1e-15);
    EXPECT_GE(l.gamma(), ratio);
    EXPECT_NEAR(l.gamma(), std::sqrt(14.0) / 4.0, 1e-15);
}

TEST(TargetLoss, ZeroOnDiagonalAndNonNegativeAtVertices) {
    for (const auto& c : builtins()) {
        const auto loss = TargetLoss::builtin(c.space, c.loss);
        const auto vs = enumerate_vertices(c.space);
        double lo = 1e9, hi = -1e9;
        for (const auto& y : vs) {
            EXPECT_EQ(loss.eval(y, y), 0.0) << c.loss;
            for (const auto& yp : vs) {
                lo = std::min(lo, loss.eval(yp, y));
                hi = std::max(hi, loss.eval(yp, y));
            }
        }
        EXPECT_GE(lo, 0.0) << c.loss;
        EXPECT_NEAR(hi, 1.0, 1e-12) << c.loss;
    }
}

TEST(TargetLoss, AffineInPrediction) {
    CounterRng rng(21, 0);
    for (const auto& c : builtins()) {
        const auto loss = TargetLoss::builtin(c.space, c.loss);
        const auto vs = enumerate_vertices(c.space);
        for (int k = 0; k < 200; ++k) {
            const Vector u = testing_util::hull_point(vs, rng);
            const Vector v = testing_util::hull_point(vs, rng);
            const Vector& y = vs[rng.below(vs.size())];
            const double a = rng.uniform();
            EXPECT_NEAR(loss.eval(a * u + (1 - a) * v, y), a * loss.eval(u, y) + (1 - a) * loss.eval(v, y), 1e-12);
        }
    }
}

TEST(TargetLoss, LipschitzOnRandomHullPoints) {
    CounterRng rng(22, 0);
    for (const auto& c : builtins()) {
        const auto loss = TargetLoss::builtin(c.space, c.loss);
        const auto vs = enumerate_vertices(c.space);
        for (int k = 0; k < 10000; ++k) {
            const Vector p = testing_util::hull_point(vs, rng);
            const Vector& y = vs[rng.below(vs.size())];
            ASSERT_LE(loss.eval(p, y), loss.gamma() * distance(p, y, c.space.norm()) + 1e-9) << c.loss;
        }
    }
}

TEST(TargetLoss, HammingGateNeedsMoreThanSixteenLabels) {
    for (int d = 10; d <= 30; ++d) {
        const double gamma = TargetLoss::builtin(OutputSpace::hypercube(d), "hamming").gamma();
        const double a = 1.0 - 4.0 * gamma / (1.0 * 1.0);
        EXPECT_EQ(a > 1e-12, d > 16) << d;
    }
}

TEST(TargetLoss, Errors) {
    EXPECT_THROW(TargetLoss::builtin(OutputSpace::simplex(3), "hamming"), ConfigError);
    EXPECT_THROW(TargetLoss::builtin(OutputSpace::simplex(3), "nope"), ConfigError);
    const auto zo = TargetLoss::builtin(OutputSpace::simplex(3), "zero_one");
    EXPECT_THROW(zo.eval(vec({1, 0}), vec({1, 0, 0})), InputError);
    EXPECT_THROW(TargetLoss::custom(OutputSpace::simplex(2), Matrix::Identity(2, 2), Vector::Zero(2), -1.0), InputError);
}

TEST(TargetLoss, CustomMatchesBuiltinForm) {
    const auto s = OutputSpace::simplex(3);
    const auto custom = TargetLoss::custom(s, -Matrix::Identity(3, 3), Vector::Ones(3), 0.5);
    const auto zo = TargetLoss::builtin(s, "zero_one");
    const Vector p = vec({0.2, 0.3, 0.5});
    EXPECT_DOUBLE_EQ(custom.eval(p, vec({0, 0, 1})), zo.eval(p, vec({0, 0, 1})));
}
