#include "fyonline/frank_wolfe.hpp"
#include "common.hpp"
#include "support/brute_force.hpp"

#include <gtest/gtest.h>

using namespace fyo;
using testing_util::vec;

namespace {

Objective distance_to(const Vector& target) {
    return {[target](const Vector& y) { return (y - target).squaredNorm(); },
            [target](const Vector& y) { return Vector(2.0 * (y - target)); }};
}

double weight_of(const ConvexCombination& c, const Vector& v) {
    double w = 0.0;
    for (const auto& a : c.atoms)
        if ((a.vertex - v).cwiseAbs().maxCoeff() < 1e-12) w += a.weight;
    return w;
}

void expect_valid(const OutputSpace& s, const ConvexCombination& c, const Vector& target, double tol) {
    EXPECT_NEAR(c.weight_sum(), 1.0, 1e-12);
    for (const auto& a : c.atoms) {
        EXPECT_GE(a.weight, 0.0);
        EXPECT_TRUE(is_vertex(s, a.vertex)) << s.name();
    }
    EXPECT_LE((c.reconstruct() - target).norm(), tol) << s.name();
}

}  // namespace

TEST(MinimizeQuadratic, SpecExamples) {
    const auto s2 = OutputSpace::simplex(2);
    auto r = minimize_quadratic(s2, distance_to(vec({0.5, 0.5})));
    EXPECT_NEAR(weight_of(r.combination, vec({1, 0})), 0.5, 1e-6);
    EXPECT_NEAR(weight_of(r.combination, vec({0, 1})), 0.5, 1e-6);

    r = minimize_quadratic(OutputSpace::hypercube(2), distance_to(vec({1, 0})));
    ASSERT_EQ(r.combination.atoms.size(), 1u);
    EXPECT_EQ(r.combination.atoms[0].vertex, vec({1, 0}));
    EXPECT_DOUBLE_EQ(r.combination.atoms[0].weight, 1.0);

    r = minimize_quadratic(OutputSpace::birkhoff(2), distance_to(vec({0.75, 0.25, 0.25, 0.75})));
    EXPECT_NEAR(weight_of(r.combination, vec({1, 0, 0, 1})), 0.75, 1e-6);
    EXPECT_NEAR(weight_of(r.combination, vec({0, 1, 1, 0})), 0.25, 1e-6);
}

TEST(MinimizeQuadratic, GapBelowTolerance) {
    CounterRng rng(41, 0);
    const auto s = OutputSpace::permutahedron(4);
    for (int k = 0; k < 20; ++k) {
        const Vector z = testing_util::gaussian(4, 3.0, rng).array() + 2.5;
        const auto r = minimize_quadratic(s, distance_to(z));
        ASSERT_FALSE(r.gaps.empty());
        // Optimality: the objective matches the exact projection.
        const Vector exact = project_permutahedron(z);
        EXPECT_NEAR((r.combination.point - z).squaredNorm(), (exact - z).squaredNorm(), 1e-8);
    }
}

TEST(MinimizeQuadratic, LinearConvergenceOnSimplex) {
    CounterRng rng(42, 0);
    const auto s = OutputSpace::simplex(8, Norm::L2);
    for (int k = 0; k < 10; ++k) {
        const Vector z = testing_util::gaussian(8, 1.0, rng);
        const auto r = minimize_quadratic(s, distance_to(z));
        const auto& g = r.gaps;
        // Running-minimum envelope: pairwise steps may bump the gap locally.
        std::vector<double> env(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) env[i] = i ? std::min(env[i - 1], g[i]) : g[i];
        for (std::size_t i = 0; i + 20 < env.size(); ++i) {
            if (env[i] <= fw_tolerance) break;
            EXPECT_LE(env[i + 20], 0.9 * env[i]) << "start " << i;
        }
    }
}

TEST(MinimizeQuadratic, IterationCapRaisesConvergenceError) {
    const auto s = OutputSpace::simplex(5, Norm::L2);
    EXPECT_THROW(minimize_quadratic(s, distance_to(vec({0.3, 0.1, 0.2, 0.15, 0.25})), 1e-30, 3), ConvergenceError);
}

TEST(Project, MatchesExhaustiveProjection) {
    CounterRng rng(43, 0);
    const auto s = OutputSpace::birkhoff(3, Norm::L2);
    const auto vs = brute::birkhoff(3);
    for (int k = 0; k < 20; ++k) {
        const Vector z = testing_util::gaussian(9, 1.0, rng);
        const auto r = project(s, z);
        EXPECT_LT((r.combination.point - brute::project_hull(vs, z)).norm(), 1e-6);
        expect_valid(s, r.combination, r.combination.point, 1e-9);
    }
}

TEST(Decompose, SpecExamples) {
    auto c = decompose(OutputSpace::simplex(3), vec({0.2, 0.3, 0.5}));
    EXPECT_DOUBLE_EQ(weight_of(c, vec({1, 0, 0})), 0.2);
    EXPECT_DOUBLE_EQ(weight_of(c, vec({0, 1, 0})), 0.3);
    EXPECT_DOUBLE_EQ(weight_of(c, vec({0, 0, 1})), 0.5);

    c = decompose(OutputSpace::hypercube(1), vec({0.4}));
    EXPECT_NEAR(weight_of(c, vec({0})), 0.6, 1e-15);
    EXPECT_NEAR(weight_of(c, vec({1})), 0.4, 1e-15);

    const auto perm = OutputSpace::permutahedron(3);
    c = decompose(perm, vec({2, 2, 2}));
    expect_valid(perm, c, vec({2, 2, 2}), 1e-6);
}

TEST(Decompose, ReconstructsRandomHullPoints) {
    CounterRng rng(44, 0);
    const std::vector<OutputSpace> spaces = {OutputSpace::simplex(6),       OutputSpace::hypercube(6),
                                             OutputSpace::birkhoff(3),      OutputSpace::birkhoff(4),
                                             OutputSpace::permutahedron(5), OutputSpace::ordinal_chain(6)};
    for (const auto& s : spaces) {
        const auto vs = enumerate_vertices(s);
        for (int k = 0; k < 100; ++k) {
            const Vector p = testing_util::hull_point(vs, rng);
            const auto c = decompose(s, p);
            expect_valid(s, c, p, std::max(std::sqrt(fw_tolerance), 1e-6));
        }
    }
}

TEST(Decompose, EnumeratedSpace) {
    const auto s = OutputSpace::enumerated({vec({0, 0}), vec({2, 0}), vec({0, 2}), vec({2, 2})}, Norm::L2);
    const auto c = decompose(s, vec({0.5, 1.5}));
    EXPECT_LT((c.reconstruct() - vec({0.5, 1.5})).norm(), 1e-6);
}

TEST(Decompose, SamplingIsUnbiased) {
    const auto s = OutputSpace::birkhoff(3);
    CounterRng rng(45, 0);
    const Vector p = testing_util::hull_point(enumerate_vertices(s), rng);
    const auto c = decompose(s, p);
    const int draws = 100000;
    Vector mean = Vector::Zero(9);
    for (int k = 0; k < draws; ++k) {
        const double u = rng.uniform();
        double cum = 0.0;
        for (const auto& a : c.atoms) {
            cum += a.weight;
            if (u < cum) {
                mean += a.vertex;
                break;
            }
        }
    }
    mean /= draws;
    EXPECT_LT((mean - p).cwiseAbs().maxCoeff(), 4.0 * std::sqrt(9.0 / draws));
}

TEST(ConvexCombination, PruneDropsTinyAtoms) {
    ConvexCombination c;
    c.point = vec({0.5, 0.5});
    c.atoms = {{vec({1, 0}), 0.5}, {vec({0, 1}), 0.5 - 1e-13}, {vec({1, 1}), 1e-13}};
    c.prune();
    EXPECT_EQ(c.atoms.size(), 2u);
    EXPECT_NEAR(c.weight_sum(), 1.0, 1e-15);
}
