#ifndef FYONLINE_FRANK_WOLFE_HPP
#define FYONLINE_FRANK_WOLFE_HPP

#include "common.hpp"
#include "detail/assignment.hpp"
#include "output_space.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace fyo {

struct Atom {
    Vector vertex;
    double weight = 0.0;
};

/// A point of conv(𝒴) written as a weighted list of vertices.
struct ConvexCombination {
    std::vector<Atom> atoms;
    Vector point;

    Vector reconstruct() const {
        Vector out = Vector::Zero(point.size());
        for (const Atom& a : atoms) {
            out += a.weight * a.vertex;
        }
        return out;
    }

    double weight_sum() const {
        double s = 0.0;
        for (const Atom& a : atoms) {
            s += a.weight;
        }
        return s;
    }

    /// Drops atoms lighter than `floor` and rescales the rest to sum to 1.
    void prune(double floor = 1e-12) {
        std::erase_if(atoms, [&](const Atom& a) { return !(a.weight >= floor); });
        const double s = weight_sum();
        for (Atom& a : atoms) {
            a.weight /= s;
        }
    }
};

/// Smooth convex objective on conv(𝒴) given by value and gradient.
struct Objective {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
};

struct FrankWolfeResult {
    ConvexCombination combination;
    /// Frank–Wolfe duality gap at the start of every iteration.
    std::vector<double> gaps;
    int iterations = 0;
};

inline constexpr int fw_iteration_cap = 100000;

namespace detail {

inline int find_atom(const std::vector<Atom>& atoms, const Vector& v) {
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].vertex == v) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

}  // namespace detail

/// Pairwise Frank–Wolfe with a backtracking estimate of the gradient's
/// Lipschitz constant along the step direction. Stops when the duality gap ⟨∇f(x), x − s⟩ is at most
/// `tolerance`.
inline FrankWolfeResult minimize_quadratic(const OutputSpace& space, const Objective& f,
                                           double tolerance = fw_tolerance, int max_iterations = fw_iteration_cap) {
    FrankWolfeResult result;
    std::vector<Atom>& atoms = result.combination.atoms;
    Vector x = linear_oracle(space, f.gradient(linear_oracle(space, Vector::Zero(space.dim()))));
    atoms.push_back({x, 1.0});
    double lipschitz = 1.0;
    double gap = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iterations; ++it) {
        const Vector g = f.gradient(x);
        const Vector s = linear_oracle(space, g);
        gap = g.dot(x - s);
        result.gaps.push_back(gap);
        result.iterations = it;
        if (gap <= tolerance) {
            break;
        }
        std::size_t away = 0;
        double away_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double score = g.dot(atoms[i].vertex);
            if (score > away_score) {
                away_score = score;
                away = i;
            }
        }
        const Vector dir = s - atoms[away].vertex;
        const double slope = g.dot(dir);
        const double dir_sq = dir.squaredNorm();
        const double max_step = atoms[away].weight;
        if (!(slope < 0.0) || dir_sq == 0.0) {
            // The away atom is already the FW vertex; only a plain FW step helps.
            break;
        }
        // Curvature test on gradients rather than values: near the optimum the
        // decrease in f falls below the rounding noise of f itself.
        lipschitz = std::max(lipschitz / 2.0, 1e-12);
        double step = 0.0;
        Vector trial;
        for (int k = 0; k < 200; ++k) {
            step = std::min(max_step, -slope / (lipschitz * dir_sq));
            trial = x + step * dir;
            if ((f.gradient(trial) - g).dot(dir) <= lipschitz * step * dir_sq) {
                break;
            }
            lipschitz *= 2.0;
        }
        int target = detail::find_atom(atoms, s);
        if (target < 0) {
            atoms.push_back({s, 0.0});
            target = static_cast<int>(atoms.size()) - 1;
        }
        atoms[static_cast<std::size_t>(target)].weight += step;
        atoms[away].weight -= step;
        if (step >= max_step) {
            atoms.erase(atoms.begin() + static_cast<long>(away));
        }
        x = trial;
    }
    if (!(gap <= tolerance)) {
        throw ConvergenceError("Frank-Wolfe did not reach the duality-gap tolerance", gap);
    }
    result.combination.point = x;
    return result;
}

/// Euclidean projection of z onto conv(𝒴) by Wolfe's minimum-norm-point
/// algorithm. Each minor cycle solves the affine least-squares problem over
/// the current corral exactly, so the returned point is accurate to rounding
/// once the correct face is identified.
inline FrankWolfeResult project(const OutputSpace& space, const Vector& z, double tolerance = fw_tolerance,
                                int max_iterations = fw_iteration_cap) {
    require_dim(z, space.dim(), "projection target");
    require_finite(z, "projection target");
    FrankWolfeResult result;
    std::vector<Atom>& atoms = result.combination.atoms;
    Vector x = linear_oracle(space, -z);
    atoms.push_back({x, 1.0});
    const double scale = 1.0 + z.squaredNorm() + space.diameter() * space.diameter();
    const double stop = std::max(1e-15 * scale, 0.0);
    double gap = std::numeric_limits<double>::infinity();

    auto affine_minimizer = [&](std::vector<double>& alpha) {
        const std::size_t k = atoms.size();
        alpha.assign(k, 0.0);
        if (k == 1) {
            alpha[0] = 1.0;
            return;
        }
        const Vector& s0 = atoms[0].vertex;
        Matrix a(z.size(), static_cast<Eigen::Index>(k - 1));
        for (std::size_t i = 1; i < k; ++i) {
            a.col(static_cast<Eigen::Index>(i - 1)) = atoms[i].vertex - s0;
        }
        const Vector beta = a.completeOrthogonalDecomposition().solve(Vector(z - s0));
        alpha[0] = 1.0 - beta.sum();
        for (std::size_t i = 1; i < k; ++i) {
            alpha[i] = beta[static_cast<Eigen::Index>(i - 1)];
        }
    };

    int it = 0;
    double previous = std::numeric_limits<double>::infinity();
    for (; it < max_iterations; ++it) {
        // Near the optimum the objective moves by less than its rounding
        // while the gap is still above tolerance, so only a real increase stops.
        const double current = (x - z).squaredNorm();
        if (!(current <= previous + 1e-15 * scale)) {
            break;
        }
        previous = std::min(previous, current);
        const Vector g = x - z;
        const Vector s = linear_oracle(space, g);
        gap = g.dot(x - s);
        result.gaps.push_back(gap);
        if (gap <= stop || detail::find_atom(atoms, s) >= 0) {
            break;
        }
        atoms.push_back({s, 0.0});
        // Minor cycles: move toward the affine minimizer until it is interior.
        for (int minor = 0; minor <= static_cast<int>(atoms.size()) + 1; ++minor) {
            std::vector<double> alpha;
            affine_minimizer(alpha);
            bool interior = true;
            for (double a : alpha) {
                if (!(a > 0.0)) {
                    interior = false;
                }
            }
            if (interior) {
                for (std::size_t i = 0; i < atoms.size(); ++i) {
                    atoms[i].weight = alpha[i];
                }
                break;
            }
            double theta = 1.0;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                if (!(alpha[i] > 0.0)) {
                    const double denom = atoms[i].weight - alpha[i];
                    if (denom > 0.0) {
                        theta = std::min(theta, atoms[i].weight / denom);
                    }
                }
            }
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                atoms[i].weight += theta * (alpha[i] - atoms[i].weight);
            }
            std::erase_if(atoms, [](const Atom& a) { return !(a.weight > 1e-15); });
            if (atoms.empty()) {
                atoms.push_back({s, 1.0});
            }
        }
        double total = 0.0;
        for (const Atom& a : atoms) {
            total += a.weight;
        }
        x = Vector::Zero(z.size());
        for (Atom& a : atoms) {
            a.weight /= total;
            x += a.weight * a.vertex;
        }
    }
    result.iterations = it;
    const Vector g = x - z;
    gap = g.dot(x - linear_oracle(space, g));
    if (!(gap <= tolerance)) {
        throw ConvergenceError("min-norm-point projection did not reach the duality-gap tolerance", gap);
    }
    result.combination.point = x;
    return result;
}

namespace detail {

/// p = ∫₀¹ 1[p ≥ t] dt, split at the distinct values of p. Valid for the cube
/// and, since level sets of a non-increasing vector are prefixes, for the chain.
inline ConvexCombination threshold_decomposition(const Vector& p) {
    std::vector<double> levels(p.data(), p.data() + p.size());
    levels.push_back(0.0);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    ConvexCombination out;
    out.point = p;
    const double top = levels.back();
    if (1.0 - top > 0.0) {
        out.atoms.push_back({(p.array() >= 1.0).cast<double>().matrix(), 1.0 - top});
    }
    for (std::size_t k = levels.size() - 1; k >= 1; --k) {
        const double level = levels[k];
        out.atoms.push_back({(p.array() >= level).cast<double>().matrix(), level - levels[k - 1]});
    }
    return out;
}

inline bool birkhoff_peel(const OutputSpace& space, const Vector& p, ConvexCombination& out) {
    const int n = space.size();
    Matrix residual(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            residual(i, j) = p[i * n + j];
        }
    }
    double mass = 0.0;
    for (int guard = 0; guard < n * n + 1 && mass < 1.0 - 1e-12; ++guard) {
        const std::vector<int> sigma = bottleneck_matching(residual, 1e-14);
        if (sigma.empty()) {
            break;
        }
        double w = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            w = std::min(w, residual(i, sigma[i]));
        }
        w = std::min(w, 1.0 - mass);
        Vector v = Vector::Zero(space.dim());
        for (int i = 0; i < n; ++i) {
            v[i * n + sigma[i]] = 1.0;
            residual(i, sigma[i]) -= w;
        }
        out.atoms.push_back({std::move(v), w});
        mass += w;
    }
    return mass >= 1.0 - 1e-9;
}

}  // namespace detail

/// Writes a hull point as a convex combination of vertices. Closed forms for
/// the simplex (coordinates), cube and chain (thresholding) and Birkhoff
/// polytope (Birkhoff–von Neumann peeling with bottleneck matchings); the
/// min-norm-point solver otherwise, and as the fallback.
inline ConvexCombination decompose(const OutputSpace& space, const Vector& target) {
    const Vector p = clamp_to_hull(space, target);
    ConvexCombination out;
    out.point = p;
    switch (space.kind()) {
        case SpaceKind::Simplex:
            for (int i = 0; i < space.dim(); ++i) {
                out.atoms.push_back({Vector::Unit(space.dim(), i), p[i]});
            }
            break;
        case SpaceKind::Hypercube:
        case SpaceKind::OrdinalChain:
            out = detail::threshold_decomposition(p);
            break;
        case SpaceKind::Birkhoff:
            if (!detail::birkhoff_peel(space, p, out) || (out.reconstruct() - p).norm() > 1e-9) {
                out = project(space, p).combination;
            }
            break;
        case SpaceKind::Permutahedron:
        case SpaceKind::Enumerated:
            out = project(space, p).combination;
            break;
    }
    out.point = p;
    out.prune();
    return out;
}

}  // namespace fyo

#endif
