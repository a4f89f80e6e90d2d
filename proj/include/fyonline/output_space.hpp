#ifndef FYONLINE_OUTPUT_SPACE_HPP
#define FYONLINE_OUTPUT_SPACE_HPP

#include "common.hpp"
#include "detail/assignment.hpp"
#include "detail/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace fyo {

enum class SpaceKind { Simplex, Hypercube, Birkhoff, Permutahedron, OrdinalChain, Enumerated };

inline const char* to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::Simplex: return "simplex";
        case SpaceKind::Hypercube: return "hypercube";
        case SpaceKind::Birkhoff: return "birkhoff";
        case SpaceKind::Permutahedron: return "permutahedron";
        case SpaceKind::OrdinalChain: return "ordinal_chain";
        case SpaceKind::Enumerated: return "enumerated";
    }
    return "?";
}

/// A finite vertex set in R^d together with the constants of its geometry:
/// minimum vertex separation ν, norm-comparison constant κ and hull diameter D,
/// all measured in the space's norm.
///
/// Vertex orders (used for enumeration and for breaking ties):
///  - Simplex: e_1, ..., e_d
///  - Hypercube: 0/1 vectors in lexicographic order, 0 before 1
///  - Birkhoff: permutations σ of (0..n-1) in lexicographic order; the vertex
///    is the row-major vectorization of the matrix with P[i][σ(i)] = 1
///  - Permutahedron: permutations of (1, ..., d) in lexicographic order
///  - OrdinalChain: 0, e_1, e_1 + e_2, ..., 1
///  - Enumerated: as given
class OutputSpace {
public:
    static OutputSpace simplex(int d, Norm norm = Norm::L1) {
        require_size(d >= 2, "simplex needs d >= 2");
        const double nu = norm == Norm::L1 ? 2.0 : std::sqrt(2.0);
        return OutputSpace(SpaceKind::Simplex, d, d, norm, nu, nu);
    }

    static OutputSpace hypercube(int d, Norm norm = Norm::L2) {
        require_size(d >= 1, "hypercube needs d >= 1");
        const double diameter = norm == Norm::L1 ? d : std::sqrt(static_cast<double>(d));
        return OutputSpace(SpaceKind::Hypercube, d, d, norm, 1.0, diameter);
    }

    static OutputSpace birkhoff(int n, Norm norm = Norm::L1) {
        require_size(n >= 2, "birkhoff needs n >= 2");
        const double nu = norm == Norm::L1 ? 4.0 : 2.0;
        const double diameter = norm == Norm::L1 ? 2.0 * n : std::sqrt(2.0 * n);
        return OutputSpace(SpaceKind::Birkhoff, n * n, n, norm, nu, diameter);
    }

    static OutputSpace permutahedron(int d, Norm norm = Norm::L2) {
        require_size(d >= 2, "permutahedron needs d >= 2");
        const double dd = d;
        const double nu = norm == Norm::L1 ? 2.0 : std::sqrt(2.0);
        // Distance between (1..d) and its reversal.
        const double diameter = norm == Norm::L1 ? std::floor(dd * dd / 2.0) : std::sqrt(dd * (dd * dd - 1.0) / 3.0);
        return OutputSpace(SpaceKind::Permutahedron, d, d, norm, nu, diameter);
    }

    static OutputSpace ordinal_chain(int d, Norm norm = Norm::L2) {
        require_size(d >= 1, "ordinal chain needs d >= 1");
        const double diameter = norm == Norm::L1 ? d : std::sqrt(static_cast<double>(d));
        return OutputSpace(SpaceKind::OrdinalChain, d, d, norm, 1.0, diameter);
    }

    static OutputSpace enumerated(std::vector<Vector> vertices, Norm norm) {
        if (vertices.size() < 2) {
            throw InputError("enumerated space needs at least two vertices");
        }
        if (vertices.size() > enumeration_cap) {
            throw CapacityError("enumerated space exceeds the enumeration cap");
        }
        const Eigen::Index d = vertices.front().size();
        require_size(d >= 1, "enumerated vertices must be non-empty");
        for (const Vector& v : vertices) {
            require_dim(v, d, "vertex");
            require_finite(v, "vertex");
        }
        double nu = std::numeric_limits<double>::infinity();
        double diameter = 0.0;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            for (std::size_t j = i + 1; j < vertices.size(); ++j) {
                const double dist = distance(vertices[i], vertices[j], norm);
                if (dist == 0.0) {
                    throw InputError("enumerated space has duplicate vertices");
                }
                nu = std::min(nu, dist);
                diameter = std::max(diameter, dist);
            }
        }
        OutputSpace space(SpaceKind::Enumerated, static_cast<int>(d), static_cast<int>(d), norm, nu, diameter);
        space.vertices_ = std::make_shared<const std::vector<Vector>>(std::move(vertices));
        return space;
    }

    SpaceKind kind() const { return kind_; }
    int dim() const { return dim_; }
    /// n for Birkhoff(n), d otherwise.
    int size() const { return size_; }
    Norm norm() const { return norm_; }
    double nu() const { return nu_; }
    double kappa() const { return 1.0; }
    double diameter() const { return diameter_; }

    /// Vertex list of an Enumerated space (null otherwise).
    const std::vector<Vector>* listed_vertices() const { return vertices_.get(); }

    /// Number of vertices as a double (may exceed any integer type).
    double vertex_count() const {
        switch (kind_) {
            case SpaceKind::Simplex: return size_;
            case SpaceKind::Hypercube: return std::ldexp(1.0, size_);
            case SpaceKind::Birkhoff:
            case SpaceKind::Permutahedron: return std::tgamma(size_ + 1.0);
            case SpaceKind::OrdinalChain: return size_ + 1.0;
            case SpaceKind::Enumerated: return static_cast<double>(vertices_->size());
        }
        return 0.0;
    }

    /// True for the kinds whose vertices are 0/1 vectors.
    bool binary() const {
        return kind_ == SpaceKind::Simplex || kind_ == SpaceKind::Hypercube || kind_ == SpaceKind::Birkhoff ||
               kind_ == SpaceKind::OrdinalChain;
    }

    std::string name() const {
        std::string out = to_string(kind_);
        out += "(" + std::to_string(kind_ == SpaceKind::Enumerated ? vertices_->size() : size_t(size_)) + ")";
        return out;
    }

private:
    OutputSpace(SpaceKind kind, int dim, int size, Norm norm, double nu, double diameter)
        : kind_(kind), dim_(dim), size_(size), norm_(norm), nu_(nu), diameter_(diameter) {}

    static void require_size(bool ok, const char* what) {
        if (!ok) {
            throw InputError(what);
        }
    }

    SpaceKind kind_;
    int dim_;
    int size_;
    Norm norm_;
    double nu_;
    double diameter_;
    std::shared_ptr<const std::vector<Vector>> vertices_;
};

/// Absolute tolerance under which two values of ⟨c, y⟩ count as tied.
inline double tie_tolerance(const Vector& c) { return 1e-12 * (1.0 + c.lpNorm<1>()); }

inline std::vector<Vector> enumerate_vertices(const OutputSpace& space) {
    if (space.vertex_count() > static_cast<double>(enumeration_cap)) {
        throw CapacityError(space.name() + " has more than " + std::to_string(enumeration_cap) + " vertices");
    }
    const int d = space.dim();
    const int k = space.size();
    std::vector<Vector> out;
    switch (space.kind()) {
        case SpaceKind::Simplex:
            for (int i = 0; i < d; ++i) {
                out.push_back(Vector::Unit(d, i));
            }
            break;
        case SpaceKind::Hypercube:
            for (long mask = 0; mask < (1L << d); ++mask) {
                Vector v(d);
                for (int i = 0; i < d; ++i) {
                    v[i] = static_cast<double>((mask >> (d - 1 - i)) & 1L);
                }
                out.push_back(std::move(v));
            }
            break;
        case SpaceKind::Birkhoff: {
            std::vector<int> sigma(k);
            std::iota(sigma.begin(), sigma.end(), 0);
            do {
                Vector v = Vector::Zero(d);
                for (int i = 0; i < k; ++i) {
                    v[i * k + sigma[i]] = 1.0;
                }
                out.push_back(std::move(v));
            } while (std::next_permutation(sigma.begin(), sigma.end()));
            break;
        }
        case SpaceKind::Permutahedron: {
            std::vector<int> values(d);
            std::iota(values.begin(), values.end(), 1);
            do {
                Vector v(d);
                for (int i = 0; i < d; ++i) {
                    v[i] = values[i];
                }
                out.push_back(std::move(v));
            } while (std::next_permutation(values.begin(), values.end()));
            break;
        }
        case SpaceKind::OrdinalChain:
            for (int j = 0; j <= d; ++j) {
                Vector v = Vector::Zero(d);
                v.head(j).setOnes();
                out.push_back(std::move(v));
            }
            break;
        case SpaceKind::Enumerated:
            out = *space.listed_vertices();
            break;
    }
    return out;
}

namespace detail {

/// Minimum of ⟨c, y⟩ over permutations y of `values` (rearrangement: the
/// largest value goes to the smallest cost).
inline double rearrangement_min(std::vector<double> costs, std::vector<double> values) {
    std::sort(costs.begin(), costs.end());
    std::sort(values.begin(), values.end(), std::greater<>());
    double total = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        total += costs[i] * values[i];
    }
    return total;
}

inline Vector permutahedron_oracle(const Vector& c) {
    const int d = static_cast<int>(c.size());
    const double tol = tie_tolerance(c);
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c[a] < c[b]; });
    bool separated = true;
    for (int i = 1; i < d; ++i) {
        if (c[order[i]] - c[order[i - 1]] <= 2.0 * tol) {
            separated = false;
        }
    }
    Vector y(d);
    if (separated) {
        for (int r = 0; r < d; ++r) {
            y[order[r]] = d - r;
        }
        return y;
    }
    // Near-ties: fix coordinates left to right, each time taking the smallest
    // value that still admits a near-optimal completion.
    std::vector<double> all_costs(c.data(), c.data() + d);
    std::vector<double> remaining(d);
    std::iota(remaining.begin(), remaining.end(), 1.0);
    const double best = rearrangement_min(all_costs, remaining);
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        std::vector<double> rest_costs(all_costs.begin() + i + 1, all_costs.end());
        bool fixed = false;
        for (std::size_t k = 0; k < remaining.size() && !fixed; ++k) {
            std::vector<double> rest_values = remaining;
            rest_values.erase(rest_values.begin() + static_cast<long>(k));
            const double completion = acc + c[i] * remaining[k] + rearrangement_min(rest_costs, rest_values);
            if (completion <= best + tol) {
                y[i] = remaining[k];
                acc += c[i] * remaining[k];
                remaining.erase(remaining.begin() + static_cast<long>(k));
                fixed = true;
            }
        }
        if (!fixed) {
            y[i] = remaining.front();
            acc += c[i] * remaining.front();
            remaining.erase(remaining.begin());
        }
    }
    return y;
}

}  // namespace detail

/// A vertex minimizing ⟨c, y⟩; among near-ties (within tie_tolerance(c)) the
/// first vertex in the space's vertex order.
inline Vector linear_oracle(const OutputSpace& space, const Vector& c) {
    require_dim(c, space.dim(), "cost vector");
    require_finite(c, "cost vector");
    const int d = space.dim();
    const double tol = tie_tolerance(c);
    switch (space.kind()) {
        case SpaceKind::Simplex: {
            const double best = c.minCoeff();
            for (int i = 0; i < d; ++i) {
                if (c[i] <= best + tol) {
                    return Vector::Unit(d, i);
                }
            }
            break;
        }
        case SpaceKind::Hypercube: {
            // suffix[i] = best achievable from coordinates i..d-1.
            Vector suffix = Vector::Zero(d + 1);
            for (int i = d - 1; i >= 0; --i) {
                suffix[i] = suffix[i + 1] + std::min(c[i], 0.0);
            }
            const double bound = suffix[0] + tol;
            Vector y = Vector::Zero(d);
            double acc = 0.0;
            for (int i = 0; i < d; ++i) {
                if (acc + suffix[i + 1] > bound) {
                    y[i] = 1.0;
                    acc += c[i];
                }
            }
            return y;
        }
        case SpaceKind::Birkhoff: {
            const int n = space.size();
            Matrix cost(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    cost(i, j) = c[i * n + j];
                }
            }
            const std::vector<int> sigma = detail::lexicographic_min_assignment(cost, tol);
            Vector y = Vector::Zero(d);
            for (int i = 0; i < n; ++i) {
                y[i * n + sigma[i]] = 1.0;
            }
            return y;
        }
        case SpaceKind::Permutahedron:
            return detail::permutahedron_oracle(c);
        case SpaceKind::OrdinalChain: {
            double prefix = 0.0;
            double best = 0.0;
            for (int i = 0; i < d; ++i) {
                prefix += c[i];
                best = std::min(best, prefix);
            }
            if (0.0 <= best + tol) {
                return Vector::Zero(d);
            }
            prefix = 0.0;
            for (int i = 0; i < d; ++i) {
                prefix += c[i];
                if (prefix <= best + tol) {
                    Vector y = Vector::Zero(d);
                    y.head(i + 1).setOnes();
                    return y;
                }
            }
            break;
        }
        case SpaceKind::Enumerated: {
            const auto& vertices = *space.listed_vertices();
            double best = std::numeric_limits<double>::infinity();
            for (const Vector& v : vertices) {
                best = std::min(best, c.dot(v));
            }
            for (const Vector& v : vertices) {
                if (c.dot(v) <= best + tol) {
                    return v;
                }
            }
            break;
        }
    }
    throw Error("linear oracle found no vertex");
}

/// ℓ1 size of the constraint violation of p with respect to conv(𝒴); 0 for
/// points inside. Enumerated spaces have no explicit description and always
/// report 0.
inline double hull_violation(const OutputSpace& space, const Vector& p) {
    require_dim(p, space.dim(), "point");
    if (!p.allFinite()) {
        return std::numeric_limits<double>::infinity();
    }
    const int d = space.dim();
    double v = 0.0;
    auto neg = [](double x) { return std::max(0.0, -x); };
    switch (space.kind()) {
        case SpaceKind::Simplex:
            for (int i = 0; i < d; ++i) {
                v += neg(p[i]);
            }
            v += std::abs(p.sum() - 1.0);
            break;
        case SpaceKind::Hypercube:
            for (int i = 0; i < d; ++i) {
                v += neg(p[i]) + neg(1.0 - p[i]);
            }
            break;
        case SpaceKind::OrdinalChain:
            v += neg(1.0 - p[0]) + neg(p[d - 1]);
            for (int i = 1; i < d; ++i) {
                v += neg(p[i - 1] - p[i]);
            }
            break;
        case SpaceKind::Permutahedron: {
            std::vector<double> s(p.data(), p.data() + d);
            std::sort(s.begin(), s.end(), std::greater<>());
            double prefix = 0.0;
            double cap = 0.0;
            for (int k = 0; k < d; ++k) {
                prefix += s[k];
                cap += d - k;
                if (k + 1 < d) {
                    v += neg(cap - prefix);
                } else {
                    v += std::abs(cap - prefix);
                }
            }
            break;
        }
        case SpaceKind::Birkhoff: {
            const int n = space.size();
            for (int i = 0; i < d; ++i) {
                v += neg(p[i]);
            }
            for (int i = 0; i < n; ++i) {
                double row = 0.0, col = 0.0;
                for (int j = 0; j < n; ++j) {
                    row += p[i * n + j];
                    col += p[j * n + i];
                }
                v += std::abs(row - 1.0) + std::abs(col - 1.0);
            }
            break;
        }
        case SpaceKind::Enumerated:
            break;
    }
    return v;
}

/// Euclidean projection onto the permutahedron of (1, ..., d): sort, then
/// isotonic regression of the sorted scores against (d, ..., 1).
inline Vector project_permutahedron(const Vector& z) {
    const int d = static_cast<int>(z.size());
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return z[a] > z[b]; });
    Vector shifted(d);
    for (int i = 0; i < d; ++i) {
        shifted[i] = z[order[i]] - (d - i);
    }
    const Vector fit = detail::isotonic_nonincreasing(shifted);
    Vector out(d);
    for (int i = 0; i < d; ++i) {
        out[order[i]] = z[order[i]] - fit[i];
    }
    return out;
}

/// Maps a point whose hull violation is at most hull_tolerance onto the hull.
inline Vector clamp_to_hull(const OutputSpace& space, const Vector& p) {
    const double violation = hull_violation(space, p);
    if (!(violation <= hull_tolerance)) {
        throw InputError("point lies outside conv(Y) of " + space.name() + " (violation " +
                         std::to_string(violation) + ")");
    }
    if (violation == 0.0) {
        return p;
    }
    Vector q = p;
    switch (space.kind()) {
        case SpaceKind::Simplex:
            q = q.cwiseMax(0.0);
            q /= q.sum();
            break;
        case SpaceKind::Hypercube:
            q = q.cwiseMax(0.0).cwiseMin(1.0);
            break;
        case SpaceKind::OrdinalChain:
            q = detail::isotonic_nonincreasing(q).cwiseMax(0.0).cwiseMin(1.0);
            break;
        case SpaceKind::Permutahedron:
            q = project_permutahedron(q);
            break;
        case SpaceKind::Birkhoff: {
            const int n = space.size();
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(q.data(), n, n);
            m = m.cwiseMax(0.0);
            for (int pass = 0; pass < 1000; ++pass) {
                m.array().colwise() /= m.rowwise().sum().array();
                m.array().rowwise() /= m.colwise().sum().array();
                if ((m.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-15) {
                    break;
                }
            }
            break;
        }
        case SpaceKind::Enumerated:
            break;
    }
    return q;
}

/// A vertex minimizing ‖y − p‖ in the space's norm. Binary kinds reduce to one
/// linear-oracle call with costs |1 − p_i|^q − |p_i|^q; the permutahedron
/// assigns ranks of p (stable ascending sort).
inline Vector nearest_vertex(const OutputSpace& space, const Vector& p_in) {
    require_dim(p_in, space.dim(), "point");
    const Vector p = clamp_to_hull(space, p_in);
    const int d = space.dim();
    if (space.binary()) {
        Vector c(d);
        const double q = space.norm() == Norm::L1 ? 1.0 : 2.0;
        for (int i = 0; i < d; ++i) {
            c[i] = std::pow(std::abs(1.0 - p[i]), q) - std::pow(std::abs(p[i]), q);
        }
        return linear_oracle(space, c);
    }
    if (space.kind() == SpaceKind::Permutahedron) {
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return p[a] < p[b]; });
        Vector y(d);
        for (int r = 0; r < d; ++r) {
            y[order[r]] = r + 1;
        }
        return y;
    }
    const auto& vertices = *space.listed_vertices();
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& v : vertices) {
        best = std::min(best, distance(v, p, space.norm()));
    }
    const double tol = 1e-12 * (1.0 + best);
    for (const Vector& v : vertices) {
        if (distance(v, p, space.norm()) <= best + tol) {
            return v;
        }
    }
    throw Error("nearest vertex scan found nothing");
}

/// Whether y is exactly a vertex of the space.
inline bool is_vertex(const OutputSpace& space, const Vector& y) {
    if (y.size() != space.dim() || !y.allFinite()) {
        return false;
    }
    const int d = space.dim();
    auto binary_entries = [&] { return ((y.array() == 0.0) || (y.array() == 1.0)).all(); };
    switch (space.kind()) {
        case SpaceKind::Simplex:
            return binary_entries() && y.sum() == 1.0;
        case SpaceKind::Hypercube:
            return binary_entries();
        case SpaceKind::OrdinalChain:
            if (!binary_entries()) {
                return false;
            }
            for (int i = 1; i < d; ++i) {
                if (y[i] > y[i - 1]) {
                    return false;
                }
            }
            return true;
        case SpaceKind::Birkhoff:
            return binary_entries() && hull_violation(space, y) == 0.0;
        case SpaceKind::Permutahedron: {
            std::vector<double> s(y.data(), y.data() + d);
            std::sort(s.begin(), s.end());
            for (int i = 0; i < d; ++i) {
                if (s[i] != i + 1) {
                    return false;
                }
            }
            return true;
        }
        case SpaceKind::Enumerated:
            for (const Vector& v : *space.listed_vertices()) {
                if (v == y) {
                    return true;
                }
            }
            return false;
    }
    return false;
}

}  // namespace fyo

#endif
