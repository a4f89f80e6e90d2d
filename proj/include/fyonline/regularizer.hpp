#ifndef FYONLINE_REGULARIZER_HPP
#define FYONLINE_REGULARIZER_HPP

#include "common.hpp"
#include "frank_wolfe.hpp"
#include "output_space.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace fyo {

enum class RegularizerKind { EntropySimplex, SquaredL2, ScaledSquaredL2, ScaledEntropyBirkhoff, CrfEnumerable };

inline const char* to_string(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::EntropySimplex: return "entropy_simplex";
        case RegularizerKind::SquaredL2: return "squared_l2";
        case RegularizerKind::ScaledSquaredL2: return "scaled_squared_l2";
        case RegularizerKind::ScaledEntropyBirkhoff: return "scaled_entropy_birkhoff";
        case RegularizerKind::CrfEnumerable: return "crf_enumerable";
    }
    return "?";
}

/// ŷ_Ω(θ), optionally with a vertex decomposition produced as a by-product.
struct Prediction {
    Vector point;
    std::optional<ConvexCombination> combination;
};

struct SinkhornResult {
    Vector point;
    double deviation = 0.0;
    int iterations = 0;
};

/// Doubly stochastic scaling of exp(μ·θ) (θ row-major n×n). Works on log
/// potentials when max|μθ| > 30. Iterates until the row marginals are exact to
/// rounding, and fails if the deviation still exceeds sinkhorn_tolerance after
/// `max_iterations`.
namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Newton steps on the dual potentials of the scaling problem, applied
/// multiplicatively to p. Plain alternating scaling crawls when the kernel
/// spans many orders of magnitude; this finishes the job quadratically.
inline void sinkhorn_newton_polish(RowMatrix& p, int n, double target, int max_steps = 100) {
    const int m = 2 * n - 1;  // last column potential pinned to zero
    auto dual = [&](const RowMatrix& q, const Vector& x) {
        return x.sum() - q.sum();
    };
    for (int step = 0; step < max_steps; ++step) {
        const Vector r = p.rowwise().sum().transpose();
        const Vector c = p.colwise().sum().transpose();
        const double dev = std::max((r.array() - 1.0).abs().maxCoeff(), (c.array() - 1.0).abs().maxCoeff());
        if (dev <= target) {
            return;
        }
        Matrix h = Matrix::Zero(m, m);
        Vector grad(m);
        for (int i = 0; i < n; ++i) {
            h(i, i) = r[i];
            grad[i] = 1.0 - r[i];
        }
        for (int j = 0; j + 1 < n; ++j) {
            h(n + j, n + j) = c[j];
            grad[n + j] = 1.0 - c[j];
            for (int i = 0; i < n; ++i) {
                h(i, n + j) = p(i, j);
                h(n + j, i) = p(i, j);
            }
        }
        const Vector dx = h.ldlt().solve(grad);
        if (!dx.allFinite()) {
            return;
        }
        const double base = dual(p, Vector::Zero(m));
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            RowMatrix q = p;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double e = t * (dx[i] + (j + 1 < n ? dx[n + j] : 0.0));
                    q(i, j) *= std::exp(e);
                }
            }
            if (q.allFinite() && dual(q, t * dx) >= base) {
                p = std::move(q);
                moved = true;
                break;
            }
        }
        if (!moved) {
            return;
        }
    }
}

}  // namespace detail

inline SinkhornResult sinkhorn(const Vector& theta, int n, double mu, int max_iterations = 10000) {
    using detail::RowMatrix;
    const RowMatrix logk = mu * Eigen::Map<const RowMatrix>(theta.data(), n, n);
    SinkhornResult out;
    RowMatrix p(n, n);
    const double target = 1e-15 * n;
    auto deviation = [&] { return (p.rowwise().sum().array() - 1.0).abs().maxCoeff(); };
    // Alternating scaling up to `budget` sweeps; returns true once converged.
    auto scale = [&](int budget) {
        for (int k = 0; k < budget && out.iterations < max_iterations; ++k) {
            ++out.iterations;
            p.array().colwise() /= p.rowwise().sum().array();
            p.array().rowwise() /= p.colwise().sum().array();
            out.deviation = deviation();
            if (out.deviation <= target) {
                return true;
            }
        }
        return false;
    };
    if (logk.cwiseAbs().maxCoeff() > 30.0) {
        Vector f = Vector::Zero(n), g = Vector::Zero(n);
        auto lse = [](const Eigen::ArrayXd& v) {
            const double m = v.maxCoeff();
            return m + std::log((v - m).exp().sum());
        };
        bool done = false;
        while (!done && out.iterations < std::min(max_iterations, 1000)) {
            ++out.iterations;
            for (int i = 0; i < n; ++i) {
                f[i] = -lse(logk.row(i).transpose().array() + g.array());
            }
            for (int j = 0; j < n; ++j) {
                g[j] = -lse(logk.col(j).array() + f.array());
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    p(i, j) = std::exp(logk(i, j) + f[i] + g[j]);
                }
            }
            out.deviation = deviation();
            done = out.deviation <= target;
        }
    } else {
        p = (logk.array() - logk.maxCoeff()).exp().matrix();
        scale(std::min(max_iterations, 1000));
    }
    if (!(out.deviation <= target)) {
        detail::sinkhorn_newton_polish(p, n, target);
        // One sweep restores exact column sums; keep sweeping if still short.
        scale(std::max(1, max_iterations - out.iterations));
    }
    if (!(out.deviation <= sinkhorn_tolerance)) {
        throw ConvergenceError("Sinkhorn did not converge", out.deviation);
    }
    out.point = Eigen::Map<const Vector>(p.data(), n * n);
    return out;
}

inline Vector softmax(const Vector& theta) {
    const Eigen::ArrayXd e = (theta.array() - theta.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

/// Ω = Ψ + I_conv(𝒴). The loss and gradient are multiplied by loss_scale()
/// (1/ln 2 for the base-2 logistic loss, 1 otherwise).
class Regularizer {
public:
    /// Ψ = −Shannon entropy on the simplex; ŷ = softmax(θ); λ = 1 for ℓ1.
    static Regularizer entropy_simplex(const OutputSpace& space, bool log_base2 = false) {
        require(space.kind() == SpaceKind::Simplex && space.norm() == Norm::L1,
                "entropy_simplex needs a simplex with the l1 norm");
        Regularizer r(RegularizerKind::EntropySimplex, space, 1.0);
        r.log_base2_ = log_base2;
        return r;
    }

    /// Ψ = ½‖·‖₂² (SparseMAP); ŷ is the Euclidean projection of θ.
    static Regularizer squared_l2(const OutputSpace& space) {
        require(space.norm() == Norm::L2, "squared_l2 needs a space with the l2 norm");
        return Regularizer(RegularizerKind::SquaredL2, space, 1.0);
    }

    /// Ψ = (s/2)‖·‖₂²; ŷ is the projection of θ/s; λ = s.
    static Regularizer scaled_squared_l2(const OutputSpace& space, double s) {
        require(space.norm() == Norm::L2, "scaled_squared_l2 needs a space with the l2 norm");
        require(s > 0.0 && std::isfinite(s), "scaled_squared_l2 needs scale > 0");
        Regularizer r(RegularizerKind::ScaledSquaredL2, space, s);
        r.scale_ = s;
        return r;
    }

    /// Ψ = −(1/μ)·entropy on the Birkhoff polytope; ŷ by Sinkhorn; λ = 1/(nμ).
    static Regularizer scaled_entropy_birkhoff(const OutputSpace& space, double mu) {
        require(space.kind() == SpaceKind::Birkhoff && space.norm() == Norm::L1,
                "scaled_entropy_birkhoff needs a Birkhoff space with the l1 norm");
        require(mu > 0.0 && std::isfinite(mu), "scaled_entropy_birkhoff needs mu > 0");
        Regularizer r(RegularizerKind::ScaledEntropyBirkhoff, space, 1.0 / (space.size() * mu));
        r.mu_ = mu;
        return r;
    }

    /// Log-partition (CRF) loss over an enumerable vertex set: ŷ are the Gibbs
    /// marginals; λ = 1/max‖y‖₁².
    static Regularizer crf_enumerable(const OutputSpace& space) {
        require(space.norm() == Norm::L1, "crf_enumerable needs a space with the l1 norm");
        auto vertices = std::make_shared<const std::vector<Vector>>(enumerate_vertices(space));
        double radius = 0.0;
        for (const Vector& v : *vertices) {
            radius = std::max(radius, v.lpNorm<1>());
        }
        require(radius > 0.0, "crf_enumerable needs a nonzero vertex");
        Regularizer r(RegularizerKind::CrfEnumerable, space, 1.0 / (radius * radius));
        r.vertices_ = std::move(vertices);
        return r;
    }

    RegularizerKind kind() const { return kind_; }
    const OutputSpace& space() const { return space_; }
    double lambda() const { return lambda_; }
    double mu() const { return mu_; }
    double scale() const { return scale_; }
    bool log_base2() const { return log_base2_; }
    double loss_scale() const { return log_base2_ ? 1.0 / std::numbers::ln2 : 1.0; }
    std::string name() const { return to_string(kind_); }

    Prediction predict(const Vector& theta) const {
        require_dim(theta, space_.dim(), "score vector");
        require_finite(theta, "score vector");
        switch (kind_) {
            case RegularizerKind::EntropySimplex:
                return {softmax(theta), std::nullopt};
            case RegularizerKind::SquaredL2:
            case RegularizerKind::ScaledSquaredL2: {
                FrankWolfeResult fw = project(space_, theta / scale_);
                Vector point = fw.combination.point;
                return {std::move(point), std::move(fw.combination)};
            }
            case RegularizerKind::ScaledEntropyBirkhoff:
                return {sinkhorn(theta, space_.size(), mu_).point, std::nullopt};
            case RegularizerKind::CrfEnumerable: {
                const Vector probs = gibbs(theta);
                ConvexCombination combo;
                combo.point = Vector::Zero(space_.dim());
                for (std::size_t i = 0; i < vertices_->size(); ++i) {
                    combo.point += probs[static_cast<Eigen::Index>(i)] * (*vertices_)[i];
                    combo.atoms.push_back({(*vertices_)[i], probs[static_cast<Eigen::Index>(i)]});
                }
                Vector point = combo.point;
                combo.prune();
                return {std::move(point), std::move(combo)};
            }
        }
        throw Error("unreachable");
    }

    /// Ψ(y) on conv(𝒴). For the CRF kind only vertices are supported (Ψ = 0 there).
    double psi(const Vector& y) const {
        switch (kind_) {
            case RegularizerKind::EntropySimplex:
                return neg_entropy(y);
            case RegularizerKind::ScaledEntropyBirkhoff:
                return neg_entropy(y) / mu_;
            case RegularizerKind::SquaredL2:
            case RegularizerKind::ScaledSquaredL2:
                return 0.5 * scale_ * y.squaredNorm();
            case RegularizerKind::CrfEnumerable:
                return 0.0;
        }
        return 0.0;
    }

    struct Evaluation {
        Prediction prediction;
        double loss = 0.0;
        Vector gradient;
    };

    /// Fenchel–Young loss Ω*(θ) + Ω(y) − ⟨θ, y⟩ and its gradient ŷ − y, both
    /// times loss_scale(), from one prediction. Ω*(θ) is evaluated as
    /// ⟨θ, ŷ⟩ − Ψ(ŷ) at the solved ŷ.
    Evaluation evaluate(const Vector& theta, const Vector& y) const {
        require_dim(y, space_.dim(), "label");
        Evaluation out;
        out.prediction = predict(theta);
        const Vector& yhat = out.prediction.point;
        const double conjugate = this->conjugate(theta, out.prediction);
        double loss = (conjugate + psi(y) - theta.dot(y)) * loss_scale();
        if (loss < 0.0 && loss >= -1e-10) {
            loss = 0.0;
        }
        out.loss = loss;
        out.gradient = (yhat - y) * loss_scale();
        return out;
    }

    /// Ω*(θ) = ⟨θ, ŷ⟩ − Ψ(ŷ) at a solved prediction (unscaled).
    double conjugate(const Vector& theta, const Prediction& prediction) const {
        if (kind_ == RegularizerKind::CrfEnumerable) {
            const Vector probs = gibbs(theta);
            double entropy = 0.0;
            for (Eigen::Index i = 0; i < probs.size(); ++i) {
                if (probs[i] > 0.0) {
                    entropy -= probs[i] * std::log(probs[i]);
                }
            }
            return theta.dot(prediction.point) + entropy;
        }
        return theta.dot(prediction.point) - psi(prediction.point);
    }

    double fy_loss(const Vector& theta, const Vector& y) const { return evaluate(theta, y).loss; }
    Vector fy_gradient(const Vector& theta, const Vector& y) const { return evaluate(theta, y).gradient; }

private:
    Regularizer(RegularizerKind kind, OutputSpace space, double lambda)
        : kind_(kind), space_(std::move(space)), lambda_(lambda) {}

    static void require(bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(what);
        }
    }

    static double neg_entropy(const Vector& y) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] > 0.0) {
                s += y[i] * std::log(y[i]);
            }
        }
        return s;
    }

    Vector gibbs(const Vector& theta) const {
        Vector scores(static_cast<Eigen::Index>(vertices_->size()));
        for (std::size_t i = 0; i < vertices_->size(); ++i) {
            scores[static_cast<Eigen::Index>(i)] = theta.dot((*vertices_)[i]);
        }
        return softmax(scores);
    }

    RegularizerKind kind_;
    OutputSpace space_;
    double lambda_;
    double mu_ = 1.0;
    double scale_ = 1.0;
    bool log_base2_ = false;
    std::shared_ptr<const std::vector<Vector>> vertices_;
};

}  // namespace fyo

#endif
