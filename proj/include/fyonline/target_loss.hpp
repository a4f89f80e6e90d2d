#ifndef FYONLINE_TARGET_LOSS_HPP
#define FYONLINE_TARGET_LOSS_HPP

#include "common.hpp"
#include "output_space.hpp"

#include <cmath>
#include <string>

namespace fyo {

/// The label-only term c(y) = ⟨linear, y⟩ + quadratic·‖y‖² + constant.
struct LabelTerm {
    Vector linear;
    double quadratic = 0.0;
    double constant = 0.0;

    double operator()(const Vector& y) const {
        double v = quadratic * y.squaredNorm() + constant;
        if (linear.size() > 0) {
            v += linear.dot(y);
        }
        return v;
    }
};

/// Target loss L(y'; y) = ⟨y', V y + b⟩ + c(y), affine in its first argument
/// on conv(𝒴), with Lipschitz constant γ in the space's norm.
class TargetLoss {
public:
    /// Built-in losses: zero_one (Simplex), hamming (Hypercube), rank_mismatch
    /// (Birkhoff), permutahedron_align (Permutahedron), ordinal_absolute
    /// (OrdinalChain). All take values in [0, 1] on vertices.
    static TargetLoss builtin(const OutputSpace& space, const std::string& name) {
        const int d = space.dim();
        const double dd = d;
        const Matrix eye = Matrix::Identity(d, d);
        auto mismatch = [&] {
            throw ConfigError("loss '" + name + "' is not defined on " + space.name());
        };
        if (name == "zero_one") {
            if (space.kind() != SpaceKind::Simplex) mismatch();
            return TargetLoss(space, name, -eye, Vector::Ones(d), LabelTerm{}, 0.5);
        }
        if (name == "hamming" || name == "ordinal_absolute") {
            const SpaceKind want = name == "hamming" ? SpaceKind::Hypercube : SpaceKind::OrdinalChain;
            if (space.kind() != want) mismatch();
            LabelTerm c{Vector::Constant(d, 1.0 / dd), 0.0, 0.0};
            return TargetLoss(space, name, (-2.0 / dd) * eye, Vector::Constant(d, 1.0 / dd), c, 1.0 / std::sqrt(dd));
        }
        if (name == "rank_mismatch") {
            if (space.kind() != SpaceKind::Birkhoff) mismatch();
            const double n = space.size();
            return TargetLoss(space, name, (-1.0 / n) * eye, Vector::Constant(d, 1.0 / n), LabelTerm{}, 1.0 / (2.0 * n));
        }
        if (name == "permutahedron_align") {
            if (space.kind() != SpaceKind::Permutahedron) mismatch();
            const double m = dd * (dd * dd - 1.0) / 6.0;
            // L(y'; y) = ⟨y, y − y'⟩/M ≤ (‖y‖₂/M)‖y − y'‖₂ with ‖y‖₂² = d(d+1)(2d+1)/6.
            const double gamma = std::sqrt(dd * (dd + 1.0) * (2.0 * dd + 1.0) / 6.0) / m;
            TargetLoss loss(space, name, (-1.0 / m) * eye, Vector::Zero(d), LabelTerm{Vector(), 1.0 / m, 0.0}, gamma);
            loss.normalizer_ = m;
            return loss;
        }
        throw ConfigError("unknown loss '" + name + "'");
    }

    /// User-supplied loss; γ is taken on trust.
    static TargetLoss custom(const OutputSpace& space, Matrix V, Vector b, double gamma, LabelTerm c = {}) {
        const int d = space.dim();
        if (V.rows() != d || V.cols() != d || b.size() != d) {
            throw InputError("custom loss dimensions do not match the space");
        }
        if (c.linear.size() != 0 && c.linear.size() != d) {
            throw InputError("custom loss label term has the wrong dimension");
        }
        if (!(gamma > 0.0) || !std::isfinite(gamma) || !V.allFinite() || !b.allFinite()) {
            throw InputError("custom loss needs finite V, b and gamma > 0");
        }
        return TargetLoss(space, "custom", std::move(V), std::move(b), std::move(c), gamma);
    }

    double eval(const Vector& y_prime, const Vector& y) const {
        require_dim(y_prime, space_.dim(), "prediction");
        require_dim(y, space_.dim(), "label");
        const double v = y_prime.dot(V_ * y + b_) + c_(y);
        return (v < 0.0 && v >= -1e-12) ? 0.0 : v;
    }

    const OutputSpace& space() const { return space_; }
    const std::string& name() const { return name_; }
    const Matrix& V() const { return V_; }
    const Vector& b() const { return b_; }
    const LabelTerm& label_term() const { return c_; }
    double gamma() const { return gamma_; }
    /// M of the permutahedron alignment loss; 1 for the others.
    double normalizer() const { return normalizer_; }

private:
    TargetLoss(OutputSpace space, std::string name, Matrix V, Vector b, LabelTerm c, double gamma)
        : space_(std::move(space)), name_(std::move(name)), V_(std::move(V)), b_(std::move(b)), c_(std::move(c)),
          gamma_(gamma) {}

    OutputSpace space_;
    std::string name_;
    Matrix V_;
    Vector b_;
    LabelTerm c_;
    double gamma_;
    double normalizer_ = 1.0;
};

}  // namespace fyo

#endif
