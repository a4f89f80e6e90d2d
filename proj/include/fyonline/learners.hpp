#ifndef FYONLINE_LEARNERS_HPP
#define FYONLINE_LEARNERS_HPP

#include "common.hpp"
#include "regularizer.hpp"
#include "target_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace fyo {

/// Constants of one (space, loss, regularizer) triple with input bound C.
/// `scale` is the regularizer's loss scale s; the surrogate seen by the
/// learner is s·S_Ω, so the gap constant is a = 1 − 4γ/(sλν) and the
/// gradient-norm constant is b = 2sC²κ²/λ.
struct ProblemConstants {
    double lambda = 1.0;
    double gamma = 0.5;
    double nu = 2.0;
    double kappa = 1.0;
    double diameter = 2.0;
    double C = 1.0;
    double scale = 1.0;

    static ProblemConstants from(const Regularizer& reg, const TargetLoss& loss, double C) {
        ProblemConstants k;
        k.lambda = reg.lambda();
        k.gamma = loss.gamma();
        k.nu = reg.space().nu();
        k.kappa = reg.space().kappa();
        k.diameter = reg.space().diameter();
        k.C = C;
        k.scale = reg.loss_scale();
        return k;
    }

    double a() const { return 1.0 - 4.0 * gamma / (scale * lambda * nu); }
    double b() const { return 2.0 * scale * C * C * kappa * kappa / lambda; }
    double m() const { return std::min(0.5, a()); }

    /// Whether λ > 4γ/ν holds (boundary excluded, with a 1e-12 margin for rounding).
    bool gate() const { return a() > 1e-12; }

    void require_gate() const {
        if (!gate()) {
            throw ConfigError("condition λ > 4γ/ν violated: λ = " + std::to_string(scale * lambda) +
                              ", 4γ/ν = " + std::to_string(4.0 * gamma / nu));
        }
    }

    /// Surrogate-gap learning rate η = (2/b)·min{1/2, a}.
    double default_eta() const {
        require_gate();
        return 2.0 * m() / b();
    }

    /// η = a/b, used by the high-probability bound.
    double high_probability_eta() const {
        require_gate();
        return a() / b();
    }

    /// Expected surrogate regret bound of constant-rate OGD with default η.
    double expected_bound(double u_norm_sq) const {
        return (1.0 - a()) * b() * u_norm_sq / (4.0 * (1.0 - m()) * m());
    }

    /// High-probability bound (with η = a/b) on Σ L_t − Σ S_t(U).
    double high_probability_bound(double u_norm_sq, double delta) const {
        return ((1.0 - a()) * b() * u_norm_sq + gamma * diameter * std::log(1.0 / delta)) / a();
    }

    /// Expected surrogate regret bound of adaptive OGD on a domain of size B.
    double adaptive_bound(double B) const { return 2.0 * (1.0 - a()) * b() * B * B / a(); }
};

struct OgdConstant {
    double eta = 0.0;
};

struct OgdAdaptive {
    double B = 1.0;
};

struct ParameterFree {
    double epsilon = 1.0;
};

using LearnerSpec = std::variant<OgdConstant, OgdAdaptive, ParameterFree>;

inline std::string learner_name(const LearnerSpec& spec) {
    if (std::holds_alternative<OgdConstant>(spec)) return "ogd_const";
    if (std::holds_alternative<OgdAdaptive>(spec)) return "ogd_adaptive";
    return "param_free";
}

/// Online learner over d×n matrices, starting from W₁ = 0.
///
/// ParameterFree reduces to a scalar Krichevsky–Trofimov coin bettor (initial
/// wealth ε) for the magnitude and adaptive OGD on the unit Frobenius ball for
/// the direction. Gradients are divided by `gradient_bound` so the coin
/// outcomes stay in [−1, 1].
class OnlineLearner {
public:
    OnlineLearner(LearnerSpec spec, int rows, int cols, double gradient_bound = 1.0)
        : spec_(spec), w_(Matrix::Zero(rows, cols)), direction_(Matrix::Zero(rows, cols)),
          gradient_bound_(gradient_bound) {
        if (const auto* c = std::get_if<OgdConstant>(&spec_); c && !(c->eta > 0.0 && std::isfinite(c->eta))) {
            throw ConfigError("ogd_const needs eta > 0");
        }
        if (const auto* a = std::get_if<OgdAdaptive>(&spec_); a && !(a->B > 0.0 && std::isfinite(a->B))) {
            throw ConfigError("ogd_adaptive needs B > 0");
        }
        if (const auto* p = std::get_if<ParameterFree>(&spec_)) {
            if (!(p->epsilon > 0.0 && std::isfinite(p->epsilon))) {
                throw ConfigError("param_free needs epsilon > 0");
            }
            wealth_ = p->epsilon;
        }
        if (!(gradient_bound_ > 0.0)) {
            throw ConfigError("gradient bound must be positive");
        }
    }

    const Matrix& W() const { return w_; }
    const LearnerSpec& spec() const { return spec_; }
    int rounds() const { return rounds_; }

    void step(const Matrix& g) {
        if (g.rows() != w_.rows() || g.cols() != w_.cols()) {
            throw InputError("gradient shape does not match the estimator");
        }
        if (!g.allFinite()) {
            throw InputError("gradient has non-finite entries");
        }
        ++rounds_;
        if (const auto* c = std::get_if<OgdConstant>(&spec_)) {
            w_ -= c->eta * g;
        } else if (const auto* a = std::get_if<OgdAdaptive>(&spec_)) {
            grad_sq_sum_ += g.squaredNorm();
            if (grad_sq_sum_ > 0.0) {
                w_ -= (a->B / std::sqrt(2.0 * grad_sq_sum_)) * g;
                const double norm = w_.norm();
                if (norm > a->B) {
                    w_ *= a->B / norm;
                }
            }
        } else {
            const Matrix gt = g / std::max(gradient_bound_, g.norm());
            const double coin = -(gt.cwiseProduct(direction_)).sum();
            wealth_ += coin * bet_;
            coin_sum_ += coin;
            grad_sq_sum_ += gt.squaredNorm();
            if (grad_sq_sum_ > 0.0) {
                direction_ -= gt / std::sqrt(2.0 * grad_sq_sum_);
                const double norm = direction_.norm();
                if (norm > 1.0) {
                    direction_ /= norm;
                }
            }
            bet_ = coin_sum_ / (rounds_ + 1.0) * wealth_;
            w_ = bet_ * direction_;
        }
    }

private:
    LearnerSpec spec_;
    Matrix w_;
    Matrix direction_;
    double gradient_bound_;
    double grad_sq_sum_ = 0.0;
    double wealth_ = 1.0;
    double coin_sum_ = 0.0;
    double bet_ = 0.0;
    int rounds_ = 0;
};

/// Per-round quantities the certificate needs.
struct CertificateRow {
    double surrogate_w = 0.0;
    double surrogate_u = 0.0;
    double grad_norm_sq = 0.0;
};

struct RegretCertificate {
    /// Σ(S_t(W_t) − S_t(U)).
    double realized = 0.0;
    /// Right-hand side of the learner's regret inequality.
    double bound = 0.0;
    /// a·Σ S_t(U).
    double gap_budget = 0.0;
    /// bound + 1e-6·T − realized; negative means violated.
    double slack = 0.0;
    bool violated = false;
    std::string form;
};

/// Checks the online learner's regret inequality on a finished trace:
/// ‖U‖²/(2η) + (η/2)Σ‖g_t‖² for constant-rate OGD, 2bB² + 2B√(2bΣS_t(U)) for
/// adaptive OGD. Parameter-free runs get no inequality (their constant is
/// not pinned), only the realized regret.
inline RegretCertificate regret_certificate(const std::vector<CertificateRow>& rows, double u_norm_sq,
                                            const LearnerSpec& spec, const ProblemConstants& k) {
    RegretCertificate out;
    double sum_u = 0.0, sum_g = 0.0;
    for (const CertificateRow& r : rows) {
        out.realized += r.surrogate_w - r.surrogate_u;
        sum_u += r.surrogate_u;
        sum_g += r.grad_norm_sq;
    }
    out.gap_budget = k.a() * sum_u;
    const double slack = 1e-6 * static_cast<double>(rows.size());
    if (const auto* c = std::get_if<OgdConstant>(&spec)) {
        out.form = "ogd_constant";
        out.bound = u_norm_sq / (2.0 * c->eta) + 0.5 * c->eta * sum_g;
    } else if (const auto* a = std::get_if<OgdAdaptive>(&spec)) {
        out.form = "ogd_adaptive";
        const double B = a->B;
        out.bound = 2.0 * k.b() * B * B + 2.0 * B * std::sqrt(2.0 * k.b() * sum_u);
        if (u_norm_sq > B * B * (1.0 + 1e-12)) {
            out.form += " (comparator outside the domain; not checked)";
            out.bound = std::numeric_limits<double>::infinity();
        }
    } else {
        out.form = "param_free (no inequality checked)";
        out.bound = std::numeric_limits<double>::infinity();
    }
    out.slack = out.bound + slack - out.realized;
    out.violated = out.slack < 0.0;
    return out;
}

}  // namespace fyo

#endif
