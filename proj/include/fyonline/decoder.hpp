#ifndef FYONLINE_DECODER_HPP
#define FYONLINE_DECODER_HPP

#include "common.hpp"
#include "frank_wolfe.hpp"
#include "output_space.hpp"
#include "regularizer.hpp"
#include "rng.hpp"
#include "target_loss.hpp"

#include <algorithm>

namespace fyo {

/// Everything randomized decoding needs for one score vector.
struct DecodePlan {
    Vector y_hat;
    Vector y_star;
    double delta_star = 0.0;
    double p = 0.0;
    /// Empty when p = 0.
    ConvexCombination decomposition;
};

/// Builds the plan from an already solved prediction (lets callers share one
/// solve between the loss, the gradient and the decoder).
inline DecodePlan plan_from_prediction(const OutputSpace& space, const Prediction& prediction) {
    DecodePlan plan;
    plan.y_hat = clamp_to_hull(space, prediction.point);
    plan.y_star = nearest_vertex(space, plan.y_hat);
    plan.delta_star = distance(plan.y_star, plan.y_hat, space.norm());
    if (plan.delta_star == 0.0) {
        plan.p = 0.0;
        plan.decomposition.point = plan.y_hat;
        return plan;
    }
    plan.p = std::min(1.0, 2.0 * plan.delta_star / space.nu());
    if (prediction.combination && !prediction.combination->atoms.empty()) {
        plan.decomposition = *prediction.combination;
        plan.decomposition.prune();
    } else {
        plan.decomposition = decompose(space, plan.y_hat);
    }
    return plan;
}

inline DecodePlan plan(const Regularizer& reg, const Vector& theta) {
    return plan_from_prediction(reg.space(), reg.predict(theta));
}

/// Draws ψ_Ω(θ): y* with probability 1 − p, otherwise an atom of the
/// decomposition with probability equal to its weight (inverse CDF in stored
/// order). Always consumes exactly two uniforms.
inline Vector decode(const DecodePlan& plan, CounterRng& rng) {
    const double u_branch = rng.uniform();
    const double u_atom = rng.uniform();
    if (!(u_branch < plan.p) || plan.decomposition.atoms.empty()) {
        return plan.y_star;
    }
    const auto& atoms = plan.decomposition.atoms;
    double total = 0.0;
    for (const Atom& a : atoms) {
        total += a.weight;
    }
    const double target = u_atom * total;
    double cumulative = 0.0;
    for (const Atom& a : atoms) {
        cumulative += a.weight;
        if (target < cumulative) {
            return a.vertex;
        }
    }
    return atoms.back().vertex;
}

/// E[L(ψ_Ω(θ); y)] = (1 − p)·L(y*; y) + p·L(ŷ; y), exact by affineness.
inline double expected_target_loss(const DecodePlan& plan, const TargetLoss& loss, const Vector& y) {
    const double v = (1.0 - plan.p) * loss.eval(plan.y_star, y) + plan.p * loss.eval(plan.y_hat, y);
    return v < 0.0 && v >= -1e-12 ? 0.0 : v;
}

/// The constant 4γ/(λν) of the decoding inequality, expressed against the
/// scaled loss the regularizer reports.
inline double decoding_constant(const Regularizer& reg, const TargetLoss& loss) {
    return 4.0 * loss.gamma() / (reg.loss_scale() * reg.lambda() * reg.space().nu());
}

}  // namespace fyo

#endif
