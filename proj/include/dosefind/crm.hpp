#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "dosefind/trial_state.hpp"

namespace dosefind {

/// How per-dose toxicity is estimated from the posterior of alpha.
enum class CrmEstimator {
    PlugIn,         // p_j^exp(E[alpha | data])
    PosteriorMean,  // E[p_j^exp(alpha) | data]
};

/// One-parameter power model pi_j(alpha) = skeleton_j^exp(alpha) with a
/// N(0, prior_variance) prior on alpha.
struct CrmConfig {
    std::vector<double> skeleton;
    double target = 0.3;
    double prior_variance = 1.34;
    CrmEstimator estimator = CrmEstimator::PlugIn;

    /// Skeleton (0.1, ..., 0.6), target 0.3, prior variance 1.34.
    static CrmConfig six_dose_default();

    std::size_t num_doses() const { return skeleton.size(); }

    /// Throws std::invalid_argument on a non-increasing skeleton, values
    /// outside (0,1), a target outside (0,1) or a non-positive variance.
    void validate() const;
};

struct CrmPosterior {
    double alpha_mean = 0.0;
    double alpha_second_moment = 0.0;
    std::vector<double> tox_estimates;
    double log_normalizer = 0.0;
};

struct QuadratureSettings {
    double half_width = 10.0;   // integrate alpha over [-half_width, half_width]
    int base_intervals = 200;   // Simpson intervals at the coarsest level
    int max_refinements = 6;    // interval doublings allowed before giving up
    double tolerance = 1e-8;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// log(1 - exp(x)) for x < 0 without cancellation near 0.
double log1m_exp(double x);

/// Log prior plus log likelihood at alpha, dropping constants. Doses with no
/// patients contribute nothing.
double log_unnormalized_posterior(double alpha, const TrialState& state, const CrmConfig& cfg);

/// Index (1-based) of the estimate closest to target; near-exact ties go to
/// the lower dose.
int closest_to_target(std::span<const double> estimates, double target);

/// Continual reassessment engine. Holds the power-model terms tabulated on
/// the finest quadrature grid, so posterior evaluation is a weighted sum per
/// node. Immutable after construction and safe to share across threads.
class CrmEngine {
public:
    explicit CrmEngine(CrmConfig cfg, QuadratureSettings quad = {});

    const CrmConfig& config() const { return cfg_; }
    std::size_t num_doses() const { return cfg_.num_doses(); }

    /// Adaptive composite Simpson over alpha. Throws QuadratureError when
    /// successive levels still disagree after max_refinements doublings.
    CrmPosterior posterior(const TrialState& state) const;

    /// Closest estimate to target, clamped to one level around the current dose.
    int recommend_next_dose(const TrialState& state) const;

    /// Unconstrained closest estimate to target over all doses.
    int select_mtd(const TrialState& state) const;

private:
    CrmConfig cfg_;
    QuadratureSettings quad_;
    std::size_t nodes_ = 0;        // finest-grid node count
    double step_ = 0.0;            // finest-grid spacing
    std::vector<double> alpha_;    // [node]
    std::vector<double> log_tox_;  // [node * J + j] = exp(alpha) * log p_j
    std::vector<double> log_safe_; // [node * J + j] = log(1 - p_j^exp(alpha))
    std::vector<double> tox_;      // [node * J + j] = p_j^exp(alpha)
};

/// Convenience wrappers constructing a transient engine.
CrmPosterior posterior_summary(const TrialState& state, const CrmConfig& cfg);
int recommend_next_dose(const TrialState& state, const CrmConfig& cfg);
int select_mtd(const TrialState& state, const CrmConfig& cfg);

}  // namespace dosefind
