#include "dosefind/crm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dosefind {

namespace {

constexpr double kTieTolerance = 1e-12;

int clamp_dose(int dose, int lo, int hi) {
    return std::max(lo, std::min(hi, dose));
}

}  // namespace

CrmConfig CrmConfig::six_dose_default() {
    return CrmConfig{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 0.3, 1.34, CrmEstimator::PlugIn};
}

void CrmConfig::validate() const {
    if (skeleton.empty()) {
        throw std::invalid_argument("skeleton must have at least one dose");
    }
    for (std::size_t j = 0; j < skeleton.size(); ++j) {
        if (!(skeleton[j] > 0.0 && skeleton[j] < 1.0)) {
            throw std::invalid_argument("skeleton[" + std::to_string(j) + "] must lie in (0,1)");
        }
        if (j > 0 && !(skeleton[j] > skeleton[j - 1])) {
            throw std::invalid_argument("skeleton must be strictly increasing");
        }
    }
    if (!(target > 0.0 && target < 1.0)) {
        throw std::invalid_argument("target must lie in (0,1)");
    }
    if (!(prior_variance > 0.0) || !std::isfinite(prior_variance)) {
        throw std::invalid_argument("prior variance must be positive");
    }
}

double log1m_exp(double x) {
    if (x >= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return x > -M_LN2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double log_unnormalized_posterior(double alpha, const TrialState& state, const CrmConfig& cfg) {
    if (!std::isfinite(alpha)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double scale = std::exp(alpha);
    double lp = -alpha * alpha / (2.0 * cfg.prior_variance);
    for (std::size_t j = 0; j < cfg.skeleton.size(); ++j) {
        if (state.n[j] == 0) {
            continue;
        }
        const double log_tox = scale * std::log(cfg.skeleton[j]);
        if (state.y[j] > 0) {
            lp += state.y[j] * log_tox;
        }
        if (state.n[j] > state.y[j]) {
            lp += (state.n[j] - state.y[j]) * log1m_exp(log_tox);
        }
    }
    return std::isnan(lp) ? -std::numeric_limits<double>::infinity() : lp;
}

int closest_to_target(std::span<const double> estimates, double target) {
    if (estimates.empty()) {
        throw std::invalid_argument("no estimates to choose from");
    }
    std::size_t best = 0;
    double best_gap = std::abs(estimates[0] - target);
    for (std::size_t j = 1; j < estimates.size(); ++j) {
        const double gap = std::abs(estimates[j] - target);
        if (gap < best_gap - kTieTolerance) {
            best = j;
            best_gap = gap;
        }
    }
    return static_cast<int>(best) + 1;
}

CrmEngine::CrmEngine(CrmConfig cfg, QuadratureSettings quad) : cfg_(std::move(cfg)), quad_(quad) {
    cfg_.validate();
    if (quad_.base_intervals < 2 || quad_.base_intervals % 2 != 0 || quad_.max_refinements < 1 ||
        !(quad_.half_width > 0.0) || !(quad_.tolerance > 0.0)) {
        throw std::invalid_argument("invalid quadrature settings");
    }
    const std::size_t intervals = static_cast<std::size_t>(quad_.base_intervals)
                                  << quad_.max_refinements;
    nodes_ = intervals + 1;
    step_ = 2.0 * quad_.half_width / static_cast<double>(intervals);

    const std::size_t J = cfg_.num_doses();
    alpha_.resize(nodes_);
    log_tox_.resize(nodes_ * J);
    log_safe_.resize(nodes_ * J);
    tox_.resize(nodes_ * J);
    for (std::size_t k = 0; k < nodes_; ++k) {
        const double a = -quad_.half_width + step_ * static_cast<double>(k);
        alpha_[k] = a;
        const double scale = std::exp(a);
        for (std::size_t j = 0; j < J; ++j) {
            const double lt = scale * std::log(cfg_.skeleton[j]);
            log_tox_[k * J + j] = lt;
            log_safe_[k * J + j] = log1m_exp(lt);
            tox_[k * J + j] = std::exp(lt);
        }
    }
}

CrmPosterior CrmEngine::posterior(const TrialState& state) const {
    const std::size_t J = cfg_.num_doses();
    state.validate(J);

    // Only doses with data enter the likelihood.
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < J; ++j) {
        if (state.n[j] > 0) {
            active.push_back(j);
        }
    }
    const double inv_two_var = 1.0 / (2.0 * cfg_.prior_variance);
    auto log_post = [&](std::size_t k) {
        double lp = -alpha_[k] * alpha_[k] * inv_two_var;
        const std::size_t row = k * J;
        for (std::size_t j : active) {
            const int tox = state.y[j];
            const int safe = state.n[j] - tox;
            if (tox > 0) {
                lp += tox * log_tox_[row + j];
            }
            if (safe > 0) {
                lp += safe * log_safe_[row + j];
            }
        }
        return lp;
    };

    const bool want_tox_means = cfg_.estimator == CrmEstimator::PosteriorMean;
    std::vector<double> weight(nodes_, 0.0);

    struct Sums {
        double z = 0.0, m1 = 0.0, m2 = 0.0;
        std::vector<double> tox;
    };
    auto simpson = [&](std::size_t stride) {
        Sums s;
        s.tox.assign(want_tox_means ? J : 0, 0.0);
        const std::size_t last = nodes_ - 1;
        for (std::size_t k = 0, i = 0; k < nodes_; k += stride, ++i) {
            const double c = (k == 0 || k == last) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            const double w = c * weight[k];
            s.z += w;
            s.m1 += w * alpha_[k];
            s.m2 += w * alpha_[k] * alpha_[k];
            if (want_tox_means) {
                for (std::size_t j = 0; j < J; ++j) {
                    s.tox[j] += w * tox_[k * J + j];
                }
            }
        }
        const double h = step_ * static_cast<double>(stride) / 3.0;
        s.z *= h;
        s.m1 *= h;
        s.m2 *= h;
        for (double& t : s.tox) {
            t *= h;
        }
        return s;
    };

    const int levels = quad_.max_refinements;
    std::size_t stride = std::size_t{1} << levels;

    // Coarsest level fixes the shift used for every later exp().
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nodes_; k += stride) {
        const double lp = log_post(k);
        weight[k] = lp;
        shift = std::max(shift, lp);
    }
    for (std::size_t k = 0; k < nodes_; k += stride) {
        weight[k] = std::exp(weight[k] - shift);
    }
    Sums prev = simpson(stride);

    for (int level = 1; level <= levels; ++level) {
        const std::size_t half = stride / 2;
        for (std::size_t k = half; k < nodes_; k += stride) {
            weight[k] = std::exp(log_post(k) - shift);
        }
        stride = half;
        Sums cur = simpson(stride);

        bool converged = std::abs(cur.z - prev.z) <= quad_.tolerance * cur.z &&
                         std::abs(cur.m1 / cur.z - prev.m1 / prev.z) <= quad_.tolerance;
        for (std::size_t j = 0; converged && j < cur.tox.size(); ++j) {
            converged = std::abs(cur.tox[j] / cur.z - prev.tox[j] / prev.z) <= quad_.tolerance;
        }
        if (converged) {
            CrmPosterior post;
            post.alpha_mean = cur.m1 / cur.z;
            post.alpha_second_moment = cur.m2 / cur.z;
            post.log_normalizer = shift + std::log(cur.z);
            post.tox_estimates.resize(J);
            const double scale = std::exp(post.alpha_mean);
            for (std::size_t j = 0; j < J; ++j) {
                post.tox_estimates[j] = want_tox_means ? cur.tox[j] / cur.z
                                                       : std::pow(cfg_.skeleton[j], scale);
            }
            return post;
        }
        prev = std::move(cur);
    }
    throw QuadratureError("posterior quadrature did not settle to " +
                          std::to_string(quad_.tolerance) + " after " +
                          std::to_string(levels) + " refinements");
}

int CrmEngine::recommend_next_dose(const TrialState& state) const {
    const CrmPosterior post = posterior(state);
    const int best = closest_to_target(post.tox_estimates, cfg_.target);
    const int J = static_cast<int>(num_doses());
    return clamp_dose(best, std::max(1, state.current_dose - 1), std::min(J, state.current_dose + 1));
}

int CrmEngine::select_mtd(const TrialState& state) const {
    return closest_to_target(posterior(state).tox_estimates, cfg_.target);
}

CrmPosterior posterior_summary(const TrialState& state, const CrmConfig& cfg) {
    return CrmEngine(cfg).posterior(state);
}

int recommend_next_dose(const TrialState& state, const CrmConfig& cfg) {
    return CrmEngine(cfg).recommend_next_dose(state);
}

int select_mtd(const TrialState& state, const CrmConfig& cfg) {
    return CrmEngine(cfg).select_mtd(state);
}

}  // namespace dosefind
