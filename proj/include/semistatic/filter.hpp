/*
 * Copyright 2026 The Semistatic Mapping Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cassert>
#include <cmath>
#include <optional>
#include <utility>

namespace semistatic {

// Joint per-object state: a Gaussian over the geometric change l and a Beta
// over the stationarity score v. alpha/beta act as inlier/outlier
// pseudo-counts of the measurements fused so far.
struct GaussianBetaState {
  double mu = 0.0;
  double sigma2 = 1.0;
  double alpha = 1.0;
  double beta = 1.0;

  double expected_v() const { return alpha / (alpha + beta); }

  double expected_v2() const {
    const double s = alpha + beta;
    return alpha * (alpha + 1.0) / (s * (s + 1.0));
  }

  bool valid() const {
    return sigma2 > 0.0 && alpha > 0.0 && beta > 0.0 && std::isfinite(mu) &&
           std::isfinite(sigma2) && std::isfinite(alpha) && std::isfinite(beta);
  }
};

/// One fused measurement: the TSDF change measure and the binary stationarity
/// class of the matched observation.
struct MeasurementFeature {
  double delta = 0.0;
  int s = 1;
};

struct LikelihoodConfig {
  double tau = 1.0;          // inlier measurement std, in change-measure units
  double delta_max = 10.0;   // half-width of the uniform outlier support
  double k_static = 1.0;     // semantic-evidence weight, baseline
  double k_dynamic = 3.0;    // semantic-evidence weight on large dynamic change
  double sigma_meas = 1.0;   // geometric verification std (defaults to tau)
  double v_max = 0.97;       // confidence clamp on E[v]
  double theta_stat = 0.25;  // pruning threshold on E[v]
  double sigma0_sq = 1.0;    // initial change variance for fresh objects

  bool valid() const {
    return tau > 0.0 && delta_max >= 10.0 * tau && k_static > 0.0 && k_dynamic > 0.0 &&
           sigma_meas > 0.0 && v_max > 0.0 && v_max < 1.0 && theta_stat > 0.0 &&
           theta_stat < v_max && sigma0_sq > 0.0;
  }
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  static const double kLog2Pi = std::log(2.0 * 3.14159265358979323846);
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

inline double normal_pdf(double x, double mean, double var) {
  return std::exp(log_normal_pdf(x, mean, var));
}

inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace detail

/// Gaussian-Uniform mixture density of a change measurement given the latent
/// change l and stationarity v:
///   p(delta | l, v) = v N(delta | l, tau^2) + (1 - v) U(delta | +-delta_max)
inline double mixture_likelihood(double delta, double l, double v, const LikelihoodConfig& cfg) {
  const double inlier = detail::normal_pdf(delta, l, cfg.tau * cfg.tau);
  const double outlier =
      std::abs(delta) <= cfg.delta_max ? 1.0 / (2.0 * cfg.delta_max) : 0.0;
  return v * inlier + (1.0 - v) * outlier;
}

/// Weight on the Bernoulli semantic-evidence term. Dynamic-class observations
/// carrying a large measured change shift the Beta counts harder; everything
/// else gets the baseline weight.
inline double adaptive_factor(int s, double delta, const LikelihoodConfig& cfg) {
  if (s == 0 && std::abs(delta) > 2.0 * cfg.tau) return cfg.k_dynamic;
  return cfg.k_static;
}

/// Unnormalized joint posterior density, the quadrature reference integrand:
///   p(delta | l, v) Bernoulli(s | v)^k N(l | mu, sigma^2) Beta(v | alpha, beta)
inline double true_posterior_density(double l, double v, const MeasurementFeature& z,
                                     const GaussianBetaState& prior, double k,
                                     const LikelihoodConfig& cfg) {
  if (v <= 0.0 || v >= 1.0) return 0.0;
  const double semantic = z.s == 1 ? std::pow(v, k) : std::pow(1.0 - v, k);
  const double beta_pdf = std::exp((prior.alpha - 1.0) * std::log(v) +
                                   (prior.beta - 1.0) * std::log1p(-v) -
                                   detail::log_beta_fn(prior.alpha, prior.beta));
  return mixture_likelihood(z.delta, l, v, cfg) * semantic *
         detail::normal_pdf(l, prior.mu, prior.sigma2) * beta_pdf;
}

inline double true_posterior_density(double l, double v, const MeasurementFeature& z,
                                     const GaussianBetaState& prior,
                                     const LikelihoodConfig& cfg) {
  return true_posterior_density(l, v, z, prior, adaptive_factor(z.s, z.delta, cfg), cfg);
}

/// Normalized probabilities of the measurement being an inlier (C1) and an
/// outlier (C2). Computed in log space; nullopt when both branch weights
/// underflow, which signals a mis-scaled tau / delta_max.
inline std::optional<std::pair<double, double>> mixture_weights(const GaussianBetaState& prior,
                                                                const MeasurementFeature& z,
                                                                double k,
                                                                const LikelihoodConfig& cfg) {
  assert(std::abs(z.delta) <= cfg.delta_max + 1e-12);
  const double ks = k * static_cast<double>(z.s);
  const double k1s = k * static_cast<double>(1 - z.s);
  const double lb0 = detail::log_beta_fn(prior.alpha, prior.beta);
  const double lw1 = detail::log_normal_pdf(z.delta, prior.mu, prior.sigma2 + cfg.tau * cfg.tau) +
                     detail::log_beta_fn(prior.alpha + ks + 1.0, prior.beta + k1s) - lb0;
  const double lw2 = -std::log(2.0 * cfg.delta_max) +
                     detail::log_beta_fn(prior.alpha + ks, prior.beta + k1s + 1.0) - lb0;
  if (!std::isfinite(lw1) && !std::isfinite(lw2)) return std::nullopt;
  const double m = std::max(lw1, lw2);
  if (!std::isfinite(m)) return std::nullopt;
  const double e1 = std::exp(lw1 - m);
  const double e2 = std::exp(lw2 - m);
  const double sum = e1 + e2;
  if (!(sum > 0.0) || !std::isfinite(sum)) return std::nullopt;
  return std::make_pair(e1 / sum, e2 / sum);
}

inline std::optional<std::pair<double, double>> mixture_weights(const GaussianBetaState& prior,
                                                                const MeasurementFeature& z,
                                                                const LikelihoodConfig& cfg) {
  return mixture_weights(prior, z, adaptive_factor(z.s, z.delta, cfg), cfg);
}

/// Moment-matched Bayesian update. The true posterior is a two-branch
/// Gaussian-Beta mixture:
///   C1 N(l | m, gamma^2) Beta(v | alpha + ks + 1, beta + k(1-s))
/// + C2 N(l | mu, sigma^2) Beta(v | alpha + ks, beta + k(1-s) + 1)
/// with 1/gamma^2 = 1/sigma^2 + 1/tau^2, m = gamma^2 (mu/sigma^2 + delta/tau^2).
/// The returned state matches the mixture's first and second moments in l and
/// v. nullopt when the matched Beta parameters are numerically degenerate;
/// callers keep the prior in that case.
inline std::optional<GaussianBetaState> bayesian_update(const GaussianBetaState& prior,
                                                        const MeasurementFeature& z, double k,
                                                        const LikelihoodConfig& cfg) {
  const auto weights = mixture_weights(prior, z, k, cfg);
  if (!weights) return std::nullopt;
  const auto [c1, c2] = *weights;

  const double tau2 = cfg.tau * cfg.tau;
  const double gamma2 = 1.0 / (1.0 / prior.sigma2 + 1.0 / tau2);
  const double m = gamma2 * (prior.mu / prior.sigma2 + z.delta / tau2);

  GaussianBetaState post;
  post.mu = c1 * m + c2 * prior.mu;
  post.sigma2 = c1 * gamma2 + c2 * prior.sigma2 + c1 * c2 * (m - prior.mu) * (m - prior.mu);

  const double ks = k * static_cast<double>(z.s);
  const double k1s = k * static_cast<double>(1 - z.s);
  const double a1 = prior.alpha + ks + 1.0, b1 = prior.beta + k1s;
  const double a2 = prior.alpha + ks, b2 = prior.beta + k1s + 1.0;
  const double s0 = a1 + b1;  // == a2 + b2
  const double m1 = a1 / s0, m2 = a2 / s0;
  const double var1 = a1 * b1 / (s0 * s0 * (s0 + 1.0));
  const double var2 = a2 * b2 / (s0 * s0 * (s0 + 1.0));
  const double f = c1 * m1 + c2 * m2;
  const double var_v = c1 * var1 + c2 * var2 + c1 * c2 * (m1 - m2) * (m1 - m2);

  if (!(f > 0.0) || !(f < 1.0) || !(var_v > 0.0)) return std::nullopt;
  const double s_new = f * (1.0 - f) / var_v - 1.0;
  post.alpha = f * s_new;
  post.beta = (1.0 - f) * s_new;
  if (!post.valid()) return std::nullopt;
  return post;
}

inline std::optional<GaussianBetaState> bayesian_update(const GaussianBetaState& prior,
                                                        const MeasurementFeature& z,
                                                        const LikelihoodConfig& cfg) {
  return bayesian_update(prior, z, adaptive_factor(z.s, z.delta, cfg), cfg);
}

/// Confidence clamping: skip updates that would push E[v] above v_max, so a
/// long-stationary object can still react to future change. Downward moves
/// always pass.
inline GaussianBetaState apply_clamp(const GaussianBetaState& prior,
                                     const GaussianBetaState& candidate,
                                     const LikelihoodConfig& cfg) {
  if (candidate.expected_v() > cfg.v_max && candidate.expected_v() > prior.expected_v()) {
    return prior;
  }
  return candidate;
}

/// True when the measured change is small enough that the observation still
/// describes the mapped object and may be integrated into its model.
inline bool geometric_verification(double delta, const LikelihoodConfig& cfg) {
  return std::abs(delta) <= cfg.sigma_meas / 2.0;
}

inline bool should_prune(const GaussianBetaState& state, const LikelihoodConfig& cfg) {
  return state.expected_v() < cfg.theta_stat;
}

}  // namespace semistatic
