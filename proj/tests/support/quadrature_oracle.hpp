// Test-only numerical reference for the Gaussian-Beta update: integrates the
// unnormalized joint posterior density on a 2-D grid and reports the
// moment-matched parameters. Deliberately independent of the closed-form
// update path: no fused Gaussian algebra, no Beta-function ratios.
//
// l axis: composite Simpson over a window covering both the prior and the
// measurement peaks, resolved well below the narrowest possible fused scale.
// v axis: tanh-sinh nodes, which absorb the integrable endpoint
// singularities a Beta with alpha or beta < 1 puts at 0 and 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "semistatic/filter.hpp"

namespace semistatic::testing {

struct QuadratureMoments {
  double mu = 0.0;
  double sigma2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double e_v = 0.0;
  double e_v2 = 0.0;
  double inlier_mass_fraction = 0.0;  // branch-1 share of the total mass
};

namespace detail {

struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace detail

inline QuadratureMoments quadrature_posterior(const GaussianBetaState& prior,
                                              const MeasurementFeature& z, double k,
                                              const LikelihoodConfig& cfg) {
  const double sigma = std::sqrt(prior.sigma2);
  const double tau = cfg.tau;
  const double gamma_scale = sigma * tau / std::sqrt(prior.sigma2 + tau * tau);

  // l grid
  const double lo = std::min(prior.mu - 12.0 * sigma, z.delta - 12.0 * tau);
  const double hi = std::max(prior.mu + 12.0 * sigma, z.delta + 12.0 * tau);
  int nl = static_cast<int>(std::ceil((hi - lo) * 6.0 / gamma_scale));
  nl = std::clamp(nl, 4000, 40000);
  if (nl % 2 == 1) ++nl;  // Simpson needs an even interval count
  const double h = (hi - lo) / nl;

  const double tau2 = tau * tau;
  std::vector<double> l_val(nl + 1), g1w(nl + 1), u0w(nl + 1);
  const double u0 = std::abs(z.delta) <= cfg.delta_max ? 1.0 / (2.0 * cfg.delta_max) : 0.0;
  for (int i = 0; i <= nl; ++i) {
    const double l = lo + h * i;
    const double simpson = (i == 0 || i == nl) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double w = simpson * h / 3.0;
    const double g0 =
        std::exp(-(l - prior.mu) * (l - prior.mu) / (2.0 * prior.sigma2));  // unnormalized
    const double g1 = std::exp(-(z.delta - l) * (z.delta - l) / (2.0 * tau2)) /
                      std::sqrt(2.0 * 3.14159265358979323846 * tau2);
    l_val[i] = l;
    g1w[i] = w * g0 * g1;
    u0w[i] = w * g0 * u0;
  }

  // v nodes: v = 1/2 (1 + tanh((pi/2) sinh t)) on a uniform t grid.
  const double a_exp = prior.alpha + k * static_cast<double>(z.s);
  const double b_exp = prior.beta + k * static_cast<double>(1 - z.s);
  const double ht = 0.008;
  const int kt = static_cast<int>(std::ceil(6.2 / ht));
  std::vector<double> v_val, wa, wb;  // wa: v-branch weight, wb: (1-v)-branch weight
  v_val.reserve(2 * kt + 1);
  wa.reserve(2 * kt + 1);
  wb.reserve(2 * kt + 1);
  const double log_ht = std::log(ht);
  const auto xlog = [](double c, double lg) { return c == 0.0 ? 0.0 : c * lg; };
  for (int n = -kt; n <= kt; ++n) {
    const double t = n * ht;
    const double x = 0.5 * 3.14159265358979323846 * std::sinh(t);
    const double log_v = -std::log1p(std::exp(-2.0 * x));
    const double log_1mv = -std::log1p(std::exp(2.0 * x));
    // Nodes where v itself underflows carry double-exponentially small
    // weights; skip them rather than juggling infinities.
    if (!std::isfinite(log_v) || !std::isfinite(log_1mv)) continue;
    // dv/dt = (pi/4) cosh(t) sech^2(x)
    const double log_w = std::log(0.25 * 3.14159265358979323846 * std::cosh(t)) -
                         2.0 * (std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) -
                                std::log(2.0));
    // Beta-shaped factor v^(a_exp-1) (1-v)^(b_exp-1), normalizer dropped.
    const double log_base = xlog(a_exp - 1.0, log_v) + xlog(b_exp - 1.0, log_1mv) + log_w;
    const double la = log_base + log_v + log_ht;
    const double lb = log_base + log_1mv + log_ht;
    const double va = std::exp(la);
    const double vb = std::exp(lb);
    if (va == 0.0 && vb == 0.0) continue;
    v_val.push_back(std::exp(log_v));
    wa.push_back(va);
    wb.push_back(vb);
  }

  detail::KahanSum mass_a, mass_b, ml, mll, mv, mvv;
  for (std::size_t j = 0; j < v_val.size(); ++j) {
    double row = 0.0, row_l = 0.0, row_ll = 0.0, row_a = 0.0, row_b = 0.0;
    const double aj = wa[j], bj = wb[j];
    for (int i = 0; i <= nl; ++i) {
      const double ca = aj * g1w[i];
      const double cb = bj * u0w[i];
      const double c = ca + cb;
      row += c;
      row_a += ca;
      row_b += cb;
      row_l += l_val[i] * c;
      row_ll += l_val[i] * l_val[i] * c;
    }
    mass_a.add(row_a);
    mass_b.add(row_b);
    ml.add(row_l);
    mll.add(row_ll);
    mv.add(v_val[j] * row);
    mvv.add(v_val[j] * v_val[j] * row);
  }

  const double mass = mass_a.sum + mass_b.sum;
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::runtime_error("quadrature oracle: vanishing posterior mass");
  }

  QuadratureMoments out;
  out.mu = ml.sum / mass;
  out.sigma2 = mll.sum / mass - out.mu * out.mu;
  out.e_v = mv.sum / mass;
  out.e_v2 = mvv.sum / mass;
  out.inlier_mass_fraction = mass_a.sum / mass;
  // Invert the Beta moments (the definition of moment matching).
  const double var_v = out.e_v2 - out.e_v * out.e_v;
  const double s = out.e_v * (1.0 - out.e_v) / var_v - 1.0;
  out.alpha = out.e_v * s;
  out.beta = (1.0 - out.e_v) * s;
  return out;
}

/// Steps of repeated updates with measurement z until should_prune fires;
/// each step runs the quadrature reference, not the closed form.
inline int quadrature_steps_to_prune(GaussianBetaState state, const MeasurementFeature& z,
                                     double k, const LikelihoodConfig& cfg, int max_steps = 200) {
  for (int step = 1; step <= max_steps; ++step) {
    const QuadratureMoments q = quadrature_posterior(state, z, k, cfg);
    state.mu = q.mu;
    state.sigma2 = q.sigma2;
    state.alpha = q.alpha;
    state.beta = q.beta;
    if (should_prune(state, cfg)) return step;
  }
  return -1;
}

}  // namespace semistatic::testing
