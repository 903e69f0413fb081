#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "clgpn/errors.hpp"
#include "clgpn/sampler.hpp"

namespace clgpn {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double var) {
  const double e = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * e * e / var;
}

double log_inverse_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

// log of Pr(-1 < rho < 1) under the untruncated normal prior
double log_rho_prior_mass(const Priors& pr) {
  const double sd = std::sqrt(pr.rho_var);
  const double hi = 0.5 * std::erfc(-(1.0 - pr.rho_mean) / (sd * std::numbers::sqrt2));
  const double lo = 0.5 * std::erfc(-(-1.0 - pr.rho_mean) / (sd * std::numbers::sqrt2));
  return std::log(hi - lo);
}

Eigen::VectorXd draw_gaussian(const GaussianConditional& g, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
  Eigen::VectorXd e(g.mean.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = rng.normal();
  return g.mean + llt.matrixL() * e;
}

Eigen::Matrix2d sigma_matrix(double sigma1_sq, double rho) {
  const double s1 = std::sqrt(sigma1_sq);
  Eigen::Matrix2d s;
  s << sigma1_sq, s1 * rho, s1 * rho, 1.0;
  return s;
}

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double top = std::max(a, b);
  return top + std::log(std::exp(a - top) + std::exp(b - top));
}

}  // namespace

void Priors::validate() const {
  if (!(mu_var > 0.0) || !(gamma_var > 0.0) || !(rho_var > 0.0)) throw InputError("prior variances must be positive");
  if (!(ig_shape > 0.0) || !(ig_rate > 0.0)) throw InputError("inverse gamma shape and rate must be positive");
  if (!(beta > 0.0)) throw InputError("Dirichlet concentration beta must be positive");
}

void ChainConfig::validate() const {
  if (iterations == 0 || thin == 0 || adapt_window == 0) {
    throw InputError("iterations, thin and adapt_window must be positive");
  }
  if (burnin >= iterations) throw InputError("burnin must be smaller than iterations");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target_accept must lie in (0, 1)");
  if (K < 1) throw InputError("K must be at least 1");
  if (K > 8) throw InputError("K must be at most 8");
}

void RegimeStats::add(double z1, double z2, double y) {
  n += 1.0;
  sum_z(0) += z1;
  sum_z(1) += z2;
  sum_zz(0, 0) += z1 * z1;
  sum_zz(0, 1) += z1 * z2;
  sum_zz(1, 1) += z2 * z2;
  sum_zz(1, 0) = sum_zz(0, 1);
  const Eigen::Vector3d row(1.0, z1, z2);
  xtx.noalias() += row * row.transpose();
  xty += row * y;
  yty += y * y;
}

Eigen::Matrix2d RegimeStats::scatter_about(double mu1, double mu2) const {
  const Eigen::Vector2d mu(mu1, mu2);
  return sum_zz - mu * sum_z.transpose() - sum_z * mu.transpose() + n * mu * mu.transpose();
}

double RegimeStats::residual_ss(const RegimeParams& p) const {
  const Eigen::Vector3d g(p.gamma0, p.gamma1, p.gamma2);
  return std::max(0.0, yty - 2.0 * g.dot(xty) + g.dot(xtx * g));
}

std::vector<RegimeStats> regime_stats(const StateSequence& s, const CompletedSeries& data, int K) {
  std::vector<RegimeStats> stats(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = s.radii[i];
    stats[static_cast<std::size_t>(s.labels[i + 1])].add(r * std::cos(data.x[i]), r * std::sin(data.x[i]), data.y[i]);
  }
  return stats;
}

GaussianConditional mu_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr) {
  const Eigen::Matrix2d sigma_inv = sigma_matrix(p.sigma1_sq, p.rho).inverse();
  const Eigen::Matrix2d precision = st.n * sigma_inv + Eigen::Matrix2d::Identity() / pr.mu_var;
  const Eigen::Matrix2d cov = precision.inverse();
  const Eigen::Vector2d rhs = sigma_inv * st.sum_z + Eigen::Vector2d::Constant(pr.mu_mean / pr.mu_var);
  return {cov * rhs, cov};
}

GaussianConditional gamma_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr) {
  const double inv_sy = 1.0 / p.sigma_y_sq;
  if (p.variant == Variant::IndCLGPN) {
    const double precision = st.n * inv_sy + 1.0 / pr.gamma_var;
    Eigen::VectorXd mean(1);
    Eigen::MatrixXd cov(1, 1);
    cov(0, 0) = 1.0 / precision;
    mean(0) = cov(0, 0) * (st.xty(0) * inv_sy + pr.gamma_mean / pr.gamma_var);
    return {mean, cov};
  }
  const Eigen::Matrix3d precision = st.xtx * inv_sy + Eigen::Matrix3d::Identity() / pr.gamma_var;
  const Eigen::Matrix3d cov = precision.inverse();
  const Eigen::Vector3d rhs = st.xty * inv_sy + Eigen::Vector3d::Constant(pr.gamma_mean / pr.gamma_var);
  return {cov * rhs, cov};
}

InverseGammaParams sigma_y_conditional(const RegimeStats& st, const RegimeParams& p, const Priors& pr) {
  return {pr.ig_shape + 0.5 * st.n, pr.ig_rate + 0.5 * st.residual_ss(p)};
}

void update_mu(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng) {
  const Eigen::VectorXd mu = draw_gaussian(mu_conditional(st, p, pr), rng);
  p.mu1 = mu(0);
  p.mu2 = mu(1);
}

void update_gamma(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng) {
  const Eigen::VectorXd g = draw_gaussian(gamma_conditional(st, p, pr), rng);
  p.gamma0 = g(0);
  if (p.variant != Variant::IndCLGPN) {
    p.gamma1 = g(1);
    p.gamma2 = g(2);
  }
}

void update_sigma_y(RegimeParams& p, const RegimeStats& st, const Priors& pr, Rng& rng) {
  const auto ig = sigma_y_conditional(st, p, pr);
  p.sigma_y_sq = rng.inverse_gamma(ig.shape, ig.rate);
}

void AdaptiveScale::record(bool accept) {
  ++window_tried;
  ++tried;
  if (accept) {
    ++window_accepted;
    ++accepted;
  }
}

void AdaptiveScale::adapt(double target) {
  if (window_tried == 0) return;
  ++batches;
  const double rate = static_cast<double>(window_accepted) / static_cast<double>(window_tried);
  const double step = 1.0 / std::sqrt(static_cast<double>(batches));
  log_scale = std::clamp(log_scale + step * (rate - target), -12.0, 6.0);
  window_accepted = window_tried = 0;
}

void BlockProposal::observe(const Eigen::Vector2d& u) {
  ++n;
  const Eigen::Vector2d delta = u - mean;
  mean += delta / static_cast<double>(n);
  m2.noalias() += delta * (u - mean).transpose();
}

Eigen::Matrix2d BlockProposal::covariance() const {
  if (n < 100) return 0.1 * Eigen::Matrix2d::Identity();
  return m2 / static_cast<double>(n - 1) + 1e-6 * Eigen::Matrix2d::Identity();
}

double sigma_rho_log_target(double log_sigma1_sq, double atanh_rho, const RegimeStats& st, const RegimeParams& p,
                            const Priors& pr) {
  const double sigma1_sq = std::exp(log_sigma1_sq);
  const double rho = std::tanh(atanh_rho);
  const double one_minus = 1.0 - rho * rho;
  if (!(sigma1_sq > 0.0) || !std::isfinite(sigma1_sq) || !(one_minus > 0.0)) return kNegInf;

  const double det = sigma1_sq * one_minus;
  const double s1 = std::sqrt(sigma1_sq);
  Eigen::Matrix2d inv;
  inv << 1.0 / det, -s1 * rho / det, -s1 * rho / det, sigma1_sq / det;
  const Eigen::Matrix2d scatter = st.scatter_about(p.mu1, p.mu2);
  const double loglik = -st.n * kLogTwoPi - 0.5 * st.n * std::log(det) - 0.5 * (inv.cwiseProduct(scatter)).sum();
  const double logprior = log_inverse_gamma_pdf(sigma1_sq, pr.ig_shape, pr.ig_rate) +
                          log_normal_pdf(rho, pr.rho_mean, pr.rho_var);
  // d sigma1_sq / d log sigma1_sq = sigma1_sq; d rho / d atanh rho = 1 - rho^2
  const double log_jacobian = log_sigma1_sq + std::log(one_minus);
  const double total = loglik + logprior + log_jacobian;
  return std::isfinite(total) ? total : kNegInf;
}

bool update_sigma1_rho(RegimeParams& p, const RegimeStats& st, const Priors& pr, BlockProposal& prop, Rng& rng) {
  if (p.variant == Variant::CLDPN) return false;
  const Eigen::Vector2d current(std::log(p.sigma1_sq), std::atanh(p.rho));
  const Eigen::Matrix2d cov = std::exp(2.0 * prop.scale.log_scale) * prop.covariance();
  const Eigen::LLT<Eigen::Matrix2d> llt(cov);
  const Eigen::Vector2d e(rng.normal(), rng.normal());
  const Eigen::Vector2d proposal = current + llt.matrixL() * e;

  const double log_current = sigma_rho_log_target(current(0), current(1), st, p, pr);
  const double log_proposal = sigma_rho_log_target(proposal(0), proposal(1), st, p, pr);
  const bool accept = log_proposal != kNegInf && std::log(rng.uniform()) < log_proposal - log_current;
  if (accept) {
    p.sigma1_sq = std::exp(proposal(0));
    p.rho = std::tanh(proposal(1));
  }
  prop.scale.record(accept);
  if (!prop.frozen) prop.observe(accept ? proposal : current);
  return accept;
}

double radius_log_target(double log_r, double m, double v) {
  const double r = std::exp(log_r);
  // log r from the density, another log r from the Jacobian of r = exp(log r)
  return 2.0 * log_r - 0.5 * (r - m) * (r - m) / v;
}

double update_radius(double r, double m, double v, AdaptiveScale& scale, Rng& rng) {
  const double current = std::log(r);
  const double proposal = current + std::exp(scale.log_scale) * rng.normal();
  const double log_ratio = radius_log_target(proposal, m, v) - radius_log_target(current, m, v);
  const double r_new = std::exp(proposal);
  const bool accept = r_new > 0.0 && std::isfinite(r_new) && std::log(rng.uniform()) < log_ratio;
  scale.record(accept);
  return accept ? r_new : r;
}

double sample_radius_exact(double m, double v, Rng& rng) {
  // Standardize r = sqrt(v) (u0 + s); s > -u0 has density proportional to (u0 + s) phi(s)
  // with survival function S(s) = phi(s) - s Phi(-s) + (u0 + s) Phi(-s).
  const double sd = std::sqrt(v);
  const double u0 = m / sd;
  const auto log_survival = [u0](double s) {
    const double tail = u0 + s > 0.0 ? std::log(u0 + s) + log_normal_cdf(-s) : kNegInf;
    return log_sum_exp(log_normal_partial_moment(-s), tail);
  };
  const double target = std::log(rng.uniform()) + log_normal_partial_moment(u0);

  double lo = -u0;
  double width = 1.0;
  double hi = std::max(lo, 0.0) + width;
  while (log_survival(hi) > target) {
    lo = hi;
    width *= 2.0;
    hi += width;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_survival(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r = sd * (u0 + 0.5 * (lo + hi));
  return r > 0.0 ? r : std::numeric_limits<double>::min();
}

ImputedPoint impute_missing(const Observation& o, double r, const RegimeParams& p, Rng& rng) {
  ImputedPoint out;
  const double sy = std::sqrt(p.sigma_y_sq);
  if (o.x) {
    if (o.y) throw InputError("impute_missing: observation has no missing coordinate");
    out.x = o.x->value();
    out.r = r;
    out.y = p.gamma0 + r * (p.gamma1 * std::cos(out.x) + p.gamma2 * std::sin(out.x)) + sy * rng.normal();
    return out;
  }

  std::array<double, 2> z{};
  if (!o.y) {
    z = sample_latent(p, rng);
  } else {
    // z | y for z ~ N2(mu, Sigma), y = gamma0 + gamma'z + eps
    const Eigen::Matrix2d sigma = sigma_matrix(p.sigma1_sq, p.rho);
    const Eigen::Vector2d g(p.gamma1, p.gamma2);
    const Eigen::Vector2d mu(p.mu1, p.mu2);
    const Eigen::Vector2d sg = sigma * g;
    const double s2 = g.dot(sg) + p.sigma_y_sq;
    const Eigen::Vector2d mean = mu + sg * ((*o.y - p.gamma0 - g.dot(mu)) / s2);
    const Eigen::Matrix2d cov = sigma - sg * sg.transpose() / s2;
    const double l11 = std::sqrt(std::max(cov(0, 0), 0.0));
    const double l21 = l11 > 0.0 ? cov(1, 0) / l11 : 0.0;
    const double l22 = std::sqrt(std::max(cov(1, 1) - l21 * l21, 0.0));
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    z = {mean(0) + l11 * e1, mean(1) + l21 * e1 + l22 * e2};
  }
  while (z[0] == 0.0 && z[1] == 0.0) z = sample_latent(p, rng);
  out.x = atan2_star(z[0], z[1]).value();
  out.r = std::hypot(z[0], z[1]);
  out.y = o.y ? *o.y : p.gamma0 + p.gamma1 * z[0] + p.gamma2 * z[1] + sy * rng.normal();
  return out;
}

double log_prior_params(const RegimeParams& p, const Priors& pr) {
  double lp = log_normal_pdf(p.mu1, pr.mu_mean, pr.mu_var) + log_normal_pdf(p.mu2, pr.mu_mean, pr.mu_var);
  lp += log_normal_pdf(p.gamma0, pr.gamma_mean, pr.gamma_var);
  if (p.variant != Variant::IndCLGPN) {
    lp += log_normal_pdf(p.gamma1, pr.gamma_mean, pr.gamma_var) + log_normal_pdf(p.gamma2, pr.gamma_mean, pr.gamma_var);
  }
  lp += log_inverse_gamma_pdf(p.sigma_y_sq, pr.ig_shape, pr.ig_rate);
  if (p.variant != Variant::CLDPN) {
    lp += log_inverse_gamma_pdf(p.sigma1_sq, pr.ig_shape, pr.ig_rate);
    lp += log_normal_pdf(p.rho, pr.rho_mean, pr.rho_var) - log_rho_prior_mass(pr);
  }
  return lp;
}

double log_posterior(std::span<const RegimeParams> params, const StateSequence& s, const CompletedSeries& data,
                     const Priors& pr) {
  std::vector<RegimeCache> caches;
  caches.reserve(params.size());
  for (const auto& p : params) caches.emplace_back(p);
  double lp = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    lp += augmented_log_emission(caches[static_cast<std::size_t>(s.labels[i + 1])], data.x[i], data.y[i], s.radii[i]);
  }
  lp += collapsed_log_prior(s.labels, static_cast<int>(params.size()), pr.hyper_beta());
  for (const auto& p : params) lp += log_prior_params(p, pr);
  return lp;
}

}  // namespace clgpn
