#include <algorithm>
#include <cmath>
#include <numeric>

#include "clgpn/errors.hpp"
#include "clgpn/sampler.hpp"
#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace clgpn;

namespace {

struct Points {
  std::vector<Eigen::Vector2d> z;
  std::vector<double> y;
};

RegimeStats stats_of(const Points& pts) {
  RegimeStats st;
  for (std::size_t i = 0; i < pts.z.size(); ++i) st.add(pts.z[i](0), pts.z[i](1), pts.y[i]);
  return st;
}

Points three_points() {
  Points p;
  p.z = {Eigen::Vector2d(0.5, -1.2), Eigen::Vector2d(1.7, 0.3), Eigen::Vector2d(-0.4, 0.9)};
  p.y = {0.8, 2.6, -0.5};
  return p;
}

/// Empirical CDF vs exact CDF at fixed points.
double max_cdf_gap(std::vector<double> draws, const std::vector<double>& at, const std::vector<double>& exact) {
  std::sort(draws.begin(), draws.end());
  double gap = 0.0;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double emp = static_cast<double>(std::upper_bound(draws.begin(), draws.end(), at[i]) - draws.begin()) /
                       static_cast<double>(draws.size());
    gap = std::max(gap, std::fabs(emp - exact[i]));
  }
  return gap;
}

/// CDF of r phi1(r | m, v) on r > 0 by quadrature.
std::vector<double> radius_cdf(double m, double v, const std::vector<double>& at) {
  const auto f = [&](double r) { return r * std::exp(-0.5 * (r - m) * (r - m) / v); };
  double err = 0.0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double total = GK::integrate(f, 0.0, m + 40.0 * std::sqrt(v) + 40.0, 15, 1e-13, &err);
  std::vector<double> out;
  for (double a : at) out.push_back(GK::integrate(f, 0.0, a, 15, 1e-13, &err) / total);
  return out;
}

}  // namespace

TEST_CASE("mean conditional") {
  Priors pr;
  RegimeParams p;
  p.sigma1_sq = 1.7;
  p.rho = 0.4;
  SUBCASE("three points by hand") {
    const Points pts = three_points();
    const auto c = mu_conditional(stats_of(pts), p, pr);
    const Eigen::Matrix2d si = oracle::latent_cov(p).inverse();
    const Eigen::Matrix2d prec = 3.0 * si + Eigen::Matrix2d::Identity() / 5.0;
    const Eigen::Vector2d mean = prec.inverse() * (si * (pts.z[0] + pts.z[1] + pts.z[2]));
    CHECK((c.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.cov - prec.inverse()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("empty regime is the prior") {
    const auto c = mu_conditional(RegimeStats{}, p, pr);
    CHECK(c.mean.norm() == 0.0);
    CHECK((c.cov - 5.0 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("flat prior limit gives the sample mean") {
    Priors flat;
    flat.mu_var = 1e12;
    const Points pts = three_points();
    const auto c = mu_conditional(stats_of(pts), RegimeParams{}, flat);
    const Eigen::Vector2d mean = (pts.z[0] + pts.z[1] + pts.z[2]) / 3.0;
    CHECK((c.mean - mean).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("regression conditional") {
  Priors pr;
  pr.gamma_mean = 0.3;
  RegimeParams p;
  p.sigma_y_sq = 0.6;
  const Points pts = three_points();
  SUBCASE("three points by hand") {
    Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xty = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < 3; ++i) {
      const Eigen::Vector3d row(1.0, pts.z[i](0), pts.z[i](1));
      xtx += row * row.transpose();
      xty += row * pts.y[i];
    }
    const Eigen::Matrix3d prec = xtx / 0.6 + Eigen::Matrix3d::Identity() / 5.0;
    const Eigen::Vector3d mean = prec.inverse() * (xty / 0.6 + Eigen::Vector3d::Constant(0.3 / 5.0));
    const auto c = gamma_conditional(stats_of(pts), p, pr);
    CHECK((c.mean - Eigen::VectorXd(mean)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c.cov - Eigen::MatrixXd(prec.inverse())).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("intercept only without circular-linear regression") {
    RegimeParams q = p;
    q.variant = Variant::IndCLGPN;
    const auto c = gamma_conditional(stats_of(pts), q, pr);
    const double prec = 3.0 / 0.6 + 1.0 / 5.0;
    const double mean = ((0.8 + 2.6 - 0.5) / 0.6 + 0.3 / 5.0) / prec;
    REQUIRE(c.mean.size() == 1);
    CHECK(std::fabs(c.mean(0) - mean) < 1e-12);
    CHECK(std::fabs(c.cov(0, 0) - 1.0 / prec) < 1e-12);
  }
  SUBCASE("empty regime is the prior") {
    const auto c = gamma_conditional(RegimeStats{}, p, pr);
    for (int i = 0; i < 3; ++i) CHECK(c.mean(i) == doctest::Approx(0.3));
    CHECK((c.cov - 5.0 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("noiseless data pins the coefficients") {
    Points exact = pts;
    for (std::size_t i = 0; i < 3; ++i) exact.y[i] = 1.5 - 0.7 * pts.z[i](0) + 2.0 * pts.z[i](1);
    RegimeParams q = p;
    q.sigma_y_sq = 1e-10;
    const auto c = gamma_conditional(stats_of(exact), q, pr);
    CHECK(c.mean(0) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(c.mean(1) == doctest::Approx(-0.7).epsilon(1e-6));
    CHECK(c.mean(2) == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("linear variance conditional") {
  Priors pr;
  SUBCASE("empty regime is IG(2, 1)") {
    const auto ig = sigma_y_conditional(RegimeStats{}, RegimeParams{}, pr);
    CHECK(ig.shape == 2.0);
    CHECK(ig.rate == 1.0);
    // IG(2,1) has mean 1 but infinite variance, so compare the median 1 / 1.67834699...
    Rng rng(2);
    std::vector<double> d(100001);
    RegimeParams p;
    for (auto& v : d) {
      update_sigma_y(p, RegimeStats{}, pr, rng);
      v = p.sigma_y_sq;
    }
    std::nth_element(d.begin(), d.begin() + 50000, d.end());
    CHECK(d[50000] == doctest::Approx(1.0 / 1.6783469900166608).epsilon(0.02));
  }
  SUBCASE("zero residuals") {
    Points pts = three_points();
    RegimeParams p;
    p.gamma0 = 0.2;
    p.gamma1 = 1.0;
    for (std::size_t i = 0; i < 3; ++i) pts.y[i] = 0.2 + pts.z[i](0);
    const auto ig = sigma_y_conditional(stats_of(pts), p, pr);
    CHECK(ig.shape == doctest::Approx(3.5));
    CHECK(ig.rate == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("three points by hand") {
    const Points pts = three_points();
    RegimeParams p;
    p.gamma0 = 0.1;
    p.gamma1 = 0.9;
    p.gamma2 = -0.4;
    double ssr = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double e = pts.y[i] - 0.1 - 0.9 * pts.z[i](0) + 0.4 * pts.z[i](1);
      ssr += e * e;
    }
    const auto ig = sigma_y_conditional(stats_of(pts), p, pr);
    CHECK(std::fabs(ig.shape - 3.5) < 1e-12);
    CHECK(std::fabs(ig.rate - (1.0 + 0.5 * ssr)) < 1e-12);
  }
}

TEST_CASE("latent covariance block") {
  Priors pr;
  SUBCASE("vanishing proposal scale accepts everything") {
    Rng rng(1);
    Points pts;
    for (int i = 0; i < 20; ++i) {
      pts.z.emplace_back(rng.normal(), rng.normal());
      pts.y.push_back(0.0);
    }
    RegimeParams p;
    p.sigma1_sq = 1.2;
    p.rho = 0.1;
    BlockProposal prop;
    prop.scale.log_scale = -12.0;
    const RegimeStats st = stats_of(pts);
    int acc = 0;
    for (int i = 0; i < 2000; ++i) acc += update_sigma1_rho(p, st, pr, prop, rng) ? 1 : 0;
    CHECK(acc >= 1990);
    CHECK(std::fabs(p.rho) < 1.0);
  }
  SUBCASE("identity-covariance variant is never moved") {
    RegimeParams p;
    p.variant = Variant::CLDPN;
    BlockProposal prop;
    Rng rng(3);
    CHECK_FALSE(update_sigma1_rho(p, RegimeStats{}, pr, prop, rng));
    CHECK(p.sigma1_sq == 1.0);
    CHECK(p.rho == 0.0);
  }
  SUBCASE("long-run marginals match a deterministic grid posterior") {
    Rng rng(2718);
    RegimeParams truth;
    truth.mu1 = 0.3;
    truth.mu2 = -0.2;
    truth.sigma1_sq = 1.8;
    truth.rho = 0.5;
    Points pts;
    for (int i = 0; i < 50; ++i) {
      const auto z = sample_latent(truth, rng);
      pts.z.emplace_back(z[0], z[1]);
      pts.y.push_back(0.0);
    }
    const RegimeStats st = stats_of(pts);

    // grid in (sigma1_sq, rho) with the prior in its natural parameterization
    const int ns = 800, nr = 800;
    const double smax = 8.0;
    double z = 0.0, es = 0.0, er = 0.0;
    std::vector<double> logw(static_cast<std::size_t>(ns * nr));
    double top = -INFINITY;
    for (int i = 0; i < ns; ++i) {
      const double s = smax * (i + 0.5) / ns;
      for (int j = 0; j < nr; ++j) {
        const double r = -1.0 + 2.0 * (j + 0.5) / nr;
        RegimeParams q = truth;
        q.sigma1_sq = s;
        q.rho = r;
        double lw = 0.0;
        for (const auto& pt : pts.z) lw += oracle::log_mvn2(pt, Eigen::Vector2d(q.mu1, q.mu2), oracle::latent_cov(q));
        lw += -3.0 * std::log(s) - 1.0 / s;  // IG(2, 1)
        lw += -0.5 * r * r / 5.0;            // N(0, 5) on (-1, 1)
        logw[static_cast<std::size_t>(i * nr + j)] = lw;
        top = std::max(top, lw);
      }
    }
    for (int i = 0; i < ns; ++i) {
      for (int j = 0; j < nr; ++j) {
        const double w = std::exp(logw[static_cast<std::size_t>(i * nr + j)] - top);
        z += w;
        es += w * smax * (i + 0.5) / ns;
        er += w * (-1.0 + 2.0 * (j + 0.5) / nr);
      }
    }
    es /= z;
    er /= z;

    RegimeParams p = truth;
    BlockProposal prop;
    const int burn = 5000, n = 200000;
    double ms = 0.0, mr = 0.0, ms2 = 0.0, mr2 = 0.0;
    for (int i = 0; i < burn + n; ++i) {
      update_sigma1_rho(p, st, pr, prop, rng);
      if (i < burn) {
        if ((i + 1) % 50 == 0) prop.scale.adapt(0.35);
        continue;
      }
      prop.frozen = true;
      ms += p.sigma1_sq;
      mr += p.rho;
      ms2 += p.sigma1_sq * p.sigma1_sq;
      mr2 += p.rho * p.rho;
    }
    ms /= n;
    mr /= n;
    const double sds = std::sqrt(ms2 / n - ms * ms);
    const double sdr = std::sqrt(mr2 / n - mr * mr);
    // effective sample size of a tuned 2-d random walk is well above n / 50
    const double ess = n / 50.0;
    CHECK_MESSAGE(std::fabs(ms - es) < 4.0 * sds / std::sqrt(ess), "mcmc=", ms, " grid=", es);
    CHECK_MESSAGE(std::fabs(mr - er) < 4.0 * sdr / std::sqrt(ess), "mcmc=", mr, " grid=", er);
  }
}

TEST_CASE("adaptive scale moves toward the target rate") {
  AdaptiveScale a;
  for (int i = 0; i < 50; ++i) a.record(true);
  a.adapt(0.35);
  CHECK(a.log_scale > 0.0);
  AdaptiveScale b;
  for (int i = 0; i < 50; ++i) b.record(false);
  b.adapt(0.35);
  CHECK(b.log_scale < 0.0);
  CHECK(b.rate() == 0.0);
  b.reset_totals();
  CHECK(b.tried == 0);
}

TEST_CASE("radius updates") {
  const std::vector<double> at = {0.5, 1.0, 1.5, 1.8, 2.0, 2.2, 2.5, 3.0, 3.5};
  SUBCASE("Metropolis chain is stationary for r phi1(r | 2, 0.25)") {
    const auto exact = radius_cdf(2.0, 0.25, at);
    Rng rng(5);
    AdaptiveScale sc;
    double r = 1.0;
    std::vector<double> draws;
    for (int i = 0; i < 400000; ++i) {
      r = update_radius(r, 2.0, 0.25, sc, rng);
      if (i < 2000 && (i + 1) % 50 == 0) sc.adapt(0.44);
      if (i >= 2000 && i % 4 == 0) draws.push_back(r);
    }
    CHECK(max_cdf_gap(draws, at, exact) < 0.01);
  }
  SUBCASE("inverse-CDF draws follow the same law") {
    for (const auto& [m, v] : {std::pair{2.0, 0.25}, std::pair{-1.0, 0.5}, std::pair{0.0, 3.0}, std::pair{-6.0, 0.2}}) {
      std::vector<double> pts;
      for (double q : {0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) pts.push_back(q * (std::fabs(m) + std::sqrt(v)));
      const auto exact = radius_cdf(m, v, pts);
      Rng rng(7);
      std::vector<double> draws;
      for (int i = 0; i < 100000; ++i) draws.push_back(sample_radius_exact(m, v, rng));
      CHECK_MESSAGE(max_cdf_gap(draws, pts, exact) < 0.006, "m=", m, " v=", v);
      CHECK(*std::min_element(draws.begin(), draws.end()) > 0.0);
    }
  }
  SUBCASE("sharply peaked conditional is a tilted Gaussian") {
    Rng rng(9);
    const double m = 10.0, v = 0.04;
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) s += sample_radius_exact(m, v, rng);
    CHECK(s / n == doctest::Approx(m + v / m).epsilon(1e-3));
  }
  SUBCASE("radii stay positive") {
    Rng rng(11);
    AdaptiveScale sc;
    double r = 0.5;
    double lowest = r;
    for (int i = 0; i < 1000000; ++i) {
      r = update_radius(r, -3.0, 0.1, sc, rng);
      lowest = std::min(lowest, r);
      if (i < 5000 && (i + 1) % 50 == 0) sc.adapt(0.44);
    }
    CHECK(lowest > 0.0);
  }
}

TEST_CASE("imputation of missing coordinates") {
  Rng rng(21);
  const int n = 100000;
  SUBCASE("both missing behaves like a fresh draw") {
    RegimeParams p;
    p.mu1 = 0.7;
    p.mu2 = -0.4;
    p.sigma1_sq = 1.5;
    p.rho = -0.3;
    p.gamma0 = 1.0;
    p.gamma1 = 0.5;
    p.gamma2 = -1.0;
    p.sigma_y_sq = 0.3;
    double c1 = 0, s1 = 0, y1 = 0, c2 = 0, s2 = 0, y2 = 0;
    for (int i = 0; i < n; ++i) {
      const auto a = impute_missing(Observation{}, 1.0, p, rng);
      const auto b = sample_clgpn(p, rng);
      c1 += std::cos(a.x), s1 += std::sin(a.x), y1 += a.y;
      c2 += b.x.cos(), s2 += b.x.sin(), y2 += b.y;
    }
    const double se = std::sqrt(2.0 / n);
    CHECK(std::fabs(c1 - c2) / n < 4.0 * se);
    CHECK(std::fabs(s1 - s2) / n < 4.0 * se);
    CHECK(std::fabs(y1 - y2) / n < 4.0 * se * std::sqrt(linear_marginal_variance(p)));
  }
  SUBCASE("missing y without regression is N(gamma0, sigma_y_sq)") {
    RegimeParams p;
    p.variant = Variant::IndCLGPN;
    p.gamma0 = -2.0;
    p.sigma_y_sq = 0.5;
    double s = 0.0, ss = 0.0, sc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = kTwoPi * rng.uniform();
      const auto a = impute_missing(Observation{Angle(x), std::nullopt}, 1.3, p, rng);
      CHECK(a.x == doctest::Approx(x));
      s += a.y;
      ss += a.y * a.y;
      sc += (a.y + 2.0) * std::cos(x);
    }
    CHECK(std::fabs(s / n + 2.0) < 4.0 * std::sqrt(0.5 / n));
    CHECK(ss / n - (s / n) * (s / n) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::fabs(sc / n) < 4.0 * std::sqrt(0.25 / n));
  }
  SUBCASE("missing x with an uninformative y draws z from its prior") {
    RegimeParams p;
    p.mu1 = 1.2;
    p.mu2 = 0.4;
    p.gamma0 = 0.0;
    double z1 = 0.0, z2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto a = impute_missing(Observation{std::nullopt, 3.0}, 1.0, p, rng);
      CHECK(a.y == 3.0);
      z1 += a.r * std::cos(a.x);
      z2 += a.r * std::sin(a.x);
    }
    CHECK(std::fabs(z1 / n - 1.2) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(z2 / n - 0.4) < 4.0 / std::sqrt(n));
  }
  SUBCASE("missing x given y matches conditioning a joint sample on y") {
    RegimeParams p;
    p.mu1 = 0.5;
    p.mu2 = -0.5;
    p.sigma1_sq = 1.3;
    p.rho = 0.4;
    p.gamma0 = 0.2;
    p.gamma1 = 1.0;
    p.gamma2 = 0.6;
    p.sigma_y_sq = 0.2;
    const double y0 = 1.0;
    double ca = 0, sa = 0, cb = 0, sb = 0;
    int kept = 0;
    while (kept < 20000) {
      const auto b = sample_clgpn(p, rng);
      if (std::fabs(b.y - y0) > 0.01) continue;
      cb += b.x.cos(), sb += b.x.sin();
      ++kept;
    }
    for (int i = 0; i < kept; ++i) {
      const auto a = impute_missing(Observation{std::nullopt, y0}, 1.0, p, rng);
      ca += std::cos(a.x), sa += std::sin(a.x);
    }
    const double se = std::sqrt(2.0 / kept);
    CHECK(std::fabs(ca - cb) / kept < 4.0 * se);
    CHECK(std::fabs(sa - sb) / kept < 4.0 * se);
  }
  SUBCASE("fully observed points are rejected") {
    CHECK_THROWS_AS(impute_missing(Observation{Angle(0.1), 0.1}, 1.0, RegimeParams{}, rng), InputError);
  }
}

TEST_CASE("prior of the latent correlation is a proper truncated normal") {
  Priors pr;
  RegimeParams p;
  RegimeParams base = p;
  base.variant = Variant::CLDPN;  // drops the (sigma1_sq, rho) terms
  const double ref = log_prior_params(base, pr);
  // integrate the rho factor over (-1, 1) with sigma1_sq fixed at 1
  double err = 0.0;
  const auto f = [&](double r) {
    RegimeParams q = p;
    q.rho = r;
    return std::exp(log_prior_params(q, pr) - ref);
  };
  const double mass = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 10, 1e-12, &err);
  // remaining factor is the IG(2, 1) density at 1: e^-1
  CHECK(mass == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("prior and config validation") {
  Priors pr;
  pr.mu_var = 0.0;
  CHECK_THROWS_AS(pr.validate(), InputError);
  ChainConfig c;
  c.burnin = c.iterations;
  CHECK_THROWS_AS(c.validate(), InputError);
  ChainConfig d;
  d.K = 9;
  CHECK_THROWS_AS(d.validate(), InputError);
  ChainConfig e;
  CHECK(e.retained() == 3000);
}
