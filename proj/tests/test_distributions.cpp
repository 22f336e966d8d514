#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dynsparse/distributions.hpp"
#include "dynsparse/errors.hpp"
#include "dynsparse/random.hpp"
#include "oracles.hpp"

using namespace dynsparse;

namespace {

struct Triple {
  double nu, delta, gamma;
};

// Covers every sampler branch: both boundaries, the non-T-concave corner,
// ratio-of-uniforms with and without mode shift, and negative indices.
const std::vector<Triple> kSamplerGrid{{1.0, 0.0, std::sqrt(2.0)}, {2.0, 1.0, 1.0},  {-1.0, 2.0, 0.0},
                                       {0.1, 0.01, 1.0},           {-0.5, 1.0, 1.0}, {0.4, 0.1, 0.5},
                                       {20.0, 1.0, 1.0},           {0.5, 5.0, 2.0},  {-3.0, 0.3, 2.0},
                                       {0.05, 0.0, 1.0}};

std::vector<double> gig_draws(const GigParams& g, std::uint64_t seed, int n) {
  RandomStream rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = gig_sample(g, rng);
  return x;
}

}  // namespace

TEST_SUITE("distributions") {
  TEST_CASE("GIG log density examples") {
    CHECK(gig_log_pdf(GigParams(1.0, 0.0, std::sqrt(2.0)), 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
    // inverse Gaussian with mean 1, shape 1 at x = 1
    CHECK(gig_log_pdf(GigParams(-0.5, 1.0, 1.0), 1.0) ==
          doctest::Approx(-0.5 * std::log(2.0 * oracle::kPi)).epsilon(1e-13));
    CHECK_THROWS_AS(gig_log_pdf(GigParams(1.0, 1.0, 1.0), 0.0), DomainError);
    CHECK_THROWS_AS(gig_log_pdf(GigParams(1.0, 1.0, 1.0), -2.0), DomainError);
  }

  TEST_CASE("GIG density integrates to one") {
    for (const auto& t : kSamplerGrid) {
      const GigParams g(t.nu, t.delta, t.gamma);
      const oracle::Gig ref(t.nu, t.delta, t.gamma);
      const double mass = oracle::integrate_split(
          [&](double x) { return x > 0.0 ? std::exp(gig_log_pdf(g, x)) : 0.0; }, ref.scale());
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(GigParams(1.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(GigParams(-1.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(GigParams(1.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(GigParams(1.0, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(GigParams(std::nan(""), 1.0, 1.0), DomainError);
    CHECK(GigParams(1.0, 1e-13, 1.0).delta() == 0.0);
    CHECK_THROWS_AS(GhParams(std::nan(""), 1.0, 1.0, 1.0), DomainError);
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(MghParams(Eigen::VectorXd::Zero(2), 1.0, 1.0, 1.0, asym), DomainError);
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1, 2, 2, 1;
    CHECK_THROWS_AS(MghParams(Eigen::VectorXd::Zero(2), 1.0, 1.0, 1.0, indefinite), DomainError);
    CHECK_THROWS_AS(MghParams(Eigen::VectorXd::Zero(3), 1.0, 1.0, 1.0, Eigen::MatrixXd::Identity(2, 2)), DomainError);
  }

  TEST_CASE("GIG moments") {
    CHECK(gig_moment(GigParams(1.0, 0.0, std::sqrt(2.0)), 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gig_moment(GigParams(2.0, 1.0, 1.0), 0) == 1.0);
    const oracle::Gig ig(-0.5, 1.0, 1.0);
    const double inv_mean = oracle::integrate_split([&](double x) { return x > 0 ? ig.pdf(x) / x : 0.0; }, 1.0);
    CHECK(gig_moment(GigParams(-0.5, 1.0, 1.0), -1) == doctest::Approx(inv_mean).epsilon(1e-9));
    const double k3 = boost::math::cyl_bessel_k(3.0, 1.0);
    const double k2 = boost::math::cyl_bessel_k(2.0, 1.0);
    CHECK(gig_moment(GigParams(2.0, 1.0, 1.0), 1) == doctest::Approx(k3 / k2).epsilon(1e-12));
    CHECK_THROWS_AS(gig_moment(GigParams(0.5, 0.0, 1.0), -1), DomainError);
    CHECK_THROWS_AS(gig_moment(GigParams(-0.5, 1.0, 0.0), 1), DomainError);
  }

  TEST_CASE("GIG sampler: mean within 4 standard errors") {
    constexpr int n = 100000;
    std::uint64_t seed = 11;
    for (const auto& t : kSamplerGrid) {
      const GigParams g(t.nu, t.delta, t.gamma);
      // the variance must exist for the standard error
      if (t.gamma == 0.0 && !(t.nu + 2.0 < 0.0)) continue;
      const double mean = gig_moment(g, 1);
      const double var = gig_moment(g, 2) - mean * mean;
      const auto x = gig_draws(g, ++seed, n);
      double s = 0.0;
      for (double v : x) s += v;
      CAPTURE(t.nu);
      CAPTURE(t.delta);
      CAPTURE(t.gamma);
      CHECK(std::fabs(s / n - mean) < 4.0 * std::sqrt(var / n));
    }
  }

  TEST_CASE("GIG sampler: KS against the quadrature cdf at level 1e-3") {
    constexpr int n = 100000;
    std::uint64_t seed = 101;
    for (const auto& t : kSamplerGrid) {
      const auto x = gig_draws(GigParams(t.nu, t.delta, t.gamma), ++seed, n);
      const oracle::Gig ref(t.nu, t.delta, t.gamma);
      // cdf by cumulative quadrature between consecutive sorted draws
      std::vector<double> sorted = x;
      std::sort(sorted.begin(), sorted.end());
      double cum = oracle::integrate_interval([&](double u) { return ref.pdf(u); }, 0.0, sorted[0]);
      double d = std::max(cum, 1.0 / n - cum);
      for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] > sorted[i - 1]) {
          cum += oracle::integrate_interval([&](double u) { return ref.pdf(u); }, sorted[i - 1], sorted[i], 1e-10);
        }
        d = std::max({d, cum - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cum});
      }
      CAPTURE(t.nu);
      CAPTURE(t.delta);
      CAPTURE(t.gamma);
      CHECK(d < oracle::ks_critical(n, 1e-3));
    }
  }

  TEST_CASE("inverse-gamma boundary: sample median matches the quadrature median") {
    const auto x = gig_draws(GigParams(-1.0, 2.0, 0.0), 77, 100000);
    std::vector<double> s = x;
    std::nth_element(s.begin(), s.begin() + 50000, s.end());
    // median m solves cdf(m) = 1/2
    double lo = 0.01, hi = 100.0;
    for (int i = 0; i < 80; ++i) {
      const double mid = std::sqrt(lo * hi);
      (oracle::gig_cdf(-1.0, 2.0, 0.0, mid) < 0.5 ? lo : hi) = mid;
    }
    CHECK(s[50000] == doctest::Approx(lo).epsilon(0.02));
  }

  TEST_CASE("GH mixture identity on a grid") {
    const std::vector<Triple> grid{{-0.5, 1.0, 1.0}, {1.0, 0.0, 1.0}, {0.3, 0.0, 2.0},  {-1.0, 1.0, 0.0},
                                   {2.5, 0.5, 1.5},  {0.1, 0.01, 1.0}, {-3.0, 2.0, 0.0}, {1.0, 1.0, 1.0}};
    for (const auto& t : grid) {
      const GhParams gh(0.3, t.nu, t.delta, t.gamma);
      for (int i = 0; i <= 20; ++i) {
        const double x = 0.3 + (i - 10) * 0.61 + 0.013;
        const double ref = std::log(oracle::gh_pdf(0.3, t.nu, t.delta, t.gamma, x));
        CAPTURE(t.nu);
        CAPTURE(x);
        CHECK(std::fabs(gh_log_pdf(gh, x) - ref) < 1e-6);
      }
    }
  }

  TEST_CASE("GH special cases") {
    // Laplace: gamma/2 exp(-gamma |x|)
    const GhParams laplace(0.0, 1.0, 0.0, 1.0);
    CHECK(gh_log_pdf(laplace, 0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(gh_log_pdf(GhParams(0.0, 1.0, 1e-13, 1.0), 0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    for (double x : {-3.0, -0.2, 0.7, 5.0}) {
      CHECK(gh_log_pdf(GhParams(0.0, 1.0, 0.0, 2.0), x) == doctest::Approx(std::log(1.0) - 2.0 * std::fabs(x)).epsilon(1e-12));
    }
    // NIG at x = 1 by quadrature
    CHECK(gh_log_pdf(GhParams(0.0, -0.5, 1.0, 1.0), 1.0) ==
          doctest::Approx(std::log(oracle::gh_pdf(0.0, -0.5, 1.0, 1.0, 1.0))).epsilon(1e-9));
    // pole of the normal-gamma law
    CHECK(gh_log_pdf(GhParams(0.0, 0.4, 0.0, 1.0), 0.0) == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("GH symmetry and derivative") {
    const std::vector<Triple> grid{{-0.5, 1.0, 1.0}, {1.0, 0.0, 1.0}, {-2.0, 1.5, 0.0}, {3.0, 0.2, 0.7}};
    for (const auto& t : grid) {
      const GhParams gh(1.5, t.nu, t.delta, t.gamma);
      for (double x : {-2.0, 0.1, 1.2, 4.4}) {
        CHECK(gh_log_pdf(gh, x) == doctest::Approx(gh_log_pdf(gh, 3.0 - x)).epsilon(1e-13));
        const double h = 1e-5;
        const double fd = (gh_log_pdf(gh, x + h) - gh_log_pdf(gh, x - h)) / (2 * h);
        CHECK(gh_log_pdf_derivative(gh, x) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("mGH reduces to GH in one dimension") {
    for (const auto& t : kSamplerGrid) {
      const MghParams m(Eigen::VectorXd::Constant(1, 0.4), t.nu, t.delta, t.gamma, Eigen::MatrixXd::Identity(1, 1));
      const GhParams g(0.4, t.nu, t.delta, t.gamma);
      for (double x : {-2.0, 0.0, 0.9, 3.3}) {
        if (x == 0.4) continue;
        CHECK(std::fabs(mgh_log_pdf(m, Eigen::VectorXd::Constant(1, x)) - gh_log_pdf(g, x)) < 1e-12);
      }
    }
    CHECK_THROWS_AS(mgh_log_pdf(MghParams(Eigen::VectorXd::Zero(2), 1, 1, 1, Eigen::MatrixXd::Identity(2, 2)),
                                Eigen::VectorXd::Zero(3)),
                    DomainError);
  }

  TEST_CASE("mGH matches the mixture quadrature with a general sigma") {
    Eigen::MatrixXd sigma(3, 3);
    sigma << 2.0, 0.6, 0.1, 0.6, 1.0, 0.3, 0.1, 0.3, 0.5;
    const Eigen::Vector3d mu(0.1, -0.2, 0.3);
    for (const auto& t : std::vector<Triple>{{-0.5, 1.0, 1.0}, {2.0, 0.0, 1.0}, {-2.0, 1.0, 0.0}}) {
      const MghParams m(mu, t.nu, t.delta, t.gamma, sigma);
      for (int k = 0; k < 5; ++k) {
        const Eigen::Vector3d x(0.3 * k - 0.5, 1.0 - 0.4 * k, 0.2 * k);
        CHECK(std::fabs(mgh_log_pdf(m, x) - std::log(oracle::mgh_pdf(mu, t.nu, t.delta, t.gamma, sigma, x))) < 1e-6);
      }
    }
  }

  TEST_CASE("multivariate hyperbolic special case") {
    // nu = (p + 1) / 2, delta = 0: density proportional to exp(-gamma ||x||_Sigma)
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.5, 0.5, 1.0;
    const double gamma = 1.3;
    const MghParams m(Eigen::VectorXd::Zero(2), 1.5, 0.0, gamma, sigma);
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    double reference = 0.0;
    for (int k = 0; k < 15; ++k) {
      const Eigen::Vector2d x(std::cos(k) * (k + 1) * 0.3, std::sin(2 * k) * 0.7);
      const double norm = std::sqrt(x.dot(llt.solve(x)));
      const double diff = mgh_log_pdf(m, x) + gamma * norm;
      if (k == 0) reference = diff;
      CHECK(diff == doctest::Approx(reference).epsilon(1e-12));
    }
  }

  TEST_CASE("mGH integrates to one in two dimensions") {
    // radial reduction for sigma = I
    for (const auto& t : std::vector<Triple>{{-0.5, 1.0, 1.0}, {1.5, 0.0, 1.0}, {-2.0, 1.0, 0.0}}) {
      const MghParams m(Eigen::VectorXd::Zero(2), t.nu, t.delta, t.gamma, Eigen::MatrixXd::Identity(2, 2));
      const double mass = oracle::integrate_split(
          [&](double r) {
            return r > 0 ? 2 * oracle::kPi * r * std::exp(mgh_log_pdf(m, Eigen::Vector2d(r, 0.0))) : 0.0;
          },
          1.0, 1e-10);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    }
  }

  TEST_CASE("GH sampler: Laplace KS, Student IQR, mean") {
    RandomStream rng(5);
    constexpr int n = 100000;
    std::vector<double> x(n);
    const GhParams laplace(0.0, 1.0, 1e-14, 1.0);
    for (auto& v : x) v = gh_sample(laplace, rng);
    const double d = oracle::ks_statistic(x, [](double z) { return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z); });
    CHECK(d < 0.01);
    double s = 0.0;
    for (double v : x) s += v;
    CHECK(std::fabs(s / n) < 4.0 * std::sqrt(2.0 / n));

    const GhParams student(0.0, -1.0, 1.0, 0.0);
    for (auto& v : x) v = gh_sample(student, rng);
    std::sort(x.begin(), x.end());
    const double iqr = x[3 * n / 4] - x[n / 4];
    // quartile q solves cdf(q) = 3/4; the law is symmetric
    double lo = 0.0, hi = 50.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (oracle::gh_cdf(0.0, -1.0, 1.0, 0.0, mid) < 0.75 ? lo : hi) = mid;
    }
    CHECK(iqr == doctest::Approx(2.0 * lo).epsilon(0.03));
  }

  TEST_CASE("mGH sampler second moments") {
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.8, 0.8, 1.0;
    const MghParams m(Eigen::Vector2d(1.0, -1.0), 2.0, 1.0, 1.0, sigma);
    RandomStream rng(9);
    constexpr int n = 100000;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = mgh_sample(m, rng);
      mean += x;
      second += (x - m.mu()) * (x - m.mu()).transpose();
    }
    mean /= n;
    second /= n;
    const double tau_mean = gig_moment(m.mixing(), 1);
    CHECK(mean[0] == doctest::Approx(1.0).epsilon(0.02));
    CHECK(mean[1] == doctest::Approx(-1.0).epsilon(0.02));
    CHECK((second - tau_mean * sigma).cwiseAbs().maxCoeff() < 0.05 * tau_mean);
  }

  TEST_CASE("normal log density") {
    CHECK(normal_log_pdf(1.0, 1.0, 1.0) == doctest::Approx(-0.5 * std::log(2 * oracle::kPi)));
    CHECK(normal_log_pdf(3.0, 1.0, 4.0) == doctest::Approx(-0.5 * std::log(8 * oracle::kPi) - 0.5));
  }
}
