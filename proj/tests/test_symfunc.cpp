#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "codim2/symfunc.hpp"
#include "test_support.hpp"

using namespace codim2;
using namespace codim2::symfunc;
using codim2::testing::Mat;
using codim2::testing::Vec;

namespace {

// Sum over k-subsets of products, by explicit enumeration.
double subset_oracle(const Vec& lambda, int k) {
  const int d = static_cast<int>(lambda.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < d; ++i)
      if (mask & (1u << i)) p *= lambda(i);
    total += p;
  }
  return total;
}

// Fit det(sigma + y chi + ybar chibar)/det(sigma) on a (d+1)^2 grid and read off
// P_{r,s} = coefficient / C(r+s, r).
Mat determinant_sampling_oracle(const Mat& sigma, const Mat& chi, const Mat& chibar) {
  const int d = static_cast<int>(sigma.rows());
  const int m = d + 1;
  std::vector<double> nodes(m);
  for (int i = 0; i < m; ++i) nodes[i] = std::cos(M_PI * (i + 0.5) / m);
  Mat vand(m * m, m * m);
  Vec rhs(m * m);
  const double det_sigma = sigma.determinant();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const int row = i * m + j;
      rhs(row) = (sigma + nodes[i] * chi + nodes[j] * chibar).determinant() / det_sigma;
      for (int p = 0; p < m; ++p)
        for (int q = 0; q < m; ++q) vand(row, p * m + q) = std::pow(nodes[i], p) * std::pow(nodes[j], q);
    }
  const Vec c = vand.fullPivLu().solve(rhs);
  Mat out = Mat::Zero(m, m);
  for (int r = 0; r <= d; ++r)
    for (int s = 0; r + s <= d; ++s) out(r, s) = c(r * m + s) / binomial(r + s, r);
  return out;
}

double sigma_k_of_matrix(const Mat& w, int k) {
  Eigen::SelfAdjointEigenSolver<Mat> es((w + w.transpose()) / 2.0, Eigen::EigenvaluesOnly);
  return subset_oracle(es.eigenvalues(), k);
}

// Coefficient of t_1..t_k in sigma_k(sum t_i W^i), divided by k!.
double multilinear_oracle(const std::vector<Mat>& w) {
  const int k = static_cast<int>(w.size());
  const int d = static_cast<int>(w.front().rows());
  double total = 0.0;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    Mat sum = Mat::Zero(d, d);
    int used = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sum += w[i];
        ++used;
      }
    const double v = sigma_k_of_matrix(sum, k);
    total += ((k - used) % 2 == 0) ? v : -v;
  }
  return total / factorial(k);
}

Mat gamma_sample(int d, int k, std::mt19937_64& rng) {
  while (true) {
    Mat w = codim2::testing::random_with_spectrum(d, -1.0, 2.0, rng);
    if (gamma_cone_member(w, k)) return w;
  }
}

}  // namespace

TEST_CASE("elem_sym trivial values") {
  CHECK(elem_sym(Vec::Ones(3), 2) == doctest::Approx(3.0));
  CHECK(elem_sym(Vec((Vec(3) << 2, 3, 5).finished()), 3) == doctest::Approx(30.0));
  CHECK(elem_sym(Vec::Ones(3), 0) == 1.0);
  CHECK_THROWS_AS(elem_sym(Vec::Ones(3), 4), DomainError);
  CHECK_THROWS_AS(elem_sym(Vec::Ones(3), -1), DomainError);
}

TEST_CASE("elem_sym matches subset enumeration") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Vec l(6);
    for (int i = 0; i < 6; ++i) l(i) = g(rng);
    for (int k = 0; k <= 6; ++k) CHECK(elem_sym(l, k) == doctest::Approx(subset_oracle(l, k)).epsilon(1e-12));
  }
}

TEST_CASE("elem_sym_excl values and identities") {
  CHECK(elem_sym_excl(Vec((Vec(3) << 1, 2, 3).finished()), 1, 0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(elem_sym_excl(Vec::Ones(3), 1, 3), DomainError);
  CHECK_THROWS_AS(elem_sym_excl(Vec::Ones(3), 3, 0), DomainError);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 5;
    Vec l(d);
    for (int i = 0; i < d; ++i) l(i) = g(rng);
    for (int k = 1; k <= d; ++k) {
      double lhs = 0.0;
      for (int i = 0; i < d; ++i) lhs += l(i) * elem_sym_excl(l, k - 1, i);
      CHECK(lhs == doctest::Approx(k * subset_oracle(l, k)).epsilon(1e-10).scale(1.0));
    }
    for (int k = 0; k <= d - 1; ++k) {
      double lhs = 0.0;
      for (int i = 0; i < d; ++i) lhs += elem_sym_excl(l, k, i);
      CHECK(lhs == doctest::Approx((d - k) * subset_oracle(l, k)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("mixed_P low-order values") {
  std::mt19937_64 rng(21);
  for (int d = 1; d <= 6; ++d) {
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat chi = codim2::testing::random_symmetric(d, rng);
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    const Mat si = sigma.inverse();
    const auto tab = mixed_table(sigma, chi, chibar);
    CHECK(tab.p(0, 0) == doctest::Approx(1.0));
    CHECK(tab.p(1, 0) == doctest::Approx((si * chi).trace()).epsilon(1e-10));
    CHECK(tab.p(0, 1) == doctest::Approx((si * chibar).trace()).epsilon(1e-10));
    CHECK((tab.t(1, 0) - si).norm() < 1e-10 * si.norm());
    CHECK((tab.tbar(0, 1) - si).norm() < 1e-10 * si.norm());
    CHECK(tab.tbar(1, 0).norm() == 0.0);
    CHECK(tab.t(0, 1).norm() == 0.0);
  }
  CHECK_THROWS_AS(mixed_P(Mat(Mat::Identity(2, 2)), Mat(Mat::Identity(2, 2)), Mat(Mat::Identity(2, 2)), 2, 1),
                  DomainError);
  Mat bad = Mat::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(mixed_P(bad, bad, bad, 1, 0), InvalidMetric);
}

TEST_CASE("mixed_P with chibar = -chi reduces to signed sigma_k of the shape operator") {
  std::mt19937_64 rng(22);
  for (int d = 2; d <= 5; ++d) {
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat h = codim2::testing::random_symmetric(d, rng);
    // eigenvalues of h read in a sigma-orthonormal frame
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(h, sigma, Eigen::EigenvaluesOnly);
    const Vec lam = es.eigenvalues();
    const auto tab = mixed_table(sigma, h, Mat(-h), false);
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        const double expect = (s % 2 ? -1.0 : 1.0) * subset_oracle(lam, r + s);
        CHECK(tab.p(r, s) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
      }
  }
}

TEST_CASE("mixed_P agrees with the determinant-sampling oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 5;
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat chi = codim2::testing::random_symmetric(d, rng);
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    const Mat oracle = determinant_sampling_oracle(sigma, chi, chibar);
    const auto tab = mixed_table(sigma, chi, chibar, false);
    const double scale = std::max(1.0, oracle.cwiseAbs().maxCoeff());
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) CHECK(std::abs(tab.p(r, s) - oracle(r, s)) <= 1e-9 * scale);
  }
}

TEST_CASE("mixed_T closed forms") {
  std::mt19937_64 rng(24);
  const Mat sigma = codim2::testing::random_spd(2, rng);
  const Mat chi = codim2::testing::random_symmetric(2, rng);
  const Mat chibar = codim2::testing::random_symmetric(2, rng);
  const Mat si = sigma.inverse();
  const auto pair = mixed_T(sigma, chi, chibar, 1, 1);
  // 2 T_{1,1} = sigma^{ab} tr chibar - chibar^{ab}
  const Mat chibar_up = si * chibar * si;
  const Mat expect = si * (si * chibar).trace() - chibar_up;
  CHECK((2.0 * pair.T - expect).norm() < 1e-12 * expect.norm());
  const Mat chi_up = si * chi * si;
  const Mat expect_bar = si * (si * chi).trace() - chi_up;
  CHECK((2.0 * pair.Tbar - expect_bar).norm() < 1e-12 * expect_bar.norm());
}

TEST_CASE("mixed_T agrees with central finite differences of mixed_P") {
  std::mt19937_64 rng(25);
  const double h = 1e-5;
  for (int trial = 0; trial < 15; ++trial) {
    const int d = 2 + trial % 3;
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat chi = codim2::testing::random_symmetric(d, rng);
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    const auto tab = mixed_table(sigma, chi, chibar);
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s)
        for (int a = 0; a < d; ++a)
          for (int b = a; b < d; ++b) {
            Mat e = Mat::Zero(d, d);
            e(a, b) += 1.0;
            e(b, a) += 1.0;
            const double fd = (mixed_P(sigma, Mat(chi + h * e), chibar, r, s) -
                               mixed_P(sigma, Mat(chi - h * e), chibar, r, s)) / (2 * h);
            const double fdb = (mixed_P(sigma, chi, Mat(chibar + h * e), r, s) -
                                mixed_P(sigma, chi, Mat(chibar - h * e), r, s)) / (2 * h);
            const double tol = 1e-6 * std::max(1.0, tab.P.cwiseAbs().maxCoeff());
            CHECK(std::abs(fd - 2.0 * tab.t(r, s)(a, b)) <= tol);
            CHECK(std::abs(fdb - 2.0 * tab.tbar(r, s)(a, b)) <= tol);
          }
  }
}

TEST_CASE("bivariate symmetry and scaling covariance") {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> ua(0.3, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 4;
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat chi = codim2::testing::random_symmetric(d, rng);
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    const auto tab = mixed_table(sigma, chi, chibar);
    const auto swapped = mixed_table(sigma, chibar, chi);
    const double a = ua(rng);
    const auto scaled = mixed_table(sigma, Mat(a * chi), Mat(chibar / a));
    const double sc = std::max(1.0, tab.P.cwiseAbs().maxCoeff());
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        CHECK(std::abs(tab.p(r, s) - swapped.p(s, r)) <= 1e-11 * sc);
        CHECK((tab.t(r, s) - swapped.tbar(s, r)).norm() <= 1e-11 * sc);
        CHECK(std::abs(scaled.p(r, s) - std::pow(a, r - s) * tab.p(r, s)) <= 1e-10 * sc * std::pow(a, std::abs(r - s)));
      }
    for (int r = 0; 2 * r + 1 <= d; ++r) {
      CHECK((scaled.t(r + 1, r) - tab.t(r + 1, r)).norm() <= 1e-10 * sc);
      CHECK((scaled.tbar(r, r + 1) - tab.tbar(r, r + 1)).norm() <= 1e-10 * sc);
    }
  }
}

TEST_CASE("positivity on the Gamma cone") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 4;
    const int k = 1 + trial % d;
    const Mat sigma = Mat::Identity(d, d);
    const Mat chi = gamma_sample(d, k, rng);
    const Mat chibar = gamma_sample(d, k, rng);
    const auto tab = mixed_table(sigma, chi, chibar, false);
    for (int r = 0; r <= k; ++r) CHECK(tab.p(r, k - r) > 0.0);
  }
}

TEST_CASE("polarized_sigma normalization and oracles") {
  for (int d = 1; d <= 5; ++d)
    for (int k = 0; k <= d; ++k) {
      std::vector<Mat> ids(k, Mat::Identity(d, d));
      CHECK(polarized_sigma(ids, k) == doctest::Approx(binomial(d, k)));
    }
  std::mt19937_64 rng(28);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 4;
    const int k = 1 + trial % d;
    std::vector<Mat> w;
    for (int i = 0; i < k; ++i) w.push_back(codim2::testing::random_symmetric(d, rng));
    const double oracle = multilinear_oracle(w);
    CHECK(polarized_sigma(w, k) == doctest::Approx(oracle).epsilon(1e-10).scale(1.0));
    // (1/k) d/dt sigma_k(t chi + chibar) at t = 0, by a 4th-order difference
    const Mat chi = w[0];
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    std::vector<Mat> one_chi(k, chibar);
    one_chi[0] = chi;
    const double h = 1e-3;
    auto sk = [&](double t) { return sigma_k_of_matrix(Mat(t * chi + chibar), k); };
    const double deriv = (sk(-2 * h) - 8 * sk(-h) + 8 * sk(h) - sk(2 * h)) / (12 * h);
    CHECK(polarized_sigma(one_chi, k) == doctest::Approx(deriv / k).epsilon(1e-8).scale(1.0));
    // P_{r,s} with sigma = identity
    for (int r = 0; r <= k; ++r) {
      std::vector<Mat> mix;
      for (int i = 0; i < r; ++i) mix.push_back(chi);
      for (int i = r; i < k; ++i) mix.push_back(chibar);
      CHECK(polarized_sigma(mix, k) ==
            doctest::Approx(mixed_P(Mat(Mat::Identity(d, d)), chi, chibar, r, k - r)).epsilon(1e-10).scale(1.0));
    }
  }
  CHECK_THROWS_AS(polarized_sigma(std::vector<Mat>{Mat::Identity(2, 2), Mat::Identity(3, 3)}, 2), DomainError);
}

TEST_CASE("gamma_cone_member") {
  for (int d = 1; d <= 5; ++d)
    for (int k = 1; k <= d; ++k) CHECK(gamma_cone_member(Mat(Mat::Identity(d, d)), k));
  CHECK_FALSE(gamma_cone_member(Mat(Vec((Vec(3) << 1, 1, -3).finished()).asDiagonal()), 1));
  const Mat w = Vec((Vec(3) << 2, 1, -0.1).finished()).asDiagonal();
  // sigma_1 = 2.9, sigma_2 = 2 - 0.2 - 0.1 = 1.7, sigma_3 = -0.2
  CHECK(gamma_cone_member(w, 1));
  CHECK(gamma_cone_member(w, 2));
  CHECK_FALSE(gamma_cone_member(w, 3));
  CHECK_FALSE(gamma_cone_member(Mat(Mat::Zero(2, 2)), 1));
}

TEST_CASE("trace identities of the mixed tensors") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 4;
    const Mat sigma = codim2::testing::random_spd(d, rng);
    const Mat chi = codim2::testing::random_symmetric(d, rng);
    const Mat chibar = codim2::testing::random_symmetric(d, rng);
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        const auto res = check_abc_identities(sigma, chi, chibar, r, s, d + 1);
        for (int i = 0; i < 3; ++i) CHECK(res.relative(i) <= 1e-10);
      }
  }
  // T = sigma^{ab} for (1,0)
  const Mat id = Mat::Identity(3, 3);
  const auto res = check_abc_identities(id, Mat(2.0 * id), id, 1, 0, 4);
  for (int i = 0; i < 3; ++i) CHECK(res.residual[i] < 1e-14);
}

TEST_CASE("diagonal closed form for P and T") {
  const double c = 0.7, cb = -1.3;
  for (int d = 2; d <= 5; ++d) {
    const Mat id = Mat::Identity(d, d);
    const auto tab = mixed_table(id, Mat(c * id), Mat(cb * id));
    for (int r = 0; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        const double p = binomial(d, r + s) * std::pow(c, r) * std::pow(cb, s);
        CHECK(tab.p(r, s) == doctest::Approx(p).epsilon(1e-12).scale(1.0));
        if (r >= 1) {
          const double t = r * std::pow(c, r - 1) * std::pow(cb, s) * binomial(d - 1, r + s - 1) / (r + s);
          CHECK((tab.t(r, s) - t * id).norm() < 1e-12 * std::max(1.0, std::abs(t)));
        }
      }
  }
}

TEST_CASE("Newton-MacLaurin") {
  for (int d = 2; d <= 5; ++d) {
    const Mat id = Mat::Identity(d, d);
    for (int r = 2; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        const auto g = newton_maclaurin_check(id, id, id, r, s, d + 1);
        CHECK(std::abs(g.gap) <= 1e-12 * g.scale);
        CHECK(g.equality);
      }
  }
  const Mat id = Mat::Identity(3, 3);
  CHECK_THROWS_AS(newton_maclaurin_check(id, id, id, 1, 0, 4), DomainError);
  CHECK_THROWS_AS(newton_maclaurin_check(id, id, id, 1, 1, 4), DomainError);
  CHECK_THROWS_AS(newton_maclaurin_check(id, Mat(-id), id, 2, 0, 4), PreconditionError);
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 3 + trial % 3;
    const int r = 2 + trial % (d - 1);
    const int s = (trial / 7) % (d - r + 1);
    const Mat chi = gamma_sample(d, r + s, rng);
    const Mat chibar = gamma_sample(d, r + s, rng);
    const auto g = newton_maclaurin_check(Mat(Mat::Identity(d, d)), chi, chibar, r, s, d + 1);
    CHECK(g.gap >= -1e-10 * g.scale);
    CHECK_FALSE(g.equality);
    // chi = c I gives equality for any chibar
    const auto e = newton_maclaurin_check(Mat(Mat::Identity(d, d)), Mat(0.7 * Mat::Identity(d, d)), chibar, r, s, d + 1);
    CHECK(e.equality);
  }
}

TEST_CASE("Newton-MacLaurin fails for s >= 1 when the pair is only in Gamma_{r+s-1}") {
  // Both matrices lie in Gamma_2 but not Gamma_3; r = 2, s = 1, n = 4. The Garding step
  // behind the inequality needs Gamma_{r+s}.
  Mat chi(3, 3), chibar(3, 3);
  chi << 0.308, -0.265, 0.089, -0.265, 0.556, -0.463, 0.089, -0.463, 0.151;
  chibar << 0.051, -0.52, 0.35, -0.52, 1.274, 0.252, 0.35, 0.252, 0.318;
  REQUIRE(gamma_cone_member(chi, 2));
  REQUIRE(gamma_cone_member(chibar, 2));
  CHECK_FALSE(gamma_cone_member(chi, 3));
  CHECK_FALSE(gamma_cone_member(chibar, 3));
  const auto g = newton_maclaurin_check(Mat(Mat::Identity(3, 3)), chi, chibar, 2, 1, 4);
  CHECK(g.gap / g.scale == doctest::Approx(-0.3255075157741611).epsilon(1e-9));
}

TEST_CASE("Garding") {
  const Mat w2 = Vec((Vec(3) << 1, 2, 3).finished()).asDiagonal();
  const auto g = garding_check<double>({Mat::Identity(3, 3), w2});
  // sigma_(2)(I, W) = (1/2) d/dt sigma_2(tI + W)|0 = (d-1) tr W / 2 = 6; sigma_2(I) = 3, sigma_2(W) = 11
  CHECK(g.lhs == doctest::Approx(36.0));
  CHECK(g.rhs == doctest::Approx(33.0));
  CHECK(g.gap > 0.0);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + trial % 4;
    const int k = 2 + trial % (d - 1);
    std::vector<Mat> w;
    for (int i = 0; i < k; ++i) w.push_back(gamma_sample(d, k, rng));
    const auto same = garding_check(std::vector<Mat>{w[0], w[0]});
    CHECK(std::abs(same.gap) <= 1e-12 * same.scale);
    const auto gg = garding_check(w);
    CHECK(gg.gap >= -1e-10 * gg.scale);
  }
  CHECK_THROWS_AS(garding_check<double>({Mat::Identity(2, 2), Mat(Vec((Vec(2) << 1, -3).finished()).asDiagonal())}),
                  PreconditionError);
}

TEST_CASE("ratio bound on the Gamma cone") {
  for (int d = 2; d <= 4; ++d) {
    const Mat id = Mat::Identity(d, d);
    for (int r = 1; r <= d; ++r)
      for (int s = 0; r + s <= d; ++s) {
        const auto rep = ratio_bound_check(id, Mat(1.7 * id), Mat(0.4 * id), r, s, d + 1);
        CHECK(std::abs(rep.hypothesis_residual) < 1e-12);
        CHECK(std::abs(rep.conclusion_residual) < 1e-12);
      }
  }
  std::mt19937_64 rng(32);
  // chibar = -chi: hypothesis is a Newton-MacLaurin inequality and holds automatically
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 4;
    const int k = 1 + trial % d;
    const int r = 1 + trial % k;
    const Mat chi = gamma_sample(d, k, rng);
    const auto rep =
        ratio_bound_check(Mat(Mat::Identity(d, d)), chi, Mat(-chi), r, k - r, d + 1, ChibarCone::negative);
    CHECK(rep.hypothesis_holds);
    CHECK(rep.implication_holds);
  }
  CHECK_THROWS_AS(ratio_bound_check(Mat(Mat::Identity(2, 2)), Mat(Mat::Identity(2, 2)), Mat(-Mat::Identity(2, 2)), 1,
                                1, 3, ChibarCone::positive),
                  PreconditionError);
}

TEST_CASE("ratio bound on rejection-sampled hypothesis-satisfying pairs") {
  std::mt19937_64 rng(33);
  for (const auto cone : {ChibarCone::positive, ChibarCone::negative}) {
    int accepted = 0, tries = 0;
    while (accepted < 200 && tries < 200000) {
      ++tries;
      const int d = 2 + tries % 3;
      const int k = 2 + tries % (d - 1);
      const int r = 1 + tries % k;
      const int s = k - r;
      const Mat chi = gamma_sample(d, k, rng);
      Mat chibar = gamma_sample(d, k, rng);
      if (cone == ChibarCone::negative) chibar = -chibar;
      const auto rep = ratio_bound_check(Mat(Mat::Identity(d, d)), chi, chibar, r, s, d + 1, cone);
      if (!rep.hypothesis_holds) continue;
      ++accepted;
      CHECK(rep.conclusion_residual >= -1e-10);
    }
    CHECK(accepted == 200);
  }
}
