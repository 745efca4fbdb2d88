#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "codim2/surface.hpp"

namespace codim2::surface {

namespace {

using std::cos;
using std::sin;

AD series(const std::vector<ShTerm>& terms, const AD& th, const AD& ph) {
  AD v(0.0, Eigen::Vector2d::Zero());
  if (terms.empty()) return v;
  int lmax = 0;
  for (const auto& t : terms) lmax = std::max(lmax, t.l);
  std::vector<AD> y;
  quadrature::real_sph_harm_all(lmax, th, ph, y);
  for (const auto& t : terms) v += t.coeff * y[quadrature::sh_index(t.l, t.m)];
  return v;
}

void validate_terms(const std::vector<ShTerm>& terms) {
  for (const auto& t : terms)
    if (t.l < 0 || t.m < -t.l || t.m > t.l) throw ConfigError("invalid spherical-harmonic term");
}

Eigen::Matrix<AD, 3, 1> unit_direction(const AD& th, const AD& ph) {
  return {sin(th) * cos(ph), sin(th) * sin(ph), cos(th)};
}

AD constant(double v) { return AD(v, Eigen::Vector2d::Zero()); }

class Graph : public Immersion {
 public:
  Graph(std::string name, double t0, double r0, std::vector<ShTerm> rho, std::vector<ShTerm> time)
      : name_(std::move(name)), t0_(t0), r0_(r0), rho_(std::move(rho)), time_(std::move(time)) {}
  std::string name() const override { return name_; }
  Vec4AD position(const AD& th, const AD& ph) const override {
    const AD rho = r0_ * (1.0 + series(rho_, th, ph));
    const auto n = unit_direction(th, ph);
    Vec4AD x;
    x(0) = t0_ + series(time_, th, ph);
    for (int i = 0; i < 3; ++i) x(1 + i) = rho * n(i);
    return x;
  }

 private:
  std::string name_;
  double t0_, r0_;
  std::vector<ShTerm> rho_, time_;
};

class Ellipsoid : public Immersion {
 public:
  Ellipsoid(std::string name, double t0, Eigen::Vector3d axes, Eigen::Vector3d center)
      : name_(std::move(name)), t0_(t0), axes_(axes), center_(center) {}
  std::string name() const override { return name_; }
  Vec4AD position(const AD& th, const AD& ph) const override {
    const auto n = unit_direction(th, ph);
    Vec4AD x;
    x(0) = constant(t0_);
    for (int i = 0; i < 3; ++i) x(1 + i) = center_(i) + axes_(i) * n(i);
    return x;
  }

 private:
  std::string name_;
  double t0_;
  Eigen::Vector3d axes_, center_;
};

// Round sphere of radius R at rest in a frame moving with velocity beta along z.
class BoostedSphere : public Immersion {
 public:
  BoostedSphere(double t0, double radius, double beta) : t0_(t0), R_(radius), beta_(beta) {
    if (std::abs(beta) >= 1.0) throw ConfigError("boost velocity must satisfy |beta| < 1");
  }
  std::string name() const override { return "boosted-sphere"; }
  Vec4AD position(const AD& th, const AD& ph) const override {
    const double gamma = 1.0 / std::sqrt(1.0 - beta_ * beta_);
    const auto n = unit_direction(th, ph);
    Vec4AD x;
    x(0) = t0_ + gamma * beta_ * R_ * n(2);
    x(1) = R_ * n(0);
    x(2) = R_ * n(1);
    x(3) = gamma * R_ * n(2);
    return x;
  }

 private:
  double t0_, R_, beta_;
};

// Section rho(theta, phi) of the null hypersurface t = t0 -/+ r^*(r) generated by
// spheres of symmetry (incoming by default).
class ConeSection : public Immersion {
 public:
  ConeSection(const Ambient& ambient, double t0, double r0, std::vector<ShTerm> rho, bool outgoing)
      : warp_(ambient.warp()), ambient_(&ambient), t0_(t0), r0_(r0), rho_(std::move(rho)),
        sign_(outgoing ? 1.0 : -1.0) {
    ambient.tortoise(r0);  // rejects families without a closed form
  }
  std::string name() const override { return "cone-section"; }
  Vec4AD position(const AD& th, const AD& ph) const override {
    const AD rho = r0_ * (1.0 + series(rho_, th, ph));
    const double r = rho.value();
    const double rstar = ambient_->tortoise(r);
    const double F = warp_(r).F;
    Vec4AD x;
    x(0) = AD(t0_ + sign_ * rstar, sign_ / F * rho.derivatives());
    const auto n = unit_direction(th, ph);
    for (int i = 0; i < 3; ++i) x(1 + i) = rho * n(i);
    return x;
  }

 private:
  spacetime::StaticWarp warp_;
  const Ambient* ambient_;
  double t0_, r0_;
  std::vector<ShTerm> rho_;
  double sign_;
};

// Spherical-harmonic interpolant of tabulated samples on the Gauss-Legendre grid.
class TabulatedSurface : public Immersion {
 public:
  TabulatedSurface(std::array<quadrature::ShSeries, 4> comps) : comps_(std::move(comps)) {}
  std::string name() const override { return "csv"; }
  Vec4AD position(const AD& th, const AD& ph) const override {
    Vec4AD x;
    for (int k = 0; k < 4; ++k) x(k) = comps_[k](th, ph);
    return x;
  }

 private:
  std::array<quadrature::ShSeries, 4> comps_;
};

// Columns theta_index, phi_index, t, r, Theta, Phi; the grid size is inferred from the
// largest indices (n_phi = 2 n_theta is not required).
std::shared_ptr<Immersion> load_csv(const std::string& path, int lmax) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open surface table " + path);
  std::string line;
  std::vector<std::array<double, 6>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_of("abcdfghijklmnopqrsuvwxyzABCDFGHIJKLMNOPQRSTUVWXYZ_") != std::string::npos) continue;
    std::stringstream ss(line);
    std::array<double, 6> row{};
    std::string cell;
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("surface table row with fewer than six columns");
      row[k] = std::stod(cell);
    }
    rows.push_back(row);
  }
  int nt = 0, np = 0;
  for (const auto& r : rows) {
    nt = std::max(nt, static_cast<int>(r[0]) + 1);
    np = std::max(np, static_cast<int>(r[1]) + 1);
  }
  if (nt < 2 || np < 3 || static_cast<int>(rows.size()) != nt * np)
    throw ConfigError("surface table does not cover a full grid");
  const quadrature::SphereRule rule(nt, np);
  std::array<std::vector<double>, 4> vals;
  for (auto& v : vals) v.assign(rule.size(), 0.0);
  for (const auto& r : rows) {
    const std::size_t k = rule.index(static_cast<int>(r[0]), static_cast<int>(r[1]));
    vals[0][k] = r[2];
    vals[1][k] = r[3] * std::sin(r[4]) * std::cos(r[5]);
    vals[2][k] = r[3] * std::sin(r[4]) * std::sin(r[5]);
    vals[3][k] = r[3] * std::cos(r[4]);
  }
  const int l = std::min({lmax, nt - 1, (np - 1) / 2});
  std::array<quadrature::ShSeries, 4> comps;
  for (int k = 0; k < 4; ++k) comps[k] = quadrature::sh_project(rule, vals[k], l);
  return std::make_shared<TabulatedSurface>(std::move(comps));
}

}  // namespace

std::vector<ShTerm> random_sh_terms(int lmax, double epsilon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<ShTerm> terms;
  double bound = 0.0;
  for (int l = 1; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const double c = u(rng);
      terms.push_back({l, m, c});
      // sup |Y_lm| <= sqrt(2 (2l+1) / (4 pi))
      bound += std::abs(c) * std::sqrt(2.0 * (2 * l + 1) / (4 * M_PI));
    }
  if (bound > 0.0)
    for (auto& t : terms) t.coeff *= epsilon / bound;
  return terms;
}

std::vector<std::string> family_names() {
  return {"sphere", "boosted-sphere", "cone-section", "slice-graph", "random-graph",
          "ellipsoid", "offset-sphere", "csv"};
}

std::shared_ptr<Immersion> family_catalog(const std::string& name, const FamilyParams& p,
                                          const Ambient& ambient) {
  validate_terms(p.rho_terms);
  validate_terms(p.time_terms);
  if (name != "csv" && name != "ellipsoid" && !(p.r0 > 0.0)) throw ConfigError("r0 must be positive");
  if (name == "sphere") return std::make_shared<Graph>("sphere", p.t0, p.r0, std::vector<ShTerm>{}, std::vector<ShTerm>{});
  if (name == "boosted-sphere") return std::make_shared<BoostedSphere>(p.t0, p.r0, p.beta);
  if (name == "cone-section") return std::make_shared<ConeSection>(ambient, p.t0, p.r0, p.rho_terms, p.outgoing);
  if (name == "slice-graph") return std::make_shared<Graph>("slice-graph", p.t0, p.r0, p.rho_terms, p.time_terms);
  if (name == "random-graph") {
    if (!(p.epsilon >= 0.0 && p.epsilon < 1.0)) throw ConfigError("random-graph epsilon must lie in [0, 1)");
    return std::make_shared<Graph>("random-graph", p.t0, p.r0, random_sh_terms(p.random_lmax, p.epsilon, p.seed),
                                   p.time_terms);
  }
  if (name == "ellipsoid") {
    if ((p.axes.array() <= 0.0).any()) throw ConfigError("ellipsoid axes must be positive");
    return std::make_shared<Ellipsoid>("ellipsoid", p.t0, p.axes, p.center);
  }
  if (name == "offset-sphere")
    return std::make_shared<Ellipsoid>("offset-sphere", p.t0, Eigen::Vector3d::Constant(p.r0), p.center);
  if (name == "csv") return load_csv(p.csv_path, p.csv_lmax);
  throw ConfigError("unknown surface family '" + name + "'");
}

}  // namespace codim2::surface
