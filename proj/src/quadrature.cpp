#include "codim2/quadrature.hpp"

#include <string>

namespace codim2::quadrature {

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be positive");
  GaussLegendre g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[n - 1 - i] = x;
    g.nodes[i] = -x;
    g.weights[i] = g.weights[n - 1 - i] = w;
  }
  return g;
}

SphereRule::SphereRule(int n_theta, int n_phi) : n_theta_(n_theta), n_phi_(n_phi) {
  if (n_theta < 2 || n_phi < 3) throw DomainError("sphere rule needs n_theta >= 2 and n_phi >= 3");
  const GaussLegendre gl = gauss_legendre(n_theta);
  theta_.resize(n_theta);
  round_weight_.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    // Descending cos(theta) gives ascending theta.
    const int k = n_theta - 1 - i;
    theta_[i] = std::acos(gl.nodes[k]);
    round_weight_[i] = gl.weights[k] * 2.0 * M_PI / n_phi;
  }
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double integrate(const SphereRule& rule, std::span<const double> field,
                 std::span<const double> area_element) {
  if (field.size() != rule.size() || area_element.size() != rule.size())
    throw DomainError("field size does not match the quadrature rule");
  std::vector<double> terms(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    if (!std::isfinite(field[k]))
      throw NumericError(k, "non-finite field value at node " + std::to_string(k));
    terms[k] = rule.coordinate_weight(rule.theta_index(k)) * field[k] * area_element[k];
  }
  return pairwise_sum(terms);
}

double integrate_round(const SphereRule& rule, std::span<const double> field) {
  if (field.size() != rule.size()) throw DomainError("field size does not match the quadrature rule");
  std::vector<double> terms(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    if (!std::isfinite(field[k]))
      throw NumericError(k, "non-finite field value at node " + std::to_string(k));
    terms[k] = rule.round_weight(rule.theta_index(k)) * field[k];
  }
  return pairwise_sum(terms);
}

ShSeries sh_project(const SphereRule& rule, std::span<const double> values, int lmax) {
  if (values.size() != rule.size()) throw DomainError("field size does not match the quadrature rule");
  ShSeries out;
  out.lmax = lmax;
  const int count = sh_count(lmax);
  std::vector<std::vector<double>> terms(count, std::vector<double>(rule.size()));
  std::vector<double> y;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const int i = rule.theta_index(k);
    real_sph_harm_all(lmax, rule.theta(i), rule.phi(rule.phi_index(k)), y);
    for (int c = 0; c < count; ++c) terms[c][k] = rule.round_weight(i) * values[k] * y[c];
  }
  out.coeffs.resize(count);
  for (int c = 0; c < count; ++c) out.coeffs[c] = pairwise_sum(terms[c]);
  return out;
}

}  // namespace codim2::quadrature
