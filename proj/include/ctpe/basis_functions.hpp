#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctpe/errors.hpp"

namespace ctpe {

enum class BasisFamily { fourier, legendre, monomial, quadratic };

// Immutable linear feature map psi : R -> R^m (one-dimensional states).
// Families:
//   fourier   on [-pi, pi]: 1, cos x, sin x, cos 2x, ..., sin Kx, each
//             scaled by 1/sqrt(2 pi); m = 2K + 1. Under Lebesgue measure on
//             [-pi, pi] this makes the Gram matrix diag(1, 1/2, ..., 1/2).
//   legendre  shifted to [a, b] via the affine map to [-1, 1]; m = D + 1.
//             Evaluation extrapolates polynomially outside [a, b].
//   monomial  1, x, ..., x^D; m = D + 1.
//   quadratic alias for monomial degree 2.
class FeatureMap {
 public:
  BasisFamily family() const { return family_; }
  int size() const { return size_; }
  int max_frequency() const;  // fourier only
  int max_degree() const;     // polynomial families only
  double domain_a() const { return a_; }
  double domain_b() const { return b_; }

  void eval_into(double x, double* out) const;
  void grad_into(double x, double* out) const;
  std::vector<double> eval(double x) const;
  std::vector<double> grad(double x) const;

  // Round-trippable with parse_basis_spec; used in CSV headers.
  std::string spec_string() const;

 private:
  friend FeatureMap make_fourier(int);
  friend FeatureMap make_legendre(int, double, double);
  friend FeatureMap make_monomial(int);
  friend FeatureMap make_quadratic();
  FeatureMap(BasisFamily family, int param, double a, double b);

  BasisFamily family_;
  int param_;  // max frequency (fourier) or max degree (polynomial)
  int size_;
  double a_, b_;
};

FeatureMap make_fourier(int max_freq);
FeatureMap make_legendre(int max_degree, double a, double b);
FeatureMap make_monomial(int max_degree);
FeatureMap make_quadratic();

// "fourier:K", "legendre:D" (domain defaults to [-pi, pi]),
// "legendre:D:a:b", "monomial:D", "quadratic". Throws ConfigError.
FeatureMap parse_basis_spec(const std::string& spec);

struct GradientBoundReport {
  double max_ratio = 0.0;  // max over samples of ||f'|| / ||f||
  double omega_max = 0.0;  // top frequency of the map
  int samples = 0;
};

// Draws `samples` standard-normal coefficient vectors and verifies the
// Bernstein-type bound ||f'|| <= omega_max ||f|| for f in the span, with
// norms taken under the uniform measure on [-pi, pi] by 1e4-point midpoint
// quadrature (exact for trigonometric polynomials of these degrees).
// Requires a fourier map.
GradientBoundReport fourier_gradient_bound_check(const FeatureMap& fm, int samples,
                                                 std::uint64_t seed);

}  // namespace ctpe
