#include "ctpe/basis_functions.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ctpe/rng.hpp"

namespace ctpe {

namespace {
constexpr double kPi = std::numbers::pi;
const double kFourierScale = 1.0 / std::sqrt(2.0 * kPi);
}  // namespace

FeatureMap::FeatureMap(BasisFamily family, int param, double a, double b)
    : family_(family), param_(param), a_(a), b_(b) {
  size_ = (family == BasisFamily::fourier) ? 2 * param + 1 : param + 1;
}

int FeatureMap::max_frequency() const {
  if (family_ != BasisFamily::fourier) throw DomainError("max_frequency: not a fourier map");
  return param_;
}

int FeatureMap::max_degree() const {
  if (family_ == BasisFamily::fourier) throw DomainError("max_degree: fourier map");
  return param_;
}

void FeatureMap::eval_into(double x, double* out) const {
  switch (family_) {
    case BasisFamily::fourier: {
      out[0] = kFourierScale;
      if (param_ == 0) return;
      // cos/sin of multiples of x by angle-addition recurrence: one sincos
      // for the whole row instead of 2K trig calls on the hot path.
      const double c1 = std::cos(x), s1 = std::sin(x);
      double ck = c1, sk = s1;
      for (int f = 1;; ++f) {
        out[2 * f - 1] = kFourierScale * ck;
        out[2 * f] = kFourierScale * sk;
        if (f == param_) break;
        const double cn = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = cn;
      }
      return;
    }
    case BasisFamily::legendre: {
      const double t = (2.0 * x - (a_ + b_)) / (b_ - a_);
      out[0] = 1.0;
      if (param_ == 0) return;
      out[1] = t;
      for (int j = 1; j < param_; ++j) {
        out[j + 1] = ((2.0 * j + 1.0) * t * out[j] - j * out[j - 1]) / (j + 1.0);
      }
      return;
    }
    case BasisFamily::monomial:
    case BasisFamily::quadratic: {
      double p = 1.0;
      for (int j = 0; j <= param_; ++j) {
        out[j] = p;
        p *= x;
      }
      return;
    }
  }
}

void FeatureMap::grad_into(double x, double* out) const {
  switch (family_) {
    case BasisFamily::fourier: {
      out[0] = 0.0;
      if (param_ == 0) return;
      const double c1 = std::cos(x), s1 = std::sin(x);
      double ck = c1, sk = s1;
      for (int f = 1;; ++f) {
        out[2 * f - 1] = -kFourierScale * f * sk;
        out[2 * f] = kFourierScale * f * ck;
        if (f == param_) break;
        const double cn = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = cn;
      }
      return;
    }
    case BasisFamily::legendre: {
      // dP_{j+1}/dt = dP_{j-1}/dt + (2j+1) P_j, then chain rule for the
      // affine map t(x) = (2x - a - b)/(b - a).
      const double tx = 2.0 / (b_ - a_);
      std::vector<double> p(param_ + 1);
      eval_into(x, p.data());
      out[0] = 0.0;
      if (param_ == 0) return;
      out[1] = tx;
      double dprev = 0.0, dcur = 1.0;  // dP_0/dt, dP_1/dt
      for (int j = 1; j < param_; ++j) {
        const double dnext = dprev + (2.0 * j + 1.0) * p[j];
        out[j + 1] = dnext * tx;
        dprev = dcur;
        dcur = dnext;
      }
      return;
    }
    case BasisFamily::monomial:
    case BasisFamily::quadratic: {
      out[0] = 0.0;
      double p = 1.0;
      for (int j = 1; j <= param_; ++j) {
        out[j] = j * p;
        p *= x;
      }
      return;
    }
  }
}

std::vector<double> FeatureMap::eval(double x) const {
  std::vector<double> out(size_);
  eval_into(x, out.data());
  return out;
}

std::vector<double> FeatureMap::grad(double x) const {
  std::vector<double> out(size_);
  grad_into(x, out.data());
  return out;
}

std::string FeatureMap::spec_string() const {
  std::ostringstream os;
  switch (family_) {
    case BasisFamily::fourier:
      os << "fourier:" << param_;
      break;
    case BasisFamily::legendre:
      os << "legendre:" << param_ << ":" << a_ << ":" << b_;
      break;
    case BasisFamily::monomial:
      os << "monomial:" << param_;
      break;
    case BasisFamily::quadratic:
      os << "quadratic";
      break;
  }
  return os.str();
}

FeatureMap make_fourier(int max_freq) {
  if (max_freq < 0) throw DomainError("make_fourier: max_freq must be >= 0");
  return FeatureMap(BasisFamily::fourier, max_freq, -kPi, kPi);
}

FeatureMap make_legendre(int max_degree, double a, double b) {
  if (max_degree < 0) throw DomainError("make_legendre: max_degree must be >= 0");
  if (!(a < b)) throw DomainError("make_legendre: need a < b");
  return FeatureMap(BasisFamily::legendre, max_degree, a, b);
}

FeatureMap make_monomial(int max_degree) {
  if (max_degree < 0) throw DomainError("make_monomial: max_degree must be >= 0");
  return FeatureMap(BasisFamily::monomial, max_degree, -kPi, kPi);
}

FeatureMap make_quadratic() {
  FeatureMap fm(BasisFamily::quadratic, 2, -kPi, kPi);
  return fm;
}

FeatureMap parse_basis_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : spec) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  const auto to_int = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("basis spec '" + spec + "': bad integer '" + s + "'");
    }
  };
  const auto to_double = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("basis spec '" + spec + "': bad number '" + s + "'");
    }
  };
  try {
    if (parts[0] == "fourier" && parts.size() == 2) return make_fourier(to_int(parts[1]));
    if (parts[0] == "legendre" && parts.size() == 2) {
      return make_legendre(to_int(parts[1]), -kPi, kPi);
    }
    if (parts[0] == "legendre" && parts.size() == 4) {
      return make_legendre(to_int(parts[1]), to_double(parts[2]), to_double(parts[3]));
    }
    if (parts[0] == "monomial" && parts.size() == 2) return make_monomial(to_int(parts[1]));
    if (parts[0] == "quadratic" && parts.size() == 1) return make_quadratic();
  } catch (const DomainError& e) {
    throw ConfigError("basis spec '" + spec + "': " + e.what());
  }
  throw ConfigError("unrecognized basis spec '" + spec + "'");
}

GradientBoundReport fourier_gradient_bound_check(const FeatureMap& fm, int samples,
                                                 std::uint64_t seed) {
  if (fm.family() != BasisFamily::fourier) {
    throw DomainError("fourier_gradient_bound_check: requires a fourier map");
  }
  if (samples < 1) throw DomainError("fourier_gradient_bound_check: need samples >= 1");

  constexpr int kQuadPoints = 10000;
  const int m = fm.size();
  // Midpoint rule on the full period: exact for trigonometric polynomials of
  // degree below kQuadPoints, so the norm ratio carries no quadrature bias.
  std::vector<double> vals(static_cast<std::size_t>(kQuadPoints) * m);
  std::vector<double> grads(static_cast<std::size_t>(kQuadPoints) * m);
  for (int q = 0; q < kQuadPoints; ++q) {
    const double x = -kPi + (q + 0.5) * (2.0 * kPi / kQuadPoints);
    fm.eval_into(x, &vals[static_cast<std::size_t>(q) * m]);
    fm.grad_into(x, &grads[static_cast<std::size_t>(q) * m]);
  }

  RngStream rng(seed, 0);
  GradientBoundReport report;
  report.omega_max = static_cast<double>(fm.max_frequency());
  report.samples = samples;
  std::vector<double> theta(m);
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < m; ++j) theta[j] = rng.normal();
    double num = 0.0, den = 0.0;
    for (int q = 0; q < kQuadPoints; ++q) {
      const double* v = &vals[static_cast<std::size_t>(q) * m];
      const double* g = &grads[static_cast<std::size_t>(q) * m];
      double fv = 0.0, fg = 0.0;
      for (int j = 0; j < m; ++j) {
        fv += theta[j] * v[j];
        fg += theta[j] * g[j];
      }
      num += fg * fg;
      den += fv * fv;
    }
    if (den == 0.0) continue;
    report.max_ratio = std::max(report.max_ratio, std::sqrt(num / den));
  }
  return report;
}

}  // namespace ctpe
