#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "boltzmap/common.hpp"

namespace boltzmap {

inline constexpr double kPi = 3.14159265358979323846;

// log C(2k,k) - k log 4  (== log of the normalized central binomial)
inline double log_central_binom_4k(std::int64_t k) {
  if (k == 0) return 0.0;
  return std::lgamma(2.0 * k + 1.0) - 2.0 * std::lgamma(k + 1.0) - k * std::log(4.0);
}

// C(2k-1, k-1) = Gamma(2k) / (Gamma(k) Gamma(k+1)), in log space
inline double log_binom_2km1(std::int64_t k) {
  return std::lgamma(2.0 * k) - std::lgamma((double)k) - std::lgamma(k + 1.0);
}

// Kahan-compensated accumulator
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

// Riemann zeta on the real line (s != 1), via Euler-Maclaurin for s > 1
// and the functional equation below.
inline double riemann_zeta(double s) {
  if (s == 1.0) fail(Errc::Undefined, "zeta pole at s=1");
  if (s >= 1.0 || (s > 0.0 && s < 1.0)) {
    if (s > 1.0 || (s > 0.0 && s < 1.0)) {
      // Euler-Maclaurin: sum_{n<K} n^-s + K^{1-s}/(s-1) + K^-s/2 + corrections
      const int K = 24;
      Kahan acc;
      for (int n = 1; n < K; ++n) acc.add(std::pow((double)n, -s));
      acc.add(std::pow((double)K, 1.0 - s) / (s - 1.0));
      acc.add(0.5 * std::pow((double)K, -s));
      // Bernoulli corrections B2/2! s K^{-s-1}, B4/4! s(s+1)(s+2) K^{-s-3}, ...
      static const double bfac[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0,
                                    -1.0 / 1209600.0, 1.0 / 47900160.0};
      double p = s * std::pow((double)K, -s - 1.0);
      acc.add(bfac[0] * p);
      double rise = s;
      for (int j = 1; j < 5; ++j) {
        rise *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
        p = rise * std::pow((double)K, -s - 2.0 * j - 1.0);
        acc.add(bfac[j] * p);
      }
      return acc.sum;
    }
  }
  if (s == 0.0) return -0.5;
  // reflection: zeta(s) = 2^s pi^{s-1} sin(pi s/2) Gamma(1-s) zeta(1-s)
  return std::pow(2.0, s) * std::pow(kPi, s - 1.0) * std::sin(kPi * s / 2.0) *
         std::tgamma(1.0 - s) * riemann_zeta(1.0 - s);
}

// Polylogarithm Li_s(u) for real u in [0,1], s > 1 non-integer.
// Near u=1 uses the standard expansion in w = -log u (|w| < 2pi).
class Polylog {
 public:
  explicit Polylog(double s) : s_(s) {
    gamma1ms_ = std::tgamma(1.0 - s);  // negative for s in (1,2)
    zetas_.resize(kTerms);
    for (int j = 0; j < kTerms; ++j) zetas_[j] = riemann_zeta(s - j);
  }

  double s() const { return s_; }
  double zeta_s() const { return zetas_[0]; }

  double operator()(double u) const {
    if (u <= 0.0) return 0.0;
    if (u < kSplit) return series(u);
    return zetas_[0] - deficit(u);
  }

  // zeta(s) - Li_s(u), evaluated without cancellation near u = 1.
  // deficit(u) = -Gamma(1-s) w^{s-1} - sum_{j>=1} zeta(s-j) (-w)^j / j!
  double deficit(double u) const {
    if (u >= 1.0) return 0.0;
    if (u < kSplit) return zetas_[0] - series(u);
    double w = -std::log(u);
    double acc = -gamma1ms_ * std::pow(w, s_ - 1.0);
    double term = 1.0;  // (-w)^j / j!
    for (int j = 1; j < kTerms; ++j) {
      term *= -w / j;
      acc -= zetas_[j] * term;
    }
    return acc;
  }

  // Li_{s}(u)/u truncated-sum derivative helpers for the family are built by
  // callers from operator() at shifted s.

 private:
  double series(double u) const {
    Kahan acc;
    double uk = u;
    for (int k = 1; k < 4096; ++k) {
      double t = uk * std::pow((double)k, -s_);
      acc.add(t);
      if (t < 1e-18 * (std::abs(acc.sum) + 1e-300) && k > 8) break;
      uk *= u;
    }
    return acc.sum;
  }

  static constexpr double kSplit = 0.5;
  static constexpr int kTerms = 40;
  double s_;
  double gamma1ms_;
  std::vector<double> zetas_;
};

// tanh-sinh (double-exponential) nodes on (0,1), symmetric.
// om[i] == 1 - t[i] computed without cancellation.
struct DeRule {
  std::vector<double> t, om, w;
  std::vector<unsigned char> even;  // node index parity, for half-rule error estimates

  static DeRule build(int n_half, double hmax = 4.3) {
    DeRule r;
    double h = hmax / n_half;
    for (int i = -n_half; i <= n_half; ++i) {
      double u = i * h;
      double su = 0.5 * kPi * std::sinh(u);
      double ch = std::cosh(su);
      double tt = 0.5 * (1.0 + std::tanh(su));
      double om = std::exp(-su) / (2.0 * ch);
      double ww = 0.25 * h * kPi * std::cosh(u) / (ch * ch);
      if (!(ww > 1e-320) || !(tt > 0.0) || !(om > 0.0)) continue;
      r.t.push_back(tt);
      r.om.push_back(om);
      r.w.push_back(ww);
      r.even.push_back((unsigned char)(((i % 2) + 2) % 2 == 0));
    }
    return r;
  }
};

}  // namespace boltzmap
