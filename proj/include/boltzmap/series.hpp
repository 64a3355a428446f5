#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "boltzmap/common.hpp"
#include "boltzmap/numerics.hpp"
#include "boltzmap/weights.hpp"

namespace boltzmap {

// Truncated power series stored radius-normalized: c[k] = (true coefficient) * radius^k.
// An optional per-coefficient noise floor records extraction accuracy;
// coefficients indistinguishable from zero are stored as exact zeros.
struct NormSeries {
  double radius = 0.0;
  std::vector<double> c;
  std::vector<double> floor;

  int order() const { return (int)c.size() - 1; }
  double log10_true(int k) const {
    return std::log10(std::abs(c[k])) + k * std::log10(1.0 / radius);
  }
};

struct QuadConfig {
  int de_nhalf = 768;       // tanh-sinh half node count
  double de_hmax = 4.3;
  int contour_mfac = 4;     // FFT size = mfac * N
  double contour_delta_c = 20.0;
  double coeff_rel_tol = 1e-8;  // per-coefficient quadrature target
};

// ---------------------------------------------------------------------------
// Disk-function evaluator.
//
// F(x) = sum_k F_k x^k has the integral representation
//   F(x) = int_0^Z Y'(t) (1 - 4 x t)^{-1/2} dt,      Y'(t) = 1 - f(t) - t f'(t),
// obtained from F_k = C(2k,k) int_0^Z t^k Y'(t) dt. The right-hand side is
// analytic on the cut plane C \ [r, inf), which is what makes stable
// coefficient extraction of Fhat possible (see fhat_series).
// ---------------------------------------------------------------------------
class DiskFunction {
 public:
  DiskFunction(const WeightSeq& q, const QuadConfig& cfg = {})
      : Z_(q.admissibility_solve()), r_(1.0 / (4.0 * Z_)) {
    rule_ = DeRule::build(cfg.de_nhalf, cfg.de_hmax);
    wy_.resize(rule_.t.size());
    tz_.resize(rule_.t.size());
    for (std::size_t i = 0; i < rule_.t.size(); ++i) {
      tz_[i] = rule_.t[i] * Z_;
      wy_[i] = rule_.w[i] * Z_ * q.yprime(tz_[i], rule_.om[i]);
    }
    Fr_ = F(r_).real();
    rhat_ = r_ * Fr_ * Fr_;
    // lim_{|x| -> inf} |x F(x)^2| = (1/4) (int Y' t^{-1/2} dt)^2
    Kahan l;
    for (std::size_t i = 0; i < wy_.size(); ++i) l.add(wy_[i] / std::sqrt(tz_[i]));
    linf_ = 0.25 * l.sum * l.sum;
  }

  double Z() const { return Z_; }
  double r() const { return r_; }
  double Fr() const { return Fr_; }
  double rhat() const { return rhat_; }
  double p_limit_at_infinity() const { return linf_; }

  std::complex<double> F(std::complex<double> x) const {
    std::complex<double> a = 1.0 - 4.0 * x * Z_;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < wy_.size(); ++i) {
      std::complex<double> arg = a + (4.0 * Z_ * rule_.om[i]) * x;
      acc += wy_[i] / std::sqrt(arg);
    }
    return acc;
  }

  void F_and_Fprime(std::complex<double> x, std::complex<double>& F,
                    std::complex<double>& Fp) const {
    std::complex<double> a = 1.0 - 4.0 * x * Z_;
    std::complex<double> f(0.0, 0.0), fp(0.0, 0.0);
    for (std::size_t i = 0; i < wy_.size(); ++i) {
      std::complex<double> arg = a + (4.0 * Z_ * rule_.om[i]) * x;
      std::complex<double> q = 1.0 / std::sqrt(arg);
      f += wy_[i] * q;
      fp += (wy_[i] * 2.0 * tz_[i]) * q / arg;
    }
    F = f;
    Fp = fp;
  }

  // F'(r); diverges for type a <= 2 (caller decides via the type).
  double Fprime_at_r() const {
    std::complex<double> f, fp;
    F_and_Fprime(std::complex<double>(r_, 0.0), f, fp);
    return fp.real();
  }

 private:
  double Z_, r_;
  DeRule rule_;
  std::vector<double> wy_, tz_;
  double Fr_ = 0.0, rhat_ = 0.0, linf_ = 0.0;
};

// ---------------------------------------------------------------------------
// partition_series: c_k = F_k r^k via quadrature
//   c_k = [C(2k,k) 4^{-k}] * Z * int_0^1 v^k Y'(Zv) dv.
// tanh-sinh nodes resolve both the v=1 boundary layer (width ~1/k) and
// endpoint singularities of Y'; the error estimate compares against the
// half-density rule.
// ---------------------------------------------------------------------------
inline NormSeries partition_series(const WeightSeq& q, double Z, int N,
                                   const QuadConfig& cfg = {}) {
  NormSeries s;
  s.radius = 1.0 / (4.0 * Z);
  s.c.assign((std::size_t)N + 1, 0.0);
  int nhalf = cfg.de_nhalf;
  for (int attempt = 0;; ++attempt) {
    DeRule rule = DeRule::build(nhalf, cfg.de_hmax);
    std::vector<double> yv(rule.t.size()), logv(rule.t.size());
    for (std::size_t i = 0; i < rule.t.size(); ++i) {
      yv[i] = rule.w[i] * q.yprime(rule.t[i] * Z, rule.om[i]);
      logv[i] = std::log1p(-rule.om[i]);  // log t
    }
    bool ok = true;
    double worst = 0.0;
    for (int k = 0; k <= N; ++k) {
      Kahan full, half;
      for (std::size_t i = 0; i < rule.t.size(); ++i) {
        double term = yv[i] * std::exp(k * logv[i]);
        full.add(term);
        if (rule.even[i]) half.add(2.0 * term);
      }
      double err = std::abs(full.sum - half.sum);
      double scale = std::exp(log_central_binom_4k(k)) * Z;
      s.c[k] = scale * full.sum;
      double tol = cfg.coeff_rel_tol * std::abs(full.sum) + 1e-300;
      if (err > tol) {
        ok = false;
        worst = std::max(worst, err / (std::abs(full.sum) + 1e-300));
      }
    }
    if (ok) break;
    nhalf *= 2;
    if (attempt >= 2)
      fail(Errc::QuadratureFail,
           "partition series quadrature error " + std::to_string(worst) + " above tolerance");
  }
  if (std::abs(s.c[0] - 1.0) > 1e-10) fail(Errc::QuadratureFail, "F_0 != 1");
  for (int k = 0; k <= N; ++k)
    if (s.c[k] < -1e-12) fail(Errc::QuadratureFail, "negative partition coefficient");
  return s;
}

inline NormSeries partition_series(const WeightSeq& q, int N, const QuadConfig& cfg = {}) {
  return partition_series(q, q.admissibility_solve(), N, cfg);
}

// ---------------------------------------------------------------------------
// Asymptotic constants (c_a, kappa_a, kappa'_a, C_q, chat_a)
// ---------------------------------------------------------------------------
struct AsymptoticConstants {
  double a = 0.0;
  double c_a = 0.0;
  double kappa_a = 0.0;
  double kappa_prime_a = 0.0;            // requires F(r)
  std::optional<double> C_q;             // a in (2, 5/2], requires F'(r)
  std::optional<double> c_hat;           // a = 3/2 or a in (2, 5/2]
};

inline double leading_c_a(double Z, const OffspringLaw& mu, const SeqType& type) {
  double a = type.a;
  if (type.regime == Regime::Subcritical) return Z * (1.0 - mu.mean) / std::sqrt(kPi);
  if (type.regime == Regime::GenericCritical) return Z * mu.variance / std::sqrt(kPi);
  if (type.regime == Regime::BoundaryA2)
    fail(Errc::Undefined, "c_a undefined at a=2 (sin vanishes); use the q* fitted path");
  return Z * (a - 0.5) * std::sqrt(kPi) / std::sin(kPi * (a - 1.5));
}

struct RadiusValues {
  double Fr = 0.0;
  double Fprime_r = 0.0;
  bool fprime_infinite = false;
};

// F(r) = sum c_k + tail c_a N^{1-a}/(a-1); r F'(r) = sum k c_k + tail, with the
// derivative flagged infinite when a <= 2. The local tail exponent of c_k is
// cross-checked against a.
inline RadiusValues f_at_radius(const NormSeries& F, const SeqType& type, double c_a,
                                double fit_tol = 0.5) {
  int N = F.order();
  Kahan s0, s1;
  for (int k = 0; k <= N; ++k) {
    s0.add(F.c[k]);
    s1.add((double)k * F.c[k]);
  }
  double a = type.a;
  // local exponent check over the last decade
  if (N >= 64) {
    int k0 = std::max(2, N / 10 * 9);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = k0; k <= N; ++k) {
      if (F.c[k] <= 0.0) continue;
      double x = std::log((double)k), y = std::log(F.c[k]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++n;
    }
    if (n >= 8) {
      double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      bool exp_tail = type.regime == Regime::Subcritical && -slope > a + fit_tol;
      // subcritical hat-side series may decay faster than k^{-a}; only flag
      // when the fitted exponent is materially *smaller* than a.
      if (!exp_tail && std::abs(-slope - a) > fit_tol)
        fail(Errc::TailUnreliable, "fitted coefficient exponent " + std::to_string(-slope) +
                                       " disagrees with a=" + std::to_string(a));
    }
  }
  RadiusValues out;
  double Nc = (double)N + 0.5;
  out.Fr = s0.sum + c_a * std::pow(Nc, 1.0 - a) / (a - 1.0);
  if (a <= 2.0 + 1e-12) {
    out.fprime_infinite = true;
  } else {
    out.Fprime_r = (s1.sum + c_a * std::pow(Nc, 2.0 - a) / (a - 2.0)) / F.radius;
  }
  return out;
}

inline AsymptoticConstants asymptotic_constants(double Z, const OffspringLaw& mu,
                                                const SeqType& type, double Fr,
                                                std::optional<double> Fprime_r) {
  AsymptoticConstants k;
  k.a = type.a;
  k.c_a = leading_c_a(Z, mu, type);
  k.kappa_a = k.c_a * std::abs(std::tgamma(2.0 - k.a)) / (k.a - 1.0);
  double r = 1.0 / (4.0 * Z);
  k.kappa_prime_a = 2.0 * r * Fr * k.kappa_a;
  double Pr = r * Fr * Fr;
  if (type.regime == Regime::Subcritical) {
    double kp = k.kappa_prime_a;
    k.c_hat = Pr * Pr / (2.0 * kp * kp) - 0.125;
  } else if (type.a > 2.0 && type.a <= 2.5 + 1e-12) {
    if (!Fprime_r) fail(Errc::Undefined, "C_q needs finite F'(r)");
    k.C_q = r * Fr * (Fr + 2.0 * r * *Fprime_r);
    k.c_hat = 1.0 - Pr / *k.C_q;
  }
  return k;
}

// ---------------------------------------------------------------------------
// In-place iterative radix-2 FFT (forward, no normalization).
// ---------------------------------------------------------------------------
inline void fft_pow2(std::vector<std::complex<double>>& a) {
  std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / (double)len;
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// fhat_series: simple-boundary partition series Fhat with radius rhat = r F(r)^2.
//
// Coefficients are Cauchy integrals of Fhat = F o P^{-1} pulled back through
// P, i.e. evaluated on the level curve |P(x)| = rho traced by Newton
// continuation in the cut plane:
//   Fhat_k rho^k = (1/2pi) int_0^{2pi} F(x(phi)) e^{-ik phi} dphi,  P(x(phi)) = rho e^{i phi}.
// Truncated-series elimination is exponentially unstable in floating point
// (error ~ F(r)^{2k} eps), while this extraction keeps absolute errors at
// eps * (rhat/rho)^k; the per-coefficient noise floor is recorded and
// sub-floor coefficients are clamped to zero.
// ---------------------------------------------------------------------------
inline NormSeries fhat_series(const DiskFunction& disk, int N, const QuadConfig& cfg = {}) {
  std::size_t M = 1;
  while (M < (std::size_t)cfg.contour_mfac * (std::size_t)N) M <<= 1;
  double rhat = disk.rhat();
  double rho = std::min(rhat * (1.0 - cfg.contour_delta_c / (double)M),
                        0.9 * disk.p_limit_at_infinity());
  const double r = disk.r();

  auto Pval = [&](std::complex<double> x, std::complex<double>& P, std::complex<double>& Pp,
                  std::complex<double>& Fv) {
    std::complex<double> f, fp;
    disk.F_and_Fprime(x, f, fp);
    P = x * f * f;
    Pp = f * (f + 2.0 * x * fp);
    Fv = f;
  };

  std::vector<std::complex<double>> H;
  for (int shrink = 0;; ++shrink) {
    if (shrink > 14) fail(Errc::QuadratureFail, "contour tracking failed at every radius");
    bool ok = true;
    H.assign(M / 2 + 1, std::complex<double>(0.0, 0.0));
    // start on the real axis: P increasing on [0, r]
    double lo = 0.0, hi = r;
    for (int i = 0; i < 120; ++i) {
      double mid = 0.5 * (lo + hi);
      std::complex<double> P, Pp, Fv;
      Pval(std::complex<double>(mid, 0.0), P, Pp, Fv);
      (P.real() < rho ? lo : hi) = mid;
    }
    std::complex<double> x(0.5 * (lo + hi), 0.0);
    std::complex<double> yprev(rho, 0.0);

    auto newton_to = [&](std::complex<double> y, std::complex<double>& xc) -> bool {
      std::complex<double> P, Pp, Fv;
      for (int it = 0; it < 40; ++it) {
        Pval(xc, P, Pp, Fv);
        std::complex<double> res = P - y;
        if (std::abs(res) < 1e-12 * rho) return true;
        if (std::abs(Pp) < 1e-300) return false;
        std::complex<double> step = res / Pp;
        // damped update: keep residual decreasing
        double before = std::abs(res);
        std::complex<double> xn = xc - step;
        for (int h = 0; h < 6; ++h) {
          Pval(xn, P, Pp, Fv);
          if (std::abs(P - y) < before) break;
          step *= 0.5;
          xn = xc - step;
        }
        xc = xn;
      }
      std::complex<double> resf;
      Pval(xc, P, Pp, Fv);
      return std::abs(P - y) < 1e-10 * rho;
    };

    for (std::size_t i = 0; i <= M / 2 && ok; ++i) {
      double phi = kPi * (double)i / (double)(M / 2);
      std::complex<double> y = rho * std::complex<double>(std::cos(phi), std::sin(phi));
      std::complex<double> xc = x;
      if (!newton_to(y, xc)) {
        // parameter continuation with substeps between yprev and y
        bool sub_ok = false;
        for (int parts = 2; parts <= 64 && !sub_ok; parts *= 2) {
          xc = x;
          sub_ok = true;
          for (int sgm = 1; sgm <= parts; ++sgm) {
            double f2 = (double)sgm / parts;
            double ph = std::arg(yprev) + f2 * (std::arg(y) - std::arg(yprev));
            std::complex<double> ym = rho * std::complex<double>(std::cos(ph), std::sin(ph));
            if (!newton_to(ym, xc)) {
              sub_ok = false;
              break;
            }
          }
        }
        if (!sub_ok) {
          ok = false;
          break;
        }
      }
      x = xc;
      yprev = y;
      std::complex<double> P, Pp, Fv;
      Pval(x, P, Pp, Fv);
      H[i] = Fv;
    }
    if (ok) break;
    rho *= 0.7;
  }

  std::vector<std::complex<double>> buf(M);
  for (std::size_t i = 0; i <= M / 2; ++i) buf[i] = H[i];
  for (std::size_t i = M / 2 + 1; i < M; ++i) buf[i] = std::conj(H[M - i]);
  fft_pow2(buf);

  NormSeries out;
  out.radius = rhat;
  out.c.assign((std::size_t)N + 1, 0.0);
  out.floor.assign((std::size_t)N + 1, 0.0);
  double lamp = std::log(rhat / rho);
  for (int k = 0; k <= N; ++k) {
    double la = k * lamp;
    if (la > 690.0) {
      out.floor[k] = 1e300;
      continue;
    }
    double amp = std::exp(la);
    double raw = (buf[k].real() / (double)M) * amp;
    double floor = 1e-14 * std::max(1.0, disk.Fr()) * amp;
    out.floor[k] = floor;
    if (raw < -std::max(floor, 1e-12))
      fail(Errc::QuadratureFail, "significantly negative Fhat coefficient");
    out.c[k] = (std::abs(raw) <= floor) ? 0.0 : raw;
  }
  out.c[0] = 1.0;  // the vertex map
  return out;
}

inline NormSeries fhat_series(const WeightSeq& q, int N, const QuadConfig& cfg = {}) {
  DiskFunction disk(q, cfg);
  return fhat_series(disk, N, cfg);
}

// Truncated-series triangular elimination (the textbook route). Numerically
// valid only for small orders: rounding grows like F(r)^{2k}. Kept as an
// independent algebraic cross-check of fhat_series at low order.
inline NormSeries fhat_series_eliminate(const NormSeries& F, double Fr, int N) {
  if (!(F.c.size() > 0) || std::abs(F.c[0] - 1.0) > 1e-9)
    fail(Errc::Noninvertible, "F_0 must be 1");
  double rhat = F.radius * Fr * Fr;
  int NF = F.order();
  if (N > NF) fail(Errc::BadConfig, "need F to order >= N");
  // T_m = P_m r^m / rhat, P = x F^2
  std::vector<double> T((std::size_t)N + 1, 0.0);
  for (int m = 1; m <= N; ++m) {
    Kahan conv;
    for (int i = 0; i <= m - 1; ++i) conv.add(F.c[i] * F.c[m - 1 - i]);
    T[m] = conv.sum * F.radius / rhat;
  }
  std::vector<double> R(F.c.begin(), F.c.begin() + N + 1);
  std::vector<double> U((std::size_t)N + 1, 0.0);
  U[0] = 1.0;
  NormSeries out;
  out.radius = rhat;
  out.c.assign((std::size_t)N + 1, 0.0);
  for (int j = 0; j <= N; ++j) {
    out.c[j] = R[j] / U[j];
    for (int k = j; k <= N; ++k) R[k] -= out.c[j] * U[k];
    if (j < N) {
      // U <- U * T (valuation shifts by one)
      std::vector<double> nu((std::size_t)N + 1, 0.0);
      for (int m = j; m <= N - 1; ++m) {
        if (U[m] == 0.0) continue;
        for (int i = 1; i + m <= N; ++i) nu[m + i] += U[m] * T[i];
      }
      U.swap(nu);
    }
  }
  return out;
}

// Coefficient-wise residual of F - Fhat o P up to order N (normalized scale),
// composed in the numerically stable forward direction.
inline double verify_relation(const NormSeries& F, const NormSeries& Fhat, int N) {
  if (F.order() < N || Fhat.order() < N) fail(Errc::BadConfig, "series order too small");
  double rhat = Fhat.radius;
  std::vector<double> T((std::size_t)N + 1, 0.0);
  for (int m = 1; m <= N; ++m) {
    Kahan conv;
    for (int i = 0; i <= m - 1; ++i) conv.add(F.c[i] * F.c[m - 1 - i]);
    T[m] = conv.sum * F.radius / rhat;
  }
  std::vector<double> R(F.c.begin(), F.c.begin() + N + 1);
  std::vector<double> U((std::size_t)N + 1, 0.0);
  U[0] = 1.0;
  for (int j = 0; j <= N; ++j) {
    double psi = Fhat.c[j];
    for (int k = j; k <= N; ++k) R[k] -= psi * U[k];
    if (j < N) {
      std::vector<double> nu((std::size_t)N + 1, 0.0);
      for (int m = j; m <= N - 1; ++m) {
        if (U[m] == 0.0) continue;
        for (int i = 1; i + m <= N; ++i) nu[m + i] += U[m] * T[i];
      }
      U.swap(nu);
    }
  }
  double worst = 0.0;
  for (int k = 0; k <= N; ++k) worst = std::max(worst, std::abs(R[k]));
  return worst;
}

}  // namespace boltzmap
