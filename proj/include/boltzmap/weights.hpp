#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "boltzmap/common.hpp"
#include "boltzmap/numerics.hpp"

namespace boltzmap {

enum class Regime { Subcritical, Dense, BoundaryA2, Dilute, GenericCritical };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Dense: return "dense";
    case Regime::BoundaryA2: return "boundary_a2";
    case Regime::Dilute: return "dilute";
    case Regime::GenericCritical: return "generic_critical";
  }
  return "?";
}

struct SeqType {
  double a = 2.5;  // in [3/2, 5/2]
  Regime regime = Regime::GenericCritical;
  double alpha() const { return a - 0.5; }
};

inline Regime regime_of_a(double a) {
  const double eps = 1e-9;
  if (a < 1.5 + eps) return Regime::Subcritical;
  if (a > 2.5 - eps) return Regime::GenericCritical;
  if (std::abs(a - 2.0) < eps) return Regime::BoundaryA2;
  return a < 2.0 ? Regime::Dense : Regime::Dilute;
}

// mu tail model: mu([k,inf)) ~ ccdf_c * k^{-alpha}
struct MuTail {
  double alpha = 0.0;
  double ccdf_c = 0.0;
  bool declared = false;
};

struct OffspringLaw {
  std::vector<double> probs;  // probs[k], k = 0..N
  double mean = 0.0;
  double variance = 0.0;  // meaningful only if !variance_infinite
  bool variance_infinite = false;
  std::optional<MuTail> tail;

  double operator()(std::size_t k) const { return k < probs.size() ? probs[k] : 0.0; }
};

enum class WeightKind { Explicit, QStar, Stable };

// Bipartite face-weight sequence q_1, q_2, ... with cached admissibility data.
// Infinite families (qstar, stable) are closed-form generators materialized to
// a truncation order; their f_q / Y_q' evaluations use the closed forms.
class WeightSeq {
 public:
  static WeightSeq zero() {
    WeightSeq q;
    q.kind_ = WeightKind::Explicit;
    q.coeffs_.clear();
    return q;
  }

  static WeightSeq explicit_seq(std::vector<double> coeffs) {
    for (double c : coeffs)
      if (!(c >= 0.0)) fail(Errc::BadConfig, "negative weight");
    WeightSeq q;
    q.kind_ = WeightKind::Explicit;
    q.coeffs_ = std::move(coeffs);
    return q;
  }

  // q*_k = (1/4) 6^{1-k} Gamma(k-3/2)/Gamma(k+1/2) for k >= 2, via the
  // telescoping ratio 1/((k-3/2)(k-1/2)); no Gamma calls.
  static WeightSeq qstar(int truncation) {
    if (truncation < 2) fail(Errc::BadConfig, "qstar truncation must be >= 2");
    WeightSeq q;
    q.kind_ = WeightKind::QStar;
    q.truncation_ = truncation;
    q.coeffs_.assign(truncation, 0.0);
    double pow6 = 1.0 / 6.0;  // 6^{1-k} at k = 2
    for (int k = 2; k <= truncation; ++k) {
      q.coeffs_[k - 1] = 0.25 * pow6 / ((k - 1.5) * (k - 0.5));
      pow6 /= 6.0;
    }
    q.Z_ = 1.5;
    return q;
  }

  // Two-parameter family mu(k) = (1-s) 1{k=0} + s c k^{-alpha-1} 1{k>=1},
  // c = 1/zeta(alpha+1). If s is not given it is solved so that m_mu = 1.
  static WeightSeq stable(double alpha, std::optional<double> s = std::nullopt,
                          int truncation = 4096) {
    if (!(alpha > 1.0 && alpha < 2.0)) fail(Errc::BadConfig, "stable alpha must be in (1,2)");
    WeightSeq q;
    q.kind_ = WeightKind::Stable;
    q.alpha_ = alpha;
    q.zeta_a1_ = riemann_zeta(alpha + 1.0);
    q.zeta_a_ = riemann_zeta(alpha);
    q.c_ = 1.0 / q.zeta_a1_;
    double s_crit = q.zeta_a1_ / q.zeta_a_;
    q.s_ = s ? *s : s_crit;
    if (!(q.s_ > 0.0 && q.s_ < 1.0)) fail(Errc::BadConfig, "stable s must be in (0,1)");
    if (q.s_ > s_crit * (1.0 + 1e-12)) fail(Errc::Supercritical, "stable s gives m_mu > 1");
    q.Z_ = 1.0 / (1.0 - q.s_);
    q.truncation_ = truncation;
    q.li_ = std::make_shared<Polylog>(alpha);
    // materialize q_k = mu(k) Z^{1-k} / C(2k-1,k-1)
    q.coeffs_.assign(truncation, 0.0);
    double logZ = std::log(*q.Z_);
    for (int k = 1; k <= truncation; ++k) {
      double logmu = std::log(q.s_ * q.c_) - (alpha + 1.0) * std::log((double)k);
      q.coeffs_[k - 1] = std::exp(logmu + (1.0 - k) * logZ - log_binom_2km1(k));
    }
    return q;
  }

  WeightKind kind() const { return kind_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  int truncation() const { return truncation_ ? truncation_ : (int)coeffs_.size(); }
  double stable_alpha() const { return alpha_; }
  double stable_s() const { return s_; }

  bool is_zero() const {
    for (double c : coeffs_)
      if (c != 0.0) return false;
    return true;
  }

  // Upper limit of the domain of f_q (radius of convergence; +inf for
  // polynomial sequences).
  double f_radius() const {
    switch (kind_) {
      case WeightKind::Explicit: return std::numeric_limits<double>::infinity();
      case WeightKind::QStar: return 1.5;
      case WeightKind::Stable: return *Z_;
    }
    return 0.0;
  }

  // f_q(x) = sum_k C(2k-1,k-1) q_k x^{k-1}; closed form for generators.
  double eval_f(double x) const {
    check_domain(x);
    switch (kind_) {
      case WeightKind::Explicit: {
        Kahan acc;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) {
          if (coeffs_[i] == 0.0) continue;
          std::int64_t k = (std::int64_t)i + 1;
          double lt = log_binom_2km1(k) + std::log(coeffs_[i]) + (k - 1) * log_guard(x);
          if (lt > 700.0) fail(Errc::Overflow, "f_q term overflow");
          acc.add(k == 1 && x == 0.0 ? coeffs_[0] * 1.0 : std::exp(lt));
        }
        return acc.sum;
      }
      case WeightKind::QStar: {
        // f(t) = (2/(3u)) ((1-u)^{3/2} - 1 + (3/2) u), u = 2t/3
        double u = x / 1.5;
        if (u <= 0.0) return 0.0;
        if (u < 1e-4) {
          // series: f = (2/(3u)) (3/8 u^2 + 1/16 u^3 + ...) from binomial expansion
          return (2.0 / 3.0) * (0.375 * u + 0.0625 * u * u + (3.0 / 128.0) * u * u * u);
        }
        double om = 1.0 - u;
        return (2.0 / (3.0 * u)) * (om * std::sqrt(std::max(om, 0.0)) - 1.0 + 1.5 * u);
      }
      case WeightKind::Stable: {
        // f(x) = sum mu(k) u^{k-1} / 1, u = x/Z: f = s c Li_{alpha+1}(u)/u
        double u = x / *Z_;
        if (u <= 0.0) return 0.0;
        Polylog li1(alpha_ + 1.0);  // light: cached? built per call is fine off hot path
        return s_ * c_ * li1(u) / u;
      }
    }
    return 0.0;
  }

  double eval_f_prime(double x) const {
    check_domain(x);
    switch (kind_) {
      case WeightKind::Explicit: {
        Kahan acc;
        for (std::size_t i = 1; i < coeffs_.size(); ++i) {
          if (coeffs_[i] == 0.0) continue;
          std::int64_t k = (std::int64_t)i + 1;
          double lt = log_binom_2km1(k) + std::log(coeffs_[i]) + (k - 2) * log_guard(x);
          if (lt > 700.0) fail(Errc::Overflow, "f_q' term overflow");
          acc.add(std::exp(lt) * (k - 1));
        }
        return acc.sum;
      }
      default: {
        // generators: differentiate via Y' identity f + t f' = 1 - Y'(t)
        double f = eval_f(x);
        if (x == 0.0) return kind_ == WeightKind::QStar ? 0.25 * (2.0 / 3.0) * 0.375 * (2.0 / 3.0) : derivative_at0();
        return (1.0 - yprime(x) - f) / x;
      }
    }
  }

  // Y_q'(t) = 1 - f_q(t) - t f_q'(t), t in [0, Z]; om_over_Z optionally passes
  // (1 - t/Z) computed without cancellation (used by quadrature rules).
  double yprime(double t, std::optional<double> om = std::nullopt) const {
    switch (kind_) {
      case WeightKind::Explicit: {
        return 1.0 - eval_f(t) - t * eval_f_prime_poly(t);
      }
      case WeightKind::QStar: {
        double o = om ? *om : 1.0 - t / 1.5;
        return std::sqrt(std::max(o, 0.0));
      }
      case WeightKind::Stable: {
        // Y' = (1 - m_mu) + s c [ (zeta(a) - Li_a(u)) - Li_a(u) (1-u)/u ], u = t/Z
        double u = t / *Z_;
        if (u <= 0.0) return 1.0;
        double o = om ? *om : 1.0 - u;
        double li = (*li_)(u);
        double m_mu = s_ * c_ * zeta_a_;
        return (1.0 - m_mu) + s_ * c_ * (li_->deficit(u) - li * o / u);
      }
    }
    return 1.0;
  }

  // Smallest x > 0 with f_q(x) = 1 - 1/x (tangency allowed); caches Z and r.
  double admissibility_solve(double tol = 1e-12) const {
    if (Zcache_) return *Zcache_;
    if (is_zero()) {
      Zcache_ = 1.0;
      return 1.0;
    }
    if (Z_) {
      // generator families are admissible at the closed-form Z by construction;
      // validated here
      double g = gap(*Z_);
      if (std::abs(g) > 1e-8) fail(Errc::Tolerance, "generator admissibility identity failed");
      Zcache_ = *Z_;
      return *Z_;
    }
    // convex gap g(x) = f(x) - 1 + 1/x; locate minimizer via g' sign, then
    // bisect the decreasing branch for the smallest root.
    double lo = 1e-12;
    double hi = 1.0;
    const double cap = 1e12;
    while (gap_prime(hi) < 0.0 && gap(hi) > 0.0 && hi < cap) hi *= 2.0;
    if (hi >= cap && gap(hi) > tol) fail(Errc::NotAdmissible, "no admissibility solution up to 1e12");
    // minimizer bracket [lo0, hi]: g' < 0 at left; bisect g' when g(hi) > 0
    double xmin = hi;
    if (gap(hi) > 0.0) {
      double a = lo, b = hi;
      for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (a + b);
        (gap_prime(m) < 0.0 ? a : b) = m;
      }
      xmin = 0.5 * (a + b);
      double gm = gap(xmin);
      if (gm > tol) fail(Errc::NotAdmissible, "gap positive at its minimum");
      if (std::abs(gm) <= tol) {  // tangency: critical double root
        Zcache_ = xmin;
        return xmin;
      }
    }
    // sign change in [lo, xmin]
    double a = lo, b = xmin;
    if (gap(a) < 0.0) fail(Errc::Tolerance, "left bracket not positive");
    for (int i = 0; i < 200 && (b - a) > tol * std::max(1.0, b); ++i) {
      double m = 0.5 * (a + b);
      (gap(m) > 0.0 ? a : b) = m;
    }
    Zcache_ = 0.5 * (a + b);
    return *Zcache_;
  }

  double radius() const { return 1.0 / (4.0 * admissibility_solve()); }

  // ---- serialization (plain text key-value) ----
  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case WeightKind::Explicit: os << "kind = explicit\n"; break;
      case WeightKind::QStar: os << "kind = qstar\n"; break;
      case WeightKind::Stable: os << "kind = stable(" << alpha_ << ", " << s_ << ")\n"; break;
    }
    if (kind_ == WeightKind::Explicit) {
      os << "coeffs = [";
      for (std::size_t i = 0; i < coeffs_.size(); ++i) os << (i ? ", " : "") << coeffs_[i];
      os << "]\n";
    }
    os << "truncation = " << truncation() << "\n";
    return os.str();
  }

  static WeightSeq deserialize(const std::string& text);

 private:
  double gap(double x) const { return eval_f(x) - 1.0 + 1.0 / x; }
  double gap_prime(double x) const { return eval_f_prime(x) - 1.0 / (x * x); }

  double eval_f_prime_poly(double t) const { return eval_f_prime(t); }

  double derivative_at0() const {
    // f'(0) = 3 q_2 (k=2 term)
    return coeffs_.size() >= 2 ? 3.0 * coeffs_[1] : 0.0;
  }

  void check_domain(double x) const {
    if (!(x >= 0.0)) fail(Errc::BadConfig, "f_q argument must be >= 0");
    double R = f_radius();
    if (x > R * (1.0 + 1e-12)) fail(Errc::Divergent, "f_q series diverges beyond its radius");
  }

  static double log_guard(double x) { return x > 0.0 ? std::log(x) : -1e30; }

  WeightKind kind_ = WeightKind::Explicit;
  std::vector<double> coeffs_;
  int truncation_ = 0;
  // stable family parameters
  double alpha_ = 0.0, s_ = 0.0, c_ = 0.0, zeta_a_ = 0.0, zeta_a1_ = 0.0;
  std::shared_ptr<Polylog> li_;
  std::optional<double> Z_;          // closed-form Z for generators
  mutable std::optional<double> Zcache_;
};

// mu(0) = 1 - f_q(Z); mu(k) = Z^{k-1} C(2k-1,k-1) q_k.
inline OffspringLaw offspring_mu(const WeightSeq& q, double Z) {
  OffspringLaw mu;
  int N = std::max(q.truncation(), 1);
  mu.probs.assign((std::size_t)N + 1, 0.0);
  mu.probs[0] = 1.0 - q.eval_f(Z);
  if (std::abs(mu.probs[0] - 1.0 / Z) > 1e-10)
    fail(Errc::Tolerance, "mu(0) != 1/Z beyond tolerance");
  double logZ = std::log(Z);
  const auto& c = q.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    std::int64_t k = (std::int64_t)i + 1;
    mu.probs[k] = std::exp((k - 1) * logZ + log_binom_2km1(k) + std::log(c[i]));
  }
  // tail info from the generator kind
  if (q.kind() == WeightKind::QStar) {
    // mu(k) = (1/(2 sqrt pi)) Gamma(k-3/2)/Gamma(k+1) ~ k^{-5/2}/(2 sqrt pi)
    mu.tail = MuTail{1.5, 1.0 / (3.0 * std::sqrt(kPi)), true};
  } else if (q.kind() == WeightKind::Stable) {
    double alpha = q.stable_alpha();
    double sc = q.stable_s() / riemann_zeta(alpha + 1.0);
    mu.tail = MuTail{alpha, sc / alpha, true};
  }
  // mean and variance with tail completion
  Kahan m, v;
  for (std::size_t k = 1; k < mu.probs.size(); ++k) {
    m.add((double)k * mu.probs[k]);
    v.add((double)k * (double)k * mu.probs[k]);
  }
  double mean = m.sum, ex2 = v.sum;
  if (mu.tail) {
    // sum_{k>N} k mu(k) ~ c_mu (N+1/2)^{1-alpha}/(alpha-1), c_mu = alpha*ccdf_c
    double cmu = mu.tail->alpha * mu.tail->ccdf_c;
    double Nc = (double)N + 0.5;
    mean += cmu * std::pow(Nc, 1.0 - mu.tail->alpha) / (mu.tail->alpha - 1.0);
  }
  mu.mean = mean;
  if (mu.tail && mu.tail->alpha <= 2.0) {
    mu.variance_infinite = true;
  } else {
    mu.variance = ex2 - mean * mean;
  }
  return mu;
}

inline OffspringLaw offspring_mu(const WeightSeq& q) {
  return offspring_mu(q, q.admissibility_solve());
}

// Exact inverse of offspring_mu on laws with mu(0) > 0 and m_mu <= 1.
inline WeightSeq from_offspring(const OffspringLaw& mu) {
  Kahan tot;
  for (double p : mu.probs) tot.add(p);
  double tail_mass = 0.0;
  if (mu.tail) tail_mass = mu.tail->ccdf_c * std::pow((double)mu.probs.size() - 0.5, -mu.tail->alpha);
  if (std::abs(tot.sum + tail_mass - 1.0) > 1e-8) fail(Errc::NotALaw, "mu does not sum to 1");
  if (mu.mean > 1.0 + 1e-10) fail(Errc::Supercritical, "m_mu > 1");
  if (!(mu.probs.size() > 0) || !(mu.probs[0] > 0.0)) fail(Errc::NotALaw, "mu(0) must be positive");
  double Z = 1.0 / mu.probs[0];
  double logZ = std::log(Z);
  std::vector<double> q(mu.probs.size() - 1, 0.0);
  for (std::size_t k = 1; k < mu.probs.size(); ++k) {
    if (mu.probs[k] == 0.0) continue;
    q[k - 1] = std::exp(std::log(mu.probs[k]) + (1.0 - (double)k) * logZ - log_binom_2km1((std::int64_t)k));
  }
  return WeightSeq::explicit_seq(std::move(q));
}

// Tail-index fit of mu's ccdf by least squares on log-log scale over the last
// computed decade; returns fitted alpha or nullopt when no usable tail.
inline std::optional<double> fit_mu_tail_index(const OffspringLaw& mu) {
  std::size_t N = mu.probs.size() - 1;
  if (N < 64) return std::nullopt;
  std::vector<double> ccdf(N + 2, 0.0);
  for (std::size_t k = N + 1; k-- > 0;) ccdf[k] = ccdf[k + 1] + (k <= N ? mu.probs[k] : 0.0);
  std::size_t k0 = N / 10, k1 = N;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = k0; k <= k1; k += std::max<std::size_t>(1, (k1 - k0) / 200)) {
    if (ccdf[k] <= 0.0) continue;
    double x = std::log((double)k), y = std::log(ccdf[k]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 8) return std::nullopt;
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return -slope;
}

inline SeqType classify(const WeightSeq& q, const OffspringLaw& mu,
                        std::optional<std::pair<double, double>> declared_tail = std::nullopt,
                        double tol = 1e-9, double fit_tol = 0.15) {
  SeqType t;
  if (mu.mean < 1.0 - tol) {
    t.a = 1.5;
    t.regime = Regime::Subcritical;
    return t;
  }
  if (!mu.variance_infinite) {
    // critical with finite variance; detect indeterminate truncation
    if (!mu.tail && q.kind() == WeightKind::Explicit) {
      // finite explicit support: genuinely generic critical
      t.a = 2.5;
      t.regime = Regime::GenericCritical;
      return t;
    }
    t.a = 2.5;
    t.regime = Regime::GenericCritical;
    return t;
  }
  double alpha;
  if (declared_tail) {
    alpha = declared_tail->first;
    auto fitted = fit_mu_tail_index(mu);
    if (fitted && std::abs(*fitted - alpha) > fit_tol)
      fail(Errc::Inconsistent, "declared tail index disagrees with numeric fit");
  } else if (mu.tail) {
    alpha = mu.tail->alpha;
  } else {
    auto fitted = fit_mu_tail_index(mu);
    if (!fitted) fail(Errc::NearCritical, "tail index not estimable at truncation order");
    alpha = *fitted;
  }
  t.a = alpha + 0.5;
  t.regime = regime_of_a(t.a);
  return t;
}

inline SeqType classify(const WeightSeq& q) { return classify(q, offspring_mu(q)); }

// ---- plain text key-value parsing ----
inline WeightSeq WeightSeq::deserialize(const std::string& text) {
  std::string kind;
  std::vector<double> coeffs;
  int truncation = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "kind") {
      kind = val;
    } else if (key == "coeffs") {
      if (val.size() < 2 || val.front() != '[' || val.back() != ']')
        fail(Errc::BadConfig, "coeffs must be a [..] list");
      std::string body = val.substr(1, val.size() - 2);
      std::istringstream cs(body);
      std::string tok;
      while (std::getline(cs, tok, ',')) {
        if (trim(tok).empty()) continue;
        coeffs.push_back(std::stod(tok));
      }
    } else if (key == "truncation") {
      truncation = std::stoi(val);
    }
  }
  if (kind == "explicit" || kind.empty()) return WeightSeq::explicit_seq(std::move(coeffs));
  if (kind == "qstar") return WeightSeq::qstar(truncation > 0 ? truncation : 4096);
  if (kind.rfind("stable", 0) == 0) {
    auto lp = kind.find('(');
    auto rp = kind.find(')');
    if (lp == std::string::npos || rp == std::string::npos || rp < lp)
      fail(Errc::BadConfig, "stable kind needs (alpha[, s])");
    std::string args = kind.substr(lp + 1, rp - lp - 1);
    auto comma = args.find(',');
    double alpha = std::stod(args.substr(0, comma));
    std::optional<double> s;
    if (comma != std::string::npos) {
      std::string stail = args.substr(comma + 1);
      if (stail.find_first_not_of(" \t") != std::string::npos &&
          stail.find("crit") == std::string::npos)
        s = std::stod(stail);
    }
    return WeightSeq::stable(alpha, s, truncation > 0 ? truncation : 4096);
  }
  fail(Errc::BadConfig, "unknown weight kind: " + kind);
}

}  // namespace boltzmap
