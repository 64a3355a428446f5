#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "boltzmap/common.hpp"
#include "boltzmap/numerics.hpp"
#include "boltzmap/rng.hpp"
#include "boltzmap/series.hpp"
#include "boltzmap/weights.hpp"

namespace boltzmap {

enum class TailKind { None, FiniteVariance, PowerLaw, BoundaryLog, BiasedBoundaryLog };

// Tail model over the law's index space j (value = offset + span*j):
// D(j) = P(index > j) for j >= matched_at, continuity-matched so that
// D(matched_at) equals the mass the head table does not carry.
struct TailModel {
  TailKind kind = TailKind::None;
  double theta = 0.0;            // PowerLaw exponent
  double sigma2 = 0.0;           // FiniteVariance: modeled variance (value units)
  std::int64_t matched_at = 0;
  double ccdf_at_match = 0.0;
  double theory_constant = 0.0;  // asymptotic CCDF constant in value space (cross-check)

  double ccdf(double j) const {
    switch (kind) {
      case TailKind::None:
      case TailKind::FiniteVariance:
        return 0.0;
      case TailKind::PowerLaw:
        return ccdf_at_match * std::pow(j / (double)matched_at, -theta);
      case TailKind::BoundaryLog: {
        double m = (double)matched_at;
        double lm = std::log(m), lj = std::log(j);
        return ccdf_at_match * (m * lm * lm) / (j * lj * lj);
      }
      case TailKind::BiasedBoundaryLog:
        return ccdf_at_match * std::log((double)matched_at) / std::log(j);
    }
    return 0.0;
  }

  // sum_{j > matched_at} D(j), used for tail-completed means
  double ccdf_sum() const {
    double J = (double)matched_at;
    switch (kind) {
      case TailKind::None:
      case TailKind::FiniteVariance:
        return 0.0;
      case TailKind::PowerLaw:
        if (theta <= 1.0) return std::numeric_limits<double>::infinity();
        return ccdf_at_match * std::pow(J, theta) * std::pow(J + 0.5, 1.0 - theta) /
               (theta - 1.0);
      case TailKind::BoundaryLog: {
        // int_{J+1/2}^inf c/(j log^2 j) dj = c / log(J+1/2)
        double lm = std::log(J);
        return ccdf_at_match * J * lm * lm / std::log(J + 0.5);
      }
      case TailKind::BiasedBoundaryLog:
        return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }
};

// Discrete law on {offset + span*j : j >= 0} with head table + tail model.
// Head table and tail CCDF define one law; samplers and pmf/ccdf queries all
// derive from it, so exactness claims are shared.
struct DiscreteLaw {
  int span = 1;
  int offset = 0;
  std::vector<double> p;  // head pmf by index, j = 0..matched_at
  TailModel tail;

  std::int64_t head_size() const { return (std::int64_t)p.size(); }
  double value_of(std::int64_t j) const { return (double)offset + (double)span * (double)j; }

  double pmf_index(std::int64_t j) const {
    if (j < (std::int64_t)p.size()) return p[(std::size_t)j];
    return tail.ccdf((double)j - 1.0) - tail.ccdf((double)j);
  }

  // P(index >= j0)
  double ccdf_index(std::int64_t j0) const {
    if (j0 <= 0) return 1.0;
    std::int64_t J = head_size() - 1;
    if (j0 <= J) {
      Kahan acc;
      for (std::int64_t j = j0; j <= J; ++j) acc.add(p[(std::size_t)j]);
      return acc.sum + tail.ccdf_at_match;
    }
    return tail.ccdf((double)j0 - 1.0);
  }

  // P(value >= v)
  double ccdf_value(double v) const {
    double jreal = (v - (double)offset) / (double)span;
    std::int64_t j0 = (std::int64_t)std::ceil(jreal - 1e-12);
    return ccdf_index(j0);
  }

  double head_mass() const {
    Kahan k;
    for (double x : p) k.add(x);
    return k.sum;
  }

  double total_mass() const { return head_mass() + tail.ccdf_at_match; }

  // mean in value units, tail-completed via Abel summation:
  // sum_{j>J} j pmf(j) = (J+1) D(J) + sum_{j>J} D(j)
  double mean_value() const {
    Kahan m;
    for (std::size_t j = 0; j < p.size(); ++j) m.add(value_of((std::int64_t)j) * p[j]);
    double DJ = tail.ccdf_at_match;
    if (tail.kind == TailKind::PowerLaw || tail.kind == TailKind::BoundaryLog ||
        tail.kind == TailKind::BiasedBoundaryLog) {
      double s = tail.ccdf_sum();
      if (std::isinf(s)) return std::numeric_limits<double>::infinity();
      double J = (double)tail.matched_at;
      m.add((double)span * ((J + 1.0) * DJ + s) + (double)offset * DJ);
    }
    return m.sum;
  }

  // second moment in value units (finite-variance heads; tail must decay fast)
  double second_moment_head() const {
    Kahan m;
    for (std::size_t j = 0; j < p.size(); ++j) {
      double v = value_of((std::int64_t)j);
      m.add(v * v * p[j]);
    }
    return m.sum;
  }
};

// Size-biased law rho_bar(v) = v rho(v) / m.
inline DiscreteLaw size_bias(const DiscreteLaw& law) {
  double m = law.mean_value();
  if (!(m > 0.0)) fail(Errc::ZeroMean, "size bias needs positive mean");
  if (std::isinf(m)) fail(Errc::ZeroMean, "size bias needs finite mean");
  DiscreteLaw out;
  out.span = law.span;
  out.offset = law.offset;
  out.p.resize(law.p.size());
  for (std::size_t j = 0; j < law.p.size(); ++j)
    out.p[j] = law.value_of((std::int64_t)j) * law.p[j] / m;
  out.tail = law.tail;
  switch (law.tail.kind) {
    case TailKind::PowerLaw:
      out.tail.theta = law.tail.theta - 1.0;
      out.tail.ccdf_at_match = std::max(0.0, 1.0 - out.head_mass());
      if (out.tail.ccdf_at_match < 1e-14) out.tail.kind = TailKind::None;
      break;
    case TailKind::BoundaryLog:
      out.tail.kind = TailKind::BiasedBoundaryLog;
      out.tail.ccdf_at_match = std::max(0.0, 1.0 - out.head_mass());
      break;
    case TailKind::BiasedBoundaryLog:
      fail(Errc::ZeroMean, "size bias of an infinite-mean law");
    case TailKind::None:
    case TailKind::FiniteVariance: {
      double hm = out.head_mass();
      for (auto& x : out.p) x /= hm;
      out.tail.ccdf_at_match = 0.0;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alias-method sampler over the head with an inverse-CCDF tail branch.
// Stateless apart from the caller-owned RNG stream.
// ---------------------------------------------------------------------------
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const DiscreteLaw& law) : law_(law) {
    double tail_mass = law.tail.ccdf_at_match;
    if (tail_mass < 0.0) fail(Errc::BadMatch, "negative tail mass");
    std::vector<double> probs(law.p);
    probs.push_back(tail_mass);
    double tot = 0.0;
    for (double x : probs) tot += x;
    if (std::abs(tot - 1.0) > 1e-6) fail(Errc::MassDeficit, "law mass != 1 in sampler build");
    for (auto& x : probs) x /= tot;
    build_alias(probs);
  }

  std::int64_t sample_value(CounterRng& rng) const {
    return law_.offset + (std::int64_t)law_.span * sample_index(rng);
  }

  std::int64_t sample_index(CounterRng& rng) const {
    std::size_t n = prob_.size();
    std::size_t i = (std::size_t)rng.next_below(n);
    double u = rng.next_double();
    std::size_t cell = (u < prob_[i]) ? i : alias_[i];
    if (cell + 1 < n) return (std::int64_t)cell;
    return sample_tail(rng);
  }

  const DiscreteLaw& law() const { return law_; }

 private:
  void build_alias(const std::vector<double>& probs) {
    std::size_t n = probs.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<std::size_t> small, large;
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = probs[i] * (double)n;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      std::size_t s = small.back(), l = large.back();
      small.pop_back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= (1.0 - scaled[s]);
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::int64_t sample_tail(CounterRng& rng) const {
    const TailModel& t = law_.tail;
    std::int64_t J = t.matched_at;
    double R = t.ccdf_at_match;
    if (R <= 0.0 || t.kind == TailKind::None || t.kind == TailKind::FiniteVariance)
      return (std::int64_t)law_.p.size() - 1;
    double u = rng.next_double() * R;
    if (u <= 0.0) u = R;
    if (t.kind == TailKind::PowerLaw) {
      double g = (double)J * std::pow(R / u, 1.0 / t.theta);
      std::int64_t j = (std::int64_t)std::floor(g) + 1;
      return j > J ? j : J + 1;
    }
    // monotone CCDF: binary search
    std::int64_t lo = J, hi = J + 2;
    while (t.ccdf((double)hi) > u && hi < (std::int64_t)1 << 62) hi *= 2;
    while (hi - lo > 1) {
      std::int64_t mid = lo + (hi - lo) / 2;
      (t.ccdf((double)mid) > u ? lo : hi) = mid;
    }
    return hi;
  }

  DiscreteLaw law_;
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// ---------------------------------------------------------------------------
// Boundary offspring laws of the tree of components:
//   nu_white(k)    = (1/Fr)(1-1/Fr)^k           (geometric)
//   nu_black(2k+1) = psi_{k+1}/(Fr-1)           (odd support)
//   nu(2k)         = psi_k/Fr                   (Phi_JS image; even support)
// with psi_k = Fhat_k rhat^k the normalized simple-boundary coefficients.
// ---------------------------------------------------------------------------
struct BoundaryLaws {
  double Fr = 0.0;
  double nu_white_p = 0.0;  // geometric ratio 1 - 1/Fr
  DiscreteLaw nu;           // even values
  DiscreteLaw nu_black;     // odd values
  DiscreteLaw nu_white;     // Z_+
  double m_nu = 0.0;        // Eq. (MeanNu) closed form
  double m_nu_white = 0.0;
  double m_nu_black = 0.0;
  std::optional<double> sigma2_nu, sigma2_nu_black;  // finite only for a = 3/2
  SeqType type;
};

// m_nu = 1/(1 + Fr/(2 r F'(r))); equals 1 when F'(r) is infinite (a <= 2).
inline double mean_nu(double Fr, double r, const RadiusValues& rv) {
  if (rv.fprime_infinite) return 1.0;
  return 1.0 / (1.0 + Fr / (2.0 * r * rv.Fprime_r));
}

inline BoundaryLaws boundary_laws(const NormSeries& F, const NormSeries& Fhat,
                                  const SeqType& type, double Z, double m_mu,
                                  const RadiusValues& rv, double mass_tol = 1e-4) {
  BoundaryLaws bl;
  bl.type = type;
  bl.Fr = std::sqrt(Fhat.radius / F.radius);
  double Fr = bl.Fr;
  bl.nu_white_p = 1.0 - 1.0 / Fr;
  int N = Fhat.order();

  auto make_tail = [&](double head_mass, std::int64_t J, double mean_ratio) {
    TailModel t;
    t.matched_at = J;
    t.ccdf_at_match = std::max(0.0, 1.0 - head_mass);
    switch (type.regime) {
      case Regime::Subcritical: {
        t.kind = TailKind::FiniteVariance;
        double s2 = Fr / (Z * (1.0 - m_mu));
        t.sigma2 = s2 * s2;
        if (std::abs(1.0 - head_mass) > mass_tol)
          fail(Errc::MassDeficit, "subcritical head mass deficit");
        t.ccdf_at_match = 0.0;
        break;
      }
      case Regime::Dense:
        t.kind = TailKind::PowerLaw;
        t.theta = 1.0 / (type.a - 1.0);
        t.theory_constant = mean_ratio * std::pow(2.0, t.theta) /
                            std::abs(std::tgamma((type.a - 2.0) / (type.a - 1.0)));
        break;
      case Regime::BoundaryA2:
        t.kind = TailKind::BoundaryLog;
        t.theory_constant = mean_ratio;  // Prop. SpecialCaseA2: 1 for nu, 3 for nu_black
        break;
      case Regime::Dilute:
      case Regime::GenericCritical:
        t.kind = TailKind::PowerLaw;
        t.theta = type.a - 1.0;
        t.theory_constant =
            mean_ratio * std::pow(2.0, type.a - 1.0) / std::abs(std::tgamma(2.0 - type.a));
        break;
    }
    return t;
  };

  bl.nu.span = 2;
  bl.nu.offset = 0;
  bl.nu.p.resize((std::size_t)N + 1);
  for (int k = 0; k <= N; ++k) bl.nu.p[(std::size_t)k] = Fhat.c[k] / Fr;
  bl.nu.tail = make_tail(bl.nu.head_mass(), N, 1.0);

  bl.nu_black.span = 2;
  bl.nu_black.offset = 1;
  bl.nu_black.p.resize((std::size_t)N);
  for (int k = 0; k < N; ++k) bl.nu_black.p[(std::size_t)k] = Fhat.c[k + 1] / (Fr - 1.0);
  bl.nu_black.tail = make_tail(bl.nu_black.head_mass(), N - 1, Fr / (Fr - 1.0));

  {
    bl.nu_white.span = 1;
    bl.nu_white.offset = 0;
    double q = bl.nu_white_p;
    std::size_t J = 64;
    while (std::pow(q, (double)J) > 1e-250 && J < (std::size_t)1 << 22) J *= 2;
    bl.nu_white.p.resize(J);
    double pj = 1.0 / Fr;
    for (std::size_t j = 0; j < J; ++j) {
      bl.nu_white.p[j] = pj;
      pj *= q;
    }
    bl.nu_white.tail.kind = TailKind::None;
    bl.nu_white.tail.matched_at = (std::int64_t)J - 1;
  }

  double def_nu = std::abs(bl.nu.total_mass() - 1.0);
  double def_nub = std::abs(bl.nu_black.total_mass() - 1.0);
  if (def_nu > mass_tol || def_nub > mass_tol)
    fail(Errc::MassDeficit, "nu mass deficit " + std::to_string(std::max(def_nu, def_nub)));

  bl.m_nu = mean_nu(Fr, F.radius, rv);
  bl.m_nu_white = Fr - 1.0;
  // Prop. LawJSTransform: m_nu - p = (1-p) m_white m_black, p = 1 - 1/Fr
  bl.m_nu_black = (bl.m_nu - bl.nu_white_p) / ((1.0 - bl.nu_white_p) * bl.m_nu_white);
  if (type.regime == Regime::Subcritical) {
    double s2 = Fr / (Z * (1.0 - m_mu));
    bl.sigma2_nu = s2 * s2;
    bl.sigma2_nu_black = (Fr / (Fr - 1.0)) * (s2 * s2 - 1.0);
  }
  return bl;
}

// Full law pipeline for a weight sequence (convenience for tools/tests).
struct LawPipeline {
  WeightSeq q;
  double Z = 0.0, r = 0.0;
  OffspringLaw mu;
  SeqType type;
  NormSeries F, Fhat;
  RadiusValues rv;
  BoundaryLaws laws;
};

inline LawPipeline build_laws(const WeightSeq& q, int order, const QuadConfig& cfg = {},
                              std::optional<std::pair<double, double>> declared_tail = std::nullopt) {
  LawPipeline p;
  p.q = q;
  p.Z = q.admissibility_solve();
  p.r = 1.0 / (4.0 * p.Z);
  p.mu = offspring_mu(q, p.Z);
  p.type = classify(q, p.mu, declared_tail);
  p.F = partition_series(q, p.Z, order, cfg);
  DiskFunction disk(q, cfg);
  p.Fhat = fhat_series(disk, order, cfg);
  if (p.type.regime == Regime::BoundaryA2) {
    // dedicated a=2 path: tail constant from the coefficient fit, F(r) from quadrature
    p.rv.Fr = disk.Fr();
    p.rv.fprime_infinite = true;
  } else {
    double c_a = leading_c_a(p.Z, p.mu, p.type);
    p.rv = f_at_radius(p.F, p.type, c_a);
  }
  p.laws = boundary_laws(p.F, p.Fhat, p.type, p.Z, p.mu.mean, p.rv);
  return p;
}

}  // namespace boltzmap
