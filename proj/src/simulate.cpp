#include "med/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "med/errors.hpp"
#include "med/noise.hpp"
#include "med/parallel.hpp"
#include "med/rng.hpp"

namespace med {

namespace {

// stream labels, one per independent consumer
constexpr std::uint64_t kGroupXTag = 0x73696d78ull;
constexpr std::uint64_t kGroupYTag = 0x73696d79ull;
constexpr std::uint64_t kSimDataTag = 0x73696d64ull;
constexpr std::uint64_t kSimTestTag = 0x73696d74ull;

double harmonic(double s1, double s2, double t) {
  const double a = 2.0 * std::numbers::pi * t;
  return s1 * (-std::cos(a)) + s2 * std::sin(a);
}

double arc(double s1, double s2, double t) {
  const double t2 = t * t;
  return s1 * t2 + s2 * std::sqrt(1.0 - t2 * t2);
}

struct Scores {
  double s1, s2;
};

// Consumption order per subject is fixed: scores, then the observation count,
// then all times (sorted afterwards), then one noise draw per observation.
template <class ScoreFn, class ShapeFn>
std::vector<SubjectRecord> gen_group(Rng& rng, std::size_t count, const char* prefix,
                                     const SimDesign& d, double sigma,
                                     ScoreFn&& draw_scores, ShapeFn&& shape) {
  std::vector<SubjectRecord> out(count);
  std::vector<double> times;
  for (std::size_t i = 0; i < count; ++i) {
    SubjectRecord& rec = out[i];
    rec.id = prefix + std::to_string(i + 1);
    const Scores sc = draw_scores(rng);
    if (d.dense_grid > 0) {
      const int k = d.dense_grid;
      times.resize(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) times[static_cast<std::size_t>(j)] = j / (k - 1.0);
    } else {
      const auto ni = static_cast<std::size_t>(
          rng.uniform_int(d.N_low, d.N_high));
      times.resize(ni);
      for (auto& t : times) t = rng.uniform();
      std::sort(times.begin(), times.end());
    }
    rec.obs.resize(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double t = times[j];
      double z = shape(sc.s1, sc.s2, t);
      if (sigma > 0.0) z += sigma * rng.normal();
      rec.obs[j] = {t, z};
    }
  }
  return out;
}

Scores normal_scores(Rng& rng) { return {rng.normal(), rng.normal()}; }

}  // namespace

SimFamily family_from_name(std::string_view name) {
  if (name == "example1") return SimFamily::example1;
  if (name == "example2") return SimFamily::example2;
  if (name == "gaussian_scale") return SimFamily::gaussian_scale;
  throw DataError("unknown design family: " + std::string(name));
}

std::string family_name(SimFamily f) {
  switch (f) {
    case SimFamily::example1: return "example1";
    case SimFamily::example2: return "example2";
    case SimFamily::gaussian_scale: return "gaussian_scale";
  }
  return "?";
}

void SimDesign::validate() const {
  if (n < 2 || m < 2) throw DataError("design needs n >= 2 and m >= 2");
  if (N_low < 1 || N_high < N_low)
    throw DataError("observation count range needs 1 <= N_low <= N_high");
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0))
    throw DataError("noise standard deviations must be >= 0");
  if (!(sigma_s >= 0.0) || !std::isfinite(mu_s))
    throw DataError("mixture parameters must be finite with sigma_s >= 0");
  if (dense_grid != 0 && dense_grid < 2)
    throw DataError("dense grid needs at least 2 points");
  if (family == SimFamily::example2 && enforce_equal_variance) {
    const double v = mu_s * mu_s + sigma_s * sigma_s;
    if (std::fabs(v - 1.0) > 1e-4)
      throw DataError("mixture score variance " + std::to_string(v) +
                      " is not 1 within 1e-4; relax enforce_equal_variance to allow it");
  }
  if (family == SimFamily::gaussian_scale && !(y_scale > 0.0))
    throw DataError("y_scale must be positive");
}

TwoSampleDataset generate(const SimDesign& d, std::uint64_t seed) {
  d.validate();
  // Each group draws from its own derived stream, so the X sample depends
  // only on (seed, n, N range, sigma1): every family shares it bit-for-bit.
  Rng rx(derive_seed(seed, kGroupXTag));
  Rng ry(derive_seed(seed, kGroupYTag));
  TwoSampleDataset ds;
  ds.x = gen_group(rx, d.n, "x", d, d.sigma1, normal_scores, harmonic);
  switch (d.family) {
    case SimFamily::example1:
      ds.y = gen_group(ry, d.m, "y", d, d.sigma2, normal_scores, harmonic);
      break;
    case SimFamily::example2: {
      auto mixture = [&d](Rng& rng) -> Scores {
        auto one = [&d](Rng& r) {
          const double sign = r.below(2) == 0 ? 1.0 : -1.0;
          return sign * d.mu_s + d.sigma_s * r.normal();
        };
        return {one(rng), one(rng)};
      };
      ds.y = gen_group(ry, d.m, "y", d, d.sigma2, mixture, arc);
      break;
    }
    case SimFamily::gaussian_scale: {
      auto scaled = [&d](Rng& rng) -> Scores {
        return {d.y_scale * rng.normal(), d.y_scale * rng.normal()};
      };
      ds.y = gen_group(ry, d.m, "y", d, d.sigma2, scaled, harmonic);
      break;
    }
  }
  return ds;
}

namespace {
TwoSampleDataset generate_checked(const SimDesign& d, SimFamily expect, std::uint64_t seed) {
  if (d.family != expect)
    throw DataError("design family is " + family_name(d.family) + ", expected " +
                    family_name(expect));
  return generate(d, seed);
}
}  // namespace

TwoSampleDataset gen_example1(const SimDesign& d, std::uint64_t seed) {
  return generate_checked(d, SimFamily::example1, seed);
}

TwoSampleDataset gen_example2(const SimDesign& d, std::uint64_t seed) {
  return generate_checked(d, SimFamily::example2, seed);
}

TwoSampleDataset gen_gaussian_scale(const SimDesign& d, std::uint64_t seed) {
  return generate_checked(d, SimFamily::gaussian_scale, seed);
}

namespace {

// P(X <= k) for X ~ Binomial(n, p), summed directly; n stays desk-scale here.
double binom_cdf(int k, int n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lgn = std::lgamma(n + 1.0);
  double s = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double lg = lgn - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                      i * std::log(p) + (n - i) * std::log1p(-p);
    s += std::exp(lg);
  }
  return std::min(1.0, s);
}

}  // namespace

Interval binomial_ci(int k, int n, double confidence) {
  if (n < 1 || k < 0 || k > n) throw DataError("binomial_ci needs 0 <= k <= n with n >= 1");
  if (!(confidence > 0.0) || !(confidence < 1.0))
    throw DataError("confidence must lie in (0,1)");
  const double tail = (1.0 - confidence) / 2.0;
  Interval ci{0.0, 1.0};
  if (k > 0) {
    // lower limit: the p with P(X >= k | p) == tail; the probability rises in p
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (1.0 - binom_cdf(k - 1, n, mid) < tail) lo = mid; else hi = mid;
    }
    ci.lo = 0.5 * (lo + hi);
  }
  if (k < n) {
    // upper limit: the p with P(X <= k | p) == tail; the probability falls in p
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (binom_cdf(k, n, mid) < tail) hi = mid; else lo = mid;
    }
    ci.hi = 0.5 * (lo + hi);
  }
  return ci;
}

RejectionSummary monte_carlo_rejection_rate(const SimDesign& d, const TestConfig& test,
                                            int reps, std::uint64_t seed) {
  d.validate();
  test.validate();
  if (reps < 1) throw DataError("replication count must be >= 1");

  const bool equal_errors = d.sigma1 == d.sigma2;
  RejectionSummary out;
  out.reps = reps;
  out.p_values.assign(static_cast<std::size_t>(reps), 0.0);
  parallel_for(static_cast<std::size_t>(reps), test.threads, [&](std::size_t r) {
    try {
      const TwoSampleDataset ds = generate(d, derive_seed(seed, kSimDataTag, r));
      TestConfig tc = test;
      tc.seed = derive_seed(seed, kSimTestTag, r);
      tc.threads = 1;
      tc.keep_permuted = false;
      out.p_values[r] = med_test_with_noise(ds, tc, equal_errors).p_value;
    } catch (const DataError& e) {
      throw DataError("replication " + std::to_string(r) + ": " + e.what());
    } catch (const std::exception& e) {
      throw NumericError("replication " + std::to_string(r) + ": " + e.what());
    }
  });

  int k = 0;
  for (double p : out.p_values)
    if (p <= test.alpha) ++k;
  out.rate = static_cast<double>(k) / static_cast<double>(reps);
  out.ci = binomial_ci(k, reps);
  return out;
}

}  // namespace med
