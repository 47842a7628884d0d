#include "sdiq/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace sdiq {
namespace {

struct Binomial {
  double alpha;
  double hits;    // n_00 + n_11
  double trials;  // n_0 + n_1
};

double success(double eta, double alpha) { return 0.5 * (1.0 + std::erf(std::sqrt(eta) * alpha)); }

double log_likelihood(double eta, std::span<const Binomial> data) {
  double ll = 0;
  for (const auto& d : data) {
    const double q = std::clamp(success(eta, d.alpha), 1e-300, 1.0 - 1e-16);
    ll += d.hits * std::log(q) + (d.trials - d.hits) * std::log1p(-q);
  }
  return ll;
}

}  // namespace

EfficiencyFit fit_efficiency(std::span<const EfficiencySample> samples) {
  std::vector<Binomial> data;
  std::set<double> amplitudes;
  for (const auto& s : samples) {
    if (!(s.alpha_mag >= 0)) throw UsageError("fit_efficiency: amplitude must be non-negative");
    if (!s.table.n_x) throw UsageError("fit_efficiency: tables need sample sizes");
    s.table.validate();
    const auto& n = *s.table.n_x;
    data.push_back({s.alpha_mag, std::round(s.table.p_bx(0, 0) * n[0]) + std::round(s.table.p_bx(1, 1) * n[1]),
                    n[0] + n[1]});
    amplitudes.insert(s.alpha_mag);
  }
  if (amplitudes.size() < 2) throw UsageError("fit_efficiency: need at least two distinct amplitudes");

  // Only rounds at non-zero amplitude carry information on eta.
  double informative = 0;
  for (const auto& d : data)
    if (d.alpha > 0) informative += d.trials;
  if (informative == 0) throw FormatError("fit_efficiency: no counts at non-zero amplitude");

  // Golden-section search; the log-likelihood is unimodal in eta.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1e-9, hi = 1.0;
  double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
  double fa = log_likelihood(a, data), fb = log_likelihood(b, data);
  while (hi - lo > 1e-12) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = log_likelihood(b, data);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = log_likelihood(a, data);
    }
  }
  const double eta = 0.5 * (lo + hi);

  // Expected Fisher information, dq/deta = alpha e^{-eta alpha^2} / (2 sqrt(pi eta)).
  double info = 0;
  for (const auto& d : data) {
    if (d.alpha == 0) continue;
    const double q = success(eta, d.alpha);
    const double dq = d.alpha * std::exp(-eta * d.alpha * d.alpha) / (2.0 * std::sqrt(std::numbers::pi * eta));
    if (q > 0 && q < 1) info += d.trials * dq * dq / (q * (1.0 - q));
  }
  if (!(info > 0)) throw FormatError("fit_efficiency: counts carry no information on eta");
  return {eta, 1.0 / std::sqrt(info), log_likelihood(eta, data)};
}

ProbTable synthetic_table(double alpha_mag, double eta, std::uint64_t n_per_x, std::uint64_t seed) {
  if (!(eta > 0 && eta <= 1)) throw UsageError("synthetic_table: eta must lie in (0, 1]");
  if (n_per_x == 0) throw UsageError("synthetic_table: need at least one round per input");
  auto eng = make_engine(seed, Stream::synthetic);
  std::binomial_distribution<std::uint64_t> draw(n_per_x, success(eta, alpha_mag));
  const auto n = static_cast<double>(n_per_x);
  const double k0 = static_cast<double>(draw(eng)), k1 = static_cast<double>(draw(eng));
  Eigen::Matrix2d p;
  p << k0 / n, 1.0 - k1 / n, 1.0 - k0 / n, k1 / n;
  return ProbTable{p, std::array<double, 2>{n, n}};
}

}  // namespace sdiq
