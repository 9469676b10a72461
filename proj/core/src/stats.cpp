#include "codym/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "codym/error.hpp"

namespace codym {

double shannon_entropy_bits(std::span<const double> freqs) {
  double sum = 0.0;
  for (double f : freqs) {
    if (f < 0.0) throw ValidationError("shannon_entropy: negative frequency");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("shannon_entropy: frequencies sum to " + std::to_string(sum));
  double h = 0.0;
  for (double f : freqs)
    if (f > 0.0) h -= f * std::log2(f);
  return h;
}

double kolmogorov_tail(double lambda) {
  // The alternating series oscillates for tiny lambda; the tail there is 1
  // to far below double precision.
  if (lambda < 0.1) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * double(k) * double(k) * lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw ValidationError("ks_two_sample: empty sample");

  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const std::size_t n = a.size(), m = b.size();
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double v = std::min(a[i], b[j]);
    while (i < n && a[i] <= v) ++i;
    while (j < m && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / double(n) - double(j) / double(m)));
  }

  KsResult result;
  result.d_statistic = d;
  result.n = n;
  result.m = m;
  const double ne = double(n) * double(m) / double(n + m);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  result.p_value = kolmogorov_tail(lambda);
  return result;
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double mid = 0.5 * (double(i + 1) + double(j + 1));  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ValidationError("pearson: need two equal-length samples");
  const double n = double(xs.size());
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  (void)n;
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: constant input vector");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

// Regularized incomplete beta I_x(a, b) via the continued fraction
// (modified Lentz), the standard route to the t distribution tail.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 200;
  constexpr double kEps = 3e-14, kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw ValidationError("student_t_two_sided_p: df must be >= 1");
  if (!std::isfinite(t)) return 0.0;
  const double d = double(df);
  return betai(0.5 * d, 0.5, d / (d + t * t));
}

CorrResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("spearman: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw ValidationError("spearman: need n >= 3");

  const auto rx = midranks(xs);
  const auto ry = midranks(ys);

  CorrResult result;
  result.n = n;
  result.rho = pearson(rx, ry);  // throws on constant input

  // t approximation, df = n - 2.
  const double r2 = std::min(result.rho * result.rho, 1.0);
  if (r2 >= 1.0 - 1e-15) {
    result.p_tdist = 0.0;
  } else {
    const double t = result.rho * std::sqrt((double(n) - 2.0) / (1.0 - r2));
    result.p_tdist = student_t_two_sided_p(t, int(n) - 2);
  }

  if (n <= 8) {
    // Full enumeration: fraction of rank permutations at least as extreme.
    std::vector<double> perm = ry;
    std::sort(perm.begin(), perm.end());
    const double threshold = std::abs(result.rho) - 1e-12;
    std::size_t hits = 0, total = 0;
    do {
      ++total;
      if (std::abs(pearson(rx, perm)) >= threshold) ++hits;
    } while (std::next_permutation(perm.begin(), perm.end()));
    result.p_exact = double(hits) / double(total);
    result.p_value = result.p_exact;
    result.method = PValueMethod::ExactPermutation;
  } else {
    result.p_exact = -1.0;
    result.p_value = result.p_tdist;
    result.method = PValueMethod::TDistApprox;
  }
  return result;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double one_sided_z_p(double mu, double sigma, double mu0) {
  if (sigma <= 0.0) throw ValidationError("one_sided_z_p: sigma must be positive");
  return 1.0 - normal_cdf((mu - mu0) / sigma);
}

double percentile_linear(std::span<const double> sorted_values, double q) {
  if (sorted_values.empty()) throw ValidationError("percentile_linear: empty sample");
  if (q < 0.0 || q > 1.0) throw ValidationError("percentile_linear: q outside [0,1]");
  const std::size_t n = sorted_values.size();
  if (n == 1) return sorted_values[0];
  const double h = q * double(n - 1);
  const std::size_t lo = std::size_t(std::floor(h));
  if (lo + 1 >= n) return sorted_values[n - 1];
  const double frac = h - double(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

double mean_of(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean_of: empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) throw ValidationError("sample_stddev: need n >= 2");
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(values.size() - 1));
}

}  // namespace codym
