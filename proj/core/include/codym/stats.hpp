#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace codym {

// Shannon entropy in bits of a distribution that sums to 1 (within 1e-9).
// Zero entries contribute nothing.
double shannon_entropy_bits(std::span<const double> freqs);

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

// Two-sample Kolmogorov-Smirnov. D is the exact sup-norm ECDF distance; the
// p-value uses the asymptotic Kolmogorov tail with the small-sample
// effective-size correction lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

// Kolmogorov tail Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2),
// clamped to [0, 1].
double kolmogorov_tail(double lambda);

enum class PValueMethod { ExactPermutation, TDistApprox };

struct CorrResult {
  double rho = 0.0;
  double p_value = 1.0;     // by `method`
  std::size_t n = 0;
  PValueMethod method = PValueMethod::TDistApprox;
  double p_exact = -1.0;    // full-enumeration p when n <= 8, else -1
  double p_tdist = 1.0;     // always available (0 at |rho| = 1)
};

// Spearman rank correlation with mid-ranks for ties. Two-sided p by exact
// permutation for n <= 8, t-approximation otherwise; both variants are kept
// on the result since they can disagree noticeably at small n.
CorrResult spearman(std::span<const double> xs, std::span<const double> ys);

// P(accuracy <= mu0 is true | observed mu, sigma) = 1 - Phi((mu-mu0)/sigma).
double one_sided_z_p(double mu, double sigma, double mu0);

double normal_cdf(double x);

// Two-sided tail of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, int df);

// Mid-rank vector (ties get the average of their rank positions, 1-based).
std::vector<double> midranks(std::span<const double> values);

double pearson(std::span<const double> xs, std::span<const double> ys);

// Quantile by linear interpolation on an ascending-sorted sample:
// h = q*(n-1), result = s[floor(h)] + frac(h) * (s[floor(h)+1] - s[floor(h)]).
double percentile_linear(std::span<const double> sorted_values, double q);

double mean_of(std::span<const double> values);
double sample_stddev(std::span<const double> values);

}  // namespace codym
