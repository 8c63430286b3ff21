#include "glasslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace glasslab {

void Accumulator::add(double x) {
  ++n_;
  double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void Accumulator::merge(const Accumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  double na = static_cast<double>(n_);
  double nb = static_cast<double>(other.n_);
  double d = other.mean_ - mean_;
  double nt = na + nb;
  mean_ += d * nb / nt;
  m2_ += other.m2_ + d * d * na * nb / nt;
  n_ += other.n_;
}

double Accumulator::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

double Accumulator::sd() const { return std::sqrt(variance()); }

double Accumulator::se() const {
  if (n_ == 0) return 0.0;
  return sd() / std::sqrt(static_cast<double>(n_));
}

void VectorAccumulator::reset(int dim) {
  dim_ = dim;
  n_ = 0;
  mean_.assign(static_cast<std::size_t>(dim), 0.0);
  cross_.assign(static_cast<std::size_t>(dim) * dim, 0.0);
}

void VectorAccumulator::add(const double* x) {
  ++n_;
  double inv_n = 1.0 / static_cast<double>(n_);
  std::vector<double> d(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) d[static_cast<std::size_t>(i)] = x[i] - mean_[static_cast<std::size_t>(i)];
  for (int i = 0; i < dim_; ++i) mean_[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)] * inv_n;
  double w = static_cast<double>(n_ - 1) * inv_n;
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) {
      cross_[static_cast<std::size_t>(i) * dim_ + j] +=
          w * d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
    }
  }
}

void VectorAccumulator::merge(const VectorAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  if (dim_ != other.dim_) throw std::invalid_argument("VectorAccumulator::merge: dim mismatch");
  double na = static_cast<double>(n_);
  double nb = static_cast<double>(other.n_);
  double nt = na + nb;
  std::vector<double> d(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i)
    d[static_cast<std::size_t>(i)] = other.mean_[static_cast<std::size_t>(i)] - mean_[static_cast<std::size_t>(i)];
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) {
      cross_[static_cast<std::size_t>(i) * dim_ + j] +=
          other.cross_[static_cast<std::size_t>(i) * dim_ + j] +
          d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)] * na * nb / nt;
    }
  }
  for (int i = 0; i < dim_; ++i) mean_[static_cast<std::size_t>(i)] += d[static_cast<std::size_t>(i)] * nb / nt;
  n_ += other.n_;
}

double VectorAccumulator::covariance(int i, int j) const {
  if (n_ < 2) return 0.0;
  if (i > j) std::swap(i, j);
  return cross_[static_cast<std::size_t>(i) * dim_ + j] / static_cast<double>(n_ - 1);
}

double VectorAccumulator::linear_se(const std::vector<double>& w) const {
  if (n_ < 2) return 0.0;
  double v = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      v += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * covariance(i, j);
    }
  }
  v = std::max(v, 0.0);
  return std::sqrt(v / static_cast<double>(n_));
}

double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_statistic_uniform(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
  std::sort(x.begin(), x.end());
  double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(x[i] - lo, hi - x[i]));
  }
  return d;
}

double kolmogorov_sf(double t) {
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::exp(-2.0 * k * k * t * t);
    if (k % 2 == 0) term = -term;
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

double ks_two_sample_pvalue(double stat, std::size_t n, std::size_t m) {
  double ne = static_cast<double>(n) * static_cast<double>(m) /
              static_cast<double>(n + m);
  double sq = std::sqrt(ne);
  return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * stat);
}

double ks_uniform_pvalue(double stat, std::size_t n) {
  double sq = std::sqrt(static_cast<double>(n));
  return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * stat);
}

namespace {

double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw std::invalid_argument("normal_quantile: p in (0,1) required");
  // Acklam's rational approximation, |relative error| < 1.15e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw std::invalid_argument("linear_fit: need matched samples of size >= 3");
  }
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  double sigma2 = rss / (n - 2.0);
  fit.slope_se = std::sqrt(sigma2 / sxx);
  return fit;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need matched samples of size >= 2");
  }
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CorrelationCI correlation_ci(const std::vector<double>& x, const std::vector<double>& y,
                             double level) {
  if (x.size() < 4) throw std::invalid_argument("correlation_ci: need size >= 4");
  CorrelationCI ci;
  ci.r = pearson_correlation(x, y);
  double z = 0.5 * std::log((1.0 + ci.r) / (1.0 - ci.r));
  double se = 1.0 / std::sqrt(static_cast<double>(x.size()) - 3.0);
  double q = normal_quantile(0.5 + level / 2.0);
  ci.lo = std::tanh(z - q * se);
  ci.hi = std::tanh(z + q * se);
  return ci;
}

namespace {

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void double_center(std::vector<double>& m, std::size_t n) {
  std::vector<double> row(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[i] += m[i * n + j];
    total += row[i];
    row[i] /= static_cast<double>(n);
  }
  total /= static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m[i * n + j] += total - row[i] - row[j];
    }
  }
}

}  // namespace

DistanceCorrelation::DistanceCorrelation(const std::vector<std::vector<double>>& x,
                                         const std::vector<std::vector<double>>& y) {
  if (x.size() != y.size() || x.size() < 8) {
    throw std::invalid_argument("DistanceCorrelation: need matched samples of size >= 8");
  }
  n_ = x.size();
  a_.assign(n_ * n_, 0.0);
  b_.assign(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      double dx = euclid(x[i], x[j]);
      double dy = euclid(y[i], y[j]);
      a_[i * n_ + j] = a_[j * n_ + i] = dx;
      b_[i * n_ + j] = b_[j * n_ + i] = dy;
    }
  }
  double_center(a_, n_);
  double_center(b_, n_);
  double n2 = static_cast<double>(n_) * static_cast<double>(n_);
  double dcov = 0.0;
  dvar_x_ = 0.0;
  dvar_y_ = 0.0;
  for (std::size_t k = 0; k < n_ * n_; ++k) {
    dcov += a_[k] * b_[k];
    dvar_x_ += a_[k] * a_[k];
    dvar_y_ += b_[k] * b_[k];
  }
  dcov /= n2;
  dvar_x_ /= n2;
  dvar_y_ /= n2;
  double denom = std::sqrt(dvar_x_ * dvar_y_);
  if (denom <= 1e-14) {
    degenerate_ = true;
    observed_ = 0.0;
  } else {
    observed_ = std::sqrt(std::max(0.0, dcov) / denom);
  }
}

double DistanceCorrelation::permuted(const std::vector<std::uint32_t>& perm) const {
  double dcov = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const double* arow = &a_[i * n_];
    const double* brow = &b_[static_cast<std::size_t>(perm[i]) * n_];
    for (std::size_t j = 0; j < n_; ++j) {
      dcov += arow[j] * brow[perm[j]];
    }
  }
  dcov /= static_cast<double>(n_) * static_cast<double>(n_);
  double denom = std::sqrt(dvar_x_ * dvar_y_);
  if (denom <= 1e-14) return 0.0;
  return std::sqrt(std::max(0.0, dcov) / denom);
}

double smoothed_permutation_pvalue(double observed, const std::vector<double>& permuted,
                                   Rng& rng) {
  std::size_t greater = 0, ties = 0;
  for (double t : permuted) {
    if (t > observed) ++greater;
    else if (t == observed) ++ties;
  }
  double u = rng.next_unit_open();
  return (static_cast<double>(greater) + u * (1.0 + static_cast<double>(ties))) /
         (static_cast<double>(permuted.size()) + 1.0);
}

}  // namespace glasslab
