#include "glasslab/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glasslab {

namespace {

void check_index(double zeta) {
  if (!(zeta > 0.0) || !(zeta < 1.0)) {
    throw std::invalid_argument("stability index must lie in (0,1)");
  }
}

void check_tilt(double x, double a) {
  check_index(x);
  if (a < 0.0 || a >= x) {
    // a = x makes E U^a infinite; refuse rather than guess.
    throw std::invalid_argument("tilt exponent must satisfy 0 <= a < x");
  }
}

}  // namespace

DecreasingPointSequence sample_poisson_process(double zeta, int count, Rng& rng) {
  check_index(zeta);
  if (count < 1) throw std::invalid_argument("sample_poisson_process: count >= 1");
  DecreasingPointSequence out;
  out.zeta = zeta;
  out.points.resize(static_cast<std::size_t>(count));
  // Arrival times of a unit-rate process mapped through the inverse of the
  // intensity tail; partial sums are increasing, so the points come out
  // sorted without an explicit sort.
  double arrival = 0.0;
  double inv_zeta = 1.0 / zeta;
  for (int n = 0; n < count; ++n) {
    arrival += rng.next_exponential();
    out.points[static_cast<std::size_t>(n)] = std::exp(-inv_zeta * std::log(arrival));
  }
  return out;
}

double poisson_tail_mean(double zeta, double threshold) {
  check_index(zeta);
  if (threshold <= 0.0) return 0.0;
  return zeta / (1.0 - zeta) * std::pow(threshold, 1.0 - zeta);
}

double PDWeights::sum_squares() const {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return s;
}

namespace {

PDWeights normalize_points(const DecreasingPointSequence& seq, double x) {
  PDWeights out;
  out.x = x;
  out.a = 0.0;
  double kept = 0.0;
  for (double u : seq.points) kept += u;
  double tail = poisson_tail_mean(x, seq.points.back());
  double total = kept + tail;
  out.weights.resize(seq.points.size());
  for (std::size_t i = 0; i < seq.points.size(); ++i) out.weights[i] = seq.points[i] / total;
  out.truncation_mass = tail / total;
  return out;
}

}  // namespace

PDWeights sample_pd(double x, int count, Rng& rng) {
  check_index(x);
  if (count < 1) throw std::invalid_argument("sample_pd: count >= 1");
  return normalize_points(sample_poisson_process(x, count, rng), x);
}

std::vector<PDWeights> sample_pd_tilted_batch(double x, double a, int count, int draws,
                                              Rng& rng, const TiltOptions& opt,
                                              int per_batch) {
  check_tilt(x, a);
  if (count < 1 || draws < 1) throw std::invalid_argument("sample_pd_tilted: bad sizes");
  if (per_batch < 1) per_batch = 1;
  if (opt.batch < 2) throw std::invalid_argument("sample_pd_tilted: batch >= 2");

  std::vector<PDWeights> out;
  out.reserve(static_cast<std::size_t>(draws));
  std::vector<PDWeights> base(static_cast<std::size_t>(opt.batch));
  std::vector<double> logw(static_cast<std::size_t>(opt.batch));
  std::vector<double> cdf(static_cast<std::size_t>(opt.batch));

  while (static_cast<int>(out.size()) < draws) {
    // Importance batch: base law PD(x), weight U^a computed in log space.
    // Batches with degenerate weights are rejected and redrawn.
    double sum_w = 0.0, ess = 0.0;
    int attempts = 0;
    for (;;) {
      if (attempts++ > opt.max_batch_retries) {
        throw degenerate_weights_error(
            "sample_pd_tilted: effective sample size stayed below threshold");
      }
      for (int b = 0; b < opt.batch; ++b) {
        DecreasingPointSequence seq = sample_poisson_process(x, count, rng);
        double kept = 0.0;
        for (double u : seq.points) kept += u;
        double total = kept + poisson_tail_mean(x, seq.points.back());
        base[static_cast<std::size_t>(b)] = normalize_points(seq, x);
        logw[static_cast<std::size_t>(b)] = a * std::log(total);
      }
      double shift = *std::max_element(logw.begin(), logw.end());
      sum_w = 0.0;
      double sum_w2 = 0.0;
      for (int b = 0; b < opt.batch; ++b) {
        double w = std::exp(logw[static_cast<std::size_t>(b)] - shift);
        sum_w += w;
        sum_w2 += w * w;
        cdf[static_cast<std::size_t>(b)] = sum_w;
      }
      ess = sum_w * sum_w / sum_w2;
      if (ess >= opt.min_ess_ratio * opt.batch) break;
    }
    for (int k = 0; k < per_batch && static_cast<int>(out.size()) < draws; ++k) {
      double u = rng.next_unit_open() * sum_w;
      std::size_t idx = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (idx >= base.size()) idx = base.size() - 1;
      PDWeights pick = base[idx];
      pick.a = a;
      pick.ess = ess;
      out.push_back(std::move(pick));
    }
  }
  return out;
}

PDWeights sample_pd_tilted(double x, double a, int count, Rng& rng, const TiltOptions& opt) {
  return sample_pd_tilted_batch(x, a, count, 1, rng, opt, 1)[0];
}

Estimate stable_sum_moment(double x, double a, Rng& rng, int count, int draws) {
  check_tilt(x, a);
  if (a == 0.0) return {1.0, 0.0, static_cast<std::uint64_t>(draws)};
  Accumulator acc;
  for (int i = 0; i < draws; ++i) {
    DecreasingPointSequence seq = sample_poisson_process(x, count, rng);
    double total = 0.0;
    for (double u : seq.points) total += u;
    total += poisson_tail_mean(x, seq.points.back());
    acc.add(std::exp(a * std::log(total)));
  }
  return acc.estimate();
}

}  // namespace glasslab
