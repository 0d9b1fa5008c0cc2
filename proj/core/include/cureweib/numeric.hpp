#pragma once

#include <cmath>
#include <limits>

namespace cureweib {

inline constexpr double kDaysPerYear = 365.25;

// Probabilities fed into cross-entropy terms never leave this band.
inline constexpr double kThetaFloor = 1e-8;
inline constexpr double kThetaCeil = 1.0 - 1e-8;

inline double clip_probability(double p) noexcept {
  if (p < kThetaFloor) return kThetaFloor;
  if (p > kThetaCeil) return kThetaCeil;
  return p;
}

inline double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double log_sum_exp(double a, double b) noexcept {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

// Standard normal quantile and distribution function.
double normal_quantile(double p);
double normal_cdf(double x);

// Neumaier compensated summation; result depends only on the order of add().
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace cureweib
