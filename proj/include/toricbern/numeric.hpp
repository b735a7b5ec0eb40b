#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace toricbern {

// Dimension never exceeds 3, so fixed-capacity Eigen storage avoids heap
// traffic in the quadrature and evaluation loops.
inline constexpr int kMaxDim = 3;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double v) noexcept {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// log(sum_i exp(args[i])), max-shifted. Returns -inf for an empty range or
/// when every argument is -inf.
inline double log_sum_exp(std::span<const double> args) {
  if (args.empty()) return -std::numeric_limits<double>::infinity();
  double top = *std::max_element(args.begin(), args.end());
  if (!std::isfinite(top)) return top;
  CompensatedSum sum;
  for (double a : args) sum += std::exp(a - top);
  return top + std::log(sum.value());
}

/// Streaming log-sum-exp accumulator; rescales when a larger term arrives.
class LogSumExp {
public:
  void add(double a) noexcept {
    if (a == -std::numeric_limits<double>::infinity()) return;
    if (a <= top_) {
      sum_ += std::exp(a - top_);
    } else {
      sum_ = sum_ * std::exp(top_ - a) + 1.0;
      top_ = a;
    }
  }
  double value() const noexcept {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return top_ + std::log(sum_);
  }

private:
  double top_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

/// x * log(x) with the convention 0 log 0 = 0.
inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

}  // namespace toricbern
