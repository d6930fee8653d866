#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace edl::stats
{

// Neumaier-compensated running sum. Summing n copies of x gives the same
// double as n * x, which keeps identities like EDL = 0 exact.
class Sum
{
public:
  Sum &operator+=(double x)
  {
    double const t = s_ + x;
    c_ += std::abs(s_) >= std::abs(x) ? (s_ - t) + x : (x - t) + s_;
    s_ = t;
    return *this;
  }
  double value() const { return s_ + c_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double sum(std::span<double const> xs)
{
  Sum s;
  for (double x : xs)
    s += x;
  return s.value();
}

inline double mean(std::span<double const> xs)
{
  if (xs.empty())
    return 0.0;
  return sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance (Welford).
inline double variance(std::span<double const> xs)
{
  if (xs.size() < 2)
    return 0.0;
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
  {
    double const d = xs[i] - m;
    m += d / static_cast<double>(i + 1);
    m2 += d * (xs[i] - m);
  }
  return m2 / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<double const> xs)
{
  if (xs.size() < 2)
    return 0.0;
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

inline double median(std::span<double const> xs)
{
  std::vector<double> v(xs.begin(), xs.end());
  if (v.empty())
    return 0.0;
  std::sort(v.begin(), v.end());
  auto const n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace edl::stats
