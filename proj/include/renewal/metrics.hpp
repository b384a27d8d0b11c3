#pragma once
// Ratio metrics over per-task series. Series are 0-indexed arrays where
// element j belongs to task j+1; task counts k and window starts k0 are
// 1-based to match reported task indices.

#include <cstdint>
#include <span>
#include <stdexcept>

namespace renewal {

// sum(R[1..k]) / sum(T[1..k]).
inline double cumulative_ratio(std::span<const double> reward, std::span<const double> duration,
                               std::int64_t k) {
  if (reward.size() != duration.size())
    throw std::invalid_argument("cumulative_ratio: series length mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > reward.size())
    throw std::invalid_argument("cumulative_ratio: k out of range");
  double num = 0.0, den = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    num += reward[static_cast<std::size_t>(j)];
    den += duration[static_cast<std::size_t>(j)];
  }
  if (!(den > 0.0)) throw std::invalid_argument("cumulative_ratio: nonpositive total duration");
  return num / den;
}

// Ratio over the w tasks before k0, i.e. tasks k0-w .. k0-1. Requires the
// window to be full: k0 > w.
inline double window_ratio(std::span<const double> reward, std::span<const double> duration,
                           std::int64_t k0, std::int64_t w) {
  if (reward.size() != duration.size())
    throw std::invalid_argument("window_ratio: series length mismatch");
  if (w < 1) throw std::invalid_argument("window_ratio: window must be positive");
  if (k0 <= w) throw std::invalid_argument("window_ratio: window not yet full at k0");
  if (static_cast<std::size_t>(k0 - 1) > reward.size())
    throw std::invalid_argument("window_ratio: k0 out of range");
  double num = 0.0, den = 0.0;
  for (std::int64_t j = k0 - w; j <= k0 - 1; ++j) {
    num += reward[static_cast<std::size_t>(j - 1)];
    den += duration[static_cast<std::size_t>(j - 1)];
  }
  if (!(den > 0.0)) throw std::invalid_argument("window_ratio: nonpositive window duration");
  return num / den;
}

// Average power through task k: cumulative energy over cumulative time,
// where per-task energy is Y + p_av*T (the penalty is energy re-centered by
// the power budget). With Y identically zero this is exactly p_av.
inline double power_ratio(std::span<const double> energy_penalty, std::span<const double> duration,
                          double p_av, std::int64_t k) {
  if (energy_penalty.size() != duration.size())
    throw std::invalid_argument("power_ratio: series length mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > energy_penalty.size())
    throw std::invalid_argument("power_ratio: k out of range");
  double energy = 0.0, time = 0.0;
  for (std::int64_t j = 0; j < k; ++j) {
    energy += energy_penalty[static_cast<std::size_t>(j)] + p_av * duration[static_cast<std::size_t>(j)];
    time += duration[static_cast<std::size_t>(j)];
  }
  if (!(time > 0.0)) throw std::invalid_argument("power_ratio: nonpositive total duration");
  return energy / time;
}

}  // namespace renewal
