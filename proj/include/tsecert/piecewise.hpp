#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tsecert/common.hpp"

namespace tsecert {

/// Piecewise-constant function over a closed interval, described by strictly
/// increasing breakpoints b_0 < ... < b_m and one value per interval
/// [b_i, b_{i+1}). The last interval is closed on the right. Exact cumulative
/// integrals are precomputed at the breakpoints.
class PiecewiseConstantFn {
 public:
  PiecewiseConstantFn() = default;

  PiecewiseConstantFn(std::vector<double> breakpoints, std::vector<double> values, std::string label = "piecewise")
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)), label_(std::move(label)) {
    if (breakpoints_.size() < 2)
      throw ConfigError(label_ + ": needs at least two breakpoints");
    if (values_.size() + 1 != breakpoints_.size())
      throw ConfigError(label_ + ": value count " + std::to_string(values_.size()) +
                        " does not match interval count " + std::to_string(breakpoints_.size() - 1));
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] < breakpoints_[i + 1]))
        throw ConfigError(label_ + ": breakpoints not strictly increasing at index " + std::to_string(i) +
                          " (" + format_g17(breakpoints_[i]) + " >= " + format_g17(breakpoints_[i + 1]) + ")");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
        throw ConfigError(label_ + ": value " + format_g17(values_[i]) + " on interval [" +
                          format_g17(breakpoints_[i]) + ", " + format_g17(breakpoints_[i + 1]) +
                          "] must be finite and >= 0");
    }
    cumulative_.resize(breakpoints_.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      cumulative_[i + 1] = cumulative_[i] + values_[i] * (breakpoints_[i + 1] - breakpoints_[i]);
  }

  double domain_begin() const { return breakpoints_.front(); }
  double domain_end() const { return breakpoints_.back(); }
  std::size_t piece_count() const { return values_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  const std::string& label() const { return label_; }

  double value_at(double s) const {
    return values_[piece_index(s)];
  }

  // Integral from domain_begin() to s, exact for the piecewise representation.
  double integral_to(double s) const {
    std::size_t i = piece_index(s);
    return cumulative_[i] + values_[i] * (s - breakpoints_[i]);
  }

  double total_integral() const { return cumulative_.back(); }

  // Piece i as (begin, end, value, integral up to begin).
  struct Piece {
    double begin, end, value, cumulative_at_begin;
  };
  Piece piece(std::size_t i) const {
    return {breakpoints_[i], breakpoints_[i + 1], values_[i], cumulative_[i]};
  }

 private:
  std::size_t piece_index(double s) const {
    if (s < breakpoints_.front() || s > breakpoints_.back())
      throw std::domain_error(label_ + ": coordinate " + format_g17(s) + " outside [" +
                              format_g17(breakpoints_.front()) + ", " + format_g17(breakpoints_.back()) + "]");
    // Last interval is closed on the right.
    if (s >= breakpoints_[breakpoints_.size() - 2]) return values_.size() - 1;
    std::size_t lo = 0, hi = breakpoints_.size() - 2;
    while (lo < hi) {
      std::size_t mid = (lo + hi + 1) / 2;
      if (breakpoints_[mid] <= s)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  std::vector<double> breakpoints_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
  std::string label_;
};

}  // namespace tsecert
