#ifndef NNEVP_CURVE_HPP
#define NNEVP_CURVE_HPP

#include <optional>
#include <string>
#include <vector>

namespace nnevp {

/// Axial stress-strain samples on a time grid.
struct Curve {
  std::vector<double> strain;
  std::vector<double> stress;  // MPa
  std::vector<double> time;    // s, end of each step
  std::vector<double> dt;      // s, length of the step ending at each sample
  std::vector<double> r;       // accumulated plastic strain (simulated curves only)
  std::vector<int> nr_iters;   // simulated curves only
  std::vector<bool> extrapolated;  // resampled curves only

  std::optional<double> grain_size_um;
  std::optional<double> strain_rate;
  std::string name;

  std::size_t size() const { return strain.size(); }
};

}  // namespace nnevp

#endif  // NNEVP_CURVE_HPP
