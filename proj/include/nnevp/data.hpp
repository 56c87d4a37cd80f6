#ifndef NNEVP_DATA_HPP
#define NNEVP_DATA_HPP

/**
 * @file data.hpp
 *
 * Stress-strain curve files, monotone cubic Hermite interpolation and
 * resampling onto a loading program's strain grid.
 *
 * Curve files are comma separated with a header naming at least the columns
 * strain and stress_mpa. Lines of the form "# key: value" carry metadata;
 * other lines starting with '#' and blank lines are ignored.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nnevp/curve.hpp"
#include "nnevp/solver.hpp"

namespace nnevp {

class CurveFormatError : public std::runtime_error {
 public:
  CurveFormatError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawCurve {
  std::vector<double> strain;
  std::vector<double> stress;  // MPa
  std::string material;
  std::optional<double> grain_size_um;
  std::optional<double> strain_rate;  // 1/s
  std::map<std::string, std::string> metadata;  // every "# key: value" line

  std::size_t size() const { return strain.size(); }
};

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/**
 * Parses curve text. Rows are sorted by strain and rows sharing a strain are
 * averaged. source names the input in error messages.
 */
inline RawCurve parse_curve_text(const std::string& text, const std::string& source = "<text>") {
  RawCurve raw;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int col_strain = -1, col_stress = -1;
  std::size_t columns = 0;
  std::vector<std::pair<double, double>> rows;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string_view body = detail::trim(t.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      const std::string key(detail::trim(body.substr(0, colon)));
      const std::string value(detail::trim(body.substr(colon + 1)));
      if (key.empty()) continue;
      raw.metadata[key] = value;
      if (key == "material") {
        raw.material = value;
      } else if (key == "grain_size_um" || key == "strain_rate") {
        const auto v = detail::parse_number(value);
        if (!v || !(*v > 0.0)) throw CurveFormatError(source, lineno, key + " must be a positive number");
        (key == "grain_size_um" ? raw.grain_size_um : raw.strain_rate) = *v;
      }
      continue;
    }
    const auto cells = detail::split_commas(t);
    if (col_strain < 0) {
      // Header line, or a headerless two-column file.
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "strain") col_strain = static_cast<int>(i);
        if (cells[i] == "stress_mpa") col_stress = static_cast<int>(i);
      }
      if (col_strain >= 0 && col_stress >= 0) {
        columns = cells.size();
        continue;
      }
      if (col_strain >= 0 || col_stress >= 0 || !detail::parse_number(cells[0]))
        throw CurveFormatError(source, lineno, "header must name the columns strain and stress_mpa");
      col_strain = 0;
      col_stress = 1;
      columns = 2;
    }
    if (cells.size() != columns)
      throw CurveFormatError(source, lineno,
                             "expected " + std::to_string(columns) + " fields, found " + std::to_string(cells.size()));
    const auto e = detail::parse_number(cells[static_cast<std::size_t>(col_strain)]);
    const auto s = detail::parse_number(cells[static_cast<std::size_t>(col_stress)]);
    if (!e || !s) throw CurveFormatError(source, lineno, "malformed number in '" + std::string(t) + "'");
    rows.emplace_back(*e, *s);
  }

  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < rows.size() && rows[j].first == rows[i].first) sum += rows[j++].second;
    raw.strain.push_back(rows[i].first);
    raw.stress.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  if (raw.size() < 4)
    throw InsufficientData(source + ": " + std::to_string(raw.size()) +
                           " distinct strain points; at least 4 are needed for cubic interpolation");
  return raw;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline RawCurve parse_curve_csv(const std::filesystem::path& path) {
  return parse_curve_text(read_text_file(path), path.string());
}

/// strain,stress_mpa file with the curve's metadata as comment lines.
inline std::string raw_curve_csv(const RawCurve& raw) {
  std::string out;
  for (const auto& [k, v] : raw.metadata) out += "# " + k + ": " + v + "\n";
  out += "strain,stress_mpa\n";
  for (std::size_t i = 0; i < raw.size(); ++i)
    out += format_double(raw.strain[i]) + "," + format_double(raw.stress[i]) + "\n";
  return out;
}

/// Metadata comment lines for a simulated or resampled curve.
inline std::string curve_metadata(const Curve& c) {
  std::string out;
  if (!c.name.empty()) out += "# name: " + c.name + "\n";
  if (c.grain_size_um) out += "# grain_size_um: " + format_double(*c.grain_size_um) + "\n";
  if (c.strain_rate) out += "# strain_rate: " + format_double(*c.strain_rate) + "\n";
  return out;
}

/// strain,stress_mpa,time_s,r,nr_iters; r and nr_iters are 0 when absent.
inline std::string curve_csv(const Curve& c, bool with_metadata = true) {
  std::string out = with_metadata ? curve_metadata(c) : std::string();
  out += "strain,stress_mpa,time_s,r,nr_iters\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out += format_double(c.strain[i]) + "," + format_double(c.stress[i]) + ",";
    out += (i < c.time.size() ? format_double(c.time[i]) : std::string("0")) + ",";
    out += (i < c.r.size() ? format_double(c.r[i]) : std::string("0")) + ",";
    out += (i < c.nr_iters.size() ? std::to_string(c.nr_iters[i]) : std::string("0")) + "\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/**
 * Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson slopes with
 * the three-point one-sided end formula).
 */
class Interpolant {
 public:
  Interpolant() = default;
  Interpolant(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size()) throw std::invalid_argument("interpolant needs equal-length x and y");
    if (x_.size() < 2) throw InsufficientData("interpolant needs at least 2 points");
    for (std::size_t i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("interpolant breakpoints must be strictly increasing");
    build_slopes();
  }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& slopes() const { return d_; }

  /// Value at t; outside the data range a linear continuation with the
  /// boundary slope, reported through extrapolated.
  double operator()(double t, bool* extrapolated = nullptr) const {
    const std::size_t n = x_.size();
    if (extrapolated) *extrapolated = false;
    if (t < x_.front() || t > x_.back()) {
      if (extrapolated) *extrapolated = true;
      return t < x_.front() ? y_.front() + d_.front() * (t - x_.front()) : y_.back() + d_.back() * (t - x_.back());
    }
    std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
    if (k >= n) return y_.back();
    k = k == 0 ? 0 : k - 1;
    const double h = x_[k + 1] - x_[k];
    const double s = (t - x_[k]) / h;
    if (s == 0.0) return y_[k];
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y_[k] + h10 * h * d_[k] + h01 * y_[k + 1] + h11 * h * d_[k + 1];
  }

 private:
  void build_slopes() {
    const std::size_t n = x_.size();
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) {
        d_[k] = 0.0;
      } else {
        // weighted harmonic mean
        const double w1 = 2 * h[k] + h[k - 1], w2 = h[k] + 2 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  static double end_slope(double h0, double h1, double m0, double m1) {
    double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (d * m0 <= 0.0) {
      d = 0.0;
    } else if (m0 * m1 <= 0.0 && std::fabs(d) > std::fabs(3 * m0)) {
      d = 3 * m0;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

inline Interpolant fit_interpolant(const RawCurve& raw) {
  if (raw.size() < 4) throw InsufficientData("at least 4 points are needed for cubic interpolation");
  return Interpolant(raw.strain, raw.stress);
}

/// Samples the interpolant at the given strains.
inline Curve resample_to_grid(const Interpolant& f, const std::vector<double>& strains) {
  Curve c;
  c.strain = strains;
  c.stress.resize(strains.size());
  c.extrapolated.resize(strains.size());
  for (std::size_t i = 0; i < strains.size(); ++i) {
    bool ex = false;
    c.stress[i] = f(strains[i], &ex);
    c.extrapolated[i] = ex;
  }
  return c;
}

/// Samples on the loading program's grid and fills the time columns.
inline Curve resample_to_grid(const Interpolant& f, const LoadingProgram& prog) {
  Curve c = resample_to_grid(f, prog.strain_grid());
  c.dt = prog.time_steps();
  double t = 0.0;
  for (double dt : c.dt) c.time.push_back(t += dt);
  c.strain_rate = prog.strain_rate;
  return c;
}

}  // namespace nnevp

#endif  // NNEVP_DATA_HPP
