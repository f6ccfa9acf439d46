#pragma once

#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "advtext/article.hpp"
#include "advtext/errors.hpp"

namespace advtext {

inline constexpr double kDefaultDecisionThreshold = 0.5;

struct CurvePoint {
  std::size_t step = 0;
  double fraction = 0.0;
  double p_machine = 0.0;
  double p_human = 1.0;
  bool operator==(const CurvePoint&) const = default;
};

/// Classifier probabilities along one spectrum; steps strictly increase.
struct ConfidenceCurve {
  std::string spectrum_id;
  std::vector<CurvePoint> points;
  bool operator==(const ConfidenceCurve&) const = default;
};

inline Label label_at(double p_machine, double thr) {
  return p_machine >= thr ? Label::machine : Label::human;
}

/// Smallest step s such that every point from s onward is at or above
/// `thr`; nullopt if the final point is below it.
inline std::optional<std::size_t> flip_point(const ConfidenceCurve& curve,
                                             double thr = kDefaultDecisionThreshold) {
  const auto& pts = curve.points;
  std::size_t i = pts.size();
  while (i > 0 && pts[i - 1].p_machine >= thr) --i;
  if (i == pts.size()) return std::nullopt;
  return pts[i].step;
}

/// Undetected substitution percentage: flip step / N * 100, where N is the
/// spectrum length in units (defaults to the final step).
inline std::optional<double> usp(const ConfidenceCurve& curve,
                                 double thr = kDefaultDecisionThreshold,
                                 std::optional<std::size_t> units = std::nullopt) {
  const auto flip = flip_point(curve, thr);
  if (!flip) return std::nullopt;
  const std::size_t n = units ? *units : curve.points.back().step;
  if (n == 0) return 0.0;
  return static_cast<double>(*flip) / static_cast<double>(n) * 100.0;
}

/// Number of consecutive pairs whose thresholded labels differ.
inline std::size_t hesitation_count(const ConfidenceCurve& curve,
                                    double thr = kDefaultDecisionThreshold) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    if (label_at(curve.points[i - 1].p_machine, thr) != label_at(curve.points[i].p_machine, thr))
      ++n;
  return n;
}

/// Shortest round-trip decimal form; identical bytes on every run.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline constexpr std::string_view kCurveCsvHeader =
    "spectrum_id,step,fraction,p_machine,p_human,label";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace detail

/// Columns: spectrum_id, step, fraction, p_machine, p_human, label.
inline void write_curves_csv(std::ostream& out, const std::vector<ConfidenceCurve>& curves,
                             double thr = kDefaultDecisionThreshold) {
  out << kCurveCsvHeader << '\n';
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << detail::csv_field(c.spectrum_id) << ',' << p.step << ','
          << format_double(p.fraction) << ',' << format_double(p.p_machine) << ','
          << format_double(p.p_human) << ',' << to_string(label_at(p.p_machine, thr)) << '\n';
    }
  }
}

/// Inverse of write_curves_csv; rows of one spectrum must be contiguous.
inline std::vector<ConfidenceCurve> read_curves_csv(std::istream& in) {
  std::vector<ConfidenceCurve> curves;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line != kCurveCsvHeader) throw ParseError("curve CSV: unexpected header");
      continue;
    }
    if (trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6)
      throw ParseError("curve CSV line " + std::to_string(line_no) + ": expected 6 fields");
    CurvePoint p;
    try {
      p.step = std::stoul(f[1]);
      p.fraction = std::stod(f[2]);
      p.p_machine = std::stod(f[3]);
      p.p_human = std::stod(f[4]);
    } catch (const std::exception&) {
      throw ParseError("curve CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (curves.empty() || curves.back().spectrum_id != f[0]) curves.push_back({f[0], {}});
    auto& pts = curves.back().points;
    if (!pts.empty() && p.step <= pts.back().step)
      throw ParseError("curve CSV line " + std::to_string(line_no) +
                       ": steps must strictly increase within a spectrum");
    pts.push_back(p);
  }
  return curves;
}

}  // namespace advtext
