#include "hetcons/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>

namespace hetcons::output {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kMargin = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool full_state) {
  const int n = static_cast<int>(traj.agents.size());
  const bool observer = n > 0 && !traj.agents.front().observer_error.empty();
  const bool modes = !traj.modes.empty();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",y" << i;
  if (observer) {
    for (int i = 1; i <= n; ++i) out << ",e" << i;
  }
  if (modes) out << ",mode";
  if (full_state) {
    for (int i = 1; i <= n; ++i) {
      const AgentSeries& a = traj.agents[i - 1];
      for (int c = 1; c <= a.xi_hat.cols(); ++c) out << ",xi_hat" << i << "_" << c;
      for (int c = 1; c <= a.eta.cols(); ++c) out << ",eta" << i << "_" << c;
      out << ",u" << i;
    }
  }
  out << "\n";
  std::string row;
  for (int k = 0; k < traj.samples(); ++k) {
    row = format_double(traj.times[k]);
    for (const AgentSeries& a : traj.agents) row += "," + format_double(a.y[k]);
    if (observer) {
      for (const AgentSeries& a : traj.agents) row += "," + format_double(a.observer_error[k]);
    }
    if (modes) row += "," + std::to_string(traj.modes[k] + 1);
    if (full_state) {
      for (const AgentSeries& a : traj.agents) {
        for (int c = 0; c < a.xi_hat.cols(); ++c) row += "," + format_double(a.xi_hat(k, c));
        for (int c = 0; c < a.eta.cols(); ++c) row += "," + format_double(a.eta(k, c));
        row += "," + format_double(a.u[k]);
      }
    }
    out << row << "\n";
  }
}

void write_montecarlo_csv(std::ostream& out, const MonteCarloResult& mc) {
  out << "t,mean_square\n";
  for (std::size_t k = 0; k < mc.times.size(); ++k) {
    out << format_double(mc.times[k]) << "," << format_double(mc.mean_square[k]) << "\n";
  }
}

void write_svg(std::ostream& out, const std::vector<double>& times,
               const std::vector<std::vector<double>>& series, const std::string& title) {
  double t0 = times.empty() ? 0.0 : times.front();
  double t1 = times.empty() ? 1.0 : times.back();
  if (!(t1 > t0)) t1 = t0 + 1.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi >= lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pw = kWidth - 2.0 * kMargin;
  const double ph = kHeight - 2.0 * kMargin;
  const auto px = [&](double t) { return kMargin + (t - t0) / (t1 - t0) * pw; };
  const auto py = [&](double v) { return kHeight - kMargin - (v - lo) / (hi - lo) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  out << "<text x=\"400\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << title << "</text>\n";
  out << "<rect x=\"" << coord(kMargin) << "\" y=\"" << coord(kMargin) << "\" width=\""
      << coord(pw) << "\" height=\"" << coord(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = t0 + (t1 - t0) * k / 4.0;
    const double v = lo + (hi - lo) * k / 4.0;
    out << "<text x=\"" << coord(px(t)) << "\" y=\"" << coord(kHeight - kMargin + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << short_number(t) << "</text>\n";
    out << "<text x=\"" << coord(kMargin - 6) << "\" y=\"" << coord(py(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << short_number(v) << "</text>\n";
  }
  // At most ~2000 vertices per polyline.
  const std::size_t stride = std::max<std::size_t>(1, times.size() / 2000);
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\""
        << kPalette[s % std::size(kPalette)] << "\" points=\"";
    for (std::size_t k = 0; k < times.size(); k += stride) {
      if (!std::isfinite(series[s][k])) continue;
      out << coord(px(times[k])) << "," << coord(py(series[s][k])) << " ";
    }
    if (!times.empty() && (times.size() - 1) % stride != 0 &&
        std::isfinite(series[s].back())) {
      out << coord(px(times.back())) << "," << coord(py(series[s].back()));
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

void write_trajectory_svg(std::ostream& out, const Trajectory& traj) {
  std::vector<std::vector<double>> series;
  for (const AgentSeries& a : traj.agents) series.push_back(a.y);
  write_svg(out, traj.times, series, "agent outputs");
}

}  // namespace hetcons::output
