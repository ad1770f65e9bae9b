#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hetcons/sim.hpp"

namespace hetcons::output {

/// %.17g: round-trips every double.
std::string format_double(double v);

/// Header t,y1..yN[,e1..eN][,mode]; full-state columns follow when asked.
/// Modes are written 1-based.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, bool full_state);

/// Header t,mean_square.
void write_montecarlo_csv(std::ostream& out, const MonteCarloResult& mc);

/// 800 x 500 line plot, one polyline per series, linear auto-scaled axes.
void write_svg(std::ostream& out, const std::vector<double>& times,
               const std::vector<std::vector<double>>& series, const std::string& title);

/// Output traces of a trajectory.
void write_trajectory_svg(std::ostream& out, const Trajectory& traj);

}  // namespace hetcons::output
