#ifndef MED_CURVE_HPP
#define MED_CURVE_HPP

#include <span>
#include <string>
#include <vector>

namespace med {

// A function of one argument sampled on a grid over [0,1].
struct DiagonalCurve {
  std::vector<double> grid;
  std::vector<double> values;
};

// size >= 2 equally spaced points with grid[0] == 0 and grid[size-1] == 1.
std::vector<double> make_uniform_grid(int size);

// Composite trapezoid rule over the uniform unit grid the values live on.
// Written as (sum - (ends)/2) / (M-1) so a constant c integrates to exactly c.
double trapezoid_uniform_unit(std::span<const double> values);

// Composite trapezoid rule on an arbitrary strictly increasing grid.
double trapezoid(std::span<const double> grid, std::span<const double> values);

// Two-column CSV with header "t,value"; doubles in shortest round-trip form,
// so curve_from_csv(curve_to_csv(c)) reproduces c exactly.
std::string curve_to_csv(const DiagonalCurve& c);
DiagonalCurve curve_from_csv(std::string_view text);

}  // namespace med

#endif
