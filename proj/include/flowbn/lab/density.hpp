#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "flowbn/flows/model.hpp"
#include "flowbn/lab/targets.hpp"

namespace flowbn::lab {

struct GridBounds {
  double x_min = -4.0, x_max = 4.0, y_min = -4.0, y_max = 4.0;
  friend bool operator==(const GridBounds&, const GridBounds&) = default;
};

inline constexpr std::size_t kMaxGridResolution = 2048;

// Log-density on a regular grid. Row i, column j holds the value at the
// centre of the cell with x = x_min + (j + 0.5) dx and y = y_max - (i + 0.5) dy,
// so row 0 is the top of the picture.
struct DensityGrid {
  GridBounds bounds;
  std::size_t rows = 0, cols = 0;
  std::vector<double> log_density;

  double at(std::size_t i, std::size_t j) const { return log_density[i * cols + j]; }
  double cell_x(std::size_t j) const;
  double cell_y(std::size_t i) const;
  friend bool operator==(const DensityGrid&, const DensityGrid&) = default;
};

// `resolution` cells per side, 1..kMaxGridResolution. Models and targets
// must be 2D; targets need a closed-form density. Violations throw InputError.
DensityGrid density_grid(const flows::FlowModel& model, const GridBounds& bounds, std::size_t resolution);
DensityGrid density_grid(const ToyTarget& target, const GridBounds& bounds, std::size_t resolution);

// Riemann sum of exp(log density) over the grid.
double grid_mass(const DensityGrid& grid);

// CSV: first line "rows,cols,x_min,x_max,y_min,y_max", then one line per row.
std::string grid_to_csv(const DensityGrid& grid);
DensityGrid grid_from_csv(std::istream& in);

// Binary PGM (P5). The smallest finite log-density maps to 0, the largest
// to 255; non-finite cells are 0.
std::string grid_to_pgm(const DensityGrid& grid);

}  // namespace flowbn::lab
