#include "flowbn/lab/density.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "flowbn/error.hpp"
#include "flowbn/flows/flow.hpp"

namespace flowbn::lab {

namespace {

void check_grid(const GridBounds& b, std::size_t resolution) {
  if (resolution == 0 || resolution > kMaxGridResolution) {
    throw InputError("density_grid: resolution must lie in [1, 2048]");
  }
  if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min)) throw InputError("density_grid: empty bounds");
}

DensityGrid empty_grid(const GridBounds& b, std::size_t resolution) {
  return {b, resolution, resolution, std::vector<double>(resolution * resolution)};
}

std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

double parse_number(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw InputError("grid CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

double DensityGrid::cell_x(std::size_t j) const {
  return bounds.x_min + (static_cast<double>(j) + 0.5) * (bounds.x_max - bounds.x_min) / static_cast<double>(cols);
}

double DensityGrid::cell_y(std::size_t i) const {
  return bounds.y_max - (static_cast<double>(i) + 0.5) * (bounds.y_max - bounds.y_min) / static_cast<double>(rows);
}

DensityGrid density_grid(const flows::FlowModel& model, const GridBounds& bounds, std::size_t resolution) {
  if (model.dim() != 2) throw InputError("density_grid: model must be 2D");
  check_grid(bounds, resolution);
  DensityGrid grid = empty_grid(bounds, resolution);
  num::Matrix points(resolution, 2);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      points(j, 0) = grid.cell_x(j);
      points(j, 1) = grid.cell_y(i);
    }
    const auto lp = flows::log_prob_batch(model, points);
    std::copy(lp.begin(), lp.end(), grid.log_density.begin() + static_cast<std::ptrdiff_t>(i * resolution));
  }
  return grid;
}

DensityGrid density_grid(const ToyTarget& target, const GridBounds& bounds, std::size_t resolution) {
  check_grid(bounds, resolution);
  const double probe[2] = {0.0, 0.0};
  if (!target_log_density(target, probe)) {
    throw InputError("density_grid: target '" + target_name(target.kind) + "' has no closed-form density");
  }
  DensityGrid grid = empty_grid(bounds, resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      const double p[2] = {grid.cell_x(j), grid.cell_y(i)};
      grid.log_density[i * resolution + j] = *target_log_density(target, p);
    }
  }
  return grid;
}

double grid_mass(const DensityGrid& grid) {
  const double cell = (grid.bounds.x_max - grid.bounds.x_min) / static_cast<double>(grid.cols) *
                      (grid.bounds.y_max - grid.bounds.y_min) / static_cast<double>(grid.rows);
  double total = 0.0;
  for (double v : grid.log_density) total += std::exp(v);
  return total * cell;
}

std::string grid_to_csv(const DensityGrid& grid) {
  std::string out = std::to_string(grid.rows) + "," + std::to_string(grid.cols) + "," + number(grid.bounds.x_min) +
                    "," + number(grid.bounds.x_max) + "," + number(grid.bounds.y_min) + "," +
                    number(grid.bounds.y_max) + "\n";
  for (std::size_t i = 0; i < grid.rows; ++i) {
    for (std::size_t j = 0; j < grid.cols; ++j) {
      if (j) out += ',';
      out += number(grid.at(i, j));
    }
    out += '\n';
  }
  return out;
}

DensityGrid grid_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("grid CSV: missing header");
  const auto head = split(line);
  if (head.size() != 6) throw InputError("grid CSV: header needs rows,cols,x_min,x_max,y_min,y_max");
  DensityGrid grid;
  const double rows = parse_number(head[0], 1);
  const double cols = parse_number(head[1], 1);
  if (rows < 1 || cols < 1 || rows > kMaxGridResolution || cols > kMaxGridResolution) {
    throw InputError("grid CSV: bad resolution");
  }
  grid.rows = static_cast<std::size_t>(rows);
  grid.cols = static_cast<std::size_t>(cols);
  grid.bounds = {parse_number(head[2], 1), parse_number(head[3], 1), parse_number(head[4], 1),
                 parse_number(head[5], 1)};
  grid.log_density.reserve(grid.rows * grid.cols);
  for (std::size_t i = 0; i < grid.rows; ++i) {
    if (!std::getline(in, line)) throw InputError("grid CSV: expected " + std::to_string(grid.rows) + " rows");
    const auto cells = split(line);
    if (cells.size() != grid.cols) throw InputError("grid CSV line " + std::to_string(i + 2) + ": wrong width");
    for (const auto& c : cells) grid.log_density.push_back(parse_number(c, i + 2));
  }
  return grid;
}

std::string grid_to_pgm(const DensityGrid& grid) {
  double lo = INFINITY;
  double hi = -INFINITY;
  for (double v : grid.log_density) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::string out = "P5\n" + std::to_string(grid.cols) + " " + std::to_string(grid.rows) + "\n255\n";
  for (double v : grid.log_density) {
    unsigned char px = 0;
    if (std::isfinite(v) && hi > lo) px = static_cast<unsigned char>(std::lround(255.0 * (v - lo) / (hi - lo)));
    out.push_back(static_cast<char>(px));
  }
  return out;
}

}  // namespace flowbn::lab
