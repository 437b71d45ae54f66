#include "med/curve.hpp"

#include <charconv>
#include <cmath>

#include "med/errors.hpp"

namespace med {

std::vector<double> make_uniform_grid(int size) {
  if (size < 2) throw DataError("grid size must be at least 2");
  std::vector<double> g(static_cast<std::size_t>(size));
  const double denom = static_cast<double>(size - 1);
  for (int i = 0; i < size; ++i) g[static_cast<std::size_t>(i)] = static_cast<double>(i) / denom;
  return g;
}

double trapezoid_uniform_unit(std::span<const double> values) {
  const std::size_t M = values.size();
  if (M < 2) throw DataError("trapezoid needs at least 2 values");
  double sum = 0.0;
  for (double v : values) sum += v;
  sum -= 0.5 * (values.front() + values.back());
  return sum / static_cast<double>(M - 1);
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
  if (grid.size() != values.size()) throw DataError("trapezoid: grid/value size mismatch");
  if (grid.size() < 2) throw DataError("trapezoid needs at least 2 values");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dt = grid[i + 1] - grid[i];
    if (!(dt > 0.0)) throw DataError("trapezoid: grid must be strictly increasing");
    sum += 0.5 * dt * (values[i] + values[i + 1]);
  }
  return sum;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
    throw DataError("curve csv line " + std::to_string(line) + ": bad number '" +
                    std::string(field) + "'");
  return v;
}

}  // namespace

std::string curve_to_csv(const DiagonalCurve& c) {
  if (c.grid.size() != c.values.size()) throw DataError("curve: grid/value size mismatch");
  std::string out = "t,value\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    append_double(out, c.grid[i]);
    out += ',';
    append_double(out, c.values[i]);
    out += '\n';
  }
  return out;
}

DiagonalCurve curve_from_csv(std::string_view text) {
  DiagonalCurve c;
  std::size_t pos = 0, line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (!have_header) {
      if (line != "t,value")
        throw DataError("curve csv: header must be 't,value'");
      have_header = true;
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos)
      throw DataError("curve csv line " + std::to_string(line_no) + ": expected 2 fields");
    c.grid.push_back(parse_double(line.substr(0, comma), line_no));
    c.values.push_back(parse_double(line.substr(comma + 1), line_no));
  }
  if (!have_header) throw DataError("curve csv: missing header");
  return c;
}

}  // namespace med
