#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "med/dataset.hpp"
#include "med/errors.hpp"
#include "med/med.hpp"
#include "med/noise.hpp"
#include "med/pipeline.hpp"
#include "med/permutation.hpp"
#include "med/simulate.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw med::DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// path "-" or "" means stdout
void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw med::DataError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw med::DataError("failed while writing " + path);
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view cell, std::size_t line_no, const char* what) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw med::DataError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                         std::string(cell) + "'");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

struct WideData {
  std::vector<double> grid;
  std::vector<std::vector<double>> x, y;
};

// Wide layout: header "group,<t1>,<t2>,..." with strictly increasing times,
// then one row per curve labeled x or y with one value per grid column.
WideData parse_wide_csv(std::string_view text) {
  WideData out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line =
        end == std::string_view::npos ? text.substr(start) : text.substr(start, end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_fields(line);
    if (line_no == 1) {
      if (cells.size() < 3 || !iequals(cells[0], "group"))
        throw med::DataError("line 1: expected header group,<t1>,<t2>,...");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        const double t = parse_number(cells[i], 1, "grid time");
        if (!out.grid.empty() && !(t > out.grid.back()))
          throw med::DataError("line 1: grid times must be strictly increasing");
        out.grid.push_back(t);
      }
      continue;
    }
    if (cells.size() != out.grid.size() + 1)
      throw med::DataError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(out.grid.size() + 1) + " cells, got " +
                           std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(out.grid.size());
    for (std::size_t i = 1; i < cells.size(); ++i)
      row.push_back(parse_number(cells[i], line_no, "value"));
    if (iequals(cells[0], "x"))
      out.x.push_back(std::move(row));
    else if (iequals(cells[0], "y"))
      out.y.push_back(std::move(row));
    else
      throw med::DataError("line " + std::to_string(line_no) + ": group must be x or y, got '" +
                           std::string(cells[0]) + "'");
  }
  if (out.grid.empty()) throw med::DataError("empty input");
  if (out.x.size() < 2 || out.y.size() < 2)
    throw med::DataError("need at least 2 curves per group");
  return out;
}

void print_test_result(const med::RunReport& report) {
  std::cout << "digest " << report.input_digest << "\n";
  std::cout << "noise_mode " << med::noise_mode_name(report.noise_mode) << "\n";
  if (report.noise) {
    std::cout << "sigma2_x " << fmt(report.noise->sigma2_x) << "\n";
    std::cout << "sigma2_y " << fmt(report.noise->sigma2_y) << "\n";
  }
  std::cout << "statistic " << fmt(report.result.statistic) << "\n";
  std::cout << "p_value " << fmt(report.result.p_value) << "\n";
  std::cout << "alpha " << fmt(report.config.alpha) << "\n";
  std::cout << "reject " << (report.result.reject ? "true" : "false") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample marginal-distribution testing for sparse functional data"};
  app.require_subcommand(1);

  std::string t_input, t_mode = "equal_errors", t_curves_dir, t_json;
  double t_hx = 0.2, t_hy = 0.2, t_alpha = 0.05;
  int t_grid = 101, t_perms = 200;
  std::uint64_t t_seed = 0;
  auto* t = app.add_subcommand("test", "Permutation test on a long-format CSV");
  t->add_option("--input", t_input, "long CSV: subject_id,group,time,value")->required();
  t->add_option("--hx", t_hx, "first-sample bandwidth");
  t->add_option("--hy", t_hy, "second-sample bandwidth");
  t->add_option("--grid", t_grid, "evaluation grid size");
  t->add_option("--perms", t_perms, "permutation budget S (observed statistic counted)");
  t->add_option("--alpha", t_alpha, "rejection level in (0,1]");
  t->add_option("--seed", t_seed, "RNG seed");
  t->add_option("--noise-mode", t_mode, "none | equal_errors | augment");
  t->add_option("--export-curves", t_curves_dir, "directory for g1/g2/g3/integrand CSVs");
  t->add_option("--json", t_json, "write the full run report as JSON (- for stdout)");

  std::string s_design = "example1", s_out;
  std::uint64_t s_n = 100, s_m = 70, s_seed = 0;
  double s_sigma1 = 0.0, s_sigma2 = 0.0;
  int s_reps = 0, s_dense = 0;
  auto* sim = app.add_subcommand(
      "simulate", "Generate benchmark data (default) or estimate a rejection rate (--reps)");
  sim->add_option("--design", s_design, "example1 | example2 | gaussian_scale");
  sim->add_option("--n", s_n, "first-sample size");
  sim->add_option("--m", s_m, "second-sample size");
  sim->add_option("--sigma1", s_sigma1, "first-sample noise sd");
  sim->add_option("--sigma2", s_sigma2, "second-sample noise sd");
  sim->add_option("--reps", s_reps, "Monte Carlo replications (0 = write one dataset)");
  sim->add_option("--dense", s_dense, "shared grid size (0 = sparse design)");
  sim->add_option("--seed", s_seed, "RNG seed");
  sim->add_option("--out", s_out, "output CSV path (- or empty = stdout)");

  std::string ne_input, ne_json;
  auto* ne = app.add_subcommand("noise-estimate", "Estimate per-group error variances");
  ne->add_option("--input", ne_input, "long CSV: subject_id,group,time,value")->required();
  ne->add_option("--json", ne_json, "write estimates and curves as JSON (- for stdout)");

  std::string de_input;
  int de_perms = 200;
  std::uint64_t de_seed = 0;
  auto* de = app.add_subcommand("dense-ed",
                                "Classical energy distance on a shared grid (wide CSV)");
  de->add_option("--input", de_input, "wide CSV: group,<t1>,<t2>,... then one row per curve")
      ->required();
  de->add_option("--perms", de_perms, "permutation budget S");
  de->add_option("--seed", de_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*t) {
      const auto ds = med::parse_long_csv(read_file(t_input));
      med::TestConfig cfg;
      cfg.smoother.h_x = t_hx;
      cfg.smoother.h_y = t_hy;
      cfg.smoother.grid_size = t_grid;
      cfg.permutations = t_perms;
      cfg.alpha = t_alpha;
      cfg.seed = t_seed;
      const auto mode = med::noise_mode_from_name(t_mode);
      const auto report = med::run_med_test(ds, cfg, mode);
      if (!t_curves_dir.empty()) med::export_curves(report, t_curves_dir);
      if (!t_json.empty()) write_output(t_json, med::report_to_json(report));
      print_test_result(report);
    } else if (*sim) {
      med::SimDesign d;
      d.family = med::family_from_name(s_design);
      d.n = s_n;
      d.m = s_m;
      d.sigma1 = s_sigma1;
      d.sigma2 = s_sigma2;
      d.dense_grid = s_dense;
      if (s_reps <= 0) {
        write_output(s_out, med::serialize_long_csv(med::generate(d, s_seed)));
      } else {
        med::TestConfig cfg;
        const auto summary = med::monte_carlo_rejection_rate(d, cfg, s_reps, s_seed);
        std::ostringstream csv;
        csv << "\"(n,m)\",sigma1,sigma2,design,rate,ci_lo,ci_hi,reps\n";
        csv << "\"(" << d.n << "," << d.m << ")\"," << fmt(d.sigma1) << ',' << fmt(d.sigma2)
            << ',' << med::family_name(d.family) << ',' << fmt(summary.rate) << ','
            << fmt(summary.ci.lo) << ',' << fmt(summary.ci.hi) << ',' << summary.reps << '\n';
        write_output(s_out, csv.str());
      }
    } else if (*ne) {
      const auto ds = med::parse_long_csv(read_file(ne_input));
      med::SmootherConfig cfg;
      const auto est = med::estimate_noise(ds, cfg);
      if (!ne_json.empty()) write_output(ne_json, med::noise_estimate_to_json(est));
      std::cout << "sigma2_x " << fmt(est.sigma2_x) << "\n";
      std::cout << "sigma2_y " << fmt(est.sigma2_y) << "\n";
    } else if (*de) {
      const auto wide = parse_wide_csv(read_file(de_input));
      med::TwoSampleDataset ds;
      for (std::size_t i = 0; i < wide.x.size(); ++i) {
        med::SubjectRecord rec;
        rec.id = "x" + std::to_string(i + 1);
        for (std::size_t j = 0; j < wide.grid.size(); ++j)
          rec.obs.push_back({wide.grid[j], wide.x[i][j]});
        ds.x.push_back(std::move(rec));
      }
      for (std::size_t i = 0; i < wide.y.size(); ++i) {
        med::SubjectRecord rec;
        rec.id = "y" + std::to_string(i + 1);
        for (std::size_t j = 0; j < wide.grid.size(); ++j)
          rec.obs.push_back({wide.grid[j], wide.y[i][j]});
        ds.y.push_back(std::move(rec));
      }
      med::TestConfig cfg;
      cfg.permutations = de_perms;
      cfg.seed = de_seed;
      const auto& grid = wide.grid;
      const auto result = med::permutation_test(ds, cfg, [&grid](const med::TwoSampleDataset& d) {
        const auto rows_of = [](const std::vector<med::SubjectRecord>& g) {
          std::vector<std::vector<double>> rows;
          rows.reserve(g.size());
          for (const auto& s : g) {
            std::vector<double> r;
            r.reserve(s.obs.size());
            for (const auto& ob : s.obs) r.push_back(ob.value);
            rows.push_back(std::move(r));
          }
          return rows;
        };
        return med::dense_energy_distance(rows_of(d.x), rows_of(d.y), grid);
      });
      std::cout << "statistic " << fmt(result.statistic) << "\n";
      std::cout << "p_value " << fmt(result.p_value) << "\n";
      std::cout << "alpha " << fmt(cfg.alpha) << "\n";
      std::cout << "reject " << (result.reject ? "true" : "false") << "\n";
    }
    return 0;
  } catch (const med::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const med::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
