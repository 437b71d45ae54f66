#include "med/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <system_error>

#include "med/errors.hpp"

namespace med {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double parse_double(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataError("line " + std::to_string(line) + ": cannot parse " + what + " '" +
                    std::string(field) + "'");
  if (!std::isfinite(v))
    throw DataError("line " + std::to_string(line) + ": non-finite " + what);
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

TwoSampleDataset parse_impl(std::string_view text, bool enforce_unit_times) {
  TwoSampleDataset ds;
  // subject id -> (group, index within group)
  std::map<std::string, std::pair<char, std::size_t>, std::less<>> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) {
      if (pos > text.size()) break;
      continue;
    }

    std::string_view fields[4];
    std::size_t nf = 0, start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (nf < 4) fields[nf] = trim(line.substr(start, i - start));
        ++nf;
        start = i + 1;
      }
    }
    if (nf != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(nf));

    if (!have_header) {
      if (lower(fields[0]) != "subject_id" || lower(fields[1]) != "group" ||
          lower(fields[2]) != "time" || lower(fields[3]) != "value")
        throw DataError("line 1: header must be 'subject_id,group,time,value'");
      have_header = true;
      continue;
    }

    std::string id(fields[0]);
    if (id.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty subject_id");
    std::string g = lower(fields[1]);
    if (g != "x" && g != "y")
      throw DataError("line " + std::to_string(line_no) + ": unknown group label '" +
                      std::string(fields[1]) + "' (expected x or y)");
    char group = g[0];
    double t = parse_double(fields[2], line_no, "time");
    double v = parse_double(fields[3], line_no, "value");
    if (enforce_unit_times && (t < 0.0 || t > 1.0))
      throw DataError("line " + std::to_string(line_no) + ": time out of [0,1]");

    auto it = seen.find(id);
    if (it == seen.end()) {
      auto& vec = group == 'x' ? ds.x : ds.y;
      seen.emplace(id, std::make_pair(group, vec.size()));
      vec.push_back(SubjectRecord{id, {{t, v}}});
    } else {
      if (it->second.first != group)
        throw DataError("line " + std::to_string(line_no) + ": subject '" + id +
                        "' appears in both groups");
      auto& vec = group == 'x' ? ds.x : ds.y;
      vec[it->second.second].obs.push_back({t, v});
    }
    if (pos > text.size()) break;
  }

  if (!have_header) throw DataError("empty input: missing header");
  if (ds.x.empty()) throw DataError("group x has no subjects");
  if (ds.y.empty()) throw DataError("group y has no subjects");
  return ds;
}

}  // namespace

std::size_t TwoSampleDataset::total_points() const {
  std::size_t c = 0;
  for (const auto& s : x) c += s.obs.size();
  for (const auto& s : y) c += s.obs.size();
  return c;
}

TwoSampleDataset parse_long_csv(std::string_view text) { return parse_impl(text, true); }

TwoSampleDataset parse_long_csv_raw_times(std::string_view text) {
  return parse_impl(text, false);
}

std::string serialize_long_csv(const TwoSampleDataset& ds) {
  std::string out = "subject_id,group,time,value\n";
  auto emit = [&out](const std::vector<SubjectRecord>& subjects, char group) {
    for (const auto& s : subjects)
      for (const auto& p : s.obs) {
        out += s.id;
        out += ',';
        out += group;
        out += ',';
        append_double(out, p.time);
        out += ',';
        append_double(out, p.value);
        out += '\n';
      }
  };
  emit(ds.x, 'x');
  emit(ds.y, 'y');
  return out;
}

TwoSampleDataset rescale_time(TwoSampleDataset ds, double lo, double hi) {
  if (!(lo < hi)) throw DataError("rescale_time: need lo < hi");
  auto map_group = [&](std::vector<SubjectRecord>& subjects) {
    for (auto& s : subjects)
      for (auto& p : s.obs) {
        if (!(p.time >= lo && p.time <= hi))
          throw DataError("rescale_time: time " + std::to_string(p.time) +
                          " of subject '" + s.id + "' outside [" + std::to_string(lo) +
                          "," + std::to_string(hi) + "]");
        p.time = (p.time - lo) / (hi - lo);
      }
  };
  map_group(ds.x);
  map_group(ds.y);
  return ds;
}

std::vector<Violation> validate_dataset(const TwoSampleDataset& ds) {
  std::vector<Violation> out;
  if (ds.n() < 2)
    out.push_back({"", "group x has " + std::to_string(ds.n()) + " subject(s); need at least 2"});
  if (ds.m() < 2)
    out.push_back({"", "group y has " + std::to_string(ds.m()) + " subject(s); need at least 2"});

  std::map<std::string_view, int> id_count;
  auto check_group = [&out, &id_count](const std::vector<SubjectRecord>& subjects) {
    for (const auto& s : subjects) {
      ++id_count[s.id];
      if (s.obs.empty()) out.push_back({s.id, "subject has no observations"});
      for (const auto& p : s.obs) {
        if (!std::isfinite(p.time) || p.time < 0.0 || p.time > 1.0) {
          out.push_back({s.id, "time out of [0,1]"});
          break;
        }
      }
      for (const auto& p : s.obs) {
        if (!std::isfinite(p.value)) {
          out.push_back({s.id, "non-finite value"});
          break;
        }
      }
    }
  };
  check_group(ds.x);
  check_group(ds.y);
  for (const auto& [id, count] : id_count)
    if (count > 1) out.push_back({std::string(id), "duplicate subject id"});
  return out;
}

void require_valid(const TwoSampleDataset& ds) {
  auto v = validate_dataset(ds);
  if (v.empty()) return;
  std::string msg = "invalid dataset:";
  for (const auto& viol : v) {
    msg += "\n  ";
    if (!viol.subject_id.empty()) {
      msg += viol.subject_id;
      msg += ": ";
    }
    msg += viol.message;
  }
  throw DataError(msg);
}

std::string dataset_digest(const TwoSampleDataset& ds) {
  const std::string csv = serialize_long_csv(ds);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : csv) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace med
