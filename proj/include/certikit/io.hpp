#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"

namespace certikit::io {

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s) {
  const std::string t = trim(s);
  double v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) {
    throw InputError("not a number: '" + t + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty()) {
    throw InputError("not a nonnegative integer: '" + t + "'");
  }
  return v;
}

inline Label parse_label(std::string_view s) {
  const std::string t = trim(s);
  if (t == "1" || t == "+1") return Label::positive;
  if (t == "-1") return Label::negative;
  throw InputError("label must be +1 or -1, got '" + t + "'");
}

inline std::string label_text(Label y) { return y == Label::positive ? "1" : "-1"; }

/// "3" as a discrete id, or "0.5,0,1" as a coordinate vector.
inline Point parse_point(std::string_view s, bool vector_expected) {
  const auto parts = split(s, ',');
  if (!vector_expected) {
    if (parts.size() != 1) throw InputError("expected a discrete point id, got '" + std::string(s) + "'");
    return Point::discrete(parse_uint(parts[0]));
  }
  std::vector<double> v;
  v.reserve(parts.size());
  for (const auto& p : parts) v.push_back(parse_double(p));
  return Point::vector(std::move(v));
}

inline std::string point_text(const Point& p) {
  if (p.is_discrete()) return std::to_string(p.id());
  std::string out;
  for (double v : p.coords()) {
    if (!out.empty()) out += ',';
    out += format_double(v);
  }
  return out;
}

/// CSV with a header row. Discrete data: "point,label" ("id,label" is also
/// read). Vector data:
/// "x1,...,xd,label". Lines starting with '#' and blank lines are skipped.
inline Dataset read_dataset(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  std::vector<LabeledExample> ex;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split(t, ',');
    if (header.empty()) {
      header = std::move(cells);
      if (header.size() < 2 || header.back() != "label") throw InputError("dataset header must end with 'label'");
      continue;
    }
    if (cells.size() != header.size()) {
      throw InputError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " cells");
    }
    const Label y = parse_label(cells.back());
    if (header.size() == 2 && (header[0] == "point" || header[0] == "id")) {
      ex.push_back({Point::discrete(parse_uint(cells[0])), y});
    } else {
      std::vector<double> v;
      for (std::size_t i = 0; i + 1 < cells.size(); ++i) v.push_back(parse_double(cells[i]));
      ex.push_back({Point::vector(std::move(v)), y});
    }
  }
  if (header.empty()) throw InputError("dataset is missing its header row");
  return Dataset(std::move(ex));
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  const std::size_t d = data.dimension();
  if (d == 0) {
    out << "point,label\n";
  } else {
    for (std::size_t i = 1; i <= d; ++i) out << 'x' << i << ',';
    out << "label\n";
  }
  for (const auto& e : data.examples()) out << point_text(e.point) << ',' << label_text(e.label) << '\n';
}

/// Header "hypothesis,<id1>,...,<idN>" then one row "<k>,<+-1>,..." per
/// hypothesis, k = 0, 1, ... in order.
inline FiniteFamily read_finite_family(std::istream& in) {
  std::string line;
  std::vector<std::uint64_t> domain;
  std::vector<std::vector<Label>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t, ',');
    if (!have_header) {
      if (cells.empty() || cells[0] != "hypothesis") throw InputError("family header must start with 'hypothesis'");
      for (std::size_t i = 1; i < cells.size(); ++i) domain.push_back(parse_uint(cells[i]));
      have_header = true;
      continue;
    }
    if (cells.size() != domain.size() + 1) throw InputError("family row has the wrong number of cells");
    if (parse_uint(cells[0]) != rows.size()) throw InputError("family rows must be numbered 0, 1, ... in order");
    std::vector<Label> row;
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_label(cells[i]));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw InputError("family file is missing its header row");
  return FiniteFamily(std::move(domain), std::move(rows));
}

inline FiniteFamily read_finite_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open family file '" + path + "'");
  return read_finite_family(in);
}

inline void write_finite_family(std::ostream& out, const FiniteFamily& fam) {
  out << "hypothesis";
  for (auto id : fam.domain()) out << ',' << id;
  out << '\n';
  for (std::size_t h = 0; h < fam.hypothesis_count(); ++h) {
    out << h;
    for (std::size_t c = 0; c < fam.domain_size(); ++c) out << ',' << label_text(fam.predict_column(h, c));
    out << '\n';
  }
}

inline nlohmann::ordered_json point_json(const Point& p) {
  if (p.is_discrete()) return p.id();
  return std::vector<double>(p.coords().begin(), p.coords().end());
}

inline nlohmann::ordered_json certificate_json(const Certificate& c) {
  nlohmann::ordered_json j;
  j["indices"] = c.indices;
  j["b"] = c.budget;
  j["test"] = point_json(c.test);
  j["label"] = to_int(c.claimed_label);
  j["minimal"] = c.minimal;
  j["size"] = c.size();
  auto& ex = j["examples"] = nlohmann::ordered_json::array();
  for (auto i : c.indices) {
    ex.push_back({{"point", point_json(c.source[i].point)}, {"label", to_int(c.source[i].label)}});
  }
  return j;
}

}  // namespace certikit::io
