#include "floodcast/floodgen/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "floodcast/errors.hpp"

namespace floodcast {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line, const std::string& file, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  std::size_t i = 0;
  bool quoted_field = false;
  while (true) {
    if (i < line.size() && line[i] == '"' && cur.empty() && !quoted_field) {
      quoted_field = true;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        cur += line[i++];
      }
      if (!closed) throw ParseError(file, line_no, "unterminated quoted field");
      if (i < line.size() && line[i] != ',') throw ParseError(file, line_no, "text after closing quote");
      continue;
    }
    if (i >= line.size() || line[i] == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      quoted_field = false;
      if (i >= line.size()) break;
      ++i;
      continue;
    }
    if (quoted_field) throw ParseError(file, line_no, "text after closing quote");
    cur += line[i++];
  }
  return fields;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

struct Line {
  std::size_t number;
  std::string_view text;
};

// Non-empty, non-comment lines with their 1-based numbers.
std::vector<Line> content_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t no = 0;
  while (!text.empty()) {
    ++no;
    const auto nl = text.find('\n');
    std::string_view l = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    if (trim(l).empty() || trim(l).front() == '#') continue;
    out.push_back({no, l});
  }
  return out;
}

std::vector<std::string> header_fields(const Line& l, const std::string& file) {
  auto f = split_csv_line(l.text, file, l.number);
  for (auto& s : f) s = std::string(trim(s));
  return f;
}

double parse_number(std::string_view s, const std::string& file, std::size_t line, const char* column) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(file, line, std::string("bad number '") + std::string(s) + "' in column " + column);
  }
  return v;
}

std::optional<double> parse_optional(std::string_view s, const std::string& file, std::size_t line,
                                     const char* column) {
  if (trim(s).empty()) return std::nullopt;
  return parse_number(s, file, line, column);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

SensorSeries parse_sensor_csv(std::string_view text, const std::string& file) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw ParseError(file, 1, "empty file, expected header '" + std::string(kSeriesHeader) + "'");
  const auto head = header_fields(lines.front(), file);
  const std::vector<std::string> expected{"timestamp", "level_to_bank_ft", "rainfall_in"};
  if (head != expected) {
    if (head.size() == 3 && head[0] == "timestamp") {
      if (starts_with(head[1], "level") && head[1] != expected[1]) {
        throw ParseError(file, lines.front().number, "water level column '" + head[1] + "' is not in feet (expected " +
                                                         expected[1] + ")");
      }
      if (starts_with(head[2], "rain") && head[2] != expected[2]) {
        throw ParseError(file, lines.front().number, "rainfall column '" + head[2] + "' is not in inches (expected " +
                                                         expected[2] + ")");
      }
    }
    throw ParseError(file, lines.front().number, "malformed header, expected '" + std::string(kSeriesHeader) + "'");
  }

  SensorSeries s;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& l = lines[k];
    const auto f = split_csv_line(l.text, file, l.number);
    if (f.size() != 3) throw ParseError(file, l.number, "expected 3 fields, got " + std::to_string(f.size()));
    const auto ts = parse_timestamp(trim(f[0]));
    if (!ts) throw ParseError(file, l.number, "bad timestamp '" + f[0] + "'");
    if (*ts % kStepMinutes != 0) throw ParseError(file, l.number, "timestamp not on the 30-minute grid");
    if (!s.times.empty() && *ts <= s.times.back()) {
      throw ParseError(file, l.number, "timestamps not strictly increasing (" + format_timestamp(*ts) + " after " +
                                           format_timestamp(s.times.back()) + ")");
    }
    s.times.push_back(*ts);
    s.level.push_back(parse_optional(f[1], file, l.number, "level_to_bank_ft"));
    auto rain = parse_optional(f[2], file, l.number, "rainfall_in");
    if (rain && *rain < 0.0) throw ParseError(file, l.number, "negative rainfall");
    s.rainfall.push_back(rain);
  }
  if (s.times.empty()) throw ParseError(file, lines.front().number, "no data rows");
  return s;
}

std::string sensor_csv(const EventTrace& trace, std::size_t sensor, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += kSeriesHeader;
  out += '\n';
  for (std::size_t t = 0; t < trace.steps(); ++t) {
    out += format_timestamp(trace.time_at(t));
    out += ',';
    out += format_double(trace.level[sensor][t]);
    out += ',';
    out += format_double(trace.rainfall[sensor][t]);
    out += '\n';
  }
  return out;
}

std::string graph_nodes_csv(const SensorGraph& graph, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += kGraphHeaderWithCoords;
  out += '\n';
  for (const auto& n : graph.nodes()) {
    out += csv_escape(n.id) + ',' + format_double(n.bank_height_ft) + ',' + format_double(n.cross_section_ft2) + ',' +
           format_double(n.impermeable_pct) + ',' + format_double(n.x) + ',' + format_double(n.y) + '\n';
  }
  return out;
}

std::string graph_edges_csv(const SensorGraph& graph, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += kEdgeHeader;
  out += '\n';
  for (const auto& [a, b] : graph.edges()) out += csv_escape(graph.node(a).id) + ',' + csv_escape(graph.node(b).id) + '\n';
  return out;
}

SensorGraph parse_graph_csv(std::string_view nodes_text, std::string_view edges_text, const std::string& nodes_file,
                            const std::string& edges_file) {
  const auto nl = content_lines(nodes_text);
  if (nl.empty()) throw ParseError(nodes_file, 1, "empty file");
  const auto head = header_fields(nl.front(), nodes_file);
  bool coords = false;
  auto join = [](const std::vector<std::string>& f) {
    std::string s;
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + f[i];
    return s;
  };
  if (join(head) == kGraphHeaderWithCoords) {
    coords = true;
  } else if (join(head) != kGraphHeader) {
    throw ParseError(nodes_file, nl.front().number, "malformed header, expected '" + std::string(kGraphHeader) + "'");
  }
  std::vector<SensorNode> nodes;
  std::map<std::string, std::size_t> index;
  const std::size_t width = coords ? 6 : 4;
  for (std::size_t k = 1; k < nl.size(); ++k) {
    const auto& l = nl[k];
    const auto f = split_csv_line(l.text, nodes_file, l.number);
    if (f.size() != width) {
      throw ParseError(nodes_file, l.number,
                       "expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
    }
    SensorNode n;
    n.id = std::string(trim(f[0]));
    if (n.id.empty()) throw ParseError(nodes_file, l.number, "empty sensor id");
    n.bank_height_ft = parse_number(f[1], nodes_file, l.number, "bank_height_ft");
    n.cross_section_ft2 = parse_number(f[2], nodes_file, l.number, "cross_section_ft2");
    n.impermeable_pct = parse_number(f[3], nodes_file, l.number, "impermeable_pct");
    if (coords) {
      n.x = parse_number(f[4], nodes_file, l.number, "x");
      n.y = parse_number(f[5], nodes_file, l.number, "y");
    }
    if (!index.emplace(n.id, nodes.size()).second) throw ParseError(nodes_file, l.number, "duplicate sensor id " + n.id);
    nodes.push_back(std::move(n));
  }

  std::vector<Edge> edges;
  const auto el = content_lines(edges_text);
  if (el.empty()) throw ParseError(edges_file, 1, "empty file");
  const auto ehead = header_fields(el.front(), edges_file);
  if (join(ehead) != kEdgeHeader) {
    throw ParseError(edges_file, el.front().number, "malformed header, expected '" + std::string(kEdgeHeader) + "'");
  }
  for (std::size_t k = 1; k < el.size(); ++k) {
    const auto& l = el[k];
    const auto f = split_csv_line(l.text, edges_file, l.number);
    if (f.size() != 2) throw ParseError(edges_file, l.number, "expected 2 fields, got " + std::to_string(f.size()));
    const auto a = index.find(std::string(trim(f[0])));
    const auto b = index.find(std::string(trim(f[1])));
    if (a == index.end()) throw ParseError(edges_file, l.number, "unknown sensor id " + f[0]);
    if (b == index.end()) throw ParseError(edges_file, l.number, "unknown sensor id " + f[1]);
    edges.emplace_back(a->second, b->second);
  }
  return SensorGraph(std::move(nodes), std::move(edges));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("error writing " + path);
}

void write_graph_csv(const SensorGraph& graph, const std::string& nodes_path, const std::string& edges_path,
                     const std::string& comment) {
  write_text_file(nodes_path, graph_nodes_csv(graph, comment));
  write_text_file(edges_path, graph_edges_csv(graph, comment));
}

SensorGraph read_graph_csv(const std::string& nodes_path, const std::string& edges_path) {
  return parse_graph_csv(read_text_file(nodes_path), read_text_file(edges_path), nodes_path, edges_path);
}

void write_event_csv(const SensorGraph& graph, const EventTrace& trace, const std::string& dir,
                     const std::string& comment) {
  if (trace.sensors() != graph.size()) throw DimensionError("trace and graph disagree on sensors");
  for (std::size_t s = 0; s < graph.size(); ++s) {
    write_text_file((fs::path(dir) / (graph.node(s).id + ".csv")).string(), sensor_csv(trace, s, comment));
  }
}

std::vector<EventTrace> assemble_event(const SensorGraph& graph, const std::vector<SensorSeries>& series,
                                       const std::string& name) {
  if (series.size() != graph.size()) throw DimensionError("one series per sensor required");
  Timestamp lo = series.front().times.front(), hi = series.front().times.back();
  for (const auto& s : series) {
    lo = std::max(lo, s.times.front());
    hi = std::min(hi, s.times.back());
  }
  if (lo > hi) throw IoError("event " + name + ": sensor series share no common time range");
  const std::size_t steps = static_cast<std::size_t>((hi - lo) / kStepMinutes) + 1;
  const std::size_t n = graph.size();

  // Place every value on the common axis, then fill short gaps and mark long ones.
  std::vector<std::vector<double>> level(n, std::vector<double>(steps, 0.0)), rain = level;
  std::vector<bool> broken(steps, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::optional<double>> lv(steps), rv(steps);
    for (std::size_t k = 0; k < series[i].times.size(); ++k) {
      const Timestamp ts = series[i].times[k];
      if (ts < lo || ts > hi) continue;
      const auto t = static_cast<std::size_t>((ts - lo) / kStepMinutes);
      lv[t] = series[i].level[k];
      rv[t] = series[i].rainfall[k];
    }
    for (auto* pair : {&lv, &rv}) {
      auto& v = *pair;
      auto& out = pair == &lv ? level[i] : rain[i];
      std::size_t t = 0;
      while (t < steps) {
        if (v[t]) {
          out[t] = *v[t];
          ++t;
          continue;
        }
        std::size_t end = t;
        while (end < steps && !v[end]) ++end;
        const bool fillable = t > 0 && end - t <= kMaxForwardFill;
        for (std::size_t u = t; u < end; ++u) {
          if (fillable) {
            out[u] = out[t - 1];
          } else {
            broken[u] = true;
          }
        }
        t = end;
      }
    }
  }

  std::vector<EventTrace> out;
  std::size_t t = 0;
  while (t < steps) {
    if (broken[t]) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < steps && !broken[end]) ++end;
    EventTrace tr;
    tr.name = out.empty() ? name : name + "#" + std::to_string(out.size() + 1);
    tr.start = lo + static_cast<Timestamp>(t) * kStepMinutes;
    tr.level.resize(n);
    tr.rainfall.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      tr.level[i].assign(level[i].begin() + static_cast<std::ptrdiff_t>(t),
                         level[i].begin() + static_cast<std::ptrdiff_t>(end));
      tr.rainfall[i].assign(rain[i].begin() + static_cast<std::ptrdiff_t>(t),
                            rain[i].begin() + static_cast<std::ptrdiff_t>(end));
    }
    out.push_back(std::move(tr));
    t = end;
  }
  return out;
}

std::vector<EventTrace> read_event_csv(const SensorGraph& graph, const std::string& dir, const std::string& name) {
  if (!fs::is_directory(dir)) throw IoError("event directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    if (!graph.index_of(entry.path().stem().string())) {
      throw IoError(entry.path().string() + ": no sensor with id " + entry.path().stem().string() + " in the graph");
    }
  }
  std::vector<SensorSeries> series;
  for (const auto& node : graph.nodes()) {
    const auto path = (fs::path(dir) / (node.id + ".csv")).string();
    if (!fs::exists(path)) throw IoError("missing series for sensor " + node.id + " (" + path + ")");
    series.push_back(parse_sensor_csv(read_text_file(path), path));
  }
  return assemble_event(graph, series, name);
}

IngestResult ingest_csv(const std::string& nodes_path, const std::string& edges_path,
                        const std::vector<std::string>& event_dirs) {
  IngestResult r{read_graph_csv(nodes_path, edges_path), {}};
  for (const auto& d : event_dirs) {
    auto name = fs::path(d).filename().string();
    if (name.empty()) name = fs::path(d).parent_path().filename().string();
    for (auto& tr : read_event_csv(r.graph, d, name)) r.traces.push_back(std::move(tr));
  }
  return r;
}

}  // namespace floodcast
