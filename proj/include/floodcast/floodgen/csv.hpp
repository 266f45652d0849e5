#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "floodcast/floodgen/graph.hpp"
#include "floodcast/floodgen/simulate.hpp"
#include "floodcast/floodgen/timestamp.hpp"

namespace floodcast {

// Column layouts. Lines starting with '#' are comments and are skipped on read.
inline constexpr std::string_view kSeriesHeader = "timestamp,level_to_bank_ft,rainfall_in";
inline constexpr std::string_view kGraphHeader = "sensor_id,bank_height_ft,cross_section_ft2,impermeable_pct";
inline constexpr std::string_view kGraphHeaderWithCoords =
    "sensor_id,bank_height_ft,cross_section_ft2,impermeable_pct,x,y";
inline constexpr std::string_view kEdgeHeader = "from_id,to_id";

// Missing runs of at most this many steps are forward-filled; longer runs split the trace.
inline constexpr std::size_t kMaxForwardFill = 2;

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
// RFC-4180 field quoting.
std::string csv_escape(std::string_view field);
// Splits one record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(std::string_view line, const std::string& file, std::size_t line_no);

struct SensorSeries {
  std::vector<Timestamp> times;
  std::vector<std::optional<double>> level;
  std::vector<std::optional<double>> rainfall;
};

// Parses one per-sensor file. Errors carry the 1-based line number.
SensorSeries parse_sensor_csv(std::string_view text, const std::string& file);
std::string sensor_csv(const EventTrace& trace, std::size_t sensor, const std::string& comment = "");

std::string graph_nodes_csv(const SensorGraph& graph, const std::string& comment = "");
std::string graph_edges_csv(const SensorGraph& graph, const std::string& comment = "");
SensorGraph parse_graph_csv(std::string_view nodes_text, std::string_view edges_text,
                            const std::string& nodes_file = "graph.csv", const std::string& edges_file = "edges.csv");

void write_graph_csv(const SensorGraph& graph, const std::string& nodes_path, const std::string& edges_path,
                     const std::string& comment = "");
SensorGraph read_graph_csv(const std::string& nodes_path, const std::string& edges_path);

// One `<sensor_id>.csv` per sensor inside `dir`.
void write_event_csv(const SensorGraph& graph, const EventTrace& trace, const std::string& dir,
                     const std::string& comment = "");

// Aligns the per-sensor files of one event on a common 30-minute axis. Gaps of
// up to kMaxForwardFill steps are forward-filled; longer gaps split the event
// into several traces named "<name>", "<name>#2", ...
std::vector<EventTrace> assemble_event(const SensorGraph& graph, const std::vector<SensorSeries>& series,
                                       const std::string& name);
std::vector<EventTrace> read_event_csv(const SensorGraph& graph, const std::string& dir, const std::string& name);

struct IngestResult {
  SensorGraph graph;
  std::vector<EventTrace> traces;
};

IngestResult ingest_csv(const std::string& nodes_path, const std::string& edges_path,
                        const std::vector<std::string>& event_dirs);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace floodcast
