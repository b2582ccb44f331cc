#ifndef DMINER_CORPUS_HPP_
#define DMINER_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dminer {

enum class DataType { kNumerical, kNominal, kOrdinal };
enum class DataOp { kNone, kCount, kSum, kAvg, kMin, kMax };

// The 13 mark kinds accepted by the canonical format.
enum class Mark {
  kBar,
  kLine,
  kArea,
  kCircle,
  kSquare,
  kShape,
  kText,
  kTextTable,
  kMap,
  kPie,
  kGantt,
  kPolygon,
  kHeatmap,
};

enum class Channel { kX, kY, kColor, kSize, kShape };
enum class CoordKind { kFilter, kBrush };

inline constexpr int kNumDataTypes = 3;
inline constexpr int kNumDataOps = 6;
inline constexpr int kNumMarks = 13;
inline constexpr int kNumChannels = 5;
inline constexpr int kGridSize = 4;

std::string_view to_string(DataType t);
std::string_view to_string(DataOp op);
std::string_view to_string(Mark m);
std::string_view to_string(Channel c);
std::string_view to_string(CoordKind k);

std::optional<DataType> parse_data_type(std::string_view s);
std::optional<DataOp> parse_data_op(std::string_view s);
std::optional<Mark> parse_mark(std::string_view s);
std::optional<CoordKind> parse_coord_kind(std::string_view s);

struct DataField {
  std::string name;
  DataType dtype = DataType::kNominal;
  DataOp op = DataOp::kNone;

  bool operator==(const DataField&) const = default;
};

struct PixelRect {
  double x = 0, y = 0, w = 0, h = 0;

  bool operator==(const PixelRect&) const = default;
};

struct ViewSpec {
  std::string id;
  Mark mark = Mark::kBar;
  std::vector<DataField> fields;
  // Field names per channel, indexed by Channel.
  std::array<std::vector<std::string>, kNumChannels> encodings;
  // Absent for recommendation inputs, where layout is the output.
  std::optional<PixelRect> layout;

  const std::vector<std::string>& encoded(Channel c) const {
    return encodings[static_cast<int>(c)];
  }
  bool operator==(const ViewSpec&) const = default;
};

struct Coordination {
  std::string source;
  std::string target;
  CoordKind kind = CoordKind::kFilter;

  bool operator==(const Coordination&) const = default;
};

struct Canvas {
  double width_px = 0;
  double height_px = 0;

  bool operator==(const Canvas&) const = default;
};

struct DashboardSpec {
  std::string id;
  Canvas canvas;
  std::vector<ViewSpec> views;
  std::vector<Coordination> coordinations;

  bool operator==(const DashboardSpec&) const = default;
};

// A rectangle on the normalized grid, in cells. y = 0 is the top row.
struct GridRect {
  int x = 0, y = 0, w = 1, h = 1;

  int area() const { return w * h; }
  bool overlaps(const GridRect& o) const {
    return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
  }
  auto operator<=>(const GridRect&) const = default;
};

struct GridArrangement {
  std::string view;
  GridRect rect;

  bool operator==(const GridArrangement&) const = default;
};

// Parses and validates one dashboard. Throws SchemaError carrying the JSON
// path of the first violation.
DashboardSpec parse_dashboard(std::string_view json_text);
DashboardSpec dashboard_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DashboardSpec& dashboard);
std::string serialize_dashboard(const DashboardSpec& dashboard);

// Parses a recommendation input: the dashboard schema with canvas, layout
// and coordinations optional. Requires at least one view.
std::vector<ViewSpec> parse_views(std::string_view json_text);
nlohmann::json views_to_json(std::span<const ViewSpec> views);

// Snaps every view to the n x n grid, aligned with dashboard.views. Each
// edge rounds to the nearest gridline (half away from zero), spans are
// clamped to at least one cell. Throws InputError naming both views when two
// snapped rectangles collide.
std::vector<GridRect> snap_to_grid(const DashboardSpec& dashboard,
                                   int n = kGridSize);
std::map<std::string, GridArrangement> normalize_to_grid(
    const DashboardSpec& dashboard, int n = kGridSize);

struct StatsReport {
  std::int64_t dashboards = 0;
  std::int64_t views = 0;
  std::map<int, std::int64_t> view_count;
  std::map<Mark, std::int64_t> marks;
  // Per ordered view pair: "none", "filter", "brush".
  std::map<std::string, std::int64_t> coordination;

  StatsReport& operator+=(const StatsReport& other);
  bool operator==(const StatsReport&) const = default;
};

StatsReport corpus_stats(std::span<const DashboardSpec> corpus);
nlohmann::json to_json(const StatsReport& report);
// Plain-text histogram used by the stats subcommand.
std::string format_histogram(const StatsReport& report);

}  // namespace dminer

#endif  // DMINER_CORPUS_HPP_
