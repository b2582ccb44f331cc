#include "dminer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dminer/common.hpp"

namespace dminer {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumDataTypes> kDataTypeNames = {
    "numerical", "nominal", "ordinal"};
constexpr std::array<std::string_view, kNumDataOps> kDataOpNames = {
    "none", "count", "sum", "avg", "min", "max"};
constexpr std::array<std::string_view, kNumMarks> kMarkNames = {
    "bar",  "line",       "area", "circle", "square",  "shape",  "text",
    "text_table", "map", "pie",  "gantt",  "polygon", "heatmap"};
constexpr std::array<std::string_view, kNumChannels> kChannelNames = {
    "x", "y", "color", "size", "shape"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names,
                        std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

std::string join_path(const std::string& base, std::string_view key) {
  return base + "/" + std::string(key);
}
std::string join_path(const std::string& base, std::size_t index) {
  return base + "/" + std::to_string(index);
}

const json& member(const json& obj, const std::string& path,
                   std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(join_path(path, key), "required member missing");
  }
  return *it;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}

void expect_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
}

std::string get_string(const json& obj, const std::string& path,
                       std::string_view key) {
  const json& j = member(obj, path, key);
  if (!j.is_string()) {
    throw SchemaError(join_path(path, key), "expected a string");
  }
  return j.get<std::string>();
}

double get_number(const json& obj, const std::string& path,
                  std::string_view key) {
  const json& j = member(obj, path, key);
  if (!j.is_number()) {
    throw SchemaError(join_path(path, key), "expected a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw SchemaError(join_path(path, key), "expected a finite number");
  }
  return v;
}

template <typename E>
E get_enum(const json& obj, const std::string& path, std::string_view key,
           std::optional<E> (*parse)(std::string_view)) {
  const std::string s = get_string(obj, path, key);
  auto value = parse(s);
  if (!value) {
    throw SchemaError(join_path(path, key), "unknown value '" + s + "'");
  }
  return *value;
}

bool pixel_overlap(const PixelRect& a, const PixelRect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h &&
         b.y < a.y + a.h;
}

ViewSpec view_from_json(const json& j, const std::string& path,
                        bool layout_required) {
  expect_object(j, path);
  ViewSpec view;
  view.id = get_string(j, path, "id");
  if (view.id.empty()) throw SchemaError(join_path(path, "id"), "empty id");
  view.mark = get_enum<Mark>(j, path, "mark", parse_mark);

  const std::string fields_path = join_path(path, "fields");
  const json& fields = member(j, path, "fields");
  expect_array(fields, fields_path);
  std::set<std::string> names;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string fp = join_path(fields_path, i);
    expect_object(fields[i], fp);
    DataField f;
    f.name = get_string(fields[i], fp, "name");
    if (f.name.empty()) throw SchemaError(join_path(fp, "name"), "empty name");
    if (!names.insert(f.name).second) {
      throw SchemaError(join_path(fp, "name"),
                        "duplicate field name '" + f.name + "'");
    }
    f.dtype = get_enum<DataType>(fields[i], fp, "dtype", parse_data_type);
    f.op = get_enum<DataOp>(fields[i], fp, "op", parse_data_op);
    view.fields.push_back(std::move(f));
  }

  const std::string enc_path = join_path(path, "encodings");
  const json& enc = member(j, path, "encodings");
  expect_object(enc, enc_path);
  for (const auto& [key, value] : enc.items()) {
    auto c = lookup<Channel>(kChannelNames, key);
    const std::string cp = join_path(enc_path, key);
    if (!c) throw SchemaError(cp, "unknown channel");
    expect_array(value, cp);
    auto& list = view.encodings[static_cast<int>(*c)];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const std::string ep = join_path(cp, i);
      if (!value[i].is_string()) throw SchemaError(ep, "expected a string");
      std::string name = value[i].get<std::string>();
      if (!names.count(name)) {
        throw SchemaError(ep, "encoded field '" + name +
                                  "' is not declared in fields");
      }
      list.push_back(std::move(name));
    }
  }

  if (j.contains("layout") || layout_required) {
    const std::string lp = join_path(path, "layout");
    const json& l = member(j, path, "layout");
    expect_object(l, lp);
    PixelRect r{get_number(l, lp, "x_px"), get_number(l, lp, "y_px"),
                get_number(l, lp, "w_px"), get_number(l, lp, "h_px")};
    if (r.w <= 0) throw SchemaError(join_path(lp, "w_px"), "must be positive");
    if (r.h <= 0) throw SchemaError(join_path(lp, "h_px"), "must be positive");
    view.layout = r;
  }
  return view;
}

json view_to_json(const ViewSpec& v) {
  json fields = json::array();
  for (const auto& f : v.fields) {
    fields.push_back(json{{"name", f.name},
                          {"dtype", std::string(to_string(f.dtype))},
                          {"op", std::string(to_string(f.op))}});
  }
  json enc = json::object();
  for (int c = 0; c < kNumChannels; ++c) {
    enc[std::string(kChannelNames[c])] = v.encodings[c];
  }
  json out{{"id", v.id},
           {"mark", std::string(to_string(v.mark))},
           {"fields", std::move(fields)},
           {"encodings", std::move(enc)}};
  if (v.layout) {
    out["layout"] = json{{"x_px", v.layout->x},
                         {"y_px", v.layout->y},
                         {"w_px", v.layout->w},
                         {"h_px", v.layout->h}};
  }
  return out;
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
}

long round_half_away(double v) { return std::lround(v); }

// Snaps [lo, lo+len) in pixels onto [0, n] gridlines.
std::pair<int, int> snap_interval(double lo, double len, double extent,
                                  int n) {
  const double scale = n / extent;
  long a = round_half_away(lo * scale);
  long b = round_half_away((lo + len) * scale);
  a = std::clamp<long>(a, 0, n);
  b = std::clamp<long>(b, 0, n);
  if (b - a < 1) {
    b = a + 1;
    if (b > n) {
      b = n;
      a = n - 1;
    }
  }
  return {static_cast<int>(a), static_cast<int>(b - a)};
}

}  // namespace

std::string_view to_string(DataType t) { return kDataTypeNames[static_cast<int>(t)]; }
std::string_view to_string(DataOp op) { return kDataOpNames[static_cast<int>(op)]; }
std::string_view to_string(Mark m) { return kMarkNames[static_cast<int>(m)]; }
std::string_view to_string(Channel c) { return kChannelNames[static_cast<int>(c)]; }
std::string_view to_string(CoordKind k) {
  return k == CoordKind::kFilter ? "filter" : "brush";
}

std::optional<DataType> parse_data_type(std::string_view s) {
  return lookup<DataType>(kDataTypeNames, s);
}
std::optional<DataOp> parse_data_op(std::string_view s) {
  return lookup<DataOp>(kDataOpNames, s);
}
std::optional<Mark> parse_mark(std::string_view s) {
  return lookup<Mark>(kMarkNames, s);
}
std::optional<CoordKind> parse_coord_kind(std::string_view s) {
  if (s == "filter") return CoordKind::kFilter;
  if (s == "brush") return CoordKind::kBrush;
  return std::nullopt;
}

DashboardSpec dashboard_from_json(const json& doc) {
  const std::string root;
  expect_object(doc, root);
  DashboardSpec d;
  d.id = get_string(doc, root, "id");
  if (d.id.empty()) throw SchemaError("/id", "empty id");

  const json& canvas = member(doc, root, "canvas");
  expect_object(canvas, "/canvas");
  d.canvas.width_px = get_number(canvas, "/canvas", "width_px");
  d.canvas.height_px = get_number(canvas, "/canvas", "height_px");
  if (d.canvas.width_px <= 0) {
    throw SchemaError("/canvas/width_px", "must be positive");
  }
  if (d.canvas.height_px <= 0) {
    throw SchemaError("/canvas/height_px", "must be positive");
  }

  const json& views = member(doc, root, "views");
  expect_array(views, "/views");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::string vp = join_path("/views", i);
    ViewSpec v = view_from_json(views[i], vp, /*layout_required=*/true);
    if (!index.emplace(v.id, i).second) {
      throw SchemaError(join_path(vp, "id"), "duplicate view id '" + v.id + "'");
    }
    d.views.push_back(std::move(v));
  }
  if (d.views.size() < 2) {
    throw SchemaError("/views", "a dashboard needs at least 2 views");
  }
  for (std::size_t i = 0; i < d.views.size(); ++i) {
    for (std::size_t j = i + 1; j < d.views.size(); ++j) {
      if (pixel_overlap(*d.views[i].layout, *d.views[j].layout)) {
        throw SchemaError(join_path(join_path("/views", j), "layout"),
                          "view '" + d.views[j].id + "' overlaps view '" +
                              d.views[i].id + "'");
      }
    }
  }

  const json& coords = member(doc, root, "coordinations");
  expect_array(coords, "/coordinations");
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const std::string cp = join_path("/coordinations", i);
    expect_object(coords[i], cp);
    Coordination c;
    c.source = get_string(coords[i], cp, "source");
    c.target = get_string(coords[i], cp, "target");
    c.kind = get_enum<CoordKind>(coords[i], cp, "kind", parse_coord_kind);
    if (!index.count(c.source)) {
      throw SchemaError(join_path(cp, "source"),
                        "unknown view id '" + c.source + "'");
    }
    if (!index.count(c.target)) {
      throw SchemaError(join_path(cp, "target"),
                        "unknown view id '" + c.target + "'");
    }
    if (c.source == c.target) {
      throw SchemaError(join_path(cp, "target"), "source equals target");
    }
    if (!seen.emplace(c.source, c.target).second) {
      throw SchemaError(cp, "duplicate coordination " + c.source + " -> " +
                                c.target);
    }
    d.coordinations.push_back(std::move(c));
  }
  return d;
}

DashboardSpec parse_dashboard(std::string_view json_text) {
  return dashboard_from_json(parse_json_text(json_text));
}

json to_json(const DashboardSpec& d) {
  json views = json::array();
  for (const auto& v : d.views) views.push_back(view_to_json(v));
  json coords = json::array();
  for (const auto& c : d.coordinations) {
    coords.push_back(json{{"source", c.source},
                          {"target", c.target},
                          {"kind", std::string(to_string(c.kind))}});
  }
  return json{{"id", d.id},
              {"canvas",
               {{"width_px", d.canvas.width_px},
                {"height_px", d.canvas.height_px}}},
              {"views", std::move(views)},
              {"coordinations", std::move(coords)}};
}

std::string serialize_dashboard(const DashboardSpec& d) {
  return to_json(d).dump(2) + "\n";
}

std::vector<ViewSpec> parse_views(std::string_view json_text) {
  const json doc = parse_json_text(json_text);
  expect_object(doc, "");
  const json& views = member(doc, "", "views");
  expect_array(views, "/views");
  std::vector<ViewSpec> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const std::string vp = join_path("/views", i);
    ViewSpec v = view_from_json(views[i], vp, /*layout_required=*/false);
    if (!ids.insert(v.id).second) {
      throw SchemaError(join_path(vp, "id"), "duplicate view id '" + v.id + "'");
    }
    out.push_back(std::move(v));
  }
  if (out.empty()) throw SchemaError("/views", "at least one view required");
  return out;
}

json views_to_json(std::span<const ViewSpec> views) {
  json arr = json::array();
  for (const auto& v : views) arr.push_back(view_to_json(v));
  return json{{"views", std::move(arr)}};
}

std::vector<GridRect> snap_to_grid(const DashboardSpec& d, int n) {
  if (n < 1) throw InputError("grid resolution must be at least 1");
  std::vector<GridRect> rects;
  rects.reserve(d.views.size());
  for (const auto& v : d.views) {
    if (!v.layout) {
      throw InputError("view '" + v.id + "' has no layout to normalize");
    }
    auto [gx, gw] = snap_interval(v.layout->x, v.layout->w, d.canvas.width_px, n);
    auto [gy, gh] = snap_interval(v.layout->y, v.layout->h, d.canvas.height_px, n);
    rects.push_back(GridRect{gx, gy, gw, gh});
  }
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      if (rects[i].overlaps(rects[j])) {
        throw InputError("snapping collision in dashboard '" + d.id +
                         "': views '" + d.views[i].id + "' and '" +
                         d.views[j].id + "' map to overlapping cells");
      }
    }
  }
  return rects;
}

std::map<std::string, GridArrangement> normalize_to_grid(
    const DashboardSpec& d, int n) {
  const auto rects = snap_to_grid(d, n);
  std::map<std::string, GridArrangement> out;
  for (std::size_t i = 0; i < rects.size(); ++i) {
    out.emplace(d.views[i].id, GridArrangement{d.views[i].id, rects[i]});
  }
  return out;
}

StatsReport& StatsReport::operator+=(const StatsReport& other) {
  dashboards += other.dashboards;
  views += other.views;
  for (const auto& [k, v] : other.view_count) view_count[k] += v;
  for (const auto& [k, v] : other.marks) marks[k] += v;
  for (const auto& [k, v] : other.coordination) coordination[k] += v;
  return *this;
}

StatsReport corpus_stats(std::span<const DashboardSpec> corpus) {
  if (corpus.empty()) throw InputError("corpus_stats needs a non-empty corpus");
  StatsReport r;
  for (const auto& d : corpus) {
    ++r.dashboards;
    r.views += static_cast<std::int64_t>(d.views.size());
    ++r.view_count[static_cast<int>(d.views.size())];
    for (const auto& v : d.views) ++r.marks[v.mark];
    const auto n = static_cast<std::int64_t>(d.views.size());
    std::int64_t linked = 0;
    for (const auto& c : d.coordinations) {
      ++r.coordination[std::string(to_string(c.kind))];
      ++linked;
    }
    r.coordination["none"] += n * (n - 1) - linked;
  }
  return r;
}

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

template <typename Map, typename KeyFn>
json distribution(const Map& counts, KeyFn key) {
  std::int64_t total = 0;
  for (const auto& [k, v] : counts) total += v;
  json c = json::object();
  json f = json::object();
  for (const auto& [k, v] : counts) {
    c[key(k)] = v;
    f[key(k)] = total ? round6(static_cast<double>(v) / total) : 0.0;
  }
  return json{{"counts", std::move(c)}, {"fractions", std::move(f)}};
}

}  // namespace

json to_json(const StatsReport& r) {
  return json{
      {"dashboards", r.dashboards},
      {"views", r.views},
      {"view_count",
       distribution(r.view_count, [](int k) { return std::to_string(k); })},
      {"marks",
       distribution(r.marks, [](Mark m) { return std::string(to_string(m)); })},
      {"coordination",
       distribution(r.coordination, [](const std::string& s) { return s; })}};
}

std::string format_histogram(const StatsReport& r) {
  std::ostringstream out;
  auto bar = [&](std::int64_t v, std::int64_t max) {
    const int width = max > 0 ? static_cast<int>(40.0 * v / max + 0.5) : 0;
    return std::string(static_cast<std::size_t>(width), '#');
  };
  auto section = [&](const std::string& title, const auto& counts, auto key) {
    std::int64_t max = 0;
    for (const auto& [k, v] : counts) max = std::max(max, v);
    out << title << "\n";
    for (const auto& [k, v] : counts) {
      std::string label = key(k);
      label.resize(std::max<std::size_t>(label.size(), 12), ' ');
      out << "  " << label << " " << v << "\t" << bar(v, max) << "\n";
    }
  };
  out << "dashboards: " << r.dashboards << ", views: " << r.views << "\n";
  section("views per dashboard", r.view_count,
          [](int k) { return std::to_string(k); });
  section("mark types", r.marks,
          [](Mark m) { return std::string(to_string(m)); });
  section("coordination per ordered view pair", r.coordination,
          [](const std::string& s) { return s; });
  return out.str();
}

}  // namespace dminer
