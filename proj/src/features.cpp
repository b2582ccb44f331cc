#include "dminer/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "dminer/common.hpp"

namespace dminer {

namespace {

constexpr std::array<std::string_view, 5> kGroupNames = {"SDE", "SA", "PDE",
                                                         "PA", "PC"};

// Relative-position booleans, one per 45 degree octant of the angle of B's
// center seen from A's center (0 = east, counterclockwise). Each names A's
// position relative to B.
constexpr std::array<std::string_view, 8> kOctantNames = {
    "a_left_of_b",        "a_below_left_of_b", "a_below_b",
    "a_below_right_of_b", "a_right_of_b",      "a_above_right_of_b",
    "a_above_b",          "a_above_left_of_b"};

std::vector<FeatureDef> make_single() {
  using K = FeatureKind;
  using G = FeatureGroup;
  std::vector<FeatureDef> defs;
  auto add = [&](std::string name, K kind, G group) {
    defs.push_back(FeatureDef{std::move(name), kind, group, {}});
  };
  for (int t = 0; t < kNumDataTypes; ++t) {
    add("count_" + std::string(to_string(static_cast<DataType>(t))), K::kCount,
        G::kSDE);
  }
  for (int op = 0; op < kNumDataOps; ++op) {
    add("count_op_" + std::string(to_string(static_cast<DataOp>(op))),
        K::kCount, G::kSDE);
  }
  add("n_fields", K::kCount, G::kSDE);

  FeatureDef mark{"mark", K::kCategorical, G::kSDE, {}};
  for (int m = 0; m < kNumMarks; ++m) {
    mark.categories.emplace_back(to_string(static_cast<Mark>(m)));
  }
  defs.push_back(std::move(mark));
  for (int c = 0; c < kNumChannels; ++c) {
    add("n_fields_" + std::string(to_string(static_cast<Channel>(c))),
        K::kCount, G::kSDE);
  }
  for (int c = 0; c < kNumChannels; ++c) {
    add("uses_" + std::string(to_string(static_cast<Channel>(c))), K::kBoolean,
        G::kSDE);
  }

  for (const char* n : {"gx", "gy", "gw", "gh"}) add(n, K::kCount, G::kSA);
  for (const char* n : {"px_x", "px_y", "px_w", "px_h"}) {
    add(n, K::kScalar, G::kSA);
  }
  add("area", K::kCount, G::kSA);
  add("aspect", K::kScalar, G::kSA);
  add("cx", K::kScalar, G::kSA);
  add("cy", K::kScalar, G::kSA);
  return defs;
}

std::vector<FeatureDef> make_pair() {
  using K = FeatureKind;
  using G = FeatureGroup;
  std::vector<FeatureDef> defs;
  auto add = [&](std::string name, K kind, G group) {
    defs.push_back(FeatureDef{std::move(name), kind, group, {}});
  };
  add("same_total_fields", K::kBoolean, G::kPDE);
  add("a_more_fields", K::kBoolean, G::kPDE);
  add("shared_field_count", K::kCount, G::kPDE);
  add("shared_any", K::kBoolean, G::kPDE);
  add("shared_fraction", K::kScalar, G::kPDE);
  for (int c = 0; c < kNumChannels; ++c) {
    const std::string ch(to_string(static_cast<Channel>(c)));
    add("is_equal_count_" + ch, K::kBoolean, G::kPDE);
    add("is_overlapping_" + ch, K::kBoolean, G::kPDE);
    add("count_overlapping_" + ch, K::kCount, G::kPDE);
  }
  add("same_mark", K::kBoolean, G::kPDE);

  add("a_larger_area", K::kBoolean, G::kPA);
  add("same_width", K::kBoolean, G::kPA);
  add("same_height", K::kBoolean, G::kPA);
  add("same_area", K::kBoolean, G::kPA);
  add("distance", K::kScalar, G::kPA);
  add("angle", K::kScalar, G::kPA);
  add("is_neighbour", K::kBoolean, G::kPA);
  for (auto n : kOctantNames) add(std::string(n), K::kBoolean, G::kPA);

  add("has_any", K::kBoolean, G::kPC);
  add("a_filters_b", K::kBoolean, G::kPC);
  add("b_filters_a", K::kBoolean, G::kPC);
  add("a_brushes_b", K::kBoolean, G::kPC);
  add("b_brushes_a", K::kBoolean, G::kPC);
  return defs;
}

std::vector<BitDef> make_bits(const std::vector<FeatureDef>& defs) {
  std::vector<BitDef> bits;
  for (int f = 0; f < static_cast<int>(defs.size()); ++f) {
    const auto& d = defs[f];
    if (d.kind == FeatureKind::kCategorical) {
      for (int c = 0; c < static_cast<int>(d.categories.size()); ++c) {
        bits.push_back(BitDef{d.name + "=" + d.categories[c], d.group, f, c});
      }
    } else {
      bits.push_back(BitDef{d.name, d.group, f, -1});
    }
  }
  return bits;
}

std::set<std::string_view> field_names(const ViewSpec& v) {
  std::set<std::string_view> out;
  for (const auto& f : v.fields) out.insert(f.name);
  return out;
}

std::size_t intersection_size(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  std::set<std::string_view> sa(a.begin(), a.end());
  std::set<std::string_view> seen;
  std::size_t n = 0;
  for (const auto& x : b) {
    if (sa.count(x) && seen.insert(x).second) ++n;
  }
  return n;
}

// Two grid rectangles share an edge segment of positive length.
bool edge_adjacent(const GridRect& a, const GridRect& b) {
  const int overlap_x = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const int overlap_y = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  const bool vertical_touch = (a.x + a.w == b.x || b.x + b.w == a.x);
  const bool horizontal_touch = (a.y + a.h == b.y || b.y + b.h == a.y);
  return (vertical_touch && overlap_y > 0) || (horizontal_touch && overlap_x > 0);
}

}  // namespace

std::string_view to_string(FeatureGroup g) {
  return kGroupNames[static_cast<int>(g)];
}

std::optional<FeatureGroup> parse_feature_group(std::string_view s) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i) {
    if (kGroupNames[i] == s) return static_cast<FeatureGroup>(i);
  }
  return std::nullopt;
}

Section section_of(FeatureGroup g) {
  return (g == FeatureGroup::kSDE || g == FeatureGroup::kSA) ? Section::kSingle
                                                             : Section::kPair;
}

FeatureRegistry::FeatureRegistry()
    : single_(make_single()),
      pair_(make_pair()),
      single_bits_(make_bits(single_)),
      pair_bits_(make_bits(pair_)) {}

const FeatureRegistry& FeatureRegistry::get() {
  static const FeatureRegistry registry;
  return registry;
}

const BitDef& FeatureRegistry::bit(BitCode code) const {
  return code < kPairBitOffset ? single_bits_.at(code)
                               : pair_bits_.at(code - kPairBitOffset);
}

std::optional<BitCode> FeatureRegistry::find_bit(std::string_view name) const {
  for (std::size_t i = 0; i < single_bits_.size(); ++i) {
    if (single_bits_[i].name == name) return static_cast<BitCode>(i);
  }
  for (std::size_t i = 0; i < pair_bits_.size(); ++i) {
    if (pair_bits_[i].name == name) {
      return static_cast<BitCode>(i) + kPairBitOffset;
    }
  }
  return std::nullopt;
}

std::optional<std::pair<Section, int>> FeatureRegistry::find_feature(
    std::string_view name) const {
  for (std::size_t i = 0; i < single_.size(); ++i) {
    if (single_[i].name == name) return std::pair{Section::kSingle, int(i)};
  }
  for (std::size_t i = 0; i < pair_.size(); ++i) {
    if (pair_[i].name == name) return std::pair{Section::kPair, int(i)};
  }
  return std::nullopt;
}

int FeatureRegistry::feature_index(Section s, std::string_view name) const {
  auto defs = features(s);
  for (std::size_t i = 0; i < defs.size(); ++i) {
    if (defs[i].name == name) return static_cast<int>(i);
  }
  throw ConsistencyError("unknown feature '" + std::string(name) + "'");
}

const RawValue& RawFeatures::at(std::string_view name) const {
  const int i = FeatureRegistry::get().feature_index(section, name);
  return values.at(i);
}

std::vector<double> numeric_values(const RawFeatures& raw) {
  auto defs = FeatureRegistry::get().features(raw.section);
  std::vector<double> out(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const auto& v = raw.values.at(i);
    switch (defs[i].kind) {
      case FeatureKind::kBoolean:
        out[i] = std::get<bool>(v) ? 1.0 : 0.0;
        break;
      case FeatureKind::kCount:
        out[i] = static_cast<double>(std::get<std::int64_t>(v));
        break;
      case FeatureKind::kScalar:
        out[i] = std::get<double>(v);
        break;
      case FeatureKind::kCategorical: {
        const auto& cats = defs[i].categories;
        auto it = std::find(cats.begin(), cats.end(), std::get<std::string>(v));
        if (it == cats.end()) {
          throw ConsistencyError("unknown category '" +
                                 std::get<std::string>(v) + "' for " +
                                 defs[i].name);
        }
        out[i] = static_cast<double>(it - cats.begin());
        break;
      }
    }
  }
  return out;
}

void single_view_values(const ViewSpec& view, const GridRect& rect,
                        const std::optional<Canvas>& canvas,
                        std::span<double> out, int grid_n) {
  std::fill(out.begin(), out.end(), 0.0);
  int k = 0;
  std::array<int, kNumDataTypes> by_type{};
  std::array<int, kNumDataOps> by_op{};
  for (const auto& f : view.fields) {
    ++by_type[static_cast<int>(f.dtype)];
    ++by_op[static_cast<int>(f.op)];
  }
  for (int t : by_type) out[k++] = t;
  for (int o : by_op) out[k++] = o;
  out[k++] = static_cast<double>(view.fields.size());
  out[k++] = static_cast<double>(static_cast<int>(view.mark));
  for (int c = 0; c < kNumChannels; ++c) {
    out[k++] = static_cast<double>(view.encodings[c].size());
  }
  for (int c = 0; c < kNumChannels; ++c) {
    out[k++] = view.encodings[c].empty() ? 0.0 : 1.0;
  }
  out[k++] = rect.x;
  out[k++] = rect.y;
  out[k++] = rect.w;
  out[k++] = rect.h;
  if (view.layout && canvas && canvas->width_px > 0 && canvas->height_px > 0) {
    out[k++] = view.layout->x / canvas->width_px;
    out[k++] = view.layout->y / canvas->height_px;
    out[k++] = view.layout->w / canvas->width_px;
    out[k++] = view.layout->h / canvas->height_px;
  } else {
    const double n = grid_n;
    out[k++] = rect.x / n;
    out[k++] = rect.y / n;
    out[k++] = rect.w / n;
    out[k++] = rect.h / n;
  }
  out[k++] = rect.area();
  out[k++] = static_cast<double>(rect.w) / rect.h;
  out[k++] = rect.x + rect.w / 2.0;
  out[k++] = rect.y + rect.h / 2.0;
}

void pair_values(const ViewSpec& a, const ViewSpec& b, const GridRect& ra,
                 const GridRect& rb, LinkState a_to_b, LinkState b_to_a,
                 std::span<double> out) {
  int k = 0;
  const auto fa = field_names(a);
  const auto fb = field_names(b);
  std::size_t shared = 0;
  for (auto n : fa) shared += fb.count(n);
  const std::size_t uni = fa.size() + fb.size() - shared;
  out[k++] = fa.size() == fb.size();
  out[k++] = fa.size() > fb.size();
  out[k++] = static_cast<double>(shared);
  out[k++] = shared > 0;
  out[k++] = uni ? static_cast<double>(shared) / static_cast<double>(uni) : 0.0;
  for (int c = 0; c < kNumChannels; ++c) {
    const auto& ea = a.encodings[c];
    const auto& eb = b.encodings[c];
    const std::size_t ov = intersection_size(ea, eb);
    out[k++] = ea.size() == eb.size();
    out[k++] = ov > 0;
    out[k++] = static_cast<double>(ov);
  }
  out[k++] = a.mark == b.mark;

  out[k++] = ra.area() > rb.area();
  out[k++] = ra.w == rb.w;
  out[k++] = ra.h == rb.h;
  out[k++] = ra.area() == rb.area();
  const double dx = (rb.x + rb.w / 2.0) - (ra.x + ra.w / 2.0);
  const double dy = (ra.y + ra.h / 2.0) - (rb.y + rb.h / 2.0);  // up is +
  out[k++] = std::hypot(dx, dy);
  double angle = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  if (angle < 0) angle += 360.0;
  out[k++] = angle;
  out[k++] = edge_adjacent(ra, rb);
  const int octant = static_cast<int>(std::floor((angle + 22.5) / 45.0)) % 8;
  for (int o = 0; o < 8; ++o) out[k++] = o == octant;

  set_link_values(a_to_b, b_to_a, out);
}

void set_link_values(LinkState a_to_b, LinkState b_to_a, std::span<double> out) {
  int k = kNumPairFeatures - 5;
  out[k++] = a_to_b != LinkState::kNone || b_to_a != LinkState::kNone;
  out[k++] = a_to_b == LinkState::kFilter;
  out[k++] = b_to_a == LinkState::kFilter;
  out[k++] = a_to_b == LinkState::kBrush;
  out[k++] = b_to_a == LinkState::kBrush;
}

namespace {

RawFeatures to_raw(Section section, std::span<const double> values) {
  const auto defs = FeatureRegistry::get().features(section);
  RawFeatures raw;
  raw.section = section;
  raw.values.reserve(defs.size());
  for (std::size_t i = 0; i < defs.size(); ++i) {
    switch (defs[i].kind) {
      case FeatureKind::kBoolean:
        raw.values.emplace_back(values[i] != 0.0);
        break;
      case FeatureKind::kCount:
        raw.values.emplace_back(static_cast<std::int64_t>(std::llround(values[i])));
        break;
      case FeatureKind::kScalar:
        raw.values.emplace_back(values[i]);
        break;
      case FeatureKind::kCategorical:
        raw.values.emplace_back(
            defs[i].categories.at(static_cast<std::size_t>(values[i])));
        break;
    }
  }
  return raw;
}

LinkState link_between(std::span<const Coordination> coords,
                       const std::string& source, const std::string& target) {
  for (const auto& c : coords) {
    if (c.source == source && c.target == target) {
      return c.kind == CoordKind::kFilter ? LinkState::kFilter
                                          : LinkState::kBrush;
    }
  }
  return LinkState::kNone;
}

}  // namespace

RawFeatures extract_single_view(const ViewSpec& view, const GridRect& rect,
                                const std::optional<Canvas>& canvas) {
  std::array<double, kNumSingleFeatures> values{};
  single_view_values(view, rect, canvas, values);
  RawFeatures raw = to_raw(Section::kSingle, values);
  raw.subject.a = view.id;
  return raw;
}

RawFeatures extract_pairwise(const ViewSpec& a, const ViewSpec& b,
                             const GridRect& ra, const GridRect& rb,
                             std::span<const Coordination> coords) {
  std::array<double, kNumPairFeatures> values{};
  pair_values(a, b, ra, rb, link_between(coords, a.id, b.id),
              link_between(coords, b.id, a.id), values);
  RawFeatures raw = to_raw(Section::kPair, values);
  raw.subject.a = a.id;
  raw.subject.b = b.id;
  return raw;
}

FeaturizedDashboard featurize(const DashboardSpec& d) {
  const auto rects = snap_to_grid(d);
  FeaturizedDashboard out;
  out.id = d.id;
  for (std::size_t i = 0; i < d.views.size(); ++i) {
    auto raw = extract_single_view(d.views[i], rects[i], d.canvas);
    raw.subject.dashboard = d.id;
    out.views.push_back(std::move(raw));
  }
  for (std::size_t i = 0; i < d.views.size(); ++i) {
    for (std::size_t j = 0; j < d.views.size(); ++j) {
      if (i == j) continue;
      auto raw = extract_pairwise(d.views[i], d.views[j], rects[i], rects[j],
                                  d.coordinations);
      raw.subject.dashboard = d.id;
      out.pairs.push_back(std::move(raw));
    }
  }
  return out;
}

nlohmann::json raw_to_json(const RawFeatures& raw) {
  const auto defs = FeatureRegistry::get().features(raw.section);
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t i = 0; i < defs.size(); ++i) {
    std::visit([&](const auto& v) { values[defs[i].name] = v; }, raw.values[i]);
  }
  return nlohmann::json{
      {"dashboard", raw.subject.dashboard},
      {"subject", raw.subject.label()},
      {"kind", raw.section == Section::kSingle ? "single" : "pair"},
      {"values", std::move(values)}};
}

}  // namespace dminer
