#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>

#include "dminer/oracle.hpp"

namespace dminer::oracle {

namespace {

enum class K {
  kCountType, kCountOp, kNFields, kMark, kNFieldsCh, kUsesCh,
  kGX, kGY, kGW, kGH, kPX, kPY, kPW, kPH, kArea, kAspect, kCX, kCY,
  kSameTotal, kAMore, kSharedCount, kSharedAny, kSharedFrac,
  kEqualCount, kOverlapping, kCountOverlap, kSameMark,
  kALarger, kSameW, kSameH, kSameArea, kDistance, kAngle, kNeighbour, kOctant,
  kHasAny, kAFiltersB, kBFiltersA, kABrushesB, kBBrushesA,
};

struct Entry {
  NaiveFeatureInfo info;
  K kind;
  int arg;
};

const char* kTypes[] = {"numerical", "nominal", "ordinal"};
const char* kOps[] = {"none", "count", "sum", "avg", "min", "max"};
const char* kChannels[] = {"x", "y", "color", "size", "shape"};
// Direction of B as seen from A, counterclockwise from east, and the
// matching name (which describes A relative to B).
const char* kDirections[] = {"a_left_of_b",  "a_below_left_of_b", "a_below_b",
                             "a_below_right_of_b", "a_right_of_b",
                             "a_above_right_of_b", "a_above_b",
                             "a_above_left_of_b"};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    auto add = [&](std::string name, bool numeric, bool pair, K kind, int arg = 0) {
      t.push_back(Entry{{std::move(name), numeric, pair}, kind, arg});
    };
    for (int i = 0; i < 3; ++i) add(std::string("count_") + kTypes[i], true, false, K::kCountType, i);
    for (int i = 0; i < 6; ++i) add(std::string("count_op_") + kOps[i], true, false, K::kCountOp, i);
    add("n_fields", true, false, K::kNFields);
    add("mark", false, false, K::kMark);
    for (int c = 0; c < 5; ++c) add(std::string("n_fields_") + kChannels[c], true, false, K::kNFieldsCh, c);
    for (int c = 0; c < 5; ++c) add(std::string("uses_") + kChannels[c], false, false, K::kUsesCh, c);
    add("gx", true, false, K::kGX);
    add("gy", true, false, K::kGY);
    add("gw", true, false, K::kGW);
    add("gh", true, false, K::kGH);
    add("px_x", true, false, K::kPX);
    add("px_y", true, false, K::kPY);
    add("px_w", true, false, K::kPW);
    add("px_h", true, false, K::kPH);
    add("area", true, false, K::kArea);
    add("aspect", true, false, K::kAspect);
    add("cx", true, false, K::kCX);
    add("cy", true, false, K::kCY);

    add("same_total_fields", false, true, K::kSameTotal);
    add("a_more_fields", false, true, K::kAMore);
    add("shared_field_count", true, true, K::kSharedCount);
    add("shared_any", false, true, K::kSharedAny);
    add("shared_fraction", true, true, K::kSharedFrac);
    for (int c = 0; c < 5; ++c) {
      add(std::string("is_equal_count_") + kChannels[c], false, true, K::kEqualCount, c);
      add(std::string("is_overlapping_") + kChannels[c], false, true, K::kOverlapping, c);
      add(std::string("count_overlapping_") + kChannels[c], true, true, K::kCountOverlap, c);
    }
    add("same_mark", false, true, K::kSameMark);
    add("a_larger_area", false, true, K::kALarger);
    add("same_width", false, true, K::kSameW);
    add("same_height", false, true, K::kSameH);
    add("same_area", false, true, K::kSameArea);
    add("distance", true, true, K::kDistance);
    add("angle", true, true, K::kAngle);
    add("is_neighbour", false, true, K::kNeighbour);
    for (int d = 0; d < 8; ++d) add(kDirections[d], false, true, K::kOctant, d);
    add("has_any", false, true, K::kHasAny);
    add("a_filters_b", false, true, K::kAFiltersB);
    add("b_filters_a", false, true, K::kBFiltersA);
    add("a_brushes_b", false, true, K::kABrushesB);
    add("b_brushes_a", false, true, K::kBBrushesA);
    return t;
  }();
  return table;
}

int entry_index(const std::string& name) {
  static const std::unordered_map<std::string, int> index = [] {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < entries().size(); ++i) {
      m[entries()[i].info.name] = static_cast<int>(i);
    }
    return m;
  }();
  auto it = index.find(name);
  if (it == index.end()) throw ConsistencyError("oracle does not know feature '" + name + "'");
  return it->second;
}

std::set<std::string> names_of(const ViewSpec& v) {
  std::set<std::string> s;
  for (const auto& f : v.fields) s.insert(f.name);
  return s;
}

int channel_overlap(const ViewSpec& a, const ViewSpec& b, int c) {
  std::set<std::string> sa(a.encodings[c].begin(), a.encodings[c].end());
  std::set<std::string> sb(b.encodings[c].begin(), b.encodings[c].end());
  int n = 0;
  for (const auto& x : sa) n += sb.count(x) ? 1 : 0;
  return n;
}

bool touching(const GridRect& a, const GridRect& b) {
  for (int y = a.y; y < a.y + a.h; ++y) {
    for (int x = a.x; x < a.x + a.w; ++x) {
      const int nx[] = {x - 1, x + 1, x, x};
      const int ny[] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] >= b.x && nx[k] < b.x + b.w && ny[k] >= b.y && ny[k] < b.y + b.h) {
          return true;
        }
      }
    }
  }
  return false;
}

int direction(const GridRect& a, const GridRect& b) {
  const double dx = (b.x + 0.5 * b.w) - (a.x + 0.5 * a.w);
  const double dy = (a.y + 0.5 * a.h) - (b.y + 0.5 * b.h);
  const double t = std::tan(std::numbers::pi / 8);
  if (std::abs(dy) <= t * std::abs(dx)) return dx >= 0 ? 0 : 4;
  if (std::abs(dx) <= t * std::abs(dy)) return dy > 0 ? 2 : 6;
  if (dx > 0) return dy > 0 ? 1 : 7;
  return dy > 0 ? 3 : 5;
}

double value_of(int index, const NaiveSubject& s) {
  const Entry& e = entries()[index];
  const ViewSpec& a = *s.a;
  const GridRect& r = s.ra;
  switch (e.kind) {
    case K::kCountType:
      return static_cast<double>(std::count_if(a.fields.begin(), a.fields.end(), [&](const DataField& f) {
        return to_string(f.dtype) == kTypes[e.arg];
      }));
    case K::kCountOp:
      return static_cast<double>(std::count_if(a.fields.begin(), a.fields.end(), [&](const DataField& f) {
        return to_string(f.op) == kOps[e.arg];
      }));
    case K::kNFields: return static_cast<double>(a.fields.size());
    case K::kMark: return static_cast<double>(static_cast<int>(a.mark));
    case K::kNFieldsCh: return static_cast<double>(a.encodings[e.arg].size());
    case K::kUsesCh: return a.encodings[e.arg].empty() ? 0.0 : 1.0;
    case K::kGX: return r.x;
    case K::kGY: return r.y;
    case K::kGW: return r.w;
    case K::kGH: return r.h;
    case K::kPX: return r.x / 4.0;
    case K::kPY: return r.y / 4.0;
    case K::kPW: return r.w / 4.0;
    case K::kPH: return r.h / 4.0;
    case K::kArea: return r.w * r.h;
    case K::kAspect: return static_cast<double>(r.w) / r.h;
    case K::kCX: return r.x + 0.5 * r.w;
    case K::kCY: return r.y + 0.5 * r.h;
    default: break;
  }
  const ViewSpec& b = *s.b;
  switch (e.kind) {
    case K::kSameTotal: return names_of(a).size() == names_of(b).size();
    case K::kAMore: return names_of(a).size() > names_of(b).size();
    case K::kSharedCount:
    case K::kSharedAny:
    case K::kSharedFrac: {
      const auto na = names_of(a), nb = names_of(b);
      std::set<std::string> all = na;
      all.insert(nb.begin(), nb.end());
      double shared = 0;
      for (const auto& x : na) shared += nb.count(x);
      if (e.kind == K::kSharedCount) return shared;
      if (e.kind == K::kSharedAny) return shared > 0;
      return all.empty() ? 0.0 : shared / static_cast<double>(all.size());
    }
    case K::kEqualCount: return a.encodings[e.arg].size() == b.encodings[e.arg].size();
    case K::kOverlapping: return channel_overlap(a, b, e.arg) > 0;
    case K::kCountOverlap: return channel_overlap(a, b, e.arg);
    case K::kSameMark: return a.mark == b.mark;
    case K::kALarger: return s.ra.w * s.ra.h > s.rb.w * s.rb.h;
    case K::kSameW: return s.ra.w == s.rb.w;
    case K::kSameH: return s.ra.h == s.rb.h;
    case K::kSameArea: return s.ra.w * s.ra.h == s.rb.w * s.rb.h;
    case K::kDistance: {
      const double dx = (s.rb.x + 0.5 * s.rb.w) - (s.ra.x + 0.5 * s.ra.w);
      const double dy = (s.rb.y + 0.5 * s.rb.h) - (s.ra.y + 0.5 * s.ra.h);
      return std::sqrt(dx * dx + dy * dy);
    }
    case K::kAngle: {
      const double dx = (s.rb.x + 0.5 * s.rb.w) - (s.ra.x + 0.5 * s.ra.w);
      const double dy = (s.ra.y + 0.5 * s.ra.h) - (s.rb.y + 0.5 * s.rb.h);
      double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      return deg < 0 ? deg + 360.0 : deg;
    }
    case K::kNeighbour: return touching(s.ra, s.rb);
    case K::kOctant: return direction(s.ra, s.rb) == e.arg;
    case K::kHasAny: return s.ab != LinkState::kNone || s.ba != LinkState::kNone;
    case K::kAFiltersB: return s.ab == LinkState::kFilter;
    case K::kBFiltersA: return s.ba == LinkState::kFilter;
    case K::kABrushesB: return s.ab == LinkState::kBrush;
    case K::kBBrushesA: return s.ba == LinkState::kBrush;
    default: break;
  }
  return 0.0;
}

bool is_link_feature(const std::string& name) {
  return name == "has_any" || name == "a_filters_b" || name == "b_filters_a" ||
         name == "a_brushes_b" || name == "b_brushes_a";
}

}  // namespace

const std::vector<NaiveFeatureInfo>& naive_features() {
  static const std::vector<NaiveFeatureInfo> infos = [] {
    std::vector<NaiveFeatureInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

double naive_value(const std::string& feature, const NaiveSubject& s) {
  return value_of(entry_index(feature), s);
}

bool NaiveRules::Lit::holds(const NaiveSubject& s) const {
  const double v = value_of(feature, s);
  bool on;
  if (category >= 0) {
    on = static_cast<int>(v) == category;
  } else if (numeric) {
    on = v >= threshold;
  } else {
    on = v != 0.0;
  }
  return on != negated;
}

NaiveRules::NaiveRules(std::span<const DecisionRule> rules, const Thresholds& thresholds) {
  auto resolve = [&](const Literal& l, bool& pair, bool& links) {
    Lit lit;
    lit.negated = l.negated;
    std::string name = l.feature;
    if (name.rfind("mark=", 0) == 0) {
      const auto mark = parse_mark(name.substr(5));
      if (!mark) throw ConsistencyError("oracle does not know feature '" + name + "'");
      lit.category = static_cast<int>(*mark);
      name = "mark";
    }
    lit.feature = entry_index(name);
    const auto& info = entries()[lit.feature].info;
    lit.numeric = info.numeric;
    if (info.numeric) {
      auto it = thresholds.find(name);
      if (it == thresholds.end()) {
        throw ConsistencyError("oracle has no threshold for '" + name + "'");
      }
      lit.threshold = it->second;
    }
    pair = pair || info.pair;
    links = links || is_link_feature(name);
    return lit;
  };
  for (const auto& r : rules) {
    Rule out;
    out.importance = r.importance;
    out.pair = false;
    out.links = false;
    for (const auto& l : r.condition) out.condition.push_back(resolve(l, out.pair, out.links));
    out.target = resolve(r.target, out.pair, out.links);
    // Mining over ordered pairs happens for every mapping except the one
    // between single-view groups; use the same subject kind here.
    out.pair = r.mapping != "SDE->SA";
    rules_.push_back(std::move(out));
  }
}

Outcome NaiveRules::evaluate(std::size_t r, const NaiveSubject& s) const {
  const Rule& rule = rules_[r];
  for (const auto& l : rule.condition) {
    if (!l.holds(s)) return {};
  }
  return Outcome{true, rule.target.holds(s)};
}

Tally NaiveRules::tally(const NaiveSubject& s, bool pair) const {
  Tally t;
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    if (rules_[r].pair != pair) continue;
    const Outcome o = evaluate(r, s);
    if (!o.fired) continue;
    (o.obeyed ? t.obeyed : t.cost) += rules_[r].importance;
  }
  return t;
}

}  // namespace dminer::oracle
