#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "dminer/mining.hpp"

namespace dminer {

namespace {

enum class Who { kA, kB, kAB, kNone };
enum class Verb { kBe, kHave, kUse, kShare, kSpan, kFilter, kBrush, kHold };
enum class Unit { kInteger, kPercent, kDecimal };

struct Phrase {
  Who who = Who::kA;
  Verb verb = Verb::kBe;
  std::string text;  // "{}" marks where a quantity goes
  std::string any;   // count features: wording for "at least one"
  Unit unit = Unit::kInteger;
  int min = 0;
  int max = 1 << 20;

  Phrase() = default;
  Phrase(Who w, Verb v, std::string t, std::string a = {}, Unit u = Unit::kInteger,
         int lo = 0, int hi = 1 << 20)
      : who(w), verb(v), text(std::move(t)), any(std::move(a)), unit(u), min(lo), max(hi) {}
};

const char* kMarkDisplay[] = {"Bar",      "Line",       "Area", "Circle", "Square",
                              "Shape",    "Text",       "Text table",
                              "Map",      "Pie",        "Gantt", "Polygon",
                              "Heatmap"};

std::string channel_place(const std::string& c) {
  if (c == "x") return "on X-axis";
  if (c == "y") return "on Y-axis";
  return "in " + c;
}

std::string channel_object(const std::string& c) {
  if (c == "x") return "the X-axis";
  if (c == "y") return "the Y-axis";
  return c;
}

const std::unordered_map<std::string, Phrase>& phrases() {
  static const std::unordered_map<std::string, Phrase> table = [] {
    std::unordered_map<std::string, Phrase> t;
    const Who A = Who::kA, AB = Who::kAB;
    auto count = [&](const std::string& name, Who who, Verb verb, std::string text,
                     std::string any) {
      t[name] = Phrase{who, verb, std::move(text), std::move(any)};
    };
    for (const char* type : {"numerical", "nominal", "ordinal"}) {
      const std::string s = std::string(type) + " fields";
      count(std::string("count_") + type, A, Verb::kHave, "{} " + s, s);
    }
    const std::pair<const char*, const char*> ops[] = {
        {"none", "fields without aggregation"},
        {"count", "fields aggregated by count"},
        {"sum", "fields aggregated by sum"},
        {"avg", "fields aggregated by average"},
        {"min", "fields aggregated by minimum"},
        {"max", "fields aggregated by maximum"}};
    for (const auto& [op, s] : ops) {
      count(std::string("count_op_") + op, A, Verb::kHave, std::string("{} ") + s, s);
    }
    count("n_fields", A, Verb::kHave, "{} fields", "fields");
    for (const char* c : {"x", "y", "color", "size", "shape"}) {
      const std::string place = channel_place(c);
      count(std::string("n_fields_") + c, A, Verb::kHave, "{} fields " + place,
            "fields " + place);
      t[std::string("uses_") + c] = Phrase{A, Verb::kUse, channel_object(c)};
      t[std::string("is_equal_count_") + c] =
          Phrase{AB, Verb::kUse, "the same number of fields " + place};
      const std::string same = c == std::string("x") || c == std::string("y")
                                   ? "the same fields " + place
                                   : std::string(c) + " for the same fields";
      t[std::string("is_overlapping_") + c] = Phrase{AB, Verb::kUse, same};
      count(std::string("count_overlapping_") + c, AB, Verb::kShare,
            "{} fields " + place, "fields " + place);
    }
    t["gx"] = Phrase{A, Verb::kBe, "in grid column {}", "", Unit::kInteger, 0, 3};
    t["gy"] = Phrase{A, Verb::kBe, "in grid row {}", "", Unit::kInteger, 0, 3};
    t["gw"] = Phrase{A, Verb::kBe, "of the width of {}", "", Unit::kInteger, 1, 4};
    t["gh"] = Phrase{A, Verb::kBe, "of the height of {}", "", Unit::kInteger, 1, 4};
    t["area"] = Phrase{A, Verb::kBe, "of the area of {} grid cells", "",
                       Unit::kInteger, 1, 16};
    t["px_x"] = Phrase{A, Verb::kBe, "placed {} of the canvas width from the left",
                       "", Unit::kPercent};
    t["px_y"] = Phrase{A, Verb::kBe, "placed {} of the canvas height from the top",
                       "", Unit::kPercent};
    t["px_w"] = Phrase{A, Verb::kSpan, "{} of the canvas width", "", Unit::kPercent};
    t["px_h"] = Phrase{A, Verb::kSpan, "{} of the canvas height", "", Unit::kPercent};
    t["aspect"] = Phrase{A, Verb::kHave, "an aspect ratio of {}", "", Unit::kDecimal};
    t["cx"] = Phrase{A, Verb::kHave, "a horizontal center at {} of the grid", "",
                     Unit::kPercent};
    t["cy"] = Phrase{A, Verb::kHave, "a vertical center at {} of the grid", "",
                     Unit::kPercent};

    t["same_total_fields"] = Phrase{AB, Verb::kHave, "the same number of fields"};
    t["a_more_fields"] = Phrase{A, Verb::kHave, "more fields than View B"};
    count("shared_field_count", AB, Verb::kShare, "{} fields", "fields");
    t["shared_any"] = Phrase{AB, Verb::kShare, "fields"};
    t["shared_fraction"] =
        Phrase{AB, Verb::kShare, "{} of the same fields", "", Unit::kPercent};
    t["same_mark"] = Phrase{AB, Verb::kBe, "of the same chart type"};

    t["a_larger_area"] = Phrase{A, Verb::kBe, "larger than View B"};
    t["same_width"] = Phrase{AB, Verb::kBe, "of the same width"};
    t["same_height"] = Phrase{AB, Verb::kBe, "of the same height"};
    t["same_area"] = Phrase{AB, Verb::kBe, "of the same size"};
    t["distance"] = Phrase{AB, Verb::kBe, "{} grid cells apart", "", Unit::kDecimal};
    t["angle"] = Phrase{A, Verb::kBe, "at an angle of {} degrees from View B", "",
                        Unit::kDecimal};
    t["is_neighbour"] = Phrase{AB, Verb::kBe, "next to each other"};
    t["a_left_of_b"] = Phrase{A, Verb::kBe, "to the left of View B"};
    t["a_below_left_of_b"] = Phrase{A, Verb::kBe, "on the bottom left of View B"};
    t["a_below_b"] = Phrase{A, Verb::kBe, "on the bottom of View B"};
    t["a_below_right_of_b"] = Phrase{A, Verb::kBe, "on the bottom right of View B"};
    t["a_right_of_b"] = Phrase{A, Verb::kBe, "to the right of View B"};
    t["a_above_right_of_b"] = Phrase{A, Verb::kBe, "on the top right of View B"};
    t["a_above_b"] = Phrase{A, Verb::kBe, "on the top of View B"};
    t["a_above_left_of_b"] = Phrase{A, Verb::kBe, "on the top left of View B"};

    t["has_any"] = Phrase{AB, Verb::kBe, "coordinated"};
    t["a_filters_b"] = Phrase{A, Verb::kFilter, "View B"};
    t["b_filters_a"] = Phrase{Who::kB, Verb::kFilter, "View A"};
    t["a_brushes_b"] = Phrase{A, Verb::kBrush, "View B"};
    t["b_brushes_a"] = Phrase{Who::kB, Verb::kBrush, "View A"};
    return t;
  }();
  return table;
}

std::string subject_text(Who who, bool pronoun) {
  switch (who) {
    case Who::kA: return pronoun ? "it" : "View A";
    case Who::kB: return pronoun ? "it" : "View B";
    case Who::kAB: return pronoun ? "they" : "View A and View B";
    case Who::kNone: break;
  }
  return "";
}

const char* base_form(Verb v) {
  switch (v) {
    case Verb::kBe: return "be";
    case Verb::kHave: return "have";
    case Verb::kUse: return "use";
    case Verb::kShare: return "share";
    case Verb::kSpan: return "span";
    case Verb::kFilter: return "filter";
    case Verb::kBrush: return "brush";
    case Verb::kHold: return "hold";
  }
  return "";
}

std::string verb_phrase(Verb v, bool plural, bool modal, bool negated) {
  const std::string base = base_form(v);
  if (modal) return negated ? "should not " + base : "should " + base;
  if (v == Verb::kBe) {
    return std::string(plural ? "are" : "is") + (negated ? " not" : "");
  }
  if (negated) return std::string(plural ? "do not " : "does not ") + base;
  if (plural) return base;
  if (v == Verb::kHave) return "has";
  if (v == Verb::kBrush) return "brushes";
  return base + "s";
}

std::string format_number(double v, Unit unit) {
  char buf[64];
  switch (unit) {
    case Unit::kInteger:
      std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
      return buf;
    case Unit::kPercent:
      std::snprintf(buf, sizeof buf, "%.0f%%", v * 100.0);
      return buf;
    case Unit::kDecimal:
      break;
  }
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string fill(const std::string& text, const std::string& quantity) {
  const auto pos = text.find("{}");
  if (pos == std::string::npos) return text;
  return text.substr(0, pos) + quantity + text.substr(pos + 2);
}

struct Clause {
  Who who;
  std::string text;  // predicate without subject
};

Clause make_clause(const Literal& lit, bool modal, const Thresholds& thresholds,
                   std::vector<std::string>* warnings) {
  const auto& reg = FeatureRegistry::get();
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  const auto code = reg.find_bit(lit.feature);
  if (!code) {
    warn("no phrase for feature '" + lit.feature + "'");
    return Clause{Who::kNone, lit.feature + " " +
                                  verb_phrase(Verb::kHold, false, modal, lit.negated)};
  }
  const BitDef& bit = reg.bit(*code);
  const Section section = *code < kPairBitOffset ? Section::kSingle : Section::kPair;
  const FeatureDef& def = reg.features(section)[bit.feature];

  if (def.kind == FeatureKind::kCategorical) {
    const bool plural = false;
    return Clause{Who::kA, verb_phrase(Verb::kBe, plural, modal, lit.negated) + " " +
                               kMarkDisplay[bit.category]};
  }
  const auto it = phrases().find(def.name);
  if (it == phrases().end()) {
    warn("no phrase for feature '" + def.name + "'");
    return Clause{Who::kNone, def.name + " " +
                                  verb_phrase(Verb::kHold, false, modal, lit.negated)};
  }
  const Phrase& p = it->second;
  const bool plural = p.who == Who::kAB;
  if (!def.numeric()) {
    return Clause{p.who, verb_phrase(p.verb, plural, modal, lit.negated) + " " + p.text};
  }

  const std::string positive = verb_phrase(p.verb, plural, modal, false);
  const auto th = thresholds.find(def.name);
  if (th == thresholds.end() || !std::isfinite(th->second)) {
    warn("no threshold for feature '" + def.name + "'");
    return Clause{p.who, positive + " " +
                             fill(p.text, lit.negated ? "below the mean" : "at least the mean")};
  }
  const double t = th->second;
  if (def.kind == FeatureKind::kScalar) {
    const std::string q = (lit.negated ? "less than " : "at least ") + format_number(t, p.unit);
    return Clause{p.who, positive + " " + fill(p.text, q)};
  }

  // Integer-valued: the bit is value >= ceil(t).
  const long long c = static_cast<long long>(std::ceil(t));
  if (!lit.negated) {
    if (!p.any.empty() && c <= 1) return Clause{p.who, positive + " " + p.any};
    if (c >= p.max) return Clause{p.who, positive + " " + fill(p.text, format_number(p.max, Unit::kInteger))};
    return Clause{p.who, positive + " " + fill(p.text, "at least " + format_number(c, Unit::kInteger))};
  }
  const long long k = c - 1;
  if (!p.any.empty() && k <= 0) {
    return Clause{p.who, verb_phrase(p.verb, plural, modal, true) + " " + p.any};
  }
  if (k <= p.min) return Clause{p.who, positive + " " + fill(p.text, format_number(p.min, Unit::kInteger))};
  return Clause{p.who, positive + " " + fill(p.text, "at most " + format_number(k, Unit::kInteger))};
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string render_rule(const DecisionRule& rule, const Thresholds& thresholds,
                        std::vector<std::string>* warnings) {
  std::string out = "If ";
  Who previous = Who::kNone;
  for (std::size_t k = 0; k < rule.condition.size(); ++k) {
    const Clause c = make_clause(rule.condition[k], false, thresholds, warnings);
    if (k > 0) out += ", and ";
    const bool pronoun = k > 0 && c.who == previous && c.who != Who::kNone;
    const std::string subject = subject_text(c.who, pronoun);
    out += subject.empty() ? c.text : subject + " " + c.text;
    previous = c.who;
  }
  const Clause target = make_clause(rule.target, true, thresholds, warnings);
  const std::string subject = subject_text(target.who, false);
  out += ", then " + (subject.empty() ? target.text : subject + " " + target.text) + ".";
  return out;
}

std::string render_report(const RuleSet& rules, const EvalReport* test_eval) {
  std::ostringstream md;
  const auto& p = rules.provenance;
  md << "# Mined design rules\n\n";
  md << "- Corpus: " << (p.corpus.empty() ? "(unnamed)" : p.corpus) << "\n";
  md << "- Seed: " << p.seed << "\n";
  md << "- Dashboards: " << p.n_train << " train, " << p.n_test << " test (train fraction "
     << fmt(p.train_frac, 2) << ")\n";
  md << "- Models: " << rules.models.size() << " fitted, " << rules.skipped.size()
     << " skipped\n";
  md << "- Rules: " << rules.rules.size() << "\n";
  if (!rules.models.empty()) {
    double train = 0, test = 0;
    for (const auto& m : rules.models) {
      train += m.train_acc;
      test += m.test_acc;
    }
    md << "- Mean model accuracy: " << fmt(train / rules.models.size()) << " train, "
       << fmt(test / rules.models.size()) << " test\n";
  }
  if (test_eval) {
    md << "- Macro accuracy on held-out data: " << fmt(test_eval->macro_accuracy) << "\n";
  }

  std::vector<std::size_t> order(rules.rules.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rules.rules[a].importance > rules.rules[b].importance;
  });
  std::vector<std::string> warnings;
  md << "\n## Rules by importance\n\n";
  int rank = 0;
  for (auto k : order) {
    const auto& r = rules.rules[k];
    md << ++rank << ". " << render_rule(r, rules.thresholds, &warnings) << "\n";
    md << "   `" << r.mapping << "` importance " << fmt(r.importance) << ", coefficient "
       << fmt(r.coefficient) << ", support " << fmt(r.support) << ", test accuracy "
       << fmt(r.test_acc);
    if (test_eval && k < test_eval->rules.size()) {
      const auto& e = test_eval->rules[k];
      md << ", held-out fire rate " << fmt(e.fire_rate);
      if (e.precision) md << ", precision " << fmt(*e.precision);
    }
    md << "\n";
  }
  if (!rules.skipped.empty()) {
    md << "\n## Skipped targets\n\n";
    for (const auto& s : rules.skipped) md << "- " << s << "\n";
  }
  warnings.insert(warnings.begin(), rules.warnings.begin(), rules.warnings.end());
  if (!warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : warnings) md << "- " << w << "\n";
  }
  return md.str();
}

}  // namespace dminer
