#include <algorithm>
#include <cmath>
#include <limits>

#include "dminer/common.hpp"
#include "dminer/features.hpp"

namespace dminer {

namespace {

// Correctly rounded floating-point sum (Shewchuk's partials). The mean of a
// corpus then depends only on the multiset of values, not on their order,
// which keeps thresholds identical when a corpus is reordered or duplicated.
double exact_sum(std::span<const double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;
  // Sum partials from the top, handling the half-way rounding case.
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0 && partials[n - 1] < 0) ||
                (lo > 0 && partials[n - 1] > 0))) {
    const double y = lo * 2;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

}  // namespace

BinarizeResult binarize(std::span<const RawFeatures> rows) {
  if (rows.empty()) throw InputError("binarize needs a non-empty corpus");
  const Section section = rows.front().section;
  const auto defs = FeatureRegistry::get().features(section);

  std::vector<std::vector<double>> values;
  values.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.section != section) {
      throw InputError("binarize: rows from different registry sections");
    }
    values.push_back(numeric_values(r));
  }

  BinarizeResult result;
  std::vector<double> column(rows.size());
  for (std::size_t f = 0; f < defs.size(); ++f) {
    if (!defs[f].numeric()) continue;
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = values[i][f];
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    double mean;
    if (*lo == *hi) {
      mean = *lo;
      result.warnings.push_back("feature '" + defs[f].name +
                                "' is constant; its bit is always true");
    } else {
      mean = exact_sum(column) / static_cast<double>(column.size());
    }
    result.thresholds[defs[f].name] = mean;
  }

  const auto table = threshold_table(section, result.thresholds, true);
  result.vectors.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    result.vectors.push_back(
        FeatureVector{rows[i].subject, bits_from_values(section, values[i], table)});
  }
  return result;
}

std::vector<double> threshold_table(Section section, const Thresholds& thresholds,
                                    bool require_all) {
  const auto defs = FeatureRegistry::get().features(section);
  std::vector<double> table(defs.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f = 0; f < defs.size(); ++f) {
    if (!defs[f].numeric()) continue;
    auto it = thresholds.find(defs[f].name);
    if (it != thresholds.end()) {
      table[f] = it->second;
    } else if (require_all) {
      throw ConsistencyError("threshold missing for feature '" + defs[f].name +
                             "'");
    } else {
      table[f] = std::numeric_limits<double>::infinity();
    }
  }
  return table;
}

std::uint64_t bits_from_values(Section section, std::span<const double> values,
                               std::span<const double> table) {
  const auto& reg = FeatureRegistry::get();
  const auto defs = reg.features(section);
  const auto bits = reg.bits(section);
  std::uint64_t out = 0;
  for (std::size_t b = 0; b < bits.size(); ++b) {
    const auto& bit = bits[b];
    const double v = values[bit.feature];
    bool on;
    switch (defs[bit.feature].kind) {
      case FeatureKind::kBoolean:
        on = v != 0.0;
        break;
      case FeatureKind::kCategorical:
        on = static_cast<int>(v) == bit.category;
        break;
      default:
        on = v >= table[bit.feature];
        break;
    }
    if (on) out |= std::uint64_t{1} << b;
  }
  return out;
}

FeatureVector apply_thresholds(const RawFeatures& raw,
                               const Thresholds& thresholds) {
  const auto table = threshold_table(raw.section, thresholds, true);
  return FeatureVector{raw.subject,
                       bits_from_values(raw.section, numeric_values(raw), table)};
}

}  // namespace dminer
