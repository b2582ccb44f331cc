#ifndef DMINER_FEATURES_HPP_
#define DMINER_FEATURES_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dminer/corpus.hpp"

namespace dminer {

enum class FeatureKind { kCount, kBoolean, kCategorical, kScalar };

// SDE: single-view data & encoding. SA: single-view arrangement.
// PDE: pairwise data & encoding relationship. PA: pairwise arrangement
// relationship. PC: pairwise coordination.
enum class FeatureGroup { kSDE, kSA, kPDE, kPA, kPC };

enum class Section { kSingle, kPair };

std::string_view to_string(FeatureGroup g);
std::optional<FeatureGroup> parse_feature_group(std::string_view s);
Section section_of(FeatureGroup g);

struct FeatureDef {
  std::string name;
  FeatureKind kind;
  FeatureGroup group;
  std::vector<std::string> categories;  // only for kCategorical

  bool numeric() const {
    return kind == FeatureKind::kCount || kind == FeatureKind::kScalar;
  }
};

// One boolean produced by binarization. Numeric features give one bit
// "value >= threshold" named after the feature; categorical features give
// one-hot bits "name=category"; booleans pass through.
struct BitDef {
  std::string name;
  FeatureGroup group;
  int feature;        // index into the section's FeatureDef list
  int category = -1;  // one-hot category index
};

inline constexpr int kNumSingleFeatures = 33;
inline constexpr int kNumPairFeatures = 41;
inline constexpr int kPairBitOffset = 64;

// Bit code: single-view bit i is code i, pairwise bit j is code 64 + j.
using BitCode = int;

class FeatureRegistry {
 public:
  static const FeatureRegistry& get();

  std::span<const FeatureDef> features(Section s) const {
    return s == Section::kSingle ? single_ : pair_;
  }
  std::span<const BitDef> bits(Section s) const {
    return s == Section::kSingle ? single_bits_ : pair_bits_;
  }
  const BitDef& bit(BitCode code) const;
  std::optional<BitCode> find_bit(std::string_view name) const;
  // Returns (section, index) of a raw feature.
  std::optional<std::pair<Section, int>> find_feature(std::string_view name) const;
  int feature_index(Section s, std::string_view name) const;

 private:
  FeatureRegistry();

  std::vector<FeatureDef> single_;
  std::vector<FeatureDef> pair_;
  std::vector<BitDef> single_bits_;
  std::vector<BitDef> pair_bits_;
};

// Identifies what a feature row describes: one view, or the ordered view
// pair (a, b).
struct Subject {
  std::string dashboard;
  std::string a;
  std::string b;  // empty for single-view subjects

  bool is_pair() const { return !b.empty(); }
  std::string label() const { return is_pair() ? a + "," + b : a; }
  bool operator==(const Subject&) const = default;
};

using RawValue = std::variant<bool, std::int64_t, double, std::string>;

struct RawFeatures {
  Subject subject;
  Section section = Section::kSingle;
  // Aligned with FeatureRegistry::features(section).
  std::vector<RawValue> values;

  const RawValue& at(std::string_view name) const;
};

// Numeric encoding of one raw row: booleans as 0/1, categoricals as the
// category index. This is the form binarization consumes.
std::vector<double> numeric_values(const RawFeatures& raw);

// Writes the 33 single-view raw values for `view` placed at `rect`. When the
// view carries a pixel layout and the canvas is known, normalized pixel
// features come from pixels; otherwise from the grid (rect / grid_n).
void single_view_values(const ViewSpec& view, const GridRect& rect,
                        const std::optional<Canvas>& canvas,
                        std::span<double> out, int grid_n = kGridSize);

// Link state per ordered direction, used by pairwise extraction.
enum class LinkState : std::uint8_t { kNone = 0, kFilter = 1, kBrush = 2 };

void pair_values(const ViewSpec& a, const ViewSpec& b, const GridRect& ra,
                 const GridRect& rb, LinkState a_to_b, LinkState b_to_a,
                 std::span<double> out);
// Rewrites only the five coordination values of a pairwise row.
void set_link_values(LinkState a_to_b, LinkState b_to_a, std::span<double> out);

RawFeatures extract_single_view(const ViewSpec& view, const GridRect& rect,
                                const std::optional<Canvas>& canvas = {});
RawFeatures extract_pairwise(const ViewSpec& a, const ViewSpec& b,
                             const GridRect& ra, const GridRect& rb,
                             std::span<const Coordination> coords);

// Corpus-wide feature rows for every view and every ordered view pair.
struct FeaturizedDashboard {
  std::string id;
  std::vector<RawFeatures> views;
  std::vector<RawFeatures> pairs;  // ordered pairs (i, j), i != j, row-major
};
FeaturizedDashboard featurize(const DashboardSpec& dashboard);

using Thresholds = std::map<std::string, double>;

struct FeatureVector {
  Subject subject;
  std::uint64_t bits = 0;  // bit i aligned with FeatureRegistry::bits(section)
};

struct BinarizeResult {
  std::vector<FeatureVector> vectors;
  Thresholds thresholds;
  std::vector<std::string> warnings;
};

// Thresholds every numeric feature at its corpus mean (bit = value >= mean).
// All rows must come from the same section.
BinarizeResult binarize(std::span<const RawFeatures> rows);

// Dense threshold table aligned with features(section). Numeric features
// missing from `thresholds` get +infinity (bit always false) unless
// `require_all` is set, in which case ConsistencyError is thrown.
std::vector<double> threshold_table(Section section, const Thresholds& thresholds,
                                    bool require_all);

std::uint64_t bits_from_values(Section section, std::span<const double> values,
                               std::span<const double> table);
FeatureVector apply_thresholds(const RawFeatures& raw,
                               const Thresholds& thresholds);

// Both sections of an ordered pair subject: A's single-view bits plus the
// pairwise bits. Single-view subjects leave `pair` zero.
struct SubjectBits {
  std::uint64_t single = 0;
  std::uint64_t pair = 0;

  bool test(BitCode code) const {
    return code < kPairBitOffset ? (single >> code) & 1u
                                 : (pair >> (code - kPairBitOffset)) & 1u;
  }
  bool operator==(const SubjectBits&) const = default;
};

nlohmann::json raw_to_json(const RawFeatures& raw);

}  // namespace dminer

#endif  // DMINER_FEATURES_HPP_
