#ifndef DMINER_TESTS_SUPPORT_HPP_
#define DMINER_TESTS_SUPPORT_HPP_

#include <string>
#include <vector>

#include "dminer/common.hpp"
#include "dminer/corpus.hpp"
#include "dminer/mining.hpp"
#include "dminer/oracle.hpp"

namespace dminer::testing {

// Views with random marks, fields and encodings drawn from a shared field
// pool, ids "v1".."vn", no layout.
std::vector<ViewSpec> random_views(Rng& rng, int n);

// `count` random rules over random mappings, with 1-2 condition literals
// from the mapping's condition groups and a target from its target group.
// Importances are uniform in [0.05, 1).
RuleSet random_rules(Rng& rng, int count, const Thresholds& thresholds);

// Means of a small planted corpus; a realistic threshold table.
const Thresholds& reference_thresholds();

// Hand-written encoding of the four top expert-rated rules.
RuleSet table2_rules();

// Four views: a Text view, two circle views sharing four of five fields and
// colouring the same field, and a bar chart.
std::vector<ViewSpec> case_study_views();

// Loads and parses the planted-rule fixture shipped with the tests.
std::vector<oracle::PlantedRule> planted_fixture();

std::string read_text(const std::string& path);

}  // namespace dminer::testing

#endif  // DMINER_TESTS_SUPPORT_HPP_
