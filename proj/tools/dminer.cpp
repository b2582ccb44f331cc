#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "dminer/corpus.hpp"
#include "dminer/features.hpp"
#include "dminer/mining.hpp"
#include "dminer/oracle.hpp"
#include "dminer/recommender.hpp"

namespace fs = std::filesystem;
using namespace dminer;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError("no such file: " + path.string());
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create directory " + dir.string());
}

// Every *.json file directly inside `dir`, by file name. Invalid files are
// reported on stderr and skipped; no valid file at all is an input error.
std::vector<DashboardSpec> load_corpus(const fs::path& dir) {
  require_dir(dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DashboardSpec> corpus;
  std::size_t bad = 0;
  for (const auto& f : files) {
    if (f.filename() == "ledger.json") continue;
    try {
      corpus.push_back(parse_dashboard(read_file(f)));
    } catch (const InputError& e) {
      ++bad;
      std::cerr << "invalid: " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (corpus.empty()) {
    throw InputError(bad ? "no valid dashboard specs in " + dir.string()
                         : "no dashboard specs in " + dir.string());
  }
  return corpus;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DMINE_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw InputError("DMINE_SEED is not an unsigned integer");
    return v;
  }
  return kDefaultSeed;
}

struct Config {
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;

  std::string corpus_dir;
  std::string out;

  double split = 0.75;
  int top_rules = 3;
  int max_conditions = 2;

  std::string views_path;
  std::string rules_path;
  int k = 3;
  double prune_frac = 0.01;
  int prune_min = 10;
  bool render = false;
  bool exhaustive = false;

  std::string planted_path;
  std::size_t count = 854;
  double noise = 0.0;
};

int cmd_stats(const Config& cfg) {
  const auto corpus = load_corpus(cfg.corpus_dir);
  const fs::path out = cfg.out.empty() ? fs::path("stats.json") : fs::path(cfg.out);
  const auto report = corpus_stats(corpus);
  write_file(out, dump(to_json(report)));
  std::cout << format_histogram(report);
  return 0;
}

int cmd_mine(const Config& cfg) {
  const auto corpus = load_corpus(cfg.corpus_dir);
  if (corpus.size() < 4) throw InputError("mining needs at least 4 dashboards");
  const fs::path out = cfg.out.empty() ? fs::path("mined") : fs::path(cfg.out);
  ensure_out_dir(out);

  std::vector<FeaturizedDashboard> featurized;
  featurized.reserve(corpus.size());
  for (const auto& d : corpus) featurized.push_back(featurize(d));

  MineOptions opts;
  opts.train_frac = cfg.split;
  opts.seed = cfg.seed;
  opts.fit.seed = cfg.seed;
  opts.top_rules = cfg.top_rules;
  opts.max_conditions = cfg.max_conditions;
  opts.threads = cfg.threads;
  opts.corpus_name = fs::path(cfg.corpus_dir).filename().string();
  if (opts.corpus_name.empty()) opts.corpus_name = fs::path(cfg.corpus_dir).parent_path().filename().string();
  const RuleSet rules = mine_all(featurized, mapping_registry(), opts);

  auto [train_idx, test_idx] = split_corpus(featurized.size(), cfg.split, cfg.seed);
  std::vector<FeaturizedDashboard> test;
  for (auto i : test_idx) test.push_back(featurized[i]);
  const EvalReport eval = evaluate_rules(rules, build_mining_data(test, rules.thresholds));

  write_file(out / "rules.json", serialize_ruleset(rules));
  write_file(out / "report.md", render_report(rules, &eval));
  write_file(out / "thresholds.json", dump(nlohmann::json(rules.thresholds)));
  std::string jsonl;
  for (const auto& d : featurized) {
    for (const auto& r : d.views) jsonl += raw_to_json(r).dump() + "\n";
    for (const auto& r : d.pairs) jsonl += raw_to_json(r).dump() + "\n";
  }
  write_file(out / "features.jsonl", jsonl);
  std::cout << rules.rules.size() << " rules from " << rules.models.size() << " models, "
            << "held-out macro accuracy " << eval.macro_accuracy << "\n";
  return 0;
}

Candidate exhaustive_candidate(std::span<const ViewSpec> views, const RuleSet& rules) {
  if (views.size() > 4) throw CapacityError("--exhaustive handles at most 4 views");
  if (views.size() < 2) throw InputError("recommendation needs at least 2 views");
  const auto r = oracle::exhaustive_recommend(views, rules);
  const std::size_t n = views.size();
  std::uint64_t fact = 1;
  for (std::size_t i = 2; i <= n; ++i) fact *= i;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::uint64_t i = 0; i < r.index % fact; ++i) std::next_permutation(perm.begin(), perm.end());
  Candidate c = make_candidate(r.index / fact, perm);
  c.links = r.links;
  return score_full(std::move(c), views, rules);
}

int cmd_recommend(const Config& cfg) {
  require_file(cfg.views_path);
  require_file(cfg.rules_path);
  const auto views = parse_views(read_file(cfg.views_path));
  const RuleSet rules = parse_ruleset(read_file(cfg.rules_path));
  const fs::path out = cfg.out.empty() ? fs::path("recs.json") : fs::path(cfg.out);

  const auto start = std::chrono::steady_clock::now();
  Recommendation rec;
  if (cfg.exhaustive) {
    rec.candidates.push_back(exhaustive_candidate(views, rules));
    rec.n_tilings = enumerate_tilings(static_cast<int>(views.size())).size();
    std::uint64_t fact = 1;
    for (std::size_t i = 2; i <= views.size(); ++i) fact *= i;
    rec.n_candidates = rec.n_tilings * fact;
    rec.n_scored = rec.n_candidates;
  } else {
    RecommendOptions opts;
    opts.k = cfg.k;
    opts.prune_frac = cfg.prune_frac;
    opts.prune_min = cfg.prune_min;
    opts.threads = cfg.threads;
    rec = recommend(views, rules, opts);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file(out, serialize_recommendation(rec, views, rules));
  if (cfg.render) {
    for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
      fs::path svg = out;
      svg.replace_filename(out.stem().string() + "_rank" + std::to_string(i + 1) + ".svg");
      write_file(svg, render_svg(rec.candidates[i], views));
    }
  }
  std::fprintf(stderr, "recommend: %zu candidates ranked in %.3f s\n", rec.candidates.size(),
               seconds);
  return 0;
}

int cmd_synth(const Config& cfg) {
  require_file(cfg.planted_path);
  const auto planted = oracle::parse_planted(read_file(cfg.planted_path));
  oracle::GeneratorOptions opts;
  opts.count = cfg.count;
  opts.noise = cfg.noise;
  opts.seed = cfg.seed;
  const auto corpus = oracle::generate_corpus(planted, opts);
  const fs::path out = cfg.out.empty() ? fs::path("synth") : fs::path(cfg.out);
  ensure_out_dir(out);
  for (const auto& d : corpus.dashboards) {
    write_file(out / (d.id + ".json"), serialize_dashboard(d));
  }
  write_file(out / "ledger.json", dump(corpus.ledger));
  std::cout << corpus.dashboards.size() << " dashboards written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Config cfg;
  CLI::App app{"Mine dashboard design rules and recommend layouts."};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed (default: DMINE_SEED or 20230415)");
    sub->add_option("--threads", cfg.threads, "worker threads, 0 = all cores")->capture_default_str();
  };

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("corpus-dir", cfg.corpus_dir, "directory of dashboard specs")->required();
  stats->add_option("-o,--out", cfg.out, "output JSON (default stats.json)");
  add_common(stats);

  auto* mine = app.add_subcommand("mine", "mine design rules");
  mine->add_option("corpus-dir", cfg.corpus_dir, "directory of dashboard specs")->required();
  mine->add_option("-o,--out", cfg.out, "output directory (default mined)");
  mine->add_option("--split", cfg.split, "training fraction")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  mine->add_option("--top-rules", cfg.top_rules, "rules kept per model")->capture_default_str()
      ->check(CLI::Range(1, 1000));
  mine->add_option("--max-conditions", cfg.max_conditions, "literals per condition")
      ->capture_default_str()->check(CLI::Range(1, 2));
  add_common(mine);

  auto* rec = app.add_subcommand("recommend", "recommend arrangements and coordination");
  rec->add_option("views", cfg.views_path, "views JSON")->required();
  rec->add_option("rules", cfg.rules_path, "rules JSON")->required();
  rec->add_option("-o,--out", cfg.out, "output JSON (default recs.json)");
  rec->add_option("--k", cfg.k, "candidates to return")->capture_default_str()
      ->check(CLI::PositiveNumber);
  rec->add_option("--prune-frac", cfg.prune_frac, "fraction kept by single-view pruning")
      ->capture_default_str();
  rec->add_option("--prune-min", cfg.prune_min, "minimum kept by pruning")->capture_default_str();
  rec->add_flag("--render", cfg.render, "write one SVG per returned candidate");
  rec->add_flag("--exhaustive", cfg.exhaustive, "brute-force reference search (at most 4 views)");
  add_common(rec);

  auto* synth = app.add_subcommand("synth", "generate a corpus with planted rules");
  synth->add_option("planted", cfg.planted_path, "planted rules JSON")->required();
  synth->add_option("-o,--out", cfg.out, "output directory (default synth)");
  synth->add_option("--count", cfg.count, "dashboards to generate")->capture_default_str();
  synth->add_option("--noise", cfg.noise, "label noise in [0, 0.5]")->capture_default_str();
  add_common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.seed = default_seed();
    for (auto* sub : {stats, mine, rec, synth}) {
      if (sub->parsed() && sub->count("--seed")) cfg.seed = seed;
    }
    if (stats->parsed()) return cmd_stats(cfg);
    if (mine->parsed()) return cmd_mine(cfg);
    if (rec->parsed()) return cmd_recommend(cfg);
    if (synth->parsed()) return cmd_synth(cfg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
