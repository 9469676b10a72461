#include "cli_app.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "codym/classify.hpp"
#include "codym/context.hpp"
#include "codym/emotion.hpp"
#include "codym/serialize.hpp"
#include "codym/sha256.hpp"
#include "codym/temporal.hpp"
#include "codym/viz.hpp"

namespace fs = std::filesystem;

namespace codym::cli {

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Collects written artifacts and emits the run manifest, which is enough to
// reproduce the run: command, full config, seed, and content hashes.
class RunContext {
 public:
  RunContext(std::string command, fs::path out_dir)
      : command_(std::move(command)), out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  const fs::path& out_dir() const { return out_dir_; }

  void add_input(const fs::path& path) {
    inputs_.push_back({path.string(), sha256_file_hex(path)});
  }

  void set_config(Json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write_text(const std::string& name, const std::string& content) {
    const fs::path path = out_dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    out.close();
    outputs_.push_back({path.string(), sha256_hex(content)});
  }

  void write_json(const std::string& name, const Json& j) { write_text(name, j.dump(2) + "\n"); }

  void finish() {
    Json manifest;
    manifest["command"] = command_;
    manifest["config"] = config_;
    if (seed_) manifest["seed"] = *seed_;
    manifest["tool_version"] = kToolVersion;
    auto file_list = [](const std::vector<std::pair<std::string, std::string>>& files) {
      Json arr = Json::array();
      for (const auto& [path, hash] : files) {
        Json f;
        f["path"] = path;
        f["sha256"] = hash;
        arr.push_back(std::move(f));
      }
      return arr;
    };
    manifest["inputs"] = file_list(inputs_);
    manifest["outputs"] = file_list(outputs_);
    write_json_file(manifest, out_dir_ / "manifest.json");
  }

 private:
  std::string command_;
  fs::path out_dir_;
  Json config_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("CODYM_OUT_DIR")) return fs::path(env);
  return fs::path(".");
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  return (std::uint64_t(rd()) << 32) ^ std::uint64_t(rd());
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

std::optional<Role> parse_role_flag(const std::string& role) {
  if (role == "all" || role.empty()) return std::nullopt;
  const auto parsed = parse_role(role);
  if (!parsed) throw ValidationError("unknown role: " + role + " (patient|clinician|all)");
  return parsed;
}

int resolve_threshold(const std::string& flag, const Corpus& corpus, int order) {
  if (flag == "auto") {
    int max_wc = 0;
    for (const auto& conv : corpus.conversations)
      for (const auto& turn : conv.turns) max_wc = std::max(max_wc, turn.word_count);
    const int t_max = std::min(max_wc, 40);
    if (t_max < 2) throw ValidationError("corpus too uniform for threshold selection");
    return select_threshold(corpus, order, 2, t_max).threshold;
  }
  const int t = std::stoi(flag);
  check_rule(BinarizationRule{t});
  return t;
}

std::string csv_string(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

// Mean of per-conversation models for one role stratum (or unstratified).
CodymModel observed_mean_model(const Corpus& corpus, int order, const BinarizationRule& rule,
                               std::optional<Role> role) {
  PopulateOptions options;
  options.order = order;
  options.rule = rule;
  options.stratum = role;
  if (role) options.event_filter = role_filter(*role);
  const auto per_conv = populate_per_conversation(corpus, options);
  if (per_conv.models.empty())
    throw ValidationError("no conversation produced events for the requested stratum");
  return mean_model(per_conv.models).model;
}

NullEnsemble shuffle_ensemble(const Corpus& corpus, int order, const BinarizationRule& rule,
                              std::optional<Role> role, int replicates, double alpha,
                              std::uint64_t seed, int workers) {
  const auto generator = [&corpus, order, rule, role](int, Rng& rng) {
    const Corpus shuffled = shuffle_corpus(corpus, rng);
    PopulateOptions options;
    options.order = order;
    options.rule = rule;
    options.stratum = role;
    if (role) options.event_filter = role_filter(*role);
    const auto per_conv = populate_per_conversation(shuffled, options);
    return mean_model(per_conv.models).model;
  };
  return build_ensemble(generator, replicates, seed, alpha, workers);
}

void render_pair(RunContext& ctx, const std::string& stem, const CodymModel& model,
                 const SignificanceReport* report) {
  VizSpec spec;
  ctx.write_text(stem + ".dot", render_dot(model, report, spec));
  ctx.write_text(stem + ".svg", render_svg(model, report, spec));
}

void render_delta_pair(RunContext& ctx, const std::string& stem, const DeltaModel& model,
                       const SignificanceReport* report) {
  VizSpec spec;
  spec.mode = VizMode::Delta;
  ctx.write_text(stem + ".dot", render_dot(model, report, spec));
  ctx.write_text(stem + ".svg", render_svg(model, report, spec));
}

// ---- shared option bundle ----------------------------------------------

struct CommonOpts {
  std::string in_path;
  std::string out_dir = default_out_dir().string();
  int order = 3;
  std::string threshold = "8";
  std::optional<std::uint64_t> seed;
  int workers = 0;

  void attach(CLI::App* cmd, bool needs_input = true) {
    if (needs_input)
      cmd->add_option("--in", in_path, "input transcript JSONL")->required();
    cmd->add_option("--out", out_dir, "output directory (default $CODYM_OUT_DIR or .)");
    cmd->add_option("--order", order, "model order N")->check(CLI::Range(1, 8));
    cmd->add_option("--threshold", threshold, "short/long word threshold, or 'auto'");
    cmd->add_option("--seed", seed, "RNG seed (generated and recorded when absent)");
    cmd->add_option("--workers", workers, "worker threads (0 = hardware)");
  }

  Json config_json() const {
    Json j;
    j["in"] = in_path;
    j["order"] = order;
    j["threshold"] = threshold;
    j["workers"] = workers;
    return j;
  }
};

// ---- subcommand implementations ----------------------------------------

int cmd_ingest(const CommonOpts& opts, int min_turns) {
  RunContext ctx("ingest", opts.out_dir);
  ctx.add_input(opts.in_path);
  Json config = opts.config_json();
  config["min_turns"] = min_turns;
  ctx.set_config(config);

  Corpus corpus = load_transcript_jsonl(opts.in_path);
  validate_corpus(corpus);
  const auto filtered = filter_short_conversations(corpus, min_turns);

  std::ostringstream normalized;
  write_transcript_jsonl(filtered.corpus, normalized);
  ctx.write_text("normalized.jsonl", normalized.str());

  Json summary;
  summary["conversations"] = filtered.corpus.conversations.size();
  summary["turns"] = filtered.corpus.total_turns();
  summary["words"] = filtered.corpus.total_words();
  summary["dropped"] = filtered.dropped_ids;
  std::size_t patient = 0, clinician = 0, unknown = 0, with_words = 0;
  for (const auto& conv : filtered.corpus.conversations) {
    for (const auto& turn : conv.turns) {
      if (turn.role == Role::Patient) ++patient;
      if (turn.role == Role::Clinician) ++clinician;
      if (turn.role == Role::Unknown) ++unknown;
      if (turn.words) ++with_words;
    }
  }
  summary["patient_turns"] = patient;
  summary["clinician_turns"] = clinician;
  summary["unknown_turns"] = unknown;
  summary["turns_with_words"] = with_words;
  ctx.write_json("summary.json", summary);
  ctx.finish();
  std::cout << "ingested " << filtered.corpus.conversations.size() << " conversations ("
            << filtered.dropped_ids.size() << " dropped)\n";
  return 0;
}

int cmd_threshold(const CommonOpts& opts, int t_min, int t_max) {
  RunContext ctx("threshold", opts.out_dir);
  ctx.add_input(opts.in_path);
  Json config = opts.config_json();
  config["t_min"] = t_min;
  config["t_max"] = t_max;
  ctx.set_config(config);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  int max_wc = 0;
  for (const auto& conv : corpus.conversations)
    for (const auto& turn : conv.turns) max_wc = std::max(max_wc, turn.word_count);
  if (t_max <= 0) t_max = std::min(max_wc, 40);

  const ThresholdScan scan = select_threshold(corpus, opts.order, t_min, t_max);

  Json result;
  result["order"] = opts.order;
  result["threshold"] = scan.threshold;
  ctx.write_json("threshold.json", result);
  ctx.write_text("entropy_curve.csv", csv_string([&](std::ostream& out) {
                   out << "threshold,entropy_bits,long_rate\n";
                   for (std::size_t i = 0; i < scan.candidates.size(); ++i)
                     out << scan.candidates[i] << ',' << scan.entropy_bits[i] << ','
                         << scan.long_rate[i] << "\n";
                 }));
  ctx.finish();
  std::cout << "selected threshold " << scan.threshold << "\n";
  return 0;
}

int cmd_fit(const CommonOpts& opts, const std::string& stratify, const std::string& null_kind,
            int replicates, double alpha) {
  RunContext ctx("fit", opts.out_dir);
  ctx.add_input(opts.in_path);
  const std::uint64_t seed = resolve_seed(opts.seed);
  const int workers = resolve_workers(opts.workers);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["stratify"] = stratify;
  config["null"] = null_kind;
  config["replicates"] = replicates;
  config["alpha"] = alpha;
  ctx.set_config(config);
  ctx.set_seed(seed);

  std::vector<std::pair<std::string, std::optional<Role>>> strata;
  if (stratify == "role") {
    strata = {{"patient", Role::Patient}, {"clinician", Role::Clinician}};
  } else {
    strata = {{"all", std::nullopt}};
  }

  for (std::size_t i = 0; i < strata.size(); ++i) {
    const auto& [name, role] = strata[i];
    const CodymModel observed = observed_mean_model(corpus, opts.order, rule, role);
    ctx.write_json("observed_" + name + ".json", model_to_json(observed));

    if (null_kind == "shuffle") {
      // Per-stratum substream so strata stay independent of one another.
      const std::uint64_t stratum_seed = seed + i;
      const NullEnsemble ensemble = shuffle_ensemble(corpus, opts.order, rule, role,
                                                     replicates, alpha, stratum_seed, workers);
      const SignificanceReport report = significance_report(observed, ensemble);
      ctx.write_json("null_" + name + ".json", ensemble_to_json(ensemble));
      ctx.write_json("significance_" + name + ".json", report_to_json(report, opts.order));
      ctx.write_text("null_" + name + "_samples.csv", csv_string([&](std::ostream& out) {
                       write_ensemble_samples_csv(ensemble, out);
                     }));
      render_pair(ctx, "fig_observed_" + name, observed, &report);
      render_pair(ctx, "fig_null_" + name, ensemble.mean, nullptr);
    } else {
      render_pair(ctx, "fig_observed_" + name, observed, nullptr);
    }
  }
  ctx.finish();
  std::cout << "fit complete (seed " << seed << ")\n";
  return 0;
}

int cmd_deciles(const CommonOpts& opts, const std::string& role_flag, const std::string& basis_flag,
                const std::string& trend_slot, const std::string& trend_range) {
  RunContext ctx("deciles", opts.out_dir);
  ctx.add_input(opts.in_path);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  const std::optional<Role> role = parse_role_flag(role_flag);
  const DecileBasis basis =
      basis_flag == "per-role" ? DecileBasis::PerRole : DecileBasis::WholeConversation;

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["role"] = role_flag;
  config["basis"] = basis_flag;
  ctx.set_config(config);

  const DecileSeries series = decile_transition_histograms(corpus, opts.order, rule, role, basis);
  ctx.write_text("deciles.csv",
                 csv_string([&](std::ostream& out) { write_decile_csv(series, out, false); }));
  ctx.write_text("deciles_raw.csv",
                 csv_string([&](std::ostream& out) { write_decile_csv(series, out, true); }));

  if (!trend_slot.empty()) {
    // trend_range "5-10" means deciles 5..10, 1-based.
    int lo = 1, hi = 10;
    if (!trend_range.empty()) {
      const auto dash = trend_range.find('-');
      if (dash == std::string::npos)
        throw ValidationError("trend deciles must look like 5-10");
      lo = std::stoi(trend_range.substr(0, dash));
      hi = std::stoi(trend_range.substr(dash + 1));
      if (lo < 1 || hi > 10 || lo + 2 > hi)
        throw ValidationError("trend decile range must span at least 3 bins within 1..10");
    }
    int slot = -1;
    for (int s = 0; s < transition_count_for(opts.order); ++s)
      if (transition_name(s, opts.order) == trend_slot || slot_name(s, opts.order) == trend_slot)
        slot = s;
    if (slot < 0) throw ValidationError("unknown transition: " + trend_slot);
    if (!series.populated[std::size_t(slot)])
      throw ValidationError("transition " + trend_slot + " has no events");

    std::vector<double> xs, ys;
    for (int d = lo; d <= hi; ++d) {
      xs.push_back(double(d));
      ys.push_back(series.histogram[std::size_t(slot)][std::size_t(d - 1)]);
    }
    const CorrResult trend = spearman(xs, ys);
    Json j;
    j["transition"] = trend_slot;
    j["deciles"] = {lo, hi};
    j["rho"] = trend.rho;
    j["p"] = trend.p_value;
    j["p_method"] =
        trend.method == PValueMethod::ExactPermutation ? "exact_permutation" : "t_approx";
    j["p_exact"] = trend.p_exact;
    j["p_tdist"] = trend.p_tdist;
    ctx.write_json("trend.json", j);
  }
  ctx.finish();
  std::cout << "deciles written\n";
  return 0;
}

int cmd_words_profile(const CommonOpts& opts, const std::string& word) {
  RunContext ctx("words profile", opts.out_dir);
  ctx.add_input(opts.in_path);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["word"] = word;
  ctx.set_config(config);

  const WordProfile profile = word_transition_profile(corpus, word, opts.order, rule);
  Json j;
  j["word"] = profile.word;
  j["total_count"] = profile.total_count;
  j["event_count"] = profile.event_count;
  j["long_turn_fraction"] = profile.long_turn_fraction;
  j["zero_events"] = profile.zero_events;
  Json freq = Json::array();
  for (int slot = 0; slot < transition_count_for(opts.order); ++slot) {
    Json f;
    f["slot"] = slot_name(slot, opts.order);
    f["pct"] = profile.freq_vector[std::size_t(slot)];
    freq.push_back(std::move(f));
  }
  j["freq"] = std::move(freq);
  ctx.write_json("word_profile.json", j);
  ctx.finish();
  std::cout << "profile for \"" << word << "\": " << profile.total_count << " occurrences\n";
  return 0;
}

int cmd_words_cluster(const CommonOpts& opts, int min_count, double min_delta, int k,
                      int restarts) {
  RunContext ctx("words cluster", opts.out_dir);
  ctx.add_input(opts.in_path);
  const std::uint64_t seed = resolve_seed(opts.seed);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["min_count"] = min_count;
  config["min_delta"] = min_delta;
  config["k"] = k;
  config["restarts"] = restarts;
  ctx.set_config(config);
  ctx.set_seed(seed);

  PopulateOptions baseline_options;
  baseline_options.order = opts.order;
  baseline_options.rule = rule;
  baseline_options.weight_fn = [](const Turn& turn) { return double(turn.word_count); };
  const CodymModel baseline = populate_pooled(corpus, baseline_options);

  const auto candidates = candidate_words(corpus, baseline, rule, min_count, min_delta);
  if (int(candidates.size()) < k)
    throw ValidationError("only " + std::to_string(candidates.size()) +
                          " candidate words for k=" + std::to_string(k));

  std::vector<std::vector<double>> vectors;
  for (const auto& profile : candidates) vectors.push_back(profile.freq_vector);
  const ClusterResult clusters = kmeans_cluster(vectors, k, seed, restarts);

  ctx.write_text("clusters.csv", csv_string([&](std::ostream& out) {
                   write_cluster_csv(candidates, clusters, opts.order, out);
                 }));

  Json j;
  j["k"] = k;
  j["inertia"] = clusters.inertia;
  j["seed"] = seed;
  j["restarts"] = restarts;
  j["baseline"] = model_to_json(baseline);
  Json cluster_arr = Json::array();
  for (int c = 0; c < k; ++c) {
    Json entry;
    entry["id"] = c;
    Json members = Json::array();
    std::vector<double> mean_delta(std::size_t(transition_count_for(opts.order)), 0.0);
    double long_fraction = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (clusters.assignments[i] != c) continue;
      members.push_back(candidates[i].word);
      for (std::size_t slot = 0; slot < mean_delta.size(); ++slot)
        mean_delta[slot] +=
            candidates[i].freq_vector[slot] - baseline.transition_freq[slot];
      long_fraction += candidates[i].long_turn_fraction;
      ++count;
    }
    for (auto& d : mean_delta) d /= std::max(1, count);
    entry["words"] = std::move(members);
    entry["size"] = count;
    entry["mean_long_fraction"] = count ? long_fraction / count : 0.0;
    Json delta = Json::array();
    for (std::size_t slot = 0; slot < mean_delta.size(); ++slot) {
      Json d;
      d["slot"] = slot_name(int(slot), opts.order);
      d["delta"] = mean_delta[slot];
      delta.push_back(std::move(d));
    }
    entry["mean_delta"] = std::move(delta);
    cluster_arr.push_back(std::move(entry));
  }
  j["clusters"] = std::move(cluster_arr);
  ctx.write_json("clusters.json", j);
  ctx.finish();
  std::cout << "clustered " << candidates.size() << " words into " << k << "\n";
  return 0;
}

int cmd_terms_fit(const CommonOpts& opts, const std::string& list_path,
                  const std::string& role_flag, int replicates, double alpha) {
  RunContext ctx("terms fit", opts.out_dir);
  ctx.add_input(opts.in_path);
  ctx.add_input(list_path);
  const std::uint64_t seed = resolve_seed(opts.seed);
  const int workers = resolve_workers(opts.workers);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const TermList list = load_term_list(list_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  const std::optional<Role> role = parse_role_flag(role_flag);

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["list"] = list_path;
  config["role"] = role_flag;
  config["replicates"] = replicates;
  config["alpha"] = alpha;
  ctx.set_config(config);
  ctx.set_seed(seed);

  const CodymModel observed = term_list_model(corpus, list, opts.order, rule, role);

  // Null: same-size samples drawn from the all-words frequencies of the
  // same stratum.
  PopulateOptions base_options;
  base_options.order = opts.order;
  base_options.rule = rule;
  base_options.stratum = role;
  if (role) base_options.event_filter = role_filter(*role);
  base_options.weight_fn = [](const Turn& turn) { return double(turn.word_count); };
  const CodymModel base = populate_pooled(corpus, base_options);
  const std::int64_t n = std::llround(observed.total_weight);

  const NullEnsemble ensemble = build_ensemble(
      [&](int, Rng& rng) { return sample_transition_counts(base, n, rng); }, replicates, seed,
      alpha, workers);
  const SignificanceReport report = significance_report(observed, ensemble);
  const DeltaModel delta = delta_model(observed, ensemble.mean);

  ctx.write_json("observed.json", model_to_json(observed));
  ctx.write_json("null.json", ensemble_to_json(ensemble));
  ctx.write_json("significance.json", report_to_json(report, opts.order));
  render_pair(ctx, "fig_observed", observed, &report);
  render_delta_pair(ctx, "fig_delta", delta, &report);
  ctx.finish();
  std::cout << "fitted term list \"" << list.name << "\" (" << n << " occurrences)\n";
  return 0;
}

int cmd_terms_robustness(const CommonOpts& opts, const std::string& list_path,
                         const std::string& role_flag, double fraction) {
  RunContext ctx("terms robustness", opts.out_dir);
  ctx.add_input(opts.in_path);
  ctx.add_input(list_path);
  const std::uint64_t seed = resolve_seed(opts.seed);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const TermList list = load_term_list(list_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  const std::optional<Role> role = parse_role_flag(role_flag);

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["list"] = list_path;
  config["role"] = role_flag;
  config["fraction"] = fraction;
  ctx.set_config(config);
  ctx.set_seed(seed);

  const auto trials = robustness_trials(corpus, list, opts.order, rule, role, fraction, seed);
  Json j;
  j["list"] = list.name;
  j["fraction"] = fraction;
  j["seed"] = seed;
  j["trials"] = Json::array();
  for (const auto& trial : trials) {
    Json t;
    t["removed"] = trial.removed;
    t["model"] = model_to_json(trial.model);
    j["trials"].push_back(std::move(t));
  }
  ctx.write_json("robustness.json", j);
  ctx.finish();
  std::cout << trials.size() << " robustness trials\n";
  return 0;
}

int cmd_emotion_turns(const CommonOpts& opts, const std::string& tag, int replicates,
                      double alpha) {
  RunContext ctx("emotion turns", opts.out_dir);
  ctx.add_input(opts.in_path);
  const std::uint64_t seed = resolve_seed(opts.seed);
  const int workers = resolve_workers(opts.workers);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};
  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["tag"] = tag;
  config["replicates"] = replicates;
  config["alpha"] = alpha;
  ctx.set_config(config);
  ctx.set_seed(seed);

  const EmotionTurnStudy study = emotion_turn_study(corpus, tag, opts.order, rule, replicates,
                                                    seed, alpha, default_distressing_tags(),
                                                    workers);
  ctx.write_json("study.json", turn_study_to_json(study));
  render_pair(ctx, "fig_observed", study.observed, &study.report);
  render_pair(ctx, "fig_null", study.ensemble.mean, nullptr);
  ctx.finish();
  std::cout << "turn study \"" << tag << "\": " << study.n_events << " events, long rate "
            << study.long_rate << "\n";
  return 0;
}

int cmd_emotion_conversations(const CommonOpts& opts, const std::string& tags_flag,
                              bool stratified, double alpha) {
  RunContext ctx("emotion conversations", opts.out_dir);
  ctx.add_input(opts.in_path);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};

  std::set<std::string> tags;
  std::stringstream ss(tags_flag);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    if (!tag.empty()) tags.insert(tag);
  }

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["tags"] = tags;
  config["stratified"] = stratified;
  config["alpha"] = alpha;
  ctx.set_config(config);

  const EmotionConversationStudy study =
      emotion_conversation_study(corpus, tags, opts.order, rule, stratified, alpha);
  ctx.write_json("study.json", conversation_study_to_json(study));
  ctx.write_text("ks_table.csv", csv_string([&](std::ostream& out) {
                   out << "slot,d,p,mean_with,mean_without,delta,significant\n";
                   for (const auto& slot : study.slots)
                     out << slot.name << ',' << slot.d << ',' << slot.p << ',' << slot.mean_a
                         << ',' << slot.mean_b << ',' << slot.delta << ','
                         << (slot.significant ? 1 : 0) << "\n";
                 }));
  ctx.finish();
  std::cout << "conversation study: " << study.group_a_ids.size() << " with, "
            << study.group_b_ids.size() << " without\n";
  return 0;
}

int cmd_classify(const CommonOpts& opts, const std::string& tags_flag, bool stratified,
                 int trees, int repeats, double train_fraction) {
  RunContext ctx("classify", opts.out_dir);
  ctx.add_input(opts.in_path);
  const std::uint64_t seed = resolve_seed(opts.seed);

  const Corpus corpus = load_transcript_jsonl(opts.in_path);
  const BinarizationRule rule{resolve_threshold(opts.threshold, corpus, opts.order)};

  std::set<std::string> tags;
  std::stringstream ss(tags_flag);
  std::string tag;
  while (std::getline(ss, tag, ',')) {
    if (!tag.empty()) tags.insert(tag);
  }

  Json config = opts.config_json();
  config["resolved_threshold"] = rule.threshold;
  config["tags"] = tags;
  config["stratified"] = stratified;
  config["trees"] = trees;
  config["repeats"] = repeats;
  config["train_fraction"] = train_fraction;
  ctx.set_config(config);
  ctx.set_seed(seed);

  const auto label_fn = [&tags](const Conversation& conversation) {
    for (const auto& turn : conversation.turns) {
      if (turn.role != Role::Patient) continue;
      for (const auto& t : tags)
        if (turn.has_tag(t)) return true;
    }
    return false;
  };
  const FeatureTable features =
      conversation_features(corpus, opts.order, rule, stratified, label_fn);

  ForestConfig forest;
  forest.trees = trees;
  ClassificationReport report =
      repeated_holdout_eval(features, forest, repeats, train_fraction, seed);
  report.order = opts.order;
  report.stratified = stratified;

  ctx.write_json("report.json", classification_to_json(report));
  ctx.write_text("features.csv",
                 csv_string([&](std::ostream& out) { write_feature_csv(features, out); }));
  ctx.finish();
  std::cout << "classification mu=" << report.mu << " sigma=" << report.sigma
            << " p=" << report.p_value << "\n";
  return 0;
}

int cmd_render(const std::string& model_path, const std::string& report_path,
               const std::string& out_dir) {
  RunContext ctx("render", out_dir);
  ctx.add_input(model_path);
  Json config;
  config["model"] = model_path;
  config["report"] = report_path;
  ctx.set_config(config);

  const Json mj = read_json_file(model_path);
  SignificanceReport report;
  const SignificanceReport* report_ptr = nullptr;
  if (!report_path.empty()) {
    ctx.add_input(report_path);
    report = report_from_json(read_json_file(report_path));
    report_ptr = &report;
  }

  if (mj.contains("deltas")) {
    const DeltaModel model = delta_from_json(mj);
    render_delta_pair(ctx, "figure", model, report_ptr);
  } else {
    const CodymModel model = model_from_json(mj);
    render_pair(ctx, "figure", model, report_ptr);
  }
  ctx.finish();
  std::cout << "rendered figure.dot / figure.svg\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"CODYM analysis: Markov models of conversational turn-length dynamics"};
  app.require_subcommand(1);

  // ingest
  CommonOpts ingest_opts;
  int min_turns = 1;
  auto* ingest = app.add_subcommand("ingest", "parse, validate and normalize a transcript");
  ingest_opts.attach(ingest);
  ingest->add_option("--min-turns", min_turns, "drop conversations shorter than this");

  // threshold
  CommonOpts threshold_opts;
  int t_min = 2, t_max = 0;
  auto* threshold = app.add_subcommand("threshold", "entropy scan for the short/long boundary");
  threshold_opts.attach(threshold);
  threshold->add_option("--t-min", t_min, "smallest candidate threshold");
  threshold->add_option("--t-max", t_max, "largest candidate threshold (0 = observed max)");

  // fit
  CommonOpts fit_opts;
  std::string stratify = "role", null_kind = "shuffle";
  int fit_replicates = 1000;
  double fit_alpha = 0.05;
  auto* fit = app.add_subcommand("fit", "normative models with shuffle null ensembles");
  fit_opts.attach(fit);
  fit->add_option("--stratify", stratify, "role | none");
  fit->add_option("--null", null_kind, "shuffle | none");
  fit->add_option("--replicates", fit_replicates, "null model replicates");
  fit->add_option("--alpha", fit_alpha, "significance level");

  // deciles
  CommonOpts decile_opts;
  std::string decile_role = "all", decile_basis = "whole", trend_slot, trend_range;
  auto* deciles = app.add_subcommand("deciles", "narrative-time transition histograms");
  decile_opts.attach(deciles);
  deciles->add_option("--role", decile_role, "patient | clinician | all");
  deciles->add_option("--basis", decile_basis, "whole | per-role decile boundaries");
  deciles->add_option("--trend", trend_slot, "transition to trend-test (e.g. SLS-L->LSL)");
  deciles->add_option("--trend-deciles", trend_range, "decile window, e.g. 5-10");

  // words
  auto* words = app.add_subcommand("words", "word-level contextualization");
  words->require_subcommand(1);
  CommonOpts wp_opts;
  wp_opts.order = 2;
  std::string profile_word;
  auto* wprofile = words->add_subcommand("profile", "transition profile of one word");
  wp_opts.attach(wprofile);
  wprofile->add_option("--word", profile_word, "word to profile")->required();
  CommonOpts wc_opts;
  wc_opts.order = 2;
  int min_count = 100, kk = 6, restarts = 10;
  double min_delta = 10.0;
  auto* wcluster = words->add_subcommand("cluster", "k-means over candidate word profiles");
  wc_opts.attach(wcluster);
  wcluster->add_option("--min-count", min_count, "minimum corpus occurrences");
  wcluster->add_option("--min-delta", min_delta, "minimum max-slot deviation (points)");
  wcluster->add_option("-k,--clusters", kk, "number of clusters");
  wcluster->add_option("--restarts", restarts, "k-means restarts");

  // terms
  auto* terms = app.add_subcommand("terms", "term-list contextualization");
  terms->require_subcommand(1);
  CommonOpts tf_opts;
  tf_opts.order = 2;
  std::string tf_list, tf_role = "all";
  int tf_replicates = 1000;
  double tf_alpha = 0.05;
  auto* tfit = terms->add_subcommand("fit", "term model against size-matched nulls");
  tf_opts.attach(tfit);
  tfit->add_option("--list", tf_list, "term list file")->required();
  tfit->add_option("--role", tf_role, "patient | clinician | all");
  tfit->add_option("--replicates", tf_replicates, "null replicates");
  tfit->add_option("--alpha", tf_alpha, "significance level");
  CommonOpts tr_opts;
  tr_opts.order = 2;
  std::string tr_list, tr_role = "all";
  double tr_fraction = 0.10;
  auto* trob = terms->add_subcommand("robustness", "10%-removal refits until coverage");
  tr_opts.attach(trob);
  trob->add_option("--list", tr_list, "term list file")->required();
  trob->add_option("--role", tr_role, "patient | clinician | all");
  trob->add_option("--fraction", tr_fraction, "fraction of terms removed per trial");

  // emotion
  auto* emotion = app.add_subcommand("emotion", "distressing-emotion studies");
  emotion->require_subcommand(1);
  CommonOpts et_opts;
  std::string et_tag = "anger";
  int et_replicates = 1000;
  double et_alpha = 0.05;
  auto* eturns = emotion->add_subcommand("turns", "tagged patient turns vs matched nulls");
  et_opts.attach(eturns);
  eturns->add_option("--tag", et_tag, "emotion tag");
  eturns->add_option("--replicates", et_replicates, "null replicates");
  eturns->add_option("--alpha", et_alpha, "significance level");
  CommonOpts ec_opts;
  std::string ec_tags = "anger,fear";
  bool ec_stratified = false;
  double ec_alpha = 0.05;
  auto* econv = emotion->add_subcommand("conversations", "KS tests between conversation groups");
  ec_opts.attach(econv);
  econv->add_option("--tags", ec_tags, "comma-separated tags");
  econv->add_flag("--stratify", ec_stratified, "stratify by patient/clinician");
  econv->add_option("--alpha", ec_alpha, "significance level");

  // classify
  CommonOpts cls_opts;
  std::string cls_tags = "anger,fear";
  bool cls_stratified = false;
  int trees = 100, repeats = 1000;
  double train_fraction = 0.8;
  auto* classify = app.add_subcommand("classify", "random-forest repeated holdout");
  cls_opts.attach(classify);
  classify->add_option("--tags", cls_tags, "comma-separated tags defining the positive class");
  classify->add_flag("--stratify", cls_stratified, "stratify features by role");
  classify->add_option("--trees", trees, "forest size");
  classify->add_option("--repeats", repeats, "holdout repeats");
  classify->add_option("--train-fraction", train_fraction, "per-class training fraction");

  // render
  std::string render_model, render_report, render_out = default_out_dir().string();
  auto* render = app.add_subcommand("render", "model/delta JSON to DOT and SVG");
  render->add_option("--model", render_model, "model or delta JSON")->required();
  render->add_option("--report", render_report, "significance report JSON");
  render->add_option("--out", render_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_opts, min_turns);
    if (threshold->parsed()) return cmd_threshold(threshold_opts, t_min, t_max);
    if (fit->parsed()) return cmd_fit(fit_opts, stratify, null_kind, fit_replicates, fit_alpha);
    if (deciles->parsed())
      return cmd_deciles(decile_opts, decile_role, decile_basis, trend_slot, trend_range);
    if (wprofile->parsed()) return cmd_words_profile(wp_opts, profile_word);
    if (wcluster->parsed())
      return cmd_words_cluster(wc_opts, min_count, min_delta, kk, restarts);
    if (tfit->parsed()) return cmd_terms_fit(tf_opts, tf_list, tf_role, tf_replicates, tf_alpha);
    if (trob->parsed()) return cmd_terms_robustness(tr_opts, tr_list, tr_role, tr_fraction);
    if (eturns->parsed()) return cmd_emotion_turns(et_opts, et_tag, et_replicates, et_alpha);
    if (econv->parsed())
      return cmd_emotion_conversations(ec_opts, ec_tags, ec_stratified, ec_alpha);
    if (classify->parsed())
      return cmd_classify(cls_opts, cls_tags, cls_stratified, trees, repeats, train_fraction);
    if (render->parsed()) return cmd_render(render_model, render_report, render_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace codym::cli
