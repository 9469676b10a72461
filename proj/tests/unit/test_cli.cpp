#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "codym/serialize.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace codym;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("codym");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  return cli::run(int(argv.size()), argv.data());
}

struct Workspace {
  fs::path root;

  Workspace() {
    root = fs::temp_directory_path() / "codym_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }

  fs::path dir(const std::string& name) const {
    const fs::path d = root / name;
    fs::create_directories(d);
    return d;
  }
};

fs::path write_corpus(const Workspace& ws, const std::string& name, const Corpus& corpus) {
  const fs::path path = ws.root / name;
  std::ofstream out(path);
  write_transcript_jsonl(corpus, out);
  return path;
}

Corpus demo_corpus(bool with_words) {
  synth::ChainSpec spec;
  spec.conversations = 24;
  spec.min_turns = 40;
  spec.max_turns = 60;
  spec.with_words = with_words;
  spec.tag_prob = 0.15;
  spec.tag = "anger";
  return synth::generate(spec, 1234);
}

// output-name -> sha256 from a run manifest
std::map<std::string, std::string> output_hashes(const fs::path& out_dir) {
  const Json manifest = read_json_file(out_dir / "manifest.json");
  std::map<std::string, std::string> hashes;
  for (const auto& entry : manifest.at("outputs"))
    hashes[fs::path(entry.at("path").get<std::string>()).filename().string()] =
        entry.at("sha256").get<std::string>();
  return hashes;
}

}  // namespace

TEST_CASE("cli: usage errors exit nonzero") {
  CHECK(run_cli({}) != 0);
  CHECK(run_cli({"no-such-command"}) != 0);
  CHECK(run_cli({"ingest", "--in", "/nonexistent/corpus.jsonl", "--out", "/tmp/x"}) != 0);
}

TEST_CASE("cli: ingest, threshold, fit, deciles pipeline") {
  Workspace ws;
  const fs::path corpus_path = write_corpus(ws, "corpus.jsonl", demo_corpus(false));

  const fs::path ingest_dir = ws.dir("ingest");
  REQUIRE(run_cli({"ingest", "--in", corpus_path.string(), "--out", ingest_dir.string(),
                   "--min-turns", "20"}) == 0);
  CHECK(fs::exists(ingest_dir / "normalized.jsonl"));
  CHECK(fs::exists(ingest_dir / "manifest.json"));
  const Json summary = read_json_file(ingest_dir / "summary.json");
  CHECK(summary.at("conversations").get<int>() == 24);

  const fs::path threshold_dir = ws.dir("threshold");
  REQUIRE(run_cli({"threshold", "--in", corpus_path.string(), "--out",
                   threshold_dir.string(), "--order", "3"}) == 0);
  const Json th = read_json_file(threshold_dir / "threshold.json");
  CHECK(th.at("threshold").get<int>() == 8);
  CHECK(fs::exists(threshold_dir / "entropy_curve.csv"));

  const fs::path fit_dir = ws.dir("fit");
  REQUIRE(run_cli({"fit", "--in", corpus_path.string(), "--out", fit_dir.string(), "--order",
                   "3", "--threshold", "auto", "--stratify", "role", "--null", "shuffle",
                   "--replicates", "25", "--seed", "7", "--workers", "2"}) == 0);
  for (const auto* name :
       {"observed_patient.json", "observed_clinician.json", "null_patient.json",
        "significance_patient.json", "null_patient_samples.csv", "fig_observed_patient.svg",
        "fig_null_clinician.dot"}) {
    CHECK_MESSAGE(fs::exists(fit_dir / name), name);
  }
  const CodymModel observed = model_from_json(read_json_file(fit_dir / "observed_patient.json"));
  CHECK(observed.order == 3);
  CHECK(observed.stratum == Role::Patient);

  const fs::path deciles_dir = ws.dir("deciles");
  REQUIRE(run_cli({"deciles", "--in", corpus_path.string(), "--out", deciles_dir.string(),
                   "--order", "3", "--role", "patient", "--trend", "SLS-L->LSL",
                   "--trend-deciles", "5-10"}) == 0);
  CHECK(fs::exists(deciles_dir / "deciles.csv"));
  CHECK(fs::exists(deciles_dir / "deciles_raw.csv"));
  const Json trend = read_json_file(deciles_dir / "trend.json");
  CHECK(trend.at("transition").get<std::string>() == "SLS-L->LSL");
  CHECK(std::abs(trend.at("rho").get<double>()) <= 1.0);
}

TEST_CASE("cli: reruns with one seed are hash-identical across worker counts") {
  Workspace ws;
  const fs::path corpus_path = write_corpus(ws, "corpus.jsonl", demo_corpus(false));

  const fs::path a = ws.dir("fit_a"), b = ws.dir("fit_b");
  for (const auto& [dir, workers] : {std::pair{a, "1"}, std::pair{b, "4"}}) {
    REQUIRE(run_cli({"fit", "--in", corpus_path.string(), "--out", dir.string(), "--order", "3",
                     "--stratify", "role", "--null", "shuffle", "--replicates", "30", "--seed",
                     "99", "--workers", workers}) == 0);
  }
  CHECK(output_hashes(a) == output_hashes(b));

  // A different seed changes the ensemble outputs.
  const fs::path c = ws.dir("fit_c");
  REQUIRE(run_cli({"fit", "--in", corpus_path.string(), "--out", c.string(), "--order", "3",
                   "--stratify", "role", "--null", "shuffle", "--replicates", "30", "--seed",
                   "100", "--workers", "2"}) == 0);
  CHECK(output_hashes(a) != output_hashes(c));
  // Observed models do not depend on the seed.
  CHECK(output_hashes(a).at("observed_patient.json") ==
        output_hashes(c).at("observed_patient.json"));
}

TEST_CASE("cli: words, terms, emotion, classify, render") {
  Workspace ws;
  const fs::path corpus_path = write_corpus(ws, "corpus.jsonl", demo_corpus(true));

  const fs::path wp = ws.dir("wprofile");
  REQUIRE(run_cli({"words", "profile", "--in", corpus_path.string(), "--out", wp.string(),
                   "--word", "w7"}) == 0);
  const Json profile = read_json_file(wp / "word_profile.json");
  CHECK(profile.at("word").get<std::string>() == "w7");
  CHECK(profile.at("total_count").get<int>() > 0);

  const fs::path wc = ws.dir("wcluster");
  REQUIRE(run_cli({"words", "cluster", "--in", corpus_path.string(), "--out", wc.string(),
                   "--min-count", "5", "--min-delta", "0.1", "-k", "3", "--seed", "3"}) == 0);
  CHECK(fs::exists(wc / "clusters.csv"));
  const Json clusters = read_json_file(wc / "clusters.json");
  CHECK(clusters.at("clusters").size() == 3);

  const fs::path list_path = ws.root / "list.txt";
  {
    std::ofstream out(list_path);
    out << "# demo list\nw1\nw2\nw3\nw4\nw5\nw6\nw7\nw8\nw9\nw1*\n";
  }
  const fs::path tf = ws.dir("terms_fit");
  REQUIRE(run_cli({"terms", "fit", "--in", corpus_path.string(), "--out", tf.string(),
                   "--list", list_path.string(), "--role", "patient", "--replicates", "40",
                   "--seed", "11"}) == 0);
  CHECK(fs::exists(tf / "observed.json"));
  CHECK(fs::exists(tf / "fig_delta.svg"));
  const Json null_json = read_json_file(tf / "null.json");
  CHECK(null_json.at("replicates").get<int>() == 40);

  const fs::path tr = ws.dir("terms_rob");
  REQUIRE(run_cli({"terms", "robustness", "--in", corpus_path.string(), "--out", tr.string(),
                   "--list", list_path.string(), "--fraction", "0.2", "--seed", "13"}) == 0);
  const Json robustness = read_json_file(tr / "robustness.json");
  CHECK(robustness.at("trials").size() >= 2);

  const fs::path et = ws.dir("emotion_turns");
  REQUIRE(run_cli({"emotion", "turns", "--in", corpus_path.string(), "--out", et.string(),
                   "--tag", "anger", "--replicates", "50", "--seed", "17"}) == 0);
  const Json study = read_json_file(et / "study.json");
  CHECK(study.at("emotion").get<std::string>() == "anger");
  CHECK(study.at("n_events").get<int>() > 0);

  // Conversation-level analyses need both tagged and untagged conversations;
  // tag exactly half of a tag-free corpus.
  synth::ChainSpec plain = synth::ChainSpec{};
  plain.conversations = 24;
  plain.min_turns = 40;
  plain.max_turns = 60;
  Corpus grouped = synth::generate(plain, 4321);
  for (std::size_t c = 0; c < grouped.conversations.size(); c += 2) {
    for (auto& turn : grouped.conversations[c].turns) {
      if (turn.role == Role::Patient) {
        turn.tags.insert("anger");
        break;
      }
    }
  }
  const fs::path grouped_path = write_corpus(ws, "grouped.jsonl", grouped);

  const fs::path ec = ws.dir("emotion_conv");
  REQUIRE(run_cli({"emotion", "conversations", "--in", grouped_path.string(), "--out",
                   ec.string(), "--tags", "anger", "--stratify"}) == 0);
  CHECK(fs::exists(ec / "ks_table.csv"));
  const Json conv_study = read_json_file(ec / "study.json");
  CHECK(conv_study.at("group_a_size").get<int>() == 12);
  CHECK(conv_study.at("group_b_size").get<int>() == 12);

  const fs::path cls = ws.dir("classify");
  REQUIRE(run_cli({"classify", "--in", grouped_path.string(), "--out", cls.string(), "--tags",
                   "anger", "--trees", "20", "--repeats", "10", "--seed", "19"}) == 0);
  const Json report = read_json_file(cls / "report.json");
  CHECK(report.at("repeats").get<int>() == 10);
  CHECK(fs::exists(cls / "features.csv"));

  const fs::path rn = ws.dir("render");
  REQUIRE(run_cli({"render", "--model", (tf / "observed.json").string(), "--report",
                   (tf / "significance.json").string(), "--out", rn.string()}) == 0);
  CHECK(fs::exists(rn / "figure.dot"));
  CHECK(fs::exists(rn / "figure.svg"));
}
