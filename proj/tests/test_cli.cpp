#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::absolute("cli_scratch");

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct Run {
  int code = -1;
  std::string output;
};

/// Runs the tool with stdout and stderr captured.
Run waltz(const std::string& args) {
  fs::create_directories(kScratch);
  const fs::path log = kScratch / "last_output.txt";
  const std::string cmd = std::string("\"") + WALTZ_TOOL + "\" " + args + " > \"" + log.string() +
                          "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

/// The default fixture with a short, fixed dance length.
fs::path short_config() {
  std::istringstream in(slurp(fs::path(WALTZ_SOURCE_DIR) / "config" / "default_synth.conf"));
  std::string out, line;
  while (std::getline(in, line)) {
    if (line.rfind("length_range", 0) == 0) line = "length_range = 5 5";
    if (line.rfind("dances", 0) == 0) line = "dances = 7";
    out += line + "\n";
  }
  const auto p = kScratch / "short.conf";
  spit(p, out);
  return p;
}

std::string posterior_file_text(const std::string& extra_row = "") {
  std::string h = "dance_id,position,BL,BW,CTR,DR,LCC,N1,N2,NST,OC,PC,R1,R2,RC,RCC,W,Weave\n";
  // Position 0: W 0.6 / LCC 0.4. Position 1: RCC.
  h += "d,0,0,0,0,0,0.4,0,0,0,0,0,0,0,0,0,0.6,0\n";
  h += "d,1,0,0,0,0,0,0,0,0,0,0,0,0,0,1,0,0\n";
  return h + extra_row;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate is byte-for-byte deterministic") {
  const auto conf = short_config();
  const auto a = kScratch / "sim_a";
  const auto b = kScratch / "sim_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(waltz("simulate --config " + q(conf) + " --seed 5 --out " + q(a)).code == 0);
  REQUIRE(waltz("simulate --config " + q(conf) + " --seed 5 --out " + q(b)).code == 0);
  for (const auto* name : {"dances.csv", "labels.csv", "ideal_samples.csv", "logs/dance_0000.csv",
                           "logs/dance_0006.csv", "transition_matrix.json"}) {
    CAPTURE(name);
    CHECK(!slurp(a / name).empty());
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto c = kScratch / "sim_c";
  fs::remove_all(c);
  REQUIRE(waltz("simulate --config " + q(conf) + " --seed 6 --out " + q(c)).code == 0);
  CHECK(slurp(a / "logs/dance_0000.csv") != slurp(c / "logs/dance_0000.csv"));
  CHECK(fs::exists(a / "simulate.manifest.json"));
}

TEST_CASE("ingest a single log") {
  const auto conf = short_config();
  const auto sim = kScratch / "sim_ing";
  fs::remove_all(sim);
  REQUIRE(waltz("simulate --config " + q(conf) + " --out " + q(sim)).code == 0);
  const auto out = kScratch / "ing";
  fs::remove_all(out);
  const auto r = waltz("ingest " + q(sim / "logs/dance_0000.csv") +
                       " --tempo 28.5 --intro 10 --figures 2 --out " + q(out));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto text = slurp(out / "samples.csv");
  // Header plus two rows.
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("\ndance_0000,1,") != std::string::npos);
}

TEST_CASE("simulate, ingest and oracle eval") {
  const auto conf = short_config();
  const auto dir = kScratch / "pipe";
  fs::remove_all(dir);
  REQUIRE(waltz("simulate --config " + q(conf) + " --out " + q(dir)).code == 0);
  REQUIRE(waltz("ingest --dances " + q(dir / "dances.csv") + " --labels " +
                q(dir / "labels.csv") + " --out " + q(dir))
              .code == 0);
  const auto r = waltz("eval --samples " + q(dir / "samples.csv") +
                       " --classifier oracle --out " + q(dir / "ev"));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CHECK(r.output.find("100.00") != std::string::npos);
  CHECK(fs::exists(dir / "ev/report.json"));
  CHECK(fs::exists(dir / "ev/confusion_corrected.csv"));
  CHECK(fs::exists(dir / "ev/eval.manifest.json"));
}

TEST_CASE("correct fixes the whisk example") {
  const auto p = kScratch / "post.csv";
  spit(p, posterior_file_text());
  const auto out = kScratch / "cor";
  const auto r = waltz("correct --posteriors " + q(p) + " --out " + q(out));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  const auto text = slurp(out / "corrections.csv");
  CHECK(text.find("d,0,W,LCC,1") != std::string::npos);
  CHECK(text.find("d,1,RCC,RCC,0") != std::string::npos);
  const auto s = waltz("correct --stream --posteriors " + q(p) + " --out " + q(out));
  CHECK(s.code == 0);
  CHECK(s.output.find("d 0 LCC") != std::string::npos);
}

TEST_CASE("error exit codes") {
  CHECK(waltz("eval --samples /nonexistent/samples.csv --out " + q(kScratch / "x")).code == 3);
  CHECK(waltz("frobnicate").code == 2);
  CHECK(waltz("eval").code == 2);
  CHECK(waltz("simulate --jobs 0").code == 2);

  const auto p = kScratch / "bad_post.csv";
  spit(p, posterior_file_text("d,2,0.5,0.3,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n"));
  const auto r = waltz("correct --posteriors " + q(p) + " --out " + q(kScratch / "bad"));
  CHECK(r.code == 3);
  CHECK(r.output.find("bad_post.csv:4") != std::string::npos);

  const auto conf = kScratch / "broken.conf";
  spit(conf, "dances = 3\nbogus_field = 1\n");
  const auto c = waltz("simulate --config " + q(conf) + " --out " + q(kScratch / "y"));
  CHECK(c.code == 3);
  CHECK(c.output.find("broken.conf") != std::string::npos);
}

TEST_CASE("report exports the unbiased matrix") {
  const auto out = kScratch / "rep";
  const auto r = waltz("report --matrix unbiased --out " + q(out));
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CHECK(fs::exists(out / "transition_matrix.json"));
  CHECK(fs::exists(out / "transition_matrix.csv"));
}

}  // TEST_SUITE
