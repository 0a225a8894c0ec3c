#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fake_sidecar.hpp"
#include "intent_miner/core_model.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace intent_miner;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  explicit Workspace(const std::string& name) : dir_(fs::temp_directory_path() / ("intent_miner_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args) const {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + INTENT_MINER_CLI + "\" " + args + " 2>\"" + err_path.string() + "\"";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_path);
    return r;
  }

 private:
  fs::path dir_;
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

const char* kSmallModelFlags = " --dimension 16 --merge-dim 8 --fusion-dim 4 --epochs 3 --patience 2";

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Workspace ws("usage");
  auto r = ws.run("--bogus");
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);

  r = ws.run("stats");
  CHECK(r.code == 1);
  CHECK(r.err.find("--dataset") != std::string::npos);

  r = ws.run("stats --dataset " + (ws / "missing.jsonl").string());
  CHECK(r.code == 1);

  r = ws.run("--version");
  CHECK(r.code == 0);
  CHECK_FALSE(r.out.empty());
}

TEST_CASE("invalid records exit with 1 and name the line") {
  Workspace ws("invalid");
  write(ws / "bad.jsonl",
        R"({"id":"1","source":"stackexchange","title":"t","body_html":"b","labels":["how-to"]})"
        "\n"
        R"({"id":"2","source":"stackexchange","title":"t","body_html":"b","labels":["wishlist"]})"
        "\n");
  const auto r = ws.run("stats --dataset " + (ws / "bad.jsonl").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("stats") {
  Workspace ws("stats");
  save_dataset(ws / "data.jsonl", testing::synthetic_dataset(42));
  const auto r = ws.run("stats --dataset " + (ws / "data.jsonl").string());
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["posts"] == 784);
  CHECK(j["labels"]["how-to"] == 273);
  CHECK(j["labels"]["learning"] == 23);
  CHECK(j["total_labels"] == 926);
  CHECK(j["schema_version"] == 1);
}

TEST_CASE("train, predict, evaluate") {
  Workspace ws("pipeline");
  save_dataset(ws / "data.jsonl", testing::synthetic_dataset(3, 40));
  auto r = ws.run("train --dataset " + (ws / "data.jsonl").string() + " --output " + (ws / "model.json").string() +
                  " --log " + (ws / "log.json").string() + kSmallModelFlags);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(ws / "model.json"));

  write(ws / "posts.jsonl",
        R"({"id":"q1","source":"discourse","title":"How do I configure nginx?","body_html":"<p>Steps?</p><pre><code>server { listen 80; }</code></pre>"})"
        "\n");
  r = ws.run("predict --model " + (ws / "model.json").string() + " --input " + (ws / "posts.jsonl").string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto line = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  CHECK(line["id"] == "q1");
  CHECK(line["scores"].size() == 7);
  CHECK_FALSE(line["labels"].empty());

  SUBCASE("evaluate on ground-truth scores") {
    std::string preds;
    for (const auto& p : testing::synthetic_dataset(3, 40)) {
      nlohmann::json j;
      j["id"] = p.post.id;
      j["scores"] = p.labels.indicator();
      j["labels"] = p.labels.codes();
      preds += j.dump() + "\n";
    }
    write(ws / "preds.jsonl", preds);
    r = ws.run("evaluate --predictions " + (ws / "preds.jsonl").string());
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report["metrics"]["micro"]["f1"] == 1.0);
  }
}

TEST_CASE("crossval is reproducible") {
  Workspace ws("crossval");
  save_dataset(ws / "data.jsonl", testing::synthetic_dataset(5, 50));
  const std::string base = "crossval --dataset " + (ws / "data.jsonl").string() + kSmallModelFlags + " --output-dir ";
  auto r1 = ws.run(base + (ws / "run1").string());
  REQUIRE_MESSAGE(r1.code == 0, r1.err);
  auto r2 = ws.run(base + (ws / "run2").string() + " --jobs 2");
  REQUIRE_MESSAGE(r2.code == 0, r2.err);
  CHECK(slurp(ws / "run1" / "report.json") == slurp(ws / "run2" / "report.json"));
  CHECK(slurp(ws / "run1" / "fold-3" / "predictions.jsonl") == slurp(ws / "run2" / "fold-3" / "predictions.jsonl"));
}

TEST_CASE("sidecar provider") {
  Workspace ws("sidecar");
  save_dataset(ws / "data.jsonl", testing::synthetic_dataset(5, 30));
  SUBCASE("unreachable sidecar exits with 2") {
    int port = 0;
    {
      testing::FakeSidecar probe(16);
      const auto a = probe.address();
      port = std::stoi(a.substr(a.rfind(':') + 1));
    }
    const auto r = ws.run("train --dataset " + (ws / "data.jsonl").string() + " --output " +
                          (ws / "m.json").string() + kSmallModelFlags +
                          " --provider sidecar --sidecar 127.0.0.1:" + std::to_string(port));
    CHECK(r.code == 2);
  }
  SUBCASE("conforming sidecar") {
    testing::FakeSidecar server(16);
    const auto r = ws.run("train --dataset " + (ws / "data.jsonl").string() + " --output " +
                          (ws / "m.json").string() + kSmallModelFlags + " --provider sidecar --sidecar " +
                          server.address());
    CHECK_MESSAGE(r.code == 0, r.err);
  }
}

TEST_CASE("agreement") {
  Workspace ws("agreement");
  const auto data = testing::synthetic_dataset(8, 20);
  save_dataset(ws / "a.jsonl", data);
  save_dataset(ws / "b.jsonl", data);
  const auto r = ws.run("agreement --a " + (ws / "a.jsonl").string() + " --b " + (ws / "b.jsonl").string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["items"] == 20);
}
