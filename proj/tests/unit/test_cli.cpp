#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "guest_util.hpp"
#include "rvdbt/stats.hpp"

namespace {

struct Result {
  int code;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(RVDBT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f);
  Result r;
  std::array<char, 4096> buf;
  while (size_t n = fread(buf.data(), 1, buf.size(), f)) r.out.append(buf.data(), n);
  const int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string guest(const std::string& name) { return rvtest::guest_path(name); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("successful run") {
    const auto r = cli("-q " + guest("hazards"));
    CHECK(r.code == 0);
  }

  TEST_CASE("guest exit status is passed through") {
    const auto r = cli("--target user " + guest("user_hello") + " one two");
    CHECK(r.code == 3);
    CHECK(r.out.find("hello from user mode") != std::string::npos);
  }

  TEST_CASE("configuration errors exit with 2") {
    CHECK(cli("--memory mesi --line-size 4096 " + guest("hazards")).code == 2);
    CHECK(cli("--mode parallel --memory tlb " + guest("hazards")).code == 2);
    CHECK(cli("--pipeline nosuch " + guest("hazards")).code == 2);
    CHECK(cli("--cores 0 " + guest("hazards")).code == 2);
    CHECK(cli("/nonexistent.elf").code == 2);
    CHECK(cli("").code == 2);
    const std::string bad = "/tmp/rvdbt_cli_bad.json";
    std::ofstream(bad) << R"({"cores": 2, "bogus": 1})";
    CHECK(cli("--config " + bad + " " + guest("hazards")).code == 2);
  }

  TEST_CASE("simulator errors exit with 1") {
    // crosspage needs translation; under the machine target it faults forever
    CHECK(cli("-q " + guest("crosspage")).code == 1);
  }

  TEST_CASE("statistics to stdout and file") {
    const auto r = cli("-q --deterministic --cores 2 --pipeline inorder --memory mesi --stats - " + guest("spinlock"));
    REQUIRE(r.code == 0);
    const auto kv = rvdbt::parse_stats(r.out);
    CHECK(kv.at("sim.cores") == "2");
    CHECK(kv.at("sim.memory") == "mesi");
    CHECK(kv.count("core1.l1d.hit"));

    const std::string path = "/tmp/rvdbt_cli_stats.txt";
    std::remove(path.c_str());
    CHECK(cli("-q --deterministic --stats " + path + " " + guest("hazards")).code == 0);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(rvdbt::parse_stats(text).at("sim.exit_code") == "0");
  }

  TEST_CASE("config file with flag overrides") {
    const std::string path = "/tmp/rvdbt_cli_cfg.json";
    std::ofstream(path) << R"({"cores": 2, "memory": "tlb", "deterministic": true})";
    const auto r = cli("-q --config " + path + " --memory cache --stats - " + guest("hazards"));
    REQUIRE(r.code == 0);
    const auto kv = rvdbt::parse_stats(r.out);
    CHECK(kv.at("sim.cores") == "2");
    CHECK(kv.at("sim.memory") == "cache");
  }

  TEST_CASE("per-core pipeline list") {
    const auto r = cli("-q --deterministic --cores 2 --pipeline simple,inorder --stats - " + guest("spinlock"));
    REQUIRE(r.code == 0);
    const auto kv = rvdbt::parse_stats(r.out);
    CHECK(kv.at("core0.pipeline") == "simple");
    CHECK(kv.at("core1.pipeline") == "inorder");
  }
}
