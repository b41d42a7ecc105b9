#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;
using d2stoch::cli::run;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("d2stoch_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& file) {
  std::ifstream f(file, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes for usage errors") {
    TempDir d;
    const std::string out = d.sub("o");
    CHECK(run({}) == 2);
    CHECK(run({"bogus"}) == 2);
    CHECK(run({"verify", "--model", "nope", "--out", out}) == 2);
    CHECK(run({"verify", "--model", "periodic-sym", "--frobnicate", "--out", out}) == 2);
    CHECK(run({"verify", "--model", "periodic-sym", "--tol", "0.5", "--out", out}) == 2);
    CHECK(run({"verify", "--model", "periodic-sym", "--tol", "-1", "--out", out}) == 2);
    CHECK(run({"verify", "--model", "periodic-sym", "--N", "0", "--out", out}) == 2);
    CHECK(run({"--help"}) == 0);
  }

  TEST_CASE("verify passes and writes JSON") {
    TempDir d;
    const std::string out = d.sub("v");
    REQUIRE(run({"verify", "--model", "periodic-sym", "--N", "2", "--out", out}) == 0);
    const auto j = nlohmann::json::parse(slurp(out + "/verify.json"));
    CHECK(j.at("pass").get<bool>());
  }

  TEST_CASE("bae reports a complete lane") {
    TempDir d;
    CHECK(run({"bae", "--model", "periodic-sym", "--N", "4", "--lane", "sigma", "--out", d.sub("b")}) == 0);
  }

  TEST_CASE("output is byte-identical across runs and thread counts") {
    TempDir d;
    const std::vector<std::string> base = {"spectrum", "--model", "periodic-sym", "--N", "4", "--lane", "sigma",
                                           "--format", "csv"};
    auto with = [&](const std::string& dir, const std::string& threads) {
      auto a = base;
      a.insert(a.end(), {"--out", dir, "--threads", threads});
      return run(a);
    };
    REQUIRE(with(d.sub("a"), "1") == 0);
    REQUIRE(with(d.sub("b"), "1") == 0);
    REQUIRE(with(d.sub("c"), "4") == 0);
    const std::string a = slurp(d.sub("a") + "/spectrum.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(d.sub("b") + "/spectrum.csv"));
    CHECK(a == slurp(d.sub("c") + "/spectrum.csv"));
  }

  TEST_CASE("spectrum CSV carries the periodic N = 4 roots") {
    TempDir d;
    REQUIRE(run({"spectrum", "--model", "periodic-sym", "--N", "4", "--lane", "sigma", "--format", "csv", "--out",
                 d.sub("s")}) == 0);
    const auto ls = lines(slurp(d.sub("s") + "/spectrum.csv"));
    REQUIRE(ls.size() == 17);
    CHECK(ls[0] == "ed_re,ed_im,bethe_re,bethe_im,residual,singular,roots");
    const std::string text = slurp(d.sub("s") + "/spectrum.csv");
    CHECK(text.find("-0.5000-0.2887i, -0.5000+0.2887i") != std::string::npos);
    CHECK(text.find("-1.0000+0.0000i, 0.0000+0.0000i") != std::string::npos);
  }

  TEST_CASE("evolve reaches the uniform sector value") {
    TempDir d;
    REQUIRE(run({"evolve", "--model", "periodic-sym", "--N", "3", "--initial", "-2,-1,+1", "--times", "0:50:2",
                 "--format", "csv", "--out", d.sub("e")}) == 0);
    const auto ls = lines(slurp(d.sub("e") + "/evolve.csv"));
    REQUIRE(ls.size() == 3);
    // last row: t = 50; the nonzero coefficients are all 1/9
    std::stringstream row(ls.back());
    std::string cell;
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == 50.0);
    int nine = 0;
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      if (std::abs(v) > 1e-6) {
        CHECK(v == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
        ++nine;
      }
    }
    CHECK(nine == 9);
  }

  TEST_CASE("config file supplies options and the command line wins") {
    TempDir d;
    const std::string cfg = d.sub("cfg.json");
    {
      std::ofstream f(cfg);
      f << R"({"model": "twisted-sym", "N": 2, "format": "json"})";
    }
    REQUIRE(run({"verify", "--config", cfg, "--N", "3", "--out", d.sub("c")}) == 0);
    const auto j = nlohmann::json::parse(slurp(d.sub("c") + "/verify.json"));
    CHECK(j.at("N").get<int>() == 3);
    CHECK(j.at("model").get<std::string>() == "twisted-sym");

    const std::string bad = d.sub("bad.json");
    {
      std::ofstream f(bad);
      f << R"({"modle": "twisted-sym"})";
    }
    CHECK(run({"verify", "--config", bad, "--out", d.sub("x")}) == 2);
  }

  TEST_CASE("steady and profile commands") {
    TempDir d;
    CHECK(run({"steady", "--model", "twisted-sym", "--N", "3", "--initial", "-2,-1,+1", "--out", d.sub("t")}) == 0);
    CHECK(run({"steady", "--model", "periodic-asym", "--N", "3", "--out", d.sub("t2")}) == 2);
    REQUIRE(run({"profile", "--model", "open-sym", "--N", "3", "--format", "csv", "--out", d.sub("p")}) == 0);
    const auto ls = lines(slurp(d.sub("p") + "/profile.csv"));
    CHECK(ls.size() == 1 + 3 * 4);
  }
}
