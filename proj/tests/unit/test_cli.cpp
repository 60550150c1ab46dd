#include "doctest.h"

#include "engorgio/cli/commands.hpp"
#include "engorgio/cli/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using engorgio::cli::run_command;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "engorgio");
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("engorgio_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const fs::path& dir) {
    nlohmann::json j = {
        {"seed", 5},
        {"output_dir", (dir / "out").string()},
        {"train",
         {{"dims", {{"hidden", 16}, {"max_context", 64}}},
          {"steps", 20},
          {"batch_size", 4},
          {"corpus_lines", 120}}},
        {"attack", {{"steps", 4}, {"prompt_length", 8}}},
        {"eval",
         {{"n_samples", 6},
          {"n_prompts", 4},
          {"temperatures", {0.1, 0.7}},
          {"sponge", {{"budget", 3}, {"samples_per_estimate", 2}}}}},
        {"service", {{"flops_out_lens", {0, 8, 16}}}},
    };
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return files;
}

void pipeline(const fs::path& cfg) {
    const std::string c = cfg.string();
    REQUIRE(run({"train", "-c", c}).code == 0);
    REQUIRE(run({"attack", "-c", c}).code == 0);
    REQUIRE(run({"eval", "-c", c}).code == 0);
    REQUIRE(run({"eval", "-c", c, "--baseline", "normal"}).code == 0);
    REQUIRE(run({"eval", "-c", c, "--baseline", "sponge"}).code == 0);
    REQUIRE(run({"sweep", "-c", c}).code == 0);
    REQUIRE(run({"simulate", "-c", c}).code == 0);
    const fs::path out = cfg.parent_path() / "out";
    REQUIRE(run({"report", "-c", c, (out / "eval_engorgio.json").string(), (out / "eval_normal.json").string()}).code ==
            0);
}

} // namespace

TEST_CASE("cli rejects bad input with exit code 2") {
    const fs::path dir = scratch("errors");
    Run r = run({"eval", "--model", (dir / "missing.bin").string(), "-o", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("missing.bin") != std::string::npos);

    std::ofstream(dir / "bad.json") << R"({"attack": {"stepz": 3}})";
    r = run({"attack", "-c", (dir / "bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("attack.stepz") != std::string::npos);

    std::ofstream(dir / "type.json") << R"({"seed": "x"})";
    CHECK(run({"simulate", "-c", (dir / "type.json").string()}).code == 2);
    CHECK(run({"simulate", "-o", dir.string(), "--attackers", "11"}).code == 2);
    CHECK(run({"frobnicate"}).code != 0);
}

TEST_CASE("simulate reproduces the worked example") {
    const fs::path dir = scratch("simulate");
    const Run r = run({"simulate", "-o", dir.string(), "--attackers", "1"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "simulate.json"));
    CHECK(j["closed_form"]["l_req"].get<double>() == 95.0);
    CHECK(j["closed_form"]["l_total"].get<double>() == 950.0);
    CHECK(fs::exists(dir / "service_grid.csv"));
    CHECK(fs::exists(dir / "flops.csv"));
}

TEST_CASE("full pipeline reruns are byte-identical") {
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    pipeline(write_config(a));
    pipeline(write_config(b));
    auto sa = snapshot(a / "out"), sb = snapshot(b / "out");
    REQUIRE(sa.size() == sb.size());
    for (const auto& [name, bytes] : sa) {
        INFO(name);
        REQUIRE(sb.count(name) == 1);
        // artifacts carry their own output paths; compare after rebasing
        std::string other = sb[name];
        const std::string from = (b / "out").string(), to = (a / "out").string();
        for (std::size_t pos = other.find(from); pos != std::string::npos; pos = other.find(from, pos + to.size())) {
            other.replace(pos, from.size(), to);
        }
        CHECK(bytes == other);
    }
    CHECK(sa.count("model.bin") == 1);
    CHECK(sa.count("attack.json") == 1);
    CHECK(sa.count("eval_engorgio.json") == 1);
    CHECK(sa.count("eval_sponge.json") == 1);
    CHECK(sa.count("sweep_engorgio.json") == 1);
    CHECK(sa.count("report.csv") == 1);
}

TEST_CASE("zero-step attack and special baseline") {
    const fs::path dir = scratch("zero");
    const std::string c = write_config(dir).string();
    REQUIRE(run({"train", "-c", c}).code == 0);
    REQUIRE(run({"attack", "-c", c, "--steps", "0"}).code == 0);
    const auto bundle = nlohmann::json::parse(slurp(dir / "out" / "attack.json"));
    CHECK(bundle["prompt_tokens"].size() == 8);
    REQUIRE(run({"eval", "-c", c, "--baseline", "special"}).code == 0);
    const auto ev = nlohmann::json::parse(slurp(dir / "out" / "eval_special.json"));
    CHECK(ev.contains("avg_len"));
}

TEST_CASE("shipped configs load and default.json mirrors the built-in defaults") {
    const fs::path configs = fs::path(ENGORGIO_SOURCE_DIR) / "configs";
    for (const auto& e : fs::directory_iterator(configs)) {
        INFO(e.path().string());
        CHECK_NOTHROW(engorgio::cli::load_config(e.path()));
    }
    const auto shipped = nlohmann::json::parse(slurp(configs / "default.json"));
    CHECK(shipped == engorgio::cli::config_to_json(engorgio::cli::ExperimentConfig{}));
}
