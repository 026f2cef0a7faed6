#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = DVFS_CLI_PATH;
const fs::path kConfigs = fs::path(DVFS_SOURCE_DIR) / "configs";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("dvfs_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
    const std::string cmd = kCli + " " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        std::string text = slurp(e.path());
        if (rel.rfind("run_", 0) == 0) {
            json j = json::parse(text);
            j.erase("metadata");
            text = j.dump();
        }
        files[rel] = std::move(text);
    }
    return files;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Child process running `dvfs serve`; stdout is captured through a pipe.
struct ServeProcess {
    pid_t pid = -1;
    int out_fd = -1;

    explicit ServeProcess(const std::vector<std::string>& args) {
        int fds[2];
        REQUIRE(pipe(fds) == 0);
        pid = fork();
        REQUIRE(pid >= 0);
        if (pid == 0) {
            dup2(fds[1], STDOUT_FILENO);
            close(fds[0]);
            close(fds[1]);
            std::vector<char*> argv{const_cast<char*>(kCli.c_str())};
            for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execv(kCli.c_str(), argv.data());
            _exit(127);
        }
        close(fds[1]);
        out_fd = fds[0];
    }

    /// Port parsed from the "listening on host:port" line; -1 if the process ended first.
    int wait_for_port() {
        std::string buf;
        char c;
        while (read(out_fd, &c, 1) == 1) {
            if (c != '\n') {
                buf.push_back(c);
                continue;
            }
            const auto at = buf.find("listening on ");
            if (at != std::string::npos) return std::stoi(buf.substr(buf.rfind(':') + 1));
            buf.clear();
        }
        return -1;
    }

    int wait_exit() {
        int status = 0;
        waitpid(pid, &status, 0);
        pid = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    ~ServeProcess() {
        if (pid > 0) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
        }
        if (out_fd >= 0) close(out_fd);
    }
};

std::string quick(const fs::path& out) {
    return "--config '" + (kConfigs / "quick.json").string() + "' --out '" + out.string() + "'";
}

}  // namespace

TEST_CASE("synth writes the expected record count") {
    TempDir tmp("synth");
    REQUIRE(run(quick(tmp.path / "o") + " synth", tmp.path / "log") == 0);
    const std::string csv = slurp(tmp.path / "o" / "dataset.csv");
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + 8 * 14);
    CHECK(fs::exists(tmp.path / "o" / "dataset.oracle.json"));
    CHECK(slurp(tmp.path / "log").find("112 records") != std::string::npos);

    REQUIRE(run(quick(tmp.path / "o2") + " synth", tmp.path / "log") == 0);
    CHECK(slurp(tmp.path / "o2" / "dataset.csv") == csv);
}

TEST_CASE("configuration errors exit with 2") {
    TempDir tmp("errors");
    const fs::path log = tmp.path / "log";
    SUBCASE("missing device spec") {
        CHECK(run("--seed 1 --out '" + tmp.path.string() + "/o' synth", log) == 2);
        CHECK(run("--seed 1 --device '" + tmp.path.string() + "/nope.json' --out '" + tmp.path.string() + "/o' synth",
                  log) == 2);
    }
    SUBCASE("missing seed") {
        const fs::path cfg = tmp.path / "noseed.json";
        write_text(cfg, R"({"device": ")" + (kConfigs / "p100-desk.json").string() + R"("})");
        CHECK(run("--config '" + cfg.string() + "' --out '" + tmp.path.string() + "/o' synth", log) == 2);
    }
    SUBCASE("unknown model kind") {
        REQUIRE(run(quick(tmp.path / "o") + " synth", log) == 0);
        CHECK(run(quick(tmp.path / "o") + " train --model svr", log) == 2);
        const fs::path cfg = tmp.path / "badkind.json";
        write_text(cfg, R"({"seed": 1, "device": ")" + (kConfigs / "p100-desk.json").string() +
                            R"(", "models": {"compare": [{"kind": "svr"}]}})");
        CHECK(run("--config '" + cfg.string() + "' --out '" + tmp.path.string() + "/o' train", log) == 2);
    }
    SUBCASE("missing model files for serve and simulate") {
        CHECK(run(quick(tmp.path / "empty") + " serve --port 0", log) == 2);
        CHECK(slurp(log).find("model") != std::string::npos);
        REQUIRE(run(quick(tmp.path / "o") + " synth", log) == 0);
        CHECK(run(quick(tmp.path / "o") + " simulate", log) == 2);
    }
    SUBCASE("malformed dataset") {
        REQUIRE(run(quick(tmp.path / "o") + " synth", log) == 0);
        std::string csv = slurp(tmp.path / "o" / "dataset.csv");
        csv.replace(csv.find('\n') + 1, 5, "x,y,z");
        write_text(tmp.path / "o" / "dataset.csv", csv);
        CHECK(run(quick(tmp.path / "o") + " train", log) == 2);
    }
    SUBCASE("bad flag") { CHECK(run("--seed 1 synth --no-such-flag", log) == 2); }
    SUBCASE("bad policy name") {
        CHECK(run(quick(tmp.path / "o") + " simulate --policies fastest", log) == 2);
    }
}

TEST_CASE("unwritable output is a runtime failure") {
    TempDir tmp("runtime");
    write_text(tmp.path / "blocker", "a file where a directory should be");
    CHECK(run(quick(tmp.path / "blocker" / "o") + " synth", tmp.path / "log") == 1);
}

TEST_CASE("end-to-end runs are byte-identical apart from timestamps") {
    TempDir tmp("determinism");
    const fs::path out = tmp.path / "o";
    auto pipeline = [&] {
        for (const char* cmd : {"synth", "train", "evaluate", "simulate"})
            REQUIRE(run(quick(out) + " " + cmd, tmp.path / "log") == 0);
        return snapshot(out);
    };
    const auto first = pipeline();
    fs::remove_all(out);
    const auto second = pipeline();
    REQUIRE(first.size() == second.size());
    for (const auto& [name, text] : first) {
        INFO(name);
        CHECK(second.at(name) == text);
    }
    CHECK(first.count("simulation/comparison.json") == 1);
    CHECK(first.count("models/energy.json") == 1);

    const json cmp = json::parse(first.at("simulation/comparison.json"));
    CHECK(cmp.contains("oracle_bound"));
    const json manifest = json::parse(slurp(out / "run_simulate.json"));
    CHECK(manifest["metadata"].contains("started_at"));
}

TEST_CASE("flags override the config file") {
    TempDir tmp("override");
    REQUIRE(run(quick(tmp.path / "o") + " synth --n-apps 3", tmp.path / "log") == 0);
    const json manifest = json::parse(slurp(tmp.path / "o" / "run_synth.json"));
    CHECK(manifest["config"]["dataset"]["n_apps"] == 3);
    CHECK(manifest["config"]["seed"] == 7);
    const std::string csv = slurp(tmp.path / "o" / "dataset.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 14);
}

TEST_CASE("serve answers health checks and stops cleanly on SIGINT") {
    TempDir tmp("serve");
    const fs::path out = tmp.path / "o";
    REQUIRE(run(quick(out) + " synth", tmp.path / "log") == 0);
    REQUIRE(run(quick(out) + " train", tmp.path / "log") == 0);

    ServeProcess proc({"--config", (kConfigs / "quick.json").string(), "--out", out.string(), "serve", "--port", "0"});
    const int port = proc.wait_for_port();
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    auto health = client.Get("/v1/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    const json body = json::parse(health->body);
    const json model = json::parse(slurp(out / "models" / "energy.json"));
    CHECK(body["models"]["energy"]["fingerprint"] == model["fingerprint"]);

    SUBCASE("port in use exits nonzero") {
        ServeProcess second(
            {"--config", (kConfigs / "quick.json").string(), "--out", out.string(), "serve", "--port", std::to_string(port)});
        CHECK(second.wait_for_port() == -1);
        CHECK(second.wait_exit() == 1);
    }

    kill(proc.pid, SIGINT);
    CHECK(proc.wait_exit() == 0);
}
