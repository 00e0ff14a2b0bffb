#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#include "json.hpp"

#ifndef MELNIKOV_LAB_PATH
#error "MELNIKOV_LAB_PATH must point at the CLI binary"
#endif

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(MELNIKOV_LAB_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

nlohmann::json results(const Run& r) {
    nlohmann::json j = nlohmann::json::parse(r.out);
    CHECK(j.at("tool") == "melnikov_lab");
    CHECK(j.contains("version"));
    return j.at("results");
}

}  // namespace

TEST_CASE("table1") {
    Run r = run("-o json table1");
    CHECK(r.code == 0);
    nlohmann::json res = results(r);
    CHECK(res.at("all_agree") == true);
    REQUIRE(res.at("rows").size() == 10);
    nlohmann::json n16 = res.at("rows")[7];
    CHECK(n16.at("n") == 16);
    CHECK(n16.at("decimal") == "3.355694920e+16");
}

TEST_CASE("melnikov") {
    Run fn = run("-o json melnikov -s folded-node -n 4");
    CHECK(fn.code == 0);
    nlohmann::json a = results(fn);
    CHECK(a.at("bifurcation").at("kind") == "pitchfork");
    CHECK(a.at("d3_dv3").at("decimal") == "57039.71896");

    Run fs = run("-o json melnikov -s falkner-skan -n 2");
    CHECK(fs.code == 0);
    nlohmann::json b = results(fs);
    CHECK(b.at("bifurcation").at("kind") == "transcritical");
    CHECK(b.at("bifurcation").at("orientation_sign") == 1);

    // the printed mixed derivative for odd Nose n >= 3 differs from the computed one
    Run nose = run("-o json melnikov -s nose -n 3");
    CHECK(nose.code == 2);
    CHECK(results(nose).at("bifurcation").at("kind") == "pitchfork");
}

TEST_CASE("orbit refusal") {
    CHECK(run("orbit -s nose --mu 2.1").code == 2);
    CHECK(run("orbit -s falkner-skan --mu 1.9").code == 2);
}

TEST_CASE("usage errors") {
    CHECK(run("").code == 64);
    CHECK(run("table1 --no-such-flag").code == 64);
    CHECK(run("melnikov -s nowhere -n 2").code == 64);
}

TEST_CASE("coeffs and quadcheck") {
    Run c = run("-o csv coeffs -s folded-node -k 1");
    CHECK(c.code == 0);
    CHECK(c.out.rfind("k,j,c_kj", 0) == 0);
    Run q = run("-o json quadcheck -s nose -n 2");
    CHECK(q.code == 0);
}

TEST_CASE("identical invocations are identical") {
    Run a = run("-o json sweep -s folded-node falkner-skan --kmax 3");
    Run b = run("-o json sweep -s folded-node falkner-skan --kmax 3");
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
}
