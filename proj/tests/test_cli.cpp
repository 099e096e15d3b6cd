#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace {

struct RunResult {
    int rc = -1;
    std::string out;
};

// Run the CLI with stdout captured; stderr (progress lines) is dropped.
RunResult run(const std::string& args) {
    RunResult r;
    std::string cmd = std::string(HYPERCONV_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int status = pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string line;
    while (std::getline(is, line)) out.push_back(line);
    return out;
}

// value of the two-column CSV row whose first field matches key exactly
std::string csv_value(const std::string& body, const std::string& key) {
    for (const auto& line : lines(body))
        if (line.rfind(key + ",", 0) == 0) return line.substr(key.size() + 1);
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("kernel CSV carries the closed-form density row") {
    auto r = run("kernel --model naimark --x 1 --y 2");
    REQUIRE(r.rc == 0);
    auto ls = lines(r.out);
    REQUIRE(ls.size() > 10);
    CHECK(ls[0] == "t,density");
    auto at2 = csv_value(r.out, "2");
    REQUIRE(!at2.empty());
    CHECK(std::stod(at2) == Catch::Approx(1.0 / (2.0 * std::sinh(1.0))).margin(1e-4));
}

TEST_CASE("classify verdicts for the builtin aliases") {
    auto bk = run("classify --model bessel-kingman:2");
    REQUIRE(bk.rc == 0);
    CHECK(csv_value(bk.out, "verdict") == "invariance-regime");

    auto nm = run("classify --model naimark");
    REQUIRE(nm.rc == 0);
    CHECK(csv_value(nm.out, "verdict") == "nu-infinity-regime");
    CHECK(std::stod(csv_value(nm.out, "ft_min")) > 0.0);

    auto bd = run("classify --model bounded-demo");
    REQUIRE(bd.rc == 0);
    CHECK(csv_value(bd.out, "verdict") == "bounded-A-regime");
}

TEST_CASE("exit codes separate parse, regime, and verification failures") {
    CHECK(run("nu-infty --model bessel-kingman:2").rc == 2);        // rho = 0: no limit measure
    CHECK(run("nu --model naimark --y 300 --method recursion").rc == 2); // weights overflow
    CHECK(run("kernel --model no-such-model --x 1 --y 2").rc == 1); // unknown alias/path
    CHECK(run("kernel --model naimark --x 1").rc == 1);             // missing required flag
    CHECK(run("kernel --model naimark --x 1 --y 2 --format yaml").rc == 1);
    CHECK(run("translate --model naimark --y 0.5 --f 'bogus((('").rc == 1);
    CHECK(run("verify --criterion 1 --tol kernel-closed-form=1e-15").rc == 3);
}

TEST_CASE("verify subset reports the schema fields and the d_center row") {
    auto r = run("verify --criterion 1 --criterion 5");
    REQUIRE(r.rc == 0);
    auto ls = lines(r.out);
    REQUIRE(ls.size() == 4); // header + criteria 1, 5 + d-center row
    CHECK(ls[0] == "criterion,name,measured,expected,tolerance,provenance,pass");
    CHECK(ls[1].rfind("1,kernel-closed-form,", 0) == 0);
    CHECK(ls[2].rfind("5,shifted-kernel-decay,", 0) == 0);
    CHECK(ls[3].rfind("0,d-center-x1-y5,", 0) == 0);

    // same subset as JSON: schema keys per entry, d_center within 10%
    auto j = run("verify --criterion 1 --criterion 5 --format json");
    REQUIRE(j.rc == 0);
    auto rep = nlohmann::json::parse(j.out);
    REQUIRE(rep["criteria"].size() == 2);
    for (const auto& e : rep["criteria"]) {
        for (const char* key : {"criterion", "measured", "expected", "tolerance", "provenance", "pass"})
            CHECK(e.contains(key));
        CHECK(e["pass"].get<bool>());
    }
    auto dc = rep["d_center"];
    double measured = dc["measured"].get<double>(), expected = dc["expected"].get<double>();
    CHECK(std::abs(measured - expected) <= 0.1 * expected);
    CHECK(rep["failures"].get<int>() == 0);
}

TEST_CASE("verify fails the march criterion when h is coarsened tenfold") {
    auto r = run("verify --criterion 2 --h 1e-2 --format json");
    CHECK(r.rc == 3);
    auto rep = nlohmann::json::parse(r.out);
    REQUIRE(rep["criteria"].size() == 1);
    CHECK_FALSE(rep["criteria"][0]["pass"].get<bool>());
    CHECK(rep["criteria"][0]["measured"].get<double>() >
          rep["criteria"][0]["tolerance"].get<double>());
}

TEST_CASE("identical configs produce identical bytes, on stdout and on disk") {
    std::string args = "nu --model jacobi:1,0 --y 2 --format json";
    auto a = run(args), b = run(args);
    REQUIRE(a.rc == 0);
    CHECK(a.out == b.out);

    auto dir = std::filesystem::temp_directory_path() / "hyperconv_cli_test";
    std::filesystem::remove_all(dir);
    auto c = run(args + " --out " + dir.string());
    REQUIRE(c.rc == 0);
    CHECK(c.out.empty()); // routed to the file
    CHECK(slurp(dir / "nu.json") == a.out);
    std::filesystem::remove_all(dir);
}

TEST_CASE("nu-infty json reports a converged limit measure") {
    auto r = run("nu-infty --model naimark --format json");
    REQUIRE(r.rc == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["method"] == "limit");
    CHECK(j["residual"].get<double>() < 1e-3);
    CHECK(j["measure"]["mass"].get<double>() == Catch::Approx(1.0).margin(1e-6));
    CHECK(j["curve"].size() > 2);
}

TEST_CASE("model files load through the model flag") {
    auto path = std::filesystem::temp_directory_path() / "hyperconv_cli_model.txt";
    {
        std::ofstream out(path);
        out << "family = jacobi\nalpha = 1\nbeta = 0\nlabel = file-model\n";
    }
    auto r = run("model validate --model " + path.string());
    REQUIRE(r.rc == 0);
    CHECK(csv_value(r.out, "label") == "file-model");
    CHECK(csv_value(r.out, "growth") == "exponential-normalizable");
    CHECK(csv_value(r.out, "ok") == "true");
    CHECK(std::stod(csv_value(r.out, "rho")) == Catch::Approx(2.0).margin(1e-6));

    std::filesystem::remove(path);
    CHECK(run("model validate --model " + path.string()).rc == 1);
}

TEST_CASE("worker cap env var is validated") {
    std::string base = std::string(HYPERCONV_CLI_PATH) +
                       " model validate --model naimark > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(("HYPERCONV_THREADS=2 " + base).c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(("HYPERCONV_THREADS=zero " + base).c_str())) == 1);
    CHECK(WEXITSTATUS(std::system(("HYPERCONV_THREADS=0 " + base).c_str())) == 1);
}

TEST_CASE("translation of exp(-x) starts at the sampled value") {
    auto r = run("translate --model naimark --y 0.5 --xmax 1");
    REQUIRE(r.rc == 0);
    // T_y f(0) = f(y): translation against the unit at the origin
    CHECK(std::stod(csv_value(r.out, "0")) == Catch::Approx(std::exp(-0.5)).margin(1e-3));
}

TEST_CASE("eigen table matches the closed form for A = sinh^2") {
    auto r = run("eigen --model naimark --lambda 1 --xmax 2");
    REQUIRE(r.rc == 0);
    auto row = csv_value(r.out, "1"); // x = 1 row: re,im
    REQUIRE(!row.empty());
    auto comma = row.find(',');
    double re = std::stod(row.substr(0, comma)), im = std::stod(row.substr(comma + 1));
    CHECK(re == Catch::Approx(std::sin(1.0) / std::sinh(1.0)).margin(1e-6));
    CHECK(im == Catch::Approx(0.0).margin(1e-12));
}
