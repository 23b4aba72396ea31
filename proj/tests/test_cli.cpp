#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "unistoch/io.hpp"

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& stdin_text = "") {
    std::string cmd = std::string(UNISTOCH_CLI_PATH) + " " + args + " 2>/dev/null";
    if (!stdin_text.empty()) {
        const auto path = std::filesystem::temp_directory_path() / "unistoch_cli_stdin.json";
        std::ofstream(path) << stdin_text;
        cmd += " < " + path.string();
    }
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string sample(const char* name) { return std::string(UNISTOCH_SAMPLES_DIR) + "/" + name; }

unistoch::io::json report(const Run& r) { return unistoch::io::json::parse(r.out); }

}  // namespace

TEST(Cli, CheckExitCodes) {
    EXPECT_EQ(run("check " + sample("toy3.json")).code, 0);
    EXPECT_EQ(run("check " + sample("identity.json")).code, 0);
    EXPECT_EQ(run("check " + sample("thirds.json")).code, 0);
    EXPECT_EQ(run("check " + sample("pdg.json")).code, 2);
    EXPECT_EQ(run("check " + sample("pdg_s1.json")).code, 2);
    EXPECT_EQ(run("check --project " + sample("pdg_s1.json")).code, 1);
    EXPECT_EQ(run("check " + sample("random4.json")).code, 0);
}

TEST(Cli, CheckReportsCosDelta) {
    const auto r = run("check " + sample("toy3.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_NEAR(report(r)["verdict"]["cosDelta"]["re"].get<double>(), 4 * std::sqrt(15.0) / 25, 1e-12);
    EXPECT_NE(r.out.find("0.61967733539318"), std::string::npos);
}

TEST(Cli, ReadsStandardInput) {
    const std::string doc = R"({"matrix": [[1, 0, 0], [0, 0, 1], [0, 1, 0]]})";
    EXPECT_EQ(run("check", doc).code, 0);
    EXPECT_EQ(run("check -", doc).code, 0);
    EXPECT_EQ(run("check", R"({"matrix": [[0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]]})").code, 1);
}

TEST(Cli, InputAndUsageErrors) {
    EXPECT_EQ(run("check", "{broken").code, 3);
    EXPECT_EQ(run("check", R"({"schemaVersion": 9, "matrix": [[1]]})").code, 3);
    EXPECT_EQ(run("check /nonexistent/file.json").code, 3);
    EXPECT_EQ(run("fit", R"({"measurements": []})").code, 3);
    EXPECT_EQ(run("").code, 3);
    EXPECT_EQ(run("check --tol").code, 3);
    EXPECT_EQ(run("fit --mode bogus " + sample("measurements_toy3.json")).code, 3);
    const auto r = run("check", "{broken");
    EXPECT_EQ(report(r)["exitCode"].get<int>(), 3);
}

TEST(Cli, ReconstructWritesCsv) {
    const auto dir = std::filesystem::temp_directory_path() / "unistoch_cli_csv";
    std::filesystem::remove_all(dir);
    const auto r = run("reconstruct --csv-dir " + dir.string() + " " + sample("toy3.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_LT(report(r)["unitarityDefect"].get<double>(), 1e-12);
    std::ifstream csv(dir / "reconstructed.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "re_1,im_1,re_2,im_2,re_3,im_3");
}

TEST(Cli, TrianglesAndAngles) {
    EXPECT_EQ(run("triangles " + sample("toy3.json")).code, 0);
    EXPECT_EQ(run("triangles " + sample("thirds.json")).code, 0);
    EXPECT_EQ(run("triangles " + sample("pdg_quadruple_s2.json")).code, 1);
    const auto r = run("recover-angles " + sample("tangents.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(report(r)["candidateCount"].get<int>(), 5);
}

TEST(Cli, FitAndStats) {
    EXPECT_EQ(run("fit --restarts 4 " + sample("measurements_toy3.json")).code, 0);
    EXPECT_EQ(run("fit --mode constrained --restarts 4 " + sample("measurements_toy3.json")).code, 0);
    EXPECT_EQ(run("stats " + sample("ensemble.json")).code, 0);
}

TEST(Cli, ByteIdenticalReports) {
    const std::string args = "fit --restarts 4 --seed 11 " + sample("measurements_toy3.json");
    EXPECT_EQ(run(args).out, run(args).out);
    EXPECT_EQ(run("quadruples").out, run("quadruples").out);
}
