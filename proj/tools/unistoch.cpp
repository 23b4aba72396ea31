#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "unistoch/commands.hpp"

namespace {

using namespace unistoch;
using cli::CommandOutcome;
using cli::CommandOptions;

io::InputDocument read_input(const std::string& path) {
    if (path.empty() || path == "-") return io::parse_document(std::cin);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file " + path);
    return io::parse_document(in);
}

void write_csv(const CommandOutcome& out, const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    for (const auto& f : out.csv) {
        const auto path = std::filesystem::path(dir) / f.name;
        std::ofstream os(path);
        if (!os) throw InputError("cannot write " + path.string());
        os << f.content;
    }
}

int fail(int code, const char* kind, const std::string& message) {
    io::json j{{"error", kind}, {"message", message}, {"exitCode", code}};
    std::cout << io::to_json_string(j);
    std::cerr << "unistoch: " << message << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unistochasticity tests, reconstruction, triangles and fits for 3x3 and 4x4 mixing matrices"};
    app.require_subcommand(1);

    std::string input;
    std::string csv_dir;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<int> restarts;
    std::optional<std::string> mode;
    bool project = false;
    bool all_relations = false;

    auto common = [&](CLI::App* sub, bool takes_input) {
        if (takes_input) sub->add_option("input", input, "JSON input document (stdin when absent or -)");
        sub->add_option("--csv-dir", csv_dir, "directory for CSV sidecar files");
        sub->add_option("--tol", tol, "line-sum tolerance");
        sub->add_option("--seed", seed, "random seed");
        sub->add_flag("--project", project, "project the input onto the Birkhoff polytope first");
    };

    auto* check = app.add_subcommand("check", "decide unistochasticity");
    auto* reconstruct = app.add_subcommand("reconstruct", "rebuild a unitary matrix from its moduli");
    auto* triangles = app.add_subcommand("triangles", "the six unitarity triangles");
    auto* recover = app.add_subcommand("recover-angles", "mixing angles and cos(delta) from four tangents");
    auto* fit = app.add_subcommand("fit", "chi-square fit of measurements");
    auto* stats = app.add_subcommand("stats", "mean and spread of an ensemble of unitary matrices");
    auto* quadruples = app.add_subcommand("quadruples", "list the independent quadruples of moduli");
    for (auto* s : {check, reconstruct, triangles, recover, fit, stats}) common(s, true);
    common(quadruples, false);
    fit->add_option("--restarts", restarts, "simplex restarts");
    fit->add_option("--mode", mode, "unitarity-condition | triangles | merged | constrained")
        ->check(CLI::IsMember({"unitarity-condition", "triangles", "merged", "constrained"}));
    fit->add_flag("--all-relations", all_relations, "pair every corner relation of every quadruple");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(cli::kInputError, "usage", e.what());
    }

    const CommandOptions opt{tol, seed, restarts, mode, project, all_relations};
    try {
        CommandOutcome out;
        if (quadruples->parsed()) {
            out = cli::cmd_quadruples(seed.value_or(20240601));
        } else {
            const io::InputDocument doc = read_input(input);
            if (check->parsed()) out = cli::cmd_check(doc, opt);
            else if (reconstruct->parsed()) out = cli::cmd_reconstruct(doc, opt);
            else if (triangles->parsed()) out = cli::cmd_triangles(doc, opt);
            else if (recover->parsed()) out = cli::cmd_recover_angles(doc, opt);
            else if (fit->parsed()) out = cli::cmd_fit(doc, opt);
            else out = cli::cmd_stats(doc, opt);
        }
        write_csv(out, csv_dir);
        std::cout << io::to_json_string(out.report);
        return out.exit_code;
    } catch (const InputError& e) {
        return fail(cli::kInputError, "input", e.what());
    } catch (const DependentQuadrupleError& e) {
        return fail(cli::kInputError, "input", e.what());
    } catch (const NotDoublyStochastic& e) {
        return fail(cli::kNotDoublyStochastic, "not-doubly-stochastic", e.what());
    } catch (const NumericalError& e) {
        return fail(cli::kNumericalFailure, "numerical", e.what());
    } catch (const DomainError& e) {
        return fail(cli::kNumericalFailure, "domain", e.what());
    } catch (const std::exception& e) {
        return fail(cli::kNumericalFailure, "internal", e.what());
    }
}
