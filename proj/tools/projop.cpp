// projop: experiment runner and artifact inspection.
//
//   projop run <config>
//   projop check-net <centers-file> <epsilon>
//   projop describe-basis <basis-file>
//
// Exit codes: 0 success, 2 config/usage error, 3 numerical failure, 4 resource cap.
// Every failure prints one JSON line on stderr.

#include "projop/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>

namespace {

using json = nlohmann::json;

json error_record(const std::string& command, std::string_view kind, int code, const std::string& message) {
    return {{"status", "error"}, {"command", command}, {"kind", kind}, {"exit_code", code}, {"message", message}};
}

int report(const json& record) {
    std::cerr << record.dump() << '\n';
    return record.at("exit_code").get<int>();
}

int report(const std::string& command, const projop::Error& e) {
    auto record = error_record(command, projop::to_string(e.kind()), projop::exit_code(e.kind()), e.what());
    if (const auto* ce = dynamic_cast<const projop::ConfigError*>(&e)) {
        record["issues"] = json::array();
        for (const auto& issue : ce->issues()) record["issues"].push_back({{"line", issue.line}, {"message", issue.message}});
    }
    return report(record);
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    projop::require(static_cast<bool>(is), projop::ErrorKind::usage, "cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run(const std::string& config_path) {
    projop::ExperimentConfig cfg;
    try {
        cfg = projop::parse_config(read_text(config_path));
    } catch (const projop::Error& e) {
        return report("run", e);
    }

    const std::filesystem::path out(cfg.output);
    auto failed = [&](const json& record) {
        projop::mark_failed(out, projop::artifact_names(cfg.kind), record.dump());
        return report(record);
    };
    try {
        const auto start = std::chrono::steady_clock::now();
        auto result = projop::run_experiment(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.files.push_back({"run.meta", projop::render_meta(cfg, result, wall)});
        projop::commit_artifacts(out, result.files);
        std::cout << "wrote " << out.string() << ":";
        for (const auto& f : result.files) std::cout << ' ' << f.name;
        std::cout << '\n';
        return 0;
    } catch (const projop::Error& e) {
        return failed(error_record("run", projop::to_string(e.kind()), projop::exit_code(e.kind()), e.what()));
    } catch (const std::bad_alloc&) {
        return failed(error_record("run", "resource", 4, "out of memory"));
    } catch (const std::exception& e) {
        return failed(error_record("run", "internal", 3, e.what()));
    }
}

int check_net(const std::string& path, double epsilon) {
    try {
        std::istringstream is(read_text(path));
        const auto proj = projop::read_projector(is);
        const auto check = projop::check_separation(proj, epsilon);
        std::cout << "centers " << proj.centers().size() << '\n'
                  << "epsilon " << projop::format_real(epsilon) << '\n'
                  << "min_gap " << projop::format_real(check.min_gap) << '\n';
        if (proj.centers().size() >= 2) std::cout << "closest_pair " << check.first << ' ' << check.second << '\n';
        std::cout << "separated " << (check.separated ? "true" : "false") << '\n';
        if (!check.separated)
            return report(error_record("check-net", "separation", 3,
                                       "centers " + std::to_string(check.first) + " and " +
                                           std::to_string(check.second) + " are " + projop::format_real(check.min_gap) +
                                           " apart, below epsilon"));
        return 0;
    } catch (const projop::Error& e) {
        return report("check-net", e);
    }
}

int describe_basis(const std::string& path) {
    try {
        std::istringstream is(read_text(path));
        const auto table = projop::read_basis(is);
        std::cout << "dimension " << table.dimension << '\n'
                  << "max_degree " << table.max_degree << '\n'
                  << "kind " << table.kind << '\n'
                  << "weight " << table.weight << '\n'
                  << "size " << table.rows.size() << '\n'
                  << "k,multi_index,degree,gram\n";
        for (const auto& row : table.rows) {
            std::string idx;
            for (int a : row.multi_index) idx += (idx.empty() ? "" : " ") + std::to_string(a);
            std::cout << row.k << ',' << idx << ',' << projop::total_degree(row.multi_index) << ','
                      << projop::format_real(row.gram) << '\n';
        }
        return 0;
    } catch (const projop::Error& e) {
        return report("describe-basis", e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projection methods for operator learning: experiment runner"};
    app.require_subcommand(1);

    std::string config_path, centers_path, basis_path;
    double epsilon = 0.0;
    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
    run_cmd->add_option("config", config_path, "Experiment config (key = value lines)")->required();
    auto* check_cmd = app.add_subcommand("check-net", "Verify the separation of a centers file");
    check_cmd->add_option("centers-file", centers_path, "Centers file written by an ls-net run")->required();
    check_cmd->add_option("epsilon", epsilon, "Separation radius")->required();
    auto* describe_cmd = app.add_subcommand("describe-basis", "Summarize a basis export");
    describe_cmd->add_option("basis-file", basis_path, "Basis file written by a project-converge run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(error_record("parse", "usage", 2, e.what()));
    }

    if (*run_cmd) return run(config_path);
    if (*check_cmd) return check_net(centers_path, epsilon);
    return describe_basis(basis_path);
}
