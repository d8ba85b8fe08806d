// sld: batch solves, validation and the local JSON service.
//
// Exit codes: 0 solved, 1 usage or I/O problem, 2 project invalid for the
// request, 3 solver failed.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sld/http_server.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitFailed = 3;

bool write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return static_cast<bool>(std::cout);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    return static_cast<bool>(out);
}

std::optional<sld::Mode> mode_flag(const std::string& text) {
    if (text.empty()) return std::nullopt;
    auto m = sld::parse_mode(text);
    if (!m) throw CLI::ValidationError("--mode", "expected per-unit, power-flow or state-estimation");
    return m;
}

struct SolveArgs {
    std::string input, mode, method, trace, output = "-";
    std::optional<std::size_t> iterations;
    std::optional<double> tolerance, acceleration;
};

int run_solve(const SolveArgs& a) {
    sld::SolveResponse response;
    try {
        const sld::Network net = sld::load_project(a.input, mode_flag(a.mode));
        sld::SolveOptions opt{a.method.empty() ? std::nullopt : std::optional<std::string>(a.method), a.iterations,
                              a.tolerance, a.acceleration};
        response = sld::solve_project(net, opt);
    } catch (const sld::Error& e) {
        std::cerr << "sld: " << e.name() << ": " << e.detail() << '\n';
        return e.code() == sld::ErrorCode::IoFailure ? kExitUsage : kExitInvalid;
    }

    for (const auto& v : response.violations)
        std::cerr << "violation: " << v.code << (v.component ? " [" + sld::to_string(*v.component) + "]" : "") << ": "
                  << v.message << '\n';
    if (response.error) std::cerr << "error: " << response.error->first << ": " << response.error->second << '\n';

    if (!a.trace.empty() && !response.trace_text.empty() && !write_text(a.trace, response.trace_text)) {
        std::cerr << "sld: cannot write trace to " << a.trace << '\n';
        return kExitUsage;
    }
    if (!write_text(a.output, sld::to_json(response).dump(2) + "\n")) {
        std::cerr << "sld: cannot write output to " << a.output << '\n';
        return kExitUsage;
    }
    switch (response.status) {
        case sld::SolveStatus::Ok: return kExitOk;
        case sld::SolveStatus::Invalid: return kExitInvalid;
        case sld::SolveStatus::Failed: return kExitFailed;
    }
    return kExitFailed;
}

int run_validate(const std::string& input, const std::string& mode) {
    try {
        const sld::Network net = sld::load_project(input, mode_flag(mode));
        const auto violations = sld::validate(net);
        std::cout << sld::Json{{"violations", sld::violations_json(violations)}}.dump(2) << '\n';
        return violations.empty() ? kExitOk : kExitInvalid;
    } catch (const sld::Error& e) {
        std::cerr << "sld: " << e.name() << ": " << e.detail() << '\n';
        return e.code() == sld::ErrorCode::IoFailure ? kExitUsage : kExitInvalid;
    }
}

int run_serve(std::optional<int> port_flag, const std::string& host) {
    int port = 0;
    try {
        port = port_flag.value_or(sld::port_from_environment());
    } catch (const sld::Error& e) {
        std::cerr << "sld: " << e.detail() << '\n';
        return kExitUsage;
    }
    sld::Service service;
    httplib::Server server;
    sld::mount(server, service);
    std::cerr << "sld: listening on http://" << host << ':' << port << '\n';
    if (!server.listen(host, port)) {
        std::cerr << "sld: cannot listen on " << host << ':' << port << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Single-line diagram solver"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* cmd_solve = app.add_subcommand("solve", "Solve a project file");
    cmd_solve->add_option("--input", solve.input, "Project file (.sld)")->required();
    cmd_solve->add_option("--mode", solve.mode, "per-unit | power-flow | state-estimation (overrides the file)");
    cmd_solve->add_option("--method", solve.method, "gs | nr (power-flow), wls | fdse (state-estimation)");
    cmd_solve->add_option("--iterations", solve.iterations, "Iteration cap");
    cmd_solve->add_option("--tolerance", solve.tolerance, "Convergence tolerance, pu");
    cmd_solve->add_option("--acceleration", solve.acceleration, "Gauss-Seidel acceleration factor");
    cmd_solve->add_option("--trace", solve.trace, "Write the calculation trace here");
    cmd_solve->add_option("--output", solve.output, "Solution JSON destination, - for stdout");

    std::string validate_input, validate_mode;
    auto* cmd_validate = app.add_subcommand("validate", "List violations that block a solve");
    cmd_validate->add_option("--input", validate_input, "Project file (.sld)")->required();
    cmd_validate->add_option("--mode", validate_mode, "Mode override");

    std::optional<int> port;
    std::string host = "127.0.0.1";
    auto* cmd_serve = app.add_subcommand("serve", "Run the JSON-over-HTTP service");
    cmd_serve->add_option("--port", port, "Port (default: $SLD_PORT, else 8765)");
    cmd_serve->add_option("--host", host, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*cmd_solve) return run_solve(solve);
        if (*cmd_validate) return run_validate(validate_input, validate_mode);
        if (*cmd_serve) return run_serve(port, host);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "sld: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
