// Writes the bundled project files into the given directory.

#include <filesystem>
#include <iostream>

#include "sld/cases.hpp"
#include "sld/persistence.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <directory>\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    try {
        std::filesystem::create_directories(dir);
        const sld::Network case14 = sld::cases::ieee14();
        sld::save_project(case14, dir / "case14.sld");

        const auto run = sld::solve_power_flow(case14, sld::PowerFlowMethod::NewtonRaphson);
        if (!run.solution.converged) {
            std::cerr << "make_fixtures: 14-bus power flow did not converge\n";
            return 1;
        }
        sld::save_project(sld::cases::ieee14_metered(run.solution), dir / "case14_se.sld");
        sld::save_project(sld::cases::radial_per_unit().net, dir / "radial_pu.sld");
        sld::save_project(sld::Network(sld::Mode::PowerFlow), dir / "empty.sld");
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
