// Builds the 14-bus diagram, runs Newton-Raphson and prints bus voltages.

#include <fmt/format.h>

#include "sld/cases.hpp"
#include "sld/power_flow.hpp"

int main() {
    const sld::Network net = sld::cases::ieee14();
    const auto run = sld::solve_power_flow(net, sld::PowerFlowMethod::NewtonRaphson);
    const auto& sol = run.solution;
    fmt::print("converged: {} after {} iterations\n", sol.converged, sol.iterations_run);
    for (std::size_t i = 0; i < sol.v.size(); ++i)
        fmt::print("bus {:2}  |V| {:.4f} pu  angle {:8.3f} deg\n", i + 1, sol.v[i], sol.theta[i] * 180.0 / 3.141592653589793);
    return sol.converged ? 0 : 1;
}
