// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [path-to-sld-binary]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "sld/cases.hpp"
#include "sld/per_unit.hpp"
#include "sld/persistence.hpp"
#include "sld/state_estimation.hpp"
#include "support/random_network.hpp"

using namespace sld;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

const std::filesystem::path kData = SLD_DATA_DIR;

Verdict nr_on_case14() {
    const Network net = load_project(kData / "case14.sld");
    const auto t0 = std::chrono::steady_clock::now();
    const auto run = solve_power_flow(net, PowerFlowMethod::NewtonRaphson);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& s = run.solution;
    const bool ok = s.converged && s.max_mismatch < 1e-6 && s.iterations_run <= 5 && secs < 1.0;
    return {ok, fmt::format("converged={} iterations={} mismatch={:.2e} time={:.4f}s", s.converged, s.iterations_run,
                            s.max_mismatch, secs)};
}

BusRecord record(std::size_t i, BusType kind, double p, double q, double v) {
    BusRecord b;
    b.index = i;
    b.kind = kind;
    b.p_sched = p;
    b.q_sched = q;
    b.v_set = v;
    b.name = std::to_string(i + 1);
    return b;
}

Verdict gauss_seidel_contract() {
    const Network net = load_project(kData / "case14.sld");
    const auto run = solve_power_flow(net, PowerFlowMethod::GaussSeidel);
    std::string acceleration;
    for (const auto& [k, v] : run.trace.config())
        if (k == "acceleration") acceleration = v;
    const bool header_ok = run.trace.count("iteration") == 10 && acceleration == "1.6";

    // Small systems solved to tolerance with both methods.
    double worst = 0.0;
    bool all_converged = true;
    const std::vector<std::pair<std::vector<BusRecord>, std::vector<Branch>>> systems{
        {{record(0, BusType::Slack, 0, 0, 1.0), record(1, BusType::PQ, -0.5, -0.2, 1.0)},
         {{0, 1, 1.0 / Complex(0.02, 0.08), 0.01, std::nullopt}}},
        {{record(0, BusType::Slack, 0, 0, 1.05), record(1, BusType::PV, 0.3, 0, 1.02), record(2, BusType::PQ, -0.8, -0.3, 1.0)},
         {{0, 1, 1.0 / Complex(0.02, 0.06), 0.03, std::nullopt},
          {0, 2, 1.0 / Complex(0.08, 0.24), 0.025, std::nullopt},
          {1, 2, 1.0 / Complex(0.06, 0.18), 0.02, std::nullopt}}},
        {{record(0, BusType::Slack, 0, 0, 1.06), record(1, BusType::PV, 0.2, 0, 1.045), record(2, BusType::PQ, -0.45, -0.15, 1),
          record(3, BusType::PQ, -0.4, -0.05, 1), record(4, BusType::PQ, -0.6, -0.1, 1)},
         {{0, 1, 1.0 / Complex(0.02, 0.06), 0.03, std::nullopt},
          {0, 2, 1.0 / Complex(0.08, 0.24), 0.025, std::nullopt},
          {1, 2, 1.0 / Complex(0.06, 0.18), 0.02, std::nullopt},
          {1, 3, 1.0 / Complex(0.06, 0.18), 0.02, std::nullopt},
          {1, 4, 1.0 / Complex(0.04, 0.12), 0.015, std::nullopt},
          {2, 3, 1.0 / Complex(0.01, 0.03), 0.01, std::nullopt},
          {3, 4, 1.0 / Complex(0.08, 0.24), 0.025, std::nullopt}}},
    };
    for (const auto& [buses, branches] : systems) {
        const auto y = build_ybus(branches, buses.size());
        GaussSeidelConfig gs;
        gs.max_iterations = 5000;
        gs.tolerance = 1e-9;
        NewtonRaphsonConfig nr;
        nr.max_iterations = 20;
        nr.tolerance = 1e-9;
        const auto [a, ta] = gauss_seidel(y, buses, gs);
        const auto [b, tb] = newton_raphson(y, buses, nr);
        all_converged = all_converged && a.converged && b.converged;
        for (std::size_t i = 0; i < buses.size(); ++i)
            worst = std::max({worst, std::abs(a.v[i] - b.v[i]), std::abs(a.theta[i] - b.theta[i])});
    }
    return {header_ok && all_converged && worst < 1e-3,
            fmt::format("records={} acceleration={} small-case max diff={:.2e}", run.trace.count("iteration"), acceleration, worst)};
}

struct Reference14 {
    BusSystem sys;
    PowerFlowSolution sol;
    EstimationModel model;
    MeasurementSet full;
};

Reference14 reference14() {
    auto run = solve_power_flow(load_project(kData / "case14.sld"), PowerFlowMethod::NewtonRaphson);
    Reference14 r{std::move(run.system), std::move(run.solution), {}, {}};
    r.model = make_estimation_model(r.sys);
    r.full = measurements_from_solution(r.sol, r.sys.branches.size());
    return r;
}

Verdict estimators() {
    const auto ref = reference14();
    const auto [wls, t1] = wls_estimate(ref.full, ref.model);
    const auto [fd, t2] = fdse_estimate(ref.full, ref.model);
    double recover = 0.0, agree = 0.0;
    for (std::size_t i = 0; i < ref.sol.v.size(); ++i) {
        recover = std::max({recover, std::abs(wls.v[i] - ref.sol.v[i]), std::abs(wls.theta[i] - ref.sol.theta[i])});
        agree = std::max({agree, std::abs(wls.v[i] - fd.v[i]), std::abs(wls.theta[i] - fd.theta[i])});
    }
    return {wls.converged && fd.converged && recover < 1e-6 && agree < 1e-4,
            fmt::format("WLS |d|inf={:.2e} FD-SE vs WLS={:.2e}", recover, agree)};
}

Verdict jacobian_check() {
    const auto ref = reference14();
    const StateLayout layout(ref.model);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> vd(0.9, 1.1), td(-0.35, 0.35);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        EstimationState x = EstimationState::flat(ref.model.buses());
        for (std::size_t i = 0; i < x.v.size(); ++i) {
            x.v[i] = vd(rng);
            x.theta[i] = td(rng);
        }
        for (auto r : ref.model.references) x.theta[r] = 0.0;
        const Eigen::MatrixXd h = measurement_jacobian(x, ref.model, ref.full);
        Eigen::MatrixXd fd(h.rows(), h.cols());
        const double step = 1e-6;
        for (std::size_t c = 0; c < layout.dimension(); ++c) {
            auto xp = x, xm = x;
            if (c < layout.angles()) {
                xp.theta[layout.angle_buses[c]] += step;
                xm.theta[layout.angle_buses[c]] -= step;
            } else {
                xp.v[c - layout.angles()] += step;
                xm.v[c - layout.angles()] -= step;
            }
            const auto fp = measurement_function(xp, ref.model, ref.full);
            const auto fm = measurement_function(xm, ref.model, ref.full);
            for (std::size_t r = 0; r < fp.size(); ++r)
                fd(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (fp[r] - fm[r]) / (2 * step);
        }
        worst = std::max(worst, (h - fd).norm() / fd.norm());
    }
    return {worst < 1e-6, fmt::format("20 states, worst relative error={:.2e}", worst)};
}

Verdict per_unit_check() {
    const Network net = load_project(kData / "radial_pu.sld");
    const auto bases = resolve_bases(net);
    const auto report = convert_to_per_unit(net, bases);
    double worst = 0.0;
    for (const auto& c : report.components)
        for (const auto& e : c.entries)
            if (e.value != 0.0) worst = std::max(worst, std::abs(e.per_unit * e.base - e.value) / std::abs(e.value));
    std::vector<double> kv;
    for (double v : bases.v_base) kv.push_back(v / 1e3);
    std::sort(kv.begin(), kv.end());
    const bool chain = kv.size() == 3 && std::abs(kv[0] - 13.8) < 1e-9 && std::abs(kv[1] - 69) < 1e-9 && std::abs(kv[2] - 138) < 1e-9;
    const double zb = impedance_base(138e3, 100e6);
    return {worst <= 1e-12 && chain && std::abs(zb - 190.44) < 1e-9,
            fmt::format("round trip={:.1e} bases={} kV Zbase(138 kV, 100 MVA)={} ohm", worst, fmt::join(kv, "/"), zb)};
}

Verdict persistence_check() {
    std::size_t failures = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        fuzz::NetworkFuzzer f(seed, static_cast<Mode>(seed % 3));
        f.grow(10 + seed % 50);
        const std::string text = to_text(f.net());
        const Network back = from_text(text);
        if (!(back == f.net()) || to_text(back) != text) ++failures;
    }
    return {failures == 0, fmt::format("1000 random networks, {} mismatches", failures)};
}

Verdict graph_invariants() {
    std::size_t dangling = 0, wrong_closure = 0, rotations_allowed = 0, rotate4 = 0, connected_rotations = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        fuzz::NetworkFuzzer f(1000 + seed, static_cast<Mode>(seed));
        for (int op = 0; op < 10000; ++op) {
            std::optional<ComponentId> connected_bar;
            const auto out = f.step();
            if (!structural_problems(f.net()).empty()) ++dangling;
            if (out.op == fuzz::NetworkFuzzer::Op::Remove && out.applied && out.removed != out.expected_removed) ++wrong_closure;
            if (out.op == fuzz::NetworkFuzzer::Op::Rotate && out.target && f.net().contains(*out.target) &&
                f.net().kind(*out.target) == ComponentKind::BusBar && !f.net().lines_at(*out.target).empty()) {
                ++connected_rotations;
                if (out.applied) ++rotations_allowed;
            }
            if (op % 500 == 0) {
                if (auto id = f.random_component()) {
                    Network copy = f.net();
                    try {
                        for (int k = 0; k < 4; ++k) copy.rotate_component(*id);
                    } catch (const Error&) {
                    }
                    if (!(copy.component(*id).placement == f.net().component(*id).placement)) ++rotate4;
                    for (const auto l : copy.lines_at(*id)) {
                        const Line& line = copy.line(l);
                        if (!route_connects(line.route, copy.terminal_point(line.end_a), copy.terminal_point(line.end_b))) ++rotate4;
                    }
                }
            }
        }
    }
    return {dangling == 0 && wrong_closure == 0 && rotations_allowed == 0 && rotate4 == 0,
            fmt::format("30000 ops: dangling={} closure mismatches={} connected-bar rotations allowed={}/{} rotate^4 mismatches={}",
                        dangling, wrong_closure, rotations_allowed, connected_rotations, rotate4)};
}

Verdict zero_impedance_split() {
    auto layout = cases::ieee14_layout();
    const BusSystem before = extract_bus_system(layout.net);
    const auto run_before = solve_power_flow(layout.net, PowerFlowMethod::NewtonRaphson);

    Network& net = layout.net;
    const ComponentId bar9 = layout.bars[8];
    const Point at = cases::ieee14_bus_position(9);
    const auto extra = net.add_component(BusBarSpec{cases::kIeee14BarLength, std::nullopt}, {{at.x - 300, at.y}, Rotation::R90});
    net.add_line(PortRef::on_bar(bar9, {at.x, at.y - 90}), PortRef::on_bar(extra, {at.x - 300, at.y - 90}), LineSpec{});
    double slot = -40;
    for (std::size_t k = 0; k < cases::kIeee14Branches.size(); ++k) {
        const auto& br = cases::kIeee14Branches[k];
        if (br.transformer || br.from != 9) continue;  // 9-10 and 9-14 move to the new bar
        const Line line = net.line(layout.branch_ids[k]);
        const auto far = PortRef::on_bar(line.end_b.component, net.terminal_point(line.end_b));
        net.remove_component(line.id);
        net.add_line(PortRef::on_bar(extra, {at.x - 300, at.y + slot}), far, line.spec);
        slot += 20;
    }
    const BusSystem after = extract_bus_system(net);
    auto branches = [](const BusSystem& s) {
        std::vector<std::tuple<std::size_t, std::size_t, double, double, double>> out;
        for (const auto& b : s.branches)
            out.emplace_back(b.from, b.to, b.series_admittance.real(), b.series_admittance.imag(), b.shunt_susceptance_half);
        std::sort(out.begin(), out.end());
        return out;
    };
    bool same = after.size() == before.size() && branches(after) == branches(before);
    for (std::size_t i = 0; same && i < before.size(); ++i) {
        const auto &a = after.buses[i], &b = before.buses[i];
        same = a.kind == b.kind && a.p_sched == b.p_sched && a.q_sched == b.q_sched && a.v_set == b.v_set && a.shunt == b.shunt;
    }
    const auto run_after = solve_power_flow(net, PowerFlowMethod::NewtonRaphson);
    double diff = 0.0;
    for (std::size_t i = 0; i < 14; ++i)
        diff = std::max({diff, std::abs(run_after.solution.v[i] - run_before.solution.v[i]),
                         std::abs(run_after.solution.theta[i] - run_before.solution.theta[i])});
    return {same && run_after.solution.converged && diff < 1e-10,
            fmt::format("same bus system={} buses={} max NR difference={:.1e}", same, after.size(), diff)};
}

int run_cli(const std::string& sld, const std::string& args) {
    const std::string cmd = fmt::format("\"{}\" {} > /dev/null 2>&1", sld, args);
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Verdict cli_exit_codes(const std::string& sld) {
    if (sld.empty()) return {false, "sld binary not given"};
    const auto in = [](const char* f) { return "\"" + (kData / f).string() + "\""; };
    const int ok = run_cli(sld, "solve --input " + in("case14.sld") + " --method nr");
    const int invalid = run_cli(sld, "solve --input " + in("empty.sld"));
    const int failed = run_cli(sld, "solve --input " + in("case14.sld") + " --method nr --iterations 1");
    return {ok == 0 && invalid == 2 && failed == 3, fmt::format("solved={} invalid={} not converged={}", ok, invalid, failed)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string sld = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"newton-raphson-14-bus", nr_on_case14},
        {"gauss-seidel-trace-and-agreement", gauss_seidel_contract},
        {"wls-recovery-and-fdse-agreement", estimators},
        {"measurement-jacobian", jacobian_check},
        {"per-unit-bases", per_unit_check},
        {"persistence-round-trip", persistence_check},
        {"graph-invariants", graph_invariants},
        {"zero-impedance-merge", zero_impedance_split},
        {"cli-exit-codes", [&] { return cli_exit_codes(sld); }},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    }
    std::fflush(stdout);
    return failures == 0 ? 0 : 1;
}
