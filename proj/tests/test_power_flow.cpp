#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <tuple>

#include "sld/cases.hpp"
#include "sld/power_flow.hpp"
#include "support/expect_error.hpp"

using namespace sld;

namespace {

BusRecord bus(std::size_t i, BusType kind, double p = 0, double q = 0, double v = 1.0) {
    BusRecord b;
    b.index = i;
    b.kind = kind;
    b.p_sched = p;
    b.q_sched = q;
    b.v_set = v;
    b.name = std::to_string(i + 1);
    return b;
}

Branch branch(std::size_t f, std::size_t t, Complex z, double b_total = 0.0) { return {f, t, 1.0 / z, 0.5 * b_total, std::nullopt}; }

/// Y = A^T diag(y) A plus line-charging and bus shunts, from a branch-bus
/// incidence matrix.
Eigen::MatrixXcd incidence_ybus(const std::vector<Branch>& branches, std::size_t n, const std::vector<Complex>& shunts) {
    const auto m = static_cast<Eigen::Index>(branches.size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(m, static_cast<Eigen::Index>(n));
    Eigen::VectorXcd y(m);
    Eigen::VectorXcd ground = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& br = branches[static_cast<std::size_t>(k)];
        a(k, static_cast<Eigen::Index>(br.from)) = 1.0;
        a(k, static_cast<Eigen::Index>(br.to)) = -1.0;
        y(k) = br.series_admittance;
        ground(static_cast<Eigen::Index>(br.from)) += Complex(0, br.shunt_susceptance_half);
        ground(static_cast<Eigen::Index>(br.to)) += Complex(0, br.shunt_susceptance_half);
    }
    for (std::size_t i = 0; i < shunts.size(); ++i) ground(static_cast<Eigen::Index>(i)) += shunts[i];
    Eigen::MatrixXcd out = a.transpose() * y.asDiagonal() * a;
    out += Eigen::MatrixXcd(ground.asDiagonal());
    return out;
}

/// Five-bus test system: slack, one PV bus, three PQ buses.
struct FiveBus {
    std::vector<BusRecord> buses{bus(0, BusType::Slack, 0, 0, 1.06), bus(1, BusType::PV, 0.2, 0, 1.045),
                                 bus(2, BusType::PQ, -0.45, -0.15), bus(3, BusType::PQ, -0.4, -0.05),
                                 bus(4, BusType::PQ, -0.6, -0.1)};
    std::vector<Branch> branches{branch(0, 1, {0.02, 0.06}, 0.06), branch(0, 2, {0.08, 0.24}, 0.05),
                                 branch(1, 2, {0.06, 0.18}, 0.04), branch(1, 3, {0.06, 0.18}, 0.04),
                                 branch(1, 4, {0.04, 0.12}, 0.03), branch(2, 3, {0.01, 0.03}, 0.02),
                                 branch(3, 4, {0.08, 0.24}, 0.05)};
    AdmittanceMatrix ybus() const { return build_ybus(branches, buses.size()); }
};

}  // namespace

TEST(Ybus, MatchesIncidenceConstruction) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial % 6);
        std::vector<Branch> branches;
        for (std::size_t k = 0; k < 2 * n; ++k) {
            const std::size_t f = rng() % n;
            std::size_t t = rng() % n;
            if (t == f) t = (t + 1) % n;
            branches.push_back(branch(f, t, {u(rng), u(rng)}, u(rng) * 0.2));
        }
        std::vector<Complex> shunts(n);
        for (auto& s : shunts) s = Complex(0, u(rng) - 0.25);
        const auto y = build_ybus(branches, n, shunts);
        const auto oracle = incidence_ybus(branches, n, shunts);
        EXPECT_LT((y.y - oracle).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((y.y - y.y.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Ybus, RejectsBadIndices) {
    std::vector<Branch> b{branch(0, 3, {0, 0.1})};
    EXPECT_SLD_ERROR(build_ybus(b, 2), ErrorCode::IndexOutOfRange);
    std::vector<Complex> shunts(3);
    EXPECT_SLD_ERROR(build_ybus({}, 2, shunts), ErrorCode::DimensionMismatch);
}

TEST(NewtonRaphson, TwoBusMatchesClosedForm) {
    // |V2|^4 + (2(rP + xQ) - |V1|^2)|V2|^2 + |z|^2|S|^2 = 0 for load S at bus 2.
    const Complex z{0.05, 0.2};
    const double p = 0.8, q = 0.3, v1 = 1.02;
    const double b = 2 * (z.real() * p + z.imag() * q) - v1 * v1;
    const double c = std::norm(z) * (p * p + q * q);
    const double v2 = std::sqrt((-b + std::sqrt(b * b - 4 * c)) / 2);

    std::vector<BusRecord> buses{bus(0, BusType::Slack, 0, 0, v1), bus(1, BusType::PQ, -p, -q)};
    std::vector<Branch> branches{branch(0, 1, z)};
    NewtonRaphsonConfig cfg;
    cfg.tolerance = 1e-12;
    cfg.max_iterations = 20;
    const auto [sol, trace] = newton_raphson(build_ybus(branches, 2), buses, cfg);
    ASSERT_TRUE(sol.converged);
    EXPECT_NEAR(sol.v[1], v2, 1e-10);
    // Losses equal |I|^2 r.
    const double i2 = (p * p + q * q) / (v2 * v2);
    EXPECT_NEAR(sol.p_calc[0] - p, i2 * z.real(), 1e-9);
    EXPECT_NEAR(sol.q_calc[0] - q, i2 * z.imag(), 1e-9);
}

TEST(NewtonRaphson, JacobianMatchesFiniteDifferences) {
    const FiveBus c;
    const auto ybus = c.ybus();
    NewtonRaphsonConfig cfg;
    cfg.max_iterations = 1;
    const auto [sol, trace] = newton_raphson(ybus, c.buses, cfg);
    const TraceRecord* it = nullptr;
    for (const auto& r : trace.records())
        if (r.phase == "iteration") it = &r;
    ASSERT_NE(it, nullptr);
    const auto& jac = std::get<MatrixPayload>(it->payload[2].value);

    // Flat start with the PV setpoint, unknowns theta(1..4), V(2..4).
    std::vector<double> v{1.06, 1.045, 1, 1, 1}, th(5, 0.0);
    std::vector<std::pair<bool, std::size_t>> x{{false, 1}, {false, 2}, {false, 3}, {false, 4}, {true, 2}, {true, 3}, {true, 4}};
    ASSERT_EQ(jac.rows, x.size());
    const double h = 1e-6;
    for (std::size_t col = 0; col < x.size(); ++col) {
        auto vp = v, vm = v, tp = th, tm = th;
        auto& plus = x[col].first ? vp : tp;
        auto& minus = x[col].first ? vm : tm;
        plus[x[col].second] += h;
        minus[x[col].second] -= h;
        const auto fp = power_mismatch(vp, tp, ybus, c.buses);
        const auto fm = power_mismatch(vm, tm, ybus, c.buses);
        for (std::size_t row = 0; row < x.size(); ++row) {
            const double fd = -(fp[row] - fm[row]) / (2 * h);  // mismatch is scheduled minus calculated
            EXPECT_NEAR(jac.data[row * jac.cols + col], fd, 1e-6) << row << "," << col;
        }
    }
}

TEST(NewtonRaphson, SingularJacobianIsReported) {
    // A PQ bus with no branches has an all-zero row.
    std::vector<BusRecord> buses{bus(0, BusType::Slack), bus(1, BusType::PQ, -0.1, 0), bus(2, BusType::PQ)};
    std::vector<Branch> branches{branch(0, 2, {0, 0.1})};
    try {
        newton_raphson(build_ybus(branches, 3), buses);
        FAIL() << "expected SingularJacobian";
    } catch (const SolveFailure& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularJacobian);
        EXPECT_TRUE(e.trace().closed());
    }
}

TEST(NewtonRaphson, OverloadedLineDoesNotConverge) {
    std::vector<BusRecord> buses{bus(0, BusType::Slack), bus(1, BusType::PQ, -8.0, -4.0)};
    std::vector<Branch> branches{branch(0, 1, {0.05, 0.5})};
    NewtonRaphsonConfig cfg;
    cfg.max_iterations = 50;
    try {
        const auto [sol, trace] = newton_raphson(build_ybus(branches, 2), buses, cfg);
        EXPECT_FALSE(sol.converged);
    } catch (const SolveFailure& e) {
        EXPECT_TRUE(e.code() == ErrorCode::Diverged || e.code() == ErrorCode::SingularJacobian) << e.what();
    }
}

TEST(NewtonRaphson, IterationCapIsHonoured) {
    const FiveBus c;
    NewtonRaphsonConfig cfg;
    cfg.max_iterations = 1;
    const auto [sol, trace] = newton_raphson(c.ybus(), c.buses, cfg);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.iterations_run, 1u);
    EXPECT_EQ(trace.count("iteration"), 1u);
    EXPECT_FALSE(trace.outcome()->converged);
}

TEST(GaussSeidel, TraceHasOneRecordPerSweep) {
    const FiveBus c;
    const auto [sol, trace] = gauss_seidel(c.ybus(), c.buses);
    EXPECT_EQ(trace.count("iteration"), 10u);
    EXPECT_EQ(sol.iterations_run, 10u);
    const auto& cfg = trace.config();
    const auto acc = std::find_if(cfg.begin(), cfg.end(), [](const auto& kv) { return kv.first == "acceleration"; });
    ASSERT_NE(acc, cfg.end());
    EXPECT_EQ(acc->second, "1.6");
}

TEST(GaussSeidel, AgreesWithNewtonRaphsonOnSmallSystems) {
    const FiveBus c;
    GaussSeidelConfig gs;
    gs.max_iterations = 2000;
    gs.tolerance = 1e-10;
    NewtonRaphsonConfig nr;
    nr.tolerance = 1e-10;
    nr.max_iterations = 20;
    const auto [a, ta] = gauss_seidel(c.ybus(), c.buses, gs);
    const auto [b, tb] = newton_raphson(c.ybus(), c.buses, nr);
    ASSERT_TRUE(a.converged);
    ASSERT_TRUE(b.converged);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(a.v[i], b.v[i], 1e-3);
        EXPECT_NEAR(a.theta[i], b.theta[i], 1e-3);
    }
}

TEST(GaussSeidel, RejectsBadAcceleration) {
    const FiveBus c;
    GaussSeidelConfig gs;
    gs.acceleration = 2.5;
    EXPECT_SLD_ERROR(gauss_seidel(c.ybus(), c.buses, gs), ErrorCode::InvalidSpec);
}

TEST(GaussSeidel, ZeroDiagonalIsReported) {
    std::vector<BusRecord> buses{bus(0, BusType::Slack), bus(1, BusType::PQ)};
    EXPECT_SLD_ERROR(gauss_seidel(build_ybus({}, 2), buses), ErrorCode::SingularDiagonal);
}

TEST(Ieee14, NewtonRaphsonConvergesFromFlatStart) {
    const auto run = solve_power_flow(cases::ieee14(), PowerFlowMethod::NewtonRaphson);
    ASSERT_EQ(run.system.size(), 14u);
    EXPECT_EQ(run.system.branches.size(), 20u);
    EXPECT_TRUE(run.solution.converged);
    EXPECT_LE(run.solution.iterations_run, 5u);
    EXPECT_LT(run.solution.max_mismatch, 1e-6);
    // Generation balances load plus losses.
    double losses = 0;
    for (const auto& f : run.solution.branch_flows) losses += f.p_loss;
    double injected = 0;
    for (double p : run.solution.p_calc) injected += p;
    EXPECT_NEAR(injected, losses, 1e-9);
}

TEST(Ieee14, BusOrderFollowsBusBars) {
    const auto layout = cases::ieee14_layout();
    const auto sys = extract_bus_system(layout.net);
    for (std::size_t i = 0; i < 14; ++i) EXPECT_EQ(sys.bus_of.at(layout.bars[i]), i);
    EXPECT_EQ(sys.buses[0].kind, BusType::Slack);
    EXPECT_EQ(sys.buses[1].kind, BusType::PV);
    EXPECT_NEAR(sys.buses[8].shunt.imag(), 0.19, 1e-12);
    EXPECT_NEAR(sys.buses[3].p_sched, -0.478, 1e-12);
}

TEST(ExtractBusSystem, SlackDesignationErrors) {
    Network none(Mode::PowerFlow);
    const auto a = none.add_component(BusBarSpec{}, {{100, 100}, Rotation::R0});
    const auto b = none.add_component(BusBarSpec{}, {{500, 100}, Rotation::R0});
    none.add_line(PortRef::on_bar(a, {100, 100}), PortRef::on_bar(b, {500, 100}), LineSpec{{0.01, 0.1}, Unit::PerUnit, {}});
    EXPECT_SLD_ERROR(extract_bus_system(none), ErrorCode::NoSlackDesignated);

    Network two = none;
    two.set_property(a, "voltage", "1");
    two.set_property(a, "type", "slack");
    two.set_property(b, "voltage", "1");
    two.set_property(b, "type", "slack");
    EXPECT_SLD_ERROR(extract_bus_system(two), ErrorCode::MultipleSlack);

    Network island = none;
    island.set_property(a, "voltage", "1");
    island.set_property(a, "type", "slack");
    island.add_component(BusBarSpec{}, {{900, 900}, Rotation::R0});
    EXPECT_SLD_ERROR(extract_bus_system(island), ErrorCode::IslandWithoutSlack);
}

TEST(ExtractBusSystem, VoltageSetpointStandsInForSlack) {
    Network net(Mode::PowerFlow);
    const auto a = net.add_component(BusBarSpec{}, {{100, 100}, Rotation::R0});
    const auto b = net.add_component(BusBarSpec{}, {{500, 100}, Rotation::R0});
    net.add_line(PortRef::on_bar(a, {100, 100}), PortRef::on_bar(b, {500, 100}), LineSpec{{0.01, 0.1}, Unit::PerUnit, {}});
    net.set_property(b, "voltage", "1.02");
    net.set_property(b, "type", "pv");
    const auto sys = extract_bus_system(net);
    EXPECT_EQ(sys.buses[1].kind, BusType::Slack);
    EXPECT_EQ(sys.buses[1].v_set, 1.02);
    ASSERT_EQ(sys.warnings.size(), 1u);
}

TEST(ExtractBusSystem, OhmicLinesNeedPerUnitMode) {
    Network net(Mode::PowerFlow);
    const auto a = net.add_component(BusBarSpec{}, {{100, 100}, Rotation::R0});
    const auto b = net.add_component(BusBarSpec{}, {{500, 100}, Rotation::R0});
    net.set_property(a, "voltage", "1");
    net.set_property(a, "type", "slack");
    net.add_line(PortRef::on_bar(a, {100, 100}), PortRef::on_bar(b, {500, 100}), LineSpec{{1, 10}, Unit::Ohm, {}});
    EXPECT_SLD_ERROR(extract_bus_system(net), ErrorCode::InvalidSpec);
}

TEST(ZeroImpedance, SplitBusGivesSameSystemAndSolution) {
    auto layout = cases::ieee14_layout();
    const BusSystem before = extract_bus_system(layout.net);
    const auto run_before = solve_power_flow(layout.net, PowerFlowMethod::NewtonRaphson);

    // Bus 4 drawn as two bars joined by a connecting line, with lines 3-4
    // and 4-5 moved onto the second bar.
    Network& net = layout.net;
    const ComponentId bar4 = layout.bars[3];
    const Point at = cases::ieee14_bus_position(4);
    const auto extra = net.add_component(BusBarSpec{cases::kIeee14BarLength, std::nullopt}, {{at.x + 300, at.y}, Rotation::R90});
    net.add_line(PortRef::on_bar(bar4, {at.x, at.y + 90}), PortRef::on_bar(extra, {at.x + 300, at.y + 90}), LineSpec{});
    double slot = -60;
    for (std::size_t k = 0; k < cases::kIeee14Branches.size(); ++k) {
        const auto& br = cases::kIeee14Branches[k];
        if (br.transformer || (br.from != 4 && br.to != 4) || (br.from == 2)) continue;
        const Line line = net.line(layout.branch_ids[k]);
        const bool a_is_4 = line.end_a.component == bar4;
        const Terminal& other = a_is_4 ? line.end_b : line.end_a;
        const auto far = PortRef::on_bar(other.component, net.terminal_point(other));
        const auto near = PortRef::on_bar(extra, {at.x + 300, at.y + slot});
        slot += 20;
        net.remove_component(line.id);
        if (a_is_4) net.add_line(near, far, line.spec);
        else net.add_line(far, near, line.spec);
    }
    const BusSystem after = extract_bus_system(net);
    ASSERT_EQ(after.size(), before.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(after.buses[i].kind, before.buses[i].kind);
        EXPECT_EQ(after.buses[i].p_sched, before.buses[i].p_sched);
        EXPECT_EQ(after.buses[i].q_sched, before.buses[i].q_sched);
        EXPECT_EQ(after.buses[i].v_set, before.buses[i].v_set);
        EXPECT_EQ(after.buses[i].shunt, before.buses[i].shunt);
    }
    EXPECT_EQ(after.bus_of.at(extra), 3u);
    auto key = [](const BusSystem& s) {
        std::vector<std::tuple<std::size_t, std::size_t, double, double, double>> out;
        for (const auto& b : s.branches)
            out.emplace_back(b.from, b.to, b.series_admittance.real(), b.series_admittance.imag(), b.shunt_susceptance_half);
        std::sort(out.begin(), out.end());
        return out;
    };
    EXPECT_EQ(key(after), key(before));

    const auto run_after = solve_power_flow(net, PowerFlowMethod::NewtonRaphson);
    ASSERT_TRUE(run_after.solution.converged);
    for (std::size_t i = 0; i < 14; ++i) {
        EXPECT_NEAR(run_after.solution.v[i], run_before.solution.v[i], 1e-10);
        EXPECT_NEAR(run_after.solution.theta[i], run_before.solution.theta[i], 1e-10);
    }
}

TEST(BranchFlows, LossesMatchSeriesCurrent) {
    const FiveBus c;
    NewtonRaphsonConfig nr;
    nr.tolerance = 1e-10;
    nr.max_iterations = 20;
    auto [sol, trace] = newton_raphson(c.ybus(), c.buses, nr);
    const auto flows = compute_branch_flows(sol, c.branches);
    for (std::size_t k = 0; k < flows.size(); ++k) {
        const auto& br = c.branches[k];
        const Complex vf = std::polar(sol.v[br.from], sol.theta[br.from]);
        const Complex vt = std::polar(sol.v[br.to], sol.theta[br.to]);
        const Complex i = br.series_admittance * (vf - vt);
        const Complex z = 1.0 / br.series_admittance;
        EXPECT_NEAR(flows[k].p_loss, std::norm(i) * z.real(), 1e-12);
        const double charging = br.shunt_susceptance_half * (std::norm(vf) + std::norm(vt));
        EXPECT_NEAR(flows[k].q_loss, std::norm(i) * z.imag() - charging, 1e-12);
    }
}
