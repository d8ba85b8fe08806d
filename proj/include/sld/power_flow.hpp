#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "sld/network.hpp"
#include "sld/topology.hpp"
#include "sld/trace.hpp"

namespace sld {

using Complex = std::complex<double>;

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

/// Power quantity to per-unit on `base_mva`; pu values pass through.
inline double power_to_pu(const Quantity& q, double base_mva) {
    return q.is_per_unit() ? q.magnitude : q.si() / (base_mva * 1e6);
}

struct BusRecord {
    std::size_t index = 0;
    BusType kind = BusType::PQ;
    double p_sched = 0.0;  // generation minus load, pu
    double q_sched = 0.0;
    double v_set = 1.0;
    double theta_set = 0.0;  // rad, slack only
    std::optional<double> q_min;  // pu, PV buses
    std::optional<double> q_max;
    Complex shunt{0.0, 0.0};  // admittance to ground, pu
    std::string name;
    std::vector<ComponentId> bus_bars;
};

struct Branch {
    std::size_t from = 0;
    std::size_t to = 0;
    Complex series_admittance;
    double shunt_susceptance_half = 0.0;
    std::optional<ComponentId> source;  // line or transformer it came from
};

struct BusSystem {
    std::vector<BusRecord> buses;
    std::vector<Branch> branches;
    std::map<ComponentId, std::size_t> bus_of;     // bus-bars, loads, transformer primaries
    std::map<ComponentId, std::size_t> branch_of;  // impedance lines and transformers
    std::vector<std::string> warnings;

    std::size_t size() const { return buses.size(); }
};

struct AdmittanceMatrix {
    std::size_t n = 0;
    Eigen::MatrixXcd y;
};

/// Reduces the diagram to buses and branches. Zero-impedance lines merge
/// their ends into one bus; every remaining line and every transformer with
/// impedance becomes a branch.
inline BusSystem extract_bus_system(const Network& net) {
    if (net.mode() == Mode::PerUnit)
        fail(ErrorCode::InvalidSpec, "bus systems are built from power-flow or state-estimation projects");
    const double base = net.system_base_mva();
    const NodeGroups groups = group_nodes(net, MergeRule::ConnectingOnly);

    BusSystem sys;
    sys.buses.resize(groups.size());
    struct Designation {
        std::optional<BusType> type;
        std::optional<double> v;
        double angle = 0.0;
        ComponentId source;
    };
    std::vector<Designation> designation(groups.size());

    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto& bus = sys.buses[i];
        bus.index = i;
        for (const auto& key : groups.members[i]) {
            const Component& c = net.component(key.component);
            if (c.kind() != ComponentKind::BusBar) continue;
            bus.bus_bars.push_back(c.id);
            if (bus.name.empty()) bus.name = c.name;
        }
        if (bus.name.empty()) bus.name = net.component(groups.members[i].front().component).name;
    }

    for (const auto& [id, c] : net.components()) {
        if (const auto* bar = std::get_if<BusBarSpec>(&c.spec)) {
            const auto i = groups.at({id, 0});
            sys.bus_of[id] = i;
            if (!bar->bus) continue;
            const auto& p = *bar->bus;
            auto& bus = sys.buses[i];
            auto& d = designation[i];
            if (p.p_gen) bus.p_sched += power_to_pu(*p.p_gen, base);
            if (p.q_gen) bus.q_sched += power_to_pu(*p.q_gen, base);
            if (p.shunt) bus.shunt += Complex(0.0, power_to_pu(*p.shunt, base));
            if (p.q_min) bus.q_min = bus.q_min.value_or(0.0) + power_to_pu(*p.q_min, base);
            if (p.q_max) bus.q_max = bus.q_max.value_or(0.0) + power_to_pu(*p.q_max, base);
            if (p.voltage_pu && p.type != BusType::PQ) {
                if (d.v && *d.v != *p.voltage_pu)
                    fail(ErrorCode::ConflictingBusData,
                         fmt::format("bus-bars {} and {} are merged but hold different voltage setpoints",
                                     to_string(d.source), to_string(id)));
                d.v = p.voltage_pu;
                d.source = id;
            }
            if (p.type == BusType::Slack) {
                if (d.type == BusType::Slack && d.angle != p.angle_deg)
                    fail(ErrorCode::ConflictingBusData, "merged slack bus-bars disagree on angle");
                d.type = BusType::Slack;
                d.angle = p.angle_deg;
            } else if (p.type == BusType::PV && d.type != BusType::Slack) {
                d.type = BusType::PV;
            }
        } else if (const auto* load = std::get_if<LoadSpec>(&c.spec)) {
            const auto i = groups.at({id, 0});
            sys.bus_of[id] = i;
            const auto* pl = std::get_if<PowerLoad>(&load->form);
            if (!pl) fail(ErrorCode::InvalidSpec, "load " + to_string(id) + ": RLC loads are per-unit only");
            sys.buses[i].p_sched -= power_to_pu(pl->p, base);
            sys.buses[i].q_sched -= power_to_pu(pl->q, base);
        } else if (const auto* tr = std::get_if<TransformerSpec>(&c.spec)) {
            const auto a = groups.at({id, 0});
            const auto b = groups.at({id, 1});
            sys.bus_of[id] = a;
            if (!tr->impedance) continue;  // ideal: already merged
            if (*tr->impedance == Complex{})
                fail(ErrorCode::InvalidSpec, "transformer " + to_string(id) + " has zero impedance; omit r/x instead");
            const Complex z = *tr->impedance * (base * 1e6 / tr->rated_power.si());
            if (a == b) continue;
            sys.branch_of[id] = sys.branches.size();
            sys.branches.push_back({a, b, 1.0 / z, 0.0, id});
        }
    }

    for (const auto& [id, l] : net.lines()) {
        if (l.spec.connecting()) continue;
        if (l.spec.impedance_unit != Unit::PerUnit)
            fail(ErrorCode::InvalidSpec, "line " + to_string(id) + ": ohmic impedance needs per-unit mode");
        const auto a = groups.at(node_of(net, l.end_a));
        const auto b = groups.at(node_of(net, l.end_b));
        const double b_total = power_to_pu(l.spec.charging, base);
        if (a == b) {
            sys.buses[a].shunt += Complex(0.0, b_total);
            sys.warnings.push_back("line " + to_string(id) + " closes on a single bus; only its charging is kept");
            continue;
        }
        sys.branch_of[id] = sys.branches.size();
        sys.branches.push_back({a, b, 1.0 / l.spec.impedance, 0.5 * b_total, id});
    }

    // One reference per island.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& br : sys.branches) edges.emplace_back(br.from, br.to);
    const auto island = component_labels(sys.size(), edges);
    const std::size_t islands = sys.size() == 0 ? 0 : *std::max_element(island.begin(), island.end()) + 1;

    bool any_reference = false;
    for (const auto& d : designation) any_reference = any_reference || d.type == BusType::Slack || d.v.has_value();
    if (!any_reference) fail(ErrorCode::NoSlackDesignated, "no bus is designated slack or holds a voltage setpoint");

    for (std::size_t k = 0; k < islands; ++k) {
        std::vector<std::size_t> slacks;
        std::optional<std::size_t> fallback;
        for (std::size_t i = 0; i < sys.size(); ++i) {
            if (island[i] != k) continue;
            if (designation[i].type == BusType::Slack) slacks.push_back(i);
            if (!fallback && designation[i].v) fallback = i;
        }
        if (slacks.size() > 1)
            fail(ErrorCode::MultipleSlack, fmt::format("buses {} and {} are both slack in one island",
                                                       sys.buses[slacks[0]].name, sys.buses[slacks[1]].name));
        if (slacks.empty()) {
            if (!fallback)
                fail(ErrorCode::IslandWithoutSlack,
                     fmt::format("island containing bus {} has no slack or voltage setpoint",
                                 sys.buses[static_cast<std::size_t>(std::find(island.begin(), island.end(), k) - island.begin())].name));
            designation[*fallback].type = BusType::Slack;
            sys.warnings.push_back("no slack designated; bus " + sys.buses[*fallback].name + " used as slack");
        }
    }

    for (std::size_t i = 0; i < sys.size(); ++i) {
        auto& bus = sys.buses[i];
        const auto& d = designation[i];
        bus.kind = d.type.value_or(BusType::PQ);
        if (bus.kind != BusType::PQ) bus.v_set = d.v.value_or(1.0);
        if (bus.kind == BusType::Slack) bus.theta_set = deg_to_rad(d.angle);
    }
    return sys;
}

inline AdmittanceMatrix build_ybus(std::span<const Branch> branches, std::size_t n, std::span<const Complex> bus_shunts = {}) {
    if (!bus_shunts.empty() && bus_shunts.size() != n) fail(ErrorCode::DimensionMismatch, "shunt vector length differs from bus count");
    AdmittanceMatrix y{n, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    for (const auto& br : branches) {
        if (br.from >= n || br.to >= n) fail(ErrorCode::IndexOutOfRange, fmt::format("branch {}-{} outside {} buses", br.from, br.to, n));
        const auto f = static_cast<Eigen::Index>(br.from);
        const auto t = static_cast<Eigen::Index>(br.to);
        const Complex ys = br.series_admittance;
        const Complex ysh(0.0, br.shunt_susceptance_half);
        y.y(f, f) += ys + ysh;
        y.y(t, t) += ys + ysh;
        y.y(f, t) -= ys;
        y.y(t, f) -= ys;
    }
    for (std::size_t i = 0; i < bus_shunts.size(); ++i) y.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += bus_shunts[i];
    return y;
}

inline AdmittanceMatrix build_ybus(const BusSystem& sys) {
    std::vector<Complex> shunts;
    for (const auto& b : sys.buses) shunts.push_back(b.shunt);
    return build_ybus(sys.branches, sys.size(), shunts);
}

inline Eigen::VectorXcd voltage_phasors(std::span<const double> v, std::span<const double> theta) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = std::polar(v[i], theta[i]);
    return out;
}

/// Complex power injected at every bus: S = V .* conj(Y V).
inline Eigen::VectorXcd bus_injections(const AdmittanceMatrix& ybus, const Eigen::VectorXcd& vph) {
    return vph.cwiseProduct((ybus.y * vph).conjugate());
}

/// Scheduled minus calculated injection: dP for PV and PQ buses, then dQ
/// for PQ buses, each in bus order.
inline std::vector<double> power_mismatch(std::span<const double> v, std::span<const double> theta,
                                          const AdmittanceMatrix& ybus, std::span<const BusRecord> buses) {
    if (v.size() != buses.size() || theta.size() != buses.size() || ybus.n != buses.size())
        fail(ErrorCode::DimensionMismatch, "state, matrix and bus list sizes differ");
    const auto s = bus_injections(ybus, voltage_phasors(v, theta));
    std::vector<double> out;
    for (const auto& b : buses)
        if (b.kind != BusType::Slack) out.push_back(b.p_sched - s(static_cast<Eigen::Index>(b.index)).real());
    for (const auto& b : buses)
        if (b.kind == BusType::PQ) out.push_back(b.q_sched - s(static_cast<Eigen::Index>(b.index)).imag());
    return out;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct BranchFlow {
    std::size_t branch = 0;
    double p_from = 0.0;
    double q_from = 0.0;
    double p_to = 0.0;
    double q_to = 0.0;
    double p_loss = 0.0;
    double q_loss = 0.0;
};

struct PowerFlowSolution {
    std::vector<double> v;
    std::vector<double> theta;
    std::vector<double> p_calc;
    std::vector<double> q_calc;
    std::vector<BranchFlow> branch_flows;
    bool converged = false;
    std::size_t iterations_run = 0;
    double max_mismatch = 0.0;
};

struct GaussSeidelConfig {
    double acceleration = 1.6;
    std::size_t max_iterations = 10;
    double tolerance = 1e-6;
    bool enforce_q_limits = false;
};

struct NewtonRaphsonConfig {
    std::size_t max_iterations = 5;
    double tolerance = 1e-6;
    bool enforce_q_limits = false;
};

/// Power flowing into a branch at each end from the terminal voltages.
inline std::vector<BranchFlow> compute_branch_flows(const PowerFlowSolution& sol, std::span<const Branch> branches) {
    std::vector<BranchFlow> out;
    out.reserve(branches.size());
    for (std::size_t k = 0; k < branches.size(); ++k) {
        const auto& br = branches[k];
        const Complex vf = std::polar(sol.v[br.from], sol.theta[br.from]);
        const Complex vt = std::polar(sol.v[br.to], sol.theta[br.to]);
        const Complex ysh(0.0, br.shunt_susceptance_half);
        const Complex s_from = vf * std::conj(br.series_admittance * (vf - vt) + ysh * vf);
        const Complex s_to = vt * std::conj(br.series_admittance * (vt - vf) + ysh * vt);
        out.push_back({k, s_from.real(), s_from.imag(), s_to.real(), s_to.imag(), s_from.real() + s_to.real(),
                       s_from.imag() + s_to.imag()});
    }
    return out;
}

namespace detail {

inline MatrixPayload real_part(const Eigen::MatrixXcd& m) {
    MatrixPayload out{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.data.push_back(m(r, c).real());
    return out;
}

inline MatrixPayload imag_part(const Eigen::MatrixXcd& m) {
    MatrixPayload out{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.data.push_back(m(r, c).imag());
    return out;
}

inline MatrixPayload to_payload(const Eigen::MatrixXd& m) {
    MatrixPayload out{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.data.push_back(m(r, c));
    return out;
}

inline std::vector<double> degrees(std::span<const double> rad) {
    std::vector<double> out;
    for (double r : rad) out.push_back(rad_to_deg(r));
    return out;
}

inline void flat_start(std::span<const BusRecord> buses, std::vector<double>& v, std::vector<double>& theta) {
    v.assign(buses.size(), 1.0);
    theta.assign(buses.size(), 0.0);
    for (const auto& b : buses) {
        if (b.kind != BusType::PQ) v[b.index] = b.v_set;
        if (b.kind == BusType::Slack) theta[b.index] = b.theta_set;
    }
}

inline void check_buses(const AdmittanceMatrix& ybus, std::span<const BusRecord> buses) {
    if (ybus.n != buses.size() || static_cast<std::size_t>(ybus.y.rows()) != buses.size())
        fail(ErrorCode::DimensionMismatch, "admittance matrix and bus list sizes differ");
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].index != i) fail(ErrorCode::DimensionMismatch, "bus records must be indexed 0..n-1 in order");
}

/// Converts PV buses whose reactive output left its limits into PQ buses at
/// the violated limit. Returns true if any bus switched.
inline bool apply_q_limits(std::vector<BusRecord>& buses, const Eigen::VectorXcd& s, std::vector<std::string>& notes) {
    bool changed = false;
    for (auto& b : buses) {
        if (b.kind != BusType::PV) continue;
        const double q = s(static_cast<Eigen::Index>(b.index)).imag();
        std::optional<double> limit;
        if (b.q_max && q > *b.q_max) limit = b.q_max;
        if (b.q_min && q < *b.q_min) limit = b.q_min;
        if (!limit) continue;
        b.kind = BusType::PQ;
        b.q_sched = *limit;
        notes.push_back(fmt::format("bus {} reactive output {:.6f} pu clamped to {:.6f} pu", b.name, q, *limit));
        changed = true;
    }
    return changed;
}

inline void finish_solution(PowerFlowSolution& sol, const AdmittanceMatrix& ybus) {
    const auto s = bus_injections(ybus, voltage_phasors(sol.v, sol.theta));
    sol.p_calc.resize(sol.v.size());
    sol.q_calc.resize(sol.v.size());
    for (std::size_t i = 0; i < sol.v.size(); ++i) {
        sol.p_calc[i] = s(static_cast<Eigen::Index>(i)).real();
        sol.q_calc[i] = s(static_cast<Eigen::Index>(i)).imag();
    }
}

}  // namespace detail

/// Gauss-Seidel sweeps with acceleration. Stops at `tolerance` or after
/// `max_iterations` sweeps; running out of sweeps is reported through
/// `converged`, not thrown.
inline std::pair<PowerFlowSolution, SolveTrace> gauss_seidel(const AdmittanceMatrix& ybus, std::span<const BusRecord> bus_list,
                                                             const GaussSeidelConfig& cfg = {},
                                                             std::span<const std::string> warnings = {}) {
    if (!(cfg.acceleration > 0.0 && cfg.acceleration <= 2.0)) fail(ErrorCode::InvalidSpec, "acceleration must lie in (0, 2]");
    if (cfg.max_iterations < 1) fail(ErrorCode::InvalidSpec, "max_iterations must be >= 1");
    detail::check_buses(ybus, bus_list);
    std::vector<BusRecord> buses(bus_list.begin(), bus_list.end());
    const std::size_t n = buses.size();

    SolveTrace trace("gauss-seidel", {{"acceleration", format_number(cfg.acceleration)},
                                      {"max_iterations", std::to_string(cfg.max_iterations)},
                                      {"tolerance", format_number(cfg.tolerance)},
                                      {"buses", std::to_string(n)}});
    trace.record("ybus", {{"G", detail::real_part(ybus.y), "pu"}, {"B", detail::imag_part(ybus.y), "pu"}},
                 "bus admittance matrix");
    for (const auto& w : warnings) trace.record("warning", {}, w);

    for (const auto& b : buses)
        if (b.kind != BusType::Slack && std::abs(ybus.y(static_cast<Eigen::Index>(b.index), static_cast<Eigen::Index>(b.index))) == 0.0)
            fail(ErrorCode::SingularDiagonal, "bus " + b.name + " has a zero diagonal admittance");

    PowerFlowSolution sol;
    detail::flat_start(buses, sol.v, sol.theta);
    Eigen::VectorXcd vph = voltage_phasors(sol.v, sol.theta);

    auto mismatch_now = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            sol.v[i] = std::abs(vph(static_cast<Eigen::Index>(i)));
            sol.theta[i] = std::arg(vph(static_cast<Eigen::Index>(i)));
        }
        return max_abs(power_mismatch(sol.v, sol.theta, ybus, buses));
    };

    double mis = mismatch_now();
    trace.record("initial", {vector_item("v", sol.v, "pu"), vector_item("theta", detail::degrees(sol.theta), "deg"),
                             scalar("max_mismatch", mis, "pu")},
                 "flat start");
    std::vector<std::string> notes;
    sol.converged = mis < cfg.tolerance;
    while (!sol.converged && sol.iterations_run < cfg.max_iterations) {
        for (auto& b : buses) {
            if (b.kind == BusType::Slack) continue;
            const auto i = static_cast<Eigen::Index>(b.index);
            Complex others{0.0, 0.0};
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j)
                if (j != i) others += ybus.y(i, j) * vph(j);
            const Complex v_old = vph(i);
            double q = b.q_sched;
            bool pinned = b.kind == BusType::PV;
            if (pinned) {
                q = -std::imag(std::conj(v_old) * (others + ybus.y(i, i) * v_old));
                if (cfg.enforce_q_limits) {
                    if (b.q_max && q > *b.q_max) {
                        q = *b.q_max;
                        pinned = false;
                    } else if (b.q_min && q < *b.q_min) {
                        q = *b.q_min;
                        pinned = false;
                    }
                }
            }
            const Complex v_new = (Complex(b.p_sched, -q) / std::conj(v_old) - others) / ybus.y(i, i);
            Complex v_acc = v_old + cfg.acceleration * (v_new - v_old);
            if (pinned) v_acc = std::polar(b.v_set, std::arg(v_acc));
            vph(i) = v_acc;
        }
        if (!vph.allFinite()) {
            trace.finalize({false, sol.iterations_run + 1, "non-finite voltages"});
            throw SolveFailure(ErrorCode::Diverged, "Gauss-Seidel produced non-finite voltages", trace);
        }
        ++sol.iterations_run;
        if (cfg.enforce_q_limits) detail::apply_q_limits(buses, bus_injections(ybus, vph), notes);
        mis = mismatch_now();
        trace.record("iteration", {vector_item("v", sol.v, "pu"), vector_item("theta", detail::degrees(sol.theta), "deg"),
                                   scalar("max_mismatch", mis, "pu")},
                     fmt::format("sweep {}", sol.iterations_run));
        sol.converged = mis < cfg.tolerance;
    }
    sol.max_mismatch = mis;
    detail::finish_solution(sol, ybus);
    for (const auto& note : notes) trace.record("limits", {}, note);
    trace.finalize({sol.converged, sol.iterations_run,
                    fmt::format("max mismatch {:.3e} pu after {} sweep(s)", mis, sol.iterations_run)});
    return {std::move(sol), std::move(trace)};
}

/// Full polar Newton-Raphson on [theta(PV,PQ); V(PQ)].
inline std::pair<PowerFlowSolution, SolveTrace> newton_raphson(const AdmittanceMatrix& ybus, std::span<const BusRecord> bus_list,
                                                               const NewtonRaphsonConfig& cfg = {},
                                                               std::span<const std::string> warnings = {}) {
    if (cfg.max_iterations < 1) fail(ErrorCode::InvalidSpec, "max_iterations must be >= 1");
    detail::check_buses(ybus, bus_list);
    std::vector<BusRecord> buses(bus_list.begin(), bus_list.end());
    const std::size_t n = buses.size();

    SolveTrace trace("newton-raphson", {{"max_iterations", std::to_string(cfg.max_iterations)},
                                        {"tolerance", format_number(cfg.tolerance)},
                                        {"buses", std::to_string(n)}});
    trace.record("ybus", {{"G", detail::real_part(ybus.y), "pu"}, {"B", detail::imag_part(ybus.y), "pu"}},
                 "bus admittance matrix");
    for (const auto& w : warnings) trace.record("warning", {}, w);

    PowerFlowSolution sol;
    detail::flat_start(buses, sol.v, sol.theta);

    std::vector<std::size_t> pvpq, pq;
    auto classify = [&] {
        pvpq.clear();
        pq.clear();
        for (const auto& b : buses) {
            if (b.kind != BusType::Slack) pvpq.push_back(b.index);
            if (b.kind == BusType::PQ) pq.push_back(b.index);
        }
    };
    classify();

    auto mismatch = power_mismatch(sol.v, sol.theta, ybus, buses);
    double norm = max_abs(mismatch);
    trace.record("initial", {vector_item("v", sol.v, "pu"), vector_item("theta", detail::degrees(sol.theta), "deg"),
                             scalar("mismatch_norm", norm, "pu")},
                 "flat start");

    std::vector<std::string> notes;
    int growth = 0;
    while (true) {
        if (norm < cfg.tolerance) {
            if (cfg.enforce_q_limits &&
                detail::apply_q_limits(buses, bus_injections(ybus, voltage_phasors(sol.v, sol.theta)), notes)) {
                classify();
                mismatch = power_mismatch(sol.v, sol.theta, ybus, buses);
                norm = max_abs(mismatch);
                continue;
            }
            sol.converged = true;
            break;
        }
        if (sol.iterations_run >= cfg.max_iterations) break;

        // dS/dθ and dS/d|V| in complex form, then sliced into the real Jacobian.
        const Eigen::VectorXcd vph = voltage_phasors(sol.v, sol.theta);
        const Eigen::VectorXcd current = ybus.y * vph;
        Eigen::VectorXcd vnorm(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < vnorm.size(); ++i) vnorm(i) = vph(i) / std::abs(vph(i));
        const Eigen::MatrixXcd dS_dth = Complex(0, 1) * vph.asDiagonal() *
                                        (Eigen::MatrixXcd(current.asDiagonal()) - ybus.y * vph.asDiagonal()).conjugate();
        const Eigen::MatrixXcd dS_dv = vph.asDiagonal() * (ybus.y * vnorm.asDiagonal()).conjugate() +
                                       Eigen::MatrixXcd(current.conjugate().asDiagonal()) * vnorm.asDiagonal();

        const auto np = static_cast<Eigen::Index>(pvpq.size());
        const auto nq = static_cast<Eigen::Index>(pq.size());
        Eigen::MatrixXd jac(np + nq, np + nq);
        for (Eigen::Index r = 0; r < np; ++r) {
            const auto i = static_cast<Eigen::Index>(pvpq[r]);
            for (Eigen::Index c = 0; c < np; ++c) jac(r, c) = dS_dth(i, static_cast<Eigen::Index>(pvpq[c])).real();
            for (Eigen::Index c = 0; c < nq; ++c) jac(r, np + c) = dS_dv(i, static_cast<Eigen::Index>(pq[c])).real();
        }
        for (Eigen::Index r = 0; r < nq; ++r) {
            const auto i = static_cast<Eigen::Index>(pq[r]);
            for (Eigen::Index c = 0; c < np; ++c) jac(np + r, c) = dS_dth(i, static_cast<Eigen::Index>(pvpq[c])).imag();
            for (Eigen::Index c = 0; c < nq; ++c) jac(np + r, np + c) = dS_dv(i, static_cast<Eigen::Index>(pq[c])).imag();
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-14)) {
            trace.finalize({false, sol.iterations_run, "singular Jacobian"});
            throw SolveFailure(ErrorCode::SingularJacobian, fmt::format("Jacobian reciprocal condition {:.3e}", rcond), trace);
        }
        const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(mismatch.data(), static_cast<Eigen::Index>(mismatch.size()));
        const Eigen::VectorXd dx = lu.solve(rhs);
        for (Eigen::Index r = 0; r < np; ++r) sol.theta[pvpq[r]] += dx(r);
        for (Eigen::Index r = 0; r < nq; ++r) sol.v[pq[r]] += dx(np + r);
        ++sol.iterations_run;

        mismatch = power_mismatch(sol.v, sol.theta, ybus, buses);
        const double next = max_abs(mismatch);
        trace.record("iteration",
                     {vector_item("v", sol.v, "pu"), vector_item("theta", detail::degrees(sol.theta), "deg"),
                      {"jacobian", detail::to_payload(jac), ""}, scalar("jacobian_rcond", rcond),
                      scalar("mismatch_norm", next, "pu")},
                     fmt::format("iteration {}", sol.iterations_run));
        if (!std::isfinite(next)) {
            trace.finalize({false, sol.iterations_run, "non-finite mismatch"});
            throw SolveFailure(ErrorCode::Diverged, "Newton-Raphson produced a non-finite mismatch", trace);
        }
        growth = next > norm ? growth + 1 : 0;
        norm = next;
        if (growth >= 3) {
            trace.finalize({false, sol.iterations_run, "mismatch grew three times in a row"});
            throw SolveFailure(ErrorCode::Diverged, "mismatch norm grew for 3 consecutive iterations", trace);
        }
    }
    sol.max_mismatch = norm;
    detail::finish_solution(sol, ybus);
    for (const auto& note : notes) trace.record("limits", {}, note);
    trace.finalize({sol.converged, sol.iterations_run,
                    fmt::format("max mismatch {:.3e} pu after {} iteration(s)", norm, sol.iterations_run)});
    return {std::move(sol), std::move(trace)};
}

enum class PowerFlowMethod { GaussSeidel, NewtonRaphson };

struct PowerFlowRun {
    BusSystem system;
    PowerFlowSolution solution;
    SolveTrace trace;
};

/// Extract, solve and attach branch flows in one call.
inline PowerFlowRun solve_power_flow(const Network& net, PowerFlowMethod method, const GaussSeidelConfig& gs = {},
                                     const NewtonRaphsonConfig& nr = {}) {
    BusSystem sys = extract_bus_system(net);
    const auto ybus = build_ybus(sys);
    auto [sol, trace] = method == PowerFlowMethod::GaussSeidel ? gauss_seidel(ybus, sys.buses, gs, sys.warnings)
                                                               : newton_raphson(ybus, sys.buses, nr, sys.warnings);
    sol.branch_flows = compute_branch_flows(sol, sys.branches);
    return {std::move(sys), std::move(sol), std::move(trace)};
}

}  // namespace sld
