#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "sld/network.hpp"
#include "sld/power_flow.hpp"
#include "sld/trace.hpp"

namespace sld {

enum class MeasurementKind { Pflow, Qflow, Pinj, Qinj, Vmag };

inline std::string_view measurement_kind_name(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::Pflow: return "Pflow";
        case MeasurementKind::Qflow: return "Qflow";
        case MeasurementKind::Pinj: return "Pinj";
        case MeasurementKind::Qinj: return "Qinj";
        case MeasurementKind::Vmag: return "Vmag";
    }
    return "";
}

inline bool is_flow(MeasurementKind k) { return k == MeasurementKind::Pflow || k == MeasurementKind::Qflow; }
inline bool is_active(MeasurementKind k) { return k == MeasurementKind::Pflow || k == MeasurementKind::Pinj; }

inline constexpr double kDefaultPowerSigma = 0.01;
inline constexpr double kDefaultVoltageSigma = 0.004;

/// `location` is a branch index for flows (measured at the from end when
/// `from_end`, else at the to end, directed into the branch) and a bus index
/// otherwise.
struct Measurement {
    MeasurementKind kind = MeasurementKind::Vmag;
    std::size_t location = 0;
    bool from_end = true;
    double value = 0.0;  // pu
    double sigma = kDefaultPowerSigma;
    std::optional<ComponentId> meter;
};

struct MeasurementSet {
    std::vector<Measurement> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
};

/// Electrical data the estimators need. Reference buses (one per island)
/// keep their angle pinned at zero.
struct EstimationModel {
    AdmittanceMatrix ybus;
    std::vector<Branch> branches;
    std::vector<std::size_t> references;

    std::size_t buses() const { return ybus.n; }
};

inline EstimationModel make_estimation_model(const BusSystem& sys) {
    EstimationModel m{build_ybus(sys), sys.branches, {}};
    for (const auto& b : sys.buses)
        if (b.kind == BusType::Slack) m.references.push_back(b.index);
    return m;
}

/// Column layout of the state vector: angles of non-reference buses, then
/// every voltage magnitude.
struct StateLayout {
    std::size_t n = 0;
    std::vector<std::size_t> angle_buses;
    std::vector<std::ptrdiff_t> angle_column;  // per bus, -1 for references

    explicit StateLayout(const EstimationModel& model) : n(model.buses()), angle_column(model.buses(), -1) {
        std::vector<bool> ref(n, false);
        for (auto r : model.references) {
            if (r >= n) fail(ErrorCode::IndexOutOfRange, "reference bus outside the model");
            ref[r] = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (ref[i]) continue;
            angle_column[i] = static_cast<std::ptrdiff_t>(angle_buses.size());
            angle_buses.push_back(i);
        }
    }

    std::size_t angles() const { return angle_buses.size(); }
    std::size_t dimension() const { return angles() + n; }
    std::size_t v_column(std::size_t bus) const { return angles() + bus; }
};

struct EstimationState {
    std::vector<double> v;
    std::vector<double> theta;

    static EstimationState flat(std::size_t n) { return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)}; }
};

namespace detail {

inline void check_set(const EstimationModel& model, const EstimationState& x, const MeasurementSet& set) {
    const std::size_t n = model.buses();
    if (x.v.size() != n || x.theta.size() != n) fail(ErrorCode::DimensionMismatch, "state size differs from bus count");
    for (const auto& m : set.items) {
        const std::size_t limit = is_flow(m.kind) ? model.branches.size() : n;
        if (m.location >= limit)
            fail(ErrorCode::DimensionMismatch,
                 fmt::format("{} measurement refers to {} {}", measurement_kind_name(m.kind),
                             is_flow(m.kind) ? "branch" : "bus", m.location));
        if (!(m.sigma > 0.0)) fail(ErrorCode::InvalidMeasurement, "sigma must be > 0");
    }
}

/// Terminal quantities of one branch end, seen from bus `i` towards bus `k`.
struct FlowTerms {
    double p, q;
    double dp_dthi, dp_dthk, dp_dvi, dp_dvk;
    double dq_dthi, dq_dthk, dq_dvi, dq_dvk;
};

inline FlowTerms flow_terms(const Branch& br, bool from_end, const EstimationState& x) {
    const std::size_t i = from_end ? br.from : br.to;
    const std::size_t k = from_end ? br.to : br.from;
    const double g = br.series_admittance.real();
    const double b = br.series_admittance.imag();
    const double bsh = br.shunt_susceptance_half;
    const double vi = x.v[i], vk = x.v[k];
    const double th = x.theta[i] - x.theta[k];
    const double c = std::cos(th), s = std::sin(th);
    FlowTerms t{};
    t.p = vi * vi * g - vi * vk * (g * c + b * s);
    t.q = -vi * vi * (b + bsh) - vi * vk * (g * s - b * c);
    t.dp_dthi = vi * vk * (g * s - b * c);
    t.dp_dthk = -t.dp_dthi;
    t.dp_dvi = 2.0 * vi * g - vk * (g * c + b * s);
    t.dp_dvk = -vi * (g * c + b * s);
    t.dq_dthi = -vi * vk * (g * c + b * s);
    t.dq_dthk = -t.dq_dthi;
    t.dq_dvi = -2.0 * vi * (b + bsh) - vk * (g * s - b * c);
    t.dq_dvk = -vi * (g * s - b * c);
    return t;
}

}  // namespace detail

/// Predicted measurement values h(x) from the AC network equations.
inline std::vector<double> measurement_function(const EstimationState& x, const EstimationModel& model,
                                                const MeasurementSet& set) {
    detail::check_set(model, x, set);
    const auto s = bus_injections(model.ybus, voltage_phasors(x.v, x.theta));
    std::vector<double> h;
    h.reserve(set.size());
    for (const auto& m : set.items) {
        switch (m.kind) {
            case MeasurementKind::Pflow:
                h.push_back(detail::flow_terms(model.branches[m.location], m.from_end, x).p);
                break;
            case MeasurementKind::Qflow:
                h.push_back(detail::flow_terms(model.branches[m.location], m.from_end, x).q);
                break;
            case MeasurementKind::Pinj: h.push_back(s(static_cast<Eigen::Index>(m.location)).real()); break;
            case MeasurementKind::Qinj: h.push_back(s(static_cast<Eigen::Index>(m.location)).imag()); break;
            case MeasurementKind::Vmag: h.push_back(x.v[m.location]); break;
        }
    }
    return h;
}

/// dh/d[theta; V] with reference angle columns removed; rows follow the
/// measurement order.
inline Eigen::MatrixXd measurement_jacobian(const EstimationState& x, const EstimationModel& model,
                                            const MeasurementSet& set) {
    detail::check_set(model, x, set);
    const StateLayout layout(model);
    const auto n = static_cast<Eigen::Index>(model.buses());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(set.size()),
                                                static_cast<Eigen::Index>(layout.dimension()));

    const Eigen::VectorXcd vph = voltage_phasors(x.v, x.theta);
    const Eigen::VectorXcd current = model.ybus.y * vph;
    Eigen::VectorXcd vnorm(n);
    for (Eigen::Index i = 0; i < n; ++i) vnorm(i) = std::polar(1.0, x.theta[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXcd dS_dth = Complex(0, 1) * vph.asDiagonal() *
                                    (Eigen::MatrixXcd(current.asDiagonal()) - model.ybus.y * vph.asDiagonal()).conjugate();
    const Eigen::MatrixXcd dS_dv = vph.asDiagonal() * (model.ybus.y * vnorm.asDiagonal()).conjugate() +
                                   Eigen::MatrixXcd(current.conjugate().asDiagonal()) * vnorm.asDiagonal();

    auto put_theta = [&](Eigen::Index row, std::size_t bus, double value) {
        if (const auto col = layout.angle_column[bus]; col >= 0) jac(row, col) += value;
    };
    auto put_v = [&](Eigen::Index row, std::size_t bus, double value) {
        jac(row, static_cast<Eigen::Index>(layout.v_column(bus))) += value;
    };

    for (std::size_t r = 0; r < set.size(); ++r) {
        const auto& m = set.items[r];
        const auto row = static_cast<Eigen::Index>(r);
        switch (m.kind) {
            case MeasurementKind::Pflow:
            case MeasurementKind::Qflow: {
                const auto& br = model.branches[m.location];
                const std::size_t i = m.from_end ? br.from : br.to;
                const std::size_t k = m.from_end ? br.to : br.from;
                const auto t = detail::flow_terms(br, m.from_end, x);
                const bool p = m.kind == MeasurementKind::Pflow;
                put_theta(row, i, p ? t.dp_dthi : t.dq_dthi);
                put_theta(row, k, p ? t.dp_dthk : t.dq_dthk);
                put_v(row, i, p ? t.dp_dvi : t.dq_dvi);
                put_v(row, k, p ? t.dp_dvk : t.dq_dvk);
                break;
            }
            case MeasurementKind::Pinj:
            case MeasurementKind::Qinj: {
                const auto i = static_cast<Eigen::Index>(m.location);
                const bool p = m.kind == MeasurementKind::Pinj;
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto bus = static_cast<std::size_t>(j);
                    put_theta(row, bus, p ? dS_dth(i, j).real() : dS_dth(i, j).imag());
                    put_v(row, bus, p ? dS_dv(i, j).real() : dS_dv(i, j).imag());
                }
                break;
            }
            case MeasurementKind::Vmag: put_v(row, m.location, 1.0); break;
        }
    }
    return jac;
}

struct StateEstimate {
    std::vector<double> v;
    std::vector<double> theta;
    std::vector<double> residuals;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations_run = 0;
};

struct EstimatorConfig {
    double tolerance = 1e-6;
    std::size_t max_iterations = 10;
};

inline EstimatorConfig default_fdse_config() { return {1e-6, 50}; }

namespace detail {

inline double weighted_objective(std::span<const double> residuals, const MeasurementSet& set) {
    double j = 0.0;
    for (std::size_t i = 0; i < residuals.size(); ++i) j += residuals[i] * residuals[i] / (set.items[i].sigma * set.items[i].sigma);
    return j;
}

inline std::vector<double> residuals(const EstimationState& x, const EstimationModel& model, const MeasurementSet& set) {
    auto h = measurement_function(x, model, set);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = set.items[i].value - h[i];
    return h;
}

inline Eigen::VectorXd weights(const MeasurementSet& set) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) w(static_cast<Eigen::Index>(i)) = 1.0 / (set.items[i].sigma * set.items[i].sigma);
    return w;
}

/// Full column rank of W^(1/2) H, the observability condition.
inline bool full_rank(const Eigen::MatrixXd& h, const Eigen::VectorXd& w) {
    if (h.cols() == 0) return true;
    if (h.rows() < h.cols()) return false;
    const Eigen::MatrixXd scaled = w.cwiseSqrt().asDiagonal() * h;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    return qr.rank() == h.cols();
}

inline void apply_step(EstimationState& x, const StateLayout& layout, const Eigen::VectorXd& dx) {
    for (std::size_t a = 0; a < layout.angles(); ++a) x.theta[layout.angle_buses[a]] += dx(static_cast<Eigen::Index>(a));
    for (std::size_t i = 0; i < layout.n; ++i) x.v[i] += dx(static_cast<Eigen::Index>(layout.v_column(i)));
}

inline StateEstimate finish_estimate(const EstimationState& x, const EstimationModel& model, const MeasurementSet& set,
                                     bool converged, std::size_t iterations) {
    StateEstimate est{x.v, x.theta, residuals(x, model, set), 0.0, converged, iterations};
    est.objective = weighted_objective(est.residuals, set);
    return est;
}

inline std::vector<std::pair<std::string, std::string>> estimator_config(const EstimatorConfig& cfg, const MeasurementSet& set,
                                                                         const StateLayout& layout) {
    return {{"tolerance", format_number(cfg.tolerance)},
            {"max_iterations", std::to_string(cfg.max_iterations)},
            {"measurements", std::to_string(set.size())},
            {"state_dimension", std::to_string(layout.dimension())}};
}

}  // namespace detail

/// Gauss-Newton weighted least squares: (H'WH) dx = H'W (z - h(x)).
inline std::pair<StateEstimate, SolveTrace> wls_estimate(const MeasurementSet& set, const EstimationModel& model,
                                                         std::optional<EstimationState> init = std::nullopt,
                                                         const EstimatorConfig& cfg = {}) {
    if (set.empty()) fail(ErrorCode::UnobservableSystem, "no measurements");
    EstimationState x = init.value_or(EstimationState::flat(model.buses()));
    for (auto r : model.references) x.theta[r] = 0.0;
    const StateLayout layout(model);
    if (set.size() < layout.dimension())
        fail(ErrorCode::UnobservableSystem,
             fmt::format("{} measurements for {} state variables", set.size(), layout.dimension()));
    detail::check_set(model, x, set);

    SolveTrace trace("wls", detail::estimator_config(cfg, set, layout));
    const Eigen::VectorXd w = detail::weights(set);
    trace.record("weights", {vector_item("w", std::vector<double>(w.data(), w.data() + w.size()))},
                 "W = diag(1/sigma^2)");

    std::size_t k = 0;
    bool converged = false;
    int growth = 0;
    double previous = INFINITY;
    while (true) {
        const auto r = detail::residuals(x, model, set);
        const double objective = detail::weighted_objective(r, set);
        if (!std::isfinite(objective)) {
            trace.finalize({false, k, "non-finite objective"});
            throw SolveFailure(ErrorCode::Diverged, "WLS objective became non-finite", trace);
        }
        growth = objective > previous ? growth + 1 : 0;
        previous = objective;
        if (growth >= 3) {
            trace.finalize({false, k, "objective grew three times in a row"});
            throw SolveFailure(ErrorCode::Diverged, "WLS objective grew for 3 consecutive iterations", trace);
        }
        const Eigen::MatrixXd h = measurement_jacobian(x, model, set);
        if (!detail::full_rank(h, w)) {
            trace.finalize({false, k, "gain matrix rank deficient"});
            throw SolveFailure(ErrorCode::UnobservableSystem, "gain matrix is singular; add measurements", trace);
        }
        const Eigen::MatrixXd gain = h.transpose() * w.asDiagonal() * h;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(gain);
        const Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
        const Eigen::VectorXd dx = ldlt.solve(h.transpose() * w.asDiagonal() * rv);
        const double step = dx.size() ? dx.cwiseAbs().maxCoeff() : 0.0;
        detail::apply_step(x, layout, dx);
        if (step < cfg.tolerance) {
            converged = true;
            break;
        }
        ++k;
        trace.record("iteration",
                     {scalar("objective", objective), scalar("step_norm", step), scalar("gain_rcond", ldlt.rcond()),
                      {"gain", detail::to_payload(gain), ""}, vector_item("v", x.v, "pu"),
                      vector_item("theta", detail::degrees(x.theta), "deg")},
                     fmt::format("iteration {}", k));
        if (k >= cfg.max_iterations) break;
    }
    auto est = detail::finish_estimate(x, model, set, converged, k);
    trace.record("convergence", {scalar("objective", est.objective)},
                 converged ? "step below tolerance" : "iteration cap reached");
    trace.finalize({converged, k, fmt::format("objective {:.6e} after {} iteration(s)", est.objective, k)});
    return {std::move(est), std::move(trace)};
}

/// Fast-decoupled estimator: constant P-theta and Q-V gain matrices taken
/// from the flat-start Jacobian, factorised once, solved in alternating
/// half-iterations.
inline std::pair<StateEstimate, SolveTrace> fdse_estimate(const MeasurementSet& set, const EstimationModel& model,
                                                          std::optional<EstimationState> init = std::nullopt,
                                                          const EstimatorConfig& cfg = default_fdse_config()) {
    MeasurementSet active, reactive;
    std::vector<std::size_t> active_rows, reactive_rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (is_active(set.items[i].kind)) {
            active.items.push_back(set.items[i]);
            active_rows.push_back(i);
        } else {
            reactive.items.push_back(set.items[i]);
            reactive_rows.push_back(i);
        }
    }
    if (active.empty()) fail(ErrorCode::UnobservableSystem, "active partition has no P measurements");
    if (reactive.empty()) fail(ErrorCode::UnobservableSystem, "reactive partition has no Q or V measurements");

    EstimationState x = init.value_or(EstimationState::flat(model.buses()));
    for (auto r : model.references) x.theta[r] = 0.0;
    const StateLayout layout(model);
    detail::check_set(model, x, set);
    const auto na = static_cast<Eigen::Index>(layout.angles());
    const auto nv = static_cast<Eigen::Index>(layout.n);

    const EstimationState flat = EstimationState::flat(model.buses());
    const Eigen::MatrixXd ha = measurement_jacobian(flat, model, active).leftCols(na);
    const Eigen::MatrixXd hr = measurement_jacobian(flat, model, reactive).rightCols(nv);
    const Eigen::VectorXd wa = detail::weights(active);
    const Eigen::VectorXd wr = detail::weights(reactive);
    if (!detail::full_rank(ha, wa)) fail(ErrorCode::UnobservableSystem, "active partition P-theta is rank deficient");
    if (!detail::full_rank(hr, wr)) fail(ErrorCode::UnobservableSystem, "reactive partition Q-V is rank deficient");
    const Eigen::MatrixXd ga = ha.transpose() * wa.asDiagonal() * ha;
    const Eigen::MatrixXd gr = hr.transpose() * wr.asDiagonal() * hr;
    const Eigen::LDLT<Eigen::MatrixXd> fa(ga);
    const Eigen::LDLT<Eigen::MatrixXd> fr(gr);

    SolveTrace trace("fdse", detail::estimator_config(cfg, set, layout));
    trace.record("gain", {{"G_p_theta", detail::to_payload(ga), ""}, {"G_q_v", detail::to_payload(gr), ""},
                          scalar("rcond_p_theta", na ? fa.rcond() : 1.0), scalar("rcond_q_v", fr.rcond())},
                 "constant gain matrices from the flat-start Jacobian");

    auto to_vector = [](const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
    };

    std::size_t k = 0;
    bool converged = false;
    int growth = 0;
    double previous = INFINITY;
    while (true) {
        double step_a = 0.0;
        if (na > 0) {
            const Eigen::VectorXd ra = to_vector(detail::residuals(x, model, active));
            const Eigen::VectorXd dth = fa.solve(ha.transpose() * wa.asDiagonal() * ra);
            step_a = dth.cwiseAbs().maxCoeff();
            for (Eigen::Index a = 0; a < na; ++a) x.theta[layout.angle_buses[static_cast<std::size_t>(a)]] += dth(a);
        }
        const Eigen::VectorXd rr = to_vector(detail::residuals(x, model, reactive));
        const Eigen::VectorXd dv = fr.solve(hr.transpose() * wr.asDiagonal() * rr);
        const double step_r = dv.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < nv; ++i) x.v[static_cast<std::size_t>(i)] += dv(i);

        if (step_a < cfg.tolerance && step_r < cfg.tolerance) {
            converged = true;
            break;
        }
        const double objective = detail::weighted_objective(detail::residuals(x, model, set), set);
        ++k;
        trace.record("iteration",
                     {scalar("step_p_theta", step_a), scalar("step_q_v", step_r), scalar("objective", objective),
                      vector_item("v", x.v, "pu"), vector_item("theta", detail::degrees(x.theta), "deg")},
                     fmt::format("iteration {}", k));
        if (!std::isfinite(objective)) {
            trace.finalize({false, k, "non-finite objective"});
            throw SolveFailure(ErrorCode::Diverged, "FD-SE objective became non-finite", trace);
        }
        growth = objective > previous ? growth + 1 : 0;
        previous = objective;
        if (growth >= 3) {
            trace.finalize({false, k, "objective grew three times in a row"});
            throw SolveFailure(ErrorCode::Diverged, "FD-SE objective grew for 3 consecutive iterations", trace);
        }
        if (k >= cfg.max_iterations) break;
    }
    auto est = detail::finish_estimate(x, model, set, converged, k);
    trace.record("convergence", {scalar("objective", est.objective)},
                 converged ? "both half-steps below tolerance" : "iteration cap reached");
    trace.finalize({converged, k, fmt::format("objective {:.6e} after {} iteration(s)", est.objective, k)});
    return {std::move(est), std::move(trace)};
}

struct ResidualEntry {
    std::size_t index = 0;
    MeasurementKind kind = MeasurementKind::Vmag;
    double measured = 0.0;
    double estimated = 0.0;
    double residual = 0.0;
    double normalized = 0.0;  // residual / sigma
    bool largest = false;
    std::optional<ComponentId> meter;
};

struct ResidualReport {
    std::vector<ResidualEntry> entries;
    std::optional<std::size_t> largest;
};

/// Per-measurement residuals; the entry with the largest |r/sigma| is flagged.
inline ResidualReport residual_report(const std::optional<StateEstimate>& estimate, const MeasurementSet& set) {
    if (!estimate) fail(ErrorCode::OrderingViolation, "no estimate yet; run an estimator first");
    if (estimate->residuals.size() != set.size())
        fail(ErrorCode::DimensionMismatch, "estimate residuals do not match the measurement set");
    ResidualReport report;
    double worst = -1.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& m = set.items[i];
        const double r = estimate->residuals[i];
        report.entries.push_back({i, m.kind, m.value, m.value - r, r, r / m.sigma, false, m.meter});
        if (std::abs(r / m.sigma) > worst) {
            worst = std::abs(r / m.sigma);
            report.largest = i;
        }
    }
    if (report.largest) report.entries[*report.largest].largest = true;
    return report;
}

/// Turns meter placements into measurements. Each meter attaches to the
/// nearest line or bus-bar: on a line it reads flow at the nearer end, on a
/// bus-bar it reads the bus injection.
inline MeasurementSet meters_to_measurements(const Network& net, const BusSystem& sys) {
    MeasurementSet set;
    const double base = net.system_base_mva();
    for (const auto& [id, c] : net.components()) {
        const auto* meter = std::get_if<MeterSpec>(&c.spec);
        if (!meter) continue;
        const Point at = c.placement.position;
        const ComponentId target = nearest_attachable(net, at, CandidateKinds::lines_and_buses());
        auto emit = [&](MeasurementKind kind, std::size_t location, bool from_end, const MeterChannel& ch, double sigma) {
            const double value = kind == MeasurementKind::Vmag ? ch.reading.magnitude : power_to_pu(ch.reading, base);
            set.items.push_back({kind, location, from_end, value, ch.sigma_pu.value_or(sigma), id});
        };
        if (const auto* line = net.find_line(target)) {
            auto it = sys.branch_of.find(target);
            if (it == sys.branch_of.end())
                fail(ErrorCode::InvalidMeasurement, fmt::format("meter {} sits on line {} which carries no branch flow",
                                                                to_string(id), to_string(target)));
            const bool from_end = distance(at, net.terminal_point(line->end_a)) <= distance(at, net.terminal_point(line->end_b));
            const auto& br = sys.branches[it->second];
            if (meter->p) emit(MeasurementKind::Pflow, it->second, from_end, *meter->p, kDefaultPowerSigma);
            if (meter->q) emit(MeasurementKind::Qflow, it->second, from_end, *meter->q, kDefaultPowerSigma);
            if (meter->vmag) emit(MeasurementKind::Vmag, from_end ? br.from : br.to, true, *meter->vmag, kDefaultVoltageSigma);
        } else {
            const std::size_t bus = sys.bus_of.at(target);
            if (meter->p) emit(MeasurementKind::Pinj, bus, true, *meter->p, kDefaultPowerSigma);
            if (meter->q) emit(MeasurementKind::Qinj, bus, true, *meter->q, kDefaultPowerSigma);
            if (meter->vmag) emit(MeasurementKind::Vmag, bus, true, *meter->vmag, kDefaultVoltageSigma);
        }
    }
    return set;
}

/// Noiseless measurements read off a power-flow solution: both-end flows on
/// every branch, injections and magnitudes at every bus.
inline MeasurementSet measurements_from_solution(const PowerFlowSolution& sol, std::size_t branches) {
    const auto flows = sol.branch_flows;
    if (flows.size() != branches) fail(ErrorCode::DimensionMismatch, "solution lacks branch flows");
    MeasurementSet set;
    for (const auto& f : flows) {
        set.items.push_back({MeasurementKind::Pflow, f.branch, true, f.p_from, kDefaultPowerSigma, std::nullopt});
        set.items.push_back({MeasurementKind::Qflow, f.branch, true, f.q_from, kDefaultPowerSigma, std::nullopt});
        set.items.push_back({MeasurementKind::Pflow, f.branch, false, f.p_to, kDefaultPowerSigma, std::nullopt});
        set.items.push_back({MeasurementKind::Qflow, f.branch, false, f.q_to, kDefaultPowerSigma, std::nullopt});
    }
    for (std::size_t i = 0; i < sol.v.size(); ++i) {
        set.items.push_back({MeasurementKind::Pinj, i, true, sol.p_calc[i], kDefaultPowerSigma, std::nullopt});
        set.items.push_back({MeasurementKind::Qinj, i, true, sol.q_calc[i], kDefaultPowerSigma, std::nullopt});
        set.items.push_back({MeasurementKind::Vmag, i, true, sol.v[i], kDefaultVoltageSigma, std::nullopt});
    }
    return set;
}

}  // namespace sld
