#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sld/error.hpp"
#include "sld/geometry.hpp"
#include "sld/properties.hpp"

namespace sld {

/// Project-unique identity. Assigned monotonically and never reused.
struct ComponentId {
    std::uint64_t value = 0;

    friend auto operator<=>(const ComponentId&, const ComponentId&) = default;
};

inline std::string to_string(ComponentId id) { return std::to_string(id.value); }

enum class Mode { PerUnit, PowerFlow, StateEstimation };

inline std::string_view mode_name(Mode m) {
    switch (m) {
        case Mode::PerUnit: return "per-unit";
        case Mode::PowerFlow: return "power-flow";
        case Mode::StateEstimation: return "state-estimation";
    }
    return "";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    if (iequals(s, "per-unit") || iequals(s, "perunit") || iequals(s, "pu")) return Mode::PerUnit;
    if (iequals(s, "power-flow") || iequals(s, "powerflow") || iequals(s, "pf")) return Mode::PowerFlow;
    if (iequals(s, "state-estimation") || iequals(s, "stateestimation") || iequals(s, "se")) return Mode::StateEstimation;
    return std::nullopt;
}

enum class ComponentKind { Generator, Transformer, Load, BusBar, Line, Meter, PUBase };

inline constexpr std::array<ComponentKind, 7> kAllKinds{ComponentKind::Generator, ComponentKind::Transformer,
                                                        ComponentKind::Load,      ComponentKind::BusBar,
                                                        ComponentKind::Line,      ComponentKind::Meter,
                                                        ComponentKind::PUBase};

inline std::string_view kind_name(ComponentKind k) {
    switch (k) {
        case ComponentKind::Generator: return "generator";
        case ComponentKind::Transformer: return "transformer";
        case ComponentKind::Load: return "load";
        case ComponentKind::BusBar: return "bus-bar";
        case ComponentKind::Line: return "line";
        case ComponentKind::Meter: return "meter";
        case ComponentKind::PUBase: return "pu-base";
    }
    return "";
}

inline std::optional<ComponentKind> parse_kind(std::string_view s) {
    for (auto k : kAllKinds)
        if (iequals(kind_name(k), s)) return k;
    return std::nullopt;
}

/// Generators and the PU_Base marker exist only in per-unit projects;
/// meters only in state-estimation projects.
inline bool available_in(ComponentKind kind, Mode mode) {
    switch (kind) {
        case ComponentKind::Generator:
        case ComponentKind::PUBase: return mode == Mode::PerUnit;
        case ComponentKind::Meter: return mode == Mode::StateEstimation;
        default: return true;
    }
}

enum class Phase { Three, Single };
enum class Winding { Delta, Wye };
enum class BusType { Slack, PV, PQ };

struct GeneratorSpec {
    Quantity rated_power{100.0, Unit::MVA};
    Quantity rated_voltage{13.8, Unit::kV};
    std::optional<std::complex<double>> impedance;  // per-unit on own rating
    Phase phase = Phase::Three;

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct TransformerSpec {
    Quantity rated_power{100.0, Unit::MVA};
    Quantity primary_voltage{13.8, Unit::kV};
    Quantity secondary_voltage{138.0, Unit::kV};
    Winding primary_connection = Winding::Delta;
    Winding secondary_connection = Winding::Wye;
    std::optional<std::complex<double>> impedance;  // per-unit on own rating
    Phase phase = Phase::Three;

    friend bool operator==(const TransformerSpec&, const TransformerSpec&) = default;
};

struct PowerLoad {
    Quantity p{0.0, Unit::MW};
    Quantity q{0.0, Unit::MVAr};

    friend bool operator==(const PowerLoad&, const PowerLoad&) = default;
};

/// Element values as ohmic resistance and reactances at system frequency.
struct RlcLoad {
    double r_ohm = 0.0;
    double xl_ohm = 0.0;
    double xc_ohm = 0.0;

    friend bool operator==(const RlcLoad&, const RlcLoad&) = default;
};

struct LoadSpec {
    std::variant<PowerLoad, RlcLoad> form = PowerLoad{};

    friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

/// Operating data a bus-bar carries in power-flow and state-estimation
/// projects: its designation plus scheduled generation and shunt.
struct BusProperties {
    BusType type = BusType::PQ;
    std::optional<double> voltage_pu;
    double angle_deg = 0.0;
    std::optional<Quantity> p_gen;
    std::optional<Quantity> q_gen;
    std::optional<Quantity> q_min;
    std::optional<Quantity> q_max;
    std::optional<Quantity> shunt;  // reactive injection at 1 pu voltage

    friend bool operator==(const BusProperties&, const BusProperties&) = default;
};

struct BusBarSpec {
    double length = 60.0;
    std::optional<BusProperties> bus;

    friend bool operator==(const BusBarSpec&, const BusBarSpec&) = default;
};

struct LineSpec {
    std::complex<double> impedance{0.0, 0.0};
    Unit impedance_unit = Unit::PerUnit;       // Ohm or PerUnit
    Quantity charging{0.0, Unit::PerUnit};     // total B: pu, or MVAr at nominal voltage

    friend bool operator==(const LineSpec&, const LineSpec&) = default;

    bool connecting() const { return impedance == std::complex<double>{} && charging.magnitude == 0.0; }
};

struct MeterChannel {
    Quantity reading;
    std::optional<double> sigma_pu;

    friend bool operator==(const MeterChannel&, const MeterChannel&) = default;
};

struct MeterSpec {
    std::optional<MeterChannel> p;
    std::optional<MeterChannel> q;
    std::optional<MeterChannel> vmag;

    friend bool operator==(const MeterSpec&, const MeterSpec&) = default;
};

struct PUBaseSpec {
    Quantity base_power{100.0, Unit::MVA};
    Quantity base_voltage{13.8, Unit::kV};

    friend bool operator==(const PUBaseSpec&, const PUBaseSpec&) = default;
};

using ComponentSpec = std::variant<GeneratorSpec, TransformerSpec, LoadSpec, BusBarSpec, MeterSpec, PUBaseSpec>;

inline ComponentKind kind_of(const ComponentSpec& spec) {
    constexpr std::array<ComponentKind, 6> kinds{ComponentKind::Generator, ComponentKind::Transformer,
                                                 ComponentKind::Load,      ComponentKind::BusBar,
                                                 ComponentKind::Meter,     ComponentKind::PUBase};
    return kinds[spec.index()];
}

/// Number of indexed connection ports a kind declares. Bus-bars accept
/// attachments anywhere along the bar instead.
inline int port_count(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::Generator:
        case ComponentKind::Load: return 1;
        case ComponentKind::Transformer: return 2;
        default: return 0;
    }
}

inline bool connectable(ComponentKind kind) { return port_count(kind) > 0 || kind == ComponentKind::BusBar; }

// ---------------------------------------------------------------------------
// Spec validation

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidSpec, what);
}

inline void require_positive(const Quantity& q, Dimension dim, const char* what) {
    if (q.dimension() != dim) fail(ErrorCode::InvalidSpec, std::string(what) + ": wrong unit '" + std::string(unit_symbol(q.unit)) + "'");
    if (!(std::isfinite(q.magnitude) && q.magnitude > 0.0)) fail(ErrorCode::InvalidSpec, std::string(what) + " must be > 0");
}

inline void require_power(const Quantity& q, Dimension dim, const char* what) {
    if (q.dimension() != dim && !q.is_per_unit())
        fail(ErrorCode::InvalidSpec, std::string(what) + ": wrong unit '" + std::string(unit_symbol(q.unit)) + "'");
    if (!std::isfinite(q.magnitude)) fail(ErrorCode::InvalidSpec, std::string(what) + " must be finite");
}

inline void require_impedance(const std::optional<std::complex<double>>& z, const char* what) {
    if (!z) return;
    if (!(std::isfinite(z->real()) && std::isfinite(z->imag()))) fail(ErrorCode::InvalidSpec, std::string(what) + " must be finite");
    if (!(z->real() >= 0.0)) fail(ErrorCode::InvalidSpec, std::string(what) + " resistance must be >= 0");
}

}  // namespace detail

inline void validate_spec(const GeneratorSpec& s) {
    detail::require_positive(s.rated_power, Dimension::ApparentPower, "rated_power");
    detail::require_positive(s.rated_voltage, Dimension::Voltage, "rated_voltage");
    detail::require_impedance(s.impedance, "impedance");
}

inline void validate_spec(const TransformerSpec& s) {
    detail::require_positive(s.rated_power, Dimension::ApparentPower, "rated_power");
    detail::require_positive(s.primary_voltage, Dimension::Voltage, "primary_voltage");
    detail::require_positive(s.secondary_voltage, Dimension::Voltage, "secondary_voltage");
    detail::require_impedance(s.impedance, "impedance");
}

inline void validate_spec(const LoadSpec& s) {
    if (const auto* p = std::get_if<PowerLoad>(&s.form)) {
        detail::require_power(p->p, Dimension::ActivePower, "p");
        detail::require_power(p->q, Dimension::ReactivePower, "q");
    } else {
        const auto& r = std::get<RlcLoad>(s.form);
        for (double v : {r.r_ohm, r.xl_ohm, r.xc_ohm})
            detail::require(std::isfinite(v) && v >= 0.0, "RLC element values must be finite and >= 0");
        detail::require(r.r_ohm > 0.0 || r.xl_ohm > 0.0 || r.xc_ohm > 0.0, "RLC load needs a nonzero element");
    }
}

inline void validate_spec(const BusBarSpec& s) {
    detail::require(std::isfinite(s.length) && s.length > 0.0, "length must be > 0");
    if (!s.bus) return;
    const auto& b = *s.bus;
    if (b.voltage_pu) detail::require(std::isfinite(*b.voltage_pu) && *b.voltage_pu > 0.0, "voltage must be > 0");
    if (b.type != BusType::PQ) detail::require(b.voltage_pu.has_value(), "slack/PV bus needs a voltage setpoint");
    detail::require(std::isfinite(b.angle_deg), "angle must be finite");
    if (b.p_gen) detail::require_power(*b.p_gen, Dimension::ActivePower, "p_gen");
    if (b.q_gen) detail::require_power(*b.q_gen, Dimension::ReactivePower, "q_gen");
    if (b.q_min) detail::require_power(*b.q_min, Dimension::ReactivePower, "q_min");
    if (b.q_max) detail::require_power(*b.q_max, Dimension::ReactivePower, "q_max");
    if (b.shunt) detail::require_power(*b.shunt, Dimension::ReactivePower, "shunt");
    if (b.q_min && b.q_max && b.q_min->unit == b.q_max->unit)
        detail::require(b.q_min->magnitude <= b.q_max->magnitude, "q_min must not exceed q_max");
}

inline void validate_spec(const LineSpec& s) {
    detail::require(s.impedance_unit == Unit::Ohm || s.impedance_unit == Unit::PerUnit,
                    "line impedance unit must be ohm or pu");
    detail::require(std::isfinite(s.impedance.real()) && std::isfinite(s.impedance.imag()),
                    "line impedance must be finite");
    detail::require(s.impedance.real() >= 0.0, "line resistance must be >= 0");
    detail::require_power(s.charging, Dimension::ReactivePower, "b");
    detail::require(s.impedance != std::complex<double>{} || s.charging.magnitude == 0.0,
                    "a zero-impedance line cannot carry charging");
}

inline void validate_spec(const MeterSpec& s) {
    detail::require(s.p || s.q || s.vmag, "meter needs at least one measured quantity");
    if (s.p) detail::require_power(s.p->reading, Dimension::ActivePower, "p");
    if (s.q) detail::require_power(s.q->reading, Dimension::ReactivePower, "q");
    if (s.vmag) {
        detail::require(s.vmag->reading.is_per_unit(), "v reading must be in pu");
        detail::require(std::isfinite(s.vmag->reading.magnitude), "v must be finite");
    }
    for (const auto* ch : {&s.p, &s.q, &s.vmag})
        if (*ch && (*ch)->sigma_pu)
            detail::require(std::isfinite(*(*ch)->sigma_pu) && *(*ch)->sigma_pu > 0.0, "sigma must be > 0");
}

inline void validate_spec(const PUBaseSpec& s) {
    detail::require_positive(s.base_power, Dimension::ApparentPower, "base_power");
    detail::require_positive(s.base_voltage, Dimension::Voltage, "base_voltage");
}

inline void validate_spec(const ComponentSpec& spec) {
    std::visit([](const auto& s) { validate_spec(s); }, spec);
}

}  // namespace sld
