#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sld/network.hpp"
#include "sld/per_unit.hpp"
#include "sld/power_flow.hpp"
#include "sld/state_estimation.hpp"

namespace sld {

struct Violation {
    std::string code;  // an error name, or one of the gate names below
    std::optional<ComponentId> component;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

using Violations = std::vector<Violation>;

inline bool has_violation(const Violations& v, std::string_view code) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

/// Pre-solve gate: structural invariants plus whatever the project's mode
/// needs before a solver may run. Never throws for a well-formed Network.
inline Violations validate(const Network& net) {
    Violations out;
    for (auto& p : structural_problems(net)) out.push_back({"InvariantViolation", std::nullopt, std::move(p)});

    std::size_t pu_bases = 0, meters = 0, bars = 0;
    for (const auto& [id, c] : net.components()) {
        switch (c.kind()) {
            case ComponentKind::PUBase: ++pu_bases; break;
            case ComponentKind::Meter: ++meters; break;
            case ComponentKind::BusBar: ++bars; break;
            default: break;
        }
        const bool single = std::visit(
            [](const auto& s) {
                if constexpr (requires { s.phase; }) return s.phase == Phase::Single;
                else return false;
            },
            c.spec);
        if (single) out.push_back({"SinglePhaseUnsupported", id, "only three-phase base relations are implemented"});
    }
    if (!out.empty() && has_violation(out, "InvariantViolation")) return out;

    auto capture = [&](auto&& body) {
        try {
            body();
        } catch (const Error& e) {
            out.push_back({std::string(e.name()), std::nullopt, e.detail()});
        }
    };

    switch (net.mode()) {
        case Mode::PerUnit:
            if (pu_bases == 0) out.push_back({"MissingPUBase", std::nullopt, "place one PU_Base unit"});
            if (pu_bases > 1) out.push_back({"MultiplePUBase", std::nullopt, "only one PU_Base unit is allowed"});
            if (pu_bases == 1) capture([&] { (void)resolve_bases(net); });
            break;
        case Mode::PowerFlow:
        case Mode::StateEstimation: {
            if (bars == 0) out.push_back({"NoBuses", std::nullopt, "place at least one bus-bar"});
            std::optional<BusSystem> sys;
            capture([&] { sys = extract_bus_system(net); });
            if (net.mode() == Mode::StateEstimation) {
                if (meters == 0) out.push_back({"NoMeasurements", std::nullopt, "place at least one meter"});
                else if (sys) capture([&] { (void)meters_to_measurements(net, *sys); });
            }
            break;
        }
    }
    return out;
}

}  // namespace sld
