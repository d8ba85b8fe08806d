#pragma once

// Reference projects built through the public editing operations.

#include <array>
#include <optional>
#include <vector>

#include "sld/network.hpp"
#include "sld/power_flow.hpp"

namespace sld::cases {

struct Ieee14Bus {
    int number;
    std::optional<BusType> type;
    double v_set;
    double p_gen;  // MW
    double q_gen;  // MVAr
    double q_min, q_max;
    double p_load, q_load;
    double shunt;  // MVAr at 1 pu
};

struct Ieee14Branch {
    int from, to;
    double r, x, b;
    bool transformer;
};

inline constexpr std::array<Ieee14Bus, 14> kIeee14Buses{{
    {1, BusType::Slack, 1.06, 232.4, -16.9, 0, 10, 0, 0, 0},
    {2, BusType::PV, 1.045, 40, 42.4, -40, 50, 21.7, 12.7, 0},
    {3, BusType::PV, 1.01, 0, 23.4, 0, 40, 94.2, 19, 0},
    {4, std::nullopt, 1, 0, 0, 0, 0, 47.8, -3.9, 0},
    {5, std::nullopt, 1, 0, 0, 0, 0, 7.6, 1.6, 0},
    {6, BusType::PV, 1.07, 0, 12.2, -6, 24, 11.2, 7.5, 0},
    {7, std::nullopt, 1, 0, 0, 0, 0, 0, 0, 0},
    {8, BusType::PV, 1.09, 0, 17.4, -6, 24, 0, 0, 0},
    {9, std::nullopt, 1, 0, 0, 0, 0, 29.5, 16.6, 19},
    {10, std::nullopt, 1, 0, 0, 0, 0, 9, 5.8, 0},
    {11, std::nullopt, 1, 0, 0, 0, 0, 3.5, 1.8, 0},
    {12, std::nullopt, 1, 0, 0, 0, 0, 6.1, 1.6, 0},
    {13, std::nullopt, 1, 0, 0, 0, 0, 13.5, 5.8, 0},
    {14, std::nullopt, 1, 0, 0, 0, 0, 14.9, 5, 0},
}};

inline constexpr std::array<Ieee14Branch, 20> kIeee14Branches{{
    {1, 2, 0.01938, 0.05917, 0.0528, false},  {1, 5, 0.05403, 0.22304, 0.0492, false},
    {2, 3, 0.04699, 0.19797, 0.0438, false},  {2, 4, 0.05811, 0.17632, 0.034, false},
    {2, 5, 0.05695, 0.17388, 0.0346, false},  {3, 4, 0.06701, 0.17103, 0.0128, false},
    {4, 5, 0.01335, 0.04211, 0, false},       {4, 7, 0, 0.20912, 0, true},
    {4, 9, 0, 0.55618, 0, true},              {5, 6, 0, 0.25202, 0, true},
    {6, 11, 0.09498, 0.1989, 0, false},       {6, 12, 0.12291, 0.25581, 0, false},
    {6, 13, 0.06615, 0.13027, 0, false},      {7, 8, 0, 0.17615, 0, false},
    {7, 9, 0, 0.11001, 0, false},             {9, 10, 0.03181, 0.0845, 0, false},
    {9, 14, 0.12711, 0.27038, 0, false},      {10, 11, 0.08205, 0.19207, 0, false},
    {12, 13, 0.22092, 0.19988, 0, false},     {13, 14, 0.17093, 0.34802, 0, false},
}};

/// Diagram coordinates of bus `number` (1-based): a diagonal so no two bars
/// share a row or a column.
inline Point ieee14_bus_position(int number) {
    const double s = 400.0 + 650.0 * (number - 1);
    return {s, s};
}

inline constexpr double kIeee14BarLength = 200.0;

/// Hands out attachment points along a vertical bar, alternating above and
/// below its centre.
class BarSlots {
  public:
    explicit BarSlots(Point centre) : centre_(centre) {}

    Point next() {
        const double step = 20.0 * static_cast<double>(used_ / 2 + 1);
        const double along = used_ % 2 == 0 ? -step : step;
        ++used_;
        return {centre_.x, centre_.y + along};
    }

  private:
    Point centre_;
    int used_ = 0;
};

struct Ieee14Layout {
    Network net;
    std::array<ComponentId, 14> bars{};
    std::vector<ComponentId> branch_ids;  // parallel to kIeee14Branches
    std::vector<ComponentId> loads;
};

inline BusProperties ieee14_bus_properties(const Ieee14Bus& b) {
    BusProperties p;
    p.type = b.type.value_or(BusType::PQ);
    if (b.type) {
        p.voltage_pu = b.v_set;
        p.p_gen = Quantity{b.p_gen, Unit::MW};
        p.q_gen = Quantity{b.q_gen, Unit::MVAr};
    }
    if (b.type == BusType::PV) {
        p.q_min = Quantity{b.q_min, Unit::MVAr};
        p.q_max = Quantity{b.q_max, Unit::MVAr};
    }
    if (b.shunt != 0.0) p.shunt = Quantity{b.shunt, Unit::MVAr};
    return p;
}

/// The IEEE 14-bus system drawn as a diagram: fourteen bus-bars, seventeen
/// lines, three transformers tied in by connecting lines, and eleven loads.
/// Transformer taps are nominal.
inline Ieee14Layout ieee14_layout(Mode mode = Mode::PowerFlow) {
    Ieee14Layout out{Network(mode), {}, {}, {}};
    Network& net = out.net;
    std::vector<BarSlots> slots;
    for (const auto& b : kIeee14Buses) {
        const Point at = ieee14_bus_position(b.number);
        out.bars[static_cast<std::size_t>(b.number - 1)] = net.add_component(
            BusBarSpec{kIeee14BarLength, ieee14_bus_properties(b)}, {at, Rotation::R90}, "Bus " + std::to_string(b.number));
        slots.emplace_back(at);
    }
    auto bar = [&](int number) { return out.bars[static_cast<std::size_t>(number - 1)]; };
    auto slot = [&](int number) { return PortRef::on_bar(bar(number), slots[static_cast<std::size_t>(number - 1)].next()); };

    for (const auto& br : kIeee14Branches) {
        if (!br.transformer) {
            out.branch_ids.push_back(
                net.add_line(slot(br.from), slot(br.to), LineSpec{{br.r, br.x}, Unit::PerUnit, {br.b, Unit::PerUnit}}));
            continue;
        }
        const Point a = ieee14_bus_position(br.from), b = ieee14_bus_position(br.to);
        const Point mid{0.5 * (a.x + b.x) + 120.0, 0.5 * (a.y + b.y) - 60.0};
        const auto tr = net.add_component(
            TransformerSpec{{100, Unit::MVA}, {132, Unit::kV}, {33, Unit::kV}, Winding::Delta, Winding::Wye,
                            std::complex<double>{br.r, br.x}, Phase::Three},
            {mid, Rotation::R0}, fmt::format("T{}-{}", br.from, br.to));
        net.add_line(slot(br.from), PortRef::indexed(tr, 0), LineSpec{});
        net.add_line(PortRef::indexed(tr, 1), slot(br.to), LineSpec{});
        out.branch_ids.push_back(tr);
    }
    for (const auto& b : kIeee14Buses) {
        if (b.p_load == 0.0 && b.q_load == 0.0) continue;
        const Point at = ieee14_bus_position(b.number);
        const auto load = net.add_component(LoadSpec{PowerLoad{{b.p_load, Unit::MW}, {b.q_load, Unit::MVAr}}},
                                            {{at.x - 150.0, at.y + 150.0}, Rotation::R0}, "Load " + std::to_string(b.number));
        net.add_line(slot(b.number), PortRef::indexed(load, 0), LineSpec{});
        out.loads.push_back(load);
    }
    return out;
}

inline Network ieee14(Mode mode = Mode::PowerFlow) { return ieee14_layout(mode).net; }

/// The 14-bus system in state-estimation mode with a P/Q/|V| meter beside
/// every bus-bar and a P/Q meter at the sending end of every line, read off
/// the given power-flow solution (pu on the system base).
inline Network ieee14_metered(const PowerFlowSolution& sol) {
    Ieee14Layout layout = ieee14_layout(Mode::StateEstimation);
    Network& net = layout.net;
    const double base = net.system_base_mva();
    auto channel = [&](double value, Unit unit) { return MeterChannel{{value, unit}, std::nullopt}; };
    for (std::size_t i = 0; i < layout.bars.size(); ++i) {
        const Point at = ieee14_bus_position(static_cast<int>(i) + 1);
        net.add_component(MeterSpec{channel(sol.p_calc[i] * base, Unit::MW), channel(sol.q_calc[i] * base, Unit::MVAr),
                                    channel(sol.v[i], Unit::PerUnit)},
                          {{at.x - 8.0, at.y}, Rotation::R0}, "M-Bus " + std::to_string(i + 1));
    }
    // Lines come after the transformers in the bus system's branch list.
    std::size_t branch = 0;
    for (const auto& br : kIeee14Branches) branch += br.transformer ? 1 : 0;
    for (std::size_t k = 0; k < kIeee14Branches.size(); ++k) {
        if (kIeee14Branches[k].transformer) continue;
        const Line& line = net.line(layout.branch_ids[k]);
        const Point a = net.terminal_point(line.end_a);
        const Point b = net.terminal_point(line.end_b);
        const double dir = b.x > a.x ? 1.0 : -1.0;
        const auto& f = sol.branch_flows.at(branch++);
        net.add_component(MeterSpec{channel(f.p_from * base, Unit::MW), channel(f.q_from * base, Unit::MVAr), std::nullopt},
                          {{a.x + dir * 30.0, a.y + 5.0}, Rotation::R0},
                          fmt::format("M-Line {}-{}", kIeee14Branches[k].from, kIeee14Branches[k].to));
    }
    return net;
}

/// Three voltage levels in a row: a 13.8 kV generator, a 13.8/138 kV
/// step-up, a 138 kV line, a 138/69 kV step-down and a 69 kV load. The
/// PU_Base (100 MVA, 13.8 kV) sits next to the generator bus.
struct RadialLayout {
    Network net;
    ComponentId generator, bus_gen, t1, bus_hv, line, bus_far, t2, bus_load, load, pu_base;
};

inline RadialLayout radial_per_unit() {
    RadialLayout r{Network(Mode::PerUnit), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    Network& net = r.net;
    r.bus_gen = net.add_component(BusBarSpec{}, {{1000, 1000}, Rotation::R90}, "Bus G");
    r.bus_hv = net.add_component(BusBarSpec{}, {{2000, 1000}, Rotation::R90}, "Bus HV1");
    r.bus_far = net.add_component(BusBarSpec{}, {{3000, 1000}, Rotation::R90}, "Bus HV2");
    r.bus_load = net.add_component(BusBarSpec{}, {{4000, 1000}, Rotation::R90}, "Bus L");
    r.generator = net.add_component(
        GeneratorSpec{{100, Unit::MVA}, {13.8, Unit::kV}, std::complex<double>{0.0, 0.2}, Phase::Three},
        {{800, 1000}, Rotation::R0}, "G1");
    r.t1 = net.add_component(TransformerSpec{{50, Unit::MVA}, {13.8, Unit::kV}, {138, Unit::kV}, Winding::Delta,
                                             Winding::Wye, std::complex<double>{0.0, 0.1}, Phase::Three},
                             {{1500, 1000}, Rotation::R0}, "T1");
    r.t2 = net.add_component(TransformerSpec{{100, Unit::MVA}, {138, Unit::kV}, {69, Unit::kV}, Winding::Wye,
                                             Winding::Delta, std::complex<double>{0.0, 0.08}, Phase::Three},
                             {{3500, 1000}, Rotation::R0}, "T2");
    r.load = net.add_component(LoadSpec{PowerLoad{{40, Unit::MW}, {15, Unit::MVAr}}}, {{4200, 1020}, Rotation::R0}, "L1");
    r.pu_base = net.add_component(PUBaseSpec{}, {{1000, 900}, Rotation::R0}, "Base");

    net.add_line(PortRef::indexed(r.generator, 0), PortRef::on_bar(r.bus_gen, {1000, 1000}), LineSpec{});
    net.add_line(PortRef::on_bar(r.bus_gen, {1000, 1010}), PortRef::indexed(r.t1, 0), LineSpec{});
    net.add_line(PortRef::indexed(r.t1, 1), PortRef::on_bar(r.bus_hv, {2000, 1000}), LineSpec{});
    r.line = net.add_line(PortRef::on_bar(r.bus_hv, {2000, 1010}), PortRef::on_bar(r.bus_far, {3000, 1010}),
                          LineSpec{{19.044, 76.176}, Unit::Ohm, {0.0, Unit::PerUnit}});
    net.add_line(PortRef::on_bar(r.bus_far, {3000, 1000}), PortRef::indexed(r.t2, 0), LineSpec{});
    net.add_line(PortRef::indexed(r.t2, 1), PortRef::on_bar(r.bus_load, {4000, 1000}), LineSpec{});
    net.add_line(PortRef::on_bar(r.bus_load, {4000, 990}), PortRef::indexed(r.load, 0), LineSpec{});
    return r;
}

}  // namespace sld::cases
