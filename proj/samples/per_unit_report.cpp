// Per-unit conversion of a generator, two transformers and a line.

#include <fmt/format.h>

#include "sld/cases.hpp"
#include "sld/per_unit.hpp"

int main() {
    const auto radial = sld::cases::radial_per_unit();
    const auto bases = sld::resolve_bases(radial.net);
    const auto report = sld::convert_to_per_unit(radial.net, bases);
    for (const auto& r : report.regions)
        fmt::print("region {}: V base {:.3f} kV, Z base {:.4f} ohm\n", r.region, r.v_base / 1e3, r.z_base);
    for (const auto& c : report.components) {
        fmt::print("{} ({})\n", c.name.empty() ? sld::to_string(c.id) : c.name, sld::kind_name(c.kind));
        for (const auto& e : c.entries)
            fmt::print("  {:<18} {:>10.4f} {:<8} base {:>10.4f}  -> {:.6f} pu\n", e.quantity, e.value, e.unit, e.base, e.per_unit);
    }
}
