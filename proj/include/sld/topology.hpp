#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "sld/network.hpp"

namespace sld {

/// An electrical node of the diagram: one indexed port of a device, or a
/// whole bus-bar (port 0).
struct NodeKey {
    ComponentId component;
    int port = 0;

    friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

  private:
    std::vector<std::size_t> parent_;
};

inline NodeKey node_of(const Network& net, const Terminal& t) {
    if (net.component(t.component).kind() == ComponentKind::BusBar) return {t.component, 0};
    return {t.component, std::get<PortIndex>(t.attach).value};
}

enum class MergeRule {
    /// Every line joins its ends (per-unit regions); transformers separate.
    AllLines,
    /// Only zero-impedance lines and impedance-less transformers join nodes.
    ConnectingOnly,
};

/// Partition of all electrical nodes. Groups holding a bus-bar come first,
/// ordered by their lowest bus-bar id; the rest follow by lowest node key.
struct NodeGroups {
    std::map<NodeKey, std::size_t> group_of;
    std::vector<std::vector<NodeKey>> members;

    std::size_t size() const { return members.size(); }
    std::size_t at(const NodeKey& k) const { return group_of.at(k); }
};

inline NodeGroups group_nodes(const Network& net, MergeRule rule) {
    std::vector<NodeKey> keys;
    for (const auto& [id, c] : net.components()) {
        const auto k = c.kind();
        if (k == ComponentKind::BusBar) keys.push_back({id, 0});
        for (int p = 0; p < port_count(k); ++p) keys.push_back({id, p});
    }
    std::map<NodeKey, std::size_t> index;
    for (std::size_t i = 0; i < keys.size(); ++i) index.emplace(keys[i], i);

    DisjointSets sets(keys.size());
    for (const auto& [id, l] : net.lines()) {
        if (rule == MergeRule::ConnectingOnly && !l.spec.connecting()) continue;
        sets.unite(index.at(node_of(net, l.end_a)), index.at(node_of(net, l.end_b)));
    }
    if (rule == MergeRule::ConnectingOnly) {
        for (const auto& [id, c] : net.components())
            if (const auto* t = std::get_if<TransformerSpec>(&c.spec); t && !t->impedance)
                sets.unite(index.at({id, 0}), index.at({id, 1}));
    }

    std::map<std::size_t, std::vector<NodeKey>> by_root;
    for (std::size_t i = 0; i < keys.size(); ++i) by_root[sets.find(i)].push_back(keys[i]);

    struct Ordered {
        bool has_bar;
        NodeKey first_bar;
        NodeKey first;
        std::vector<NodeKey> members;
    };
    std::vector<Ordered> ordered;
    for (auto& [root, ms] : by_root) {
        std::sort(ms.begin(), ms.end());
        Ordered o{false, {}, ms.front(), ms};
        for (const auto& m : ms) {
            if (net.component(m.component).kind() == ComponentKind::BusBar) {
                o.has_bar = true;
                o.first_bar = m;
                break;
            }
        }
        ordered.push_back(std::move(o));
    }
    std::sort(ordered.begin(), ordered.end(), [](const Ordered& a, const Ordered& b) {
        if (a.has_bar != b.has_bar) return a.has_bar;
        if (a.has_bar) return a.first_bar < b.first_bar;
        return a.first < b.first;
    });

    NodeGroups g;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        for (const auto& m : ordered[i].members) g.group_of.emplace(m, i);
        g.members.push_back(std::move(ordered[i].members));
    }
    return g;
}

/// Connected components of an undirected graph given as edge pairs.
inline std::vector<std::size_t> component_labels(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    DisjointSets sets(n);
    for (const auto& [a, b] : edges) sets.unite(a, b);
    std::vector<std::size_t> label(n);
    std::map<std::size_t, std::size_t> compact;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, fresh] = compact.emplace(sets.find(i), compact.size());
        label[i] = it->second;
    }
    return label;
}

}  // namespace sld
