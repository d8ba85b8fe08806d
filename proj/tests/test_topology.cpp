#include <gtest/gtest.h>

#include "sld/topology.hpp"

using namespace sld;

TEST(DisjointSets, UnionsAreTransitive) {
    DisjointSets s(6);
    s.unite(0, 3);
    s.unite(3, 5);
    s.unite(1, 2);
    EXPECT_EQ(s.find(0), s.find(5));
    EXPECT_EQ(s.find(1), s.find(2));
    EXPECT_NE(s.find(0), s.find(1));
    EXPECT_NE(s.find(4), s.find(0));
}

TEST(ComponentLabels, CountsIslands) {
    const auto labels = component_labels(5, {{0, 1}, {3, 4}});
    EXPECT_EQ(labels, (std::vector<std::size_t>{0, 0, 1, 2, 2}));
}

TEST(GroupNodes, ConnectingLinesMergeAndImpedanceLinesDoNot) {
    Network net(Mode::PowerFlow);
    const auto a = net.add_component(BusBarSpec{}, {{100, 100}, Rotation::R0});
    const auto b = net.add_component(BusBarSpec{}, {{400, 100}, Rotation::R0});
    const auto c = net.add_component(BusBarSpec{}, {{700, 100}, Rotation::R0});
    net.add_line(PortRef::on_bar(a, {110, 100}), PortRef::on_bar(b, {390, 100}), LineSpec{});
    net.add_line(PortRef::on_bar(b, {410, 100}), PortRef::on_bar(c, {690, 100}), LineSpec{{0.01, 0.1}, Unit::PerUnit, {}});
    const auto pf = group_nodes(net, MergeRule::ConnectingOnly);
    EXPECT_EQ(pf.size(), 2u);
    EXPECT_EQ(pf.at({a, 0}), pf.at({b, 0}));
    EXPECT_EQ(pf.at({a, 0}), 0u);
    EXPECT_EQ(pf.at({c, 0}), 1u);
    const auto pu = group_nodes(net, MergeRule::AllLines);
    EXPECT_EQ(pu.size(), 1u);
}

TEST(GroupNodes, IdealTransformerMergesForPowerFlowOnly) {
    Network net(Mode::PowerFlow);
    const auto a = net.add_component(BusBarSpec{}, {{100, 100}, Rotation::R0});
    const auto t = net.add_component(TransformerSpec{}, {{300, 200}, Rotation::R0});
    net.add_line(PortRef::on_bar(a, {100, 100}), PortRef::indexed(t, 0), LineSpec{});
    const auto pf = group_nodes(net, MergeRule::ConnectingOnly);
    EXPECT_EQ(pf.at({t, 0}), pf.at({t, 1}));
    const auto pu = group_nodes(net, MergeRule::AllLines);
    EXPECT_NE(pu.at({t, 0}), pu.at({t, 1}));
}
