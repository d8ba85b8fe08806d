#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "sld/cases.hpp"
#include "sld/service.hpp"

using namespace sld;

namespace {

struct Client {
    Service service;

    Service::Response call(std::string_view method, const std::string& path, const Json& body = nullptr) {
        return service.handle(method, path, body.is_null() ? std::string() : body.dump());
    }

    std::string open(const Json& body = Json::object()) {
        const auto r = call("POST", "/projects", body);
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("session").get<std::string>();
    }

    std::uint64_t add(const std::string& s, const std::string& kind, double x, double y, Json extra = Json::object()) {
        extra["kind"] = kind;
        extra["x"] = x;
        extra["y"] = y;
        const auto r = call("POST", "/projects/" + s + "/components", extra);
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("created").at(0).at("id").get<std::uint64_t>();
    }
};

std::string error_name(const Service::Response& r) { return r.body.at("error").at("name").get<std::string>(); }

}  // namespace

TEST(Service, CatalogListsKindsPerMode) {
    Client c;
    const auto r = c.call("GET", "/catalog");
    ASSERT_EQ(r.status, 200);
    const auto& kinds = r.body.at("kinds");
    EXPECT_EQ(kinds.size(), kAllKinds.size());
    for (const auto& k : kinds) {
        if (k.at("kind") == "pu-base") {
            EXPECT_EQ(k.at("modes"), Json::array({"per-unit"}));
        }
        if (k.at("kind") == "meter") {
            EXPECT_EQ(k.at("modes"), Json::array({"state-estimation"}));
        }
    }
}

TEST(Service, DrawAndSolveTwoBusSystem) {
    Client c;
    const auto s = c.open({{"mode", "power-flow"}});
    const auto a = c.add(s, "bus-bar", 100, 100, {{"properties", {{"voltage", "1.02"}, {"type", "slack"}}}});
    const auto b = c.add(s, "bus-bar", 600, 100);
    const auto load = c.add(s, "load", 700, 300, {{"properties", {{"p", "50 MW"}, {"q", "20 MVAr"}}}});
    auto r = c.call("POST", "/projects/" + s + "/lines",
                    {{"a", {{"component", a}, {"point", {100, 100}}}},
                     {"b", {{"component", b}, {"point", {600, 100}}}},
                     {"properties", {{"r", "0.01 pu"}, {"x", "0.1 pu"}}}});
    ASSERT_EQ(r.status, 201) << r.body.dump();
    const auto line = r.body.at("created").at(0).at("id").get<std::uint64_t>();
    r = c.call("POST", "/projects/" + s + "/lines",
               {{"a", {{"component", b}, {"point", {620, 100}}}}, {"b", {{"component", load}, {"port", 0}}}});
    ASSERT_EQ(r.status, 201) << r.body.dump();

    r = c.call("GET", "/projects/" + s + "/validate");
    EXPECT_EQ(r.body.at("violations"), Json::array());

    r = c.call("POST", "/projects/" + s + "/solve", {{"method", "nr"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.at("status"), "ok") << r.body.dump();
    const auto& overlay = r.body.at("overlay");
    EXPECT_TRUE(overlay.at("buses").contains(std::to_string(a)));
    EXPECT_TRUE(overlay.at("buses").contains(std::to_string(b)));
    EXPECT_NEAR(overlay.at("buses").at(std::to_string(a)).at("v_pu").get<double>(), 1.02, 1e-12);
    EXPECT_GT(overlay.at("branches").at(std::to_string(line)).at("p_mw").get<double>(), 50.0);
    EXPECT_FALSE(r.body.at("trace_text").get<std::string>().empty());
}

TEST(Service, DeleteReturnsCascade) {
    Client c;
    const auto s = c.open({{"mode", "per-unit"}});
    const auto g = c.add(s, "generator", 100, 100);
    const auto t = c.add(s, "transformer", 300, 100);
    const auto l = c.add(s, "load", 500, 100);
    auto line = [&](std::uint64_t x, int px, std::uint64_t y, int py) {
        const auto r = c.call("POST", "/projects/" + s + "/lines",
                              {{"a", {{"component", x}, {"port", px}}}, {"b", {{"component", y}, {"port", py}}}});
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("created").at(0).at("id").get<std::uint64_t>();
    };
    const auto l1 = line(g, 0, t, 0);
    const auto l2 = line(t, 1, l, 0);
    const auto r = c.call("DELETE", "/projects/" + s + "/components/" + std::to_string(t));
    ASSERT_EQ(r.status, 200);
    std::vector<std::uint64_t> removed = r.body.at("removed");
    std::sort(removed.begin(), removed.end());
    EXPECT_EQ(removed, (std::vector<std::uint64_t>{t, l1, l2}));
    EXPECT_EQ(c.call("GET", "/projects/" + s + "/components/" + std::to_string(t)).status, 404);
    EXPECT_EQ(c.call("GET", "/projects/" + s + "/components/" + std::to_string(g)).status, 200);
}

TEST(Service, ConflictsMapTo409) {
    Client c;
    const auto s = c.open({{"mode", "per-unit"}});
    const auto bar = c.add(s, "bus-bar", 100, 100);
    const auto gen = c.add(s, "generator", 300, 300);
    const auto gen2 = c.add(s, "generator", 500, 300);
    auto r = c.call("POST", "/projects/" + s + "/lines",
                    {{"a", {{"component", gen}, {"port", 0}}}, {"b", {{"component", bar}, {"point", {100, 100}}}}});
    ASSERT_EQ(r.status, 201);
    r = c.call("POST", "/projects/" + s + "/components/" + std::to_string(bar) + "/rotate");
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(error_name(r), "BusBarConnected");
    r = c.call("POST", "/projects/" + s + "/lines",
               {{"a", {{"component", gen}, {"port", 0}}}, {"b", {{"component", gen2}, {"port", 0}}}});
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(error_name(r), "PortOccupied");
}

TEST(Service, EditsReportDeltas) {
    Client c;
    const auto s = c.open({{"mode", "per-unit"}});
    const auto gen = c.add(s, "generator", 100, 100);
    auto r = c.call("POST", "/projects/" + s + "/components/" + std::to_string(gen) + "/rotate");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.at("updated").at(0).at("placement").at("rotation"), 90);
    r = c.call("POST", "/projects/" + s + "/components/" + std::to_string(gen) + "/move", {{"x", 400}, {"y", 50}});
    EXPECT_EQ(r.body.at("updated").at(0).at("placement").at("x"), 400.0);
    r = c.call("POST", "/projects/" + s + "/components/" + std::to_string(gen) + "/copy", {{"x", 0}, {"y", 0}});
    EXPECT_EQ(r.status, 201);
    EXPECT_NE(r.body.at("created").at(0).at("id"), gen);
    r = c.call("PUT", "/projects/" + s + "/components/" + std::to_string(gen) + "/properties", {{"rated_voltage", "11 kV"}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("updated").at(0).at("properties").at("rated_voltage"), "11 kV");
}

TEST(Service, RejectedPropertyEditLeavesProjectUntouched) {
    Client c;
    const auto s = c.open({{"mode", "per-unit"}});
    const auto gen = c.add(s, "generator", 100, 100);
    const auto before = c.call("GET", "/projects/" + s).body;
    const auto r = c.call("PUT", "/projects/" + s + "/components/" + std::to_string(gen) + "/properties",
                          {{"name", "G9"}, {"rated_voltage", "eleven"}});
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(c.call("GET", "/projects/" + s).body, before);
}

TEST(Service, ErrorStatuses) {
    Client c;
    EXPECT_EQ(c.call("GET", "/projects/nope").status, 404);
    EXPECT_EQ(error_name(c.call("GET", "/projects/nope")), "UnknownSession");
    EXPECT_EQ(c.call("GET", "/nothing").status, 400);
    EXPECT_EQ(c.service.handle("POST", "/projects", "{not json").status, 400);
    const auto s = c.open({{"mode", "per-unit"}});
    auto r = c.call("POST", "/projects/" + s + "/components", {{"kind", "meter"}, {"x", 0}, {"y", 0}});
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(error_name(r), "ModeUnavailable");
    EXPECT_EQ(c.call("DELETE", "/projects/" + s + "/components/77").status, 404);
    EXPECT_EQ(c.call("POST", "/projects/" + s + "/save", {{"path", "/no/such/dir/x.sld"}}).status, 500);
    EXPECT_EQ(c.call("DELETE", "/projects/" + s).status, 200);
    EXPECT_EQ(c.call("DELETE", "/projects/" + s).status, 404);
}

TEST(Service, SolveGatesAndMethodMismatch) {
    Client c;
    const auto s = c.open({{"mode", "power-flow"}});
    auto r = c.call("POST", "/projects/" + s + "/solve", {{"method", "wls"}});
    EXPECT_EQ(r.body.at("status"), "invalid");
    EXPECT_EQ(r.body.at("violations").at(0).at("code"), "MethodModeMismatch");
    r = c.call("POST", "/projects/" + s + "/solve");
    EXPECT_EQ(r.body.at("status"), "invalid");
    EXPECT_TRUE(r.body.at("overlay").is_null());
}

TEST(Service, StatelessSolveOfDocument) {
    Client c;
    const auto run = solve_power_flow(cases::ieee14(), PowerFlowMethod::NewtonRaphson);
    const Json doc = to_document(cases::ieee14_metered(run.solution));
    for (const char* method : {"wls", "fdse"}) {
        const auto r = c.call("POST", "/solve", {{"project", doc}, {"method", method}});
        ASSERT_EQ(r.status, 200);
        EXPECT_EQ(r.body.at("status"), "ok") << method;
        EXPECT_EQ(r.body.at("solution").at("residuals").size(), 76u);
        EXPECT_FALSE(r.body.at("overlay").at("meters").empty());
    }
    const auto pu = c.call("POST", "/solve", {{"project", to_document(cases::radial_per_unit().net)}});
    EXPECT_EQ(pu.body.at("status"), "ok");
    EXPECT_EQ(pu.body.at("solution").at("regions").size(), 3u);
}

TEST(Service, UnconvergedSolveIsFailed) {
    Client c;
    const auto r = c.call("POST", "/solve", {{"project", to_document(cases::ieee14())}, {"method", "gs"}, {"iterations", 2}});
    EXPECT_EQ(r.body.at("status"), "failed");
    EXPECT_EQ(r.body.at("error").at("name"), "Diverged");
    EXPECT_EQ(r.body.at("solution").at("iterations"), 2);
}

TEST(Service, ModeSwitchKeepsOrRefuses) {
    Client c;
    const auto s = c.open({{"project", to_document(cases::ieee14())}});
    auto r = c.call("PUT", "/projects/" + s + "/mode", {{"mode", "state-estimation"}});
    EXPECT_EQ(r.status, 200);
    c.add(s, "meter", 0, 0);
    r = c.call("PUT", "/projects/" + s + "/mode", {{"mode", "power-flow"}});
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(c.call("GET", "/projects/" + s).body.at("project").at("mode"), "state-estimation");
}

TEST(Service, SaveAndReopen) {
    Client c;
    const auto path = std::filesystem::temp_directory_path() / "sld_service_test.sld";
    const auto s = c.open({{"project", to_document(cases::radial_per_unit().net)}});
    ASSERT_EQ(c.call("POST", "/projects/" + s + "/save", {{"path", path.string()}}).status, 200);
    const auto r = c.call("POST", "/projects/open", {{"path", path.string()}});
    ASSERT_EQ(r.status, 201);
    EXPECT_EQ(r.body.at("project"), c.call("GET", "/projects/" + s).body.at("project"));
    std::filesystem::remove(path);
}

TEST(Service, ConcurrentEditsInSeparateSessions) {
    Client c;
    std::vector<std::string> sessions;
    for (int i = 0; i < 4; ++i) sessions.push_back(c.open());
    std::vector<std::thread> workers;
    for (const auto& s : sessions)
        workers.emplace_back([&c, s] {
            for (int k = 0; k < 50; ++k) c.add(s, "bus-bar", 100.0 + 10 * k, 100);
        });
    for (auto& w : workers) w.join();
    for (const auto& s : sessions)
        EXPECT_EQ(c.call("GET", "/projects/" + s).body.at("project").at("components").size(), 50u);
    EXPECT_EQ(c.service.session_count(), 4u);
}

TEST(HttpStatus, Mapping) {
    EXPECT_EQ(http_status(ErrorCode::UnknownSession), 404);
    EXPECT_EQ(http_status(ErrorCode::BusBarConnected), 409);
    EXPECT_EQ(http_status(ErrorCode::IoFailure), 500);
    EXPECT_EQ(http_status(ErrorCode::ParseError), 400);
}
