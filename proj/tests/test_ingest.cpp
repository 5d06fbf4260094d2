#include <random>

#include "artai/error.hpp"
#include "artai/ingest.hpp"
#include "artai/simplex.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artai;

namespace {

InteractionEvent ev(std::string u, std::string i, int64_t ts = 0) { return {std::move(u), std::move(i), ts, EventType::view}; }

std::string error_of(auto&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("load_interactions examples") {
    auto events = parse_interactions("u1,i1,1700000000\n", FileFormat::csv);
    REQUIRE(events.size() == 1);
    CHECK(events[0].user_id == "u1");
    CHECK(events[0].item_id == "i1");
    CHECK(events[0].timestamp == 1700000000);
    CHECK(events[0].event_type == EventType::view);

    CHECK(parse_interactions("", FileFormat::csv).empty());
    CHECK(parse_interactions("", FileFormat::jsonl).empty());

    const auto msg = error_of([] { parse_interactions("u1,i1,abc\n", FileFormat::csv); });
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("timestamp") != std::string::npos);
    CHECK_THROWS_AS(parse_interactions("u1,i1,-5\n", FileFormat::csv), ValidationError);
}

TEST_CASE("interactions with header, event types, jsonl and column map") {
    auto events = parse_interactions("user_id,item_id,timestamp,event_type\nu1,i1,5,like\nu2,i2,6,\n", FileFormat::csv);
    REQUIRE(events.size() == 2);
    CHECK(events[0].event_type == EventType::like);
    CHECK(events[1].event_type == EventType::view);

    events = parse_interactions("{\"user_id\":\"u\",\"item_id\":\"i\",\"timestamp\":3,\"event_type\":\"comment\"}\n",
                                FileFormat::jsonl);
    REQUIRE(events.size() == 1);
    CHECK(events[0].event_type == EventType::comment);

    events = parse_interactions("user,video,ts\nu9,v1,10\n", FileFormat::csv,
                                {{"user_id", "user"}, {"item_id", "video"}, {"timestamp", "ts"}});
    REQUIRE(events.size() == 1);
    CHECK(events[0].item_id == "v1");

    const auto msg = error_of([] { parse_interactions("user,video,ts\nu9,v1,10\n", FileFormat::csv, {{"user_id", "user"}}); });
    CHECK(msg.find("item_id") != std::string::npos);
    CHECK_THROWS_AS(parse_interactions("u1,i1,1,share\n", FileFormat::csv), ValidationError);
    CHECK_THROWS_AS(parse_file_format("xml"), ValidationError);
}

TEST_CASE("load_catalog examples") {
    auto cat = parse_catalog("i1,\"Title A\"\ni2,\"Title B\"\n", FileFormat::csv);
    REQUIRE(cat.size() == 2);
    CHECK(cat[1].title == "Title B");

    const auto msg = error_of([] { parse_catalog("i1,a\ni1,b\n", FileFormat::csv); });
    CHECK(msg.find("i1") != std::string::npos);

    cat = parse_catalog("item_id,title\ni1\n", FileFormat::csv);
    REQUIRE(cat.size() == 1);
    CHECK(cat[0].title.empty());

    cat = parse_catalog("item_id,title,category_label\ni1,x,sports\n", FileFormat::csv);
    CHECK(cat[0].category_label == std::optional<std::string>("sports"));
    CHECK_THROWS_AS(validate_catalog_labels(parse_catalog("i1,x,memes\n", FileFormat::csv), testing::toy_taxonomy()),
                    ValidationError);
}

TEST_CASE("estimate_interest_distribution examples") {
    const auto t = testing::toy_taxonomy();
    const std::map<std::string, std::string> labels = {{"n", "news"}, {"s", "sports"}};
    std::vector<InteractionEvent> events(5, ev("u", "s"));
    auto m = estimate_interest_distribution(events, labels, t, 0.0);
    CHECK(m.at("u") == std::vector<double>{0, 1, 0, 0, 0});

    // Oracle: (c_i + 1) / (sum c + 4); the unknown slot is not smoothed.
    events = {ev("u", "n"), ev("u", "n")};
    m = estimate_interest_distribution(events, labels, t, 1.0);
    const std::vector<double> counts = {2, 0, 0, 0};
    for (std::size_t i = 0; i < 4; ++i) CHECK(m.at("u")[i] == doctest::Approx((counts[i] + 1) / 6.0).epsilon(1e-15));
    CHECK(m.at("u")[4] == 0.0);

    const std::vector<std::string> users = {"ghost"};
    m = estimate_interest_distribution({}, labels, t, 1.0, users);
    CHECK(m.at("ghost") == std::vector<double>{0.25, 0.25, 0.25, 0.25, 0.0});

    events = {ev("u", "unlabeled")};
    m = estimate_interest_distribution(events, labels, t, 0.0);
    CHECK(m.at("u")[t.unknown_index()] == 1.0);
}

TEST_CASE("category popularity examples") {
    const auto t = testing::toy_taxonomy();
    const std::map<std::string, std::string> labels = {{"n", "news"}, {"s", "sports"}};
    const std::vector<InteractionEvent> events = {ev("a", "n"), ev("b", "n"), ev("c", "n"), ev("d", "s")};
    const auto p = compute_category_popularity(events, labels, t);
    CHECK(p == std::vector<double>{0.75, 0.25, 0, 0, 0});
    CHECK(compute_category_popularity(std::vector<InteractionEvent>{ev("a", "s")}, labels, t)[1] == 1.0);
    const auto msg = error_of([&] { compute_category_popularity({}, labels, t); });
    CHECK(msg.find("empty log") != std::string::npos);
}

TEST_CASE("co-engagement examples") {
    auto co = build_co_engagement(std::vector<InteractionEvent>{ev("u1", "i1"), ev("u1", "i2"), ev("u2", "i1"), ev("u2", "i2")});
    CHECK(co.count("i1", "i2") == 2);
    CHECK(co.count("i2", "i1") == 2);
    CHECK(co.count("i1", "i1") == 0);
    CHECK(build_co_engagement(std::vector<InteractionEvent>{ev("u1", "i1")}).empty());
    std::vector<InteractionEvent> events(5, ev("u1", "i1"));
    events.push_back(ev("u1", "i2"));
    CHECK(build_co_engagement(events).count("i1", "i2") == 1);
}

TEST_CASE("activity rate examples") {
    const int64_t day = 86400;
    auto r = compute_activity_rate(std::vector<InteractionEvent>{ev("u", "a", 10), ev("u", "a", 20), ev("u", "a", 30), ev("u", "a", 40)});
    CHECK(r.at("u") == 4.0);
    r = compute_activity_rate(std::vector<InteractionEvent>{ev("u", "a", 0), ev("u", "a", 1), ev("u", "a", day), ev("u", "a", day + 5)});
    CHECK(r.at("u") == 2.0);
    r = compute_activity_rate(std::vector<InteractionEvent>{ev("u", "a", 77)});
    CHECK(r.at("u") == 1.0);
}

TEST_CASE("property: random logs give simplex estimates and symmetric co-engagement") {
    const auto t = testing::toy_taxonomy();
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::map<std::string, std::string> labels;
        for (int i = 0; i < 12; ++i)
            if (gen() % 5) labels["i" + std::to_string(i)] = t.name(gen() % t.user_size());
        std::vector<InteractionEvent> events;
        const int n = static_cast<int>(gen() % 60);
        for (int e = 0; e < n; ++e)
            events.push_back(ev("u" + std::to_string(gen() % 8), "i" + std::to_string(gen() % 12), static_cast<int64_t>(gen() % 1000000)));

        const double smoothing = (gen() % 2) ? 0.0 : 0.5;
        for (const auto& [u, v] : estimate_interest_distribution(events, labels, t, smoothing)) CHECK(on_simplex(v));
        if (!events.empty()) CHECK(on_simplex(compute_category_popularity(events, labels, t)));

        const auto co = build_co_engagement(events);
        std::map<std::string, std::set<std::string>> users_of;
        for (const auto& e : events) users_of[e.item_id].insert(e.user_id);
        for (const auto& [a, ua] : users_of) {
            CHECK(co.count(a, a) == 0);
            for (const auto& [b, ub] : users_of) {
                if (a == b) continue;
                CHECK(co.count(a, b) == co.count(b, a));
                int64_t shared = 0;
                for (const auto& u : ua) shared += ub.count(u);
                CHECK(co.count(a, b) == shared);
            }
        }
    }
}

TEST_CASE("smoothing zero equals empirical frequencies") {
    const auto t = testing::toy_taxonomy();
    const std::map<std::string, std::string> labels = {{"n", "news"}, {"s", "sports"}, {"m", "music"}};
    const std::vector<InteractionEvent> events = {ev("u", "n"), ev("u", "s"), ev("u", "s"), ev("u", "m")};
    CHECK(estimate_interest_distribution(events, labels, t, 0.0).at("u") == std::vector<double>{0.25, 0.5, 0.25, 0, 0});
}

TEST_CASE("world model round trips through json") {
    const auto t = testing::toy_taxonomy();
    std::vector<ItemRecord> catalog = {{"a", "x", std::nullopt}, {"b", "y", std::string("news")}};
    const std::vector<InteractionEvent> events = {ev("u1", "a", 5), ev("u1", "b", 9), ev("u2", "b", 100000)};
    const auto wm = build_world_model(catalog, events, {{"a", "sports"}, {"b", "news"}}, t);
    const auto back = world_model_from_json(nlohmann::json::parse(world_model_to_json(wm).dump()));
    CHECK(back.taxonomy == wm.taxonomy);
    CHECK(back.category_popularity == wm.category_popularity);
    CHECK(back.user_interest_estimates == wm.user_interest_estimates);
    CHECK(back.co_engagement.rows() == wm.co_engagement.rows());
    CHECK(back.item_users == wm.item_users);
    CHECK(back.activity_rate == wm.activity_rate);
    CHECK(back.catalog.size() == 2);
}
