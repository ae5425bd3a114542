#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "biaslab/game.hpp"
#include "support/game_harness.hpp"

using namespace biaslab;

namespace {

const TimePoint t0 = parse_rfc3339("2021-06-01T12:00:00Z");

TimePoint at(int seconds) { return t0 + std::chrono::seconds(seconds); }

ErrorKind kind_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::io;
}

GameConfig small_config() {
    GameConfig cfg;
    cfg.calibration_items = 2;
    cfg.production_batch = 2;
    cfg.quorum = 3;
    cfg.tutorial_steps = {"one", "two"};
    return cfg;
}

// Fixed pools: two gold items (g1 biased on "slammed", g2 neutral), three pool items.
struct Fixture {
    std::map<std::string, std::string> texts{{"g1", "Senator slammed the bill."},
                                             {"g2", "The vote was held Tuesday."},
                                             {"u1", "Crowds gathered downtown."},
                                             {"u2", "Prices rose again."},
                                             {"u3", "The mayor spoke briefly."}};
    Game game;
    AnnotationStore store;

    explicit Fixture(GameConfig cfg = small_config()) : game(std::move(cfg)) {
        store.set_text_lookup([this](std::string_view id) -> std::optional<std::string> {
            if (const auto it = texts.find(std::string(id)); it != texts.end()) return it->second;
            return game.text_of(id);
        });
        game.set_calibration_pool({CalibrationItem{"g1", texts["g1"], Label::biased, {1}},
                                   CalibrationItem{"g2", texts["g2"], Label::neutral, {}}});
        game.set_production_pool({PoolItem{"u1", texts["u1"]}, PoolItem{"u2", texts["u2"]},
                                  PoolItem{"u3", texts["u3"]}});
        for (const auto *id : {"alice", "bob", "carol", "dave"}) {
            AnnotatorProfile p;
            p.id = id;
            p.role = Role::player;
            store.add_profile(p);
        }
        AnnotatorProfile e;
        e.id = "expert";
        e.role = Role::expert;
        store.add_profile(e);
    }

    std::string start(const std::string &player, int t = 0) {
        const auto id = game.start_session(store, player, at(t)).id;
        for (std::size_t i = 0; i < game.config().tutorial_steps.size(); ++i) game.acknowledge_tutorial(id, i, at(t));
        return id;
    }

    // Serves and answers with `label` until the session leaves `round`.
    void play_round(const std::string &sid, Round round, Label label, int t = 1) {
        while (game.session(sid).round == round) {
            const auto served = game.serve_next(store, sid, at(t));
            if (served.kind != ServeKind::sentence) return;
            game.submit_answer(store, sid, *served.sentence_id, label, {}, at(t));
        }
    }
};

}  // namespace

TEST(GameSession, StartRequiresAPlayerAndOneActiveSession) {
    Fixture f;
    EXPECT_EQ(kind_of([&] { f.game.start_session(f.store, "nobody", t0); }), ErrorKind::not_found);
    EXPECT_EQ(kind_of([&] { f.game.start_session(f.store, "expert", t0); }), ErrorKind::invalid);
    const auto &s = f.game.start_session(f.store, "alice", t0);
    EXPECT_EQ(s.id, "session-1");
    EXPECT_EQ(s.round, Round::tutorial);
    EXPECT_EQ(s.score, 0);
    EXPECT_EQ(kind_of([&] { f.game.start_session(f.store, "alice", t0); }), ErrorKind::conflict);
}

TEST(GameSession, TutorialStepsInOrderThenCalibration) {
    Fixture f;
    const auto id = f.game.start_session(f.store, "alice", t0).id;
    auto served = f.game.serve_next(f.store, id, t0);
    EXPECT_EQ(served.kind, ServeKind::tutorial_step);
    EXPECT_EQ(served.text, "one");
    EXPECT_EQ(kind_of([&] { f.game.acknowledge_tutorial(id, 1, t0); }), ErrorKind::conflict);
    f.game.acknowledge_tutorial(id, 0, t0);
    EXPECT_EQ(f.game.serve_next(f.store, id, t0).step, 1u);
    f.game.acknowledge_tutorial(id, 1, t0);
    EXPECT_EQ(f.game.session(id).round, Round::calibration);
    EXPECT_EQ(kind_of([&] { f.game.acknowledge_tutorial(id, 2, t0); }), ErrorKind::conflict);
}

TEST(GameCalibration, FeedbackAgainstExpertWithWords) {
    Fixture f;
    const auto id = f.start("alice");
    std::map<std::string, Feedback> fb;
    for (int i = 0; i < 2; ++i) {
        const auto served = f.game.serve_next(f.store, id, at(1));
        ASSERT_EQ(served.kind, ServeKind::sentence);
        EXPECT_EQ(served.round, Round::calibration);
        fb[*served.sentence_id] =
            f.game.submit_answer(f.store, id, *served.sentence_id, Label::biased, {1}, at(1));
    }
    EXPECT_EQ(fb["g1"].agreement, Agreement::match);
    EXPECT_EQ(fb["g1"].points_awarded, 10);
    EXPECT_EQ(fb["g1"].reference, Reference::expert);
    EXPECT_EQ(fb["g1"].explanation, "Expert label: biased. Expert biased words: slammed.");
    EXPECT_EQ(fb["g2"].agreement, Agreement::mismatch);
    EXPECT_EQ(fb["g2"].points_awarded, 0);
    EXPECT_EQ(fb["g2"].explanation, "Expert label: neutral.");
    EXPECT_EQ(f.game.session(id).score, 10);
    EXPECT_EQ(f.game.session(id).round, Round::production);
    EXPECT_EQ(f.store.find_record("g1", "alice")->biased_words, std::vector<std::size_t>{1});
}

TEST(GameAnswers, UnservedRepeatedAndInvalidAreRejectedCleanly) {
    Fixture f;
    const auto id = f.start("alice");
    EXPECT_EQ(kind_of([&] { f.game.submit_answer(f.store, id, "g1", Label::biased, {}, t0); }), ErrorKind::conflict);
    const auto item = *f.game.serve_next(f.store, id, t0).sentence_id;
    EXPECT_EQ(*f.game.serve_next(f.store, id, t0).sentence_id, item);  // re-serve, same item
    EXPECT_EQ(f.game.session(id).items_served.size(), 1u);

    const auto before = f.game.to_json();
    EXPECT_EQ(kind_of([&] { f.game.submit_answer(f.store, id, item, Label::biased, {99}, t0); }),
              ErrorKind::invalid);
    EXPECT_EQ(f.game.to_json(), before);
    EXPECT_EQ(f.store.size(), 0u);

    f.game.submit_answer(f.store, id, item, Label::neutral, {}, t0);
    EXPECT_EQ(kind_of([&] { f.game.submit_answer(f.store, id, item, Label::neutral, {}, t0); }),
              ErrorKind::conflict);
    EXPECT_EQ(f.store.size(), 1u);
}

TEST(GameProduction, QuorumMajorityAwardsMatchesOnly) {
    GameConfig cfg = small_config();
    cfg.calibration_items = 0;
    cfg.production_batch = 1;
    Fixture f(cfg);
    f.game.set_production_pool({PoolItem{"u1", f.texts["u1"]}});  // single item: everyone gets u1
    const auto a = f.start("alice"), b = f.start("bob"), c = f.start("carol");
    const auto answer = [&](const std::string &sid, Label l) {
        const auto served = f.game.serve_next(f.store, sid, at(9));
        EXPECT_EQ(*served.sentence_id, "u1");
        return f.game.submit_answer(f.store, sid, "u1", l, {}, at(9));
    };
    EXPECT_EQ(answer(a, Label::biased).agreement, Agreement::pending);
    EXPECT_EQ(answer(b, Label::neutral).agreement, Agreement::pending);
    const auto last = answer(c, Label::biased);
    EXPECT_EQ(f.game.consensus("u1"), Label::biased);
    EXPECT_EQ(last.agreement, Agreement::match);
    EXPECT_EQ(last.points_awarded, 5);
    EXPECT_EQ(f.game.session(a).score, 5);
    EXPECT_EQ(f.game.session(b).score, 0);
    EXPECT_EQ(f.game.session(c).score, 5);

    int settles = 0;
    for (const auto &e : f.game.log_entries()) settles += e.action == "settle" ? 1 : 0;
    EXPECT_EQ(settles, 2);

    // a late vote is scored against the frozen consensus
    const auto d = f.start("dave");
    EXPECT_EQ(answer(d, Label::neutral).agreement, Agreement::mismatch);
    EXPECT_EQ(f.game.consensus("u1"), Label::biased);
}

TEST(GameProduction, TiedQuorumStaysPending) {
    GameConfig cfg = small_config();
    cfg.calibration_items = 0;
    cfg.quorum = 2;
    Fixture f(cfg);
    f.game.set_production_pool({PoolItem{"u1", f.texts["u1"]}});
    const auto a = f.start("alice"), b = f.start("bob");
    for (const auto &[sid, l] : {std::pair{a, Label::biased}, std::pair{b, Label::neutral}}) {
        f.game.serve_next(f.store, sid, at(3));
        EXPECT_EQ(f.game.submit_answer(f.store, sid, "u1", l, {}, at(3)).agreement, Agreement::pending);
    }
    EXPECT_FALSE(f.game.consensus("u1").has_value());
}

TEST(GameAuthoring, UnlocksAfterBatchAndRatingsPayTheAuthor) {
    GameConfig cfg = small_config();
    cfg.calibration_items = 0;
    cfg.production_batch = 1;
    cfg.quorum = 1;
    Fixture f(cfg);
    const auto a = f.start("alice");
    EXPECT_EQ(kind_of([&] { f.game.submit_authored(a, "Too early.", t0); }), ErrorKind::conflict);
    f.play_round(a, Round::production, Label::neutral);
    EXPECT_EQ(f.game.session(a).round, Round::authoring);
    EXPECT_EQ(f.game.serve_next(f.store, a, at(2)).kind, ServeKind::authoring_prompt);
    EXPECT_EQ(kind_of([&] { f.game.submit_authored(a, " ... ", at(2)); }), ErrorKind::invalid);
    const auto authored = f.game.submit_authored(a, "Reckless officials wasted millions.", at(2)).id;
    EXPECT_EQ(authored, "authored-1");
    const int before = f.game.session(a).score;

    // bob rates until he meets the authored sentence
    const auto b = f.start("bob");
    bool rated = false;
    for (int i = 0; i < 10 && !rated; ++i) {
        const auto served = f.game.serve_next(f.store, b, at(3));
        if (served.kind != ServeKind::sentence) continue;
        f.game.submit_answer(f.store, b, *served.sentence_id, Label::biased, {0}, at(3));
        rated = *served.sentence_id == authored;
    }
    ASSERT_TRUE(rated);
    EXPECT_EQ(f.game.session(a).score, before + 2);
    EXPECT_EQ(f.game.find_authored(authored)->peer_ratings, (std::vector<PeerRating>{{"bob", Label::biased}}));
    EXPECT_EQ(f.store.find_record(authored, "bob")->biased_words, std::vector<std::size_t>{0});

    // the author is never served their own sentence
    for (const auto &item : f.game.session(a).items_served) EXPECT_NE(item, authored);
}

TEST(GameSession, ExhaustedPoolsCompleteTheSession) {
    GameConfig cfg = small_config();
    cfg.production_batch = 10;
    Fixture f(cfg);
    const auto a = f.start("alice");
    f.play_round(a, Round::calibration, Label::biased);
    f.play_round(a, Round::production, Label::neutral);
    EXPECT_EQ(f.game.session(a).state, SessionState::completed);
    EXPECT_EQ(f.game.session(a).items_served.size(), 5u);
    EXPECT_EQ(kind_of([&] { f.game.serve_next(f.store, a, at(9)); }), ErrorKind::conflict);
}

TEST(GameSession, EmptyCalibrationPoolAdvancesToProduction) {
    Fixture f;
    f.game.set_calibration_pool({});
    const auto a = f.start("alice");
    const auto served = f.game.serve_next(f.store, a, at(1));
    EXPECT_EQ(served.round, Round::production);
    EXPECT_EQ(f.game.session(a).round, Round::production);
}

TEST(GameSession, ExpiryAbandonsAndReleasesTheItem) {
    Fixture f;
    const auto a = f.start("alice");
    f.game.serve_next(f.store, a, at(10));
    EXPECT_TRUE(f.game.expire_sessions(at(100), std::chrono::minutes(30)).empty());
    EXPECT_EQ(f.game.expire_sessions(at(10 + 1801), std::chrono::minutes(30)), std::vector<std::string>{a});
    EXPECT_EQ(f.game.session(a).state, SessionState::abandoned);
    EXPECT_FALSE(f.game.session(a).outstanding.has_value());
    EXPECT_EQ(kind_of([&] { f.game.serve_next(f.store, a, at(2000)); }), ErrorKind::conflict);
    // the player may start over
    EXPECT_NO_THROW(f.game.start_session(f.store, "alice", at(2001)));
}

TEST(GameLeaderboard, SumsSessionsAndBreaksTiesByTime) {
    GameConfig cfg = small_config();
    Fixture f(cfg);
    const auto a = f.start("alice"), b = f.start("bob");
    f.start("carol");
    // both match g1 for 10; bob scores first
    for (const auto &[sid, t] : {std::pair{b, 5}, std::pair{a, 6}}) {
        std::string item;
        do {
            item = *f.game.serve_next(f.store, sid, at(t)).sentence_id;
            f.game.submit_answer(f.store, sid, item, item == "g1" ? Label::biased : Label::biased, {}, at(t));
        } while (item != "g1");
    }
    const auto board = f.game.leaderboard(10);
    ASSERT_EQ(board.size(), 3u);
    EXPECT_EQ(board[0].player_id, "bob");
    EXPECT_EQ(board[1].player_id, "alice");
    EXPECT_EQ(board[2].player_id, "carol");
    EXPECT_EQ(board[2].score, 0);
    EXPECT_FALSE(board[2].last_scored.has_value());
    EXPECT_EQ(f.game.leaderboard(1).size(), 1u);
}

TEST(GameDeterminism, SameSeedSameServeOrder) {
    const auto order = [](std::uint64_t seed) {
        GameConfig cfg = small_config();
        cfg.seed = seed;
        cfg.production_batch = 10;
        Fixture f(cfg);
        const auto a = f.start("alice");
        f.play_round(a, Round::calibration, Label::biased);
        f.play_round(a, Round::production, Label::biased);
        return f.game.session(a).items_served;
    };
    EXPECT_EQ(order(7), order(7));
    bool differs = false;
    for (std::uint64_t s = 8; s < 40 && !differs; ++s) differs = order(s) != order(7);
    EXPECT_TRUE(differs);
}

TEST(GameJson, RoundTripContinuesIdentically) {
    GameConfig cfg = small_config();
    cfg.calibration_items = 1;
    cfg.production_batch = 1;
    cfg.quorum = 2;
    Fixture f(cfg);
    const auto a = f.start("alice"), b = f.start("bob");
    f.play_round(a, Round::calibration, Label::biased);
    f.play_round(a, Round::production, Label::biased);
    f.game.submit_authored(a, "Shameless spin again.", at(4));
    f.game.serve_next(f.store, b, at(5));

    Fixture g(cfg);
    g.game.load_json(f.game.to_json());
    g.store.load_json(f.store.to_json());
    EXPECT_EQ(g.game.to_json(), f.game.to_json());
    for (auto *fx : {&f, &g}) {
        fx->play_round(b, Round::calibration, Label::neutral, 6);
        fx->play_round(b, Round::production, Label::neutral, 7);
    }
    EXPECT_EQ(g.game.to_json(), f.game.to_json());

    std::ostringstream log_a, log_b;
    f.game.export_log(log_a);
    g.game.export_log(log_b);
    EXPECT_EQ(log_a.str(), log_b.str());
    const auto first = log_a.str().substr(0, log_a.str().find('\n'));
    const auto entry = nlohmann::json::parse(first);
    EXPECT_EQ(entry.at("action"), "start");
    EXPECT_EQ(entry.at("session_id"), a);
}

TEST(GameProperty, RandomActionSequencesKeepInvariants) {
    std::size_t accepted = 0, rejected = 0, authoring = 0, consensus = 0, ratings = 0;
    for (std::uint64_t seed = 1; seed <= 1500; ++seed) {
        const auto out = harness::run_random_sequence(seed);
        ASSERT_TRUE(out.ok()) << "seed " << seed << ": " << out.first_problem;
        accepted += out.accepted;
        rejected += out.rejected;
        authoring += out.sessions_in_authoring;
        consensus += out.consensus_items;
        ratings += out.authored_ratings;
    }
    // the generator must reach every round and both scoring paths
    EXPECT_GT(accepted, 3000u);
    EXPECT_GT(rejected, 3000u);
    EXPECT_GT(authoring, 300u);
    EXPECT_GT(consensus, 300u);
    EXPECT_GT(ratings, 10u);
}
