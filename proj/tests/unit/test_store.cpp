#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "biaslab/store.hpp"
#include "biaslab/workbench.hpp"
#include "support/temp_dir.hpp"

using namespace biaslab;
using nlohmann::json;

namespace {

const std::string T = "2022-03-01T09:00:00Z";

json cmd(json c) {
    if (!c.contains("time")) c["time"] = T;
    return c;
}

std::vector<json> setup_commands() {
    return {
        cmd({{"op", "add_outlets"},
             {"outlets",
              {{{"id", "l"}, {"name", "L"}, {"leaning", "left"}, {"standard", "high"}},
               {{"id", "r"}, {"name", "R"}, {"leaning", "right"}, {"standard", "partisan"}}}}}),
        cmd({{"op", "add_sentences"},
             {"kind", "gold"},
             {"sentences",
              {{{"id", "g1"}, {"text", "Senator slammed the bill."}, {"outlet", "l"}, {"label", "biased"}},
               {{"id", "g2"}, {"text", "The vote was held."}, {"outlet", "r"}, {"label", "neutral"}}}}}),
        cmd({{"op", "add_sentences"},
             {"kind", "unlabeled"},
             {"sentences",
              {{{"id", "u1"}, {"text", "Crowds gathered."}, {"outlet", "l"}},
               {{"id", "u2"}, {"text", "Prices rose."}, {"outlet", "r"}}}}}),
        cmd({{"op", "add_sentences"},
             {"kind", "distant"},
             {"sentences", {{{"id", "d1"}, {"text", "Radical mobs again."}, {"outlet", "r"}}}}}),
        cmd({{"op", "add_profiles"},
             {"profiles",
              {{{"id", "e1"}, {"role", "expert"}},
               {{"id", "e2"}, {"role", "expert"}},
               {{"id", "alice"}, {"role", "player"}}}}}),
        cmd({{"op", "submit_annotations"},
             {"records",
              {{{"sentence_id", "g1"}, {"annotator_id", "e1"}, {"sentence_label", "biased"},
                {"biased_words", {1}}, {"timestamp", T}},
               {{"sentence_id", "g1"}, {"annotator_id", "e2"}, {"sentence_label", "biased"},
                {"biased_words", {1, 3}}, {"timestamp", T}}}}}),
    };
}

GameConfig quick_game() {
    GameConfig cfg;
    cfg.tutorial_steps = {"only step"};
    cfg.calibration_items = 2;
    cfg.production_batch = 1;
    return cfg;
}

ErrorKind kind_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::io;
}

}  // namespace

TEST(Workbench, CommandsBuildPoolsFromCorpusAndExperts) {
    Workbench w(quick_game());
    for (const auto &c : setup_commands()) w.apply(c);
    EXPECT_EQ(w.game().calibration_pool_size(), 2u);
    EXPECT_EQ(w.game().production_pool_size(), 2u);

    const auto sid = w.apply(cmd({{"op", "start_session"}, {"player_id", "alice"}})).at("id").get<std::string>();
    w.apply(cmd({{"op", "acknowledge_tutorial"}, {"session_id", sid}, {"step", 0}}));
    // calibration order is seeded; answer until g1 shows up
    json fb;
    for (int i = 0; i < 2; ++i) {
        const auto served = w.apply(cmd({{"op", "serve_next"}, {"session_id", sid}}));
        const auto item = served.at("sentence_id").get<std::string>();
        const auto f = w.apply(
            cmd({{"op", "submit_answer"}, {"session_id", sid}, {"sentence_id", item}, {"label", "biased"},
                 {"biased_words", {1}}}));
        if (item == "g1") fb = f;
    }
    // both experts marked token 1, only one marked token 3: majority keeps "slammed" and drops "bill"
    EXPECT_EQ(fb.at("explanation"), "Expert label: biased. Expert biased words: slammed.");
    EXPECT_EQ(fb.at("points_awarded"), 10);
}

TEST(Workbench, RejectedCommandsChangeNothing) {
    Workbench w(quick_game());
    for (const auto &c : setup_commands()) w.apply(c);
    const auto before = w.to_json();
    EXPECT_EQ(kind_of([&] { w.apply(cmd({{"op", "frobnicate"}})); }), ErrorKind::invalid);
    EXPECT_EQ(kind_of([&] { w.apply(json{{"op", "start_session"}, {"player_id", "alice"}}); }), ErrorKind::invalid);
    EXPECT_EQ(kind_of([&] {
                  w.apply(cmd({{"op", "add_sentences"},
                               {"kind", "unlabeled"},
                               {"sentences",
                                {{{"id", "u9"}, {"text", "fine"}, {"outlet", "l"}},
                                 {{"id", "u9"}, {"text", "dup"}, {"outlet", "l"}}}}}));
              }),
              ErrorKind::conflict);
    EXPECT_EQ(kind_of([&] {
                  w.apply(cmd({{"op", "submit_annotations"},
                               {"records",
                                {{{"sentence_id", "u1"}, {"annotator_id", "e1"}, {"sentence_label", "neutral"},
                                  {"timestamp", T}},
                                 {{"sentence_id", "u1"}, {"annotator_id", "ghost"}, {"sentence_label", "neutral"},
                                  {"timestamp", T}}}}}));
              }),
              ErrorKind::not_found);
    EXPECT_EQ(kind_of([&] {
                  w.apply(cmd({{"op", "submit_annotations"},
                               {"records",
                                {{{"sentence_id", "u1"}, {"annotator_id", "alice"}, {"sentence_label", "neutral"},
                                  {"timestamp", T}}}}}));
              }),
              ErrorKind::conflict);
    EXPECT_EQ(kind_of([&] { w.apply(cmd({{"op", "split"}, {"kind", "gold"}})); }), ErrorKind::invalid);
    EXPECT_EQ(w.to_json(), before);
}

TEST(Workbench, GoldDistantAndSplitCommands) {
    Workbench w(quick_game());
    for (const auto &c : setup_commands()) w.apply(c);
    const auto distant = w.apply(cmd({{"op", "assign_distant_labels"}}));
    EXPECT_EQ(distant.at("labeled"), 1);
    EXPECT_EQ(w.corpus().label_of("d1"), Label::biased);  // right-leaning outlet

    const auto gold = w.apply(cmd({{"op", "apply_gold"}, {"min_annotators", 2}}));
    EXPECT_EQ(gold.at("labels").size(), 1u);
    EXPECT_EQ(gold.at("under_annotated"), json::array({"g2"}));

    const auto split = w.apply(cmd({{"op", "split"}, {"kind", "unlabeled"}, {"seed", 3}, {"train", 0.5},
                                    {"validation", 0.0}, {"test", 0.5}}));
    EXPECT_EQ(split.at("train").size() + split.at("test").size(), 2u);
    EXPECT_EQ(w.splits().count("unlabeled"), 1u);
}

TEST(Workbench, JsonRoundTripIsExact) {
    Workbench w(quick_game());
    for (const auto &c : setup_commands()) w.apply(c);
    const auto sid = w.apply(cmd({{"op", "start_session"}, {"player_id", "alice"}})).at("id").get<std::string>();
    w.apply(cmd({{"op", "acknowledge_tutorial"}, {"session_id", sid}, {"step", 0}}));
    w.apply(cmd({{"op", "serve_next"}, {"session_id", sid}}));
    Workbench copy(quick_game());
    copy.load_json(w.to_json());
    EXPECT_EQ(copy.to_json(), w.to_json());
    // and it keeps playing the same way
    const auto a = w.apply(cmd({{"op", "serve_next"}, {"session_id", sid}}));
    const auto b = copy.apply(cmd({{"op", "serve_next"}, {"session_id", sid}}));
    EXPECT_EQ(a, b);
}

TEST(Store, JournalReplaysAfterReopen) {
    testutil::TempDir dir;
    json state;
    {
        Store s(dir.path(), quick_game(), 0);
        for (const auto &c : setup_commands()) s.commit(c);
        s.commit(json{{"op", "start_session"}, {"player_id", "alice"}});  // stamped by the store clock
        EXPECT_THROW(s.commit(cmd({{"op", "start_session"}, {"player_id", "alice"}})), Error);
        EXPECT_EQ(s.journal_seq(), 7u);
        state = s.read([](const Workbench &w) { return w.to_json(); });
    }
    std::ifstream journal(dir / "journal.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(journal, line);) ++lines;
    EXPECT_EQ(lines, 7u);  // the rejected command is not journaled

    Store again(dir.path(), quick_game(), 0);
    EXPECT_EQ(again.read([](const Workbench &w) { return w.to_json(); }), state);
    EXPECT_EQ(again.journal_seq(), 7u);
}

TEST(Store, CheckpointThenMoreWrites) {
    testutil::TempDir dir;
    json state;
    {
        Store s(dir.path(), quick_game(), 3);  // auto-checkpoint every 3 commits
        for (const auto &c : setup_commands()) s.commit(c);
        s.commit(cmd({{"op", "start_session"}, {"player_id", "alice"}}));
        state = s.read([](const Workbench &w) { return w.to_json(); });
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "snapshot.json"));
    Store again(dir.path(), quick_game());
    EXPECT_EQ(again.read([](const Workbench &w) { return w.to_json(); }), state);
    EXPECT_EQ(again.journal_seq(), 7u);
}

TEST(Store, SnapshotWithStaleJournalSkipsAppliedLines) {
    testutil::TempDir dir;
    {
        Store s(dir.path(), quick_game(), 0);
        for (const auto &c : setup_commands()) s.commit(c);
    }
    // simulate a crash between snapshot install and journal truncation
    const auto journal = [&] {
        std::ifstream in(dir / "journal.jsonl");
        return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    json state;
    {
        Store s(dir.path(), quick_game(), 0);
        s.checkpoint();
        state = s.read([](const Workbench &w) { return w.to_json(); });
    }
    std::ofstream(dir / "journal.jsonl", std::ios::trunc) << journal;
    Store again(dir.path(), quick_game());
    EXPECT_EQ(again.read([](const Workbench &w) { return w.to_json(); }), state);
}

TEST(Store, TornTailIsDroppedOtherDamageRefusesToOpen) {
    testutil::TempDir dir;
    {
        Store s(dir.path(), quick_game(), 0);
        for (const auto &c : setup_commands()) s.commit(c);
    }
    std::ofstream(dir / "journal.jsonl", std::ios::app) << R"({"op":"add_outl)";
    {
        Store s(dir.path(), quick_game());
        EXPECT_EQ(s.journal_seq(), 6u);
        s.commit(cmd({{"op", "start_session"}, {"player_id", "alice"}}));
    }
    {
        Store s(dir.path(), quick_game());
        EXPECT_EQ(s.journal_seq(), 7u);
    }

    // garbage in the middle
    std::string text;
    {
        std::ifstream in(dir / "journal.jsonl");
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    auto broken = text;
    broken.replace(broken.find('\n') + 1, 5, "#####");
    std::ofstream(dir / "journal.jsonl", std::ios::trunc) << broken;
    try {
        Store s(dir.path(), quick_game());
        FAIL() << "opened a corrupt store";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
        EXPECT_NE(std::string(e.what()).find("corrupt store: journal.jsonl line 2"), std::string::npos) << e.what();
    }

    // a gap in sequence numbers
    auto gap = text;
    gap.erase(gap.find('\n') + 1, gap.find('\n', gap.find('\n') + 1) - gap.find('\n'));
    std::ofstream(dir / "journal.jsonl", std::ios::trunc) << gap;
    EXPECT_EQ(kind_of([&] { Store s(dir.path(), quick_game()); }), ErrorKind::io);

    std::ofstream(dir / "journal.jsonl", std::ios::trunc) << text;
    std::ofstream(dir / "snapshot.json", std::ios::trunc) << "{\"schema_version\":";
    EXPECT_EQ(kind_of([&] { Store s(dir.path(), quick_game()); }), ErrorKind::io);
}

TEST(Store, NewerSchemaIsRefused) {
    testutil::TempDir dir;
    {
        Store s(dir.path(), quick_game());
        s.checkpoint();
    }
    std::ifstream in(dir / "snapshot.json");
    auto snap = json::parse(in);
    in.close();
    snap["schema_version"] = schema_version + 1;
    std::ofstream(dir / "snapshot.json", std::ios::trunc) << snap.dump();
    try {
        Store s(dir.path(), quick_game());
        FAIL();
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("newer than supported"), std::string::npos);
    }
}

TEST(Store, ConcurrentCommitsAreAllDurable) {
    testutil::TempDir dir;
    {
        Store s(dir.path(), quick_game(), 50);
        for (const auto &c : setup_commands()) s.commit(c);
        std::vector<std::thread> writers;
        for (int t = 0; t < 4; ++t) {
            writers.emplace_back([&s, t] {
                for (int i = 0; i < 40; ++i) {
                    const auto id = "p" + std::to_string(t) + "-" + std::to_string(i);
                    s.commit(cmd({{"op", "add_profiles"}, {"profiles", {{{"id", id}, {"role", "crowdworker"}}}}}));
                    (void)s.read([](const Workbench &w) { return w.annotations().profiles().size(); });
                }
            });
        }
        for (auto &w : writers) w.join();
        EXPECT_EQ(s.journal_seq(), 6u + 160u);
    }
    Store again(dir.path(), quick_game());
    EXPECT_EQ(again.read([](const Workbench &w) { return w.annotations().profiles().size(); }), 3u + 160u);
}

TEST(Store, GameConfigIsFixedAtCreation) {
    testutil::TempDir dir;
    { Store s(dir.path(), quick_game(), 0); }
    Store adopted(dir.path());  // no config given: the stored one wins
    EXPECT_EQ(adopted.read([](const Workbench &w) { return w.game().config(); }), quick_game());
    auto other = quick_game();
    other.quorum += 1;
    EXPECT_EQ(kind_of([&] { Store s(dir.path(), other); }), ErrorKind::conflict);
}
