// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit when
// any criterion fails. Tolerances and sizes are pinned here.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "biaslab/biaslab.hpp"
#include "oracles/agreement_oracle.hpp"
#include "oracles/auc_oracle.hpp"
#include "support/game_harness.hpp"
#include "support/service_corpus.hpp"
#include "support/temp_dir.hpp"

using namespace biaslab;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream ss;
    ss.precision(precision);
    ss << v;
    return ss.str();
}

// ---- 1: gradients ------------------------------------------------------

Verdict gradient_correctness() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const ModelShape shape{4 + rng.uniform_index(8), 1 + rng.uniform_index(8), 1 + rng.uniform_index(8)};
        auto m = ClassifierModel::initialized(shape, "acceptance", seed, 1.0);
        for (auto &b : m.hidden_bias()) b = rng.uniform(-1.0, 1.0);
        m.output_bias() = rng.uniform(-1.0, 1.0);
        EncodedSequence seq;
        seq.max_length = 8;
        seq.length = 1 + rng.uniform_index(8);
        for (std::size_t i = 0; i < seq.length; ++i) {
            seq.ids.push_back(static_cast<TokenId>(rng.uniform_index(shape.vocab_size)));
        }
        worst = std::max(worst, gradient_check(m, LabeledExample{seq, from_binary(static_cast<int>(seed % 2))}, 1e-5));
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 10.0, "max relative error " + fmt(worst) + " over 10 seeds, " + fmt(t, 3) + " s"};
}

// ---- 2: loss calibration ----------------------------------------------

Verdict loss_calibration() {
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(500);
        std::vector<double> scores(n, 0.5);
        std::vector<int> labels(n);
        for (auto &y : labels) y = static_cast<int>(rng.uniform_index(2));
        worst = std::max(worst, std::abs(loss(scores, labels) - std::log(2.0)));
    }
    const std::vector<double> perfect{1.0, 0.0, 1.0, 0.0};
    const std::vector<int> labels{1, 0, 1, 0};
    const double perfect_loss = loss(perfect, labels);
    return {worst <= 1e-9 && perfect_loss < 1e-10,
            "|uniform - ln 2| <= " + fmt(worst) + ", perfect loss " + fmt(perfect_loss)};
}

// ---- 3: separable convergence -----------------------------------------

Verdict separable_convergence() {
    const auto t0 = Clock::now();
    Rng rng(3);
    synthetic::PlantSpec spec;
    spec.filler_words = 100;
    spec.trigger_words = 10;
    const auto data = synthetic::generate(spec, 200, rng);
    ModelBundle b;
    std::vector<std::string> texts;
    for (const auto &e : data) texts.push_back(e.text);
    b.vocabulary = Vocabulary::build(b.tokenizer, texts, 1);
    b.model = ClassifierModel::initialized({b.vocabulary.size(), 16, 16}, b.vocabulary.reference(), 3);
    auto config = TrainingConfig::distant_defaults();
    config.epochs = 30;
    config.batch_size = 16;
    const auto encoded = b.encode_examples(data);
    const auto report = train_stage(b.model, encoded, config);
    const double final_loss = dataset_loss(b.model, encoded);
    const auto metrics = compute_metrics(predict(b.model, encoded), binary_labels(encoded), 0.5);
    const double f1 = metrics.f1.value_or(0.0);
    const double t = seconds_since(t0);
    return {final_loss < 0.1 && f1 >= 0.99 && report.epoch_losses.size() <= 30 && t < 30.0,
            "training loss " + fmt(final_loss) + ", training F1 " + fmt(f1) + " after " +
                std::to_string(report.epoch_losses.size()) + " epochs, " + fmt(t, 3) + " s"};
}

// ---- 4: distant-supervision direction ---------------------------------

// Gold sees only a few occurrences of each trigger; the noisy distant corpus
// covers all of them. The baseline trains from scratch on gold alone with the
// undecimated learning rate, which is the stronger of the two obvious choices.
struct TransferRun {
    double with_pretraining = 0.0;
    double without_pretraining = 0.0;
};

TransferRun transfer_run(std::uint64_t seed) {
    Rng rng(seed);
    synthetic::PlantSpec spec;
    spec.filler_words = 300;
    spec.trigger_words = 60;
    spec.max_triggers = 1;
    std::set<std::string> used;
    auto distant_spec = spec;
    distant_spec.label_noise = 0.10;
    distant_spec.id_prefix = "d";
    const auto distant = synthetic::generate(distant_spec, 2000, rng, &used);
    auto gold_spec = spec;
    gold_spec.id_prefix = "g";
    const auto gold = synthetic::generate(gold_spec, 100, rng, &used);
    auto test_spec = spec;
    test_spec.id_prefix = "t";
    const auto test = synthetic::generate(test_spec, 1000, rng, &used);

    TransferConfig config;
    config.min_frequency = 1;
    config.init_seed = seed;
    config.distant.epochs = 5;
    config.distant.seed = seed;
    config.gold.epochs = 30;
    config.gold.seed = seed;

    const auto f1_on_test = [&](const ModelBundle &b) {
        const auto encoded = b.encode_examples(test);
        return compute_metrics(predict(b.model, encoded), binary_labels(encoded), 0.5).f1.value_or(0.0);
    };
    TransferRun run;
    run.with_pretraining = f1_on_test(pretrain_then_finetune(distant, gold, config).bundle);
    auto scratch = config;
    scratch.gold.learning_rate = config.distant.learning_rate;
    scratch.distant.epochs = 0;
    run.without_pretraining = f1_on_test(pretrain_then_finetune({}, gold, scratch).bundle);
    return run;
}

Verdict distant_supervision_direction() {
    const auto t0 = Clock::now();
    double with = 0.0, without = 0.0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto run = transfer_run(seed);
        with += run.with_pretraining / 5.0;
        without += run.without_pretraining / 5.0;
        per_seed += " " + fmt(run.with_pretraining, 3) + "/" + fmt(run.without_pretraining, 3);
    }
    const double t = seconds_since(t0);
    return {with >= without && t < 180.0, "mean F1 " + fmt(with) + " with vs " + fmt(without) + " without, margin " +
                                              fmt(with - without) + " (per seed" + per_seed + "), " + fmt(t, 3) +
                                              " s"};
}

// ---- 5: agreement oracles ---------------------------------------------

ReliabilityMatrix to_matrix(const oracle::Grid &g) {
    std::vector<std::vector<std::optional<Label>>> rows;
    for (const auto &row : g) {
        std::vector<std::optional<Label>> r;
        for (int v : row) r.push_back(v < 0 ? std::nullopt : std::optional<Label>(from_binary(v)));
        rows.push_back(r);
    }
    return ReliabilityMatrix::from_rows(rows);
}

// Returns "" when every statistic agrees with its oracle (value or definedness).
std::string agreement_mismatch(const oracle::Grid &g) {
    const auto m = to_matrix(g);
    const auto value = [&](Statistic s) -> std::optional<double> {
        try {
            return compute_agreement(s, m).value;
        } catch (const Error &) {
            return std::nullopt;
        }
    };
    const auto same = [](const std::optional<double> &got, const std::optional<oracle::Q> &want) {
        if (got.has_value() != want.has_value()) return false;
        return !got || std::abs(*got - oracle::to_double(*want)) <= 1e-12;
    };
    if (!same(value(Statistic::krippendorff_alpha_nominal), oracle::alpha(g))) return "alpha";
    if (!same(value(Statistic::percent_agreement), oracle::percent(g))) return "percent";
    const auto k = oracle::kappa(g);
    const auto got = value(Statistic::fleiss_kappa);
    if (k.status == oracle::KappaStatus::ok) {
        if (!got || std::abs(*got - oracle::to_double(k.value)) > 1e-12) return "kappa";
    } else if (got) {
        return "kappa definedness";
    }
    return "";
}

Verdict agreement_oracles() {
    std::size_t checked = 0;
    std::string problem;
    // exhaustive over every shape with at most 8 cells, values {missing, 0, 1}
    for (std::size_t items = 1; items <= 8 && problem.empty(); ++items) {
        for (std::size_t raters = 1; raters <= 4 && problem.empty(); ++raters) {
            const std::size_t cells = items * raters;
            if (cells > 8) continue;
            std::size_t combos = 1;
            for (std::size_t i = 0; i < cells; ++i) combos *= 3;
            for (std::size_t code = 0; code < combos; ++code) {
                oracle::Grid g(items, std::vector<int>(raters));
                std::size_t rest = code;
                for (std::size_t c = 0; c < cells; ++c) {
                    g[c / raters][c % raters] = static_cast<int>(rest % 3) - 1;
                    rest /= 3;
                }
                if (const auto note = agreement_mismatch(g); !note.empty()) {
                    problem = note + " at " + std::to_string(items) + "x" + std::to_string(raters);
                    break;
                }
                ++checked;
            }
        }
    }
    Rng rng(5);
    for (int trial = 0; trial < 1000 && problem.empty(); ++trial) {
        const auto items = 1 + rng.uniform_index(12);
        const auto raters = 1 + rng.uniform_index(4);
        const double missing = rng.uniform01() * 0.5;
        oracle::Grid g(items, std::vector<int>(raters));
        for (auto &row : g)
            for (auto &v : row) v = rng.bernoulli(missing) ? -1 : static_cast<int>(rng.uniform_index(2));
        if (const auto note = agreement_mismatch(g); !note.empty()) problem = note + " on random trial";
        ++checked;
    }
    const auto perfect = to_matrix({{1, 1, 1}, {0, 0, 0}, {1, 1, 1}});
    const bool ones = krippendorff_alpha(perfect).value == 1.0 && fleiss_kappa(perfect).value == 1.0 &&
                      percent_agreement(perfect).value == 1.0;
    const double fixture = fleiss_kappa(to_matrix({{1, 1}, {1, 0}})).value;
    const bool fixture_ok = std::abs(fixture - (-1.0 / 3.0)) <= 1e-12;
    return {problem.empty() && ones && fixture_ok,
            std::to_string(checked) + " matrices vs oracle" + (problem.empty() ? "" : " (" + problem + ")") +
                ", perfect = 1.0: " + (ones ? "yes" : "no") + ", 2x2 kappa " + fmt(fixture, 15)};
}

// ---- 6: metric oracles ------------------------------------------------

Verdict metric_oracles() {
    Rng rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        const bool coarse = rng.bernoulli(0.5);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = coarse ? static_cast<double>(rng.uniform_index(5)) / 4.0 : rng.uniform01();
            labels[i] = static_cast<int>(rng.uniform_index(2));
        }
        labels[0] = 0;
        labels[1] = 1;
        worst = std::max(worst, std::abs(auc_mann_whitney(scores, labels) - oracle::auc_all_pairs(scores, labels)));
    }
    Rng fixed(10000);
    std::vector<double> s(10000);
    std::vector<int> y(10000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = fixed.uniform01();
        y[i] = static_cast<int>(fixed.uniform_index(2));
    }
    const double random_auc = auc_mann_whitney(s, y);
    return {worst <= 1e-12 && random_auc >= 0.47 && random_auc <= 0.53,
            "max |AUC - oracle| " + fmt(worst) + " over 1000 lists, random AUC " + fmt(random_auc)};
}

// ---- 7: overlap guard -------------------------------------------------

Verdict overlap_guard() {
    Rng rng(7);
    std::size_t wrong_counts = 0, missed_refusals = 0, false_refusals = 0, trials = 0;
    for (int trial = 0; trial < 200; ++trial, ++trials) {
        const std::size_t n_gold = 2 + rng.uniform_index(15);
        const std::size_t n_distant = 2 + rng.uniform_index(15);
        const std::size_t k = rng.uniform_index(std::min(n_gold, n_distant) + 1);
        std::vector<TextExample> gold, distant;
        for (std::size_t i = 0; i < n_gold; ++i) {
            gold.push_back({"g" + std::to_string(i), "Gold sentence number " + std::to_string(i) + ".",
                            from_binary(static_cast<int>(i % 2)), {}});
        }
        for (std::size_t i = 0; i < n_distant; ++i) {
            distant.push_back({"d" + std::to_string(i), "distant sentence " + std::to_string(i),
                               from_binary(static_cast<int>(i % 2)), {}});
        }
        for (std::size_t i = 0; i < k; ++i) distant[i].text = "  GOLD sentence, number  " + std::to_string(i) + "!";
        const auto found = check_overlap(text_items(gold), text_items(distant));
        if (found.size() != k) ++wrong_counts;
        TransferConfig config;
        config.min_frequency = 1;
        config.distant.epochs = 1;
        config.gold.epochs = 1;
        try {
            pretrain_then_finetune(distant, gold, config);
            if (k > 0) ++missed_refusals;
        } catch (const Error &e) {
            if (k == 0 || e.kind() != ErrorKind::conflict) ++false_refusals;
        }
    }
    return {wrong_counts == 0 && missed_refusals == 0 && false_refusals == 0,
            std::to_string(trials) + " fixtures: " + std::to_string(wrong_counts) + " wrong counts, " +
                std::to_string(missed_refusals) + " missed refusals, " + std::to_string(false_refusals) +
                " spurious refusals"};
}

// ---- 8: game state machine --------------------------------------------

Verdict game_state_machine() {
    const auto t0 = Clock::now();
    constexpr std::uint64_t seeds = 10000;
    std::atomic<std::uint64_t> next{1};
    std::mutex mutex;
    harness::Outcome total;
    std::string first_problem;
    const auto worker = [&] {
        for (std::uint64_t seed = next++; seed <= seeds; seed = next++) {
            const auto out = harness::run_random_sequence(seed);
            std::lock_guard lock(mutex);
            total.accepted += out.accepted;
            total.rejected += out.rejected;
            total.round_regressions += out.round_regressions;
            total.repeated_serves += out.repeated_serves;
            total.score_decreases += out.score_decreases;
            total.store_mismatches += out.store_mismatches;
            total.replay_mismatches += out.replay_mismatches;
            total.dirty_rejections += out.dirty_rejections;
            if (!out.ok() && first_problem.empty()) first_problem = "seed " + std::to_string(seed) + ": " + out.first_problem;
        }
    };
    std::vector<std::thread> threads;
    const unsigned n = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    for (unsigned i = 0; i < n; ++i) threads.emplace_back(worker);
    for (auto &t : threads) t.join();
    const bool clean = first_problem.empty() && total.round_regressions == 0 && total.repeated_serves == 0 &&
                       total.score_decreases == 0 && total.store_mismatches == 0 && total.replay_mismatches == 0 &&
                       total.dirty_rejections == 0;
    return {clean && total.accepted > 0,
            std::to_string(seeds) + " sequences, " + std::to_string(total.accepted) + " accepted / " +
                std::to_string(total.rejected) + " rejected actions; regressions " +
                std::to_string(total.round_regressions) + ", repeated serves " +
                std::to_string(total.repeated_serves) + ", score decreases " + std::to_string(total.score_decreases) +
                ", store mismatches " + std::to_string(total.store_mismatches) +
                (first_problem.empty() ? "" : " (" + first_problem + ")") + ", " + fmt(seconds_since(t0), 3) + " s"};
}

// ---- 9: determinism ---------------------------------------------------

struct PipelineOutput {
    SplitResult split;
    std::string vocabulary_file;
    std::string checksum;
};

PipelineOutput run_pipeline(std::uint64_t seed) {
    Rng rng(seed);
    synthetic::PlantSpec spec;
    std::set<std::string> used;
    auto distant_spec = spec;
    distant_spec.label_noise = 0.1;
    distant_spec.id_prefix = "d";
    const auto distant = synthetic::generate(distant_spec, 300, rng, &used);
    auto gold_spec = spec;
    gold_spec.id_prefix = "g";
    const auto gold = synthetic::generate(gold_spec, 120, rng, &used);

    CorpusStore corpus;
    corpus.add_outlet(Outlet{"o", "Outlet", Leaning::center, Standard::high});
    std::vector<Sentence> sentences;
    for (const auto &g : gold) {
        Sentence s;
        s.id = g.id;
        s.text = g.text;
        s.outlet_id = "o";
        s.kind = CorpusKind::gold;
        s.gold_label = g.label;
        sentences.push_back(s);
    }
    corpus.add_sentences(sentences);
    SplitSpec split_spec;
    split_spec.seed = seed;
    split_spec.stratify = StratifyBy::label;
    PipelineOutput out;
    out.split = corpus.split(split_spec, CorpusKind::gold);

    std::vector<TextExample> train;
    for (const auto &id : out.split.train) {
        const auto *s = corpus.find(id);
        train.push_back(TextExample{id, s->text, *s->gold_label, {}});
    }
    TransferConfig config;
    config.init_seed = seed;
    config.distant.seed = seed;
    config.gold.seed = seed;
    config.distant.epochs = 3;
    config.gold.epochs = 3;
    const auto result = pretrain_then_finetune(distant, train, config);
    std::ostringstream vocab;
    result.bundle.vocabulary.save(vocab);
    out.vocabulary_file = vocab.str();
    out.checksum = result.bundle.id();
    return out;
}

std::string run_command(const std::string &command, int &status) {
    std::string out;
    FILE *pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) {
        status = -1;
        return out;
    }
    char buf[4096];
    while (const auto n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    status = ::pclose(pipe);
    return out;
}

std::string file_bytes(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The CLI workflow over the sample corpus, run into two fresh stores.
std::optional<std::string> cli_checkpoint(const std::filesystem::path &store, const std::string &out) {
    const std::string cli = BIASLAB_CLI, data = BIASLAB_SAMPLES;
    const std::string base = cli + " --store " + store.string() + " ";
    int status = 0;
    for (const auto &cmd : {base + "ingest --outlets " + data + "/outlets.csv --kind distant " + data + "/distant.jsonl",
                            base + "ingest --kind gold " + data + "/gold.jsonl",
                            base + "distant-label", base + "annotate import " + data + "/annotations.csv",
                            base + "gold --min-annotators 3",
                            base + "split --seed 9 --train 0.6 --val 0.2 --test 0.2 --stratify label",
                            base + "train --seed 9 --config " + data + "/train.json --out " + out}) {
        run_command(cmd + " 2>&1", status);
        if (status != 0) return std::nullopt;
    }
    return file_bytes(out) + file_bytes(out + ".vocab");
}

Verdict determinism() {
    const auto a = run_pipeline(99);
    const auto b = run_pipeline(99);
    const auto other = run_pipeline(100);
    const bool in_process = a.split == b.split && a.vocabulary_file == b.vocabulary_file && a.checksum == b.checksum;
    const bool seed_matters = a.checksum != other.checksum;

    testutil::TempDir dir;
    const auto first = cli_checkpoint(dir / "s1", (dir / "m1.model").string());
    const auto second = cli_checkpoint(dir / "s2", (dir / "m2.model").string());
    const bool cli_same = first && second && *first == *second;
    return {in_process && seed_matters && cli_same,
            std::string("library: split, vocabulary and checksum ") + (in_process ? "identical" : "DIFFER") +
                " (checksum " + a.checksum + "), other seed " + (seed_matters ? "differs" : "SAME") +
                "; CLI checkpoints " + (cli_same ? "byte-identical" : "DIFFER or failed")};
}

// ---- 10: service pass-through and crash recovery ----------------------

ModelBundle small_bundle() {
    ModelBundle b;
    b.vocabulary = Vocabulary::build(b.tokenizer, service_corpus::classify_texts(), 1);
    b.model = ClassifierModel::initialized({b.vocabulary.size(), 4, 3}, b.vocabulary.reference(), 17, 1.0);
    return b;
}

std::pair<std::size_t, std::string> pass_through() {
    testutil::TempDir dir;
    service_corpus::Replica replica;
    replica.bundle = small_bundle();
    Store store(dir.path(), service_corpus::game_config());
    store.set_clock([] { return service_corpus::fixed_time; });
    const auto id = replica.bundle.id();
    replica.bundle.save((store.models_dir() / (id + ".model")).string());
    store.commit(json{{"op", "register_model"}, {"model_id", id}});
    Service service(store, "acceptance");
    const int port = service.bind("127.0.0.1", 0);
    std::thread thread([&] { service.serve(); });
    service.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    const auto results = service_corpus::run(client, replica, "acceptance");
    service.stop();
    thread.join();
    std::string first_failure;
    for (const auto &r : results) {
        if (!r.ok() && first_failure.empty()) first_failure = r.name + ": " + r.detail;
    }
    return {results.size(), first_failure};
}

// A `biaslab serve` child process; its stdout announces the port.
struct Server {
    pid_t pid = -1;
    int port = 0;

    Server(const std::filesystem::path &store, const std::filesystem::path &game_config) {
        int fds[2];
        if (::pipe(fds) != 0) return;
        pid = ::fork();
        if (pid == 0) {
            ::dup2(fds[1], STDOUT_FILENO);
            ::close(fds[0]);
            ::close(fds[1]);
            const std::string store_arg = store.string(), config_arg = game_config.string();
            ::execl(BIASLAB_CLI, BIASLAB_CLI, "serve", "--store", store_arg.c_str(), "--token", "acceptance",
                    "--bind", "127.0.0.1:0", "--checkpoint-every", "7", "--game-config", config_arg.c_str(),
                    static_cast<char *>(nullptr));
            std::_Exit(127);
        }
        ::close(fds[1]);
        std::string line;
        char c = 0;
        while (::read(fds[0], &c, 1) == 1 && c != '\n') line += c;
        ::close(fds[0]);
        if (const auto colon = line.rfind(':'); colon != std::string::npos) port = std::atoi(line.c_str() + colon + 1);
    }

    void kill_hard() {
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            pid = -1;
        }
    }
    ~Server() { kill_hard(); }
};

std::string crash_recovery() {
    testutil::TempDir dir;
    GameConfig config;
    config.calibration_items = 1;
    config.production_batch = 2;
    config.quorum = 2;
    config.tutorial_steps = {"marking words"};
    {
        std::ofstream(dir / "game.json") << json(config).dump();
    }
    const httplib::Headers auth{{"Authorization", "Bearer acceptance"}};
    const auto post = [&](httplib::Client &c, const std::string &path, const json &body) {
        const auto res = c.Post(path, auth, body.dump(), "application/json");
        return res ? std::make_pair(res->status, json::parse(res->body, nullptr, false)) : std::make_pair(0, json{});
    };

    json before_session, before_board, before_profiles, before_sentences;
    std::size_t acked = 0;
    {
        Server server(dir / "store", dir / "game.json");
        if (server.port == 0) return "first start failed";
        httplib::Client c("127.0.0.1", server.port);
        acked += post(c, "/outlets", {{"outlets", {{{"id", "o"}, {"name", "O"}, {"leaning", "center"},
                                                    {"standard", "high"}}}}}).first == 201;
        json gold = json::array();
        for (int i = 0; i < 3; ++i) {
            gold.push_back({{"id", "g" + std::to_string(i)}, {"text", "Gold sentence " + std::to_string(i) + "."},
                            {"outlet", "o"}, {"label", i % 2 ? "neutral" : "biased"}});
        }
        json pool = json::array();
        for (int i = 0; i < 4; ++i) {
            pool.push_back({{"id", "u" + std::to_string(i)}, {"text", "Pool sentence " + std::to_string(i) + "."},
                            {"outlet", "o"}});
        }
        acked += post(c, "/sentences", {{"kind", "gold"}, {"sentences", gold}}).first == 201;
        acked += post(c, "/sentences", {{"kind", "unlabeled"}, {"sentences", pool}}).first == 201;

        // concurrent writers: every acknowledged profile must survive
        std::atomic<std::size_t> profile_acks{0};
        std::vector<std::thread> writers;
        for (int t = 0; t < 4; ++t) {
            writers.emplace_back([&, t] {
                httplib::Client wc("127.0.0.1", server.port);
                for (int i = 0; i < 25; ++i) {
                    const json p{{"id", "p" + std::to_string(t) + "-" + std::to_string(i)}, {"role", "player"}};
                    if (post(wc, "/profiles", {{"profiles", {p}}}).first == 201) ++profile_acks;
                }
            });
        }
        for (auto &w : writers) w.join();
        acked += profile_acks;

        const auto [status, session] = post(c, "/game/sessions", {{"player_id", "p0-0"}});
        if (status != 201) return "session start failed: " + session.dump();
        ++acked;
        const std::string sid = session.at("id");
        acked += post(c, "/game/sessions/" + sid + "/tutorial", {{"step", 0}}).first == 200;
        for (int i = 0; i < 3; ++i) {
            const auto next = c.Get("/game/sessions/" + sid + "/next", auth);
            if (!next || next->status != 200) return "next failed";
            ++acked;
            const auto item = json::parse(next->body);
            if (!item.contains("sentence_id") || item.at("sentence_id").is_null()) break;
            acked += post(c, "/game/sessions/" + sid + "/answer",
                          {{"sentence_id", item.at("sentence_id")}, {"label", "biased"}, {"biased_words", {0}}})
                         .first == 200;
        }
        before_session = json::parse(c.Get("/game/sessions/" + sid)->body);
        before_board = json::parse(c.Get("/leaderboard?top=50")->body);
        before_profiles = json::parse(c.Get("/profiles")->body);
        before_sentences = json::parse(c.Get("/sentences")->body);
        server.kill_hard();  // no graceful checkpoint
    }

    Server again(dir / "store", dir / "game.json");
    if (again.port == 0) return "restart failed";
    httplib::Client c("127.0.0.1", again.port);
    const auto health = json::parse(c.Get("/health")->body);
    const std::string sid = before_session.at("id");
    if (json::parse(c.Get("/game/sessions/" + sid)->body) != before_session) return "session differs after restart";
    if (json::parse(c.Get("/leaderboard?top=50")->body) != before_board) return "leaderboard differs after restart";
    if (json::parse(c.Get("/profiles")->body) != before_profiles) return "profiles differ after restart";
    if (json::parse(c.Get("/sentences")->body) != before_sentences) return "sentences differ after restart";
    if (health.at("journal_seq") != acked) {
        return "journal_seq " + health.at("journal_seq").dump() + " after restart, " + std::to_string(acked) +
               " writes acknowledged";
    }
    if (before_profiles.size() != 100) return "only " + std::to_string(before_profiles.size()) + " profiles acked";
    return "";
}

Verdict service_pass_through() {
    const auto [steps, failure] = pass_through();
    const auto crash = crash_recovery();
    return {failure.empty() && crash.empty(),
            std::to_string(steps) + " recorded requests" + (failure.empty() ? " all equal" : " (" + failure + ")") +
                "; kill -9 and restart: " + (crash.empty() ? "no acknowledged write lost" : crash)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"loss calibration", loss_calibration},
        {"separable convergence", separable_convergence},
        {"distant-supervision direction", distant_supervision_direction},
        {"agreement oracle equivalence", agreement_oracles},
        {"metric oracles", metric_oracles},
        {"overlap guard", overlap_guard},
        {"game state machine", game_state_machine},
        {"determinism", determinism},
        {"service pass-through", service_pass_through},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception &e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << v.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
