// biaslab: command-line front end over the store and the library.
//
// Exit codes: 0 success, 1 usage error, 2 data error (any biaslab::Error,
// unreadable input, or a failed guard such as a non-empty overlap report).

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "biaslab/biaslab.hpp"

using namespace biaslab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string store;
    std::string token;
    std::optional<std::uint64_t> seed;
};

std::string slurp(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string &path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::parse_error &e) {
        fail(ErrorKind::invalid, "'" + path + "' is not valid JSON: " + e.what());
    }
}

/// One JSON object per non-blank line.
std::vector<json> read_jsonl(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::vector<json> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error &e) {
            fail(ErrorKind::invalid, path + " line " + std::to_string(n) + ": " + e.what());
        }
        if (!out.back().is_object()) {
            fail(ErrorKind::invalid, path + " line " + std::to_string(n) + ": expected an object");
        }
    }
    return out;
}

/// Records of the form {id, text, label, tags?}.
std::vector<TextExample> read_examples(const std::string &path) {
    std::vector<TextExample> out;
    std::size_t n = 0;
    for (const auto &j : read_jsonl(path)) {
        ++n;
        try {
            TextExample ex;
            ex.id = j.at("id").get<std::string>();
            ex.text = j.at("text").get<std::string>();
            ex.label = parse_label(j.at("label").get<std::string>());
            ex.tags = j.value("tags", std::vector<std::string>{});
            out.push_back(std::move(ex));
        } catch (const json::exception &e) {
            fail(ErrorKind::invalid, path + " record " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void print(const json &j) { std::cout << j.dump(2) << std::endl; }

const std::string &need_store(const Options &o) {
    if (o.store.empty()) throw UsageError("no store: pass --store or set BIASLAB_STORE");
    return o.store;
}

/// Read-only commands refuse to conjure an empty store.
Store open_existing(const Options &o) {
    const auto &dir = need_store(o);
    if (!fs::exists(fs::path(dir) / "config.json")) {
        fail(ErrorKind::not_found, "no store at '" + dir + "'");
    }
    return Store(dir);
}

Store open_store(const Options &o, std::optional<GameConfig> config = std::nullopt) {
    return Store(need_store(o), std::move(config));
}

/// A checkpoint path, or the id of a model registered in the store.
ModelBundle resolve_model(const Options &o, const std::string &spec) {
    if (fs::exists(spec)) return ModelBundle::load(spec);
    if (o.store.empty()) fail(ErrorKind::not_found, "no checkpoint at '" + spec + "' and no store to look in");
    auto store = open_existing(o);
    return store.read([&](const Workbench &w) { return w.model(spec); });
}

// ---- corpus ------------------------------------------------------------

void cmd_ingest(const Options &o, const std::string &outlets, const std::string &kind, const std::string &path) {
    if (outlets.empty() && path.empty()) throw UsageError("ingest needs --outlets <csv> and/or a corpus file");
    if (!path.empty() && kind.empty()) throw UsageError("ingest of a corpus file needs --kind");
    auto store = open_store(o);
    json out = json::object();
    if (!outlets.empty()) {
        CorpusStore staged;
        staged.load_outlets_csv(outlets);
        json list = json::array();
        for (const auto &[id, outlet] : staged.outlets()) list.push_back(outlet);
        store.commit(json{{"op", "add_outlets"}, {"outlets", list}});
        out["outlets"] = list.size();
    }
    if (!path.empty()) {
        const auto parsed_kind = parse_corpus_kind(kind);
        json list = json::array();
        std::size_t n = 0;
        for (const auto &j : read_jsonl(path)) {
            ++n;
            try {
                list.push_back(j.get<Sentence>());
            } catch (const json::exception &e) {
                fail(ErrorKind::invalid, path + " record " + std::to_string(n) + ": " + e.what());
            }
        }
        store.commit(json{{"op", "add_sentences"}, {"kind", to_string(parsed_kind)}, {"sentences", list}});
        out["sentences"] = list.size();
        out["kind"] = to_string(parsed_kind);
    }
    print(out);
}

void cmd_distant_label(const Options &o, const std::string &rule) {
    auto store = open_store(o);
    json command{{"op", "assign_distant_labels"}};
    if (!rule.empty()) command["rule"] = read_json_file(rule);
    print(store.commit(command));
}

/// Non-empty report exits 2 so scripts can gate on the guard.
int cmd_check_overlap(const Options &o) {
    auto store = open_existing(o);
    const auto collisions = store.read([](const Workbench &w) {
        const auto distant = w.corpus().texts(CorpusKind::distant);
        const auto gold = w.corpus().texts(CorpusKind::gold);
        return check_overlap(distant, gold);
    });
    print(json{{"collisions", collisions}, {"count", collisions.size()}});
    return collisions.empty() ? 0 : 2;
}

void cmd_split(const Options &o, const std::string &kind, double train, double val, double test,
               const std::string &stratify) {
    auto store = open_store(o);
    print(store.commit(json{{"op", "split"},
                            {"kind", kind},
                            {"seed", o.seed.value_or(0)},
                            {"train", train},
                            {"validation", val},
                            {"test", test},
                            {"stratify", stratify}}));
}

// ---- annotation --------------------------------------------------------

void cmd_annotate_import(const Options &o, const std::string &csv) {
    AnnotationStore staged;  // detached: the store checks sentences on commit
    staged.import_csv(csv);
    json profiles = json::array();
    for (const auto &[id, p] : staged.profiles()) profiles.push_back(p);
    json records = json::array();
    for (const auto *r : staged.records()) records.push_back(*r);
    auto store = open_store(o);
    const auto result =
        store.commit(json{{"op", "submit_annotations"}, {"profiles", profiles}, {"records", records}});
    print(json{{"profiles", profiles.size()}, {"records", result.at("ids").size()}});
}

void cmd_gold(const Options &o, std::size_t min_annotators) {
    auto store = open_store(o);
    print(store.commit(json{{"op", "apply_gold"}, {"min_annotators", min_annotators}}));
}

void cmd_export_mbic(const Options &o, const std::string &path) {
    auto store = open_existing(o);
    const auto n = store.read([&](const Workbench &w) { return w.annotations().export_mbic(path); });
    print(json{{"path", path}, {"records", n}});
}

void cmd_agreement(const Options &o, const std::string &stat, const std::string &input) {
    const auto statistic = parse_statistic(stat);
    if (!input.empty()) {
        AnnotationStore offline;
        offline.import_csv(input);
        print(json(compute_agreement(statistic, ReliabilityMatrix::from_annotations(offline))));
        return;
    }
    auto store = open_existing(o);
    print(store.read([&](const Workbench &w) { return agreement_report(w, stat); }));
}

// ---- model -------------------------------------------------------------

TransferConfig read_transfer_config(const std::string &path, std::optional<std::uint64_t> seed) {
    TransferConfig c;
    if (!path.empty()) {
        const auto j = read_json_file(path);
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
        c.min_frequency = j.value("min_frequency", c.min_frequency);
        c.max_length = j.value("max_length", c.max_length);
        c.init_seed = j.value("init_seed", c.init_seed);
        if (const auto it = j.find("tokenizer"); it != j.end()) {
            c.tokenizer.lowercase = it->value("lowercase", c.tokenizer.lowercase);
            c.tokenizer.split_punctuation = it->value("split_punctuation", c.tokenizer.split_punctuation);
        }
        if (const auto it = j.find("distant"); it != j.end()) read_training_config(*it, c.distant);
        if (const auto it = j.find("gold"); it != j.end()) read_training_config(*it, c.gold);
    }
    if (seed) {
        c.init_seed = *seed;
        c.distant.seed = *seed;
        c.gold.seed = *seed;
    }
    return c;
}

struct TrainingData {
    std::vector<TextExample> distant;
    std::vector<TextExample> gold;
    std::vector<TextExample> validation;
};

/// Distant labels and gold labels from the store. With a gold split only its
/// train part is trained on and its validation part validates; test stays out.
TrainingData data_from_store(const Workbench &w) {
    TrainingData d;
    for (const auto &[id, label] : w.corpus().distant_labels()) {
        const auto *s = w.corpus().find(id);
        d.distant.push_back(TextExample{id, s->text, label.label, s->tags});
    }
    const auto example = [&](const std::string &id) -> std::optional<TextExample> {
        const auto *s = w.corpus().find(id);
        if (s == nullptr || !s->gold_label) return std::nullopt;
        return TextExample{id, s->text, *s->gold_label, s->tags};
    };
    const auto split = w.splits().find(std::string(to_string(CorpusKind::gold)));
    if (split == w.splits().end()) {
        for (const auto *s : w.corpus().sentences(CorpusKind::gold)) {
            if (auto ex = example(s->id)) d.gold.push_back(std::move(*ex));
        }
        return d;
    }
    for (const auto &id : split->second.train) {
        if (auto ex = example(id)) d.gold.push_back(std::move(*ex));
    }
    for (const auto &id : split->second.validation) {
        if (auto ex = example(id)) d.validation.push_back(std::move(*ex));
    }
    return d;
}

TransferResult train_distant_only(std::span<const TextExample> distant, const TransferConfig &config) {
    if (distant.empty()) fail(ErrorKind::invalid, "distant training set is empty");
    std::vector<std::string> texts;
    for (const auto &e : distant) texts.push_back(e.text);
    TransferResult r;
    auto &b = r.bundle;
    b.tokenizer = Tokenizer(config.tokenizer);
    b.max_length = config.max_length;
    b.vocabulary = Vocabulary::build(b.tokenizer, texts, config.min_frequency);
    b.model = ClassifierModel::initialized({b.vocabulary.size(), config.embedding_dim, config.hidden_dim},
                                           b.vocabulary.reference(), config.init_seed);
    auto stage = config.distant;
    stage.stage = Stage::distant_pretrain;
    r.distant_report = train_stage(b.model, b.encode_examples(distant), stage);
    return r;
}

struct TrainArgs {
    std::string stage = "both";
    std::string config;
    std::string distant_data;
    std::string gold_data;
    std::string validation_data;
    std::string out;
};

void cmd_train(const Options &o, const TrainArgs &a) {
    if (a.stage != "distant" && a.stage != "gold" && a.stage != "both") {
        throw UsageError("--stage must be distant, gold or both");
    }
    if (o.store.empty() && a.out.empty()) throw UsageError("train needs --store or --out");
    const auto config = read_transfer_config(a.config, o.seed);

    TrainingData data;
    std::optional<Store> store;
    if (!o.store.empty()) {
        store.emplace(need_store(o));
        data = store->read(data_from_store);
    }
    if (!a.distant_data.empty()) data.distant = read_examples(a.distant_data);
    if (!a.gold_data.empty()) data.gold = read_examples(a.gold_data);
    if (!a.validation_data.empty()) data.validation = read_examples(a.validation_data);

    TransferResult result;
    if (a.stage == "distant") {
        result = train_distant_only(data.distant, config);
    } else if (a.stage == "gold") {
        auto gold_only = config;
        gold_only.distant.epochs = 0;
        result = pretrain_then_finetune({}, data.gold, gold_only, data.validation);
    } else {
        result = pretrain_then_finetune(data.distant, data.gold, config, data.validation);
    }

    const auto id = result.bundle.id();
    json out{{"model_id", id}, {"stage", a.stage}, {"distant_examples", data.distant.size()},
             {"gold_examples", data.gold.size()}, {"validation_examples", data.validation.size()}};
    if (a.stage != "gold") out["distant_report"] = result.distant_report;
    if (a.stage != "distant") out["gold_report"] = result.gold_report;
    if (!a.out.empty()) {
        result.bundle.save(a.out);
        out["path"] = a.out;
    }
    if (store) {
        const auto path = store->models_dir() / (id + ".model");
        result.bundle.save(path.string());
        store->commit(json{{"op", "register_model"}, {"model_id", id}});
        out["registered"] = true;
    }
    print(out);
}

/// Finite differences against backprop on random small models; exits 2 when
/// any relative error exceeds the tolerance.
int cmd_gradcheck(const Options &o, std::size_t runs, double tolerance) {
    Rng rng(o.seed.value_or(1));
    double worst = 0.0;
    json per_run = json::array();
    for (std::size_t r = 0; r < runs; ++r) {
        const ModelShape shape{2 + rng.uniform_index(10), 1 + rng.uniform_index(8), 1 + rng.uniform_index(8)};
        const auto model = ClassifierModel::initialized(shape, "gradcheck", rng.next(), 1.0);
        EncodedSequence seq;
        seq.max_length = 8;
        seq.length = 1 + rng.uniform_index(8);
        for (std::size_t i = 0; i < seq.length; ++i) {
            seq.ids.push_back(static_cast<TokenId>(rng.uniform_index(shape.vocab_size)));
        }
        const LabeledExample ex{seq, rng.bernoulli(0.5) ? Label::biased : Label::neutral};
        const double err = gradient_check(model, ex, 1e-5);
        worst = std::max(worst, err);
        per_run.push_back(json{{"embedding_dim", shape.embedding_dim},
                               {"hidden_dim", shape.hidden_dim},
                               {"max_relative_error", err}});
    }
    const bool ok = worst < tolerance;
    print(json{{"runs", per_run}, {"max_relative_error", worst}, {"tolerance", tolerance}, {"ok", ok}});
    return ok ? 0 : 2;
}

void cmd_classify(const Options &o, const std::string &model_spec, const std::string &input) {
    const auto bundle = resolve_model(o, model_spec);
    const auto records = read_jsonl(input);
    std::vector<std::pair<std::string, double>> out;
    std::size_t n = 0;
    for (const auto &j : records) {
        ++n;
        std::string id, text;
        try {
            id = j.at("id").get<std::string>();
            text = j.at("text").get<std::string>();
        } catch (const json::exception &e) {
            fail(ErrorKind::invalid, input + " record " + std::to_string(n) + ": " + e.what());
        }
        if (text.empty()) fail(ErrorKind::invalid, input + " record " + std::to_string(n) + ": empty text");
        out.emplace_back(std::move(id), bundle.score(text));
    }
    for (const auto &[id, score] : out) {
        std::cout << json{{"id", id}, {"score", score}, {"label", to_string(from_binary(score >= 0.5 ? 1 : 0))}}.dump()
                  << '\n';
    }
    std::cout.flush();
}

/// Suite config: [{"name", "tag"}] or {"suites": [...]}.
void cmd_eval(const Options &o, const std::string &model_spec, const std::string &test_path,
              const std::string &suites_path, double threshold) {
    const auto bundle = resolve_model(o, model_spec);
    std::vector<EvalExample> test;
    for (auto &ex : read_examples(test_path)) {
        test.push_back(EvalExample{ex.id, LabeledExample{bundle.encode_text(ex.text), ex.label}, ex.tags});
    }
    std::vector<SliceSuite> suites;
    if (!suites_path.empty()) {
        auto j = read_json_file(suites_path);
        if (j.is_object()) j = j.at("suites");
        for (const auto &s : j) {
            suites.push_back(make_suite(s.at("name").get<std::string>(), s.at("tag").get<std::string>(), test));
        }
    }
    const auto dataset_id = hex64(Fnv1a{}.text(slurp(test_path)).value());
    print(json(evaluate_sliced(bundle.model, suites, test, dataset_id, threshold)));
}

// ---- service -----------------------------------------------------------

std::pair<std::string, int> parse_bind(const std::string &bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw UsageError("--bind must be host:port");
    try {
        std::size_t used = 0;
        const int port = std::stoi(bind.substr(colon + 1), &used);
        if (used != bind.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
        return {bind.substr(0, colon), port};
    } catch (const std::logic_error &) {
        throw UsageError("--bind port must be 0..65535");
    }
}

void cmd_serve(const Options &o, const std::string &bind, const std::string &game_config,
               std::size_t checkpoint_every) {
    if (o.token.empty()) throw UsageError("serve needs --token or BIASLAB_TOKEN");
    const auto [host, port] = parse_bind(bind);
    std::optional<GameConfig> config;
    if (!game_config.empty()) {
        try {
            config = read_json_file(game_config).get<GameConfig>();
        } catch (const json::exception &e) {
            fail(ErrorKind::invalid, "game config '" + game_config + "': " + e.what());
        }
    }

    // Signals go to a dedicated thread; every other thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Store store(need_store(o), config, checkpoint_every);
    Service service(store, o.token);
    const int bound = service.bind(host, port);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    std::cout << "listening on " << host << ":" << bound << std::endl;
    service.serve();
    waiter.join();
    store.checkpoint();
    std::cerr << "stopped; store checkpointed at seq " << store.journal_seq() << std::endl;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"biaslab: media-bias annotation and detection workbench"};
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--store", o.store, "store directory")->envname("BIASLAB_STORE");
    app.add_option("--token", o.token, "service bearer token")->envname("BIASLAB_TOKEN");
    app.add_option("--seed", o.seed, "seed for split, train and gradcheck");

    std::function<int()> action;
    const auto run = [&](std::function<void()> f) {
        action = [f = std::move(f)] {
            f();
            return 0;
        };
    };

    std::string outlets, kind, path;
    auto *ingest = app.add_subcommand("ingest", "add an outlet registry and/or a JSONL corpus");
    ingest->add_option("--outlets", outlets, "outlet CSV (id,name,leaning,standard)");
    ingest->add_option("--kind", kind, "gold|distant|unlabeled");
    ingest->add_option("path", path, "corpus JSONL");
    ingest->callback([&] { run([&] { cmd_ingest(o, outlets, kind, path); }); });

    std::string rule;
    auto *distant = app.add_subcommand("distant-label", "label distant sentences from outlet metadata");
    distant->add_option("--rule", rule, "outlet rule JSON (default rule when absent)");
    distant->callback([&] { run([&] { cmd_distant_label(o, rule); }); });

    auto *overlap = app.add_subcommand("check-overlap", "report distant/gold text collisions");
    overlap->callback([&] { action = [&] { return cmd_check_overlap(o); }; });

    std::string split_kind = "gold", stratify = "none";
    double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
    auto *split = app.add_subcommand("split", "deterministic train/validation/test split");
    split->add_option("--kind", split_kind, "corpus kind")->capture_default_str();
    split->add_option("--train", train_frac)->capture_default_str();
    split->add_option("--val", val_frac)->capture_default_str();
    split->add_option("--test", test_frac)->capture_default_str();
    split->add_option("--stratify", stratify, "none|label|topic")->capture_default_str();
    split->callback([&] { run([&] { cmd_split(o, split_kind, train_frac, val_frac, test_frac, stratify); }); });

    std::string annotations_csv;
    auto *annotate = app.add_subcommand("annotate", "annotation records");
    annotate->require_subcommand(1);
    auto *import = annotate->add_subcommand("import", "import an annotation CSV into the store");
    import->add_option("csv", annotations_csv)->required();
    import->callback([&] { run([&] { cmd_annotate_import(o, annotations_csv); }); });

    std::size_t min_annotators = 3;
    auto *gold = app.add_subcommand("gold", "aggregate gold labels by majority vote");
    gold->add_option("--min-annotators", min_annotators)->capture_default_str();
    gold->callback([&] { run([&] { cmd_gold(o, min_annotators); }); });

    std::string export_path;
    auto *mbic = app.add_subcommand("export-mbic", "export annotations as CSV");
    mbic->add_option("path", export_path)->required();
    mbic->callback([&] { run([&] { cmd_export_mbic(o, export_path); }); });

    std::string stat = "alpha", agreement_input;
    auto *agreement = app.add_subcommand("agreement", "inter-annotator agreement");
    agreement->add_option("--stat", stat, "alpha|kappa|percent")->capture_default_str();
    agreement->add_option("--input", agreement_input, "annotation CSV (store annotations when absent)");
    agreement->callback([&] { run([&] { cmd_agreement(o, stat, agreement_input); }); });

    TrainArgs train_args;
    auto *train = app.add_subcommand("train", "distant pre-training and/or gold fine-tuning");
    train->add_option("--stage", train_args.stage, "distant|gold|both")->capture_default_str();
    train->add_option("--config", train_args.config, "training config JSON");
    train->add_option("--distant-data", train_args.distant_data, "JSONL {id,text,label,tags} instead of the store");
    train->add_option("--gold-data", train_args.gold_data, "JSONL gold training examples");
    train->add_option("--validation-data", train_args.validation_data, "JSONL gold validation examples");
    train->add_option("--out", train_args.out, "checkpoint path");
    train->callback([&] { run([&] { cmd_train(o, train_args); }); });

    std::size_t grad_runs = 10;
    double grad_tolerance = 1e-4;
    auto *grad = app.add_subcommand("gradcheck", "compare backprop with finite differences");
    grad->add_option("--runs", grad_runs)->capture_default_str();
    grad->add_option("--tolerance", grad_tolerance)->capture_default_str();
    grad->callback([&] { action = [&] { return cmd_gradcheck(o, grad_runs, grad_tolerance); }; });

    std::string model_spec, classify_input;
    auto *classify = app.add_subcommand("classify", "score JSONL {id,text} records");
    classify->add_option("--model", model_spec, "checkpoint path or registered model id")->required();
    classify->add_option("--input", classify_input)->required();
    classify->callback([&] { run([&] { cmd_classify(o, model_spec, classify_input); }); });

    std::string eval_model, eval_test, eval_suites;
    double threshold = 0.5;
    auto *eval = app.add_subcommand("eval", "overall and per-slice metrics");
    eval->add_option("--model", eval_model, "checkpoint path or registered model id")->required();
    eval->add_option("--test", eval_test, "JSONL {id,text,label,tags}")->required();
    eval->add_option("--suites", eval_suites, "suite config JSON");
    eval->add_option("--threshold", threshold)->capture_default_str();
    eval->callback([&] { run([&] { cmd_eval(o, eval_model, eval_test, eval_suites, threshold); }); });

    std::string bind = "127.0.0.1:8080", game_config;
    std::size_t checkpoint_every = 1000;
    auto *serve = app.add_subcommand("serve", "run the REST service");
    serve->add_option("--bind", bind, "host:port (port 0 picks a free one)")->capture_default_str();
    serve->add_option("--game-config", game_config, "game config JSON, fixed when the store is created");
    serve->add_option("--checkpoint-every", checkpoint_every, "commits between snapshots, 0 never")
        ->capture_default_str();
    serve->callback([&] { run([&] { cmd_serve(o, bind, game_config, checkpoint_every); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    }

    try {
        return action();
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const Error &e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
