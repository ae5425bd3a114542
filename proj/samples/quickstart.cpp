// Library walkthrough over samples/data: distant labels from outlet
// metadata, gold labels from annotator majorities, agreement, two-stage
// training and a sliced evaluation. No store or service involved.
//
//   quickstart [data-dir]

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "biaslab/biaslab.hpp"

using namespace biaslab;

int main(int argc, char **argv) {
    const std::string data = argc > 1 ? argv[1] : BIASLAB_SAMPLES;
    try {
        CorpusStore corpus;
        corpus.load_outlets_csv(data + "/outlets.csv");
        corpus.ingest_jsonl(data + "/distant.jsonl", CorpusKind::distant);
        corpus.ingest_jsonl(data + "/gold.jsonl", CorpusKind::gold);

        const auto distant_report = corpus.assign_distant_labels(OutletRule::default_rule());
        std::cout << "distant labels: " << distant_report.biased << " biased, " << distant_report.neutral
                  << " neutral, " << distant_report.excluded.size() << " excluded\n";
        if (const auto c = corpus.check_overlap(CorpusKind::gold, CorpusKind::distant); !c.empty()) {
            std::cerr << c.size() << " gold/distant collisions\n";
            return 2;
        }

        AnnotationStore annotations(Tokenizer{}, [&](std::string_view id) -> std::optional<std::string> {
            if (const auto *s = corpus.find(id)) return s->text;
            return std::nullopt;
        });
        annotations.import_csv(data + "/annotations.csv");
        const auto matrix = ReliabilityMatrix::from_annotations(annotations);
        std::cout << "krippendorff alpha: " << krippendorff_alpha(matrix).value << "\n";

        std::vector<std::string> gold_ids;
        for (const auto *s : corpus.sentences(CorpusKind::gold)) gold_ids.push_back(s->id);
        const auto gold_report = annotations.aggregate_gold(gold_ids, 3);
        for (const auto &g : gold_report.labels) corpus.set_gold_label(g.sentence_id, g.label);
        std::cout << "gold labels: " << gold_report.labels.size() << ", ties: " << gold_report.tied.size() << "\n";

        std::vector<TextExample> distant, gold;
        for (const auto &[id, label] : corpus.distant_labels()) {
            distant.push_back({id, corpus.find(id)->text, label.label, {}});
        }
        for (const auto &g : gold_report.labels) {
            gold.push_back({g.sentence_id, corpus.find(g.sentence_id)->text, g.label, {}});
        }

        TransferConfig config;
        config.embedding_dim = 8;
        config.hidden_dim = 8;
        config.min_frequency = 1;
        config.distant.epochs = 30;
        config.distant.batch_size = 8;
        config.gold.epochs = 30;
        config.gold.batch_size = 4;
        const auto trained = pretrain_then_finetune(distant, gold, config);
        const auto &bundle = trained.bundle;
        std::cout << "model " << bundle.id() << ", final gold loss " << trained.gold_report.epoch_losses.back() << "\n";

        std::vector<EvalExample> test;
        std::ifstream in(data + "/test.jsonl");
        for (std::string line; std::getline(in, line);) {
            const auto j = nlohmann::json::parse(line);
            const auto label = parse_label(j.at("label").get<std::string>());
            test.push_back({j.at("id"), {bundle.encode_text(j.at("text").get<std::string>()), label},
                            j.value("tags", std::vector<std::string>{})});
        }
        const std::vector<SliceSuite> suites{make_suite("loaded wording", "lexical-bias", test),
                                             make_suite("headlines", "headline-style", test)};
        const auto report = evaluate_sliced(bundle.model, suites, test, "samples-test");
        std::cout << nlohmann::json(report).dump(2) << "\n";
        std::cout << "\"The mayor slams reckless water rules\" scores "
                  << bundle.score("The mayor slams reckless water rules") << "\n";
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
