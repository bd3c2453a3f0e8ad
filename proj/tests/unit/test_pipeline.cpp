#include <gtest/gtest.h>

#include "cdisc/binary_io.hpp"
#include "cdisc/bundle.hpp"
#include "cdisc/error.hpp"
#include "cdisc/pipeline.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace cdisc;

TEST(Pipeline, StageNames) {
    for (Stage s : all_stages()) EXPECT_EQ(parse_stage(stage_name(s)), s);
    EXPECT_THROW(parse_stage("train"), ConfigError);
}

TEST(Pipeline, MissingUpstreamNamesPath) {
    const auto dir = test::scratch_dir("pipe_missing");
    const auto cfg = test::small_config(dir);
    try {
        run_stage(Stage::evaluate, cfg, test::null_log());
        FAIL() << "expected MissingArtifactError";
    } catch (const MissingArtifactError& e) {
        EXPECT_NE(std::string(e.what()).find((dir / artifact::manifest).string()), std::string::npos);
    }
    run_stage(Stage::generate, cfg, test::null_log());
    EXPECT_THROW(run_stage(Stage::cluster, cfg, test::null_log()), MissingArtifactError);
}

TEST(Pipeline, EmptyBundleListsAllNineFiles) {
    const auto dir = test::scratch_dir("pipe_empty");
    try {
        load_bundle(dir);
        FAIL() << "expected MissingArtifactError";
    } catch (const MissingArtifactError& e) {
        const std::string what = e.what();
        ASSERT_EQ(bundle_files().size(), 9u);
        for (const auto& f : bundle_files()) EXPECT_NE(what.find((dir / f).string()), std::string::npos) << f;
    }
}

TEST(Pipeline, ForeignVocabularyRejected) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("pipe_vocab");
    fs::copy(b.dir, dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    save_embedding(b.embedding, b.vocab_hash ^ 1, b.config_hashes.at(artifact::embedding), dir / artifact::embedding);
    try {
        load_bundle(dir);
        FAIL() << "expected HashMismatchError";
    } catch (const HashMismatchError& e) {
        EXPECT_NE(std::string(e.what()).find("embedding.bin"), std::string::npos);
    }
}

TEST(Pipeline, EvaluateRefusesMixedConfigs) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("pipe_mixed");
    fs::copy(b.dir, dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    auto cfg = test::small_config(dir);
    EXPECT_NO_THROW(run_stage(Stage::evaluate, cfg, test::null_log()));
    // Retrain one stage under a different config.
    cfg.subspace.epochs = 2;
    run_stage(Stage::train_subspaces, cfg, test::null_log());
    EXPECT_THROW(run_stage(Stage::evaluate, cfg, test::null_log()), HashMismatchError);
}

TEST(Pipeline, StagesLeaveInputsUntouched) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("pipe_inputs");
    fs::copy(b.dir, dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    const auto cfg = test::small_config(dir);
    for (Stage s : all_stages()) {
        if (s == Stage::generate) continue;
        std::map<std::string, std::string> before;
        for (const auto& f : stage_inputs(s)) before[f] = read_text_file(dir / f);
        run_stage(s, cfg, test::null_log());
        for (const auto& [f, bytes] : before) EXPECT_EQ(read_text_file(dir / f), bytes) << stage_name(s) << " " << f;
    }
}

TEST(Pipeline, ManifestAndReports) {
    const auto& b = test::small_bundle();
    for (Stage s : all_stages()) {
        const auto text = read_text_file(b.dir / "runs" / (std::string(stage_name(s)) + ".json"));
        EXPECT_NE(text.find("\"config_hash\""), std::string::npos);
        EXPECT_NE(text.find("\"git_describe\""), std::string::npos);
        EXPECT_NE(text.find("\"wall_seconds\""), std::string::npos);
    }
    const auto clustering = read_text_file(b.dir / report::clustering);
    EXPECT_EQ(clustering.rfind("mode,homogeneity,completeness,v_measure\njoint,", 0), 0u);
    EXPECT_NE(read_text_file(b.dir / report::topk).find("concept,10,"), std::string::npos);
}

TEST(Pipeline, IngestedDatasetWithoutGroundTruth) {
    const auto& b = test::small_bundle();
    const auto src = test::scratch_dir("pipe_src");
    Dataset ds = b.dataset;
    ds.ground_truth.reset();
    save_dataset(ds, src);
    const auto dir = test::scratch_dir("pipe_ingest");
    auto cfg = test::small_config(dir);
    cfg.dataset_source = src;
    run_all(cfg, test::null_log());
    EXPECT_EQ(read_text_file(dir / report::clustering), "mode,homogeneity,completeness,v_measure\n");
    EXPECT_NE(read_text_file(dir / artifact::scores).find("ground_truth none"), std::string::npos);
    EXPECT_NE(read_text_file(dir / report::topk).find("baseline,1,"), std::string::npos);
}
