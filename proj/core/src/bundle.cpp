#include "cdisc/bundle.hpp"

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

std::vector<std::string> bundle_files() {
    return {artifact::manifest, artifact::features, artifact::descriptions, artifact::word2vec, artifact::embedding,
            artifact::aams,     artifact::concepts, artifact::scores,       artifact::subspaces};
}

namespace {

void expect_vocab(std::uint64_t found, std::uint64_t want, const std::string& name) {
    if (found != want) {
        throw HashMismatchError(name + ": vocabulary hash " + hex64(found) + " does not match the dataset's " +
                                hex64(want));
    }
}

}  // namespace

ModelBundle load_bundle(const std::filesystem::path& dir) {
    std::string missing;
    for (const auto& f : bundle_files()) {
        if (!std::filesystem::is_regular_file(dir / f)) missing += "\n  " + (dir / f).string();
    }
    if (!missing.empty()) throw MissingArtifactError("bundle " + dir.string() + " is missing:" + missing);

    ModelBundle b;
    b.dir = dir;
    b.dataset = load_dataset(dir / artifact::dataset_dir);
    b.vocab_hash = b.dataset.vocab.hash();

    b.config_hashes[artifact::dataset_dir] = b.dataset.config_hash;

    std::uint64_t vh = 0;
    std::uint64_t ch = 0;
    b.word2vec = load_word2vec(dir / artifact::word2vec, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::word2vec);
    b.config_hashes[artifact::word2vec] = ch;
    b.embedding = load_embedding(dir / artifact::embedding, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::embedding);
    b.config_hashes[artifact::embedding] = ch;
    b.aams = load_aams(dir / artifact::aams, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::aams);
    b.config_hashes[artifact::aams] = ch;
    b.subspaces.assignment = load_concepts(dir / artifact::concepts, b.dataset.vocab, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::concepts);
    b.config_hashes[artifact::concepts] = ch;
    b.scores = load_scores(dir / artifact::scores, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::scores);
    b.config_hashes[artifact::scores] = ch;
    b.subspaces.models = load_subspaces(dir, &vh, &ch);
    expect_vocab(vh, b.vocab_hash, artifact::subspaces);
    b.config_hashes[artifact::subspaces] = ch;

    if (b.embedding.vocab_size() != b.dataset.vocab.size() || b.embedding.feature_dim() != b.dataset.dims.channels) {
        throw FormatError("embedding.bin does not match the dataset dims");
    }
    for (const auto& [cid, m] : b.subspaces.models) {
        if (m.input_dim() != b.embedding.dim()) {
            throw FormatError(subspace_file_name(cid) + " does not match the embedding dimension");
        }
    }

    std::vector<std::string> files = bundle_files();
    for (const auto& [cid, m] : b.subspaces.models) files.push_back(subspace_file_name(cid));
    std::uint64_t h = fnv1a("");
    for (const auto& f : files) h = fnv1a(read_text_file(dir / f), h);
    b.bundle_hash = h;

    b.gap = gap_all(b.dataset);
    b.images = embed_images(b.embedding, b.gap);
    for (const auto& [cid, m] : b.subspaces.models) {
        Eigen::MatrixXd f(b.images.rows(), m.hidden());
        for (Eigen::Index i = 0; i < b.images.rows(); ++i) f.row(i) = m.feature(b.images.row(i).transpose());
        b.subspace_features.emplace(cid, std::move(f));
    }
    b.gallery = Gallery::from(b.images, b.dataset.splits.test);
    return b;
}

}  // namespace cdisc
