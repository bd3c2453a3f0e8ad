#pragma once

#include <filesystem>
#include <ostream>
#include <streambuf>
#include <string>
#include <vector>

#include <unistd.h>

#include "cdisc/bundle.hpp"
#include "cdisc/config.hpp"
#include "cdisc/pipeline.hpp"

namespace cdisc::test {

class NullBuffer : public std::streambuf {
protected:
    int overflow(int c) override { return c; }
};

inline std::ostream& null_log() {
    static NullBuffer buf;
    static std::ostream os(&buf);
    return os;
}

// Fresh directory under the system temp dir, removed first if present and
// again at exit.
inline std::filesystem::path scratch_dir(const std::string& name) {
    struct Cleanup {
        std::vector<std::filesystem::path> dirs;
        ~Cleanup() {
            std::error_code ec;
            for (const auto& d : dirs) std::filesystem::remove_all(d, ec);
        }
    };
    static Cleanup cleanup;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("cdisc_" + name + "_" + std::to_string(static_cast<long>(::getpid())));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    cleanup.dirs.push_back(dir);
    return dir;
}

// The default corpus with cheaper word2vec and k-means; a few seconds.
inline PipelineConfig small_config(const std::filesystem::path& dir) {
    PipelineConfig c = default_pipeline_config();
    c.artifact_dir = dir;
    c.word2vec.epochs = 10;
    c.concepts.restarts = 3;
    return c;
}

// One small bundle shared by every test in the binary. ctest runs each test
// in its own process, so the artifacts are cached on disk, keyed by config
// hash and test binary build time; the pipeline is deterministic, so
// whichever process publishes first wins.
inline const ModelBundle& small_bundle() {
    static const ModelBundle bundle = [] {
        namespace fs = std::filesystem;
        const auto built = fs::last_write_time("/proc/self/exe").time_since_epoch().count();
        const auto key = std::to_string(config_hash(small_config({}))) + "_" + std::to_string(built);
        const auto shared = fs::temp_directory_path() / ("cdisc_fixture_" + key);
        if (!fs::exists(shared / "reports")) {
            const auto dir = scratch_dir("small_bundle");
            run_all(small_config(dir), null_log());
            std::error_code ec;
            fs::rename(dir, shared, ec);  // fails if another process got there first
            if (ec) fs::remove_all(dir);
        }
        return load_bundle(shared);
    }();
    return bundle;
}

}  // namespace cdisc::test
