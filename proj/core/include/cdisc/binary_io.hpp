#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdisc {

// Header shared by every binary model artifact:
// 4-byte magic, u32 version, u64 vocabulary hash, u64 config hash.
struct ArtifactHeader {
    std::array<char, 4> magic{};
    std::uint32_t version = 1;
    std::uint64_t vocab_hash = 0;
    std::uint64_t config_hash = 0;
};

// Append-only little-endian byte buffer.
class BinaryWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    void f32s(std::span<const float> v);
    void f64_as_f32(double v) { f32(static_cast<float>(v)); }
    void bytes(std::string_view s);
    void header(const ArtifactHeader& h);

    const std::vector<char>& data() const { return buf_; }

    // Writes to a temporary sibling and renames, so readers never observe a
    // partially written artifact.
    void save(const std::filesystem::path& path) const;

private:
    std::vector<char> buf_;
};

// Bounds-checked little-endian reader; every overrun raises FormatError.
class BinaryReader {
public:
    explicit BinaryReader(std::vector<char> data, std::string name = {});
    static BinaryReader open(const std::filesystem::path& path);

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    void f32s(std::span<float> out);
    // Reads and validates the artifact header against the expected magic.
    ArtifactHeader header(std::string_view magic, std::uint32_t version = 1);

    std::size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const;
    const std::string& name() const { return name_; }

private:
    void need(std::size_t n) const;

    std::vector<char> data_;
    std::size_t pos_ = 0;
    std::string name_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(std::string_view s);

}  // namespace cdisc
