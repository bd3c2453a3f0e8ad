#include "cdisc/binary_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cdisc/error.hpp"

namespace cdisc {

static_assert(std::endian::native == std::endian::little,
              "artifact I/O assumes a little-endian host");

namespace {

template <typename T>
void append(std::vector<char>& buf, T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.insert(buf.end(), raw, raw + sizeof(T));
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) { append(buf_, v); }
void BinaryWriter::u64(std::uint64_t v) { append(buf_, v); }
void BinaryWriter::f32(float v) { append(buf_, v); }

void BinaryWriter::f32s(std::span<const float> v) {
    const auto* p = reinterpret_cast<const char*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size_bytes());
}

void BinaryWriter::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void BinaryWriter::header(const ArtifactHeader& h) {
    bytes(std::string_view(h.magic.data(), h.magic.size()));
    u32(h.version);
    u64(h.vocab_hash);
    u64(h.config_hash);
}

void BinaryWriter::save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

BinaryReader::BinaryReader(std::vector<char> data, std::string name)
    : data_(std::move(data)), name_(std::move(name)) {}

BinaryReader BinaryReader::open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("missing artifact: " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return BinaryReader(std::move(data), path.filename().string());
}

void BinaryReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
        throw FormatError(name_ + ": truncated at byte " + std::to_string(pos_));
    }
}

std::uint32_t BinaryReader::u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

std::uint64_t BinaryReader::u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return v;
}

float BinaryReader::f32() {
    need(4);
    float v;
    std::memcpy(&v, data_.data() + pos_, 4);
    pos_ += 4;
    return v;
}

void BinaryReader::f32s(std::span<float> out) {
    need(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
}

ArtifactHeader BinaryReader::header(std::string_view magic, std::uint32_t version) {
    need(4);
    ArtifactHeader h;
    std::memcpy(h.magic.data(), data_.data() + pos_, 4);
    pos_ += 4;
    if (std::string_view(h.magic.data(), 4) != magic) {
        throw FormatError(name_ + ": bad magic, expected " + std::string(magic));
    }
    h.version = u32();
    if (h.version != version) {
        throw FormatError(name_ + ": unsupported version " + std::to_string(h.version));
    }
    h.vocab_hash = u64();
    h.config_hash = u64();
    return h;
}

void BinaryReader::expect_end() const {
    if (pos_ != data_.size()) {
        throw FormatError(name_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("missing artifact: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    BinaryWriter w;
    w.bytes(text);
    w.save(path);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    auto [end, ec] = std::to_chars(buf, buf + 16, v, 16);
    std::string s(buf, end);
    return std::string(16 - s.size(), '0') + s;
}

std::uint64_t parse_hex64(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError("bad hex value '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace cdisc
