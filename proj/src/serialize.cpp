#include "atd3/serialize.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace atd3::num {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'D', '3'};
constexpr std::uint8_t kVersion = 1;

void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

void put_u16(std::ostream& os, std::uint16_t v) {
    os.put(static_cast<char>(v & 0xff));
    os.put(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& os, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint8_t get_u8(std::istream& is) {
    int c = is.get();
    if (c < 0) throw std::runtime_error("params: truncated file");
    return static_cast<std::uint8_t>(c);
}

std::uint16_t get_u16(std::istream& is) {
    std::uint16_t v = get_u8(is);
    v |= static_cast<std::uint16_t>(get_u8(is)) << 8;
    return v;
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(is)) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(get_u8(is)) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_params(const std::filesystem::path& file, const NamedParams& params) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("params: cannot open for write: " + file.string());
    os.write(kMagic, 4);
    put_u8(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, m] : params) {
        if (name.size() > 0xffff) throw std::invalid_argument("params: name too long");
        put_u16(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<std::uint32_t>(m->rows));
        put_u32(os, static_cast<std::uint32_t>(m->cols));
    }
    for (const auto& [name, m] : params)
        for (const double v : m->data) put_f64(os, v);
    if (!os) throw std::runtime_error("params: write failed: " + file.string());

    nlohmann::json manifest;
    manifest["format"] = "atd3-params";
    manifest["version"] = kVersion;
    std::size_t offset = 0;
    for (const auto& [name, m] : params) {
        manifest["tensors"].push_back(
            {{"name", name}, {"rows", m->rows}, {"cols", m->cols}, {"offset", offset}});
        offset += m->size();
    }
    std::ofstream js(file.string() + ".json");
    js << manifest.dump(2) << "\n";
}

std::vector<std::pair<std::string, Matrix>> load_params(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("params: cannot open: " + file.string());
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("params: bad magic in " + file.string());
    const std::uint8_t version = get_u8(is);
    if (version != kVersion)
        throw std::runtime_error("params: unsupported version " + std::to_string(version));
    const std::uint32_t count = get_u32(is);
    std::vector<std::pair<std::string, Matrix>> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = get_u16(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        const std::uint32_t rows = get_u32(is);
        const std::uint32_t cols = get_u32(is);
        out.emplace_back(std::move(name), Matrix(rows, cols));
    }
    for (auto& [name, m] : out)
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = get_f64(is);
    return out;
}

}  // namespace atd3::num
