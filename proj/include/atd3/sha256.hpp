#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace atd3 {

// Minimal SHA-256 (FIPS 180-4), enough for manifest input digests.
class Sha256 {
public:
    Sha256() { reset(); }
    void reset();
    void update(const void* data, std::size_t len);
    std::string hex_digest();  // finalizes

    static std::string of_string(const std::string& s);
    static std::string of_file(const std::filesystem::path& p);

private:
    void process_block(const std::uint8_t* block);
    std::uint32_t h_[8];
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
    std::uint64_t total_len_ = 0;
};

}  // namespace atd3
