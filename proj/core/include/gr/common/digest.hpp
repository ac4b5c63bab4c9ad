#pragma once

#include <string>
#include <string_view>

namespace gr {

// Lowercase hex digests backed by OpenSSL.
std::string sha1_hex(std::string_view data);
std::string sha256_hex(std::string_view data);

// Non-cryptographic 64-bit mixers used for seeding and bucketing.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view data);

}  // namespace gr
