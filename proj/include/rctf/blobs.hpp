#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rctf/vfs.hpp"

namespace rctf::blobs {

// Synthetic "compiled" robot controller: "RBIN" header, seeded filler that
// never forms printable runs of 4+, and ~50 NUL-terminated strings, one of
// which is `pass:<credential>`.
vfs::Blob generate_cred_blob(std::uint64_t seed, std::string_view credential);

// Maximal runs of printable ASCII (0x20..0x7e) of at least `min_len` bytes,
// in offset order. min_len must be >= 1.
std::vector<std::string> extract_strings(const vfs::Blob& blob, std::size_t min_len);

inline bool printable(std::uint8_t b) { return b >= 0x20 && b < 0x7f; }

}  // namespace rctf::blobs
