#include <doctest.h>

#include <algorithm>

#include "rctf/blobs.hpp"
#include "rctf/error.hpp"

using namespace rctf;
using namespace rctf::blobs;

TEST_CASE("credential is recoverable with strings, and only as a whole") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto blob = generate_cred_blob(seed, "ur_maint_2019");
    CHECK(blob.kind == vfs::BlobKind::rbin);
    CHECK(std::string(blob.bytes.begin(), blob.bytes.begin() + 4) == "RBIN");
    auto found = extract_strings(blob, 6);
    CHECK(std::count(found.begin(), found.end(), "pass:ur_maint_2019") == 1);
    CHECK(found.size() > 20);
  }
  CHECK(generate_cred_blob(1, "abcd").bytes == generate_cred_blob(1, "abcd").bytes);
  CHECK(generate_cred_blob(1, "abcd").bytes != generate_cred_blob(2, "abcd").bytes);
}

TEST_CASE("extract_strings edge cases") {
  auto blob = generate_cred_blob(3, "secret_pw");
  CHECK(extract_strings(blob, 1000000).empty());
  vfs::Blob b{{'a', 'b', 'c', 0, 'd', 'e', 'f', 'g', 0x80, 'h', 'i', 'j', 'k', 'l'}, vfs::BlobKind::rbin};
  CHECK(extract_strings(b, 4) == std::vector<std::string>{"defg", "hijkl"});
  CHECK(extract_strings(b, 1) == std::vector<std::string>{"abc", "defg", "hijkl"});
  CHECK_THROWS_AS(extract_strings(b, 0), Error);
}
