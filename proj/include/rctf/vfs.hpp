#pragma once

// Hermetic virtual filesystem with copy-on-write layering: reads fall
// through overlay -> base, writes only ever touch the overlay.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rctf/crypto.hpp"

namespace rctf::vfs {

using Bytes = crypto::Bytes;

enum class BlobKind { text, rbin, bytecode };

std::string_view to_string(BlobKind kind);

struct Blob {
  Bytes bytes;
  BlobKind kind = BlobKind::text;

  static Blob text(std::string_view s) { return Blob{Bytes(s.begin(), s.end()), BlobKind::text}; }
  std::string as_string() const { return std::string(bytes.begin(), bytes.end()); }
  bool operator==(const Blob&) const = default;
};

struct Entry {
  std::shared_ptr<const Blob> blob;
  bool read_only = false;
  bool restricted = false;  // root-only; unreadable from the player shell
};

using FileMap = std::map<std::string, Entry>;

// Absolute, normalized path. Relative paths resolve against `cwd`.
// Throws Error(invalid_argument) on empty input.
std::string normalize_path(std::string_view path, std::string_view cwd = "/");

class VirtualFS {
 public:
  VirtualFS() : base_(std::make_shared<FileMap>()) {}
  explicit VirtualFS(std::shared_ptr<const FileMap> base) : base_(std::move(base)) {}

  const Entry* find(std::string_view path) const;
  bool exists(std::string_view path) const { return find(path) != nullptr; }
  bool is_dir(std::string_view path) const;

  const Blob& read(std::string_view path) const;  // throws Error(not_found)
  void write(const std::string& path, Blob blob, bool read_only = false, bool restricted = false);
  void patch(std::string_view path, std::size_t offset, std::uint8_t value);

  // Immediate children of a directory, names only, sorted; dirs end in '/'.
  std::vector<std::string> list(std::string_view dir) const;

  // Merged view; used for observable-state comparisons and hashing.
  FileMap merged() const;
  std::size_t overlay_size() const { return overlay_.size(); }
  const std::shared_ptr<const FileMap>& base() const { return base_; }

 private:
  std::shared_ptr<const FileMap> base_;
  FileMap overlay_;
};

// Free-function form of VirtualFS::patch used by the shell's `patch`.
void patch_blob(VirtualFS& fs, std::string_view path, std::size_t offset, std::uint8_t value);

}  // namespace rctf::vfs
