#include "rctf/vfs.hpp"

#include <algorithm>

#include "rctf/error.hpp"

namespace rctf::vfs {

std::string_view to_string(BlobKind kind) {
  switch (kind) {
    case BlobKind::text: return "text";
    case BlobKind::rbin: return "rbin";
    case BlobKind::bytecode: return "bytecode";
  }
  return "?";
}

std::string normalize_path(std::string_view path, std::string_view cwd) {
  if (path.empty()) throw Error(ErrorCode::invalid_argument, "empty path");
  std::string joined = path.front() == '/' ? std::string(path) : std::string(cwd) + "/" + std::string(path);
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i <= joined.size()) {
    auto j = joined.find('/', i);
    if (j == std::string::npos) j = joined.size();
    std::string part = joined.substr(i, j - i);
    if (part == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (!part.empty() && part != ".") {
      parts.push_back(std::move(part));
    }
    i = j + 1;
  }
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out.empty() ? "/" : out;
}

const Entry* VirtualFS::find(std::string_view path) const {
  std::string key(path);
  if (auto it = overlay_.find(key); it != overlay_.end()) return &it->second;
  if (auto it = base_->find(key); it != base_->end()) return &it->second;
  return nullptr;
}

bool VirtualFS::is_dir(std::string_view path) const {
  std::string prefix(path);
  if (prefix == "/") return true;
  prefix += "/";
  auto has_prefix = [&](const FileMap& m) {
    auto it = m.lower_bound(prefix);
    return it != m.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  };
  return has_prefix(overlay_) || has_prefix(*base_);
}

const Blob& VirtualFS::read(std::string_view path) const {
  const Entry* e = find(path);
  if (!e) throw Error(ErrorCode::not_found, std::string(path) + ": No such file or directory");
  return *e->blob;
}

void VirtualFS::write(const std::string& path, Blob blob, bool read_only, bool restricted) {
  overlay_[path] = Entry{std::make_shared<const Blob>(std::move(blob)), read_only, restricted};
}

void VirtualFS::patch(std::string_view path, std::size_t offset, std::uint8_t value) {
  const Entry* e = find(path);
  if (!e) throw Error(ErrorCode::not_found, std::string(path) + ": No such file or directory");
  if (e->read_only) throw Error(ErrorCode::read_only, std::string(path) + ": Read-only file");
  if (offset >= e->blob->bytes.size())
    throw Error(ErrorCode::out_of_range, std::string(path) + ": offset " + std::to_string(offset) +
                                             " beyond end of file (" + std::to_string(e->blob->bytes.size()) +
                                             " bytes)");
  Blob copy = *e->blob;
  copy.bytes[offset] = value;
  write(std::string(path), std::move(copy), e->read_only, e->restricted);
}

std::vector<std::string> VirtualFS::list(std::string_view dir) const {
  std::string prefix(dir);
  if (prefix.back() != '/') prefix += '/';
  std::set<std::string> names;
  auto collect = [&](const FileMap& m) {
    for (auto it = m.lower_bound(prefix); it != m.end() && it->first.compare(0, prefix.size(), prefix) == 0;
         ++it) {
      std::string rest = it->first.substr(prefix.size());
      auto slash = rest.find('/');
      names.insert(slash == std::string::npos ? rest : rest.substr(0, slash + 1));
    }
  };
  collect(*base_);
  collect(overlay_);
  return {names.begin(), names.end()};
}

FileMap VirtualFS::merged() const {
  FileMap out = *base_;
  for (const auto& [k, v] : overlay_) out[k] = v;
  return out;
}

void patch_blob(VirtualFS& fs, std::string_view path, std::size_t offset, std::uint8_t value) {
  fs.patch(path, offset, value);
}

}  // namespace rctf::vfs
