#include "rctf/cmd_eval.hpp"

#include <sstream>
#include <vector>

#include "rctf/error.hpp"

namespace rctf::cmd_eval {
namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string strip_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::string run_one(const std::vector<std::string>& argv, const vfs::VirtualFS& fs) {
  const std::string& cmd = argv.front();
  if (cmd == "echo") {
    std::string out;
    for (std::size_t i = 1; i < argv.size(); ++i) out += (i > 1 ? " " : "") + argv[i];
    return out;
  }
  if (cmd == "cat") {
    std::string out;
    for (std::size_t i = 1; i < argv.size(); ++i) {
      if (i > 1) out += "\n";
      std::string path = vfs::normalize_path(argv[i]);
      const vfs::Entry* e = fs.find(path);
      out += e ? strip_newline(e->blob->as_string()) : "cat: " + argv[i] + ": No such file or directory";
    }
    return out;
  }
  if (cmd == "ls") {
    std::string path = argv.size() > 1 ? vfs::normalize_path(argv[1]) : "/";
    if (fs.exists(path)) return argv.size() > 1 ? argv[1] : path;
    if (!fs.is_dir(path)) return "ls: cannot access '" + argv[1] + "': No such file or directory";
    std::string out;
    for (const auto& name : fs.list(path)) out += (out.empty() ? "" : "\n") + name;
    return out;
  }
  return "sh: " + cmd + ": not found";
}

}  // namespace

bool valid_template(std::string_view t) {
  auto first = t.find("{}");
  return first != std::string_view::npos && t.find("{}", first + 2) == std::string_view::npos;
}

std::string eval_command(std::string_view command_template, std::string_view user_input,
                         const vfs::VirtualFS& fs) {
  if (!valid_template(command_template))
    throw Error(ErrorCode::invalid_argument, "command template must contain exactly one {} placeholder");
  std::string line(command_template);
  line.replace(line.find("{}"), 2, user_input);

  std::vector<std::string> outputs;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto semi = line.find(';', start);
    if (semi == std::string::npos) semi = line.size();
    auto argv = split_words(std::string_view(line).substr(start, semi - start));
    if (!argv.empty()) outputs.push_back(run_one(argv, fs));
    start = semi + 1;
  }
  std::string out;
  for (std::size_t i = 0; i < outputs.size(); ++i) out += (i ? "\n" : "") + outputs[i];
  return out;
}

}  // namespace rctf::cmd_eval
