#pragma once

#include <string>
#include <string_view>

#include "rctf/vfs.hpp"

namespace rctf::cmd_eval {

inline constexpr std::string_view kDefaultTemplate = "echo {}";

// Substitutes `user_input` verbatim into the template's single `{}` and
// interprets the result in a closed mini-language: `;`-separated commands
// drawn from echo, cat and ls. The verbatim substitution is the injection
// bug the scenario teaches; nothing here ever reaches a host shell.
std::string eval_command(std::string_view command_template, std::string_view user_input,
                         const vfs::VirtualFS& fs);

bool valid_template(std::string_view command_template);

}  // namespace rctf::cmd_eval
