#include "rctf/bytecode.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <vector>

#include "rctf/error.hpp"

namespace rctf::bytecode {
namespace {

constexpr std::string_view kDecoys[] = {
    "guard v0.3 (c) robot vendor",
    "usage: guard <pin>",
    "enter maintenance pin:",
    "pin accepted",
    "watchdog armed",
    "libvm.so.1",
    "calibration table missing",
    "motor controller offline",
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::size_t instruction_length(std::uint8_t opcode) {
  switch (opcode) {
    case PUSHI: return 5;
    case READIN:
    case EQ:
    case PRINTS:
    case HALT: return 1;
    case JZ:
    case JNZ:
    case PRINTLIT: return 3;
    case DECODE: return 7;
    default: return 0;
  }
}

crypto::Bytes BytecodeProgram::to_bytes() const {
  crypto::Bytes out;
  crypto::put_str(out, "RVM1");
  crypto::put_u16(out, static_cast<std::uint16_t>(code.size()));
  crypto::put_u16(out, static_cast<std::uint16_t>(data.size()));
  out.insert(out.end(), code.begin(), code.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

BytecodeProgram assemble_guard(std::string_view flag, std::uint32_t guard_constant, std::uint64_t seed) {
  if (guard_constant == 0)
    throw Error(ErrorCode::invalid_argument, "guard constant must be non-zero (it doubles as the XOR key)");
  std::mt19937_64 rng(seed);

  // Layout the data section first so code can reference absolute offsets.
  // Decoy strings, the denial message and the obfuscated flag, seed-ordered.
  std::vector<std::string> pieces(std::begin(kDecoys), std::end(kDecoys));
  std::shuffle(pieces.begin(), pieces.end(), rng);
  pieces.resize(3 + rng() % 4);
  std::size_t denied_slot = rng() % (pieces.size() + 1);
  pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(denied_slot), std::string(kDenied));
  std::size_t secret_slot = rng() % (pieces.size() + 1);

  const std::size_t decoy_blocks = rng() % 4;
  constexpr std::size_t kDecoyBlock = 5 + 5 + 1 + 3;
  constexpr std::size_t kGuardBody = 1 + 5 + 1 + 3 + 7 + 1 + 1 + 3 + 1;
  const std::size_t code_size = decoy_blocks * kDecoyBlock + kGuardBody;
  const std::size_t data_base = kHeaderSize + code_size;

  crypto::Bytes data;
  std::size_t denied_addr = 0, secret_addr = 0;
  const std::uint8_t key[4] = {static_cast<std::uint8_t>(guard_constant >> 24),
                               static_cast<std::uint8_t>(guard_constant >> 16),
                               static_cast<std::uint8_t>(guard_constant >> 8),
                               static_cast<std::uint8_t>(guard_constant)};
  auto emit_secret = [&] {
    secret_addr = data_base + data.size();
    for (std::size_t i = 0; i < flag.size(); ++i)
      data.push_back(static_cast<std::uint8_t>(flag[i]) ^ key[i % 4]);
    data.push_back(static_cast<std::uint8_t>(0x80 | (rng() & 0x7f)));
  };
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i == secret_slot) emit_secret();
    if (pieces[i] == kDenied) denied_addr = data_base + data.size();
    crypto::put_str(data, pieces[i]);
    data.push_back(0);
  }
  if (secret_slot == pieces.size()) emit_secret();

  BytecodeProgram p;
  auto& code = p.code;
  auto here = [&] { return kHeaderSize + code.size(); };
  for (std::size_t b = 0; b < decoy_blocks; ++b) {
    code.push_back(PUSHI);
    crypto::put_u32(code, static_cast<std::uint32_t>(rng()));
    code.push_back(PUSHI);
    crypto::put_u32(code, static_cast<std::uint32_t>(rng()));
    code.push_back(EQ);
    code.push_back(JNZ);
    crypto::put_u16(code, static_cast<std::uint16_t>(here() + 2));  // falls through either way
  }
  code.push_back(READIN);
  code.push_back(PUSHI);
  p.const_offset = here();
  crypto::put_u32(code, guard_constant);
  code.push_back(EQ);
  p.branch_offset = here();
  code.push_back(JZ);
  const std::size_t deny_target = here() + 2 + 7 + 1 + 1;
  crypto::put_u16(code, static_cast<std::uint16_t>(deny_target));
  code.push_back(DECODE);
  crypto::put_u16(code, static_cast<std::uint16_t>(p.const_offset));
  crypto::put_u16(code, static_cast<std::uint16_t>(secret_addr));
  crypto::put_u16(code, static_cast<std::uint16_t>(flag.size()));
  code.push_back(PRINTS);
  code.push_back(HALT);
  code.push_back(PRINTLIT);
  crypto::put_u16(code, static_cast<std::uint16_t>(denied_addr));
  code.push_back(HALT);

  p.data = std::move(data);
  return p;
}

std::string run_vm(const vfs::Blob& program, std::string_view stdin_line, std::uint64_t step_budget) {
  const auto& b = program.bytes;
  if (b.size() < kHeaderSize || !std::equal(b.begin(), b.begin() + 4, "RVM1"))
    throw Error(ErrorCode::bad_magic, "not an RVM1 program");
  const std::size_t code_len = std::size_t{b[4]} << 8 | b[5];
  const std::size_t data_len = std::size_t{b[6]} << 8 | b[7];
  if (kHeaderSize + code_len + data_len > b.size())
    throw Error(ErrorCode::truncated, "program shorter than its header declares");
  const std::size_t code_end = kHeaderSize + code_len;

  auto u16_at = [&](std::size_t at) { return std::size_t{b[at]} << 8 | b[at + 1]; };
  auto u32_at = [&](std::size_t at) -> std::uint64_t {
    if (at + 4 > b.size()) throw Error(ErrorCode::out_of_range, "u32 read out of bounds at " + std::to_string(at));
    return std::uint64_t{b[at]} << 24 | std::uint64_t{b[at + 1]} << 16 | std::uint64_t{b[at + 2]} << 8 | b[at + 3];
  };

  std::uint64_t input = std::uint64_t{1} << 32;
  {
    auto text = trim(stdin_line);
    std::uint32_t parsed = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
    if (!text.empty() && ec == std::errc{} && ptr == text.data() + text.size()) input = parsed;
  }

  std::vector<std::uint64_t> stack;
  std::string reg;
  std::vector<std::string> lines;
  auto pop = [&](std::size_t pc) {
    if (stack.empty()) throw Error(ErrorCode::vm_stack_underflow, "stack underflow at " + std::to_string(pc));
    auto v = stack.back();
    stack.pop_back();
    return v;
  };
  auto jump_target = [&](std::size_t pc, std::size_t target) {
    if (target < kHeaderSize || target >= code_end)
      throw Error(ErrorCode::vm_bad_jump,
                  "jump from " + std::to_string(pc) + " to " + std::to_string(target) + " leaves the code section");
    return target;
  };

  std::size_t pc = kHeaderSize;
  for (std::uint64_t steps = 0;; ++steps) {
    if (steps >= step_budget)
      throw Error(ErrorCode::vm_budget_exceeded, "step budget of " + std::to_string(step_budget) + " exceeded");
    if (pc >= code_end) throw Error(ErrorCode::vm_bad_jump, "execution ran off the code section at " + std::to_string(pc));
    const std::uint8_t op = b[pc];
    const std::size_t len = instruction_length(op);
    if (len == 0)
      throw Error(ErrorCode::vm_invalid_opcode, "invalid opcode 0x" + crypto::to_hex(std::span(&b[pc], 1)) +
                                                    " at " + std::to_string(pc));
    if (pc + len > code_end)
      throw Error(ErrorCode::vm_invalid_opcode, "truncated instruction at " + std::to_string(pc));

    std::size_t next = pc + len;
    switch (op) {
      case PUSHI: stack.push_back(u32_at(pc + 1)); break;
      case READIN: stack.push_back(input); break;
      case EQ: {
        auto rhs = pop(pc);
        auto lhs = pop(pc);
        stack.push_back(lhs == rhs ? 1 : 0);
        break;
      }
      case JZ:
        if (pop(pc) == 0) next = jump_target(pc, u16_at(pc + 1));
        break;
      case JNZ:
        if (pop(pc) != 0) next = jump_target(pc, u16_at(pc + 1));
        break;
      case DECODE: {
        auto key = u32_at(u16_at(pc + 1));
        std::size_t seg = u16_at(pc + 3), seg_len = u16_at(pc + 5);
        if (seg + seg_len > b.size())
          throw Error(ErrorCode::out_of_range, "DECODE segment out of bounds at " + std::to_string(pc));
        reg.clear();
        for (std::size_t i = 0; i < seg_len; ++i)
          reg.push_back(static_cast<char>(b[seg + i] ^ static_cast<std::uint8_t>(key >> (8 * (3 - i % 4)))));
        break;
      }
      case PRINTS: lines.push_back(reg); break;
      case PRINTLIT: {
        std::size_t at = u16_at(pc + 1);
        auto nul = at < b.size() ? std::find(b.begin() + static_cast<std::ptrdiff_t>(at), b.end(), 0) : b.end();
        if (at >= b.size() || nul == b.end())
          throw Error(ErrorCode::out_of_range, "PRINTLIT reference out of bounds at " + std::to_string(pc));
        lines.emplace_back(b.begin() + static_cast<std::ptrdiff_t>(at), nul);
        break;
      }
      case HALT: {
        std::string out;
        for (std::size_t i = 0; i < lines.size(); ++i) out += (i ? "\n" : "") + lines[i];
        return out;
      }
    }
    pc = next;
  }
}

}  // namespace rctf::bytecode
