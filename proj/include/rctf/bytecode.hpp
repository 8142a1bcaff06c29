#pragma once

// Tiny stack VM behind the "guard" binary.
//
// Blob layout (big-endian): "RVM1" | u16 code_len | u16 data_len | code | data.
// All address operands are absolute blob offsets.
//
//   PUSHI  0x01 u32       push immediate
//   READIN 0x02           push stdin parsed as decimal u32 (2^32 if unparsable)
//   EQ     0x03           pop b, pop a, push a == b
//   JZ     0x04 u16       pop; jump if zero
//   JNZ    0x05 u16       pop; jump if non-zero
//   DECODE 0x06 u16 u16 u16   key_addr, seg_addr, seg_len: XOR segment with
//                             the u32 at key_addr (bytes repeated) into the
//                             output register
//   PRINTS 0x07           print the output register
//   PRINTLIT 0x08 u16     print the NUL-terminated string at addr
//   HALT   0x09

#include <cstdint>
#include <string>
#include <string_view>

#include "rctf/vfs.hpp"

namespace rctf::bytecode {

enum Opcode : std::uint8_t {
  PUSHI = 0x01,
  READIN = 0x02,
  EQ = 0x03,
  JZ = 0x04,
  JNZ = 0x05,
  DECODE = 0x06,
  PRINTS = 0x07,
  PRINTLIT = 0x08,
  HALT = 0x09,
};

// Encoded length of an instruction including its opcode byte; 0 if unknown.
std::size_t instruction_length(std::uint8_t opcode);

inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::uint64_t kStepBudget = 1'000'000;
inline constexpr std::string_view kDenied = "access denied";

struct BytecodeProgram {
  crypto::Bytes code;
  crypto::Bytes data;
  std::size_t const_offset = 0;   // blob offset of the guard constant's u32
  std::size_t branch_offset = 0;  // blob offset of the guarding JZ opcode

  crypto::Bytes to_bytes() const;
  vfs::Blob to_blob() const { return vfs::Blob{to_bytes(), vfs::BlobKind::bytecode}; }
};

BytecodeProgram assemble_guard(std::string_view flag, std::uint32_t guard_constant, std::uint64_t seed);

// Throws Error with a distinct code for each failure: bad_magic,
// vm_invalid_opcode, vm_stack_underflow, vm_bad_jump, out_of_range,
// vm_budget_exceeded.
std::string run_vm(const vfs::Blob& program, std::string_view stdin_line,
                   std::uint64_t step_budget = kStepBudget);

}  // namespace rctf::bytecode
