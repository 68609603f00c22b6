#pragma once

#include <string>
#include <vector>

#include "sfi/ir.hpp"
#include "sfi/object.hpp"

namespace sfi::backend {

// Deliberate defects injectable into the emitted code. Used by the fuzz
// harness to prove the checkers can fail; never set in normal compilation.
enum class Mutation : std::uint8_t {
  None,
  WrongStoreMask,   // startup materializes an all-ones store mask
  MissingStoreOr,   // store sequence omits the OR-with-tag instruction
  AlignedEntry,     // entry points placed at bundle-aligned addresses
  NoHaltGuard,      // word before each entry point is Nop instead of Halt
  SkipTagRestore,   // no tag reinstall after a call returns
  CorruptPop,       // return sequence decrements the stack pointer by 2
};

const char* mutation_name(Mutation m);

struct CompileOptions {
  BitConfig cfg;
  Mutation mutation = Mutation::None;
};

// Lowers a validated program to a machine object: data blocks into odd
// slots, each procedure into its own even slot, stores and computed jumps
// wrapped in masking sequences, cross-component calls routed through
// Halt-guarded unaligned entry points and the protected control stack.
// Deterministic. Throws CompileError on invalid input, unsupported
// configuration, too many components, or slot overflow.
MachineObject compile(const ir::IRProgram& program, const BitConfig& cfg = {});
MachineObject compile(const ir::IRProgram& program,
                      const CompileOptions& options);

// Layout metadata only; identical to compile(program, cfg).meta.
LayoutMeta layout(const ir::IRProgram& program, const BitConfig& cfg = {});

// Structural self-check over an emitted object: every store/jump is part of
// an intact masking sequence or a trusted range, trusted sequences do not
// straddle bundles, direct calls target own code or imported entry points,
// and entry points are unaligned with a Halt guard. Checks instruction
// shapes and placement; the values of materialized constants are the
// dynamic checkers' job. Returns a list of problems, empty when clean.
std::vector<std::string> verify_object(const MachineObject& object);

}  // namespace sfi::backend
