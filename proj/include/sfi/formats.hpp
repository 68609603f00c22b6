#pragma once

#include <string>

#include "sfi/ir.hpp"
#include "sfi/machine.hpp"
#include "sfi/object.hpp"

namespace sfi::text {

inline constexpr int kIrFormatVersion = 1;
inline constexpr int kObjectFormatVersion = 1;
inline constexpr int kLogFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

// Machine instruction, one per line in object files and disassembly.
std::string print_instruction(const Instruction& instr);
Instruction parse_instruction(const std::string& line, std::size_t line_no);

// Line-oriented IR program text. Printing is canonical (components, exports,
// imports, blocks and procedures in id order; hexadecimal words), so
// parse(print(p)) == p.
std::string print_ir(const ir::IRProgram& program);
ir::IRProgram parse_ir(const std::string& source);

// Object files: canonical JSON with a format/version header, the bit
// configuration, per-(component, slot) code and data sections, and the full
// layout metadata. Printing is byte-deterministic.
std::string print_object(const MachineObject& object);
MachineObject parse_object(const std::string& source);

// Execution logs: a version header line, then one event per line.
std::string print_log(const ExecutionLog& log);
ExecutionLog parse_log(const std::string& source);

// Code listing with bundle boundaries, trusted ranges, and entry points
// annotated.
std::string disassemble(const MachineObject& object);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string hex_word(Word w);

}  // namespace sfi::text
