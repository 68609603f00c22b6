#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "sfi/formats.hpp"

namespace sfi::text {

std::string hex_word(Word w) {
  std::ostringstream os;
  os << "0x" << std::hex << w;
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') break;  // comment to end of line
    tokens.push_back(tok);
  }
  return tokens;
}

Word parse_word(const std::string& tok, std::size_t line_no) {
  Word value = 0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  std::from_chars_result r{};
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X'))
    r = std::from_chars(begin + 2, end, value, 16);
  else if (!tok.empty() && tok[0] == '-') {
    std::int64_t sv = 0;
    r = std::from_chars(begin, end, sv, 10);
    value = static_cast<Word>(sv);
  } else
    r = std::from_chars(begin, end, value, 10);
  if (r.ec != std::errc{} || r.ptr != end)
    throw ParseError(line_no, "bad number '" + tok + "'");
  return value;
}

std::int64_t parse_signed(const std::string& tok, std::size_t line_no) {
  std::int64_t value = 0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), value, 10);
  if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
    throw ParseError(line_no, "bad offset '" + tok + "'");
  return value;
}

Reg parse_reg(const std::string& tok, std::size_t line_no, Reg limit) {
  if (tok.size() < 2 || tok[0] != 'r')
    throw ParseError(line_no, "bad register '" + tok + "'");
  const Word n = parse_word(tok.substr(1), line_no);
  if (n >= limit)
    throw ParseError(line_no, "register out of range '" + tok + "'");
  return static_cast<Reg>(n);
}

LabelId parse_label(const std::string& tok, std::size_t line_no) {
  if (tok.size() < 2 || tok[0] != 'L')
    throw ParseError(line_no, "bad label '" + tok + "'");
  return static_cast<LabelId>(parse_word(tok.substr(1), line_no));
}

std::string reg_name(Reg r) { return "r" + std::to_string(r); }
std::string label_name(LabelId l) { return "L" + std::to_string(l); }

std::optional<BinaryOp> binop_from_name(const std::string& name) {
  if (name == "add") return BinaryOp::Add;
  if (name == "sub") return BinaryOp::Sub;
  if (name == "mul") return BinaryOp::Mul;
  if (name == "eq") return BinaryOp::Eq;
  if (name == "leq") return BinaryOp::Leq;
  if (name == "and") return BinaryOp::BitAnd;
  if (name == "or") return BinaryOp::BitOr;
  if (name == "shl") return BinaryOp::ShiftLeft;
  return std::nullopt;
}

void expect_arity(const std::vector<std::string>& tokens, std::size_t n,
                  std::size_t line_no) {
  if (tokens.size() != n)
    throw ParseError(line_no, "'" + tokens[0] + "' expects " +
                                  std::to_string(n - 1) + " operands");
}

}  // namespace

std::string print_instruction(const Instruction& instr) {
  return std::visit(
      [](const auto& op) -> std::string {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, Nop>) return "nop";
        else if constexpr (std::is_same_v<T, Const>)
          return "const " + hex_word(op.imm) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, Mov>)
          return "mov " + reg_name(op.rs) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, BinOp>)
          return std::string(binary_op_name(op.op)) + " " + reg_name(op.rs1) +
                 " " + reg_name(op.rs2) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, Load>)
          return "load " + reg_name(op.rp) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, Store>)
          return "store " + reg_name(op.rp) + " " + reg_name(op.rs);
        else if constexpr (std::is_same_v<T, Bnz>)
          return "bnz " + reg_name(op.rs) + " " + std::to_string(op.rel);
        else if constexpr (std::is_same_v<T, Jump>)
          return "jump " + reg_name(op.rt);
        else if constexpr (std::is_same_v<T, Jal>)
          return "jal " + hex_word(op.target);
        else
          return "halt";
      },
      instr);
}

Instruction parse_instruction(const std::string& line, std::size_t line_no) {
  const auto tokens = tokenize(line);
  if (tokens.empty()) throw ParseError(line_no, "empty instruction");
  const std::string& op = tokens[0];
  const Reg limit = kNumRegisters;

  if (op == "nop") {
    expect_arity(tokens, 1, line_no);
    return Nop{};
  }
  if (op == "halt") {
    expect_arity(tokens, 1, line_no);
    return Halt{};
  }
  if (op == "const") {
    expect_arity(tokens, 3, line_no);
    return Const{parse_word(tokens[1], line_no),
                 parse_reg(tokens[2], line_no, limit)};
  }
  if (op == "mov") {
    expect_arity(tokens, 3, line_no);
    return Mov{parse_reg(tokens[1], line_no, limit),
               parse_reg(tokens[2], line_no, limit)};
  }
  if (auto bop = binop_from_name(op)) {
    expect_arity(tokens, 4, line_no);
    return BinOp{*bop, parse_reg(tokens[1], line_no, limit),
                 parse_reg(tokens[2], line_no, limit),
                 parse_reg(tokens[3], line_no, limit)};
  }
  if (op == "load") {
    expect_arity(tokens, 3, line_no);
    return Load{parse_reg(tokens[1], line_no, limit),
                parse_reg(tokens[2], line_no, limit)};
  }
  if (op == "store") {
    expect_arity(tokens, 3, line_no);
    return Store{parse_reg(tokens[1], line_no, limit),
                 parse_reg(tokens[2], line_no, limit)};
  }
  if (op == "bnz") {
    expect_arity(tokens, 3, line_no);
    return Bnz{parse_reg(tokens[1], line_no, limit),
               parse_signed(tokens[2], line_no)};
  }
  if (op == "jump") {
    expect_arity(tokens, 2, line_no);
    return Jump{parse_reg(tokens[1], line_no, limit)};
  }
  if (op == "jal") {
    expect_arity(tokens, 2, line_no);
    return Jal{parse_word(tokens[1], line_no)};
  }
  throw ParseError(line_no, "unknown instruction '" + op + "'");
}

namespace {

std::string print_ir_instr(const ir::IRInstr& instr) {
  using namespace ir;
  return std::visit(
      [](const auto& op) -> std::string {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, INop>) return "nop";
        else if constexpr (std::is_same_v<T, IConst>) {
          std::string value;
          if (const auto* i = std::get_if<IntLit>(&op.value))
            value = hex_word(i->value);
          else if (const auto* d = std::get_if<DataRef>(&op.value))
            value = "ptr " + std::to_string(d->block) + " " +
                    std::to_string(d->offset);
          else
            value = "label " + label_name(std::get<LabelRef>(op.value).label);
          return "const " + value + " " + reg_name(op.rd);
        } else if constexpr (std::is_same_v<T, IMov>)
          return "mov " + reg_name(op.rs) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, IBinOp>)
          return std::string(binary_op_name(op.op)) + " " + reg_name(op.rs1) +
                 " " + reg_name(op.rs2) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, ILoad>)
          return "load " + reg_name(op.rp) + " " + reg_name(op.rd);
        else if constexpr (std::is_same_v<T, IStore>)
          return "store " + reg_name(op.rp) + " " + reg_name(op.rs);
        else if constexpr (std::is_same_v<T, IBnz>)
          return "bnz " + reg_name(op.rs) + " " + label_name(op.label);
        else if constexpr (std::is_same_v<T, IJump>)
          return "jump " + reg_name(op.rt);
        else if constexpr (std::is_same_v<T, IJal>)
          return "jal " + label_name(op.label);
        else if constexpr (std::is_same_v<T, ICall>)
          return "call " + std::to_string(op.component) + " " +
                 std::to_string(op.procedure);
        else if constexpr (std::is_same_v<T, IReturn>)
          return "return";
        else if constexpr (std::is_same_v<T, IHalt>)
          return "halt";
        else
          return "label " + label_name(op.label);
      },
      instr);
}

ir::IRInstr parse_ir_instr(const std::vector<std::string>& tokens,
                           std::size_t line_no) {
  using namespace ir;
  const std::string& op = tokens[0];
  const Reg limit = kAllocatableRegisters;

  if (op == "nop") {
    expect_arity(tokens, 1, line_no);
    return INop{};
  }
  if (op == "halt") {
    expect_arity(tokens, 1, line_no);
    return IHalt{};
  }
  if (op == "return") {
    expect_arity(tokens, 1, line_no);
    return IReturn{};
  }
  if (op == "const") {
    if (tokens.size() == 3)
      return IConst{IntLit{parse_word(tokens[1], line_no)},
                    parse_reg(tokens[2], line_no, limit)};
    if (tokens.size() == 5 && tokens[1] == "ptr")
      return IConst{DataRef{static_cast<BlockId>(parse_word(tokens[2], line_no)),
                            parse_word(tokens[3], line_no)},
                    parse_reg(tokens[4], line_no, limit)};
    if (tokens.size() == 4 && tokens[1] == "label")
      return IConst{LabelRef{parse_label(tokens[2], line_no)},
                    parse_reg(tokens[3], line_no, limit)};
    throw ParseError(line_no, "malformed const");
  }
  if (op == "mov") {
    expect_arity(tokens, 3, line_no);
    return IMov{parse_reg(tokens[1], line_no, limit),
                parse_reg(tokens[2], line_no, limit)};
  }
  if (auto bop = binop_from_name(op)) {
    expect_arity(tokens, 4, line_no);
    return IBinOp{*bop, parse_reg(tokens[1], line_no, limit),
                  parse_reg(tokens[2], line_no, limit),
                  parse_reg(tokens[3], line_no, limit)};
  }
  if (op == "load") {
    expect_arity(tokens, 3, line_no);
    return ILoad{parse_reg(tokens[1], line_no, limit),
                 parse_reg(tokens[2], line_no, limit)};
  }
  if (op == "store") {
    expect_arity(tokens, 3, line_no);
    return IStore{parse_reg(tokens[1], line_no, limit),
                  parse_reg(tokens[2], line_no, limit)};
  }
  if (op == "bnz") {
    expect_arity(tokens, 3, line_no);
    return IBnz{parse_reg(tokens[1], line_no, limit),
                parse_label(tokens[2], line_no)};
  }
  if (op == "jump") {
    expect_arity(tokens, 2, line_no);
    return IJump{parse_reg(tokens[1], line_no, limit)};
  }
  if (op == "jal") {
    expect_arity(tokens, 2, line_no);
    return IJal{parse_label(tokens[1], line_no)};
  }
  if (op == "call") {
    expect_arity(tokens, 3, line_no);
    return ICall{static_cast<ComponentId>(parse_word(tokens[1], line_no)),
                 static_cast<ProcId>(parse_word(tokens[2], line_no))};
  }
  if (op == "label") {
    expect_arity(tokens, 2, line_no);
    return ILabel{parse_label(tokens[1], line_no)};
  }
  throw ParseError(line_no, "unknown instruction '" + op + "'");
}

}  // namespace

std::string print_ir(const ir::IRProgram& program) {
  std::ostringstream os;
  os << "sfi-ir " << kIrFormatVersion << "\n";
  os << "main " << program.main.first << " " << program.main.second << "\n";
  for (const auto& comp : program.components) {
    os << "\ncomponent " << comp.id << "\n";
    for (ProcId p : comp.exports) os << "export " << p << "\n";
    for (const auto& [c, p] : comp.imports)
      os << "import " << c << " " << p << "\n";
    for (const auto& [b, block] : comp.data_blocks) {
      os << "block " << b << " size " << block.size;
      if (!block.init.empty()) {
        os << " init";
        for (Word w : block.init) os << " " << hex_word(w);
      }
      os << "\n";
    }
    for (const auto& [p, body] : comp.procedures) {
      os << "proc " << p << "\n";
      for (const auto& instr : body) os << "  " << print_ir_instr(instr) << "\n";
      os << "end\n";
    }
  }
  return os.str();
}

// Grammar (line oriented; '#' starts a comment; blank lines ignored):
//
//   program    := "sfi-ir" version NL "main" comp proc NL component*
//   component  := "component" comp NL clause*
//   clause     := "export" proc
//              |  "import" comp proc
//              |  "block" block "size" words ["init" word*]
//              |  "proc" proc NL instr* "end"
//   instr      := "nop" | "halt" | "return"
//              |  "const" (word | "ptr" block offset | "label" label) reg
//              |  "mov" reg reg | binop reg reg reg
//              |  "load" reg reg | "store" reg reg
//              |  "bnz" reg label | "jump" reg | "jal" label
//              |  "call" comp proc | "label" label
//   binop      := "add" | "sub" | "mul" | "eq" | "leq" | "and" | "or" | "shl"
//   reg        := "r" int        (allocatable registers only, r0..r24)
//   label      := "L" int
//   word       := decimal or 0x-hexadecimal integer
ir::IRProgram parse_ir(const std::string& source) {
  ir::IRProgram program;
  ir::IRComponent* comp = nullptr;
  std::vector<ir::IRInstr>* body = nullptr;

  std::istringstream is(source);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false, saw_main = false;

  while (std::getline(is, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    const std::string& head = tokens[0];

    if (!saw_header) {
      if (head != "sfi-ir" || tokens.size() != 2)
        throw ParseError(line_no, "expected 'sfi-ir <version>' header");
      if (parse_word(tokens[1], line_no) != kIrFormatVersion)
        throw FormatError("unsupported ir format version " + tokens[1]);
      saw_header = true;
      continue;
    }
    if (head == "main") {
      expect_arity(tokens, 3, line_no);
      program.main = {static_cast<ComponentId>(parse_word(tokens[1], line_no)),
                      static_cast<ProcId>(parse_word(tokens[2], line_no))};
      saw_main = true;
      continue;
    }
    if (head == "component") {
      if (body != nullptr)
        throw ParseError(line_no, "component inside an open proc");
      expect_arity(tokens, 2, line_no);
      program.components.emplace_back();
      comp = &program.components.back();
      comp->id = static_cast<ComponentId>(parse_word(tokens[1], line_no));
      continue;
    }
    if (comp == nullptr)
      throw ParseError(line_no, "'" + head + "' outside a component");

    if (body != nullptr) {
      if (head == "end") {
        body = nullptr;
        continue;
      }
      body->push_back(parse_ir_instr(tokens, line_no));
      continue;
    }
    if (head == "export") {
      expect_arity(tokens, 2, line_no);
      comp->exports.insert(static_cast<ProcId>(parse_word(tokens[1], line_no)));
    } else if (head == "import") {
      expect_arity(tokens, 3, line_no);
      comp->imports.insert(
          {static_cast<ComponentId>(parse_word(tokens[1], line_no)),
           static_cast<ProcId>(parse_word(tokens[2], line_no))});
    } else if (head == "block") {
      if (tokens.size() < 4 || tokens[2] != "size")
        throw ParseError(line_no, "malformed block declaration");
      ir::DataBlock block;
      const auto id = static_cast<BlockId>(parse_word(tokens[1], line_no));
      block.size = parse_word(tokens[3], line_no);
      if (tokens.size() > 4) {
        if (tokens[4] != "init")
          throw ParseError(line_no, "malformed block declaration");
        for (std::size_t i = 5; i < tokens.size(); ++i)
          block.init.push_back(parse_word(tokens[i], line_no));
      }
      comp->data_blocks[id] = std::move(block);
    } else if (head == "proc") {
      expect_arity(tokens, 2, line_no);
      const auto id = static_cast<ProcId>(parse_word(tokens[1], line_no));
      body = &comp->procedures[id];
    } else {
      throw ParseError(line_no, "unknown directive '" + head + "'");
    }
  }
  if (!saw_header) throw ParseError(1, "missing 'sfi-ir' header");
  if (!saw_main) throw ParseError(line_no, "missing 'main' directive");
  if (body != nullptr) throw ParseError(line_no, "unterminated proc");
  return program;
}

std::string print_log(const ExecutionLog& log) {
  std::ostringstream os;
  os << "sfi-log " << kLogFormatVersion << "\n";
  for (const auto& event : log) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, StoreEvent>)
            os << "store step=" << e.step << " pc=" << hex_word(e.pc)
               << " target=" << hex_word(e.target)
               << " value=" << hex_word(e.value);
          else if constexpr (std::is_same_v<T, TransferEvent>)
            os << "xfer step=" << e.step << " pc=" << hex_word(e.pc)
               << " target=" << hex_word(e.target)
               << " kind=" << transfer_kind_name(e.kind)
               << " arg=" << hex_word(e.arg);
          else if constexpr (std::is_same_v<T, HaltEvent>)
            os << "halt step=" << e.step << " pc=" << hex_word(e.pc);
          else
            os << "inject step=" << e.step << " target=" << hex_word(e.target)
               << " value=" << hex_word(e.value);
        },
        event);
    os << "\n";
  }
  return os.str();
}

namespace {

Word field(const std::vector<std::string>& tokens, std::size_t index,
           const char* name, std::size_t line_no) {
  const std::string prefix = std::string(name) + "=";
  if (index >= tokens.size() || tokens[index].rfind(prefix, 0) != 0)
    throw ParseError(line_no, std::string("expected field ") + name);
  return parse_word(tokens[index].substr(prefix.size()), line_no);
}

}  // namespace

ExecutionLog parse_log(const std::string& source) {
  ExecutionLog log;
  std::istringstream is(source);
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;

  while (std::getline(is, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (!saw_header) {
      if (tokens[0] != "sfi-log" || tokens.size() != 2)
        throw ParseError(line_no, "expected 'sfi-log <version>' header");
      if (parse_word(tokens[1], line_no) != kLogFormatVersion)
        throw FormatError("unsupported log format version " + tokens[1]);
      saw_header = true;
      continue;
    }
    const std::string& kind = tokens[0];
    if (kind == "store") {
      log.push_back(StoreEvent{field(tokens, 1, "step", line_no),
                               field(tokens, 2, "pc", line_no),
                               field(tokens, 3, "target", line_no),
                               field(tokens, 4, "value", line_no)});
    } else if (kind == "xfer") {
      TransferEvent e{field(tokens, 1, "step", line_no),
                      field(tokens, 2, "pc", line_no),
                      field(tokens, 3, "target", line_no),
                      TransferKind::JumpReg,
                      field(tokens, 5, "arg", line_no)};
      if (tokens.size() <= 4 || tokens[4].rfind("kind=", 0) != 0)
        throw ParseError(line_no, "expected field kind");
      const std::string k = tokens[4].substr(5);
      if (k == "jmp") e.kind = TransferKind::JumpReg;
      else if (k == "jal") e.kind = TransferKind::JalDirect;
      else if (k == "bnz") e.kind = TransferKind::BnzTaken;
      else throw ParseError(line_no, "unknown transfer kind '" + k + "'");
      log.push_back(e);
    } else if (kind == "halt") {
      log.push_back(HaltEvent{field(tokens, 1, "step", line_no),
                              field(tokens, 2, "pc", line_no)});
    } else if (kind == "inject") {
      log.push_back(InjectEvent{field(tokens, 1, "step", line_no),
                                field(tokens, 2, "target", line_no),
                                field(tokens, 3, "value", line_no)});
    } else {
      throw ParseError(line_no, "unknown event '" + kind + "'");
    }
  }
  if (!saw_header) throw ParseError(1, "missing 'sfi-log' header");
  return log;
}

}  // namespace sfi::text
