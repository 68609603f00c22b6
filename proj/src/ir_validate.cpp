#include <algorithm>
#include <set>

#include "sfi/ir.hpp"

namespace sfi::ir {

const IRComponent* IRProgram::find_component(ComponentId id) const {
  for (const auto& c : components)
    if (c.id == id) return &c;
  return nullptr;
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateComponentId: return "DuplicateComponentId";
    case ErrorKind::ReservedComponentId: return "ReservedComponentId";
    case ErrorKind::MissingMainComponent: return "MissingMainComponent";
    case ErrorKind::MissingMainProcedure: return "MissingMainProcedure";
    case ErrorKind::MainNotExported: return "MainNotExported";
    case ErrorKind::ExportMissingProcedure: return "ExportMissingProcedure";
    case ErrorKind::ImportSelf: return "ImportSelf";
    case ErrorKind::ImportMissingComponent: return "ImportMissingComponent";
    case ErrorKind::ImportNotExported: return "ImportNotExported";
    case ErrorKind::CallNotImported: return "CallNotImported";
    case ErrorKind::CallMissingProcedure: return "CallMissingProcedure";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::UndefinedLabel: return "UndefinedLabel";
    case ErrorKind::BadRegister: return "BadRegister";
    case ErrorKind::BlockTooLarge: return "BlockTooLarge";
    case ErrorKind::BlockInitTooLong: return "BlockInitTooLong";
    case ErrorKind::BadBlockRef: return "BadBlockRef";
    case ErrorKind::BadPointerOffset: return "BadPointerOffset";
  }
  return "?";
}

std::string WellFormednessError::message() const {
  std::string where = "component " + std::to_string(component);
  if (has_location)
    where += " proc " + std::to_string(procedure) + " instr " +
             std::to_string(instr_index);
  std::string msg = std::string(error_kind_name(kind)) + " @ " + where;
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

namespace {

struct Checker {
  const BitConfig& cfg;
  std::vector<WellFormednessError> errors;

  void add(ErrorKind kind, ComponentId c, std::string detail) {
    errors.push_back({kind, c, 0, 0, false, std::move(detail)});
  }
  void add_at(ErrorKind kind, ComponentId c, ProcId p, std::size_t i,
              std::string detail) {
    errors.push_back({kind, c, p, i, true, std::move(detail)});
  }

  void check_register(Reg r, ComponentId c, ProcId p, std::size_t i) {
    if (r >= kAllocatableRegisters)
      add_at(ErrorKind::BadRegister, c, p, i,
             "r" + std::to_string(r) + " is reserved");
  }

  void check_component(const IRProgram& program, const IRComponent& comp) {
    for (const auto& [block_id, block] : comp.data_blocks) {
      if (block.size > cfg.slot_capacity())
        add(ErrorKind::BlockTooLarge, comp.id,
            "block " + std::to_string(block_id));
      if (block.init.size() > block.size)
        add(ErrorKind::BlockInitTooLong, comp.id,
            "block " + std::to_string(block_id));
    }

    for (ProcId p : comp.exports)
      if (!comp.procedures.count(p))
        add(ErrorKind::ExportMissingProcedure, comp.id,
            "proc " + std::to_string(p));

    for (const auto& [target_comp, target_proc] : comp.imports) {
      if (target_comp == comp.id) {
        add(ErrorKind::ImportSelf, comp.id, "proc " + std::to_string(target_proc));
        continue;
      }
      const IRComponent* other = program.find_component(target_comp);
      if (other == nullptr) {
        add(ErrorKind::ImportMissingComponent, comp.id,
            "component " + std::to_string(target_comp));
      } else if (!other->exports.count(target_proc)) {
        add(ErrorKind::ImportNotExported, comp.id,
            "(" + std::to_string(target_comp) + "," +
                std::to_string(target_proc) + ")");
      }
    }

    for (const auto& [proc_id, code] : comp.procedures)
      check_procedure(comp, proc_id, code);
  }

  void check_procedure(const IRComponent& comp, ProcId proc_id,
                       const std::vector<IRInstr>& code) {
    std::set<LabelId> labels;
    for (std::size_t i = 0; i < code.size(); ++i) {
      if (const auto* l = std::get_if<ILabel>(&code[i])) {
        if (!labels.insert(l->label).second)
          add_at(ErrorKind::DuplicateLabel, comp.id, proc_id, i,
                 "L" + std::to_string(l->label));
      }
    }

    auto check_label = [&](LabelId label, std::size_t i) {
      if (!labels.count(label))
        add_at(ErrorKind::UndefinedLabel, comp.id, proc_id, i,
               "L" + std::to_string(label));
    };

    for (std::size_t i = 0; i < code.size(); ++i) {
      const IRInstr& instr = code[i];
      std::visit(
          [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, IConst>) {
              check_register(op.rd, comp.id, proc_id, i);
              if (const auto* d = std::get_if<DataRef>(&op.value)) {
                if (!comp.data_blocks.count(d->block))
                  add_at(ErrorKind::BadBlockRef, comp.id, proc_id, i,
                         "block " + std::to_string(d->block));
                else if (d->offset >= cfg.slot_capacity())
                  add_at(ErrorKind::BadPointerOffset, comp.id, proc_id, i,
                         std::to_string(d->offset));
              } else if (const auto* l = std::get_if<LabelRef>(&op.value)) {
                check_label(l->label, i);
              }
            } else if constexpr (std::is_same_v<T, IMov>) {
              check_register(op.rs, comp.id, proc_id, i);
              check_register(op.rd, comp.id, proc_id, i);
            } else if constexpr (std::is_same_v<T, IBinOp>) {
              check_register(op.rs1, comp.id, proc_id, i);
              check_register(op.rs2, comp.id, proc_id, i);
              check_register(op.rd, comp.id, proc_id, i);
            } else if constexpr (std::is_same_v<T, ILoad>) {
              check_register(op.rp, comp.id, proc_id, i);
              check_register(op.rd, comp.id, proc_id, i);
            } else if constexpr (std::is_same_v<T, IStore>) {
              check_register(op.rp, comp.id, proc_id, i);
              check_register(op.rs, comp.id, proc_id, i);
            } else if constexpr (std::is_same_v<T, IBnz>) {
              check_register(op.rs, comp.id, proc_id, i);
              check_label(op.label, i);
            } else if constexpr (std::is_same_v<T, IJump>) {
              check_register(op.rt, comp.id, proc_id, i);
            } else if constexpr (std::is_same_v<T, IJal>) {
              check_label(op.label, i);
            } else if constexpr (std::is_same_v<T, ICall>) {
              const bool own = op.component == comp.id &&
                               comp.procedures.count(op.procedure) != 0;
              const bool imported =
                  comp.imports.count({op.component, op.procedure}) != 0;
              if (!own && !imported) {
                if (op.component == comp.id)
                  add_at(ErrorKind::CallMissingProcedure, comp.id, proc_id, i,
                         "proc " + std::to_string(op.procedure));
                else
                  add_at(ErrorKind::CallNotImported, comp.id, proc_id, i,
                         "(" + std::to_string(op.component) + "," +
                             std::to_string(op.procedure) + ")");
              }
            }
          },
          instr);
    }
  }
};

}  // namespace

std::vector<WellFormednessError> validate(const IRProgram& program,
                                          const BitConfig& cfg) {
  Checker ck{cfg, {}};

  std::set<ComponentId> seen;
  for (const auto& comp : program.components) {
    if (comp.id == 0) ck.add(ErrorKind::ReservedComponentId, 0, "");
    if (!seen.insert(comp.id).second)
      ck.add(ErrorKind::DuplicateComponentId, comp.id, "");
  }

  const IRComponent* main_comp = program.find_component(program.main.first);
  if (main_comp == nullptr) {
    ck.add(ErrorKind::MissingMainComponent, program.main.first, "");
  } else {
    if (!main_comp->procedures.count(program.main.second))
      ck.add(ErrorKind::MissingMainProcedure, program.main.first,
             "proc " + std::to_string(program.main.second));
    else if (!main_comp->exports.count(program.main.second))
      ck.add(ErrorKind::MainNotExported, program.main.first,
             "proc " + std::to_string(program.main.second));
  }

  for (const auto& comp : program.components) ck.check_component(program, comp);

  return std::move(ck.errors);
}

}  // namespace sfi::ir
