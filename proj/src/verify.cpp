#include <algorithm>
#include <sstream>

#include "sfi/backend.hpp"

namespace sfi::backend {

namespace {

struct Verifier {
  const MachineObject& object;
  const BitConfig& cfg;
  std::vector<std::string> issues;

  void problem(Word addr, const std::string& what) {
    std::ostringstream os;
    os << "0x" << std::hex << addr << ": " << what;
    issues.push_back(os.str());
  }

  bool same_bundle(Word a, Word b) const {
    return a / cfg.bundle_size() == b / cfg.bundle_size();
  }

  const Instruction* word_at(Word addr) const { return object.fetch(addr); }

  template <typename T>
  const T* as(const Instruction* instr) const {
    return instr == nullptr ? nullptr : std::get_if<T>(instr);
  }

  void check_slots() {
    for (const auto& [key, code] : object.code) {
      const auto& [comp, slot] = key;
      if (comp == 0 && slot != 0)
        problem(0, "runtime code outside slot 0");
      if (slot % 2 != 0)
        problem(encode_address(comp, slot, 0, cfg), "code in odd slot");
      if (code.size() > cfg.slot_capacity())
        problem(encode_address(comp, slot, 0, cfg), "code slot over capacity");
      auto len = object.meta.code_lengths.find(key);
      if (len == object.meta.code_lengths.end() || len->second != code.size())
        problem(encode_address(comp, slot, 0, cfg),
                "code_lengths out of sync with code");
    }
    for (const auto& [key, image] : object.data_init) {
      const auto& [comp, slot] = key;
      if (comp == 0)
        problem(0, "runtime data image present");
      if (slot % 2 != 1)
        problem(encode_address(comp, slot, 0, cfg), "data in even slot");
      if (image.size() > cfg.slot_capacity())
        problem(encode_address(comp, slot, 0, cfg), "data slot over capacity");
    }
    for (const auto& [key, place] : object.meta.block_map) {
      if (place.slot % 2 != 1)
        problem(0, "block mapped to even slot");
      if (!object.data_init.count({key.first, place.slot}))
        problem(0, "block mapped to missing data image");
    }
  }

  void check_ranges() {
    const auto& ranges = object.meta.trusted_ranges;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      const TrustedRange& r = ranges[i];
      if (r.end <= r.begin) problem(r.begin, "empty trusted range");
      if (!same_bundle(r.begin, r.end - 1))
        problem(r.begin, "trusted range straddles a bundle");
      if (!object.meta.in_code(r.begin) || !object.meta.in_code(r.end - 1))
        problem(r.begin, "trusted range outside laid-out code");
      for (std::size_t j = i + 1; j < ranges.size(); ++j)
        if (r.begin < ranges[j].end && ranges[j].begin < r.end)
          problem(r.begin, "trusted ranges overlap");
    }
  }

  void check_startup() {
    auto it = object.code.find({0, 0});
    if (it == object.code.end()) {
      problem(0, "missing startup code");
      return;
    }
    const auto& boot = it->second;
    bool shape = boot.size() == 5;
    if (shape) {
      const auto* m0 = std::get_if<Const>(&boot[0]);
      const auto* m1 = std::get_if<Const>(&boot[1]);
      const auto* m2 = std::get_if<Const>(&boot[2]);
      const auto* j = std::get_if<Jal>(&boot[3]);
      shape = m0 && m0->rd == kRegMaskData && m1 && m1->rd == kRegMaskCode &&
              m2 && m2->rd == kRegSpProt &&
              m2->imm == object.meta.protected_stack_base && j &&
              std::holds_alternative<Halt>(boot[4]);
      if (shape) {
        auto main_entry = object.meta.entry_points.find(object.meta.main);
        if (main_entry == object.meta.entry_points.end() ||
            j->target != main_entry->second)
          problem(3, "startup call does not target the main entry point");
        if (object.meta.halt_anchor != 4)
          problem(4, "halt anchor does not name the startup halt");
      }
    }
    if (!shape) problem(0, "startup sequence malformed");
  }

  void check_entries() {
    for (const auto& [key, entry] : object.meta.entry_points) {
      if (bundle_aligned(entry, cfg))
        problem(entry, "entry point is bundle-aligned");
      if (!as<Halt>(word_at(entry - 1)))
        problem(entry, "entry point not preceded by Halt");
      const auto* push = as<Store>(word_at(entry));
      const auto* one = as<Const>(word_at(entry + 1));
      const auto* add = as<BinOp>(word_at(entry + 2));
      const auto* td = as<Const>(word_at(entry + 3));
      const auto* tc = as<Const>(word_at(entry + 4));
      const bool shape =
          push && push->rp == kRegSpProt && push->rs == kRegRa && one &&
          one->rd == kRegSfi && add && add->op == BinaryOp::Add &&
          add->rs1 == kRegSpProt && add->rs2 == kRegSfi &&
          add->rd == kRegSpProt && td && td->rd == kRegTagData && tc &&
          tc->rd == kRegTagCode;
      if (!shape) {
        problem(entry, "entry push sequence malformed");
        continue;
      }
      const TrustedRange* r = object.meta.range_at(entry);
      if (r == nullptr || r->kind != RangeKind::EntryPush ||
          r->begin != entry || r->end != entry + 5)
        problem(entry, "entry push not covered by a trusted range");
      (void)key;
    }
  }

  // Every store must be the tail of an intact AND/OR/Store masking sequence
  // in one bundle, unless it is the trusted entry push.
  void check_store_at(Word addr) {
    const TrustedRange* r = object.meta.range_at(addr);
    if (r != nullptr) {
      if (r->kind != RangeKind::EntryPush)
        problem(addr, "store inside a non-push trusted range");
      return;  // shape checked with the entry sequence
    }
    const auto* st = as<Store>(word_at(addr));
    const auto* band = as<BinOp>(word_at(addr - 2));
    const auto* bor = as<BinOp>(word_at(addr - 1));
    const bool ok = st && st->rp == kRegSfi && band &&
                    band->op == BinaryOp::BitAnd &&
                    band->rs2 == kRegMaskData && band->rd == kRegSfi && bor &&
                    bor->op == BinaryOp::BitOr && bor->rs1 == kRegSfi &&
                    bor->rs2 == kRegTagData && bor->rd == kRegSfi &&
                    same_bundle(addr - 2, addr);
    if (!ok) problem(addr, "store not part of an intact masking sequence");
  }

  // Every computed jump is either the tail of an AND/OR/Jump masking
  // sequence or the tail of a trusted return-pop sequence.
  void check_jump_at(Word addr) {
    const TrustedRange* r = object.meta.range_at(addr);
    if (r != nullptr) {
      if (r->kind != RangeKind::ReturnPop || addr != r->end - 1) {
        problem(addr, "jump inside a trusted range but not a pop tail");
        return;
      }
      const auto* cone = as<Const>(word_at(r->begin));
      const auto* sub = as<BinOp>(word_at(r->begin + 1));
      const auto* pop = as<Load>(word_at(r->begin + 2));
      const auto* jmp = as<Jump>(word_at(r->begin + 3));
      const bool ok = r->end - r->begin == 4 && cone &&
                      cone->rd == kRegSfi && sub &&
                      sub->op == BinaryOp::Sub && sub->rs1 == kRegSpProt &&
                      sub->rs2 == kRegSfi && sub->rd == kRegSpProt && pop &&
                      pop->rp == kRegSpProt && pop->rd == kRegSfi && jmp &&
                      jmp->rt == kRegSfi;
      if (!ok) problem(addr, "return pop sequence malformed");
      return;
    }
    const auto* jmp = as<Jump>(word_at(addr));
    const auto* band = as<BinOp>(word_at(addr - 2));
    const auto* bor = as<BinOp>(word_at(addr - 1));
    const bool ok = jmp && jmp->rt == kRegSfi && band &&
                    band->op == BinaryOp::BitAnd &&
                    band->rs2 == kRegMaskCode && band->rd == kRegSfi && bor &&
                    bor->op == BinaryOp::BitOr && bor->rs1 == kRegSfi &&
                    bor->rs2 == kRegTagCode && bor->rd == kRegSfi &&
                    same_bundle(addr - 2, addr);
    if (!ok) problem(addr, "jump not part of an intact masking sequence");
  }

  void check_jal_at(Word addr, const Jal& jal, ComponentId comp) {
    const TrustedRange* r = object.meta.range_at(addr);
    if (r != nullptr && r->kind == RangeKind::Startup) {
      auto main_entry = object.meta.entry_points.find(object.meta.main);
      if (main_entry == object.meta.entry_points.end() ||
          jal.target != main_entry->second)
        problem(addr, "startup call leaves the main entry point");
      return;
    }
    const Address t = decode_address(jal.target, cfg);
    if (t.component == comp && object.meta.in_code(jal.target)) return;
    const auto* entry = object.meta.entry_at(jal.target);
    if (entry != nullptr) {
      auto imports = object.meta.imports.find(comp);
      if (imports != object.meta.imports.end() &&
          imports->second.count(*entry))
        return;
    }
    problem(addr, "direct call to neither own code nor an imported entry");
  }

  void check_code_words() {
    for (const auto& [key, code] : object.code) {
      const auto& [comp, slot] = key;
      const Word base = encode_address(comp, slot, 0, cfg);
      for (Word i = 0; i < code.size(); ++i) {
        const Word addr = base + i;
        if (std::holds_alternative<Store>(code[i])) check_store_at(addr);
        else if (std::holds_alternative<Jump>(code[i])) check_jump_at(addr);
        else if (const auto* j = std::get_if<Jal>(&code[i]))
          check_jal_at(addr, *j, comp);
      }
    }
  }

  std::vector<std::string> go() {
    check_slots();
    check_ranges();
    check_startup();
    check_entries();
    check_code_words();
    return std::move(issues);
  }
};

}  // namespace

std::vector<std::string> verify_object(const MachineObject& object) {
  Verifier v{object, object.cfg, {}};
  return v.go();
}

}  // namespace sfi::backend
