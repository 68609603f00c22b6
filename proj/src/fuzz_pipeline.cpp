#include <algorithm>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sfi/formats.hpp"
#include "sfi/fuzz.hpp"

namespace sfi::fuzz {

ir::Trace derive_trace(const ExecutionLog& log, const LayoutMeta& meta) {
  const BitConfig& cfg = meta.cfg;
  std::map<Word, std::pair<ComponentId, ProcId>> entries;
  for (const auto& [key, addr] : meta.entry_points) entries[addr] = key;

  ir::Trace trace;
  for (const auto& event : log) {
    const auto* ev = std::get_if<TransferEvent>(&event);
    if (ev == nullptr) continue;
    if (!meta.in_code(ev->pc))
      throw MetaMismatch("log pc not covered by the object's code map");
    const auto from =
        static_cast<ComponentId>(decode_address(ev->pc, cfg).component);

    if (ev->kind == TransferKind::JalDirect) {
      auto entry = entries.find(ev->target);
      if (entry == entries.end()) continue;
      const auto [callee, proc] = entry->second;
      if (from == 0 || callee == 0 || from == callee) continue;
      trace.push_back(ir::CallEvent{from, proc, ev->arg, callee});
    } else if (ev->kind == TransferKind::JumpReg) {
      const TrustedRange* range = meta.range_at(ev->pc);
      if (range == nullptr || range->kind != RangeKind::ReturnPop) continue;
      const auto to =
          static_cast<ComponentId>(decode_address(ev->target, cfg).component);
      if (from == 0 || to == 0 || from == to) continue;
      trace.push_back(ir::RetEvent{from, ev->arg, to});
    }
  }
  return trace;
}

namespace {

bool is_prefix(const ir::Trace& a, const ir::Trace& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

bool TestOutcome::clean(GenMode mode) const {
  if (discarded || !selfcheck.empty() || !verdicts.pass()) return false;
  if (mode == GenMode::WellBehaved)
    return !trace_mismatch && !ub && run_status != RunStatus::Stuck;
  return true;
}

TestOutcome run_single(const ir::IRProgram& program, GenMode mode, Word fuel,
                       backend::Mutation mutation) {
  TestOutcome outcome;
  auto errors = ir::validate(program);
  if (!errors.empty()) {
    outcome.discarded = true;
    outcome.detail = errors.front().message();
    return outcome;
  }

  const MachineObject object =
      backend::compile(program, backend::CompileOptions{{}, mutation});
  outcome.selfcheck = backend::verify_object(object);

  const RunOutcome out = run(object, fuel);
  outcome.run_status = out.status;
  outcome.verdicts = checkers::check_all(out.log, object.meta);

  if (mode == GenMode::WellBehaved) {
    const ir::IROutcome ir_out = ir::interpret(program, fuel);
    if (ir_out.status == ir::IRStatus::UndefinedBehavior) {
      outcome.ub = true;
      outcome.detail = "ir reached undefined behavior: " + ir_out.ub_reason;
      return outcome;
    }
    const ir::Trace machine_trace = derive_trace(out.log, object.meta);
    const bool both_halted = out.status == RunStatus::Halted &&
                             ir_out.status == ir::IRStatus::Halted;
    const bool agree = both_halted
                           ? machine_trace == ir_out.trace
                           : is_prefix(machine_trace, ir_out.trace) ||
                                 is_prefix(ir_out.trace, machine_trace);
    if (!agree) {
      outcome.trace_mismatch = true;
      outcome.detail = "trace mismatch: ir " +
                       std::to_string(ir_out.trace.size()) +
                       " events, machine " +
                       std::to_string(machine_trace.size()) + " events";
    }
    if (out.status == RunStatus::Stuck)
      outcome.detail = "well-behaved program got stuck in the simulator";
  }
  return outcome;
}

namespace {

std::string repro_command(const GenConfig& cfg, std::uint64_t seed,
                          std::uint32_t flips) {
  std::ostringstream os;
  os << "sfic " << (flips > 0 ? "attack" : "fuzz") << " --tests 1 --seed "
     << seed << " --mode " << gen_mode_name(cfg.mode) << " --fuel " << cfg.fuel;
  if (flips > 0) os << " --flips " << flips;
  return os.str();
}

struct Tally {
  FuzzReport& report;
  const GenConfig& cfg;
  std::uint32_t flips;

  void account(const TestOutcome& outcome, std::uint64_t index,
               std::uint64_t seed, const ir::IRProgram& program) {
    if (outcome.discarded) report.discards += 1;
    if (!outcome.selfcheck.empty()) report.selfcheck_failures += 1;
    switch (outcome.run_status) {
      case RunStatus::Halted: report.halted += 1; break;
      case RunStatus::OutOfFuel: report.out_of_fuel += 1; break;
      case RunStatus::Stuck:
        report.stuck += 1;
        if (cfg.mode == GenMode::WellBehaved && !outcome.discarded)
          report.wb_stuck += 1;
        break;
    }
    report.violations[0] += outcome.verdicts.store.violations.size();
    report.violations[1] += outcome.verdicts.jump.violations.size();
    report.violations[2] += outcome.verdicts.stack.violations.size();
    if (outcome.trace_mismatch) report.trace_mismatches += 1;
    if (outcome.ub) report.ub_runs += 1;

    if (outcome.clean(cfg.mode)) return;
    Failure failure;
    failure.test_index = index;
    failure.seed = seed;
    failure.kind = outcome.discarded          ? "discard"
                   : !outcome.selfcheck.empty() ? "selfcheck"
                   : !outcome.verdicts.pass()   ? "invariant"
                   : outcome.ub                 ? "ub"
                   : outcome.trace_mismatch     ? "trace"
                                                : "stuck";
    failure.detail = outcome.detail;
    if (failure.detail.empty()) {
      for (const auto* verdict :
           {&outcome.verdicts.store, &outcome.verdicts.jump,
            &outcome.verdicts.stack})
        if (!verdict->violations.empty()) {
          failure.detail = verdict->violations.front().detail;
          break;
        }
      for (const auto& issue : outcome.selfcheck) {
        failure.detail = issue;
        break;
      }
    }
    failure.repro = repro_command(cfg, seed, flips);
    // Shrinking re-runs the pipeline per candidate; keep it to a few.
    if (report.failures.size() < 3 && flips == 0) {
      const GenMode mode = cfg.mode;
      const Word fuel = cfg.fuel;
      try {
        const ir::IRProgram reduced =
            shrink(program, [mode, fuel](const ir::IRProgram& candidate) {
              return !run_single(candidate, mode, fuel).clean(mode);
            });
        failure.shrunk_ir = text::print_ir(reduced);
      } catch (const Error&) {
        // Not reproducible under re-run; report the failure unreduced.
      }
    }
    if (report.failures.size() < 10) report.failures.push_back(failure);
  }
};

}  // namespace

FuzzReport run_pipeline(const GenConfig& cfg, std::uint64_t tests) {
  FuzzReport report;
  report.mode = cfg.mode;
  report.tests = tests;
  Tally tally{report, cfg, 0};

  for (std::uint64_t i = 0; i < tests; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    GenConfig test_cfg = cfg;
    test_cfg.seed = seed;
    const ir::IRProgram program = gen_program(test_cfg);
    const TestOutcome outcome = run_single(program, cfg.mode, cfg.fuel);
    tally.account(outcome, i, seed, program);
  }
  return report;
}

FuzzReport inject_attack(const GenConfig& cfg, std::uint32_t flips,
                         std::uint64_t tests) {
  if (flips < 1) throw std::invalid_argument("flips must be >= 1");
  FuzzReport report;
  report.mode = cfg.mode;
  report.tests = tests;
  Tally tally{report, cfg, flips};

  for (std::uint64_t i = 0; i < tests; ++i) {
    const std::uint64_t seed = cfg.seed + i;
    GenConfig test_cfg = cfg;
    test_cfg.seed = seed;
    const ir::IRProgram program = gen_program(test_cfg);

    TestOutcome outcome;
    auto errors = ir::validate(program);
    if (!errors.empty()) {
      outcome.discarded = true;
      outcome.detail = errors.front().message();
      tally.account(outcome, i, seed, program);
      continue;
    }
    const MachineObject object = backend::compile(program);
    outcome.selfcheck = backend::verify_object(object);

    // A separate deterministic stream decides where corruption strikes.
    std::mt19937_64 attack_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::tuple<ComponentId, Word, Word>> inventory;
    for (const auto& [key, image] : object.data_init)
      if (key.first != 0 && !image.empty())
        inventory.emplace_back(key.first, key.second, image.size());

    InjectionSchedule schedule;
    for (std::uint32_t f = 0; f < flips && !inventory.empty(); ++f) {
      const auto& [comp, slot, len] = inventory[attack_rng() % inventory.size()];
      const Word step = attack_rng() % cfg.fuel;
      const Word offset = attack_rng() % len;
      const Word value = attack_rng();
      schedule.add(step, encode_address(comp, slot, offset, object.cfg), value,
                   object.cfg);
      report.flips_requested += 1;
    }

    const RunOutcome out = run(object, cfg.fuel, &schedule);
    outcome.run_status = out.status;
    outcome.verdicts = checkers::check_all(out.log, object.meta);
    for (const auto& event : out.log)
      if (std::holds_alternative<InjectEvent>(event)) report.flips_applied += 1;

    tally.account(outcome, i, seed, program);
  }
  return report;
}

ir::IRProgram shrink(
    const ir::IRProgram& program,
    const std::function<bool(const ir::IRProgram&)>& still_fails) {
  if (!still_fails(program))
    throw Error("shrink requires a program whose pipeline run fails");

  ir::IRProgram current = program;
  auto accept = [&](ir::IRProgram candidate) {
    if (!ir::validate(candidate).empty()) return false;
    if (!still_fails(candidate)) return false;
    current = std::move(candidate);
    return true;
  };
  auto index_of = [&](ComponentId id) {
    for (std::size_t i = 0; i < current.components.size(); ++i)
      if (current.components[i].id == id) return i;
    return current.components.size();
  };

  bool progress = true;
  int passes = 0;
  while (progress && passes++ < 8) {
    progress = false;

    // Whole components, with the imports that point at them.
    std::vector<ComponentId> component_ids;
    for (const auto& comp : current.components) component_ids.push_back(comp.id);
    for (ComponentId victim : component_ids) {
      if (victim == current.main.first) continue;
      ir::IRProgram candidate = current;
      candidate.components.erase(candidate.components.begin() +
                                 static_cast<std::ptrdiff_t>(index_of(victim)));
      for (auto& comp : candidate.components)
        std::erase_if(comp.imports,
                      [&](const auto& im) { return im.first == victim; });
      progress |= accept(std::move(candidate));
    }

    // Procedures, with their export entries and importers.
    component_ids.clear();
    for (const auto& comp : current.components) component_ids.push_back(comp.id);
    for (ComponentId owner : component_ids) {
      const std::size_t ci = index_of(owner);
      if (ci == current.components.size()) continue;
      std::vector<ProcId> procs;
      for (const auto& [p, body] : current.components[ci].procedures) {
        (void)body;
        procs.push_back(p);
      }
      for (ProcId proc_id : procs) {
        if (owner == current.main.first && proc_id == current.main.second)
          continue;
        ir::IRProgram candidate = current;
        auto& target = candidate.components[index_of(owner)];
        target.procedures.erase(proc_id);
        target.exports.erase(proc_id);
        for (auto& other : candidate.components)
          other.imports.erase({owner, proc_id});
        progress |= accept(std::move(candidate));
      }
    }

    // Data blocks.
    for (std::size_t ci = 0; ci < current.components.size(); ++ci) {
      std::vector<BlockId> blocks;
      for (const auto& [b, block] : current.components[ci].data_blocks) {
        (void)block;
        blocks.push_back(b);
      }
      for (BlockId b : blocks) {
        ir::IRProgram candidate = current;
        candidate.components[ci].data_blocks.erase(b);
        progress |= accept(std::move(candidate));
      }
    }

    // Individual instructions, scanned from the back so earlier indices
    // stay meaningful after a removal.
    for (std::size_t ci = 0; ci < current.components.size(); ++ci) {
      std::vector<ProcId> procs;
      for (const auto& [p, body] : current.components[ci].procedures) {
        (void)body;
        procs.push_back(p);
      }
      for (ProcId proc_id : procs) {
        for (std::size_t k = current.components[ci].procedures[proc_id].size();
             k-- > 0;) {
          ir::IRProgram candidate = current;
          auto& code = candidate.components[ci].procedures[proc_id];
          code.erase(code.begin() + static_cast<std::ptrdiff_t>(k));
          progress |= accept(std::move(candidate));
        }
      }
    }

    // Constants toward zero.
    for (std::size_t ci = 0; ci < current.components.size(); ++ci) {
      std::vector<ProcId> procs;
      for (const auto& [p, body] : current.components[ci].procedures) {
        (void)body;
        procs.push_back(p);
      }
      for (ProcId proc_id : procs) {
        for (std::size_t k = 0;
             k < current.components[ci].procedures[proc_id].size(); ++k) {
          const auto& instr_now = current.components[ci].procedures[proc_id][k];
          const auto* konst = std::get_if<ir::IConst>(&instr_now);
          if (konst == nullptr) continue;
          const auto* lit = std::get_if<ir::IntLit>(&konst->value);
          if (lit == nullptr || lit->value == 0) continue;
          ir::IRProgram candidate = current;
          auto& instr = candidate.components[ci].procedures[proc_id][k];
          std::get<ir::IConst>(instr).value = ir::IntLit{0};
          progress |= accept(std::move(candidate));
        }
      }
    }
  }
  return current;
}

std::vector<MutationOutcome> run_mutation_suite(const GenConfig& cfg,
                                                std::uint64_t max_tests) {
  static constexpr backend::Mutation kMutations[] = {
      backend::Mutation::WrongStoreMask, backend::Mutation::MissingStoreOr,
      backend::Mutation::AlignedEntry,   backend::Mutation::NoHaltGuard,
      backend::Mutation::SkipTagRestore, backend::Mutation::CorruptPop};

  std::vector<MutationOutcome> results;
  for (backend::Mutation m : kMutations) {
    MutationOutcome mo;
    mo.mutation = m;
    for (std::uint64_t i = 0; i < max_tests; ++i) {
      GenConfig test_cfg = cfg;
      test_cfg.mode = GenMode::Wild;
      test_cfg.seed = cfg.seed + i;
      const ir::IRProgram program = gen_program(test_cfg);
      const TestOutcome outcome =
          run_single(program, GenMode::Wild, cfg.fuel, m);
      mo.tests_used = i + 1;
      if (!outcome.selfcheck.empty()) mo.by_static = true;
      if (!outcome.verdicts.store.pass()) mo.by_invariant = 1;
      else if (!outcome.verdicts.jump.pass()) mo.by_invariant = 2;
      else if (!outcome.verdicts.stack.pass()) mo.by_invariant = 3;
      if (mo.by_static || mo.by_invariant != 0) {
        mo.detected = true;
        break;
      }
    }
    results.push_back(mo);
  }
  return results;
}

std::string report_to_json(const FuzzReport& report) {
  nlohmann::json j;
  j["format"] = "sfi-report";
  j["version"] = text::kReportFormatVersion;
  j["mode"] = gen_mode_name(report.mode);
  j["tests"] = report.tests;
  j["discards"] = report.discards;
  j["violations"] = {{"1", report.violations[0]},
                     {"2", report.violations[1]},
                     {"3", report.violations[2]}};
  j["selfcheck_failures"] = report.selfcheck_failures;
  j["trace_mismatches"] = report.trace_mismatches;
  j["ub_runs"] = report.ub_runs;
  j["wb_stuck"] = report.wb_stuck;
  j["runs"] = {{"halted", report.halted},
               {"out_of_fuel", report.out_of_fuel},
               {"stuck", report.stuck}};
  j["flips"] = {{"requested", report.flips_requested},
                {"applied", report.flips_applied}};
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"test_index", f.test_index},
                        {"seed", f.seed},
                        {"kind", f.kind},
                        {"detail", f.detail},
                        {"repro", f.repro},
                        {"shrunk_ir", f.shrunk_ir}});
  j["failures"] = std::move(failures);
  j["clean"] = report.clean();
  return j.dump(2) + "\n";
}

}  // namespace sfi::fuzz
