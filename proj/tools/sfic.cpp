#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sfi/backend.hpp"
#include "sfi/checkers.hpp"
#include "sfi/formats.hpp"
#include "sfi/fuzz.hpp"
#include "sfi/ir.hpp"
#include "sfi/machine.hpp"

namespace {

using namespace sfi;

constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;  // a property did not hold
constexpr int kExitUsage = 2;    // usage, parse, format or layout errors

struct ConfigFlags {
  std::uint32_t offset_bits = 12;
  std::uint32_t component_bits = 4;
  std::uint32_t bundle_bits = 4;
  std::uint32_t word_bits = 64;

  void attach(CLI::App* cmd) {
    cmd->add_option("--offset-bits", offset_bits, "address offset field width");
    cmd->add_option("--component-bits", component_bits,
                    "component id field width");
    cmd->add_option("--bundle-bits", bundle_bits, "jump alignment bits");
    cmd->add_option("--word-bits", word_bits, "machine word width");
  }
  BitConfig to_config() const {
    BitConfig cfg{offset_bits, component_bits, bundle_bits, word_bits};
    if (!cfg.valid()) throw Error("invalid bit configuration");
    return cfg;
  }
};

int cmd_compile(const std::string& input, const std::string& output,
                const ConfigFlags& flags) {
  const BitConfig cfg = flags.to_config();
  const ir::IRProgram program = text::parse_ir(text::read_file(input));
  const auto errors = ir::validate(program, cfg);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << e.message() << "\n";
    return kExitFailure;
  }
  const MachineObject object = backend::compile(program, cfg);
  text::write_file(output, text::print_object(object));
  return kExitPass;
}

int cmd_run(const std::string& object_path, const std::string& log_path,
            Word fuel) {
  const MachineObject object = text::parse_object(text::read_file(object_path));
  const RunOutcome out = run(object, fuel);
  text::write_file(log_path, text::print_log(out.log));
  const char* status = out.status == RunStatus::Halted      ? "halted"
                       : out.status == RunStatus::OutOfFuel ? "out-of-fuel"
                                                            : "stuck";
  std::cout << "status=" << status << " steps=" << out.final_state.steps
            << " events=" << out.log.size() << "\n";
  return out.status == RunStatus::Stuck ? kExitFailure : kExitPass;
}

int cmd_check(const std::string& object_path, const std::string& log_path,
              const std::string& which) {
  const MachineObject object = text::parse_object(text::read_file(object_path));
  const ExecutionLog log = text::parse_log(text::read_file(log_path));

  bool all_pass = true;
  auto report = [&](int invariant, const checkers::Verdict& verdict) {
    if (verdict.pass()) {
      std::cout << "invariant " << invariant << ": pass ("
                << verdict.events_checked << " events)\n";
      return;
    }
    all_pass = false;
    std::cout << "invariant " << invariant << ": FAIL ("
              << verdict.violations.size() << " violations)\n";
    std::size_t shown = 0;
    for (const auto& v : verdict.violations) {
      if (shown++ == 10) {
        std::cout << "  ...\n";
        break;
      }
      std::cout << "  step " << v.step << " pc " << text::hex_word(v.pc)
                << ": " << v.detail << "\n";
    }
  };

  if (which == "1" || which == "all")
    report(1, checkers::check_store(log, object.meta));
  if (which == "2" || which == "all")
    report(2, checkers::check_jump(log, object.meta));
  if (which == "3" || which == "all")
    report(3, checkers::check_stack(log, object.meta));
  return all_pass ? kExitPass : kExitFailure;
}

int cmd_trace(const std::string& object_path, const std::string& log_path) {
  const MachineObject object = text::parse_object(text::read_file(object_path));
  const ExecutionLog log = text::parse_log(text::read_file(log_path));
  for (const auto& event : fuzz::derive_trace(log, object.meta))
    std::cout << ir::trace_event_text(event) << "\n";
  return kExitPass;
}

int emit_report(const fuzz::FuzzReport& report, const std::string& out_path) {
  const std::string json = fuzz::report_to_json(report);
  if (out_path.empty())
    std::cout << json;
  else
    text::write_file(out_path, json);
  if (!report.clean())
    for (const auto& f : report.failures)
      std::cerr << "failure: seed " << f.seed << " (" << f.kind << ") "
                << f.detail << "\n  repro: " << f.repro << "\n";
  return report.clean() ? kExitPass : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compartmentalizing compiler with software fault isolation"};
  app.require_subcommand(1);
  static std::function<int()> action;

  // compile
  auto* compile = app.add_subcommand("compile", "lower ir text to an object");
  static std::string in_path, out_path;
  static ConfigFlags flags;
  compile->add_option("input", in_path, "ir source file")->required();
  compile->add_option("-o,--output", out_path, "object file")->required();
  flags.attach(compile);
  compile->callback(
      [] { action = [] { return cmd_compile(in_path, out_path, flags); }; });

  // run
  auto* run_cmd = app.add_subcommand("run", "execute an object, write the log");
  static std::string run_object, run_log;
  static Word fuel = 10000;
  run_cmd->add_option("object", run_object, "object file")->required();
  run_cmd->add_option("-o,--output", run_log, "event log file")->required();
  run_cmd->add_option("--fuel", fuel, "step budget")
      ->check(CLI::PositiveNumber);
  run_cmd->callback(
      [] { action = [] { return cmd_run(run_object, run_log, fuel); }; });

  // check
  auto* check = app.add_subcommand("check", "verify a log against an object");
  static std::string check_object, check_log, invariant = "all";
  check->add_option("object", check_object, "object file")->required();
  check->add_option("log", check_log, "event log file")->required();
  check->add_option("--invariant", invariant, "1, 2, 3 or all")
      ->check(CLI::IsMember({"1", "2", "3", "all"}));
  check->callback([] {
    action = [] { return cmd_check(check_object, check_log, invariant); };
  });

  // trace
  auto* trace = app.add_subcommand("trace", "derive the call/return trace");
  static std::string trace_object, trace_log;
  trace->add_option("object", trace_object, "object file")->required();
  trace->add_option("log", trace_log, "event log file")->required();
  trace->callback(
      [] { action = [] { return cmd_trace(trace_object, trace_log); }; });

  // fuzz / attack share generator flags
  static fuzz::GenConfig gen;
  static std::uint64_t tests = 100;
  static std::uint32_t flips = 3;
  static std::string report_path, mode_name = "wild";
  auto add_gen_flags = [&](CLI::App* cmd) {
    cmd->add_option("--tests", tests, "number of tests");
    cmd->add_option("--seed", gen.seed, "master seed");
    cmd->add_option("--fuel", gen.fuel, "step budget per test")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mode", mode_name, "wild or wellbehaved")
        ->check(CLI::IsMember({"wild", "wellbehaved"}));
    cmd->add_option("-o,--output", report_path, "report file (default stdout)");
  };

  auto* fuzz_cmd = app.add_subcommand(
      "fuzz", "generate, compile, run and check random programs");
  add_gen_flags(fuzz_cmd);
  fuzz_cmd->callback([] {
    action = [] {
      gen.mode = mode_name == "wellbehaved" ? fuzz::GenMode::WellBehaved
                                            : fuzz::GenMode::Wild;
      return emit_report(fuzz::run_pipeline(gen, tests), report_path);
    };
  });

  auto* attack = app.add_subcommand(
      "attack", "fuzz with random corruption of component data memory");
  add_gen_flags(attack);
  attack->add_option("--flips", flips, "data corruptions per test")
      ->check(CLI::PositiveNumber);
  attack->callback([] {
    action = [] {
      gen.mode = mode_name == "wellbehaved" ? fuzz::GenMode::WellBehaved
                                            : fuzz::GenMode::Wild;
      return emit_report(fuzz::inject_attack(gen, flips, tests), report_path);
    };
  });

  // disasm
  auto* disasm = app.add_subcommand("disasm", "annotated code listing");
  static std::string disasm_object;
  disasm->add_option("object", disasm_object, "object file")->required();
  disasm->callback([] {
    action = [] {
      std::cout << text::disassemble(
          text::parse_object(text::read_file(disasm_object)));
      return kExitPass;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    return action();
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CompileError& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MetaMismatch& e) {
    std::cerr << "meta mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
