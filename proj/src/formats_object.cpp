#include <sstream>

#include "json.hpp"
#include "sfi/formats.hpp"

namespace sfi::text {

namespace {

using nlohmann::json;

json config_to_json(const BitConfig& cfg) {
  return json{{"offset_bits", cfg.offset_bits},
              {"component_bits", cfg.component_bits},
              {"bundle_bits", cfg.bundle_bits},
              {"word_bits", cfg.word_bits}};
}

BitConfig config_from_json(const json& j) {
  BitConfig cfg;
  cfg.offset_bits = j.at("offset_bits").get<std::uint32_t>();
  cfg.component_bits = j.at("component_bits").get<std::uint32_t>();
  cfg.bundle_bits = j.at("bundle_bits").get<std::uint32_t>();
  cfg.word_bits = j.at("word_bits").get<std::uint32_t>();
  if (!cfg.valid()) throw FormatError("object carries an invalid bit config");
  return cfg;
}

Word word_from_json(const json& j) {
  const std::string s = j.get<std::string>();
  if (s.size() < 3 || s[0] != '0' || s[1] != 'x')
    throw FormatError("expected hex word, got '" + s + "'");
  return std::stoull(s.substr(2), nullptr, 16);
}

RangeKind range_kind_from_name(const std::string& name) {
  if (name == "startup") return RangeKind::Startup;
  if (name == "entry-push") return RangeKind::EntryPush;
  if (name == "return-pop") return RangeKind::ReturnPop;
  if (name == "post-call-restore") return RangeKind::PostCallRestore;
  throw FormatError("unknown trusted range kind '" + name + "'");
}

}  // namespace

std::string print_object(const MachineObject& object) {
  json j;
  j["format"] = "sfi-object";
  j["version"] = kObjectFormatVersion;
  j["config"] = config_to_json(object.cfg);

  json code = json::object();
  for (const auto& [key, instrs] : object.code) {
    json& slot = code[std::to_string(key.first)][std::to_string(key.second)];
    slot = json::array();
    for (const auto& instr : instrs) slot.push_back(print_instruction(instr));
  }
  j["code"] = std::move(code);

  json data = json::object();
  for (const auto& [key, words] : object.data_init) {
    json& slot = data[std::to_string(key.first)][std::to_string(key.second)];
    slot = json::array();
    for (Word w : words) slot.push_back(hex_word(w));
  }
  j["data"] = std::move(data);

  const LayoutMeta& meta = object.meta;
  json m;
  json entries = json::object();
  for (const auto& [key, addr] : meta.entry_points)
    entries[std::to_string(key.first)][std::to_string(key.second)] =
        hex_word(addr);
  m["entry_points"] = std::move(entries);

  json ranges = json::array();
  for (const auto& r : meta.trusted_ranges)
    ranges.push_back(json{{"begin", hex_word(r.begin)},
                          {"end", hex_word(r.end)},
                          {"kind", range_kind_name(r.kind)}});
  m["trusted_ranges"] = std::move(ranges);

  json blocks = json::object();
  for (const auto& [key, place] : meta.block_map)
    blocks[std::to_string(key.first)][std::to_string(key.second)] =
        json{{"slot", hex_word(place.slot)}, {"base", hex_word(place.base)}};
  m["block_map"] = std::move(blocks);

  json imports = json::object();
  for (const auto& [comp, targets] : meta.imports) {
    json list = json::array();
    for (const auto& [c, p] : targets) list.push_back(json::array({c, p}));
    imports[std::to_string(comp)] = std::move(list);
  }
  m["imports"] = std::move(imports);

  json exports = json::object();
  for (const auto& [comp, procs] : meta.exports) {
    json list = json::array();
    for (ProcId p : procs) list.push_back(p);
    exports[std::to_string(comp)] = std::move(list);
  }
  m["exports"] = std::move(exports);

  json lengths = json::object();
  for (const auto& [key, len] : meta.code_lengths)
    lengths[std::to_string(key.first)][std::to_string(key.second)] = len;
  m["code_lengths"] = std::move(lengths);

  m["registers"] = json{{"arg", meta.regs.arg},
                        {"ra", meta.regs.ra},
                        {"sfi", meta.regs.sfi},
                        {"mask_data", meta.regs.mask_data},
                        {"mask_code", meta.regs.mask_code},
                        {"tag_data", meta.regs.tag_data},
                        {"tag_code", meta.regs.tag_code},
                        {"sp_prot", meta.regs.sp_prot},
                        {"allocatable", meta.regs.allocatable}};
  m["protected_stack_base"] = hex_word(meta.protected_stack_base);
  m["halt_anchor"] = hex_word(meta.halt_anchor);
  m["main"] = json::array({meta.main.first, meta.main.second});
  j["meta"] = std::move(m);

  return j.dump(2) + "\n";
}

MachineObject parse_object(const std::string& source) {
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("object is not valid json: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "sfi-object")
      throw FormatError("not an sfi object file");
    if (j.at("version").get<int>() != kObjectFormatVersion)
      throw FormatError("unsupported object format version " +
                        j.at("version").dump());

    MachineObject object;
    object.cfg = config_from_json(j.at("config"));

    for (const auto& [comp, slots] : j.at("code").items()) {
      for (const auto& [slot, instrs] : slots.items()) {
        std::vector<Instruction> code;
        std::size_t line = 0;
        for (const auto& text : instrs)
          code.push_back(parse_instruction(text.get<std::string>(), ++line));
        object.code[{static_cast<ComponentId>(std::stoul(comp)),
                     std::stoull(slot)}] = std::move(code);
      }
    }
    for (const auto& [comp, slots] : j.at("data").items()) {
      for (const auto& [slot, words] : slots.items()) {
        std::vector<Word> image;
        for (const auto& w : words) image.push_back(word_from_json(w));
        object.data_init[{static_cast<ComponentId>(std::stoul(comp)),
                          std::stoull(slot)}] = std::move(image);
      }
    }

    const json& m = j.at("meta");
    LayoutMeta& meta = object.meta;
    meta.cfg = object.cfg;
    for (const auto& [comp, procs] : m.at("entry_points").items())
      for (const auto& [proc, addr] : procs.items())
        meta.entry_points[{static_cast<ComponentId>(std::stoul(comp)),
                           static_cast<ProcId>(std::stoul(proc))}] =
            word_from_json(addr);
    for (const auto& r : m.at("trusted_ranges"))
      meta.trusted_ranges.push_back(
          {word_from_json(r.at("begin")), word_from_json(r.at("end")),
           range_kind_from_name(r.at("kind").get<std::string>())});
    for (const auto& [comp, blocks] : m.at("block_map").items())
      for (const auto& [block, place] : blocks.items())
        meta.block_map[{static_cast<ComponentId>(std::stoul(comp)),
                        static_cast<BlockId>(std::stoul(block))}] = {
            word_from_json(place.at("slot")), word_from_json(place.at("base"))};
    for (const auto& [comp, targets] : m.at("imports").items()) {
      auto& set = meta.imports[static_cast<ComponentId>(std::stoul(comp))];
      for (const auto& t : targets)
        set.insert({t.at(0).get<ComponentId>(), t.at(1).get<ProcId>()});
    }
    for (const auto& [comp, procs] : m.at("exports").items()) {
      auto& set = meta.exports[static_cast<ComponentId>(std::stoul(comp))];
      for (const auto& p : procs) set.insert(p.get<ProcId>());
    }
    for (const auto& [comp, slots] : m.at("code_lengths").items())
      for (const auto& [slot, len] : slots.items())
        meta.code_lengths[{static_cast<ComponentId>(std::stoul(comp)),
                           std::stoull(slot)}] = len.get<Word>();

    const json& regs = m.at("registers");
    meta.regs.arg = regs.at("arg").get<Reg>();
    meta.regs.ra = regs.at("ra").get<Reg>();
    meta.regs.sfi = regs.at("sfi").get<Reg>();
    meta.regs.mask_data = regs.at("mask_data").get<Reg>();
    meta.regs.mask_code = regs.at("mask_code").get<Reg>();
    meta.regs.tag_data = regs.at("tag_data").get<Reg>();
    meta.regs.tag_code = regs.at("tag_code").get<Reg>();
    meta.regs.sp_prot = regs.at("sp_prot").get<Reg>();
    meta.regs.allocatable = regs.at("allocatable").get<Reg>();

    meta.protected_stack_base = word_from_json(m.at("protected_stack_base"));
    meta.halt_anchor = word_from_json(m.at("halt_anchor"));
    meta.main = {m.at("main").at(0).get<ComponentId>(),
                 m.at("main").at(1).get<ProcId>()};
    return object;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed object file: ") + e.what());
  }
}

std::string disassemble(const MachineObject& object) {
  const BitConfig& cfg = object.cfg;
  std::ostringstream os;
  os << "config offset_bits=" << cfg.offset_bits
     << " component_bits=" << cfg.component_bits
     << " bundle_bits=" << cfg.bundle_bits << " word_bits=" << cfg.word_bits
     << "\n";
  std::map<Word, std::pair<ComponentId, ProcId>> entries;
  for (const auto& [key, addr] : object.meta.entry_points) entries[addr] = key;

  for (const auto& [key, code] : object.code) {
    const auto& [comp, slot] = key;
    const Word base = encode_address(comp, slot, 0, cfg);
    os << "\ncode component " << comp << " slot " << slot << " ("
       << code.size() << " words)\n";
    for (Word i = 0; i < code.size(); ++i) {
      const Word addr = base + i;
      if (i % cfg.bundle_size() == 0)
        os << "  ---- bundle " << (i / cfg.bundle_size()) << " ----\n";
      os << "  " << hex_word(addr) << "  " << print_instruction(code[i]);
      auto entry = entries.find(addr);
      if (entry != entries.end())
        os << "    ; entry (" << entry->second.first << ","
           << entry->second.second << ")";
      if (const TrustedRange* r = object.meta.range_at(addr)) {
        if (r->begin == addr)
          os << "    ; trusted " << range_kind_name(r->kind) << " begin";
        else if (r->end - 1 == addr)
          os << "    ; trusted " << range_kind_name(r->kind) << " end";
      }
      os << "\n";
    }
  }
  for (const auto& [key, image] : object.data_init) {
    const auto& [comp, slot] = key;
    os << "\ndata component " << comp << " slot " << slot << " ("
       << image.size() << " words)\n";
  }
  return os.str();
}

}  // namespace sfi::text
