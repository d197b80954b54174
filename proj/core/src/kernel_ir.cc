#include "warpguard/kernel_ir.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warpguard/errors.h"

namespace warpguard {
namespace {

constexpr std::array<std::string_view, kNumOpcodes> kOpcodeNames = {
    "iadd", "isub", "imul", "fadd", "fmul", "mov", "movi", "ld", "st", "setp", "bra", "bar", "exit"};
constexpr std::array<std::string_view, 6> kCompareNames = {"eq", "ne", "lt", "le", "gt", "ge"};

bool is_arith(Opcode op) {
  return op == Opcode::kIAdd || op == Opcode::kISub || op == Opcode::kIMul || op == Opcode::kFAdd ||
         op == Opcode::kFMul;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

class Parser {
 public:
  KernelProgram run(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      ++line_no;
      std::string_view line = text.substr(pos, nl - pos);
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      for (std::string_view stmt : split(line, ';')) statement(stmt, line_no);
      pos = nl + 1;
    }
    resolve();
    validate(program_);
    return std::move(program_);
  }

 private:
  struct PendingBuffer {
    std::size_t pc;
    std::string name;
    bool input;
    std::size_t line;
  };
  struct PendingTarget {
    std::size_t pc;
    std::string label;
    std::size_t line;
  };

  void statement(std::string_view stmt, std::size_t line) {
    stmt = trim(stmt);
    // Any number of `label:` prefixes.
    while (true) {
      auto colon = stmt.find(':');
      if (colon == std::string_view::npos) break;
      std::string_view name = trim(stmt.substr(0, colon));
      if (!is_identifier(name) || name.find('.') != std::string_view::npos) break;
      if (std::any_of(program_.labels.begin(), program_.labels.end(),
                      [&](const Label& l) { return l.name == name; })) {
        throw ParseError(line, "duplicate label '" + std::string(name) + "'");
      }
      program_.labels.push_back({std::string(name), static_cast<std::uint32_t>(program_.instructions.size())});
      stmt = trim(stmt.substr(colon + 1));
    }
    if (stmt.empty()) return;
    if (stmt.front() == '.') {
      directive(stmt, line);
      return;
    }
    instruction(stmt, line);
  }

  static std::uint32_t parse_count(std::string_view s, std::size_t line, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0 || v > 0xffffffffULL) {
      throw ParseError(line, std::string("invalid ") + what + " '" + std::string(s) + "'");
    }
    return static_cast<std::uint32_t>(v);
  }

  void directive(std::string_view stmt, std::size_t line) {
    std::vector<std::string_view> words;
    std::istringstream in{std::string(stmt)};
    std::string w;
    std::vector<std::string> owned;
    while (in >> w) owned.push_back(w);
    for (const auto& o : owned) words.emplace_back(o);
    const std::string_view head = words[0];
    auto expect = [&](std::size_t n) {
      if (words.size() != n) throw ParseError(line, "malformed directive '" + std::string(stmt) + "'");
    };
    if (head == ".kernel") {
      expect(2);
      if (!is_identifier(words[1])) throw ParseError(line, "invalid kernel name");
      program_.name = std::string(words[1]);
    } else if (head == ".ctas") {
      expect(2);
      program_.num_ctas = parse_count(words[1], line, "CTA count");
    } else if (head == ".ctasize") {
      expect(2);
      program_.cta_size = parse_count(words[1], line, "CTA size");
    } else if (head == ".in" || head == ".out") {
      expect(3);
      if (!is_identifier(words[1])) throw ParseError(line, "invalid buffer name");
      if (program_.input_index(words[1]) || program_.output_index(words[1])) {
        throw ParseError(line, "duplicate buffer '" + std::string(words[1]) + "'");
      }
      BufferDecl decl{std::string(words[1]), parse_count(words[2], line, "buffer size")};
      (head == ".in" ? program_.inputs : program_.outputs).push_back(std::move(decl));
    } else {
      throw ParseError(line, "unknown directive '" + std::string(head) + "'");
    }
  }

  static std::uint32_t reg(std::string_view s, std::size_t line) {
    if (s == "tid") return kTidRegister;
    if (s == "ctaid") return kCtaidRegister;
    if (s.size() < 2 || s[0] != 'r') throw ParseError(line, "expected register, got '" + std::string(s) + "'");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) throw ParseError(line, "register index out of range");
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError(line, "expected register, got '" + std::string(s) + "'");
    }
    if (v >= kNumRegisters) {
      throw ParseError(line, "register index out of range: r" + std::to_string(v) + " (file size 64)");
    }
    return static_cast<std::uint32_t>(v);
  }

  static std::uint32_t dest_reg(std::string_view s, std::size_t line) {
    std::uint32_t r = reg(s, line);
    if (r == kTidRegister || r == kCtaidRegister) {
      throw ParseError(line, "register r" + std::to_string(r) + " is read-only");
    }
    return r;
  }

  static std::uint32_t immediate(std::string_view s, std::size_t line) {
    auto bad = [&]() -> std::uint32_t { throw ParseError(line, "invalid immediate '" + std::string(s) + "'"); };
    if (s.empty()) return bad();
    std::string_view body = s;
    bool negative = false;
    if (body.front() == '-' || body.front() == '+') {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X')) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(body.data() + 2, body.data() + body.size(), v, 16);
      if (ec != std::errc() || ptr != body.data() + body.size() || v > 0xffffffffULL) return bad();
      auto bits = static_cast<std::uint32_t>(v);
      return negative ? 0u - bits : bits;
    }
    if (body.find_first_of(".eE") != std::string_view::npos) {
      float f = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), f);
      if (ec != std::errc() || ptr != s.data() + s.size()) return bad();
      return std::bit_cast<std::uint32_t>(f);
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) return bad();
    if (negative) v = -v;
    if (v < -2147483648LL || v > 4294967295LL) return bad();
    return static_cast<std::uint32_t>(v);
  }

  static Operand reg_or_imm(std::string_view s, std::size_t line) {
    if (s == "tid" || s == "ctaid" || (s.size() >= 2 && s[0] == 'r' && std::isdigit(static_cast<unsigned char>(s[1])))) {
      return Operand::reg(reg(s, line));
    }
    return Operand::imm(immediate(s, line));
  }

  // buf[rK]
  std::uint32_t buffer_access(std::string_view s, bool input, std::size_t line) {
    auto open = s.find('[');
    if (open == std::string_view::npos || s.back() != ']') {
      throw ParseError(line, "expected buffer access 'name[rK]', got '" + std::string(s) + "'");
    }
    std::string_view name = trim(s.substr(0, open));
    if (!is_identifier(name)) throw ParseError(line, "invalid buffer name '" + std::string(name) + "'");
    pending_buffers_.push_back({program_.instructions.size(), std::string(name), input, line});
    return reg(trim(s.substr(open + 1, s.size() - open - 2)), line);
  }

  void instruction(std::string_view stmt, std::size_t line) {
    std::size_t sp = 0;
    while (sp < stmt.size() && !std::isspace(static_cast<unsigned char>(stmt[sp]))) ++sp;
    std::string_view mnemonic = stmt.substr(0, sp);
    std::string_view rest = trim(stmt.substr(sp));
    std::vector<std::string_view> ops = rest.empty() ? std::vector<std::string_view>{} : split(rest, ',');
    for (auto o : ops) {
      if (o.empty()) throw ParseError(line, "empty operand");
    }

    Instruction ins;
    std::string_view base = mnemonic;
    std::string_view suffix;
    if (auto dot = mnemonic.find('.'); dot != std::string_view::npos) {
      base = mnemonic.substr(0, dot);
      suffix = mnemonic.substr(dot + 1);
    }
    auto op = opcode_from_name(base);
    if (!op) throw ParseError(line, "unknown opcode '" + std::string(mnemonic) + "'");
    ins.op = *op;
    if (!suffix.empty() && ins.op != Opcode::kSetP) {
      throw ParseError(line, "unexpected suffix on '" + std::string(mnemonic) + "'");
    }
    auto arity = [&](std::size_t n) {
      if (ops.size() != n) {
        throw ParseError(line, "'" + std::string(mnemonic) + "' expects " + std::to_string(n) + " operands");
      }
    };

    switch (ins.op) {
      case Opcode::kIAdd:
      case Opcode::kISub:
      case Opcode::kIMul:
      case Opcode::kFAdd:
      case Opcode::kFMul:
        arity(3);
        ins.dest = static_cast<std::uint8_t>(dest_reg(ops[0], line));
        ins.src[0] = Operand::reg(reg(ops[1], line));
        ins.src[1] = reg_or_imm(ops[2], line);
        break;
      case Opcode::kSetP: {
        auto it = std::find(kCompareNames.begin(), kCompareNames.end(), suffix);
        if (it == kCompareNames.end()) throw ParseError(line, "setp needs a comparison suffix, e.g. setp.lt");
        ins.cmp = static_cast<Compare>(it - kCompareNames.begin());
        arity(3);
        ins.dest = static_cast<std::uint8_t>(dest_reg(ops[0], line));
        ins.src[0] = Operand::reg(reg(ops[1], line));
        ins.src[1] = reg_or_imm(ops[2], line);
        break;
      }
      case Opcode::kMov:
        arity(2);
        ins.dest = static_cast<std::uint8_t>(dest_reg(ops[0], line));
        ins.src[0] = Operand::reg(reg(ops[1], line));
        break;
      case Opcode::kMovI:
        arity(2);
        ins.dest = static_cast<std::uint8_t>(dest_reg(ops[0], line));
        ins.src[0] = Operand::imm(immediate(ops[1], line));
        break;
      case Opcode::kLd:
        arity(2);
        ins.dest = static_cast<std::uint8_t>(dest_reg(ops[0], line));
        ins.src[0] = Operand::reg(buffer_access(ops[1], true, line));
        break;
      case Opcode::kSt:
        arity(2);
        ins.src[0] = Operand::reg(buffer_access(ops[0], false, line));
        ins.src[1] = Operand::reg(reg(ops[1], line));
        break;
      case Opcode::kBra: {
        std::string_view label;
        if (ops.size() == 1) {
          label = ops[0];
        } else {
          arity(2);
          std::string_view pred = ops[0];
          if (!pred.empty() && pred.front() == '!') {
            ins.negate = true;
            pred = trim(pred.substr(1));
          }
          ins.predicated = true;
          ins.src[0] = Operand::reg(reg(pred, line));
          label = ops[1];
        }
        if (!is_identifier(label)) throw ParseError(line, "invalid label '" + std::string(label) + "'");
        pending_targets_.push_back({program_.instructions.size(), std::string(label), line});
        break;
      }
      case Opcode::kBar:
      case Opcode::kExit:
        arity(0);
        break;
    }
    program_.instructions.push_back(ins);
  }

  void resolve() {
    for (const auto& t : pending_targets_) {
      auto it = std::find_if(program_.labels.begin(), program_.labels.end(),
                             [&](const Label& l) { return l.name == t.label; });
      if (it == program_.labels.end()) throw ParseError(t.line, "undefined label '" + t.label + "'");
      program_.instructions[t.pc].target = it->pc;
    }
    for (const auto& b : pending_buffers_) {
      auto idx = b.input ? program_.input_index(b.name) : program_.output_index(b.name);
      if (!idx) {
        bool other = b.input ? program_.output_index(b.name).has_value() : program_.input_index(b.name).has_value();
        if (other) {
          throw ParseError(b.line, b.input ? "ld source '" + b.name + "' must be an .in buffer"
                                           : "st target '" + b.name + "' must be an .out buffer");
        }
        throw ParseError(b.line, "undefined buffer '" + b.name + "'");
      }
      program_.instructions[b.pc].buffer = static_cast<std::int32_t>(*idx);
    }
  }

  KernelProgram program_;
  std::vector<PendingTarget> pending_targets_;
  std::vector<PendingBuffer> pending_buffers_;
};

std::string reg_text(std::uint32_t r) {
  if (r == kTidRegister) return "tid";
  if (r == kCtaidRegister) return "ctaid";
  return "r" + std::to_string(r);
}

std::string operand_text(const Operand& o) {
  if (!o.immediate) return reg_text(o.value);
  return std::to_string(static_cast<std::int32_t>(o.value));
}

}  // namespace

std::string_view opcode_name(Opcode op) { return kOpcodeNames[static_cast<std::size_t>(op)]; }

std::optional<Opcode> opcode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumOpcodes; ++i) {
    if (kOpcodeNames[i] == name) return static_cast<Opcode>(i);
  }
  return std::nullopt;
}

std::string_view compare_name(Compare cmp) { return kCompareNames[static_cast<std::size_t>(cmp)]; }

std::optional<std::size_t> KernelProgram::input_index(std::string_view buffer) const {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].name == buffer) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> KernelProgram::output_index(std::string_view buffer) const {
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].name == buffer) return i;
  }
  return std::nullopt;
}

KernelProgram parse_kernel(std::string_view text) { return Parser().run(text); }

KernelProgram load_kernel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open kernel file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kernel(ss.str());
}

std::string to_text(const KernelProgram& p) {
  std::ostringstream out;
  out << ".kernel " << p.name << "\n.ctas " << p.num_ctas << "\n.ctasize " << p.cta_size << "\n";
  for (const auto& b : p.inputs) out << ".in " << b.name << " " << b.size << "\n";
  for (const auto& b : p.outputs) out << ".out " << b.name << " " << b.size << "\n";

  auto target_name = [&](std::uint32_t pc) -> std::string {
    for (const auto& l : p.labels) {
      if (l.pc == pc) return l.name;
    }
    throw ValidationError("branch target " + std::to_string(pc) + " has no label");
  };
  for (std::size_t pc = 0; pc <= p.instructions.size(); ++pc) {
    for (const auto& l : p.labels) {
      if (l.pc == pc) out << l.name << ":\n";
    }
    if (pc == p.instructions.size()) break;
    const Instruction& in = p.instructions[pc];
    out << "  " << opcode_name(in.op);
    switch (in.op) {
      case Opcode::kSetP:
        out << "." << compare_name(in.cmp);
        [[fallthrough]];
      case Opcode::kIAdd:
      case Opcode::kISub:
      case Opcode::kIMul:
      case Opcode::kFAdd:
      case Opcode::kFMul:
        out << " " << reg_text(in.dest) << ", " << operand_text(in.src[0]) << ", " << operand_text(in.src[1]);
        break;
      case Opcode::kMov:
      case Opcode::kMovI:
        out << " " << reg_text(in.dest) << ", " << operand_text(in.src[0]);
        break;
      case Opcode::kLd:
        out << " " << reg_text(in.dest) << ", " << p.inputs.at(static_cast<std::size_t>(in.buffer)).name << "["
            << reg_text(in.src[0].value) << "]";
        break;
      case Opcode::kSt:
        out << " " << p.outputs.at(static_cast<std::size_t>(in.buffer)).name << "[" << reg_text(in.src[0].value)
            << "], " << reg_text(in.src[1].value);
        break;
      case Opcode::kBra:
        out << " ";
        if (in.predicated) out << (in.negate ? "!" : "") << reg_text(in.src[0].value) << ", ";
        out << target_name(in.target);
        break;
      case Opcode::kBar:
      case Opcode::kExit:
        break;
    }
    out << "\n";
  }
  return out.str();
}

std::vector<std::vector<std::uint32_t>> control_flow_successors(const KernelProgram& p) {
  const auto n = static_cast<std::uint32_t>(p.instructions.size());
  std::vector<std::vector<std::uint32_t>> succ(n);
  for (std::uint32_t pc = 0; pc < n; ++pc) {
    const Instruction& in = p.instructions[pc];
    if (in.op == Opcode::kExit) {
      succ[pc] = {n};
    } else if (in.op == Opcode::kBra) {
      succ[pc] = {in.target};
      if (in.predicated && in.target != pc + 1) succ[pc].push_back(pc + 1);
    } else {
      succ[pc] = {pc + 1};
    }
  }
  return succ;
}

std::vector<std::uint32_t> immediate_post_dominators(const KernelProgram& p) {
  const std::size_t n = p.instructions.size();
  const auto succ = control_flow_successors(p);
  const std::size_t nodes = n + 1;
  const std::size_t words = (nodes + 63) / 64;
  auto bit = [](const std::vector<std::uint64_t>& s, std::size_t i) { return (s[i / 64] >> (i % 64)) & 1u; };

  // pdom[v] = {v} ∪ ⋂ pdom[succ]; iterate to a fixed point from "all nodes".
  std::vector<std::vector<std::uint64_t>> pdom(nodes, std::vector<std::uint64_t>(words, ~0ULL));
  std::fill(pdom[n].begin(), pdom[n].end(), 0);
  pdom[n][n / 64] |= 1ULL << (n % 64);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = n; v-- > 0;) {
      std::vector<std::uint64_t> acc(words, ~0ULL);
      for (auto s : succ[v]) {
        if (s > n) continue;
        for (std::size_t w = 0; w < words; ++w) acc[w] &= pdom[s][w];
      }
      acc[v / 64] |= 1ULL << (v % 64);
      if (acc != pdom[v]) {
        pdom[v] = std::move(acc);
        changed = true;
      }
    }
  }

  std::vector<std::uint32_t> ipdom(n, static_cast<std::uint32_t>(n));
  for (std::size_t v = 0; v < n; ++v) {
    // The immediate post-dominator is the strict post-dominator that is itself
    // post-dominated by all the others, i.e. the one with the largest set.
    std::size_t best = n;
    std::size_t best_size = 0;
    for (std::size_t c = 0; c < nodes; ++c) {
      if (c == v || !bit(pdom[v], c)) continue;
      std::size_t sz = 0;
      for (auto w : pdom[c]) sz += static_cast<std::size_t>(std::popcount(w));
      if (sz > best_size) {
        best_size = sz;
        best = c;
      }
    }
    ipdom[v] = static_cast<std::uint32_t>(best);
  }
  return ipdom;
}

void validate(const KernelProgram& p) {
  auto fail = [](const std::string& what) { throw ValidationError(what); };
  if (!is_identifier(p.name)) fail("invalid kernel name '" + p.name + "'");
  if (p.num_ctas == 0) fail("kernel needs at least one CTA");
  if (p.cta_size == 0) fail("CTA size must be positive");
  if (static_cast<std::uint64_t>(p.num_ctas) * p.cta_size > 0xffffffffULL) fail("launch exceeds 2^32 threads");
  if (p.instructions.empty()) fail("kernel has no instructions");

  std::vector<std::string> names;
  for (const auto* list : {&p.inputs, &p.outputs}) {
    for (const auto& b : *list) {
      if (!is_identifier(b.name)) fail("invalid buffer name '" + b.name + "'");
      if (b.size == 0) fail("buffer '" + b.name + "' has size 0");
      if (std::find(names.begin(), names.end(), b.name) != names.end()) fail("duplicate buffer '" + b.name + "'");
      names.push_back(b.name);
    }
  }
  for (const auto& l : p.labels) {
    if (l.pc > p.instructions.size()) fail("label '" + l.name + "' points past the program");
  }

  const auto n = static_cast<std::uint32_t>(p.instructions.size());
  for (std::uint32_t pc = 0; pc < n; ++pc) {
    const Instruction& in = p.instructions[pc];
    const std::string at = " at instruction " + std::to_string(pc);
    if (static_cast<std::size_t>(in.op) >= kNumOpcodes) fail("bad opcode" + at);
    if (writes_register(in.op)) {
      if (in.dest >= kNumRegisters) fail("register index out of range" + at);
      if (in.dest == kTidRegister || in.dest == kCtaidRegister) fail("write to read-only register" + at);
    }
    auto check_reg = [&](const Operand& o) {
      if (o.immediate) fail("expected register operand" + at);
      if (o.value >= kNumRegisters) fail("register index out of range" + at);
    };
    auto check_any = [&](const Operand& o) {
      if (!o.immediate && o.value >= kNumRegisters) fail("register index out of range" + at);
    };
    switch (in.op) {
      case Opcode::kIAdd:
      case Opcode::kISub:
      case Opcode::kIMul:
      case Opcode::kFAdd:
      case Opcode::kFMul:
      case Opcode::kSetP:
        check_reg(in.src[0]);
        check_any(in.src[1]);
        break;
      case Opcode::kMov:
        check_reg(in.src[0]);
        break;
      case Opcode::kMovI:
        if (!in.src[0].immediate) fail("movi needs an immediate" + at);
        break;
      case Opcode::kLd:
        check_reg(in.src[0]);
        if (in.buffer < 0 || static_cast<std::size_t>(in.buffer) >= p.inputs.size()) fail("ld needs an .in buffer" + at);
        break;
      case Opcode::kSt:
        check_reg(in.src[0]);
        check_reg(in.src[1]);
        if (in.buffer < 0 || static_cast<std::size_t>(in.buffer) >= p.outputs.size()) {
          fail("st needs an .out buffer" + at);
        }
        break;
      case Opcode::kBra:
        if (in.predicated) check_reg(in.src[0]);
        if (in.target >= n) fail("branch target out of range" + at);
        break;
      case Opcode::kBar:
      case Opcode::kExit:
        break;
    }
  }

  // Reachability from entry, then backwards reachability from the exit node.
  const auto succ = control_flow_successors(p);
  std::vector<char> reach(n + 1, 0);
  std::vector<std::uint32_t> work{0};
  reach[0] = 1;
  while (!work.empty()) {
    auto v = work.back();
    work.pop_back();
    if (v == n) continue;
    for (auto s : succ[v]) {
      if (s == n && p.instructions[v].op != Opcode::kExit) {
        fail("control falls off the end of the program after instruction " + std::to_string(v));
      }
      if (!reach[s]) {
        reach[s] = 1;
        work.push_back(s);
      }
    }
  }
  std::vector<std::vector<std::uint32_t>> pred(n + 1);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (auto s : succ[v]) pred[s].push_back(v);
  }
  std::vector<char> exits(n + 1, 0);
  exits[n] = 1;
  work = {n};
  while (!work.empty()) {
    auto v = work.back();
    work.pop_back();
    for (auto q : pred[v]) {
      if (!exits[q]) {
        exits[q] = 1;
        work.push_back(q);
      }
    }
  }
  for (std::uint32_t v = 0; v < n; ++v) {
    if (reach[v] && !exits[v]) fail("instruction " + std::to_string(v) + " cannot reach exit");
  }
}

KernelBuilder::KernelBuilder(std::string name) { program_.name = std::move(name); }

KernelBuilder& KernelBuilder::ctas(std::uint32_t n) {
  program_.num_ctas = n;
  return *this;
}

KernelBuilder& KernelBuilder::cta_size(std::uint32_t n) {
  program_.cta_size = n;
  return *this;
}

KernelBuilder& KernelBuilder::input(std::string name, std::uint32_t size) {
  program_.inputs.push_back({std::move(name), size});
  return *this;
}

KernelBuilder& KernelBuilder::output(std::string name, std::uint32_t size) {
  program_.outputs.push_back({std::move(name), size});
  return *this;
}

KernelBuilder& KernelBuilder::label(std::string name) {
  program_.labels.push_back({std::move(name), static_cast<std::uint32_t>(program_.instructions.size())});
  return *this;
}

KernelBuilder& KernelBuilder::arith(Opcode op, std::uint32_t dest, std::uint32_t a, Operand b) {
  if (!is_arith(op)) throw ValidationError("arith() needs an arithmetic opcode");
  Instruction in;
  in.op = op;
  in.dest = static_cast<std::uint8_t>(dest);
  in.src = {Operand::reg(a), b};
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::setp(Compare cmp, std::uint32_t dest, std::uint32_t a, Operand b) {
  Instruction in;
  in.op = Opcode::kSetP;
  in.cmp = cmp;
  in.dest = static_cast<std::uint8_t>(dest);
  in.src = {Operand::reg(a), b};
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::mov(std::uint32_t dest, std::uint32_t src) {
  Instruction in;
  in.op = Opcode::kMov;
  in.dest = static_cast<std::uint8_t>(dest);
  in.src[0] = Operand::reg(src);
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::movi(std::uint32_t dest, std::uint32_t bits) {
  Instruction in;
  in.op = Opcode::kMovI;
  in.dest = static_cast<std::uint8_t>(dest);
  in.src[0] = Operand::imm(bits);
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::ld(std::uint32_t dest, std::string_view buffer, std::uint32_t addr) {
  auto idx = program_.input_index(buffer);
  if (!idx) throw ValidationError("ld from undeclared input buffer '" + std::string(buffer) + "'");
  Instruction in;
  in.op = Opcode::kLd;
  in.dest = static_cast<std::uint8_t>(dest);
  in.buffer = static_cast<std::int32_t>(*idx);
  in.src[0] = Operand::reg(addr);
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::st(std::string_view buffer, std::uint32_t addr, std::uint32_t value) {
  auto idx = program_.output_index(buffer);
  if (!idx) throw ValidationError("st to undeclared output buffer '" + std::string(buffer) + "'");
  Instruction in;
  in.op = Opcode::kSt;
  in.buffer = static_cast<std::int32_t>(*idx);
  in.src = {Operand::reg(addr), Operand::reg(value)};
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::bra(std::string target) {
  Instruction in;
  in.op = Opcode::kBra;
  pending_targets_.emplace_back(program_.instructions.size(), std::move(target));
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::bra_if(std::uint32_t pred, std::string target, bool negate) {
  Instruction in;
  in.op = Opcode::kBra;
  in.predicated = true;
  in.negate = negate;
  in.src[0] = Operand::reg(pred);
  pending_targets_.emplace_back(program_.instructions.size(), std::move(target));
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::bar() {
  Instruction in;
  in.op = Opcode::kBar;
  program_.instructions.push_back(in);
  return *this;
}

KernelBuilder& KernelBuilder::exit() {
  Instruction in;
  in.op = Opcode::kExit;
  program_.instructions.push_back(in);
  return *this;
}

KernelProgram KernelBuilder::build() const {
  KernelProgram p = program_;
  for (const auto& [pc, name] : pending_targets_) {
    auto it = std::find_if(p.labels.begin(), p.labels.end(), [&](const Label& l) { return l.name == name; });
    if (it == p.labels.end()) throw ValidationError("undefined label '" + name + "'");
    p.instructions[pc].target = it->pc;
  }
  validate(p);
  return p;
}

CostTable CostTable::defaults() {
  CostTable t;
  t.opcode_cycles.fill(1);
  t.opcode_cycles[static_cast<std::size_t>(Opcode::kLd)] = 4;
  t.opcode_cycles[static_cast<std::size_t>(Opcode::kSt)] = 4;
  t.opcode_cycles[static_cast<std::size_t>(Opcode::kBar)] = 2;
  return t;
}

CostTable CostTable::from_json(std::string_view text) {
  CostTable t = defaults();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("cost table: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("cost table must be a JSON object");
  auto as_cycles = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ValidationError("cost table: '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint32_t>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "opcodes") {
      if (!value.is_object()) throw ValidationError("cost table: 'opcodes' must be an object");
      for (const auto& [name, cycles] : value.items()) {
        auto op = opcode_from_name(name);
        if (!op) throw ValidationError("cost table: unknown opcode '" + name + "'");
        t.opcode_cycles[static_cast<std::size_t>(*op)] = as_cycles(cycles, name);
      }
    } else if (key == "compare_per_store") {
      t.compare_per_store = as_cycles(value, key);
    } else if (key == "vote_per_store") {
      t.vote_per_store = as_cycles(value, key);
    } else {
      throw ValidationError("cost table: unknown key '" + key + "'");
    }
  }
  return t;
}

CostTable CostTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open cost table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace warpguard
