// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fal/error.hpp"
#include "fal/expr.hpp"

namespace fal {

enum class Opcode {
  Const,
  Load,
  Store,
  Add,
  Sub,
  Mul,
  FreeInt,
  NewArrFree,
  NewArrFixed,
  ArrInit,
  FreeItem,
  ALoad,
  AStore,
  ArrayLength,
  IfCmp,
  Goto,
  Label,
  Fail,
  CheckDelayed,
  Return,
};

constexpr std::string_view mnemonic(Opcode op) {
  switch (op) {
    case Opcode::Const: return "CONST";
    case Opcode::Load: return "LOAD";
    case Opcode::Store: return "STORE";
    case Opcode::Add: return "ADD";
    case Opcode::Sub: return "SUB";
    case Opcode::Mul: return "MUL";
    case Opcode::FreeInt: return "FREEINT";
    case Opcode::NewArrFree: return "NEWARR_FREE";
    case Opcode::NewArrFixed: return "NEWARR_FIXED";
    case Opcode::ArrInit: return "ARRINIT";
    case Opcode::FreeItem: return "FREEITEM";
    case Opcode::ALoad: return "ALOAD";
    case Opcode::AStore: return "ASTORE";
    case Opcode::ArrayLength: return "ARRAYLENGTH";
    case Opcode::IfCmp: return "IFCMP";
    case Opcode::Goto: return "GOTO";
    case Opcode::Label: return "LABEL";
    case Opcode::Fail: return "FAIL";
    case Opcode::CheckDelayed: return "CHECKDELAYED";
    case Opcode::Return: return "RETURN";
  }
  return "?";
}

constexpr std::string_view relation_mnemonic(Relation r) {
  switch (r) {
    case Relation::Eq: return "eq";
    case Relation::Ne: return "ne";
    case Relation::Lt: return "lt";
    case Relation::Le: return "le";
    case Relation::Gt: return "gt";
    case Relation::Ge: return "ge";
  }
  return "?";
}

struct Instruction {
  Opcode op = Opcode::Fail;
  // CONST value, ARRINIT item count, NEWARR_FREE explicit bound.
  Value value = 0;
  bool has_value = false;
  // Variable, local, or label name.
  std::string name;
  // FREEINT explicit bounds.
  std::optional<Value> lo;
  std::optional<Value> hi;
  Relation relation = Relation::Eq;
  bool free_elements = false;
  ElementKind kind = ElementKind::integer();
  // Resolved jump target for IFCMP and GOTO.
  std::size_t target = 0;
  int line = 0;
};

struct Program {
  std::string name;
  std::vector<Instruction> code;
  std::map<std::string, std::size_t> labels;
  // Locals in order of first mention.
  std::vector<std::string> locals;
};

namespace detail {

struct Token {
  std::string text;
  int column;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t k = 0;
  while (k < line.size()) {
    if (line[k] == ';') break;
    if (std::isspace(static_cast<unsigned char>(line[k]))) {
      ++k;
      continue;
    }
    std::size_t start = k;
    while (k < line.size() && line[k] != ';' && !std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    out.push_back({std::string(line.substr(start, k - start)), static_cast<int>(start) + 1});
  }
  return out;
}

[[noreturn]] inline void parse_error(int line, int column, const std::string& msg) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg);
}

inline std::optional<Value> parse_int(std::string_view s) {
  Value v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<ElementKind> parse_kind(std::string_view s) {
  if (s.substr(0, 3) != "int") return std::nullopt;
  ElementKind k = ElementKind::integer();
  std::string_view rest = s.substr(3);
  // The element type: "int" for int[], "int[]" for int[][], and so on.
  while (!rest.empty()) {
    if (rest.substr(0, 2) != "[]") return std::nullopt;
    k = ElementKind::array_of(k);
    rest.remove_prefix(2);
  }
  return k;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
  });
}

}  // namespace detail

/// Parses the line-oriented instruction format. Mnemonics are
/// case-insensitive; everything after ';' is a comment.
inline Program parse_program(std::string_view text, std::string name = "program") {
  using detail::parse_error;
  Program prog;
  prog.name = std::move(name);
  std::vector<std::pair<std::size_t, detail::Token>> jumps;

  auto note_local = [&](const std::string& local) {
    if (std::find(prog.locals.begin(), prog.locals.end(), local) == prog.locals.end()) prog.locals.push_back(local);
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    std::string mn = toks[0].text;
    std::transform(mn.begin(), mn.end(), mn.begin(), [](unsigned char c) { return std::toupper(c); });

    std::optional<Opcode> op;
    for (int k = 0; k <= static_cast<int>(Opcode::Return); ++k)
      if (mnemonic(static_cast<Opcode>(k)) == mn) op = static_cast<Opcode>(k);
    if (!op) parse_error(line_no, toks[0].column, "unknown mnemonic '" + toks[0].text + "'");

    Instruction ins;
    ins.op = *op;
    ins.line = line_no;
    const std::size_t args = toks.size() - 1;
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (args < lo || args > hi) {
        int col = args > hi ? toks[hi + 1].column : toks[0].column;
        std::string expected = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
        parse_error(line_no, col,
                    std::string(mnemonic(*op)) + " takes " + expected + " operand(s), got " + std::to_string(args));
      }
    };
    auto int_arg = [&](std::size_t k) {
      auto v = detail::parse_int(toks[k].text);
      if (!v) parse_error(line_no, toks[k].column, "expected an integer, got '" + toks[k].text + "'");
      return *v;
    };
    auto name_arg = [&](std::size_t k) {
      if (!detail::is_identifier(toks[k].text))
        parse_error(line_no, toks[k].column, "expected a name, got '" + toks[k].text + "'");
      return toks[k].text;
    };
    auto kind_arg = [&](std::size_t k) {
      auto kind = detail::parse_kind(toks[k].text);
      if (!kind) parse_error(line_no, toks[k].column, "expected an element type like int or int[], got '" + toks[k].text + "'");
      return *kind;
    };

    switch (ins.op) {
      case Opcode::Const:
        arity(1, 1);
        ins.value = int_arg(1);
        ins.has_value = true;
        break;
      case Opcode::Load:
      case Opcode::Store:
        arity(1, 1);
        ins.name = name_arg(1);
        note_local(ins.name);
        break;
      case Opcode::FreeInt:
        if (args != 1 && args != 3) arity(1, 1);
        ins.name = name_arg(1);
        note_local(ins.name);
        if (args == 3) {
          ins.lo = int_arg(2);
          ins.hi = int_arg(3);
          if (*ins.lo > *ins.hi) parse_error(line_no, toks[2].column, "empty domain for '" + ins.name + "'");
        }
        break;
      case Opcode::NewArrFree:
        arity(0, 2);
        for (std::size_t k = 1; k <= args; ++k) {
          if (detail::parse_int(toks[k].text) && k == 1) {
            ins.value = int_arg(k);
            ins.has_value = true;
            if (ins.value < 0) parse_error(line_no, toks[k].column, "negative length bound");
          } else {
            ins.kind = kind_arg(k);
          }
        }
        break;
      case Opcode::NewArrFixed:
        arity(0, 2);
        for (std::size_t k = 1; k <= args; ++k) {
          if (toks[k].text == "free" && k == 1) {
            ins.free_elements = true;
          } else {
            ins.kind = kind_arg(k);
          }
        }
        if (ins.kind.is_array() && !ins.free_elements)
          parse_error(line_no, toks[0].column, "arrays of arrays need 'free' elements");
        break;
      case Opcode::ArrInit:
        arity(1, 1);
        ins.value = int_arg(1);
        ins.has_value = true;
        if (ins.value < 0) parse_error(line_no, toks[1].column, "negative item count");
        break;
      case Opcode::IfCmp: {
        arity(2, 2);
        bool found = false;
        for (Relation r : {Relation::Eq, Relation::Ne, Relation::Lt, Relation::Le, Relation::Gt, Relation::Ge}) {
          if (relation_mnemonic(r) == toks[1].text) {
            ins.relation = r;
            found = true;
          }
        }
        if (!found) parse_error(line_no, toks[1].column, "unknown comparison '" + toks[1].text + "'");
        ins.name = name_arg(2);
        jumps.emplace_back(prog.code.size(), toks[2]);
        break;
      }
      case Opcode::Goto:
        arity(1, 1);
        ins.name = name_arg(1);
        jumps.emplace_back(prog.code.size(), toks[1]);
        break;
      case Opcode::Label:
        arity(1, 1);
        ins.name = name_arg(1);
        if (!prog.labels.emplace(ins.name, prog.code.size()).second)
          parse_error(line_no, toks[1].column, "duplicate label '" + ins.name + "'");
        break;
      default:
        arity(0, 0);
        break;
    }
    prog.code.push_back(std::move(ins));
  }

  for (auto& [index, tok] : jumps) {
    auto it = prog.labels.find(prog.code[index].name);
    if (it == prog.labels.end())
      parse_error(prog.code[index].line, tok.column, "undefined label '" + prog.code[index].name + "'");
    prog.code[index].target = it->second;
  }
  return prog;
}

inline std::string format_instruction(const Instruction& ins) {
  std::string out(mnemonic(ins.op));
  auto kind_text = [&] { return ins.kind.is_int() ? std::string() : " " + ins.kind.to_string(); };
  switch (ins.op) {
    case Opcode::Const:
    case Opcode::ArrInit:
      out += " " + std::to_string(ins.value);
      break;
    case Opcode::Load:
    case Opcode::Store:
    case Opcode::Goto:
    case Opcode::Label:
      out += " " + ins.name;
      break;
    case Opcode::FreeInt:
      out += " " + ins.name;
      if (ins.lo) out += " " + std::to_string(*ins.lo) + " " + std::to_string(*ins.hi);
      break;
    case Opcode::NewArrFree:
      if (ins.has_value) out += " " + std::to_string(ins.value);
      out += kind_text();
      break;
    case Opcode::NewArrFixed:
      if (ins.free_elements) out += " free";
      out += kind_text();
      break;
    case Opcode::IfCmp:
      out += " " + std::string(relation_mnemonic(ins.relation)) + " " + ins.name;
      break;
    default:
      break;
  }
  return out;
}

/// Canonical text: one instruction per line, comments dropped, instructions
/// indented under labels. parse_program(format_program(p)) formats back to
/// the same text.
inline std::string format_program(const Program& prog) {
  std::ostringstream out;
  for (const auto& ins : prog.code) {
    if (ins.op != Opcode::Label) out << "  ";
    out << format_instruction(ins) << '\n';
  }
  return out.str();
}

}  // namespace fal
