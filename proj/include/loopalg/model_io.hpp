#pragma once

// The .sul model language, the element grammar, and report emission.
//
//   generator <sym> deg <n>
//   diff <sym> = <expr>
//   weight <sym> = <n>
//   shriek fundamental = <expr>      (expression over L(...)/R(...) slots)
//
// Expressions: rationals p/q, *, ^, +, -, parentheses, juxtaposition as
// product, x' for the bar of x, L(e)/R(e) for tensor slots. '#' starts a comment.

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "loopalg/algebra.hpp"

namespace loopalg {

namespace detail {

class ExprParser {
 public:
  ExprParser(const Algebra& alg, std::string_view text, int line = 1, int col0 = 1)
      : alg_(alg), s_(text), line_(line), col0_(col0) {}

  Element parse() {
    Element e = expr(Tag::other);
    skip_ws();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw DomainError("line " + std::to_string(line_) + ", col " +
                      std::to_string(col0_ + static_cast<int>(pos_)) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool starts_factor() {
    skip_ws();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '(';
  }

  Element expr(Tag slot) {
    Element acc = alg_.zero();
    bool first = true;
    for (;;) {
      skip_ws();
      Scalar sign(1);
      if (peek('+') || peek('-')) {
        if (s_[pos_] == '-') sign = -1;
        ++pos_;
      } else if (!first) {
        break;
      }
      Element t = term(slot);
      t *= sign;
      acc += t;
      first = false;
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '+' && s_[pos_] != '-')) break;
    }
    return acc;
  }

  Element term(Tag slot) {
    Element acc = factor(slot);
    for (;;) {
      if (peek('*')) {
        ++pos_;
        acc = alg_.multiply(acc, factor(slot));
      } else if (starts_factor()) {
        acc = alg_.multiply(acc, factor(slot));
      } else {
        break;
      }
    }
    return acc;
  }

  Element factor(Tag slot) {
    Element base = primary(slot);
    if (peek('^')) {
      ++pos_;
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a non-negative integer");
      int n = std::stoi(std::string(s_.substr(start, pos_ - start)));
      base = alg_.power(base, n);
    }
    return base;
  }

  Element primary(Tag slot) {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Element e = expr(slot);
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      if ((name == "L" || name == "R" || name == "P") && peek('(')) {
        if (slot != Tag::other) fail("nested tensor slot");
        ++pos_;
        Tag t = name == "L" ? Tag::left : name == "R" ? Tag::right : Tag::path;
        Element e = expr(t);
        if (!peek(')')) fail("expected ')'");
        ++pos_;
        return e;
      }
      while (pos_ < s_.size() && s_[pos_] == '\'') {
        name += '\'';
        ++pos_;
      }
      int idx = lookup(name, slot);
      if (idx < 0) {
        pos_ = start;
        fail("unknown symbol '" + name + "'");
      }
      return alg_.gen(static_cast<std::size_t>(idx));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  int lookup(const std::string& name, Tag slot) const {
    for (std::size_t i = 0; i < alg_.size(); ++i) {
      const Generator& g = alg_.generator(i);
      if (g.name != name) continue;
      bool slotted = g.tag == Tag::left || g.tag == Tag::right || g.tag == Tag::path;
      if (slot == Tag::other ? !slotted : g.tag == slot) return static_cast<int>(i);
    }
    return -1;
  }

  Element number() {
    auto digits = [&] {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return std::string(s_.substr(start, pos_ - start));
    };
    std::string num = digits();
    Scalar q(mpz_class(num), mpz_class(1));
    std::size_t save = pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '/') {
      ++pos_;
      skip_ws();
      std::string den = digits();
      if (den.empty()) fail("malformed rational");
      mpz_class d(den);
      if (d == 0) fail("zero denominator");
      q = Scalar(mpz_class(num), d);
      q.canonicalize();
    } else {
      pos_ = save;
    }
    return q * alg_.one();
  }

  const Algebra& alg_;
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline bool reserved_name(const std::string& s) {
  return s == "u" || s == "e" || s == "L" || s == "R" || s == "P";
}

}  // namespace detail

inline Element parse_element(const Algebra& alg, std::string_view text) {
  return detail::ExprParser(alg, text).parse();
}

inline std::string format_monomial(const Algebra& alg, const Monomial& m) {
  std::string out;
  Tag open = Tag::other;
  auto close = [&] {
    if (open != Tag::other) out += ")";
    open = Tag::other;
  };
  for (std::size_t i = 0; i < m.exp.size(); ++i) {
    if (!m.exp[i]) continue;
    const Generator& g = alg.generator(i);
    Tag slot = (g.tag == Tag::left || g.tag == Tag::right || g.tag == Tag::path) ? g.tag : Tag::other;
    if (slot != open) {
      close();
      if (!out.empty()) out += "*";
      if (slot != Tag::other) out += slot == Tag::left ? "L(" : slot == Tag::right ? "R(" : "P(";
      open = slot;
    } else if (!out.empty() && out.back() != '(') {
      out += "*";
    }
    out += g.name;
    if (m.exp[i] > 1) out += "^" + std::to_string(m.exp[i]);
  }
  close();
  return out.empty() ? "1" : out;
}

inline std::string format_element(const Element& e) {
  if (e.is_zero()) return "0";
  const Algebra& alg = *e.algebra();
  std::string out;
  bool first = true;
  for (const auto& [m, c] : e.terms()) {
    Scalar a = abs(c);
    bool neg = sgn(c) < 0;
    if (first) out += neg ? "-" : "";
    else out += neg ? " - " : " + ";
    first = false;
    bool unit = m.is_one();
    if (unit) out += to_string(a);
    else {
      if (a != 1) out += to_string(a) + " ";
      out += format_monomial(alg, m);
    }
  }
  return out;
}

// Parse a .sul model; `name` defaults to what the caller derives from the path.
inline FreeCDGA parse_model(std::string_view text, const std::string& name = "model") {
  struct Stmt {
    int line;
    std::string kind, sym, rhs;
    int rhs_col;
  };
  std::vector<Generator> gens;
  std::vector<Stmt> diffs, weights;
  std::optional<std::string> shriek;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  auto fail = [&](int line, const std::string& msg) -> void {
    throw DomainError("line " + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    std::string kw;
    ls >> kw;
    if (kw == "generator") {
      std::string sym, degkw;
      long long deg = 0;
      if (!(ls >> sym >> degkw >> deg) || degkw != "deg") fail(lineno, "expected 'generator <sym> deg <n>'");
      std::string rest;
      if (ls >> rest) fail(lineno, "trailing text after generator declaration");
      if (!std::isalpha(static_cast<unsigned char>(sym[0])) && sym[0] != '_')
        fail(lineno, "invalid generator name '" + sym + "'");
      for (char c : sym)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') fail(lineno, "invalid generator name '" + sym + "'");
      if (detail::reserved_name(sym)) fail(lineno, "generator name '" + sym + "' is reserved");
      if (deg <= 0) fail(lineno, "generator '" + sym + "' must have positive degree");
      for (auto& g : gens)
        if (g.name == sym) fail(lineno, "generator '" + sym + "' declared twice");
      gens.push_back(Generator{sym, static_cast<int>(deg), Tag::base, -1});
    } else if (kw == "diff" || kw == "weight" || kw == "shriek") {
      auto eq = t.find('=');
      if (eq == std::string::npos) fail(lineno, "expected '='");
      std::istringstream lhs(t.substr(0, eq));
      std::string k, sym, extra;
      lhs >> k >> sym;
      if (sym.empty() || (lhs >> extra)) fail(lineno, "malformed left-hand side");
      int col = static_cast<int>(raw.find('=')) + 2;
      Stmt st{lineno, kw, sym, t.substr(eq + 1), col};
      if (kw == "diff") diffs.push_back(st);
      else if (kw == "weight") weights.push_back(st);
      else {
        if (sym != "fundamental") fail(lineno, "expected 'shriek fundamental = <expr>'");
        shriek = detail::trim(st.rhs);
      }
    } else {
      fail(lineno, "unknown statement '" + kw + "'");
    }
  }
  FreeCDGA m;
  m.name = name;
  m.alg = std::make_shared<Algebra>(gens);
  std::vector<Element> dv(gens.size(), m.alg->zero());
  std::vector<bool> seen(gens.size(), false);
  for (const auto& st : diffs) {
    int i = m.alg->find(st.sym);
    if (i < 0) fail(st.line, "undeclared generator '" + st.sym + "'");
    if (seen[static_cast<std::size_t>(i)]) fail(st.line, "differential of '" + st.sym + "' given twice");
    seen[static_cast<std::size_t>(i)] = true;
    Element e = detail::ExprParser(*m.alg, st.rhs, st.line, st.rhs_col).parse();
    if (!e.is_zero()) {
      auto d = e.degree();
      if (!d) fail(st.line, "inhomogeneous differential for '" + st.sym + "'");
      if (*d != gens[static_cast<std::size_t>(i)].degree + 1)
        fail(st.line, "d(" + st.sym + ") has degree " + std::to_string(*d) + ", expected " +
                          std::to_string(gens[static_cast<std::size_t>(i)].degree + 1));
    }
    dv[static_cast<std::size_t>(i)] = e;
  }
  if (!weights.empty()) {
    std::vector<int> w(gens.size(), 0);
    for (const auto& st : weights) {
      int i = m.alg->find(st.sym);
      if (i < 0) fail(st.line, "undeclared generator '" + st.sym + "'");
      std::string v = detail::trim(st.rhs);
      bool ok = !v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (!ok || std::stoll(v) <= 0) fail(st.line, "weight must be a positive integer");
      w[static_cast<std::size_t>(i)] = static_cast<int>(std::stoll(v));
    }
    for (std::size_t i = 0; i < gens.size(); ++i)
      if (w[i] == 0) throw DomainError("no weight given for generator '" + gens[i].name + "'");
    m.weights = w;
  }
  m.d = Derivation(m.alg.get(), 1, dv);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    Element dd = m.d(m.d.value(i));
    if (!dd.is_zero())
      throw DomainError("d^2 != 0 on generator '" + gens[i].name + "': d(d " + gens[i].name +
                        ") = " + format_element(dd));
  }
  m.shriek = shriek;
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string stem_of(const std::string& path) {
  auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = base.rfind('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

inline FreeCDGA load_model(const std::string& path) { return parse_model(read_file(path), stem_of(path)); }

inline std::string serialize_model(const FreeCDGA& m) {
  std::string out;
  const Algebra& a = *m.alg;
  for (std::size_t i = 0; i < a.size(); ++i)
    out += "generator " + a.generator(i).name + " deg " + std::to_string(a.generator(i).degree) + "\n";
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!m.d.value(i).is_zero()) out += "diff " + a.generator(i).name + " = " + format_element(m.d.value(i)) + "\n";
  if (m.weights)
    for (std::size_t i = 0; i < a.size(); ++i)
      out += "weight " + a.generator(i).name + " = " + std::to_string((*m.weights)[i]) + "\n";
  if (m.shriek) out += "shriek fundamental = " + *m.shriek + "\n";
  return out;
}

// ---------------------------------------------------------------- reports

using Json = nlohmann::ordered_json;

struct TableRow {
  int degree = 0;
  int dimension = 0;
  std::vector<std::string> basis;
  Json extra = Json::object();
};

struct Report {
  std::string command;
  std::string model_name;
  int max_degree = 0;
  std::vector<TableRow> tables;
  Json verdicts = Json::object();
  Json witnesses = Json::object();
  double elapsed_ms = 0;
};

enum class Format { text, json };

inline std::string emit_report(const Report& r, Format f) {
  if (f == Format::json) {
    Json j;
    j["command"] = r.command;
    j["model_name"] = r.model_name;
    j["max_degree"] = r.max_degree;
    Json tables = Json::array();
    for (const auto& row : r.tables) {
      Json t;
      t["degree"] = row.degree;
      t["dimension"] = row.dimension;
      t["basis"] = row.basis;
      for (auto it = row.extra.begin(); it != row.extra.end(); ++it) t[it.key()] = it.value();
      tables.push_back(t);
    }
    j["tables"] = tables;
    j["verdicts"] = r.verdicts;
    j["witnesses"] = r.witnesses;
    j["elapsed_ms"] = r.elapsed_ms;
    return j.dump(2) + "\n";
  }
  std::ostringstream o;
  o << r.command << " " << r.model_name << " (max degree " << r.max_degree << ")\n";
  for (const auto& row : r.tables) {
    o << "  degree " << row.degree << ": dim " << row.dimension;
    for (auto it = row.extra.begin(); it != row.extra.end(); ++it) o << ", " << it.key() << " " << it.value().dump();
    o << "\n";
    for (const auto& b : row.basis) o << "    " << b << "\n";
  }
  for (auto it = r.verdicts.begin(); it != r.verdicts.end(); ++it) o << "  " << it.key() << ": " << it.value().dump() << "\n";
  for (auto it = r.witnesses.begin(); it != r.witnesses.end(); ++it) o << "  witness " << it.key() << ": " << it.value().dump() << "\n";
  return o.str();
}

}  // namespace loopalg
