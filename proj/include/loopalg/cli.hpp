#pragma once

// The `loopalg` command line, callable in-process: run_cli(args, out, err).

#include <chrono>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "loopalg/loopalg.hpp"

namespace loopalg {

struct CliOptions {
  std::string command;
  std::string model_path;
  int max_degree = 20;
  int page = 2;
  std::optional<int> component;
  int max_filtration = 6;
  int max_weight = 12;
  std::vector<std::string> classes;
  std::optional<std::string> alpha;
  std::optional<std::string> shriek_path;
  std::string format = "text";
  unsigned jobs = 1;
  bool timing = false;
  bool table = false;
};

namespace cli_detail {

inline std::vector<std::string> format_all(const std::vector<Element>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(format_element(e));
  return out;
}

inline Json window(const CliOptions& o) { return Json{{"min_degree", 0}, {"max_degree", o.max_degree}}; }

// Homology table; with a component, only that block of each degree.
inline void homology_rows(Report& r, const HomologyWindow& H, std::optional<int> component) {
  for (int n = H.lo(); n <= H.hi(); ++n) {
    const DegreeHomology& dh = H.at(n);
    TableRow row;
    row.degree = n;
    for (const auto& b : dh.blocks) {
      if (component && b.key != *component) continue;
      for (std::size_t i = 0; i < b.h.dim(); ++i) row.basis.push_back(format_element(H.representative(n, b.offset + i)));
    }
    row.dimension = static_cast<int>(row.basis.size());
    r.tables.push_back(std::move(row));
  }
}

inline void cmd_parse(const CliOptions&, const FreeCDGA& m, Report& r) {
  r.verdicts["valid"] = true;
  r.verdicts["generators"] = m.alg->size();
  r.witnesses["model"] = serialize_model(m);
}

inline void cmd_hh(const CliOptions& o, const FreeCDGA& m, Report& r) {
  auto L = build_L(m);
  HomologyWindow H(hochschild_complex(L, false), 0, o.max_degree, o.jobs);
  homology_rows(r, H, o.component);
  if (o.component) r.verdicts["component"] = *o.component;
}

inline void cmd_hcminus(const CliOptions& o, const FreeCDGA& m, Report& r) {
  auto E = build_E(build_L(m));
  HomologyWindow H(cyclic_complex(E, false), 0, o.max_degree, o.jobs);
  homology_rows(r, H, o.component);
  if (o.component) r.verdicts["component"] = *o.component;
}

inline void cmd_bv_exact(const CliOptions& o, const FreeCDGA& m, Report& r) {
  auto L = build_L(m);
  auto E = build_E(L);
  BVReport bv = bv_exactness(L, o.max_degree, o.jobs);
  SReport s = s_action_triviality(E, o.max_degree, o.jobs);
  CrossCheck cc = cross_check_bv_s(bv, s);
  for (const auto& d : bv.degrees) {
    TableRow row;
    row.degree = d.degree;
    row.dimension = static_cast<int>(d.dim);
    row.extra["ker_B"] = d.kernel;
    row.extra["im_B"] = d.image;
    r.tables.push_back(std::move(row));
  }
  r.verdicts["bv_exact"] = bv.exact;
  r.verdicts["max_degree"] = o.max_degree;
  r.verdicts["failing_degrees"] = bv.failing;
  r.verdicts["s_action_trivial"] = s.trivial;
  r.verdicts["s_action_window"] = o.max_degree - 2;
  r.verdicts["cross_check_agrees"] = cc.agree;
  r.verdicts["cross_check_up_to"] = cc.checked_up_to;
  if (bv.witness) {
    r.witnesses["minimal_degree"] = *bv.witness_degree;
    r.witnesses["minimal"] = format_element(*bv.witness);
  }
  Json cls = Json::array();
  for (const auto& text : o.classes) {
    Element w = L->parse(text);
    Json j;
    j["class"] = format_element(w);
    j["degree"] = w.degree() ? Json(*w.degree()) : Json(nullptr);
    j["cycle"] = L->delta(w).is_zero();
    j["bv_witness"] = j["cycle"].get<bool>() && is_bv_witness(bv, w);
    if (o.alpha) {
      Element a = L->parse(*o.alpha);
      j["s_class_equals_d_alpha"] = L->s(w) == L->delta(a);
    }
    cls.push_back(j);
  }
  if (!cls.empty()) r.witnesses["classes"] = cls;
}

inline void cmd_weights(const CliOptions& o, const FreeCDGA& m, Report& r) {
  WeightReport w = weight_check(m);
  r.verdicts["has_weights"] = w.has_weights;
  r.verdicts["weights_valid"] = w.valid;
  r.verdicts["bv_exact_predicted"] = w.valid;
  r.verdicts["message"] = w.message;
  if (w.offending_generator) r.witnesses["generator"] = *w.offending_generator;
  if (w.offending_term) r.witnesses["term"] = *w.offending_term;
  if (!w.valid) {
    WeightSearch s = exhaustive_weight_search(m, o.max_weight);
    r.verdicts["search_max_weight"] = o.max_weight;
    r.verdicts["search_tried"] = s.tried;
    r.verdicts["search_valid"] = s.valid_count;
    if (!s.valid.empty()) r.witnesses["found"] = s.valid;
  }
  if (w.valid) {
    BVReport bv = bv_exactness(build_L(m), o.max_degree, o.jobs);
    r.verdicts["bv_exact_computed"] = bv.exact;
    r.verdicts["max_degree"] = o.max_degree;
    if (!bv.exact) throw ConsistencyError("positive weights predict BV exactness but degree " +
                                          std::to_string(bv.failing.front()) + " fails");
  }
}

inline void cmd_emss(const CliOptions& o, const FreeCDGA& m, Report& r) {
  auto E = build_E(build_L(m));
  SpectralSequence ss(E, o.component.value_or(0));
  PageTable T = page(ss, o.page, o.max_degree, o.max_filtration, true, o.jobs);
  std::map<int, TableRow> rows;
  for (int n = 0; n <= o.max_degree; ++n) rows[n].degree = n;
  for (const auto& e : T.entries) {
    TableRow& row = rows[e.n];
    row.dimension += static_cast<int>(e.dim);
    row.extra["slots"].push_back(Json{{"p", e.p}, {"q", e.q}, {"dim", e.dim}, {"d_rank", e.d_rank}});
  }
  for (auto& [n, row] : rows) r.tables.push_back(std::move(row));
  r.verdicts["component"] = o.component.value_or(0);
  r.verdicts["page"] = o.page;
  r.verdicts["max_total_degree"] = o.max_degree;
  r.verdicts["max_filtration"] = o.max_filtration;
  r.verdicts["page_zero"] = T.zero();
  if (!o.classes.empty()) {
    if (!o.alpha) throw DomainError("d2 check needs --alpha together with --class");
    D2Report d = d2_check(E, E->L->parse(o.classes.front()), E->L->parse(*o.alpha));
    r.verdicts["class_cycle"] = d.omega_cycle;
    r.verdicts["s_class_equals_d_alpha"] = d.identity;
    r.verdicts["d2_nonzero"] = d.nonzero;
    r.verdicts["d2_nonzero_pages"] = d.page_nonzero;
    r.verdicts["class_degree"] = d.degree;
  }
}

inline std::string dual_string(const StringPipeline::Dual& d) {
  std::string s;
  for (const auto& [k, c] : d) {
    if (!s.empty()) s += " + ";
    s += to_string(c) + " [" + std::to_string(k.first) + ":" + std::to_string(k.second) + "]";
  }
  return s.empty() ? "0" : s;
}

inline std::optional<std::string> shriek_text(const CliOptions& o, const FreeCDGA& m) {
  if (o.shriek_path) return read_file(*o.shriek_path);
  return m.shriek;
}

inline void cmd_sbracket(const CliOptions& o, const FreeCDGA& m, Report& r) {
  auto E = build_E(build_L(m));
  StringPipeline S(E, shriek_text(o, m), o.max_degree, o.jobs);
  const bool named = is_nonformal_11_manifold(m);
  r.verdicts["shriek"] = S.shriek().text;
  r.verdicts["dimension"] = S.dimension();
  r.verdicts["max_degree"] = o.max_degree;
  r.verdicts["sign_convention"] = "Dsb = -(-1)^|c| (beta (x) beta) Dlp(pi c)";
  auto name = [&](int d, int i) { return "(" + format_element(S.connes().HC.representative(d, static_cast<std::size_t>(i))) + ")"; };
  auto express = [&](const TensorCoords& t) {
    if (named)
      if (auto s = express_named(S, t)) return *s;
    return format_tensor(t, name);
  };
  std::vector<Element> inputs;
  for (const auto& text : o.classes) inputs.push_back(E->parse(text));
  if (o.classes.empty())
    for (int n = 1; n + S.dimension() <= o.max_degree; ++n)
      for (const auto& rep : S.connes().HC.representatives(n)) inputs.push_back(rep);
  for (const auto& c : inputs) {
    TableRow row;
    row.degree = c.degree().value_or(0);
    row.dimension = 1;
    row.basis.push_back(format_element(c));
    row.extra["dsb"] = express(S.dsb(c));
    r.tables.push_back(std::move(row));
  }
  if (o.table) {
    Json t = Json::array();
    for (const auto& e : string_bracket_table(S, o.max_degree))
      t.push_back(Json{{"left", std::to_string(e.d1) + ":" + std::to_string(e.i1)},
                       {"right", std::to_string(e.d2) + ":" + std::to_string(e.i2)},
                       {"bracket", dual_string(e.value)}});
    r.witnesses["bracket_table"] = t;
  }
}

// "u^l" is the polynomial class u^l; anything else is a cokernel class.
inline BGClass bg_class(const BGAlgebra& A, const std::string& text) {
  static const std::regex upow(R"(\s*u\s*(\^\s*(\d+))?\s*)");
  std::smatch mt;
  if (std::regex_match(text, mt, upow)) return BGClass::u(mt[2].matched ? std::stoi(mt[2]) : 1);
  return BGClass::of(A.parse(text));
}

inline std::string bg_class_string(const BGClass& c) {
  return c.coker ? format_element(*c.coker) : "u^" + std::to_string(c.u_power);
}

inline void cmd_bg(const CliOptions& o, const FreeCDGA& m, Report& r) {
  BGAlgebra A = bg_from_model(m);
  r.verdicts["dim_G"] = A.dim_G;
  r.verdicts["max_degree"] = o.max_degree;
  r.verdicts["sign_convention"] = "[x_1..x_n] = (-1)^((n-1)|x_1| + ... + |x_(n-1)|) Coker(pi x_1 ... pi x_n)";
  if (!o.classes.empty()) {
    std::vector<BGClass> args;
    for (const auto& t : o.classes) args.push_back(bg_class(A, t));
    if (args.size() == 1) {
      r.witnesses["pi"] = format_element(bg_pi(A, args[0]));
      r.witnesses["degree"] = bg_degree(A, args[0]);
      return;
    }
    Element v = bg_gravity(A, args);
    std::vector<std::string> shown;
    for (const auto& a : args) shown.push_back(bg_class_string(a));
    r.witnesses["arguments"] = shown;
    r.witnesses["bracket"] = format_element(v);
    return;
  }
  // Binary cobrackets of monomial cokernel classes and u-powers of degree <= max_degree.
  std::vector<BGClass> cls;
  for (int h = -A.dim_G; h - 2 <= o.max_degree; ++h)
    for (const auto& mono : A.basis(h)) {
      Element e = A.alg->term(mono);
      if (!bg_coker(A, e).is_zero()) cls.push_back(BGClass::of(e));
    }
  for (int l = 0; 2 * l - A.dim_G - 1 <= o.max_degree; ++l) cls.push_back(BGClass::u(l));
  Json t = Json::array();
  for (const auto& a : cls)
    for (const auto& b : cls) {
      Element v = bg_cobracket(A, a, b);
      if (!v.is_zero()) t.push_back(Json{{"left", bg_class_string(a)}, {"right", bg_class_string(b)}, {"bracket", format_element(v)}});
    }
  r.witnesses["bracket_table"] = t;
  r.verdicts["classes"] = cls.size();
}

inline void cmd_gysin(const CliOptions& o, const FreeCDGA& m, Report& r) {
  GysinReport g = gysin_check(build_E(build_L(m)), o.max_degree);
  r.verdicts["gysin_ok"] = g.pass;
  r.verdicts["max_degree"] = o.max_degree;
  r.verdicts["monomials_checked"] = g.monomials_checked;
  if (!g.pass) {
    r.witnesses["failure"] = g.failure;
    r.witnesses["element"] = format_element(*g.witness);
    throw ConsistencyError("Gysin check failed: " + g.failure + " on " + format_element(*g.witness));
  }
}

}  // namespace cli_detail

// Exit codes: 0 success, 1 user/domain error, 2 internal consistency violation.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CliOptions o;
  CLI::App app{"Hochschild and cyclic homology, BV exactness and string brackets of Sullivan models", "loopalg"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--max-degree", o.max_degree, "top degree of the window")->capture_default_str();
  app.add_option("--page", o.page, "spectral sequence page r")->capture_default_str();
  app.add_option("--component", o.component, "word-length component (hh, hcminus) or EMSS component N")
;
  app.add_option("--max-filtration", o.max_filtration, "EMSS filtration bound")->capture_default_str();
  app.add_option("--max-weight", o.max_weight, "bound of the exhaustive weight search")->capture_default_str();
  app.add_option("--class", o.classes, "class expression (repeatable)");
  app.add_option("--alpha", o.alpha, "primitive alpha with s(class) = d(alpha)");
  app.add_option("--shriek", o.shriek_path, "file with the fundamental class for Diag!");
  app.add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--timing", o.timing, "report wall time");
  app.add_flag("--table", o.table, "sbracket: also print the string bracket table");
  using Handler = void (*)(const CliOptions&, const FreeCDGA&, Report&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"parse", "validate a model file", cli_detail::cmd_parse},
      {"hh", "Hochschild homology table", cli_detail::cmd_hh},
      {"hcminus", "negative cyclic homology table", cli_detail::cmd_hcminus},
      {"bv-exact", "BV exactness and S-action cross-check", cli_detail::cmd_bv_exact},
      {"weights", "positive weight check and search", cli_detail::cmd_weights},
      {"emss", "spectral sequence page table", cli_detail::cmd_emss},
      {"sbracket", "dual string bracket of a manifold", cli_detail::cmd_sbracket},
      {"bg", "string cobracket of a classifying space", cli_detail::cmd_bg},
      {"gysin-check", "Gysin model identities", cli_detail::cmd_gysin},
  };
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("model", o.model_path, "model file (.sul)")->required();
    sub->callback([&o, n = name] { o.command = n; });
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    FreeCDGA m = load_model(o.model_path);
    Report r;
    r.command = o.command;
    r.model_name = m.name;
    r.max_degree = o.max_degree;
    for (const auto& [name, help, fn] : commands)
      if (name == o.command) fn(o, m, r);
    if (!r.verdicts.contains("max_degree")) r.verdicts["window"] = cli_detail::window(o);
    if (o.timing)
      r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out << emit_report(r, o.format == "json" ? Format::json : Format::text);
    return 0;
  } catch (const ConsistencyError& e) {
    err << "internal consistency violation: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace loopalg
