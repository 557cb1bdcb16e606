#include "chebrisk/problemfile.hpp"

#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::kValidation, "problem file: " + where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, where + "." + key);
}

Marginal parse_dist(const json& j, const std::string& where) {
  const json& type = field(j, "type", where);
  if (!type.is_string()) fail(where + ".type", "expected a string");
  const std::string t = type.get<std::string>();
  Marginal m;
  if (t == "uniform") {
    m = Uniform{number(field(j, "a", where), where + ".a"), number(field(j, "b", where), where + ".b")};
  } else if (t == "beta") {
    m = Beta{number(field(j, "alpha", where), where + ".alpha"), number(field(j, "beta", where), where + ".beta"),
             number_or(j, "a", 0.0, where), number_or(j, "b", 1.0, where)};
  } else if (t == "point") {
    m = PointMass{number(field(j, "v", where), where + ".v")};
  } else if (t == "moments") {
    const json& vals = field(j, "values", where);
    if (!vals.is_array()) fail(where + ".values", "expected an array");
    MomentTable table;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      table.values.push_back(number(vals[i], where + ".values[" + std::to_string(i) + "]"));
    }
    m = std::move(table);
  } else {
    fail(where + ".type", "unknown distribution '" + t + "'");
  }
  try {
    validate(m);
  } catch (const Error& e) {
    fail(where, e.what());
  }
  return m;
}

json dist_to_json(const Marginal& m) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return {{"type", "uniform"}, {"a", d.a}, {"b", d.b}};
        } else if constexpr (std::is_same_v<T, Beta>) {
          return {{"type", "beta"}, {"alpha", d.alpha}, {"beta", d.beta}, {"a", d.a}, {"b", d.b}};
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return {{"type", "point"}, {"v", d.v}};
        } else {
          return {{"type", "moments"}, {"values", d.values}};
        }
      },
      m);
}

}  // namespace

ProblemFile parse_problem(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("problem file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("$", "expected an object");
  ProblemFile pf;
  RiskProblem& p = pf.problem;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) fail("$.name", "expected a string");
    p.name = it->get<std::string>();
  }
  if (auto it = doc.find("notes"); it != doc.end()) {
    if (!it->is_string()) fail("$.notes", "expected a string");
    pf.notes = it->get<std::string>();
  }

  const json& vars = field(doc, "variables", "$");
  if (!vars.is_array() || vars.empty()) fail("$.variables", "expected a non-empty array");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "$.variables[" + std::to_string(i) + "]";
    const json& name = field(vars[i], "name", where);
    if (!name.is_string() || name.get<std::string>().empty()) fail(where + ".name", "expected a non-empty string");
    const std::string n = name.get<std::string>();
    if (!index.emplace(n, i).second) fail(where + ".name", "duplicate variable '" + n + "'");
    p.variables.push_back(n);
    p.margins.push_back(parse_dist(field(vars[i], "dist", where), where + ".dist"));
  }

  const json& cons = field(doc, "constraints", "$");
  if (!cons.is_array() || cons.empty()) fail("$.constraints", "expected a non-empty array");
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const std::string where = "$.constraints[" + std::to_string(c) + "]";
    PolyConstraint pc{MultiPoly(p.margins.size()), 0.0, 0.0};
    const json& terms = field(cons[c], "poly", where);
    if (!terms.is_array() || terms.empty()) fail(where + ".poly", "expected a non-empty array of terms");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string tw = where + ".poly[" + std::to_string(t) + "]";
      const double coeff = number(field(terms[t], "coeff", tw), tw + ".coeff");
      Exponents e(p.margins.size(), 0);
      if (auto it = terms[t].find("exponents"); it != terms[t].end()) {
        if (!it->is_object()) fail(tw + ".exponents", "expected an object of variable: power");
        for (const auto& [name, power] : it->items()) {
          auto v = index.find(name);
          if (v == index.end()) fail(tw + ".exponents", "undeclared variable '" + name + "'");
          if (!power.is_number_integer() || power.get<long>() < 0 || power.get<long>() > 1000) {
            fail(tw + ".exponents." + name, "expected a non-negative integer");
          }
          e[v->second] += power.get<int>();
        }
      }
      try {
        pc.poly.add_term(e, coeff);
      } catch (const Error& err) {
        fail(tw, err.what());
      }
    }
    pc.lower = number(field(cons[c], "l", where), where + ".l");
    pc.upper = number(field(cons[c], "u", where), where + ".u");
    if (!(pc.lower <= pc.upper)) fail(where, "requires l <= u");
    p.constraints.push_back(std::move(pc));
  }

  const json& deg = field(doc, "degree", "$");
  if (!deg.is_number_integer() || deg.get<long>() < 1 || deg.get<long>() > kMaxUnivariateDegree) {
    fail("$.degree", "expected an integer in [1, " + std::to_string(kMaxUnivariateDegree) + "]");
  }
  p.degree = deg.get<int>();
  p.validate();
  return pf;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kValidation, "cannot open problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ProblemFile pf = parse_problem(buf.str());
  if (pf.problem.name.empty()) pf.problem.name = path.stem().string();
  return pf;
}

std::string serialize_problem(const ProblemFile& file) {
  const RiskProblem& p = file.problem;
  json doc;
  doc["name"] = p.name;
  json vars = json::array();
  for (std::size_t i = 0; i < p.margins.size(); ++i) {
    const std::string name = i < p.variables.size() ? p.variables[i] : "x" + std::to_string(i + 1);
    vars.push_back({{"name", name}, {"dist", dist_to_json(p.margins[i])}});
  }
  doc["variables"] = vars;
  json cons = json::array();
  for (const auto& c : p.constraints) {
    json terms = json::array();
    for (const auto& [e, coeff] : c.poly.terms()) {
      json exps = json::object();
      for (std::size_t v = 0; v < e.size(); ++v) {
        if (e[v] != 0) exps[vars[v]["name"].get<std::string>()] = e[v];
      }
      terms.push_back({{"coeff", coeff}, {"exponents", exps}});
    }
    cons.push_back({{"poly", terms}, {"l", c.lower}, {"u", c.upper}});
  }
  doc["constraints"] = cons;
  doc["degree"] = p.degree;
  doc["notes"] = file.notes;
  return doc.dump(2) + "\n";
}

}  // namespace chebrisk
