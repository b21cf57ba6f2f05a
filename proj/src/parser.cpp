#include "liftrc/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace liftrc {

std::string Diagnostic::to_string() const {
  return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

namespace {

struct Token {
  enum class Kind { kIdent, kNumber, kSymbol, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blank();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::kIdent;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
          t.text += advance();
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        t.kind = Token::Kind::kNumber;
        while (pos_ < text_.size()) {
          const char d = text_[pos_];
          const char prev = t.text.empty() ? '\0' : t.text.back();
          const bool exponent_sign = (d == '+' || d == '-') && (prev == 'e' || prev == 'E');
          if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' || d == '/' || d == 'e' || d == 'E' ||
              exponent_sign) {
            t.text += advance();
          } else {
            break;
          }
        }
      } else if (c == '-' && peek(1) == '>') {
        t.kind = Token::Kind::kSymbol;
        t.text = "->";
        advance();
        advance();
      } else if (c == '!' && peek(1) == '=') {
        t.kind = Token::Kind::kSymbol;
        t.text = "!=";
        advance();
        advance();
      } else if (std::string_view("[](){},:=").find(c) != std::string_view::npos) {
        t.kind = Token::Kind::kSymbol;
        t.text = std::string(1, advance());
      } else {
        throw ParseError({t.line, t.column, std::string("unexpected character '") + c + "'"});
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead) const { return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0'; }

  char advance() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Model run() {
    while (!at_end()) statement();
    if (model_.populations.empty()) fail(tokens_.front(), "no populations declared");
    return std::move(model_);
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& message) const {
    throw ParseError({t.line, t.column, message});
  }

  bool at_end() const { return tokens_[pos_].kind == Token::Kind::kEnd; }
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (!at_end()) ++pos_;
    return t;
  }
  bool accept(const std::string& symbol) {
    if (peek().kind == Token::Kind::kSymbol && peek().text == symbol) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const std::string& symbol) {
    if (!accept(symbol)) fail(peek(), "expected '" + symbol + "'" + found());
  }
  std::string found() const {
    return at_end() ? " but reached the end of input" : " but found '" + peek().text + "'";
  }
  const Token& ident(const char* what) {
    if (peek().kind != Token::Kind::kIdent) fail(peek(), std::string("expected ") + what + found());
    return next();
  }

  void statement() {
    const Token& kw = ident("a statement");
    if (kw.text == "population") {
      population();
    } else if (kw.text == "range") {
      range();
    } else if (kw.text == "prv") {
      functor();
    } else if (kw.text == "parfactor") {
      parfactor();
    } else if (kw.text == "observe") {
      Observation obs;
      obs.atom = ground_atom();
      expect("=");
      const Token& value = ident("a value");
      check_value(obs.atom.functor, value);
      obs.value = value.text;
      model_.observations.push_back(std::move(obs));
    } else if (kw.text == "query") {
      model_.queries.push_back(ground_atom());
    } else {
      fail(kw, "unknown statement '" + kw.text + "'");
    }
  }

  void population() {
    const Token& name = ident("a population name");
    if (model_.find_population(name.text)) fail(name, "duplicate population '" + name.text + "'");
    Population pop;
    if (peek().kind == Token::Kind::kNumber) {
      const Token& size = next();
      if (!std::all_of(size.text.begin(), size.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        fail(size, "population size must be a non-negative integer");
      }
      std::size_t n = 0;
      try {
        n = std::stoull(size.text);
      } catch (const std::exception&) {
        fail(size, "population size out of range");
      }
      pop = make_population(name.text, n);
    } else {
      expect("{");
      pop.name = name.text;
      pop.auto_named = false;
      while (!accept("}")) {
        if (at_end()) fail(peek(), "unterminated individual list");
        pop.individuals.push_back(ident("an individual").text);
      }
    }
    for (const auto& ind : pop.individuals) {
      if (!individuals_.insert(ind).second) fail(name, "duplicate individual '" + ind + "'");
    }
    model_.populations.push_back(std::move(pop));
  }

  void range() {
    const Token& name = ident("a range name");
    if (model_.find_range(name.text)) fail(name, "duplicate range '" + name.text + "'");
    RangeDecl r{name.text, {}};
    expect("{");
    while (!accept("}")) {
      if (at_end()) fail(peek(), "unterminated range");
      const Token& v = ident("a value");
      if (std::find(r.values.begin(), r.values.end(), v.text) != r.values.end()) {
        fail(v, "range '" + name.text + "' repeats value '" + v.text + "'");
      }
      r.values.push_back(v.text);
    }
    if (r.values.empty()) fail(name, "range '" + name.text + "' is empty");
    model_.ranges.push_back(std::move(r));
  }

  void functor() {
    const Token& name = ident("a PRV name");
    if (model_.find_functor(name.text)) fail(name, "duplicate functor '" + name.text + "'");
    FunctorDecl f{name.text, {}, "bool"};
    if (accept("(")) {
      if (!accept(")")) {
        do {
          const Token& type = ident("a population");
          if (!model_.find_population(type.text)) fail(type, "unknown population '" + type.text + "'");
          f.arg_types.push_back(type.text);
        } while (accept(","));
        expect(")");
      }
    }
    if (accept(":")) {
      const Token& range = ident("a range");
      if (!model_.find_range(range.text)) fail(range, "unknown range '" + range.text + "'");
      f.range = range.text;
    }
    model_.functors.push_back(std::move(f));
  }

  // Atom whose identifiers are resolved against `params` first, then individuals.
  Prv atom(const std::map<std::string, Term>& params) {
    const Token& name = ident("a PRV");
    const FunctorDecl* f = model_.find_functor(name.text);
    if (!f) fail(name, "unknown PRV '" + name.text + "'");
    Prv prv{name.text, {}};
    std::vector<const Token*> arg_tokens;
    if (accept("(")) {
      if (!accept(")")) {
        do {
          arg_tokens.push_back(&ident("an argument"));
        } while (accept(","));
        expect(")");
      }
    }
    if (arg_tokens.size() != f->arg_types.size()) {
      fail(name, name.text + " takes " + std::to_string(f->arg_types.size()) + " arguments, got " +
                     std::to_string(arg_tokens.size()));
    }
    for (std::size_t i = 0; i < arg_tokens.size(); ++i) {
      const Token& a = *arg_tokens[i];
      const std::string& type = f->arg_types[i];
      if (auto it = params.find(a.text); it != params.end()) {
        if (it->second.type != type) {
          fail(a, "parameter " + a.text + " has type " + it->second.type + ", expected " + type);
        }
        prv.args.push_back(it->second);
      } else {
        prv.args.push_back(constant(a, type));
      }
    }
    return prv;
  }

  Term constant(const Token& t, const std::string& type) const {
    for (const auto& pop : model_.populations) {
      if (std::find(pop.individuals.begin(), pop.individuals.end(), t.text) == pop.individuals.end()) continue;
      if (pop.name != type) fail(t, "constant " + t.text + " is a " + pop.name + ", expected " + type);
      return Term::constant(t.text, type);
    }
    fail(t, "unknown constant '" + t.text + "'");
  }

  Prv ground_atom() { return atom({}); }

  void check_value(const std::string& functor, const Token& value) const {
    const auto& values = model_.range_of(functor).values;
    if (std::find(values.begin(), values.end(), value.text) == values.end()) {
      fail(value, "value '" + value.text + "' is not in the range of " + functor);
    }
  }

  void parfactor() {
    std::map<std::string, Term> params;
    std::map<std::string, const Token*> param_tokens;
    if (accept("[")) {
      if (!accept("]")) {
        do {
          const Token& name = ident("a parameter");
          expect(":");
          const Token& type = ident("a population");
          if (!model_.find_population(type.text)) fail(type, "unknown population '" + type.text + "'");
          if (params.count(name.text)) fail(name, "duplicate parameter '" + name.text + "'");
          params.emplace(name.text, Term::param(name.text, type.text));
          param_tokens.emplace(name.text, &name);
        } while (accept(","));
        expect("]");
      }
    }
    Parfactor pf;
    if (peek().kind == Token::Kind::kIdent && peek().text == "where") {
      next();
      do {
        const Token& left = ident("a term");
        const Token& op = peek();
        expect("!=");
        const Token& right = ident("a term");
        auto term = [&](const Token& t, const Token& other) {
          if (auto it = params.find(t.text); it != params.end()) return it->second;
          auto ot = params.find(other.text);
          if (ot == params.end()) fail(t, "constraint " + left.text + " != " + right.text + " has no parameter");
          return constant(t, ot->second.type);
        };
        const Term a = term(left, right);
        const Term b = term(right, left);
        if (a.type != b.type) fail(op, "constraint between different populations " + a.type + " and " + b.type);
        if (!pf.constraints.add(a, b)) fail(op, "constraint " + left.text + " != " + right.text + " is unsatisfiable");
      } while (accept(","));
    }
    const Token& on = ident("'on'");
    if (on.text != "on") fail(on, "expected 'on'" + std::string(" but found '") + on.text + "'");
    std::vector<const Token*> prv_tokens;
    do {
      prv_tokens.push_back(&peek());
      Prv prv = atom(params);
      if (std::find(pf.prvs.begin(), pf.prvs.end(), prv) != pf.prvs.end()) {
        fail(*prv_tokens.back(), "PRV " + prv.to_string() + " repeats in the scope");
      }
      pf.prvs.push_back(std::move(prv));
    } while (accept(","));

    for (const auto& [name, term] : params) {
      const bool used = std::any_of(pf.prvs.begin(), pf.prvs.end(), [&](const Prv& p) {
        return std::find(p.args.begin(), p.args.end(), term) != p.args.end();
      });
      if (!used) fail(*param_tokens.at(name), "parameter " + name + " does not occur in the scope");
    }

    for (const Prv& p : pf.prvs) pf.table.dims.push_back(model_.range_of(p.functor).values.size());
    const std::size_t rows = pf.table.row_count();
    pf.table.entries.assign(rows, Rational(0));
    std::vector<bool> seen(rows, false);
    const Token& open = peek();
    expect("{");
    std::size_t count = 0;
    while (!accept("}")) {
      if (at_end()) fail(peek(), "unterminated table");
      const Token& row_start = peek();
      std::vector<std::size_t> values;
      for (const Prv& p : pf.prvs) {
        const Token& v = ident("a value");
        check_value(p.functor, v);
        values.push_back(model_.value_index(p.functor, v.text));
      }
      expect("->");
      if (peek().kind != Token::Kind::kNumber) fail(peek(), "expected a number" + found());
      const Token& number = next();
      Rational r;
      try {
        r = parse_rational(number.text);
      } catch (const Error& e) {
        fail(number, e.what());
      }
      if (sgn(r) < 0) fail(number, "negative potential");
      const std::size_t idx = pf.table.index(values);
      if (seen[idx]) fail(row_start, "duplicate table row");
      seen[idx] = true;
      pf.table.entries[idx] = r;
      ++count;
    }
    if (count != rows) {
      fail(open, "expected " + std::to_string(rows) + " rows, got " + std::to_string(count));
    }
    model_.parfactors.push_back(std::move(pf));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Model model_;
  std::set<std::string> individuals_;
};

}  // namespace

ParseResult parse_model(std::string_view text) {
  ParseResult out;
  try {
    out.model = parse_model_or_throw(text);
  } catch (const ParseError& e) {
    out.diagnostics.push_back(e.diagnostic());
  }
  return out;
}

Model parse_model_or_throw(std::string_view text) {
  Parser parser(Lexer(text).run());
  Model model = parser.run();
  try {
    model.validate();
  } catch (const InvalidArgumentError& e) {
    throw ParseError({1, 1, e.what()});
  }
  return model;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgumentError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_or_throw(buf.str());
}

namespace {

std::string term_list(const std::vector<Term>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) out += (i ? "," : "") + terms[i].name;
  return out;
}

}  // namespace

std::string print_model(const Model& model) {
  std::ostringstream os;
  for (const auto& pop : model.populations) {
    const bool generated = pop.auto_named && pop.individuals == make_population(pop.name, pop.size()).individuals;
    if (generated) {
      os << "population " << pop.name << " " << pop.size() << "\n";
    } else {
      os << "population " << pop.name << " {";
      for (const auto& ind : pop.individuals) os << " " << ind;
      os << " }\n";
    }
  }
  for (const auto& r : model.ranges) {
    os << "range " << r.name << " {";
    for (const auto& v : r.values) os << " " << v;
    os << " }\n";
  }
  for (const auto& f : model.functors) {
    os << "prv " << f.name;
    if (!f.arg_types.empty()) {
      os << "(";
      for (std::size_t i = 0; i < f.arg_types.size(); ++i) os << (i ? "," : "") << f.arg_types[i];
      os << ")";
    }
    os << " : " << f.range << "\n";
  }
  for (const auto& pf : model.parfactors) {
    os << "parfactor";
    const auto params = pf.parameters();
    if (!params.empty()) {
      os << " [";
      for (std::size_t i = 0; i < params.size(); ++i) os << (i ? ", " : "") << params[i].name << ":" << params[i].type;
      os << "]";
    }
    if (pf.constraints.size() > 0) {
      os << " where ";
      bool first = true;
      for (const auto& [a, b] : pf.constraints.pairs()) {
        os << (first ? "" : ", ") << a.name << " != " << b.name;
        first = false;
      }
    }
    os << " on ";
    for (std::size_t i = 0; i < pf.prvs.size(); ++i) {
      os << (i ? ", " : "") << pf.prvs[i].functor;
      if (!pf.prvs[i].args.empty()) os << "(" << term_list(pf.prvs[i].args) << ")";
    }
    os << " {\n";
    std::vector<std::size_t> row(pf.prvs.size(), 0);
    for (std::size_t idx = 0; idx < pf.table.entries.size(); ++idx) {
      os << " ";
      for (std::size_t i = 0; i < row.size(); ++i) os << " " << model.range_of(pf.prvs[i].functor).values[row[i]];
      os << " -> " << to_string(pf.table.entries[idx]) << "\n";
      for (std::size_t i = row.size(); i-- > 0;) {
        if (++row[i] < pf.table.dims[i]) break;
        row[i] = 0;
      }
    }
    os << "}\n";
  }
  for (const auto& obs : model.observations) {
    os << "observe " << obs.atom.functor;
    if (!obs.atom.args.empty()) os << "(" << term_list(obs.atom.args) << ")";
    os << " = " << obs.value << "\n";
  }
  for (const auto& q : model.queries) {
    os << "query " << q.functor;
    if (!q.args.empty()) os << "(" << term_list(q.args) << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace liftrc
