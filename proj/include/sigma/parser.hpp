#pragma once

// Lexer and recursive-descent parser for the surface syntax. ASCII keywords
// are canonical; the unicode spellings of lambda, sigma and mu are accepted
// as aliases. `let x = a in b` is sugar for an immediate application and is
// desugared here, so the AST has no let node.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigma/ast.hpp"

namespace sigma {

struct ParseError : std::runtime_error {
  uint32_t line, col;
  ParseError(uint32_t ln, uint32_t co, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(ln) + ":" + std::to_string(co) +
                           ": " + msg),
        line(ln),
        col(co) {}
};

namespace detail {

enum class Tok : uint8_t {
  Ident, Number,
  LParen, RParen, LBrack, RBrack, LBrace, RBrace,
  Dot, Comma, Colon, Assign,  // :=
  Eq, Lt, Gt, Arrow, SubtypeOf,  // -> and <:
  Lambda,  // '\' or unicode lambda
  End,
};

struct Token {
  Tok kind;
  std::string text;
  uint32_t line, col;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_ws_and_comments();
      uint32_t ln = line_, co = col_;
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", ln, co});
        return out;
      }
      char c = src_[pos_];
      if (is_ident_start(c)) {
        std::string s;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) s += advance();
        out.push_back({Tok::Ident, s, ln, co});
        continue;
      }
      if (c >= '0' && c <= '9') {
        std::string s;
        while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') s += advance();
        out.push_back({Tok::Number, s, ln, co});
        continue;
      }
      // Unicode aliases: lambda, final sigma, mu.
      if (try_utf8("\xce\xbb")) { out.push_back({Tok::Lambda, "\\", ln, co}); continue; }
      if (try_utf8("\xcf\x82")) { out.push_back({Tok::Ident, "self", ln, co}); continue; }
      if (try_utf8("\xce\xbc")) { out.push_back({Tok::Ident, "mu", ln, co}); continue; }
      advance();
      switch (c) {
        case '(': out.push_back({Tok::LParen, "(", ln, co}); break;
        case ')': out.push_back({Tok::RParen, ")", ln, co}); break;
        case '[': out.push_back({Tok::LBrack, "[", ln, co}); break;
        case ']': out.push_back({Tok::RBrack, "]", ln, co}); break;
        case '{': out.push_back({Tok::LBrace, "{", ln, co}); break;
        case '}': out.push_back({Tok::RBrace, "}", ln, co}); break;
        case '.': out.push_back({Tok::Dot, ".", ln, co}); break;
        case ',': out.push_back({Tok::Comma, ",", ln, co}); break;
        case '=': out.push_back({Tok::Eq, "=", ln, co}); break;
        case '>': out.push_back({Tok::Gt, ">", ln, co}); break;
        case '\\': out.push_back({Tok::Lambda, "\\", ln, co}); break;
        case ':':
          if (eat('=')) out.push_back({Tok::Assign, ":=", ln, co});
          else out.push_back({Tok::Colon, ":", ln, co});
          break;
        case '<':
          if (eat(':')) out.push_back({Tok::SubtypeOf, "<:", ln, co});
          else out.push_back({Tok::Lt, "<", ln, co});
          break;
        case '-':
          if (eat('>')) out.push_back({Tok::Arrow, "->", ln, co});
          else throw ParseError(ln, co, "stray '-'");
          break;
        default:
          throw ParseError(ln, co, std::string("unexpected character '") + c + "'");
      }
    }
  }

 private:
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '\'';
  }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  bool eat(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }
  bool try_utf8(const char* seq) {
    size_t n = std::char_traits<char>::length(seq);
    if (src_.compare(pos_, n, seq) == 0) {
      pos_ += n;
      col_ += 1;
      return true;
    }
    return false;
  }
  void skip_ws_and_comments() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  uint32_t line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(Lexer(src).run()) {}

  TypePtr type_only() {
    TypePtr t = type();
    expect(Tok::End, "end of input after type");
    return t;
  }
  TermPtr term_only() {
    TermPtr t = term();
    expect(Tok::End, "end of input after term");
    return t;
  }

  // ---- types ----

  TypePtr type() {
    if (at_kw("mu")) {
      next();
      std::string x = ident("recursive type variable");
      expect(Tok::Dot, "'.' after mu binder");
      return Type::mu(x, type());
    }
    if (at_kw("All") || at_kw("Some")) {
      bool all = cur().text == "All";
      next();
      expect(Tok::LParen, "'(' after quantifier");
      std::string x = ident("type variable");
      expect(Tok::SubtypeOf, "'<:' in quantifier bound");
      TypePtr bound = type();
      expect(Tok::RParen, "')' after quantifier bound");
      TypePtr body = type();
      return all ? Type::all(x, bound, body) : Type::some(x, bound, body);
    }
    if (at_kw("Obj") || at_kw("Rec")) {
      bool self = cur().text == "Obj";
      next();
      expect(Tok::LParen, "'(' after Obj/Rec");
      std::string x = ident("self type variable");
      expect(Tok::RParen, "')' after Obj/Rec binder");
      expect(Tok::LBrack, "'[' starting method list");
      auto ms = method_types();
      return self ? Type::self_obj(x, std::move(ms)) : Type::rec_obj(x, std::move(ms));
    }
    return arrow_type();
  }

  TypePtr arrow_type() {
    TypePtr a = atom_type();
    if (cur().kind == Tok::Arrow) {
      next();
      return Type::arrow(a, type());
    }
    return a;
  }

  TypePtr atom_type() {
    const Token& t = cur();
    if (t.kind == Tok::LParen) {
      next();
      TypePtr a = type();
      expect(Tok::RParen, "')' closing type");
      return a;
    }
    if (t.kind == Tok::LBrack) {
      next();
      return object_type();
    }
    if (at_kw("approx")) {
      next();
      expect(Tok::LBrack, "'[' after approx");
      uint32_t k = number("approximation level");
      expect(Tok::RBrack, "']' after approximation level");
      return Type::approx(k, atom_type());
    }
    if (at_kw("ref")) {
      next();
      if (cur().kind == Tok::LParen) {
        next();
        TypePtr w = type();
        expect(Tok::Comma, "',' between ref bounds");
        TypePtr r = type();
        expect(Tok::RParen, "')' after ref bounds");
        return Type::ref_gen(w, r);
      }
      Variance v = variance();
      return Type::ref_v(v, atom_type());
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "Top") { next(); return Type::top(); }
      if (t.text == "Bot") { next(); return Type::bot(); }
      next();
      return Type::var(t.text);
    }
    throw ParseError(t.line, t.col, "expected a type, found '" + describe(t) + "'");
  }

  // ---- terms ----

  TermPtr term() {
    const Token& t = cur();
    if (t.kind == Tok::Lambda) {
      next();
      expect(Tok::LParen, "'(' after lambda");
      std::string x = ident("parameter name");
      expect(Tok::Colon, "':' before parameter type");
      TypePtr a = type();
      expect(Tok::RParen, "')' after parameter");
      return at(Term::lam(x, a, term()), t);
    }
    if (at_kw("Fun")) {
      next();
      expect(Tok::LParen, "'(' after Fun");
      std::string x = ident("type parameter");
      expect(Tok::SubtypeOf, "'<:' in type parameter bound");
      TypePtr bound = type();
      expect(Tok::RParen, "')' after type parameter");
      return at(Term::tlam(x, bound, term()), t);
    }
    if (at_kw("let")) {
      next();
      std::string x = ident("let binder");
      TypePtr a = Type::top();
      if (cur().kind == Tok::Colon) {
        next();
        a = type();
      }
      expect(Tok::Eq, "'=' in let");
      TermPtr rhs = term();
      expect_kw("in", "'in' after let binding");
      TermPtr body = term();
      return at(Term::app(Term::lam(x, a, body), rhs), t);
    }
    if (at_kw("open")) {
      next();
      TermPtr scrut = spine(nullptr);
      expect_kw("as", "'as' after open scrutinee");
      expect(Tok::Lt, "'<' after as");
      std::string x = ident("type variable");
      expect(Tok::SubtypeOf, "'<:' in open binder");
      TypePtr bound = type();
      expect(Tok::Comma, "',' between open binders");
      std::string v = ident("value variable");
      expect(Tok::Colon, "':' before value variable type");
      TypePtr vt = type();
      expect(Tok::Gt, "'>' closing open binders");
      expect_kw("in", "'in' after open binders");
      TermPtr body = term();
      expect(Tok::Colon, "':' before open result type");
      TypePtr rt = arrow_type();
      return at(Term::open(scrut, x, bound, v, vt, body, rt), t);
    }
    return spine(nullptr);
  }

  // Application spine. If an update suffix appears on one of its elements the
  // update body extends maximally and terminates the spine.
  TermPtr spine(const Token* start) {
    const Token& t0 = start ? *start : cur();
    std::string pending;  // method name of a pending update
    TermPtr e = unary(pending);
    if (!pending.empty()) return at(finish_update(e, pending), t0);
    TermPtr acc = e;
    while (starts_unary()) {
      TermPtr arg = unary(pending);
      if (!pending.empty()) return at(Term::app(acc, finish_update(arg, pending)), t0);
      acc = at(Term::app(acc, arg), t0);
    }
    return acc;
  }

  // ---- helpers exposed for tests ----

  bool at_end() const { return cur().kind == Tok::End; }

 private:
  TermPtr finish_update(TermPtr recv, const std::string& m) {
    // positioned after ':='
    expect_kw("self", "'self' after ':='");
    expect(Tok::LParen, "'(' after self");
    std::string x = ident("self parameter");
    TypePtr a;  // absent means: update at the receiver's synthesized type
    if (cur().kind == Tok::Colon) {
      next();
      a = type();
    }
    expect(Tok::RParen, "')' after self parameter");
    TermPtr body = term();
    return Term::update(std::move(recv), m, {m, x, a, std::move(body)});
  }

  bool starts_unary() const {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::LParen:
      case Tok::LBrace:
        return true;
      case Tok::Ident:
        return t.text != "as" && t.text != "in" && !is_reserved_tail(t.text);
      default:
        return false;
    }
  }

  static bool is_reserved_tail(const std::string& s) {
    // keywords that can never start a unary operand
    return s == "self";
  }

  TermPtr unary(std::string& pending_update) {
    const Token& t = cur();
    if (at_kw("fold") || at_kw("unfold")) {
      bool f = t.text == "fold";
      next();
      expect(Tok::LBrack, "'[' after fold/unfold");
      TypePtr a = type();
      expect(Tok::RBrack, "']' after fold/unfold type");
      TermPtr body = unary(pending_update);
      if (!pending_update.empty())
        throw ParseError(t.line, t.col, "update cannot be the operand of fold/unfold");
      return at(f ? Term::fold(a, body) : Term::unfold(a, body), t);
    }
    TermPtr e = atom();
    // postfix chain: .m, [A], trailing .m :=
    while (true) {
      if (cur().kind == Tok::Dot) {
        next();
        std::string m = ident("method name");
        if (cur().kind == Tok::Assign) {
          next();
          pending_update = m;
          return e;
        }
        e = at(Term::invoke(e, m), t);
        continue;
      }
      if (cur().kind == Tok::LBrack) {
        next();
        TypePtr a = type();
        expect(Tok::RBrack, "']' after type argument");
        e = at(Term::tapp(e, a), t);
        continue;
      }
      return e;
    }
  }

  TermPtr atom() {
    const Token& t = cur();
    if (t.kind == Tok::LParen) {
      next();
      TermPtr e = term();
      expect(Tok::RParen, "')' closing term");
      return e;
    }
    if (t.kind == Tok::LBrace) {
      next();
      std::vector<std::pair<std::string, Loc>> slots;
      std::set<std::string> seen;
      if (cur().kind != Tok::RBrace) {
        while (true) {
          std::string m = ident("method name");
          if (!seen.insert(m).second)
            throw ParseError(cur().line, cur().col, "duplicate method '" + m + "'");
          expect(Tok::Eq, "'=' in runtime object");
          slots.emplace_back(m, location());
          if (cur().kind != Tok::Comma) break;
          next();
        }
      }
      expect(Tok::RBrace, "'}' closing runtime object");
      return at(Term::runtime_obj(std::move(slots)), t);
    }
    if (at_kw("obj")) {
      next();
      TypePtr annot = atom_type();
      expect(Tok::LBrace, "'{' starting object body");
      std::vector<MethodDef> ms;
      std::set<std::string> seen;
      if (cur().kind != Tok::RBrace) {
        while (true) {
          std::string m = ident("method name");
          if (!seen.insert(m).second)
            throw ParseError(cur().line, cur().col, "duplicate method '" + m + "'");
          expect(Tok::Eq, "'=' in method definition");
          expect_kw("self", "'self' starting method body");
          expect(Tok::LParen, "'(' after self");
          std::string x = ident("self parameter");
          TypePtr sa = annot;  // omitted self annotation defaults to the literal's type
          if (cur().kind == Tok::Colon) {
            next();
            sa = type();
          }
          expect(Tok::RParen, "')' after self parameter");
          TermPtr body = term();
          ms.push_back({m, x, sa, body});
          if (cur().kind != Tok::Comma) break;
          next();
        }
      }
      expect(Tok::RBrace, "'}' closing object body");
      return at(Term::obj_new(annot, std::move(ms)), t);
    }
    if (at_kw("clone")) {
      next();
      expect(Tok::LParen, "'(' after clone");
      TermPtr e = term();
      expect(Tok::RParen, "')' after clone");
      return at(Term::clone(e), t);
    }
    if (at_kw("pack")) {
      next();
      expect(Tok::Lt, "'<' after pack");
      std::string x = ident("type variable");
      expect(Tok::SubtypeOf, "'<:' in pack bound");
      TypePtr bound = type();
      expect(Tok::Eq, "'=' before pack witness");
      TypePtr wit = type();
      expect(Tok::Comma, "',' after pack witness");
      TermPtr payload = term();
      expect(Tok::Colon, "':' before pack body type");
      TypePtr bt = type();
      expect(Tok::Gt, "'>' closing pack");
      return at(Term::pack(x, bound, wit, payload, bt), t);
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      next();
      return at(Term::var(t.text), t);
    }
    throw ParseError(t.line, t.col, "expected a term, found '" + describe(t) + "'");
  }

  Loc location() {
    const Token& t = cur();
    if (t.kind == Tok::Ident && t.text.size() > 1 && t.text[0] == 'l') {
      bool digits = true;
      for (size_t i = 1; i < t.text.size(); ++i)
        if (t.text[i] < '0' || t.text[i] > '9') digits = false;
      if (digits) {
        next();
        return static_cast<Loc>(std::stoul(t.text.substr(1)));
      }
    }
    throw ParseError(t.line, t.col, "expected a location (l0, l1, ...)");
  }

  Variance variance() {
    const Token& t = cur();
    if (t.kind == Tok::Ident) {
      if (t.text == "inv") { next(); return Variance::Inv; }
      if (t.text == "cov") { next(); return Variance::Cov; }
      if (t.text == "con") { next(); return Variance::Con; }
    }
    throw ParseError(t.line, t.col, "expected variance (inv, cov, con)");
  }

  std::vector<MethodType> method_types() {
    // after '[': variance-annotated entries only
    std::vector<MethodType> ms;
    std::set<std::string> seen;
    if (cur().kind != Tok::RBrack) {
      while (true) {
        std::string m = ident("method name");
        if (!seen.insert(m).second)
          throw ParseError(cur().line, cur().col, "duplicate method '" + m + "'");
        expect(Tok::Colon, "':' after method name");
        Variance v = variance();
        ms.push_back({m, v, arrow_type()});
        if (cur().kind != Tok::Comma) break;
        next();
      }
    }
    expect(Tok::RBrack, "']' closing method list");
    return ms;
  }

  TypePtr object_type() {
    // after '['; decides between variance-annotated and split entries
    if (cur().kind == Tok::RBrack) {
      next();
      return Type::obj({});
    }
    std::vector<MethodType> vms;
    std::vector<SplitMethodType> sms;
    std::set<std::string> seen;
    while (true) {
      const Token& nameTok = cur();
      std::string m = ident("method name");
      if (!seen.insert(m).second)
        throw ParseError(nameTok.line, nameTok.col, "duplicate method '" + m + "'");
      expect(Tok::Colon, "':' after method name");
      if (cur().kind == Tok::LParen) {
        if (!vms.empty())
          throw ParseError(cur().line, cur().col,
                           "cannot mix split and variance-annotated methods");
        next();
        TypePtr w = type();
        expect(Tok::Comma, "',' between write and read types");
        TypePtr r = type();
        expect(Tok::RParen, "')' closing split method");
        sms.push_back({m, w, r});
      } else {
        if (!sms.empty())
          throw ParseError(cur().line, cur().col,
                           "cannot mix split and variance-annotated methods");
        Variance v = variance();
        vms.push_back({m, v, arrow_type()});
      }
      if (cur().kind != Tok::Comma) break;
      next();
    }
    expect(Tok::RBrack, "']' closing method list");
    if (!sms.empty()) return Type::obj_split(std::move(sms));
    return Type::obj(std::move(vms));
  }

  // ---- token plumbing ----

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kws = {
        "obj", "clone", "fold", "unfold", "Fun", "pack", "open", "as", "in",
        "let", "self", "mu", "All", "Some", "Obj", "Rec", "Top", "Bot",
        "approx", "ref", "inv", "cov", "con"};
    return kws.count(s) > 0;
  }

  const Token& cur() const { return toks_[ix_]; }
  void next() { if (ix_ + 1 < toks_.size()) ++ix_; }
  bool at_kw(const char* kw) const {
    return cur().kind == Tok::Ident && cur().text == kw;
  }
  void expect(Tok k, const char* what) {
    if (cur().kind != k)
      throw ParseError(cur().line, cur().col,
                       std::string("expected ") + what + ", found '" + describe(cur()) + "'");
    next();
  }
  void expect_kw(const char* kw, const char* what) {
    if (!at_kw(kw))
      throw ParseError(cur().line, cur().col,
                       std::string("expected ") + what + ", found '" + describe(cur()) + "'");
    next();
  }
  std::string ident(const char* what) {
    const Token& t = cur();
    if (t.kind != Tok::Ident || is_keyword(t.text))
      throw ParseError(t.line, t.col,
                       std::string("expected ") + what + ", found '" + describe(t) + "'");
    next();
    return t.text;
  }
  uint32_t number(const char* what) {
    const Token& t = cur();
    if (t.kind != Tok::Number)
      throw ParseError(t.line, t.col, std::string("expected ") + what);
    next();
    return static_cast<uint32_t>(std::stoul(t.text));
  }
  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "end of input";
    return t.text;
  }
  TermPtr at(TermPtr e, const Token& t) {
    auto mut = std::const_pointer_cast<Term>(e);
    if (mut->pos.line == 0) mut->pos = {t.line, t.col};
    return e;
  }

  std::vector<Token> toks_;
  size_t ix_ = 0;
};

}  // namespace detail

inline TypePtr parse_type(const std::string& src) {
  return detail::Parser(src).type_only();
}

inline TermPtr parse_term(const std::string& src) {
  return detail::Parser(src).term_only();
}

}  // namespace sigma
