#include <cctype>
#include <charconv>
#include <string>
#include <unordered_set>

#include "kmf/error.hpp"
#include "kmf/metamodel.hpp"

namespace kmf {
namespace {

enum class Tok { ident, number, lbrace, rbrace, colon, semicolon, lbracket, rbracket, dots, star, end };

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::colon: return "':'";
    case Tok::semicolon: return "';'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::dots: return "'..'";
    case Tok::star: return "'*'";
    case Tok::end: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  SourceLocation loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token t;
    t.loc = {line_, col_};
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    const std::size_t start = pos_;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) advance();
      t.kind = Tok::ident;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
      t.kind = Tok::number;
    } else if (c == '.' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '.') {
      advance();
      advance();
      t.kind = Tok::dots;
    } else {
      switch (c) {
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case ':': t.kind = Tok::colon; break;
        case ';': t.kind = Tok::semicolon; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case '*': t.kind = Tok::star; break;
        default:
          throw ParseError(ErrorKind::syntax, t.loc.line, t.loc.column,
                           std::string("unexpected character '") + c + "'");
      }
      advance();
    }
    t.text = text_.substr(start, pos_ - start);
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
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
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { cur_ = lexer_.next(); }

  Metamodel parse() {
    Metamodel m;
    expect_keyword("metamodel");
    m.name = std::string(expect(Tok::ident).text);
    std::unordered_set<std::string> seen;
    while (cur_.kind != Tok::end) {
      ClassDef c = parse_class();
      if (!seen.insert(c.name).second) {
        throw ParseError(ErrorKind::duplicate_class, c.loc.line, c.loc.column, "duplicate class '" + c.name + "'");
      }
      m.classes.push_back(std::move(c));
    }
    check_names(m);
    return m;
  }

 private:
  [[noreturn]] void fail_expected(std::string_view what) {
    std::string got = cur_.kind == Tok::end ? std::string("end of input") : "'" + std::string(cur_.text) + "'";
    throw ParseError(ErrorKind::syntax, cur_.loc.line, cur_.loc.column,
                     "expected " + std::string(what) + ", found " + got);
  }

  Token expect(Tok kind) {
    if (cur_.kind != kind) fail_expected(describe(kind));
    Token t = cur_;
    cur_ = lexer_.next();
    return t;
  }

  void expect_keyword(std::string_view kw) {
    if (cur_.kind != Tok::ident || cur_.text != kw) fail_expected("'" + std::string(kw) + "'");
    cur_ = lexer_.next();
  }

  bool accept_keyword(std::string_view kw) {
    if (cur_.kind == Tok::ident && cur_.text == kw) {
      cur_ = lexer_.next();
      return true;
    }
    return false;
  }

  std::uint32_t parse_count(const Token& t) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || v == kUnbounded) {
      throw ParseError(ErrorKind::syntax, t.loc.line, t.loc.column, "bound out of range");
    }
    return v;
  }

  ClassDef parse_class() {
    ClassDef c;
    c.loc = cur_.loc;
    expect_keyword("class");
    c.name = std::string(expect(Tok::ident).text);
    if (cur_.kind == Tok::colon) {
      cur_ = lexer_.next();
      c.super_loc = cur_.loc;
      c.super = std::string(expect(Tok::ident).text);
    }
    expect(Tok::lbrace);
    while (cur_.kind != Tok::rbrace) {
      if (cur_.kind == Tok::semicolon) {
        cur_ = lexer_.next();
        continue;
      }
      if (cur_.kind == Tok::ident && cur_.text == "attr") {
        c.attributes.push_back(parse_attribute());
      } else if (cur_.kind == Tok::ident && cur_.text == "ref") {
        c.references.push_back(parse_reference());
      } else {
        fail_expected("'attr', 'ref' or '}'");
      }
    }
    cur_ = lexer_.next();
    return c;
  }

  AttributeDef parse_attribute() {
    AttributeDef a;
    a.loc = cur_.loc;
    cur_ = lexer_.next();
    a.name = std::string(expect(Tok::ident).text);
    expect(Tok::colon);
    if (cur_.kind != Tok::ident) fail_expected("attribute type");
    if (cur_.text == "string") {
      a.type = AttrType::string_type;
    } else if (cur_.text == "int") {
      a.type = AttrType::int_type;
    } else if (cur_.text == "float") {
      a.type = AttrType::float_type;
    } else if (cur_.text == "bool") {
      a.type = AttrType::bool_type;
    } else {
      fail_expected("one of string, int, float, bool");
    }
    cur_ = lexer_.next();
    a.is_id = accept_keyword("id");
    return a;
  }

  ReferenceDef parse_reference() {
    ReferenceDef r;
    r.loc = cur_.loc;
    cur_ = lexer_.next();
    r.name = std::string(expect(Tok::ident).text);
    expect(Tok::colon);
    target_locs_.push_back(cur_.loc);
    r.target = std::string(expect(Tok::ident).text);
    if (cur_.kind == Tok::lbracket) {
      cur_ = lexer_.next();
      r.lower = parse_count(expect(Tok::number));
      expect(Tok::dots);
      if (cur_.kind == Tok::star) {
        r.upper = kUnbounded;
        cur_ = lexer_.next();
      } else {
        r.upper = parse_count(expect(Tok::number));
      }
      expect(Tok::rbracket);
    }
    for (;;) {
      if (accept_keyword("containment")) {
        r.containment = true;
      } else if (cur_.kind == Tok::ident && cur_.text == "opposite") {
        cur_ = lexer_.next();
        r.opposite = std::string(expect(Tok::ident).text);
      } else {
        break;
      }
    }
    return r;
  }

  // Super and reference targets must name declared classes. Reference target
  // locations were recorded in declaration order.
  void check_names(const Metamodel& m) {
    std::size_t i = 0;
    for (const ClassDef& c : m.classes) {
      if (c.super && !m.find_class(*c.super)) {
        throw ParseError(ErrorKind::unknown_class, c.super_loc.line, c.super_loc.column,
                         "undeclared class '" + *c.super + "'");
      }
      for (const ReferenceDef& r : c.references) {
        const SourceLocation loc = target_locs_[i++];
        if (!m.find_class(r.target)) {
          throw ParseError(ErrorKind::unknown_class, loc.line, loc.column, "undeclared class '" + r.target + "'");
        }
      }
    }
  }

  Lexer lexer_;
  Token cur_;
  std::vector<SourceLocation> target_locs_;
};

}  // namespace

Metamodel parse_metamodel(std::string_view text) { return Parser(text).parse(); }

std::string print_metamodel(const Metamodel& m) {
  std::string out = "metamodel " + m.name + "\n";
  for (const ClassDef& c : m.classes) {
    out += "\nclass " + c.name;
    if (c.super) out += " : " + *c.super;
    out += " {\n";
    for (const AttributeDef& a : c.attributes) {
      out += "  attr " + a.name + " : " + std::string(to_string(a.type));
      if (a.is_id) out += " id";
      out += "\n";
    }
    for (const ReferenceDef& r : c.references) {
      out += "  ref " + r.name + " : " + r.target + " [" + std::to_string(r.lower) + "..";
      out += r.upper == kUnbounded ? std::string("*") : std::to_string(r.upper);
      out += "]";
      if (r.containment) out += " containment";
      if (r.opposite) out += " opposite " + *r.opposite;
      out += "\n";
    }
    out += "}\n";
  }
  return out;
}

}  // namespace kmf
