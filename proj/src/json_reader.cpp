#include <charconv>

#include "io_internal.hpp"
#include "kmf/error.hpp"
#include "model_builder.hpp"

namespace kmf::detail {

namespace {

enum class Tok { lbrace, rbrace, lbrack, rbrack, colon, comma, string, number, true_, false_, null_, eof };

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::lbrack: return "'['";
    case Tok::rbrack: return "']'";
    case Tok::colon: return "':'";
    case Tok::comma: return "','";
    case Tok::string: return "a string";
    case Tok::number: return "a number";
    case Tok::true_:
    case Tok::false_: return "a bool";
    case Tok::null_: return "null";
    case Tok::eof: return "end of input";
  }
  return "?";
}

class JsonPull {
 public:
  JsonPull(InStream& in, SourcePos& pos) : in_(in), pos_(pos) { text_.reserve(64); }

  Tok next() {
    skip_ws();
    pos_ = {in_.offset(), in_.line()};
    const int c = in_.get();
    switch (c) {
      case InStream::kEof: return Tok::eof;
      case '{': return Tok::lbrace;
      case '}': return Tok::rbrace;
      case '[': return Tok::lbrack;
      case ']': return Tok::rbrack;
      case ':': return Tok::colon;
      case ',': return Tok::comma;
      case '"': read_string(); return Tok::string;
      case 't': literal("rue"); return Tok::true_;
      case 'f': literal("alse"); return Tok::false_;
      case 'n': literal("ull"); return Tok::null_;
      default:
        if (c == '-' || (c >= '0' && c <= '9')) {
          read_number(static_cast<char>(c));
          return Tok::number;
        }
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
    }
  }

  const std::string& text() const noexcept { return text_; }

  [[noreturn]] void fail(const std::string& what) const { throw LoadError(ErrorKind::syntax, pos_.offset, pos_.line, what); }

 private:
  void skip_ws() {
    for (int c = in_.peek(); c == ' ' || c == '\n' || c == '\t' || c == '\r'; c = in_.peek()) in_.get();
  }

  void literal(std::string_view rest) {
    for (char ch : rest) {
      if (in_.get() != static_cast<unsigned char>(ch)) fail("invalid literal");
    }
  }

  void read_number(char first) {
    text_.clear();
    text_ += first;
    for (int c = in_.peek(); (c >= '0' && c <= '9') || c == '.' || c == 'e' || c == 'E' || c == '+' || c == '-'; c = in_.peek()) {
      text_ += static_cast<char>(in_.get());
    }
  }

  unsigned hex4() {
    unsigned v = 0;
    for (int i = 0; i < 4; ++i) {
      const int c = in_.get();
      v <<= 4;
      if (c >= '0' && c <= '9') {
        v |= static_cast<unsigned>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        v |= static_cast<unsigned>(c - 'a' + 10);
      } else if (c >= 'A' && c <= 'F') {
        v |= static_cast<unsigned>(c - 'A' + 10);
      } else {
        fail("malformed \\u escape");
      }
    }
    return v;
  }

  void put_utf8(std::uint32_t cp) {
    if (cp < 0x80) {
      text_ += static_cast<char>(cp);
    } else if (cp < 0x800) {
      text_ += static_cast<char>(0xC0 | (cp >> 6));
      text_ += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      text_ += static_cast<char>(0xE0 | (cp >> 12));
      text_ += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      text_ += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      text_ += static_cast<char>(0xF0 | (cp >> 18));
      text_ += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      text_ += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      text_ += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  void read_string() {
    text_.clear();
    while (true) {
      const int c = in_.get();
      if (c == InStream::kEof) fail("unterminated string");
      if (c == '"') return;
      if (c < 0x20) fail("control character in string");
      if (c != '\\') {
        text_ += static_cast<char>(c);
        continue;
      }
      const int e = in_.get();
      switch (e) {
        case '"': text_ += '"'; break;
        case '\\': text_ += '\\'; break;
        case '/': text_ += '/'; break;
        case 'b': text_ += '\b'; break;
        case 'f': text_ += '\f'; break;
        case 'n': text_ += '\n'; break;
        case 'r': text_ += '\r'; break;
        case 't': text_ += '\t'; break;
        case 'u': {
          std::uint32_t cp = hex4();
          if (cp >= 0xD800 && cp < 0xDC00) {
            if (in_.get() != '\\' || in_.get() != 'u') fail("unpaired surrogate");
            const std::uint32_t lo = hex4();
            if (lo < 0xDC00 || lo >= 0xE000) fail("unpaired surrogate");
            cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          }
          put_utf8(cp);
          break;
        }
        default: fail("invalid escape sequence");
      }
    }
  }

  InStream& in_;
  SourcePos& pos_;
  std::string text_;
};

class JsonReader {
 public:
  JsonReader(std::shared_ptr<const DispatchTable> table, InStream& in) : b_(std::move(table), pos_), json_(in, pos_) {}

  Model run() {
    expect(json_.next(), Tok::lbrace);
    element(kNoSlot, true);
    if (json_.next() != Tok::eof) json_.fail("content after the root object");
    return b_.finish();
  }

 private:
  void expect(Tok got, Tok want) {
    if (got != want) json_.fail("expected " + std::string(describe(want)) + ", found " + std::string(describe(got)));
  }

  void expect_name(std::string_view name) {
    expect(json_.next(), Tok::string);
    if (json_.text() != name) json_.fail("expected field \"" + std::string(name) + "\", found \"" + json_.text() + "\"");
    expect(json_.next(), Tok::colon);
  }

  // Called after '{'; consumes the object including '}'.
  void element(SlotIndex slot, bool root) {
    if (root) {
      expect_name("@metamodel");
      expect(json_.next(), Tok::string);
      b_.check_metamodel(json_.text());
      expect(json_.next(), Tok::comma);
    }
    expect_name("class");
    expect(json_.next(), Tok::string);
    if (root) {
      b_.begin_root(json_.text());
    } else {
      b_.begin_child(slot, json_.text());
    }
    while (true) {
      Tok t = json_.next();
      if (t == Tok::rbrace) break;
      expect(t, Tok::comma);
      expect(json_.next(), Tok::string);
      if (json_.text() == "@key") {
        expect(json_.next(), Tok::colon);
        expect(json_.next(), Tok::number);
        b_.set_key(json_.text());
        continue;
      }
      const SlotIndex f = b_.feature(json_.text());
      expect(json_.next(), Tok::colon);
      field(f);
    }
    b_.end();
  }

  void field(SlotIndex f) {
    const SlotDef& def = b_.current_class().slot(f);
    const Tok t = json_.next();
    if (def.is_attribute()) {
      switch (t) {
        case Tok::string: b_.attribute_string(f, json_.text()); return;
        case Tok::number: b_.attribute_number(f, json_.text()); return;
        case Tok::true_: b_.attribute_bool(f, true); return;
        case Tok::false_: b_.attribute_bool(f, false); return;
        default: b_.fail(ErrorKind::type_mismatch, "'" + def.name + "' expects " + std::string(to_string(def.type)) + ", found " + std::string(describe(t)));
      }
    }
    if (!def.containment) {
      if (!def.many()) {
        if (t == Tok::null_) return;
        expect(t, Tok::string);
        b_.reference(f, json_.text());
        return;
      }
      expect(t, Tok::lbrack);
      list([&](Tok item) {
        expect(item, Tok::string);
        b_.reference(f, json_.text());
      });
      return;
    }
    if (!def.many()) {
      if (t == Tok::null_) return;
      expect(t, Tok::lbrace);
      element(f, false);
      return;
    }
    expect(t, Tok::lbrack);
    list([&](Tok item) {
      expect(item, Tok::lbrace);
      element(f, false);
    });
  }

  // Called after '['; consumes items and ']'.
  template <class F>
  void list(F&& item) {
    Tok t = json_.next();
    if (t == Tok::rbrack) return;
    while (true) {
      item(t);
      t = json_.next();
      if (t == Tok::rbrack) return;
      expect(t, Tok::comma);
      t = json_.next();
    }
  }

  SourcePos pos_;
  ModelBuilder b_;
  JsonPull json_;
};

}  // namespace

Model read_json(std::shared_ptr<const DispatchTable> table, InStream& in) { return JsonReader(std::move(table), in).run(); }

}  // namespace kmf::detail
