#pragma once

// Property mini-language over atomic propositions:
//   return            discounted return
//   C U T             constrained reachability
//   F T               eventual reachability
//   F (A & X B)       reach an A-state whose successor satisfies B
// State formulas use identifiers, true, false, !, &, |, and parentheses.

#include <cctype>
#include <memory>
#include <string>
#include <vector>

#include "waemdp/env/ground_mdp.hpp"
#include "waemdp/errors.hpp"

namespace waemdp::certify {

struct StateFormula {
  enum class Kind { True, False, Prop, Not, And, Or };
  Kind kind = Kind::True;
  std::string prop;
  int index = -1;  // resolved proposition index
  std::shared_ptr<StateFormula> lhs, rhs;

  [[nodiscard]] bool eval(const env::Labels& l) const {
    switch (kind) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::Prop: return index >= 0 && index < static_cast<int>(l.size()) && l[static_cast<std::size_t>(index)] != 0;
      case Kind::Not: return !lhs->eval(l);
      case Kind::And: return lhs->eval(l) && rhs->eval(l);
      case Kind::Or: return lhs->eval(l) || rhs->eval(l);
    }
    return false;
  }

  [[nodiscard]] std::string str() const {
    switch (kind) {
      case Kind::True: return "true";
      case Kind::False: return "false";
      case Kind::Prop: return prop;
      case Kind::Not: return "!" + lhs->str();
      case Kind::And: return "(" + lhs->str() + " & " + rhs->str() + ")";
      case Kind::Or: return "(" + lhs->str() + " | " + rhs->str() + ")";
    }
    return "";
  }

  void resolve(const std::vector<std::string>& aps) {
    if (kind == Kind::Prop) {
      index = -1;
      for (std::size_t i = 0; i < aps.size(); ++i)
        if (aps[i] == prop) index = static_cast<int>(i);
      if (index < 0) {
        std::string known;
        for (const auto& a : aps) known += (known.empty() ? "" : ", ") + a;
        throw ParseError("unknown proposition '" + prop + "' (declared: " + known + ")");
      }
    }
    if (lhs) lhs->resolve(aps);
    if (rhs) rhs->resolve(aps);
  }
};

using FormulaPtr = std::shared_ptr<StateFormula>;

struct Property {
  enum class Kind { Return, ConstrainedReach, EventuallyReach, NextReach };
  Kind kind = Kind::Return;
  FormulaPtr constraint;  // C (true for F)
  FormulaPtr target;      // T, or A for NextReach
  FormulaPtr next;        // B for NextReach
  std::string text;

  [[nodiscard]] bool is_reachability() const { return kind != Kind::Return; }

  void resolve(const std::vector<std::string>& aps) {
    for (auto* f : {&constraint, &target, &next})
      if (*f) (*f)->resolve(aps);
  }
};

namespace detail {

class PropertyParser {
 public:
  explicit PropertyParser(std::string text) : text_(std::move(text)) { lex(); }

  Property parse() {
    Property p;
    p.text = text_;
    if (tokens_.size() == 2 && tokens_[0] == "return") {
      p.kind = Property::Kind::Return;
      return p;
    }
    if (peek() == "F") {
      ++pos_;
      // F (A & X B) or F T.
      const std::size_t save = pos_;
      if (accept("(")) {
        FormulaPtr a = disjunction();
        if (accept("&") && accept("X")) {
          FormulaPtr b = unary();
          expect(")");
          finish();
          p.kind = Property::Kind::NextReach;
          p.target = a;
          p.next = b;
          return p;
        }
        pos_ = save;
      }
      p.kind = Property::Kind::EventuallyReach;
      p.constraint = make(StateFormula::Kind::True);
      p.target = disjunction();
      finish();
      return p;
    }
    FormulaPtr c = disjunction();
    expect("U");
    FormulaPtr t = disjunction();
    finish();
    p.kind = Property::Kind::ConstrainedReach;
    p.constraint = c;
    p.target = t;
    return p;
  }

 private:
  static FormulaPtr make(StateFormula::Kind k, FormulaPtr l = nullptr, FormulaPtr r = nullptr) {
    auto f = std::make_shared<StateFormula>();
    f->kind = k;
    f->lhs = std::move(l);
    f->rhs = std::move(r);
    return f;
  }

  void lex() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const char c = text_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '&' || c == '|') {
        tokens_.emplace_back(1, c);
        i += (i + 1 < text_.size() && text_[i + 1] == c) ? 2 : 1;
      } else if (c == '!' || c == '(' || c == ')') {
        tokens_.emplace_back(1, c);
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_' || text_[j] == '-')) ++j;
        tokens_.push_back(text_.substr(i, j - i));
        i = j;
      } else {
        throw ParseError("unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(i) + " in '" + text_ + "'");
      }
    }
    if (tokens_.empty()) throw ParseError("empty property");
    tokens_.emplace_back();  // end marker
  }

  [[nodiscard]] const std::string& peek() const { return tokens_[pos_]; }
  bool accept(const std::string& t) {
    if (peek() != t) return false;
    ++pos_;
    return true;
  }
  void expect(const std::string& t) {
    if (!accept(t)) throw ParseError("expected '" + t + "' but found '" + (peek().empty() ? "end of input" : peek()) + "' in '" + text_ + "'");
  }
  void finish() {
    if (!peek().empty()) throw ParseError("unexpected '" + peek() + "' in '" + text_ + "'");
  }

  FormulaPtr disjunction() {
    FormulaPtr f = conjunction();
    while (accept("|")) f = make(StateFormula::Kind::Or, f, conjunction());
    return f;
  }
  FormulaPtr conjunction() {
    FormulaPtr f = unary();
    // Leave `& X` to the caller.
    while (peek() == "&" && tokens_[pos_ + 1] != "X") {
      ++pos_;
      f = make(StateFormula::Kind::And, f, unary());
    }
    return f;
  }
  FormulaPtr unary() {
    if (accept("!")) return make(StateFormula::Kind::Not, unary());
    if (accept("(")) {
      FormulaPtr f = disjunction();
      expect(")");
      return f;
    }
    const std::string t = peek();
    if (t.empty() || t == ")" || t == "&" || t == "|" || t == "U" || t == "F" || t == "X")
      throw ParseError("expected a proposition but found '" + (t.empty() ? "end of input" : t) + "' in '" + text_ + "'");
    ++pos_;
    if (t == "true") return make(StateFormula::Kind::True);
    if (t == "false") return make(StateFormula::Kind::False);
    auto f = make(StateFormula::Kind::Prop);
    f->prop = t;
    return f;
  }

  std::string text_;
  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Property parse_property(const std::string& text) { return detail::PropertyParser(text).parse(); }

/// Parses and binds proposition names to label indices.
inline Property parse_property(const std::string& text, const std::vector<std::string>& aps) {
  Property p = parse_property(text);
  p.resolve(aps);
  return p;
}

/// "The agent fails before the episode ends".
inline Property time_to_failure(const std::vector<std::string>& aps, const std::string& failure = "unsafe") {
  return parse_property("!" + std::string(env::kResetProp) + " U " + failure, aps);
}

}  // namespace waemdp::certify
