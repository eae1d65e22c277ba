#include "flowprompt/grammar.hpp"

#include "flowprompt/errors.hpp"
#include "flowprompt/rounding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace flowprompt {

const char* to_string(Prediction p) {
    return p == Prediction::attack ? "attack" : "benign";
}

namespace {

// Bundle artifact text; bumping it means bumping the version string.
constexpr const char* kGrammarText =
    "root   ::= obj nl?\n"
    "obj    ::= \"{\\\"prediction\\\":\\\"\" pred \"\\\",\\\"p_attack\\\":\" prob \"}\"\n"
    "pred   ::= \"attack\" | \"benign\"\n"
    "prob   ::= \"0\" frac? | \"1\" (\".\" \"0\"{1,4})?\n"
    "frac   ::= \".\" [0-9]{1,4}\n"
    "nl     ::= \"\\n\"\n";

constexpr const char* kGrammarVersion = "1";

[[noreturn]] void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

// Validates a decimal literal against the prob production:
//   "0" ("." [0-9]{1,4})?  |  "1" ("." "0"{1,4})?
bool literal_in_grammar(std::string_view literal) {
    if (literal.empty()) return false;
    if (literal[0] != '0' && literal[0] != '1') return false;
    if (literal.size() == 1) return true;
    if (literal[1] != '.') return false;
    const std::string_view frac = literal.substr(2);
    if (frac.empty() || frac.size() > 4) return false;
    for (char c : frac) {
        if (literal[0] == '1') {
            if (c != '0') return false;
        } else if (!std::isdigit(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

// Correctly-rounded decimal parse, so every route that reads the same
// literal (wire output, predictions.csv, calibration sweep) lands on the
// identical double.
double literal_value(std::string_view literal) {
    double value = 0.0;
    std::from_chars(literal.data(), literal.data() + literal.size(), value);
    return value;
}

} // namespace

GrammarSpec emit_gbnf() {
    return GrammarSpec{kGrammarText, kGrammarVersion};
}

ModelVerdict parse_verdict(const std::string& raw) {
    ModelVerdict verdict;
    verdict.raw = raw;

    if (raw.empty()) fail(ErrorCode::Malformed, "empty output");
    if (raw.front() != '{') {
        if (raw.find('{') != std::string::npos)
            fail(ErrorCode::ExtraTokens, "text before the JSON object");
        fail(ErrorCode::Malformed, "no JSON object in output");
    }

    size_t pos = 0;
    auto expect = [&](std::string_view literal, ErrorCode code, const char* what) {
        if (raw.compare(pos, literal.size(), literal) != 0) fail(code, what);
        pos += literal.size();
    };

    static constexpr std::string_view kPredictionKey = "{\"prediction\":\"";
    if (raw.compare(0, kPredictionKey.size(), kPredictionKey) != 0) {
        if (raw.find("\"prediction\"") == std::string::npos)
            fail(ErrorCode::MissingKey, "key 'prediction' absent");
        fail(ErrorCode::Malformed, "'prediction' must be the first key, unquoted-whitespace-free");
    }
    pos = kPredictionKey.size();

    if (raw.compare(pos, 6, "attack") == 0) {
        verdict.prediction = Prediction::attack;
        pos += 6;
    } else if (raw.compare(pos, 6, "benign") == 0) {
        verdict.prediction = Prediction::benign;
        pos += 6;
    } else {
        fail(ErrorCode::Malformed, "prediction must be \"attack\" or \"benign\"");
    }

    static constexpr std::string_view kScoreKey = "\",\"p_attack\":";
    if (raw.compare(pos, kScoreKey.size(), kScoreKey) != 0) {
        if (raw.find("\"p_attack\"") == std::string::npos)
            fail(ErrorCode::MissingKey, "key 'p_attack' absent");
        fail(ErrorCode::Malformed, "'p_attack' must directly follow the prediction value");
    }
    pos += kScoreKey.size();

    // scan a plain decimal literal: digits ('.' digits)?
    const size_t lit_begin = pos;
    while (pos < raw.size() && std::isdigit(static_cast<unsigned char>(raw[pos]))) ++pos;
    if (pos == lit_begin) fail(ErrorCode::Malformed, "p_attack must be an unsigned decimal literal");
    if (pos < raw.size() && raw[pos] == '.') {
        ++pos;
        const size_t frac_begin = pos;
        while (pos < raw.size() && std::isdigit(static_cast<unsigned char>(raw[pos]))) ++pos;
        if (pos == frac_begin) fail(ErrorCode::Malformed, "p_attack has a bare decimal point");
    }
    const std::string_view literal(raw.data() + lit_begin, pos - lit_begin);
    if (!literal_in_grammar(literal)) {
        // decide between a numeric violation and a shape violation
        const double approx = literal_value(literal);
        if (approx > 1.0)
            fail(ErrorCode::OutOfRange, "p_attack " + std::string(literal) + " exceeds 1");
        fail(ErrorCode::Malformed, "p_attack literal '" + std::string(literal) +
                                       "' not in canonical form (max 4 fraction digits)");
    }
    verdict.p_attack_literal = std::string(literal);
    verdict.p_attack = literal_value(literal);

    expect("}", ErrorCode::Malformed, "missing closing '}'");
    if (pos < raw.size()) {
        if (raw[pos] == '\n' && pos + 1 == raw.size()) {
            // single trailing newline allowed
        } else {
            fail(ErrorCode::ExtraTokens, "text after the JSON object");
        }
    }
    return verdict;
}

std::string to_canonical_json(const ModelVerdict& verdict) {
    return std::string("{\"prediction\":\"") + to_string(verdict.prediction) +
           "\",\"p_attack\":" + verdict.p_attack_literal + "}";
}

std::string format_prob(double p) {
    if (!(p > 0.0)) p = 0.0;
    if (p > 1.0) p = 1.0;
    const double rounded = round_half_even(p, 4);
    if (rounded <= 0.0) return "0";
    if (rounded >= 1.0) return "1";
    std::string s = format_fixed(rounded, 4);
    while (s.size() > 3 && s.back() == '0') s.pop_back();
    return s;
}

ModelVerdict make_verdict(Prediction prediction, double p_attack) {
    ModelVerdict draft;
    draft.prediction = prediction;
    draft.p_attack_literal = format_prob(p_attack);
    return parse_verdict(to_canonical_json(draft));
}

// ---------------------------------------------------------------------------
// GBNF subset parser + interpreter
// ---------------------------------------------------------------------------

namespace gbnf {

namespace {

struct Cursor {
    const std::string& text;
    size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_space() {
        while (!done() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
};

char unescape(char c) {
    switch (c) {
        case 'n': return '\n';
        case 't': return '\t';
        case 'r': return '\r';
        case '"': return '"';
        case '\\': return '\\';
        default: throw Error(ErrorCode::Malformed, std::string("unknown escape \\") + c);
    }
}

std::string parse_identifier(Cursor& cur) {
    cur.skip_space();
    std::string name;
    while (!cur.done() &&
           (std::isalnum(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_' || cur.peek() == '-')) {
        name.push_back(cur.peek());
        ++cur.pos;
    }
    if (name.empty()) throw Error(ErrorCode::Malformed, "expected identifier in grammar");
    return name;
}

ExprPtr parse_alternation(Cursor& cur);

ExprPtr parse_base(Cursor& cur) {
    cur.skip_space();
    if (cur.done()) throw Error(ErrorCode::Malformed, "unexpected end of grammar expression");
    auto expr = std::make_shared<Expr>();
    const char c = cur.peek();
    if (c == '"') {
        ++cur.pos;
        expr->kind = Expr::Kind::literal;
        while (!cur.done() && cur.peek() != '"') {
            char ch = cur.peek();
            ++cur.pos;
            if (ch == '\\') {
                if (cur.done()) throw Error(ErrorCode::Malformed, "dangling escape in literal");
                ch = unescape(cur.peek());
                ++cur.pos;
            }
            expr->text.push_back(ch);
        }
        if (cur.done()) throw Error(ErrorCode::Malformed, "unterminated literal");
        ++cur.pos; // closing quote
    } else if (c == '[') {
        ++cur.pos;
        expr->kind = Expr::Kind::char_class;
        while (!cur.done() && cur.peek() != ']') {
            char lo = cur.peek();
            ++cur.pos;
            if (lo == '\\') {
                lo = unescape(cur.peek());
                ++cur.pos;
            }
            char hi = lo;
            if (!cur.done() && cur.peek() == '-' && cur.pos + 1 < cur.text.size() &&
                cur.text[cur.pos + 1] != ']') {
                ++cur.pos;
                hi = cur.peek();
                ++cur.pos;
                if (hi == '\\') {
                    hi = unescape(cur.peek());
                    ++cur.pos;
                }
            }
            expr->ranges.emplace_back(lo, hi);
        }
        if (cur.done()) throw Error(ErrorCode::Malformed, "unterminated character class");
        ++cur.pos; // closing bracket
    } else if (c == '(') {
        ++cur.pos;
        auto inner = parse_alternation(cur);
        cur.skip_space();
        if (cur.done() || cur.peek() != ')')
            throw Error(ErrorCode::Malformed, "unterminated group");
        ++cur.pos;
        return inner;
    } else {
        expr->kind = Expr::Kind::rule_ref;
        expr->rule = parse_identifier(cur);
    }
    return expr;
}

ExprPtr parse_term(Cursor& cur) {
    ExprPtr base = parse_base(cur);
    cur.skip_space();
    if (!cur.done() && cur.peek() == '?') {
        ++cur.pos;
        auto rep = std::make_shared<Expr>();
        rep->kind = Expr::Kind::repeat;
        rep->child = base;
        rep->min_rep = 0;
        rep->max_rep = 1;
        return rep;
    }
    if (!cur.done() && cur.peek() == '{') {
        ++cur.pos;
        auto read_int = [&cur]() {
            cur.skip_space();
            int value = 0;
            bool any = false;
            while (!cur.done() && std::isdigit(static_cast<unsigned char>(cur.peek()))) {
                value = value * 10 + (cur.peek() - '0');
                ++cur.pos;
                any = true;
            }
            if (!any) throw Error(ErrorCode::Malformed, "expected repetition count");
            return value;
        };
        const int lo = read_int();
        int hi = lo;
        cur.skip_space();
        if (!cur.done() && cur.peek() == ',') {
            ++cur.pos;
            hi = read_int();
        }
        cur.skip_space();
        if (cur.done() || cur.peek() != '}')
            throw Error(ErrorCode::Malformed, "unterminated repetition");
        ++cur.pos;
        auto rep = std::make_shared<Expr>();
        rep->kind = Expr::Kind::repeat;
        rep->child = base;
        rep->min_rep = lo;
        rep->max_rep = hi;
        return rep;
    }
    return base;
}

ExprPtr parse_sequence(Cursor& cur) {
    auto seq = std::make_shared<Expr>();
    seq->kind = Expr::Kind::sequence;
    while (true) {
        cur.skip_space();
        if (cur.done() || cur.peek() == '|' || cur.peek() == ')') break;
        seq->children.push_back(parse_term(cur));
    }
    if (seq->children.empty())
        throw Error(ErrorCode::Malformed, "empty sequence in grammar expression");
    if (seq->children.size() == 1) return seq->children.front();
    return seq;
}

ExprPtr parse_alternation(Cursor& cur) {
    auto alt = std::make_shared<Expr>();
    alt->kind = Expr::Kind::alternation;
    alt->children.push_back(parse_sequence(cur));
    while (true) {
        cur.skip_space();
        if (cur.done() || cur.peek() != '|') break;
        ++cur.pos;
        alt->children.push_back(parse_sequence(cur));
    }
    if (alt->children.size() == 1) return alt->children.front();
    return alt;
}

// All end positions reachable by matching `expr` starting at `pos`.
void match_expr(const Grammar& grammar, const Expr& expr, std::string_view s, size_t pos,
                std::vector<size_t>& out);

std::vector<size_t> match_positions(const Grammar& grammar, const Expr& expr, std::string_view s,
                                    size_t pos) {
    std::vector<size_t> out;
    match_expr(grammar, expr, s, pos, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void match_expr(const Grammar& grammar, const Expr& expr, std::string_view s, size_t pos,
                std::vector<size_t>& out) {
    switch (expr.kind) {
        case Expr::Kind::literal:
            if (s.compare(pos, expr.text.size(), expr.text) == 0 && pos + expr.text.size() <= s.size())
                out.push_back(pos + expr.text.size());
            break;
        case Expr::Kind::char_class:
            if (pos < s.size()) {
                for (const auto& [lo, hi] : expr.ranges) {
                    if (s[pos] >= lo && s[pos] <= hi) {
                        out.push_back(pos + 1);
                        break;
                    }
                }
            }
            break;
        case Expr::Kind::rule_ref: {
            const Expr* body = grammar.find(expr.rule);
            if (!body) throw Error(ErrorCode::Malformed, "undefined rule '" + expr.rule + "'");
            match_expr(grammar, *body, s, pos, out);
            break;
        }
        case Expr::Kind::sequence: {
            std::vector<size_t> current = {pos};
            for (const auto& child : expr.children) {
                std::vector<size_t> next;
                for (size_t p : current) {
                    auto ends = match_positions(grammar, *child, s, p);
                    next.insert(next.end(), ends.begin(), ends.end());
                }
                std::sort(next.begin(), next.end());
                next.erase(std::unique(next.begin(), next.end()), next.end());
                current = std::move(next);
                if (current.empty()) break;
            }
            out.insert(out.end(), current.begin(), current.end());
            break;
        }
        case Expr::Kind::alternation:
            for (const auto& child : expr.children) match_expr(grammar, *child, s, pos, out);
            break;
        case Expr::Kind::repeat: {
            std::vector<size_t> current = {pos};
            if (expr.min_rep == 0) out.push_back(pos);
            for (int rep = 1; rep <= expr.max_rep; ++rep) {
                std::vector<size_t> next;
                for (size_t p : current) {
                    auto ends = match_positions(grammar, *expr.child, s, p);
                    next.insert(next.end(), ends.begin(), ends.end());
                }
                std::sort(next.begin(), next.end());
                next.erase(std::unique(next.begin(), next.end()), next.end());
                current = std::move(next);
                if (current.empty()) break;
                if (rep >= expr.min_rep) out.insert(out.end(), current.begin(), current.end());
            }
            break;
        }
    }
}

void derive_expr(const Grammar& grammar, const Expr& expr, SplitMix64& rng, std::string& out) {
    switch (expr.kind) {
        case Expr::Kind::literal:
            out += expr.text;
            break;
        case Expr::Kind::char_class: {
            std::uint64_t total = 0;
            for (const auto& [lo, hi] : expr.ranges) total += static_cast<std::uint64_t>(hi - lo + 1);
            std::uint64_t k = rng.next_below(total);
            for (const auto& [lo, hi] : expr.ranges) {
                const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
                if (k < span) {
                    out.push_back(static_cast<char>(lo + static_cast<char>(k)));
                    break;
                }
                k -= span;
            }
            break;
        }
        case Expr::Kind::rule_ref: {
            const Expr* body = grammar.find(expr.rule);
            if (!body) throw Error(ErrorCode::Malformed, "undefined rule '" + expr.rule + "'");
            derive_expr(grammar, *body, rng, out);
            break;
        }
        case Expr::Kind::sequence:
            for (const auto& child : expr.children) derive_expr(grammar, *child, rng, out);
            break;
        case Expr::Kind::alternation:
            derive_expr(grammar, *expr.children[rng.next_below(expr.children.size())], rng, out);
            break;
        case Expr::Kind::repeat: {
            const int reps = expr.min_rep +
                             static_cast<int>(rng.next_below(
                                 static_cast<std::uint64_t>(expr.max_rep - expr.min_rep + 1)));
            for (int i = 0; i < reps; ++i) derive_expr(grammar, *expr.child, rng, out);
            break;
        }
    }
}

} // namespace

const Expr* Grammar::find(const std::string& name) const {
    for (const auto& [rule_name, body] : rules)
        if (rule_name == name) return body.get();
    return nullptr;
}

const Expr* Grammar::root() const {
    const Expr* r = find("root");
    if (!r && !rules.empty()) r = rules.front().second.get();
    return r;
}

Grammar parse(const std::string& text) {
    Grammar grammar;
    size_t line_start = 0;
    while (line_start <= text.size()) {
        size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::string line = text.substr(line_start, line_end - line_start);
        line_start = line_end + 1;

        // strip comments; a '#' inside a quoted literal stays
        bool quoted = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line.erase(i);
                break;
            }
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        Cursor cur{line, 0};
        std::string name = parse_identifier(cur);
        cur.skip_space();
        if (cur.text.compare(cur.pos, 3, "::=") != 0)
            throw Error(ErrorCode::Malformed, "expected '::=' after rule name '" + name + "'");
        cur.pos += 3;
        ExprPtr body = parse_alternation(cur);
        cur.skip_space();
        if (!cur.done())
            throw Error(ErrorCode::Malformed, "trailing tokens after rule '" + name + "'");
        grammar.rules.emplace_back(std::move(name), std::move(body));
    }
    if (grammar.rules.empty()) throw Error(ErrorCode::Malformed, "grammar has no rules");
    return grammar;
}

} // namespace gbnf

bool accepts(const GrammarSpec& grammar, std::string_view candidate) {
    static thread_local std::string cached_text;
    static thread_local gbnf::Grammar cached;
    if (cached_text != grammar.gbnf_text) {
        cached = gbnf::parse(grammar.gbnf_text);
        cached_text = grammar.gbnf_text;
    }
    const gbnf::Expr* root = cached.root();
    if (!root) return false;
    auto ends = gbnf::match_positions(cached, *root, candidate, 0);
    return std::binary_search(ends.begin(), ends.end(), candidate.size());
}

std::string random_derivation(const GrammarSpec& grammar, SplitMix64& rng) {
    gbnf::Grammar parsed = gbnf::parse(grammar.gbnf_text);
    const gbnf::Expr* root = parsed.root();
    std::string out;
    gbnf::derive_expr(parsed, *root, rng, out);
    return out;
}

} // namespace flowprompt
