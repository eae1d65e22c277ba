#pragma once

#include "flowprompt/rng.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flowprompt {

enum class Prediction { attack, benign };

const char* to_string(Prediction p);

/// A grammar-validated model answer. `p_attack_literal` keeps the exact
/// decimal literal from the wire; `p_attack` is its numeric value. Two
/// verdicts compare equal on (prediction, literal).
struct ModelVerdict {
    Prediction prediction = Prediction::benign;
    double p_attack = 0.0;
    std::string p_attack_literal = "0";
    std::string raw;

    bool operator==(const ModelVerdict& other) const {
        return prediction == other.prediction && p_attack_literal == other.p_attack_literal;
    }
};

struct GrammarSpec {
    std::string gbnf_text;
    std::string version;
};

/// The canonical verdict grammar, byte-stable per version. The same text
/// is written to grammar.gbnf and sent to the decoding backend.
GrammarSpec emit_gbnf();

/// Strict scanner for the grammar's single surface form. Succeeds exactly
/// on strings in the grammar's language; error codes distinguish text
/// around the object (ExtraTokens), structural violations (Malformed,
/// MissingKey) and numerically-out-of-range literals (OutOfRange).
ModelVerdict parse_verdict(const std::string& raw);

/// Canonical JSON surface of a verdict (uses the stored literal).
std::string to_canonical_json(const ModelVerdict& verdict);

/// Render a probability as a grammar-valid literal: half-to-even at 4
/// fractional digits, trailing zeros trimmed, "0"/"1" at the boundaries.
std::string format_prob(double p);

/// Build a verdict from a decision + score through the canonical JSON
/// surface (so constructed verdicts take the same validation path as wire
/// output).
ModelVerdict make_verdict(Prediction prediction, double p_attack);

// ---------------------------------------------------------------------------
// GBNF conformance checking, independent of parse_verdict. A small
// recursive-descent interpreter over the parsed grammar AST; used as the
// second route in differential tests and to fuzz with random derivations.
// ---------------------------------------------------------------------------
namespace gbnf {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { literal, char_class, rule_ref, sequence, alternation, repeat };
    Kind kind = Kind::literal;
    std::string text;                          // literal
    std::vector<std::pair<char, char>> ranges; // char_class
    std::string rule;                          // rule_ref
    std::vector<ExprPtr> children;             // sequence / alternation
    ExprPtr child;                             // repeat
    int min_rep = 0;
    int max_rep = 0;
};

struct Grammar {
    std::vector<std::pair<std::string, ExprPtr>> rules; // definition order
    const Expr* find(const std::string& name) const;
    const Expr* root() const;
};

/// Parse GBNF text (the subset the verdict grammar needs: literals with
/// escapes, [a-z] classes, groups, `|`, `?`, `{n}` and `{m,n}`).
Grammar parse(const std::string& text);

} // namespace gbnf

/// True iff candidate derives from the grammar's start symbol.
bool accepts(const GrammarSpec& grammar, std::string_view candidate);

/// Uniform-ish random derivation from the grammar's start symbol.
std::string random_derivation(const GrammarSpec& grammar, SplitMix64& rng);

} // namespace flowprompt
