#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alignlab::countdown {

// One task instance: combine every number exactly once with + - * / to hit
// the target exactly.
struct Problem {
    std::vector<long long> numbers;
    long long target = 0;
};

// Returns an error description if the problem violates its invariants
// (3 <= |numbers| <= 4, numbers >= 1, target >= 1), empty otherwise.
std::string validate_problem(const Problem& p);

enum class Reason {
    ok,
    parse_error,
    wrong_value,
    number_misuse,
    inexact_division,
    div_by_zero,
    negative_intermediate,
};

std::string_view reason_name(Reason r);

struct Verdict {
    bool accepted = false;
    Reason reason = Reason::parse_error;
    std::string detail;

    static Verdict pass() { return Verdict{true, Reason::ok, {}}; }
    static Verdict fail(Reason r, std::string detail) {
        return Verdict{false, r, std::move(detail)};
    }
};

enum class BinOp : char { add = '+', sub = '-', mul = '*', div = '/' };

// Immutable arithmetic AST with value semantics; copies share subtrees.
class Expression {
public:
    Expression() = default;

    static Expression literal(long long value);
    static Expression binary(BinOp op, Expression lhs, Expression rhs);

    bool valid() const { return node_ != nullptr; }
    bool is_literal() const;
    long long literal_value() const;
    BinOp op() const;
    Expression left() const;
    Expression right() const;

    friend bool operator==(const Expression& a, const Expression& b);
    friend bool operator!=(const Expression& a, const Expression& b) { return !(a == b); }

private:
    struct Node;
    explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

// Infix rendering with the minimal parentheses that reparse to the same tree.
std::string to_string(const Expression& e);

// Leaf literals in left-to-right order.
std::vector<long long> leaves(const Expression& e);

class ParseError : public std::runtime_error {
public:
    ParseError(size_t offset, const std::string& message)
        : std::runtime_error(message + " (offset " + std::to_string(offset) + ")"),
          offset_(offset),
          message_(message) {}
    size_t offset() const { return offset_; }
    const std::string& message() const { return message_; }

private:
    size_t offset_;
    std::string message_;
};

// Grammar:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := uint | "(" expr ")"
//   uint   := [0-9]+
// ASCII whitespace is permitted between tokens; anything else, including
// trailing text, raises ParseError with the byte offset of the violation.
Expression parse_expression(std::string_view text);

struct EvalOptions {
    // Strict mode: reject any negative intermediate value.
    bool forbid_negative_intermediate = false;
};

struct EvalOutcome {
    long long value = 0;
    Reason error = Reason::ok;
    bool ok() const { return error == Reason::ok; }
};

// Exact integer evaluation; division must be exact with a nonzero divisor.
// Throws std::overflow_error if an intermediate leaves [-1e15, 1e15], which
// cannot happen for expressions over valid problem numbers.
EvalOutcome evaluate(const Expression& e, const EvalOptions& opts = {});

struct VerifyOptions {
    EvalOptions eval;
    // When set, the last well-formed expression embedded in free text is
    // extracted and checked instead of requiring the whole candidate to be
    // one bare expression.
    bool lenient_extract = false;
};

// Exact-match check: candidate must parse, use the problem's numbers exactly
// once each, evaluate without error, and hit the target. Never throws; every
// failure is encoded in the verdict.
Verdict verify(const Problem& p, std::string_view candidate, const VerifyOptions& opts = {});

// Brute-force witness search over all orderings, tree shapes and operator
// assignments. Commutative operands are canonicalized to prune the
// enumeration; the first witness in deterministic enumeration order is
// returned.
std::optional<Expression> solve(const Problem& p, const EvalOptions& opts = {});

enum class KChoice { mixed = 0, three = 3, four = 4 };

struct GeneratorConfig {
    int count = 1;
    KChoice k = KChoice::mixed;
    long long value_min = 1;
    long long value_max = 9;
    long long target_max = 999;
    uint64_t seed = 0;
    // 0 picks the default budget of 1000 + 250 * count attempts.
    long long attempt_budget = 0;
    EvalOptions eval;
};

struct GeneratedProblem {
    Problem problem;
    Expression solution;
};

class GenerationExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejection-samples solvable problems. Every emitted problem carries the
// solver's canonical witness and passes verify() against it; (numbers,
// target) pairs are deduplicated within the batch; identical configs give
// byte-identical output.
std::vector<GeneratedProblem> generate_problems(const GeneratorConfig& cfg);

}  // namespace alignlab::countdown
