#include "alignlab/countdown.hpp"

#include "alignlab/numerics.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace alignlab::countdown {

namespace {
constexpr long long kLiteralMax = 1'000'000'000LL;        // parser cap on one literal
constexpr long long kValueLimit = 1'000'000'000'000'000LL;  // |intermediate| cap
}  // namespace

struct Expression::Node {
    bool leaf = true;
    long long value = 0;
    BinOp op = BinOp::add;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

Expression Expression::literal(long long value) {
    auto n = std::make_shared<Node>();
    n->leaf = true;
    n->value = value;
    return Expression(std::move(n));
}

Expression Expression::binary(BinOp op, Expression lhs, Expression rhs) {
    if (!lhs.valid() || !rhs.valid()) throw std::invalid_argument("Expression::binary: empty operand");
    auto n = std::make_shared<Node>();
    n->leaf = false;
    n->op = op;
    n->lhs = lhs.node_;
    n->rhs = rhs.node_;
    return Expression(std::move(n));
}

bool Expression::is_literal() const { return node_ && node_->leaf; }

long long Expression::literal_value() const {
    if (!is_literal()) throw std::logic_error("Expression: not a literal");
    return node_->value;
}

BinOp Expression::op() const {
    if (!node_ || node_->leaf) throw std::logic_error("Expression: not a binary node");
    return node_->op;
}

Expression Expression::left() const {
    if (!node_ || node_->leaf) throw std::logic_error("Expression: not a binary node");
    return Expression(node_->lhs);
}

Expression Expression::right() const {
    if (!node_ || node_->leaf) throw std::logic_error("Expression: not a binary node");
    return Expression(node_->rhs);
}

bool operator==(const Expression& a, const Expression& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    const auto& x = *a.node_;
    const auto& y = *b.node_;
    if (x.leaf != y.leaf) return false;
    if (x.leaf) return x.value == y.value;
    return x.op == y.op && Expression(x.lhs) == Expression(y.lhs) && Expression(x.rhs) == Expression(y.rhs);
}

std::string validate_problem(const Problem& p) {
    if (p.numbers.size() < 3 || p.numbers.size() > 4)
        return "numbers must contain 3 or 4 values, got " + std::to_string(p.numbers.size());
    for (long long n : p.numbers) {
        if (n < 1) return "numbers must be >= 1, got " + std::to_string(n);
        if (n > kLiteralMax) return "number too large: " + std::to_string(n);
    }
    if (p.target < 1) return "target must be >= 1, got " + std::to_string(p.target);
    if (p.target > kValueLimit) return "target too large";
    return {};
}

std::string_view reason_name(Reason r) {
    switch (r) {
        case Reason::ok: return "OK";
        case Reason::parse_error: return "ParseError";
        case Reason::wrong_value: return "WrongValue";
        case Reason::number_misuse: return "NumberMisuse";
        case Reason::inexact_division: return "InexactDivision";
        case Reason::div_by_zero: return "DivByZero";
        case Reason::negative_intermediate: return "NegativeIntermediate";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// printing

namespace {

int precedence(BinOp op) {
    return (op == BinOp::add || op == BinOp::sub) ? 1 : 2;
}

int precedence_of(const Expression& e) {
    return e.is_literal() ? 3 : precedence(e.op());
}

void print_rec(const Expression& e, std::string& out) {
    if (e.is_literal()) {
        out += std::to_string(e.literal_value());
        return;
    }
    const int p = precedence(e.op());
    const Expression lhs = e.left();
    const Expression rhs = e.right();
    // Left-associative grammar: a left child binds without parens at equal
    // precedence, a right child does not.
    const bool wrap_l = precedence_of(lhs) < p;
    const bool wrap_r = precedence_of(rhs) <= p;
    if (wrap_l) out += '(';
    print_rec(lhs, out);
    if (wrap_l) out += ')';
    out += static_cast<char>(e.op());
    if (wrap_r) out += '(';
    print_rec(rhs, out);
    if (wrap_r) out += ')';
}

void leaves_rec(const Expression& e, std::vector<long long>& out) {
    if (e.is_literal()) {
        out.push_back(e.literal_value());
        return;
    }
    leaves_rec(e.left(), out);
    leaves_rec(e.right(), out);
}

}  // namespace

std::string to_string(const Expression& e) {
    if (!e.valid()) return {};
    std::string out;
    print_rec(e, out);
    return out;
}

std::vector<long long> leaves(const Expression& e) {
    std::vector<long long> out;
    if (e.valid()) leaves_rec(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

class Parser {
public:
    // In prefix mode the parser consumes the longest well-formed expression
    // and leaves the cursor on the first byte it could not use; in strict
    // mode the same situation raises ParseError.
    Parser(std::string_view text, bool prefix) : text_(text), prefix_(prefix) {}

    Expression parse_full() {
        skip_ws();
        Expression e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError(pos_, "unexpected trailing characters");
        return e;
    }

    Expression parse_expr() {
        Expression lhs = parse_term();
        for (;;) {
            const size_t mark = pos_;
            skip_ws();
            if (pos_ >= text_.size() || (text_[pos_] != '+' && text_[pos_] != '-')) {
                pos_ = mark;
                return lhs;
            }
            const char op = text_[pos_++];
            if (prefix_) {
                try {
                    Expression rhs = parse_term();
                    lhs = Expression::binary(op == '+' ? BinOp::add : BinOp::sub, lhs, rhs);
                } catch (const ParseError&) {
                    pos_ = mark;
                    return lhs;
                }
            } else {
                Expression rhs = parse_term();
                lhs = Expression::binary(op == '+' ? BinOp::add : BinOp::sub, lhs, rhs);
            }
        }
    }

    size_t pos() const { return pos_; }
    void seek(size_t p) { pos_ = p; }

private:
    Expression parse_term() {
        Expression lhs = parse_factor();
        for (;;) {
            const size_t mark = pos_;
            skip_ws();
            if (pos_ >= text_.size() || (text_[pos_] != '*' && text_[pos_] != '/')) {
                pos_ = mark;
                return lhs;
            }
            const char op = text_[pos_++];
            if (prefix_) {
                try {
                    Expression rhs = parse_factor();
                    lhs = Expression::binary(op == '*' ? BinOp::mul : BinOp::div, lhs, rhs);
                } catch (const ParseError&) {
                    pos_ = mark;
                    return lhs;
                }
            } else {
                Expression rhs = parse_factor();
                lhs = Expression::binary(op == '*' ? BinOp::mul : BinOp::div, lhs, rhs);
            }
        }
    }

    Expression parse_factor() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError(pos_, "expected number or '('");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = parse_expr();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')') throw ParseError(pos_, "expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_uint();
        throw ParseError(pos_, "expected number or '('");
    }

    Expression parse_uint() {
        const size_t start = pos_;
        long long value = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + (text_[pos_] - '0');
            if (value > kLiteralMax) throw ParseError(start, "integer literal too large");
            ++pos_;
        }
        return Expression::literal(value);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string_view text_;
    bool prefix_;
    size_t pos_ = 0;
};

bool is_expr_start(char c) {
    return c == '(' || std::isdigit(static_cast<unsigned char>(c));
}

// Scans left to right for maximal parseable chunks and returns the last one.
std::optional<Expression> extract_last_expression(std::string_view text) {
    std::optional<Expression> last;
    size_t pos = 0;
    while (pos < text.size()) {
        if (!is_expr_start(text[pos])) {
            ++pos;
            continue;
        }
        Parser p(text, /*prefix=*/true);
        p.seek(pos);
        try {
            Expression e = p.parse_expr();
            last = e;
            pos = std::max(p.pos(), pos + 1);
        } catch (const ParseError&) {
            ++pos;
        }
    }
    return last;
}

}  // namespace

Expression parse_expression(std::string_view text) {
    Parser p(text, /*prefix=*/false);
    return p.parse_full();
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

// Exact binary op on bounded integers; reports the failed rule via `err`.
bool apply_op(BinOp op, long long a, long long b, bool strict, long long& out, Reason& err) {
    __int128 r = 0;
    switch (op) {
        case BinOp::add: r = static_cast<__int128>(a) + b; break;
        case BinOp::sub: r = static_cast<__int128>(a) - b; break;
        case BinOp::mul: r = static_cast<__int128>(a) * b; break;
        case BinOp::div:
            if (b == 0) {
                err = Reason::div_by_zero;
                return false;
            }
            if (a % b != 0) {
                err = Reason::inexact_division;
                return false;
            }
            r = a / b;
            break;
    }
    if (r > kValueLimit || r < -kValueLimit) throw std::overflow_error("countdown: expression value out of range");
    if (strict && r < 0) {
        err = Reason::negative_intermediate;
        return false;
    }
    out = static_cast<long long>(r);
    return true;
}

bool eval_rec(const Expression& e, const EvalOptions& opts, long long& out, Reason& err) {
    if (e.is_literal()) {
        out = e.literal_value();
        if (out > kValueLimit || out < -kValueLimit)
            throw std::overflow_error("countdown: expression value out of range");
        return true;
    }
    long long a = 0, b = 0;
    if (!eval_rec(e.left(), opts, a, err)) return false;
    if (!eval_rec(e.right(), opts, b, err)) return false;
    return apply_op(e.op(), a, b, opts.forbid_negative_intermediate, out, err);
}

}  // namespace

EvalOutcome evaluate(const Expression& e, const EvalOptions& opts) {
    if (!e.valid()) throw std::invalid_argument("evaluate: empty expression");
    EvalOutcome result;
    if (!eval_rec(e, opts, result.value, result.error)) result.value = 0;
    return result;
}

// ---------------------------------------------------------------------------
// verification

Verdict verify(const Problem& p, std::string_view candidate, const VerifyOptions& opts) {
    Expression expr;
    if (opts.lenient_extract) {
        auto found = extract_last_expression(candidate);
        if (!found) return Verdict::fail(Reason::parse_error, "no well-formed expression in candidate");
        expr = *found;
    } else {
        try {
            expr = parse_expression(candidate);
        } catch (const ParseError& e) {
            return Verdict::fail(Reason::parse_error, e.what());
        }
    }

    std::vector<long long> used = leaves(expr);
    std::vector<long long> expected = p.numbers;
    std::sort(used.begin(), used.end());
    std::sort(expected.begin(), expected.end());
    if (used != expected) {
        std::ostringstream msg;
        msg << "expression uses [";
        for (size_t i = 0; i < used.size(); ++i) msg << (i ? "," : "") << used[i];
        msg << "], problem has [";
        for (size_t i = 0; i < expected.size(); ++i) msg << (i ? "," : "") << expected[i];
        msg << "]";
        return Verdict::fail(Reason::number_misuse, msg.str());
    }

    const EvalOutcome out = evaluate(expr, opts.eval);
    if (!out.ok()) return Verdict::fail(out.error, std::string(reason_name(out.error)));
    if (out.value != p.target)
        return Verdict::fail(Reason::wrong_value,
                             "evaluates to " + std::to_string(out.value) + ", target " + std::to_string(p.target));
    return Verdict::pass();
}

// ---------------------------------------------------------------------------
// brute-force solver

namespace {

struct Item {
    long long value;
    Expression expr;
};

std::optional<Expression> search(const std::vector<Item>& items, long long target, const EvalOptions& opts) {
    if (items.size() == 1) {
        if (items[0].value == target) return items[0].expr;
        return std::nullopt;
    }
    for (size_t i = 0; i + 1 < items.size(); ++i) {
        for (size_t j = i + 1; j < items.size(); ++j) {
            const Item& a = items[i];
            const Item& b = items[j];
            std::vector<Item> rest;
            rest.reserve(items.size() - 1);
            for (size_t k = 0; k < items.size(); ++k)
                if (k != i && k != j) rest.push_back(items[k]);

            // Commutative ops are built once with value-ordered operands.
            const Item& lo = (a.value <= b.value) ? a : b;
            const Item& hi = (a.value <= b.value) ? b : a;

            struct Candidate {
                BinOp op;
                const Item* lhs;
                const Item* rhs;
            };
            const Candidate candidates[] = {
                {BinOp::add, &lo, &hi}, {BinOp::sub, &a, &b}, {BinOp::sub, &b, &a},
                {BinOp::mul, &lo, &hi}, {BinOp::div, &a, &b}, {BinOp::div, &b, &a},
            };
            for (const auto& c : candidates) {
                if (a.value == b.value && c.lhs == &b) continue;  // symmetric duplicate
                long long v = 0;
                Reason err = Reason::ok;
                if (!apply_op(c.op, c.lhs->value, c.rhs->value, opts.forbid_negative_intermediate, v, err))
                    continue;
                rest.push_back(Item{v, Expression::binary(c.op, c.lhs->expr, c.rhs->expr)});
                if (auto found = search(rest, target, opts)) return found;
                rest.pop_back();
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Expression> solve(const Problem& p, const EvalOptions& opts) {
    if (p.numbers.empty() || p.numbers.size() > 4) throw std::invalid_argument("solve: need 1..4 numbers");
    std::vector<Item> items;
    items.reserve(p.numbers.size());
    std::vector<long long> sorted = p.numbers;
    std::sort(sorted.begin(), sorted.end());
    for (long long n : sorted) items.push_back(Item{n, Expression::literal(n)});
    return search(items, p.target, opts);
}

// ---------------------------------------------------------------------------
// generation

namespace {

Expression random_tree(const std::vector<long long>& values, size_t lo, size_t hi, Rng& rng) {
    if (hi - lo == 1) return Expression::literal(values[lo]);
    const size_t split = lo + 1 + static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(hi - lo) - 2));
    Expression lhs = random_tree(values, lo, split, rng);
    Expression rhs = random_tree(values, split, hi, rng);
    static constexpr BinOp kOps[] = {BinOp::add, BinOp::sub, BinOp::mul, BinOp::div};
    const BinOp op = kOps[rng.uniform_int(0, 3)];
    return Expression::binary(op, lhs, rhs);
}

}  // namespace

std::vector<GeneratedProblem> generate_problems(const GeneratorConfig& cfg) {
    if (cfg.count < 1) throw std::invalid_argument("generate_problems: count must be >= 1");
    if (cfg.value_min < 1 || cfg.value_max > 100 || cfg.value_min > cfg.value_max)
        throw std::invalid_argument("generate_problems: value range must lie within [1, 100]");
    if (cfg.target_max < 1) throw std::invalid_argument("generate_problems: target_max must be >= 1");

    const long long budget = cfg.attempt_budget > 0 ? cfg.attempt_budget : 1000 + 250LL * cfg.count;
    Rng rng(cfg.seed);
    std::set<std::pair<std::vector<long long>, long long>> seen;
    std::vector<GeneratedProblem> out;
    out.reserve(cfg.count);

    long long attempts = 0;
    while (static_cast<int>(out.size()) < cfg.count) {
        if (++attempts > budget)
            throw GenerationExhausted("generate_problems: attempt budget of " + std::to_string(budget) +
                                      " exhausted after " + std::to_string(out.size()) + " problems");

        const int k = (cfg.k == KChoice::mixed) ? static_cast<int>(rng.uniform_int(3, 4))
                                                : static_cast<int>(cfg.k);
        std::vector<long long> numbers(k);
        for (auto& n : numbers) n = rng.uniform_int(cfg.value_min, cfg.value_max);

        std::vector<long long> order = numbers;
        rng.shuffle(order);
        Expression candidate;
        try {
            candidate = random_tree(order, 0, order.size(), rng);
        } catch (const std::overflow_error&) {
            continue;
        }
        EvalOutcome val;
        try {
            val = evaluate(candidate, cfg.eval);
        } catch (const std::overflow_error&) {
            continue;
        }
        if (!val.ok() || val.value < 1 || val.value > cfg.target_max) continue;

        Problem p;
        p.numbers = numbers;
        std::sort(p.numbers.begin(), p.numbers.end());
        p.target = val.value;
        if (!seen.emplace(p.numbers, p.target).second) continue;  // duplicate within batch

        auto witness = solve(p, cfg.eval);
        if (!witness) throw std::logic_error("generate_problems: solver missed a known witness");
        if (!verify(p, to_string(*witness), VerifyOptions{cfg.eval, false}).accepted)
            throw std::logic_error("generate_problems: witness failed verification");
        out.push_back(GeneratedProblem{std::move(p), std::move(*witness)});
    }
    return out;
}

}  // namespace alignlab::countdown
