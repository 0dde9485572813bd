#pragma once

#include "alignlab/countdown.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace alignlab {

using TokenSeq = std::vector<int>;

// Preference triple: same prompt, a preferred and a dispreferred response.
struct PreferencePair {
    TokenSeq prompt;
    TokenSeq preferred;
    TokenSeq rejected;
};

// Fixed token set with dense ids. The countdown vocabulary covers digits,
// the four operators, parentheses, structural tokens and the two prompt
// keywords; it is frozen for the lifetime of an experiment and hashed into
// every checkpoint header.
struct Vocabulary {
    std::vector<std::string> tokens;
    int bos = -1;
    int eos = -1;
    int sep = -1;
    int space = -1;
    int nums = -1;
    int tgt = -1;

    static const Vocabulary& countdown();

    int size() const { return static_cast<int>(tokens.size()); }
    int id_of(std::string_view name) const;  // -1 when absent
    bool is_digit(int id) const;
    int digit_id(int digit) const;  // 0..9
    uint64_t hash() const;
};

// Response text <-> tokens. Tokenization accepts digits, + - * / ( ) and
// spaces; anything else throws std::invalid_argument. Detokenization is
// total: it skips BOS, stops at EOS and renders structural tokens as their
// bracketed names (which can never parse as an expression).
TokenSeq tokenize_response(const Vocabulary& v, std::string_view text);
std::string detokenize(const Vocabulary& v, const TokenSeq& tokens);

// Canonical prompt encoding of a problem:
//   NUMS d+ (SEP d+)* TGT d+
// with numbers in sorted order and multi-digit values spelled digit by digit.
TokenSeq encode_problem_prompt(const Vocabulary& v, const countdown::Problem& p);

// Prompt text form, e.g. "NUMS 2 SEP 3 SEP 7 TGT 13". Round-trips through
// tokenize_prompt.
std::string prompt_to_text(const Vocabulary& v, const TokenSeq& tokens);
TokenSeq tokenize_prompt(const Vocabulary& v, std::string_view text);

// Recovers the problem from a canonical prompt encoding.
countdown::Problem decode_problem_prompt(const Vocabulary& v, const TokenSeq& tokens);

}  // namespace alignlab
