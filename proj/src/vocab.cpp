#include "alignlab/vocab.hpp"

#include "alignlab/numerics.hpp"

#include <cctype>
#include <stdexcept>

namespace alignlab {

namespace {

Vocabulary build_countdown_vocab() {
    Vocabulary v;
    v.tokens = {"<bos>", "<eos>", "<sep>", "<space>", "<nums>", "<tgt>",
                "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
                "+", "-", "*", "/", "(", ")"};
    v.bos = 0;
    v.eos = 1;
    v.sep = 2;
    v.space = 3;
    v.nums = 4;
    v.tgt = 5;
    if (v.size() > 32) throw std::logic_error("vocabulary exceeds 32 tokens");
    return v;
}

void check_token(const Vocabulary& v, int id) {
    if (id < 0 || id >= v.size()) throw std::out_of_range("token id out of range: " + std::to_string(id));
}

void append_digits(const Vocabulary& v, long long value, TokenSeq& out) {
    const std::string s = std::to_string(value);
    for (char c : s) out.push_back(v.digit_id(c - '0'));
}

}  // namespace

const Vocabulary& Vocabulary::countdown() {
    static const Vocabulary v = build_countdown_vocab();
    return v;
}

int Vocabulary::id_of(std::string_view name) const {
    for (int i = 0; i < size(); ++i)
        if (tokens[i] == name) return i;
    return -1;
}

bool Vocabulary::is_digit(int id) const {
    return id >= 0 && id < size() && tokens[id].size() == 1 &&
           std::isdigit(static_cast<unsigned char>(tokens[id][0]));
}

int Vocabulary::digit_id(int digit) const {
    if (digit < 0 || digit > 9) throw std::out_of_range("digit out of range");
    const int id = id_of(std::string(1, static_cast<char>('0' + digit)));
    if (id < 0) throw std::logic_error("vocabulary has no digit tokens");
    return id;
}

uint64_t Vocabulary::hash() const {
    std::string joined;
    for (const auto& t : tokens) {
        joined += t;
        joined += '\x1f';
    }
    return fnv1a64(joined);
}

TokenSeq tokenize_response(const Vocabulary& v, std::string_view text) {
    TokenSeq out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ' ') {
            out.push_back(v.space);
            continue;
        }
        const int id = v.id_of(std::string_view(&c, 1));
        if (id < 0)
            throw std::invalid_argument("tokenize_response: unsupported character '" + std::string(1, c) +
                                        "' at offset " + std::to_string(i));
        out.push_back(id);
    }
    return out;
}

std::string detokenize(const Vocabulary& v, const TokenSeq& tokens) {
    std::string out;
    for (int id : tokens) {
        check_token(v, id);
        if (id == v.bos) continue;
        if (id == v.eos) break;
        if (id == v.space) {
            out += ' ';
            continue;
        }
        const std::string& name = v.tokens[id];
        out += name;  // single-char tokens render as themselves, structural ones as "<...>"
    }
    return out;
}

TokenSeq encode_problem_prompt(const Vocabulary& v, const countdown::Problem& p) {
    std::vector<long long> sorted = p.numbers;
    std::sort(sorted.begin(), sorted.end());
    TokenSeq out;
    out.push_back(v.nums);
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0) out.push_back(v.sep);
        append_digits(v, sorted[i], out);
    }
    out.push_back(v.tgt);
    append_digits(v, p.target, out);
    return out;
}

std::string prompt_to_text(const Vocabulary& v, const TokenSeq& tokens) {
    std::string out;
    bool prev_digit = false;
    for (int id : tokens) {
        check_token(v, id);
        const bool digit = v.is_digit(id);
        std::string word;
        if (id == v.nums) word = "NUMS";
        else if (id == v.tgt) word = "TGT";
        else if (id == v.sep) word = "SEP";
        else if (id == v.space) word = "SP";
        else if (id == v.bos) word = "BOS";
        else if (id == v.eos) word = "EOS";
        else word = v.tokens[id];

        if (!out.empty() && !(digit && prev_digit)) out += ' ';
        out += word;
        prev_digit = digit;
    }
    return out;
}

TokenSeq tokenize_prompt(const Vocabulary& v, std::string_view text) {
    TokenSeq out;
    size_t i = 0;
    while (i < text.size()) {
        if (std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        const std::string_view word = text.substr(i, j - i);
        if (word == "NUMS") out.push_back(v.nums);
        else if (word == "TGT") out.push_back(v.tgt);
        else if (word == "SEP") out.push_back(v.sep);
        else if (word == "SP") out.push_back(v.space);
        else if (word == "BOS") out.push_back(v.bos);
        else if (word == "EOS") out.push_back(v.eos);
        else {
            for (size_t k = 0; k < word.size(); ++k) {
                const int id = v.id_of(word.substr(k, 1));
                if (id < 0)
                    throw std::invalid_argument("tokenize_prompt: unsupported word '" + std::string(word) +
                                                "' at offset " + std::to_string(i));
                out.push_back(id);
            }
        }
        i = j;
    }
    return out;
}

countdown::Problem decode_problem_prompt(const Vocabulary& v, const TokenSeq& tokens) {
    countdown::Problem p;
    size_t i = 0;
    auto read_number = [&](const char* what) {
        long long value = 0;
        bool any = false;
        while (i < tokens.size() && v.is_digit(tokens[i])) {
            value = value * 10 + (v.tokens[tokens[i]][0] - '0');
            ++i;
            any = true;
        }
        if (!any) throw std::invalid_argument(std::string("decode_problem_prompt: expected digits for ") + what);
        return value;
    };
    if (i >= tokens.size() || tokens[i] != v.nums)
        throw std::invalid_argument("decode_problem_prompt: prompt must start with NUMS");
    ++i;
    p.numbers.push_back(read_number("number"));
    while (i < tokens.size() && tokens[i] == v.sep) {
        ++i;
        p.numbers.push_back(read_number("number"));
    }
    if (i >= tokens.size() || tokens[i] != v.tgt)
        throw std::invalid_argument("decode_problem_prompt: expected TGT");
    ++i;
    p.target = read_number("target");
    if (i != tokens.size()) throw std::invalid_argument("decode_problem_prompt: trailing tokens");
    return p;
}

}  // namespace alignlab
