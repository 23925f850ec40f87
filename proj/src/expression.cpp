#include "slowfast/expression.hpp"

#include "slowfast/common.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

namespace slowfast {

class ExpressionParser {
public:
    ExpressionParser(const std::string& text, int dim_slow, int dim_fast)
        : s_(text), dim_slow_(dim_slow), dim_fast_(dim_fast) {}

    Expression run() {
        Expression e;
        e.text_ = s_;
        expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        if (code_.empty()) fail("empty expression");
        e.program_ = std::move(code_);
        e.max_stack_ = max_depth_;
        e.uses_slow_ = uses_slow_;
        return e;
    }

private:
    using Op = Expression::Op;

    const std::string& s_;
    std::size_t pos_ = 0;
    int dim_slow_;
    int dim_fast_;
    std::vector<Expression::Instr> code_;
    int depth_ = 0;
    int max_depth_ = 0;
    bool uses_slow_ = false;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(fmt::format("expression '{}': {} at column {}", s_, msg, pos_ + 1));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(Op op, int index = 0, double value = 0.0) {
        code_.push_back({op, index, value});
        switch (op) {
            case Op::Const:
            case Op::SlowVar:
            case Op::FastVar:
                ++depth_;
                break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
                --depth_;
                break;
            default:
                break;
        }
        if (depth_ > max_depth_) max_depth_ = depth_;
    }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(Op::Add);
            } else if (accept('-')) {
                term();
                emit(Op::Sub);
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) {
                unary();
                emit(Op::Mul);
            } else if (accept('/')) {
                unary();
                emit(Op::Div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(Op::Neg);
        } else if (accept('+')) {
            unary();
        } else {
            primary();
        }
    }

    void primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            emit(Op::Const, 0, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id = s_.substr(start, pos_ - start);
            identifier(id, start);
            return;
        }
        fail(fmt::format("unexpected character '{}'", c));
    }

    void identifier(const std::string& id, std::size_t start) {
        static const std::array<std::pair<const char*, Op>, 4> funcs{{
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"sqrt", Op::Sqrt}}};
        for (const auto& [name, op] : funcs) {
            if (id == name) {
                if (!accept('(')) fail(fmt::format("expected '(' after {}", name));
                expr();
                if (!accept(')')) fail("expected ')'");
                emit(op);
                return;
            }
        }
        if (id == "pi") {
            emit(Op::Const, 0, kPi);
            return;
        }
        if (id[0] == 'x' || id[0] == 'y') {
            bool slow = id[0] == 'x';
            int dim = slow ? dim_slow_ : dim_fast_;
            std::string digits = id.substr(1);
            if (!digits.empty() && digits[0] == '_') digits.erase(0, 1);
            int index = 0;
            if (digits.empty()) {
                if (dim != 1) {
                    pos_ = start;
                    fail(fmt::format("bare '{}' is ambiguous with dimension {}", id, dim));
                }
            } else {
                for (char d : digits) {
                    if (!std::isdigit(static_cast<unsigned char>(d))) {
                        pos_ = start;
                        fail(fmt::format("unknown identifier '{}'", id));
                    }
                }
                index = std::atoi(digits.c_str()) - 1;
                if (index < 0 || index >= dim) {
                    pos_ = start;
                    fail(fmt::format("variable '{}' out of range (dimension {})", id, dim));
                }
            }
            if (slow) uses_slow_ = true;
            emit(slow ? Op::SlowVar : Op::FastVar, index);
            return;
        }
        pos_ = start;
        fail(fmt::format("unknown identifier '{}'", id));
    }
};

Expression Expression::parse(const std::string& text, int dim_slow, int dim_fast) {
    return ExpressionParser(text, dim_slow, dim_fast).run();
}

double Expression::operator()(std::span<const double> x, std::span<const double> y) const {
    constexpr int kStack = 64;
    std::array<double, kStack> small{};
    std::vector<double> big;
    double* st = small.data();
    if (max_stack_ > kStack) {
        big.resize(static_cast<std::size_t>(max_stack_));
        st = big.data();
    }
    int sp = 0;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::Const: st[sp++] = in.value; break;
            case Op::SlowVar: st[sp++] = x[static_cast<std::size_t>(in.index)]; break;
            case Op::FastVar: st[sp++] = y[static_cast<std::size_t>(in.index)]; break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::Add: --sp; st[sp - 1] += st[sp]; break;
            case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
            case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
            case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
            case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Op::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        }
    }
    return st[0];
}

}  // namespace slowfast
