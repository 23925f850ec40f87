#pragma once

#include <span>
#include <string>
#include <vector>

namespace slowfast {

/// Compiled closed-form coefficient expression over slow variables x1..xd
/// and fast variables y1..yl.
///
/// Grammar: numbers, `pi`, variables (`x1`, `x_1`, and `x`/`y` as aliases
/// for the first coordinate), unary +/-, binary + - * /, parentheses and the
/// functions sin, cos, exp, sqrt. Evaluation is reentrant.
class Expression {
public:
    Expression() = default;

    /// Throws ConfigError with the offending column on a parse failure.
    static Expression parse(const std::string& text, int dim_slow, int dim_fast);

    [[nodiscard]] double operator()(std::span<const double> x,
                                    std::span<const double> y) const;

    [[nodiscard]] const std::string& text() const { return text_; }
    [[nodiscard]] bool uses_slow() const { return uses_slow_; }

    enum class Op : unsigned char {
        Const, SlowVar, FastVar, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp, Sqrt
    };
    struct Instr {
        Op op;
        int index = 0;
        double value = 0.0;
    };

private:
    std::string text_;
    std::vector<Instr> program_;
    int max_stack_ = 0;
    bool uses_slow_ = false;

    friend class ExpressionParser;
};

}  // namespace slowfast
