#pragma once

// Recursive-descent parser for the coordinate-expression grammar used in
// scenario files (see docs/field_expressions.md). Expressions parse into
// GaussPoly, so everything declared in a scenario has exact derivatives.

#include <cctype>

#include "ensteer/field.hpp"

namespace ensteer {

class ExpressionParser {
public:
    ExpressionParser(std::string text, std::vector<std::string> variables)
        : text_(std::move(text)), vars_(std::move(variables)) {
        if (vars_.empty() || static_cast<int>(vars_.size()) > kMaxDim)
            throw StructuralError("ExpressionParser: bad variable list");
    }

    GaussPoly parse() {
        pos_ = 0;
        GaussPoly result = expression();
        skip_ws();
        if (pos_ != text_.size())
            fail("trailing characters at position " + std::to_string(pos_));
        return result;
    }

private:
    int dim() const { return static_cast<int>(vars_.size()); }

    [[noreturn]] void fail(const std::string& what) const {
        throw StructuralError("field expression '" + text_ + "': " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    GaussPoly expression() {
        GaussPoly acc = term();
        while (true) {
            if (consume('+')) acc += term();
            else if (consume('-')) acc -= term();
            else return acc;
        }
    }

    GaussPoly term() {
        GaussPoly acc = factor();
        while (true) {
            const char c = peek();
            if (c == '*') {
                ++pos_;
                acc = acc * factor();
            } else {
                return acc;
            }
        }
    }

    GaussPoly factor() {
        if (consume('-')) return -1.0 * factor();
        GaussPoly base = atom();
        if (consume('^')) {
            const int e = integer();
            if (e < 0 || e > 64) fail("exponent out of range");
            GaussPoly r = GaussPoly::constant(dim(), 1.0);
            for (int k = 0; k < e; ++k) r = r * base;
            return r;
        }
        return base;
    }

    GaussPoly atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            GaussPoly inner = expression();
            if (!consume(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::string name = identifier();
            if (name == "gauss") {
                if (!consume('(')) fail("gauss expects '('");
                const int v = variable_index(identifier());
                if (!consume(')')) fail("gauss expects ')'");
                return GaussPoly::gauss_factor(dim(), v);
            }
            return GaussPoly::variable(dim(), variable_index(name));
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    GaussPoly number() {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(text_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("bad number");
        }
        pos_ += used;
        return GaussPoly::constant(dim(), v);
    }

    int integer() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ == start) fail("expected integer");
        return std::stoi(text_.substr(start, pos_ - start));
    }

    std::string identifier() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        return text_.substr(start, pos_ - start);
    }

    int variable_index(const std::string& name) {
        for (int i = 0; i < dim(); ++i)
            if (vars_[i] == name) return i;
        fail("unknown variable '" + name + "'");
    }

    std::string text_;
    std::vector<std::string> vars_;
    std::size_t pos_ = 0;
};

inline GaussPoly parse_expression(const std::string& text,
                                  const std::vector<std::string>& variables) {
    return ExpressionParser(text, variables).parse();
}

inline std::vector<std::string> coordinate_names(int dim) {
    std::vector<std::string> names;
    for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
    return names;
}

/// Field from one expression per coordinate, variables x1..xn.
inline SmoothField parse_field(const std::vector<std::string>& exprs,
                               std::string label = "expr") {
    const int dim = static_cast<int>(exprs.size());
    const auto names = coordinate_names(dim);
    std::vector<GaussPoly> comps;
    comps.reserve(dim);
    for (const auto& e : exprs) comps.push_back(parse_expression(e, names));
    return SmoothField(std::move(comps), std::move(label));
}

}  // namespace ensteer
