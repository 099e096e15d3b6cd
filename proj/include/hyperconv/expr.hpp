#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hyperconv/errors.hpp"

namespace hyperconv::expr {

// Arithmetic expressions in one variable x.
// Grammar: + - * / ^, sinh, cosh, exp, log, pow(a,b), numbers, parentheses.

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Op { constant, var, add, sub, mul, div, pow, neg, sinh, cosh, exp, log };
    Op op;
    double value = 0.0; // for constant
    NodePtr a, b;

    double eval(double x) const {
        switch (op) {
            case Op::constant: return value;
            case Op::var: return x;
            case Op::add: return a->eval(x) + b->eval(x);
            case Op::sub: return a->eval(x) - b->eval(x);
            case Op::mul: return a->eval(x) * b->eval(x);
            case Op::div: return a->eval(x) / b->eval(x);
            case Op::pow: return std::pow(a->eval(x), b->eval(x));
            case Op::neg: return -a->eval(x);
            case Op::sinh: return std::sinh(a->eval(x));
            case Op::cosh: return std::cosh(a->eval(x));
            case Op::exp: return std::exp(a->eval(x));
            case Op::log: return std::log(a->eval(x));
        }
        return 0.0;
    }
};

namespace detail {

inline NodePtr make(Node::Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view s) : src_(s) {}

    NodePtr parse() {
        auto e = sum();
        skip_ws();
        if (pos_ != src_.size())
            throw parse_error("expression: trailing input at '" + rest() + "'");
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    std::string rest() const { return std::string(src_.substr(pos_)); }
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr sum() {
        auto e = term();
        for (;;) {
            if (eat('+'))
                e = make(Node::Op::add, e, term());
            else if (eat('-'))
                e = make(Node::Op::sub, e, term());
            else
                return e;
        }
    }

    NodePtr term() {
        auto e = power();
        for (;;) {
            if (eat('*'))
                e = make(Node::Op::mul, e, power());
            else if (eat('/'))
                e = make(Node::Op::div, e, power());
            else
                return e;
        }
    }

    NodePtr power() {
        auto base = unary();
        if (eat('^')) return make(Node::Op::pow, base, power()); // right associative
        return base;
    }

    NodePtr unary() {
        if (eat('-')) return make(Node::Op::neg, unary());
        return primary();
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw parse_error("expression: unexpected end of input");
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return ident();
        if (eat('(')) {
            auto e = sum();
            if (!eat(')')) throw parse_error("expression: missing ')'");
            return e;
        }
        throw parse_error(std::string("expression: unexpected character '") + c + "'");
    }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
                src_[pos_] == 'e' || src_[pos_] == 'E' ||
                ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
            ++pos_;
        try {
            return make(Node::Op::constant, nullptr, nullptr,
                        std::stod(std::string(src_.substr(start, pos_ - start))));
        } catch (const std::exception&) {
            throw parse_error("expression: bad number '" +
                              std::string(src_.substr(start, pos_ - start)) + "'");
        }
    }

    NodePtr ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (name == "x") return make(Node::Op::var);
        auto arg1 = [&] {
            if (!eat('(')) throw parse_error("expression: expected '(' after " + name);
            auto e = sum();
            if (!eat(')')) throw parse_error("expression: missing ')' after " + name + " argument");
            return e;
        };
        if (name == "sinh") return make(Node::Op::sinh, arg1());
        if (name == "cosh") return make(Node::Op::cosh, arg1());
        if (name == "exp") return make(Node::Op::exp, arg1());
        if (name == "log") return make(Node::Op::log, arg1());
        if (name == "pow") {
            if (!eat('(')) throw parse_error("expression: expected '(' after pow");
            auto a = sum();
            if (!eat(',')) throw parse_error("expression: pow needs two arguments");
            auto b = sum();
            if (!eat(')')) throw parse_error("expression: missing ')' after pow");
            return make(Node::Op::pow, a, b);
        }
        throw parse_error("expression: unknown identifier '" + name + "'");
    }
};

} // namespace detail

inline NodePtr parse(std::string_view s) { return detail::Parser(s).parse(); }

} // namespace hyperconv::expr
