#include "realize/expr.hpp"

#include "realize/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace realize::expr {

namespace {

const Node& zero_node() {
    static const Node zero{};
    return zero;
}

Expr make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

bool is_value(const Expr& e, double v) {
    double x = 0.0;
    return e.is_number(&x) && x == v;
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

double apply(Func f, double a) {
    switch (f) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Tan: return std::tan(a);
        case Func::Exp: return std::exp(a);
        case Func::Log:
            if (!(a > 0.0)) {
                throw DomainError("log of non-positive value " + std::to_string(a));
            }
            return std::log(a);
        case Func::Sqrt:
            if (a < 0.0) {
                throw DomainError("sqrt of negative value " + std::to_string(a));
            }
            return std::sqrt(a);
        case Func::Abs: return std::fabs(a);
        case Func::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
    }
    return 0.0;
}

double power(double base, double exponent) {
    if (base < 0.0 && !is_integer(exponent)) {
        throw DomainError("negative base raised to non-integer power");
    }
    if (base == 0.0 && exponent < 0.0) {
        throw DomainError("division by zero in negative power");
    }
    return std::pow(base, exponent);
}

double checked(double v) {
    if (!std::isfinite(v)) {
        throw DomainError("non-finite intermediate result");
    }
    return v;
}

// Recursive-descent parser over the grammar documented in expr.hpp.
class Parser {
public:
    Parser(std::string_view text, int n) : text_(text), n_(n) {}

    Expr run() {
        skip_ws();
        if (pos_ >= text_.size()) {
            throw SyntaxError("empty expression", pos_);
        }
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) {
            throw SyntaxError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        }
        return e;
    }

private:
    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\r' || text_[pos_] == '\n')) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            throw SyntaxError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+')) {
                lhs = lhs + parse_term();
            } else if (accept('-')) {
                lhs = lhs - parse_term();
            } else {
                return lhs;
            }
        }
    }

    Expr parse_term() {
        Expr lhs = parse_factor();
        for (;;) {
            if (accept('*')) {
                lhs = lhs * parse_factor();
            } else if (accept('/')) {
                lhs = lhs / parse_factor();
            } else {
                return lhs;
            }
        }
    }

    Expr parse_factor() {
        if (accept('-')) {
            return -parse_factor();
        }
        Expr base = parse_base();
        if (accept('^')) {
            return pow(base, parse_exponent());
        }
        return base;
    }

    double parse_exponent() {
        skip_ws();
        const std::size_t start = pos_;
        if (accept('-')) {
            return -parse_exponent();
        }
        Expr e;
        if (accept('(')) {
            e = parse_expr();
            expect(')');
        } else {
            e = number(parse_number());
        }
        double value = 0.0;
        if (!e.is_number(&value)) {
            throw SyntaxError("exponent must be a constant", start);
        }
        if (accept('^')) {
            value = power(value, parse_exponent());
        }
        return value;
    }

    double parse_number() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E') && pos_ > start) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) {
                ++look;
            }
            if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
                pos_ = look;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                    ++pos_;
                }
            }
        }
        double value = 0.0;
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (start == pos_ || ec != std::errc() || ptr != last) {
            throw SyntaxError("malformed number", start);
        }
        return value;
    }

    Expr parse_base() {
        skip_ws();
        if (pos_ >= text_.size()) {
            throw SyntaxError("unexpected end of input", pos_);
        }
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number(parse_number());
        }
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name(text_.substr(start, pos_ - start));
            return identifier(name, start);
        }
        throw SyntaxError(std::string("unexpected '") + c + "'", pos_);
    }

    Expr identifier(const std::string& name, std::size_t start) {
        static const std::pair<const char*, Func> funcs[] = {
            {"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},
            {"exp", Func::Exp},   {"log", Func::Log},   {"sqrt", Func::Sqrt},
            {"abs", Func::Abs},   {"sign", Func::Sign},
        };
        for (const auto& [fname, f] : funcs) {
            if (name == fname) {
                expect('(');
                Expr arg = parse_expr();
                expect(')');
                return call(f, arg);
            }
        }
        if (name == "t") {
            return time();
        }
        if (name.size() > 1 && name[0] == 'x' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            int k = 0;
            std::from_chars(name.data() + 1, name.data() + name.size(), k);
            if (k >= 1 && k <= n_) {
                return state(k);
            }
            throw UnknownIdentifier("state variable '" + name + "' out of range 1.." +
                                    std::to_string(n_) + " at offset " + std::to_string(start));
        }
        throw UnknownIdentifier("unknown identifier '" + name + "' at offset " +
                                std::to_string(start));
    }
};

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    return v < 0.0 ? "(" + s + ")" : s;
}

}  // namespace

const Node& Expr::node() const { return node_ ? *node_ : zero_node(); }

Kind Expr::kind() const { return node().kind; }

bool Expr::is_number(double* value) const {
    if (node().kind != Kind::Number) {
        return false;
    }
    if (value) {
        *value = node().value;
    }
    return true;
}

Expr number(double v) {
    Node n;
    n.kind = Kind::Number;
    n.value = v;
    return make(n);
}

Expr time() {
    Node n;
    n.kind = Kind::Time;
    return make(n);
}

Expr state(int k) {
    Node n;
    n.kind = Kind::State;
    n.index = k;
    return make(n);
}

Expr operator-(const Expr& a) {
    double v = 0.0;
    if (a.is_number(&v)) {
        return number(-v);
    }
    if (a.kind() == Kind::Neg) {
        return a.node().lhs;
    }
    Node n;
    n.kind = Kind::Neg;
    n.lhs = a;
    return make(n);
}

namespace {

Expr binary(Kind k, const Expr& a, const Expr& b) {
    Node n;
    n.kind = k;
    n.lhs = a;
    n.rhs = b;
    return make(n);
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
    double x = 0.0, y = 0.0;
    if (a.is_number(&x) && b.is_number(&y)) {
        return number(x + y);
    }
    if (is_value(a, 0.0)) {
        return b;
    }
    if (is_value(b, 0.0)) {
        return a;
    }
    return binary(Kind::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    double x = 0.0, y = 0.0;
    if (a.is_number(&x) && b.is_number(&y)) {
        return number(x - y);
    }
    if (is_value(b, 0.0)) {
        return a;
    }
    if (is_value(a, 0.0)) {
        return -b;
    }
    return binary(Kind::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    double x = 0.0, y = 0.0;
    if (a.is_number(&x) && b.is_number(&y)) {
        return number(x * y);
    }
    if (is_value(a, 0.0) || is_value(b, 0.0)) {
        return number(0.0);
    }
    if (is_value(a, 1.0)) {
        return b;
    }
    if (is_value(b, 1.0)) {
        return a;
    }
    return binary(Kind::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    double x = 0.0, y = 0.0;
    if (a.is_number(&x) && b.is_number(&y) && y != 0.0) {
        return number(x / y);
    }
    if (is_value(b, 1.0)) {
        return a;
    }
    if (is_value(a, 0.0) && !is_value(b, 0.0)) {
        return number(0.0);
    }
    return binary(Kind::Div, a, b);
}

Expr pow(const Expr& base, double exponent) {
    double x = 0.0;
    if (base.is_number(&x)) {
        try {
            const double v = power(x, exponent);
            if (std::isfinite(v)) {
                return number(v);
            }
        } catch (const DomainError&) {
            // left unfolded; evaluation reports the error
        }
    }
    if (exponent == 1.0) {
        return base;
    }
    if (exponent == 0.0) {
        return number(1.0);
    }
    Node n;
    n.kind = Kind::Pow;
    n.lhs = base;
    n.value = exponent;
    return make(n);
}

Expr call(Func f, const Expr& arg) {
    double x = 0.0;
    if (arg.is_number(&x)) {
        try {
            const double v = apply(f, x);
            if (std::isfinite(v)) {
                return number(v);
            }
        } catch (const DomainError&) {
            // left unfolded; evaluation reports the error
        }
    }
    Node n;
    n.kind = Kind::Call;
    n.func = f;
    n.lhs = arg;
    return make(n);
}

Expr parse(std::string_view text, int n) { return Parser(text, n).run(); }

double evaluate(const Expr& e, double t, const Vector& x) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Number: return n.value;
        case Kind::Time: return t;
        case Kind::State:
            if (n.index < 1 || n.index > x.size()) {
                throw DimensionError("x" + std::to_string(n.index) + " not present in state of size " +
                                     std::to_string(x.size()));
            }
            return x(n.index - 1);
        case Kind::Neg: return -evaluate(n.lhs, t, x);
        case Kind::Add: return checked(evaluate(n.lhs, t, x) + evaluate(n.rhs, t, x));
        case Kind::Sub: return checked(evaluate(n.lhs, t, x) - evaluate(n.rhs, t, x));
        case Kind::Mul: return checked(evaluate(n.lhs, t, x) * evaluate(n.rhs, t, x));
        case Kind::Div: {
            const double num = evaluate(n.lhs, t, x);
            const double den = evaluate(n.rhs, t, x);
            if (den == 0.0) {
                throw DomainError("division by zero");
            }
            return checked(num / den);
        }
        case Kind::Pow: return checked(power(evaluate(n.lhs, t, x), n.value));
        case Kind::Call: return checked(apply(n.func, evaluate(n.lhs, t, x)));
    }
    return 0.0;
}

Vector evaluate(const std::vector<Expr>& es, double t, const Vector& x) {
    Vector out(static_cast<Eigen::Index>(es.size()));
    for (std::size_t i = 0; i < es.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = evaluate(es[i], t, x);
    }
    return out;
}

Expr differentiate(const Expr& e, Variable var) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Number: return number(0.0);
        case Kind::Time: return number(var.is_time ? 1.0 : 0.0);
        case Kind::State: return number(!var.is_time && var.index == n.index ? 1.0 : 0.0);
        case Kind::Neg: return -differentiate(n.lhs, var);
        case Kind::Add: return differentiate(n.lhs, var) + differentiate(n.rhs, var);
        case Kind::Sub: return differentiate(n.lhs, var) - differentiate(n.rhs, var);
        case Kind::Mul:
            return differentiate(n.lhs, var) * n.rhs + n.lhs * differentiate(n.rhs, var);
        case Kind::Div: {
            const Expr da = differentiate(n.lhs, var);
            const Expr db = differentiate(n.rhs, var);
            return da / n.rhs - (n.lhs * db) / pow(n.rhs, 2.0);
        }
        case Kind::Pow:
            return number(n.value) * pow(n.lhs, n.value - 1.0) * differentiate(n.lhs, var);
        case Kind::Call: {
            const Expr& u = n.lhs;
            const Expr du = differentiate(u, var);
            switch (n.func) {
                case Func::Sin: return call(Func::Cos, u) * du;
                case Func::Cos: return -(call(Func::Sin, u) * du);
                case Func::Tan: return (number(1.0) + pow(call(Func::Tan, u), 2.0)) * du;
                case Func::Exp: return e * du;
                case Func::Log: return du / u;
                case Func::Sqrt: return du / (number(2.0) * e);
                case Func::Abs: return call(Func::Sign, u) * du;
                case Func::Sign: return number(0.0);
            }
        }
    }
    return number(0.0);
}

Expr substitute(const Expr& e, int k, const Expr& replacement) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Number:
        case Kind::Time: return e;
        case Kind::State: return n.index == k ? replacement : e;
        case Kind::Neg: return -substitute(n.lhs, k, replacement);
        case Kind::Add: return substitute(n.lhs, k, replacement) + substitute(n.rhs, k, replacement);
        case Kind::Sub: return substitute(n.lhs, k, replacement) - substitute(n.rhs, k, replacement);
        case Kind::Mul: return substitute(n.lhs, k, replacement) * substitute(n.rhs, k, replacement);
        case Kind::Div: return substitute(n.lhs, k, replacement) / substitute(n.rhs, k, replacement);
        case Kind::Pow: return pow(substitute(n.lhs, k, replacement), n.value);
        case Kind::Call: return call(n.func, substitute(n.lhs, k, replacement));
    }
    return e;
}

std::string func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Tan: return "tan";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
        case Func::Sign: return "sign";
    }
    return "?";
}

std::string to_string(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Number: return format_number(n.value);
        case Kind::Time: return "t";
        case Kind::State: return "x" + std::to_string(n.index);
        case Kind::Neg: return "(-" + to_string(n.lhs) + ")";
        case Kind::Add: return "(" + to_string(n.lhs) + " + " + to_string(n.rhs) + ")";
        case Kind::Sub: return "(" + to_string(n.lhs) + " - " + to_string(n.rhs) + ")";
        case Kind::Mul: return "(" + to_string(n.lhs) + " * " + to_string(n.rhs) + ")";
        case Kind::Div: return "(" + to_string(n.lhs) + " / " + to_string(n.rhs) + ")";
        case Kind::Pow: return "(" + to_string(n.lhs) + ")^(" + format_number(n.value) + ")";
        case Kind::Call: return func_name(n.func) + "(" + to_string(n.lhs) + ")";
    }
    return "0";
}

std::set<int> state_variables(const Expr& e) {
    std::set<int> out;
    std::function<void(const Expr&)> walk = [&](const Expr& x) {
        const Node& n = x.node();
        if (n.kind == Kind::State) {
            out.insert(n.index);
        }
        if (n.kind == Kind::Neg || n.kind == Kind::Pow || n.kind == Kind::Call) {
            walk(n.lhs);
        } else if (n.kind == Kind::Add || n.kind == Kind::Sub || n.kind == Kind::Mul ||
                   n.kind == Kind::Div) {
            walk(n.lhs);
            walk(n.rhs);
        }
    };
    walk(e);
    return out;
}

bool depends_on_time(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Time: return true;
        case Kind::Number:
        case Kind::State: return false;
        case Kind::Neg:
        case Kind::Pow:
        case Kind::Call: return depends_on_time(n.lhs);
        default: return depends_on_time(n.lhs) || depends_on_time(n.rhs);
    }
}

}  // namespace realize::expr
