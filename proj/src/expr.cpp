#include "chainexit/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

namespace chainexit::expr
{
namespace
{
struct FunctionInfo
{
    std::string_view name;
    Function function;
    std::size_t arity;
};

constexpr std::array<FunctionInfo, 8> kFunctions{{
    {"sin", Function::sin, 1},
    {"cos", Function::cos, 1},
    {"exp", Function::exp, 1},
    {"log", Function::log, 1},
    {"tanh", Function::tanh, 1},
    {"abs", Function::abs, 1},
    {"min", Function::min, 2},
    {"max", Function::max, 2},
}};

const FunctionInfo* find_function(std::string_view name)
{
    for (const auto& info : kFunctions)
    {
        if (info.name == name)
            return &info;
    }
    return nullptr;
}

//---------------------------------------------------------------------------//
// Lexer
//---------------------------------------------------------------------------//
enum class Tok
{
    number,
    ident,
    plus,
    minus,
    star,
    slash,
    caret,
    lparen,
    rparen,
    comma,
    end,
};

struct Token
{
    Tok type;
    std::size_t offset;  // 1-based
    std::string_view text;
    double value = 0;
};

std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    while (i < src.size())
    {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c)))
        {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1])))
        {
            while (i < src.size() && is_digit(src[i]))
                ++i;
            if (i < src.size() && src[i] == '.')
            {
                ++i;
                while (i < src.size() && is_digit(src[i]))
                    ++i;
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E'))
            {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-'))
                    ++j;
                if (j < src.size() && is_digit(src[j]))
                {
                    i = j;
                    while (i < src.size() && is_digit(src[i]))
                        ++i;
                }
                else
                {
                    throw ParseError(ParseError::Kind::lexical, i + 1,
                                     "malformed exponent");
                }
            }
            Token tok{Tok::number, start + 1, src.substr(start, i - start)};
            auto [ptr, ec] = std::from_chars(
                tok.text.data(), tok.text.data() + tok.text.size(), tok.value);
            if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size())
            {
                throw ParseError(ParseError::Kind::lexical, start + 1,
                                 "malformed number '" + std::string(tok.text)
                                     + "'");
            }
            out.push_back(tok);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
        {
            while (i < src.size()
                   && (std::isalnum(static_cast<unsigned char>(src[i]))
                       || src[i] == '_'))
                ++i;
            out.push_back({Tok::ident, start + 1, src.substr(start, i - start)});
            continue;
        }
        Tok type;
        switch (c)
        {
            case '+': type = Tok::plus; break;
            case '-': type = Tok::minus; break;
            case '*': type = Tok::star; break;
            case '/': type = Tok::slash; break;
            case '^': type = Tok::caret; break;
            case '(': type = Tok::lparen; break;
            case ')': type = Tok::rparen; break;
            case ',': type = Tok::comma; break;
            default:
                throw ParseError(ParseError::Kind::lexical, start + 1,
                                 std::string("unexpected character '") + c
                                     + "'");
        }
        ++i;
        out.push_back({type, start + 1, src.substr(start, 1)});
    }
    out.push_back({Tok::end, src.size() + 1, {}});
    return out;
}

//---------------------------------------------------------------------------//
// Pratt parser
//---------------------------------------------------------------------------//
constexpr int kBpAdditive = 10;
constexpr int kBpMultiplicative = 20;
constexpr int kBpUnary = 30;
constexpr int kBpPower = 40;

class Parser
{
  public:
    explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

    Node parse_all()
    {
        Node result = expression(0);
        const Token& t = peek();
        if (t.type == Tok::rparen)
        {
            throw ParseError(ParseError::Kind::unbalanced_paren, t.offset,
                             "unmatched ')'");
        }
        if (t.type != Tok::end)
        {
            throw ParseError(ParseError::Kind::syntax, t.offset,
                             "unexpected token '" + std::string(t.text) + "'");
        }
        return result;
    }

  private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_++]; }

    static int left_bp(Tok type)
    {
        switch (type)
        {
            case Tok::plus:
            case Tok::minus: return kBpAdditive;
            case Tok::star:
            case Tok::slash: return kBpMultiplicative;
            case Tok::caret: return kBpPower;
            default: return 0;
        }
    }

    Node expression(int rbp)
    {
        Node left = prefix(next());
        while (rbp < left_bp(peek().type))
        {
            left = infix(next(), std::move(left));
        }
        return left;
    }

    void expect_close(const char* context)
    {
        const Token& t = peek();
        if (t.type == Tok::rparen)
        {
            ++pos_;
            return;
        }
        if (t.type == Tok::end)
        {
            throw ParseError(ParseError::Kind::unbalanced_paren, t.offset,
                             std::string("missing ')' ") + context);
        }
        throw ParseError(ParseError::Kind::syntax, t.offset,
                         "unexpected token '" + std::string(t.text) + "' "
                             + context);
    }

    Node prefix(const Token& t)
    {
        switch (t.type)
        {
            case Tok::number: return number(t.value);
            case Tok::minus:
            {
                Node n;
                n.kind = NodeKind::negate;
                n.args.push_back(expression(kBpUnary));
                return n;
            }
            case Tok::lparen:
            {
                ++depth_;
                Node inner = expression(0);
                expect_close("to close '('");
                --depth_;
                return inner;
            }
            case Tok::ident: return identifier(t);
            case Tok::rparen:
                if (depth_ == 0)
                {
                    throw ParseError(ParseError::Kind::unbalanced_paren,
                                     t.offset, "unmatched ')'");
                }
                throw ParseError(ParseError::Kind::syntax, t.offset,
                                 "empty expression");
            case Tok::end:
                throw ParseError(ParseError::Kind::syntax, t.offset,
                                 "unexpected end of input");
            default:
                throw ParseError(ParseError::Kind::syntax, t.offset,
                                 "unexpected token '" + std::string(t.text)
                                     + "'");
        }
    }

    Node identifier(const Token& t)
    {
        if (peek().type == Tok::lparen)
        {
            const FunctionInfo* info = find_function(t.text);
            if (!info)
            {
                throw ParseError(ParseError::Kind::unknown_function, t.offset,
                                 "unknown function '" + std::string(t.text)
                                     + "'");
            }
            ++pos_;
            ++depth_;
            Node call;
            call.kind = NodeKind::call;
            call.function = info->function;
            if (peek().type != Tok::rparen)
            {
                call.args.push_back(expression(0));
                while (peek().type == Tok::comma)
                {
                    ++pos_;
                    call.args.push_back(expression(0));
                }
            }
            expect_close("to close argument list");
            --depth_;
            if (call.args.size() != info->arity)
            {
                throw ParseError(ParseError::Kind::arity, t.offset,
                                 std::string(info->name) + " expects "
                                     + std::to_string(info->arity)
                                     + " argument(s), got "
                                     + std::to_string(call.args.size()));
            }
            return call;
        }
        if (t.text == "t")
        {
            Node n;
            n.kind = NodeKind::time_var;
            return n;
        }
        if (t.text.size() >= 2 && (t.text[0] == 'x' || t.text[0] == 'u'))
        {
            std::size_t idx = 0;
            auto digits = t.text.substr(1);
            auto [ptr, ec]
                = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
            if (ec == std::errc{} && ptr == digits.data() + digits.size()
                && idx >= 1 && digits[0] != '0')
            {
                return t.text[0] == 'x' ? state_var(idx - 1)
                                        : control_var(idx - 1);
            }
        }
        if (find_function(t.text))
        {
            throw ParseError(ParseError::Kind::syntax, t.offset,
                             "function '" + std::string(t.text)
                                 + "' used without arguments");
        }
        throw ParseError(ParseError::Kind::unknown_identifier, t.offset,
                         "unknown identifier '" + std::string(t.text) + "'");
    }

    Node infix(const Token& t, Node left)
    {
        Node n;
        switch (t.type)
        {
            case Tok::plus: n.kind = NodeKind::add; break;
            case Tok::minus: n.kind = NodeKind::subtract; break;
            case Tok::star: n.kind = NodeKind::multiply; break;
            case Tok::slash: n.kind = NodeKind::divide; break;
            case Tok::caret: n.kind = NodeKind::power; break;
            default:
                throw ParseError(ParseError::Kind::syntax, t.offset,
                                 "unexpected token '" + std::string(t.text)
                                     + "'");
        }
        // ^ is right-associative: bind the right operand one notch looser.
        int rbp = n.kind == NodeKind::power ? kBpPower - 1 : left_bp(t.type);
        n.args.push_back(std::move(left));
        n.args.push_back(expression(rbp));
        return n;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

//---------------------------------------------------------------------------//
// Printing
//---------------------------------------------------------------------------//
void print_number(double v, std::string& out)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string_view text(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
    if (v < 0 || std::signbit(v))
    {
        out += '(';
        out += text;
        out += ')';
    }
    else
    {
        out += text;
    }
}

void print_into(const Node& n, std::string& out)
{
    switch (n.kind)
    {
        case NodeKind::number: print_number(n.value, out); return;
        case NodeKind::state_var:
            out += 'x';
            out += std::to_string(n.index + 1);
            return;
        case NodeKind::control_var:
            out += 'u';
            out += std::to_string(n.index + 1);
            return;
        case NodeKind::time_var: out += 't'; return;
        case NodeKind::negate:
            out += "(-";
            print_into(n.args[0], out);
            out += ')';
            return;
        case NodeKind::call:
            out += function_name(n.function);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i)
            {
                if (i)
                    out += ", ";
                print_into(n.args[i], out);
            }
            out += ')';
            return;
        default: break;
    }
    static constexpr std::array<std::string_view, 5> ops{" + ", " - ", " * ",
                                                         " / ", " ^ "};
    auto op_index = static_cast<std::size_t>(n.kind)
                    - static_cast<std::size_t>(NodeKind::add);
    out += '(';
    print_into(n.args[0], out);
    out += ops[op_index];
    print_into(n.args[1], out);
    out += ')';
}

//---------------------------------------------------------------------------//
// Evaluation
//---------------------------------------------------------------------------//
double apply_function(Function f, double a, double b)
{
    switch (f)
    {
        case Function::sin: return std::sin(a);
        case Function::cos: return std::cos(a);
        case Function::exp: return std::exp(a);
        case Function::log: return std::log(a);
        case Function::tanh: return std::tanh(a);
        case Function::abs: return std::fabs(a);
        case Function::min: return std::fmin(a, b);
        case Function::max: return std::fmax(a, b);
    }
    return std::nan("");
}

//---------------------------------------------------------------------------//
// Constant-folding constructors used by the differentiator
//---------------------------------------------------------------------------//
bool is_number(const Node& n, double v)
{
    return n.kind == NodeKind::number && n.value == v;
}

Node make_binary(NodeKind kind, Node a, Node b)
{
    Node n;
    n.kind = kind;
    n.args.push_back(std::move(a));
    n.args.push_back(std::move(b));
    return n;
}

Node make_call(Function f, Node a)
{
    Node n;
    n.kind = NodeKind::call;
    n.function = f;
    n.args.push_back(std::move(a));
    return n;
}

Node neg(Node a)
{
    if (a.kind == NodeKind::number)
        return number(-a.value);
    if (a.kind == NodeKind::negate)
        return std::move(a.args[0]);
    Node n;
    n.kind = NodeKind::negate;
    n.args.push_back(std::move(a));
    return n;
}

Node add(Node a, Node b)
{
    if (is_number(a, 0))
        return b;
    if (is_number(b, 0))
        return a;
    if (a.kind == NodeKind::number && b.kind == NodeKind::number)
        return number(a.value + b.value);
    return make_binary(NodeKind::add, std::move(a), std::move(b));
}

Node sub(Node a, Node b)
{
    if (is_number(b, 0))
        return a;
    if (is_number(a, 0))
        return neg(std::move(b));
    if (a.kind == NodeKind::number && b.kind == NodeKind::number)
        return number(a.value - b.value);
    return make_binary(NodeKind::subtract, std::move(a), std::move(b));
}

Node mul(Node a, Node b)
{
    if (is_number(a, 0) || is_number(b, 0))
        return number(0);
    if (is_number(a, 1))
        return b;
    if (is_number(b, 1))
        return a;
    if (a.kind == NodeKind::number && b.kind == NodeKind::number)
        return number(a.value * b.value);
    return make_binary(NodeKind::multiply, std::move(a), std::move(b));
}

Node div(Node a, Node b)
{
    if (is_number(a, 0))
        return number(0);
    if (is_number(b, 1))
        return a;
    return make_binary(NodeKind::divide, std::move(a), std::move(b));
}

Node pow_node(Node a, Node b)
{
    if (is_number(b, 1))
        return a;
    if (is_number(b, 0))
        return number(1);
    return make_binary(NodeKind::power, std::move(a), std::move(b));
}

bool matches(const Node& n, Variable var)
{
    switch (n.kind)
    {
        case NodeKind::state_var:
            return var.kind == VarKind::state && var.index == n.index;
        case NodeKind::control_var:
            return var.kind == VarKind::control && var.index == n.index;
        case NodeKind::time_var: return var.kind == VarKind::time;
        default: return false;
    }
}

void collect(const Node& n, std::set<Variable>& out)
{
    switch (n.kind)
    {
        case NodeKind::state_var: out.insert({VarKind::state, n.index}); break;
        case NodeKind::control_var:
            out.insert({VarKind::control, n.index});
            break;
        case NodeKind::time_var: out.insert({VarKind::time, 0}); break;
        default: break;
    }
    for (const auto& a : n.args)
        collect(a, out);
}

}  // namespace

//---------------------------------------------------------------------------//
std::string_view function_name(Function f)
{
    return kFunctions[static_cast<std::size_t>(f)].name;
}

std::size_t function_arity(Function f)
{
    return kFunctions[static_cast<std::size_t>(f)].arity;
}

bool Node::operator==(const Node& other) const
{
    if (kind != other.kind)
        return false;
    switch (kind)
    {
        case NodeKind::number: return value == other.value;
        case NodeKind::state_var:
        case NodeKind::control_var: return index == other.index;
        case NodeKind::call:
            if (function != other.function)
                return false;
            break;
        default: break;
    }
    return args == other.args;
}

Node number(double v)
{
    Node n;
    n.kind = NodeKind::number;
    n.value = v;
    return n;
}

Node state_var(std::size_t index)
{
    Node n;
    n.kind = NodeKind::state_var;
    n.index = index;
    return n;
}

Node control_var(std::size_t index)
{
    Node n;
    n.kind = NodeKind::control_var;
    n.index = index;
    return n;
}

std::string variable_name(Variable v)
{
    switch (v.kind)
    {
        case VarKind::state: return "x" + std::to_string(v.index + 1);
        case VarKind::control: return "u" + std::to_string(v.index + 1);
        case VarKind::time: return "t";
    }
    return "?";
}

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& what)
    : Error("parse error at offset " + std::to_string(offset) + ": " + what)
    , kind_(kind)
    , offset_(offset)
{
}

UnboundVariable::UnboundVariable(Variable v)
    : Error("unbound variable " + variable_name(v)), var_(v)
{
}

Node parse(std::string_view src)
{
    return Parser(src).parse_all();
}

std::string print(const Node& node)
{
    std::string out;
    print_into(node, out);
    return out;
}

double eval(const Node& n, const Env& env)
{
    switch (n.kind)
    {
        case NodeKind::number: return n.value;
        case NodeKind::state_var:
            if (n.index >= env.x.size())
                throw UnboundVariable({VarKind::state, n.index});
            return env.x[n.index];
        case NodeKind::control_var:
            if (n.index >= env.u.size())
                throw UnboundVariable({VarKind::control, n.index});
            return env.u[n.index];
        case NodeKind::time_var: return env.t;
        case NodeKind::negate: return -eval(n.args[0], env);
        case NodeKind::add: return eval(n.args[0], env) + eval(n.args[1], env);
        case NodeKind::subtract:
            return eval(n.args[0], env) - eval(n.args[1], env);
        case NodeKind::multiply:
            return eval(n.args[0], env) * eval(n.args[1], env);
        case NodeKind::divide:
            return eval(n.args[0], env) / eval(n.args[1], env);
        case NodeKind::power:
            return std::pow(eval(n.args[0], env), eval(n.args[1], env));
        case NodeKind::call:
        {
            double a = eval(n.args[0], env);
            double b = n.args.size() > 1 ? eval(n.args[1], env) : 0.0;
            return apply_function(n.function, a, b);
        }
    }
    return std::nan("");
}

Evaluation evaluate(const Node& node, const Env& env)
{
    Evaluation r;
    r.value = eval(node, env);
    if (std::isnan(r.value))
        r.status = Evaluation::Status::nan;
    else if (std::isinf(r.value))
        r.status = Evaluation::Status::infinite;
    return r;
}

bool depends_on(const Node& node, Variable var)
{
    if (matches(node, var))
        return true;
    for (const auto& a : node.args)
    {
        if (depends_on(a, var))
            return true;
    }
    return false;
}

std::set<Variable> variables(const Node& node)
{
    std::set<Variable> out;
    collect(node, out);
    return out;
}

Node differentiate(const Node& n, Variable var)
{
    if (!depends_on(n, var))
        return number(0);
    switch (n.kind)
    {
        case NodeKind::state_var:
        case NodeKind::control_var:
        case NodeKind::time_var: return number(1);
        case NodeKind::negate: return neg(differentiate(n.args[0], var));
        case NodeKind::add:
            return add(differentiate(n.args[0], var),
                       differentiate(n.args[1], var));
        case NodeKind::subtract:
            return sub(differentiate(n.args[0], var),
                       differentiate(n.args[1], var));
        case NodeKind::multiply:
        {
            const Node& f = n.args[0];
            const Node& g = n.args[1];
            return add(mul(differentiate(f, var), g),
                       mul(f, differentiate(g, var)));
        }
        case NodeKind::divide:
        {
            const Node& f = n.args[0];
            const Node& g = n.args[1];
            Node num = sub(mul(differentiate(f, var), g),
                           mul(f, differentiate(g, var)));
            return div(std::move(num), pow_node(g, number(2)));
        }
        case NodeKind::power:
        {
            const Node& f = n.args[0];
            const Node& g = n.args[1];
            if (!depends_on(g, var))
            {
                return mul(mul(g, pow_node(f, sub(g, number(1)))),
                           differentiate(f, var));
            }
            // d(f^g) = f^g (g' log f + g f' / f)
            Node inner
                = add(mul(differentiate(g, var), make_call(Function::log, f)),
                      div(mul(g, differentiate(f, var)), f));
            return mul(n, std::move(inner));
        }
        case NodeKind::call:
        {
            const Node& f = n.args[0];
            switch (n.function)
            {
                case Function::sin:
                    return mul(make_call(Function::cos, f), differentiate(f, var));
                case Function::cos:
                    return mul(neg(make_call(Function::sin, f)),
                               differentiate(f, var));
                case Function::exp: return mul(n, differentiate(f, var));
                case Function::log: return div(differentiate(f, var), f);
                case Function::tanh:
                    return mul(sub(number(1), pow_node(n, number(2))),
                               differentiate(f, var));
                case Function::abs:
                case Function::min:
                case Function::max:
                    throw NotDifferentiable(
                        std::string(function_name(n.function))
                        + " is not differentiable with respect to "
                        + variable_name(var));
            }
            break;
        }
        case NodeKind::number: break;
    }
    return number(0);
}

//---------------------------------------------------------------------------//
// Program
//---------------------------------------------------------------------------//
Program::Program(const Node& node)
{
    std::size_t depth = 0;
    emit(node, depth, depth_);
    auto vars = variables(node);
    if (vars.empty())
    {
        constant_ = expr::eval(node, Env{});
    }
    for (const auto& v : vars)
    {
        if (v.kind == VarKind::state)
            x_needed_ = std::max(x_needed_, v.index + 1);
        if (v.kind == VarKind::control)
            u_needed_ = std::max(u_needed_, v.index + 1);
    }
}

void Program::emit(const Node& n, std::size_t& depth, std::size_t& max_depth)
{
    auto push = [&](Op op, std::size_t index, double value) {
        code_.push_back({op, index, value});
        ++depth;
        max_depth = std::max(max_depth, depth);
    };
    auto reduce = [&](Op op, std::size_t popped) {
        code_.push_back({op, 0, 0.0});
        depth -= popped;
    };
    switch (n.kind)
    {
        case NodeKind::number: push(Op::push_const, 0, n.value); return;
        case NodeKind::state_var: push(Op::push_x, n.index, 0); return;
        case NodeKind::control_var: push(Op::push_u, n.index, 0); return;
        case NodeKind::time_var: push(Op::push_t, 0, 0); return;
        default: break;
    }
    for (const auto& a : n.args)
        emit(a, depth, max_depth);
    switch (n.kind)
    {
        case NodeKind::negate: reduce(Op::neg, 0); return;
        case NodeKind::add: reduce(Op::add, 1); return;
        case NodeKind::subtract: reduce(Op::sub, 1); return;
        case NodeKind::multiply: reduce(Op::mul, 1); return;
        case NodeKind::divide: reduce(Op::div, 1); return;
        case NodeKind::power: reduce(Op::pow, 1); return;
        case NodeKind::call:
        {
            static constexpr std::array<Op, 8> ops{Op::sin,  Op::cos, Op::exp,
                                                   Op::log,  Op::tanh, Op::abs,
                                                   Op::min,  Op::max};
            reduce(ops[static_cast<std::size_t>(n.function)],
                   function_arity(n.function) - 1);
            return;
        }
        default: return;
    }
}

double Program::eval(const Env& env, std::span<double> stack) const
{
    if (constant_)
        return *constant_;
    if (env.x.size() < x_needed_)
        throw UnboundVariable({VarKind::state, env.x.size()});
    if (env.u.size() < u_needed_)
        throw UnboundVariable({VarKind::control, env.u.size()});

    double* s = stack.data();
    std::size_t top = 0;
    for (const Instr& ins : code_)
    {
        switch (ins.op)
        {
            case Op::push_const: s[top++] = ins.value; break;
            case Op::push_x: s[top++] = env.x[ins.index]; break;
            case Op::push_u: s[top++] = env.u[ins.index]; break;
            case Op::push_t: s[top++] = env.t; break;
            case Op::neg: s[top - 1] = -s[top - 1]; break;
            case Op::add: --top; s[top - 1] += s[top]; break;
            case Op::sub: --top; s[top - 1] -= s[top]; break;
            case Op::mul: --top; s[top - 1] *= s[top]; break;
            case Op::div: --top; s[top - 1] /= s[top]; break;
            case Op::pow:
                --top;
                s[top - 1] = std::pow(s[top - 1], s[top]);
                break;
            case Op::sin: s[top - 1] = std::sin(s[top - 1]); break;
            case Op::cos: s[top - 1] = std::cos(s[top - 1]); break;
            case Op::exp: s[top - 1] = std::exp(s[top - 1]); break;
            case Op::log: s[top - 1] = std::log(s[top - 1]); break;
            case Op::tanh: s[top - 1] = std::tanh(s[top - 1]); break;
            case Op::abs: s[top - 1] = std::fabs(s[top - 1]); break;
            case Op::min:
                --top;
                s[top - 1] = std::fmin(s[top - 1], s[top]);
                break;
            case Op::max:
                --top;
                s[top - 1] = std::fmax(s[top - 1], s[top]);
                break;
        }
    }
    return s[0];
}

double Program::eval(const Env& env) const
{
    if (constant_)
        return *constant_;
    std::vector<double> stack(depth_);
    return eval(env, stack);
}

//---------------------------------------------------------------------------//
Expression::Expression() : Expression(number(0)) {}

Expression::Expression(std::string_view src)
    : source_(src), ast_(parse(src)), program_(ast_)
{
}

Expression::Expression(Node ast)
    : source_(print(ast)), ast_(std::move(ast)), program_(ast_)
{
}

}  // namespace chainexit::expr
