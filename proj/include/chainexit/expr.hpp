#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainexit/error.hpp"

//! Arithmetic expressions for drifts, diffusion entries, and boundary data.
//!
//! Variables are positional: x1..xN index the flattened state, u1..uR the
//! control vector of the subsystem being evaluated, and t the time.
namespace chainexit::expr
{

enum class NodeKind : std::uint8_t
{
    number,
    state_var,
    control_var,
    time_var,
    negate,
    add,
    subtract,
    multiply,
    divide,
    power,
    call,
};

enum class Function : std::uint8_t
{
    sin,
    cos,
    exp,
    log,
    tanh,
    abs,
    min,
    max,
};

std::string_view function_name(Function f);
std::size_t function_arity(Function f);

//! Expression tree node. Variable nodes carry a resolved 0-based index.
struct Node
{
    NodeKind kind = NodeKind::number;
    double value = 0;
    std::size_t index = 0;
    Function function = Function::sin;
    std::vector<Node> args;

    bool operator==(const Node& other) const;
};

Node number(double v);
Node state_var(std::size_t index);
Node control_var(std::size_t index);

enum class VarKind : std::uint8_t
{
    state,
    control,
    time,
};

struct Variable
{
    VarKind kind = VarKind::state;
    std::size_t index = 0;

    auto operator<=>(const Variable&) const = default;
};

std::string variable_name(Variable v);

//! Values bound to the variables of an expression.
struct Env
{
    std::span<const double> x;
    std::span<const double> u;
    double t = 0;
};

class ParseError : public Error
{
  public:
    enum class Kind
    {
        lexical,
        unbalanced_paren,
        unknown_function,
        unknown_identifier,
        arity,
        syntax,
    };

    //! \a offset is the 1-based byte column where the problem was detected.
    ParseError(Kind kind, std::size_t offset, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

  private:
    Kind kind_;
    std::size_t offset_;
};

class UnboundVariable : public Error
{
  public:
    explicit UnboundVariable(Variable v);
    Variable variable() const noexcept { return var_; }

  private:
    Variable var_;
};

class NotDifferentiable : public Error
{
  public:
    using Error::Error;
};

/*!
 * Parse an expression.
 *
 * Precedence from tightest: ^ (right-associative), unary minus, then * and /,
 * then + and - (both left-associative). Implicit multiplication is rejected.
 */
Node parse(std::string_view src);

//! Canonical text form; parse(print(parse(s))) == parse(s).
std::string print(const Node& node);

//! Tree-walking evaluation. Throws UnboundVariable.
double eval(const Node& node, const Env& env);

struct Evaluation
{
    enum class Status
    {
        ok,
        nan,
        infinite,
    };

    double value = 0;
    Status status = Status::ok;

    bool flagged() const noexcept { return status != Status::ok; }
};

//! Evaluation with IEEE domain problems (NaN, +-inf) flagged.
Evaluation evaluate(const Node& node, const Env& env);

//! Symbolic derivative with light constant folding.
//! Throws NotDifferentiable when abs/min/max depend on \a var.
Node differentiate(const Node& node, Variable var);

bool depends_on(const Node& node, Variable var);
std::set<Variable> variables(const Node& node);

//---------------------------------------------------------------------------//
/*!
 * Flat postfix form of an expression for inner loops.
 *
 * Evaluation uses a caller-provided stack of at least stack_depth() entries,
 * so a single program can be shared between threads.
 */
class Program
{
  public:
    Program() = default;
    explicit Program(const Node& node);

    double eval(const Env& env, std::span<double> stack) const;
    double eval(const Env& env) const;

    std::size_t stack_depth() const noexcept { return depth_; }
    bool is_constant() const noexcept { return constant_.has_value(); }

  private:
    enum class Op : std::uint8_t
    {
        push_const,
        push_x,
        push_u,
        push_t,
        neg,
        add,
        sub,
        mul,
        div,
        pow,
        sin,
        cos,
        exp,
        log,
        tanh,
        abs,
        min,
        max,
    };
    struct Instr
    {
        Op op;
        std::size_t index;
        double value;
    };

    void emit(const Node& node, std::size_t& depth, std::size_t& max_depth);

    std::vector<Instr> code_;
    std::size_t depth_ = 0;
    std::size_t x_needed_ = 0;
    std::size_t u_needed_ = 0;
    std::optional<double> constant_;
};

//! Source text + tree + compiled program, parsed once.
class Expression
{
  public:
    Expression();
    explicit Expression(std::string_view src);
    explicit Expression(Node ast);

    const std::string& source() const noexcept { return source_; }
    const Node& ast() const noexcept { return ast_; }
    const Program& program() const noexcept { return program_; }

    double operator()(const Env& env, std::span<double> stack) const
    {
        return program_.eval(env, stack);
    }
    double operator()(const Env& env) const { return program_.eval(env); }

  private:
    std::string source_;
    Node ast_;
    Program program_;
};

}  // namespace chainexit::expr
