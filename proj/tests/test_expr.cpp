#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "chainexit/expr.hpp"
#include "expr_gen.hpp"

using namespace chainexit;
using namespace chainexit::expr;

namespace
{
double eval_at(const std::string& src, std::vector<double> x, std::vector<double> u = {})
{
    return eval(parse(src), Env{x, u, 0.0});
}

ParseError::Kind error_kind(const std::string& src, std::size_t* offset = nullptr)
{
    try
    {
        parse(src);
    }
    catch (const ParseError& e)
    {
        if (offset)
            *offset = e.offset();
        return e.kind();
    }
    FAIL("expected a parse error for '" << src << "'");
    return ParseError::Kind::syntax;
}

double central_fd(const Node& f, std::size_t var, std::vector<double> x, double h)
{
    std::vector<double> xp = x, xm = x;
    xp[var] += h;
    xm[var] -= h;
    return (eval(f, Env{xp, {}, 0}) - eval(f, Env{xm, {}, 0})) / (2 * h);
}
}  // namespace

TEST_CASE("arithmetic and precedence")
{
    CHECK(eval_at("-x1 + 2*u1", {0.5}, {0.25}) == 0.0);
    CHECK(eval_at("2^3^2", {}) == 512.0);
    CHECK(eval_at("-2^2", {}) == -4.0);
    CHECK(eval_at("2*3+4", {}) == 10.0);
    CHECK(eval_at("2+3*4", {}) == 14.0);
    CHECK(eval_at("8/4/2", {}) == 1.0);
    CHECK(eval_at("5-3-1", {}) == 1.0);
    CHECK(eval_at("-x1*3", {2.0}) == -6.0);
    CHECK(eval_at("2^-1", {}) == 0.5);
    CHECK(eval_at("  max( x1 ,x2 )  - min(x1,x2)", {1.0, 4.0}) == 3.0);
    CHECK(eval_at("1.5e1 + .5", {}) == 15.5);
}

TEST_CASE("standard functions")
{
    CHECK(eval_at("exp(0)", {}) == 1.0);
    CHECK(eval_at("tanh(1)", {}) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
    CHECK(eval_at("abs(-3)", {}) == 3.0);
    CHECK(eval_at("log(exp(2))", {}) == doctest::Approx(2.0));
}

TEST_CASE("domain errors are flagged")
{
    std::vector<double> x{1.0, 0.0};
    auto r = evaluate(parse("x1/x2"), Env{x, {}, 0});
    CHECK(std::isinf(r.value));
    CHECK(r.status == Evaluation::Status::infinite);
    auto l = evaluate(parse("log(x2 - 1)"), Env{x, {}, 0});
    CHECK(l.status == Evaluation::Status::nan);
    CHECK(l.flagged());
    CHECK_FALSE(evaluate(parse("x1"), Env{x, {}, 0}).flagged());
}

TEST_CASE("unbound variables")
{
    std::vector<double> x{1.0};
    CHECK_THROWS_AS(eval(parse("x2"), Env{x, {}, 0}), UnboundVariable);
    CHECK_THROWS_AS(Program(parse("x1 + u1")).eval(Env{x, {}, 0}), UnboundVariable);
}

TEST_CASE("parse errors carry kind and 1-based offset")
{
    std::size_t off = 0;
    CHECK(error_kind("sin(x1", &off) == ParseError::Kind::unbalanced_paren);
    CHECK(off == 7);
    CHECK(error_kind("(x1 + 2", &off) == ParseError::Kind::unbalanced_paren);
    CHECK(off == 8);
    CHECK(error_kind("x1 + 2)", &off) == ParseError::Kind::unbalanced_paren);
    CHECK(off == 7);
    CHECK(error_kind("foo(x1)", &off) == ParseError::Kind::unknown_function);
    CHECK(off == 1);
    CHECK(error_kind("sin(x1, x2)") == ParseError::Kind::arity);
    CHECK(error_kind("max(x1)") == ParseError::Kind::arity);
    CHECK(error_kind("x1 $ 2", &off) == ParseError::Kind::lexical);
    CHECK(off == 4);
    CHECK(error_kind("2x1") == ParseError::Kind::syntax);
    CHECK(error_kind("y + 1") == ParseError::Kind::unknown_identifier);
    CHECK(error_kind("x0") == ParseError::Kind::unknown_identifier);
    CHECK(error_kind("1 +") == ParseError::Kind::syntax);
    CHECK(error_kind("1e+") == ParseError::Kind::lexical);
}

TEST_CASE("variables resolve to positional indices")
{
    auto n = parse("x3 * u2 + t");
    auto vars = variables(n);
    CHECK(vars.count({VarKind::state, 2}) == 1);
    CHECK(vars.count({VarKind::control, 1}) == 1);
    CHECK(vars.count({VarKind::time, 0}) == 1);
    CHECK(vars.size() == 3);
}

TEST_CASE("derivatives")
{
    std::vector<double> x{3.0, 2.0};
    auto d = differentiate(parse("x1*x1"), {VarKind::state, 0});
    CHECK(eval(d, Env{x, {}, 0}) == 6.0);

    std::vector<double> zero{0.0};
    CHECK(eval(differentiate(parse("sin(x1)"), {VarKind::state, 0}), Env{zero, {}, 0}) == 1.0);

    std::vector<double> p{1.0, 2.0};
    auto f = parse("exp(x1*x2)");
    double sym = eval(differentiate(f, {VarKind::state, 0}), Env{p, {}, 0});
    double fd = central_fd(f, 0, p, 1e-6);
    CHECK(sym == doctest::Approx(2 * std::exp(2.0)).epsilon(1e-12));
    CHECK(std::abs(sym - fd) <= 1e-6 * std::abs(sym));

    CHECK(eval(differentiate(parse("x2^3"), {VarKind::state, 1}), Env{p, {}, 0}) == 12.0);
    CHECK(eval(differentiate(parse("x1^x2"), {VarKind::state, 1}), Env{x, {}, 0})
          == doctest::Approx(9 * std::log(3.0)));
    CHECK(eval(differentiate(parse("abs(x2)"), {VarKind::state, 0}), Env{p, {}, 0}) == 0.0);
    CHECK_THROWS_AS(differentiate(parse("abs(x1)"), {VarKind::state, 0}), NotDifferentiable);
    CHECK_THROWS_AS(differentiate(parse("max(x1, 0)"), {VarKind::state, 0}), NotDifferentiable);
    CHECK(differentiate(parse("x1 - x2"), {VarKind::state, 0}) == number(1));
}

TEST_CASE("compiled program matches tree evaluation")
{
    testing::TextExprGenerator gen(7);
    std::vector<double> x{0.3, -0.7, 1.1, 0.2};
    std::vector<double> u{0.5, -0.25};
    Env env{x, u, 0.125};
    for (int i = 0; i < 2000; ++i)
    {
        auto ast = parse(gen());
        Program prog(ast);
        std::vector<double> stack(prog.stack_depth() + 1);
        double a = eval(ast, env);
        double b = prog.eval(env, stack);
        if (std::isnan(a))
            CHECK(std::isnan(b));
        else
            CHECK(a == b);
    }
}

TEST_CASE("property: print/parse round trip")
{
    testing::TextExprGenerator gen(2024);
    for (int i = 0; i < 10000; ++i)
    {
        auto src = gen();
        auto ast = parse(src);
        auto again = parse(print(ast));
        REQUIRE_MESSAGE(again == ast, src << "  ->  " << print(ast));
    }
}

TEST_CASE("property: symbolic derivative agrees with central differences")
{
    testing::SmoothExprGenerator gen(99);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> coord(-1, 1);
    for (int i = 0; i < 1000; ++i)
    {
        auto f = gen();
        std::vector<double> p{coord(rng), coord(rng), coord(rng)};
        for (std::size_t v = 0; v < 3; ++v)
        {
            double sym = eval(differentiate(f, {VarKind::state, v}), Env{p, {}, 0});
            double fd = central_fd(f, v, p, 1e-6);
            REQUIRE_MESSAGE(std::abs(sym - fd) <= 1e-4 * (1 + std::abs(sym)), print(f));
        }
    }
}

TEST_CASE("property: evaluation is bit-reproducible")
{
    testing::SmoothExprGenerator gen(3);
    std::vector<double> p{0.1, 0.2, 0.3};
    for (int i = 0; i < 200; ++i)
    {
        Expression e(gen());
        double a = e(Env{p, {}, 0});
        double b = e(Env{p, {}, 0});
        CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
}
