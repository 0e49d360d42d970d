"""
Integrand grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)*          right-associative on the literals
    atom   := NUMBER | FUNC '(' expr ')' | VAR | '(' expr ')'
    VAR    := 'x' DIGIT+               x1 .. xd
    FUNC   := exp | sin | cos | log
"""
import re
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import sympy
from pyparsing import (Forward, Literal, ParseBaseException, ParseFatalException, ParserElement, Regex,
                       StringEnd, Suppress, ZeroOrMore, one_of)

from polytope_em.exceptions import ExpressionError

FUNCTIONS = {
    'exp': sympy.exp,
    'sin': sympy.sin,
    'cos': sympy.cos,
    'log': sympy.log,
}

VARIABLE = re.compile(r'x(\d+)$')


@lru_cache(maxsize=None)
def variables(d: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f'x{k}') for k in range(1, d + 1))


def _make_grammar(d: int) -> ParserElement:
    symbols = variables(d)

    def number(s, loc, toks):
        value = Fraction(toks[0])
        return sympy.Rational(value.numerator, value.denominator)

    def variable(s, loc, toks):
        match = VARIABLE.match(toks[0])
        if match is None:
            raise ParseFatalException(s, loc, f"unknown identifier '{toks[0]}'")
        k = int(match.group(1))
        if not 1 <= k <= d:
            raise ParseFatalException(s, loc, f"unknown variable '{toks[0]}' in dimension {d}")
        return symbols[k - 1]

    def call(s, loc, toks):
        name, args = toks[0], toks[1:]
        if name not in FUNCTIONS:
            raise ParseFatalException(s, loc, f"unknown function '{name}'")
        if len(args) != 1:
            raise ParseFatalException(s, loc, f"'{name}' takes 1 argument, got {len(args)}")
        return FUNCTIONS[name](args[0])

    def power(s, loc, toks):
        base, exponents = toks[0], [int(t) for t in toks[1:]]
        if not exponents:
            return base
        exponent = sympy.Integer(exponents[-1])
        for e in reversed(exponents[:-1]):
            exponent = sympy.Integer(e) ** exponent
        if not exponent.is_integer:
            raise ParseFatalException(s, loc, f"exponent {exponent} is not an integer")
        return base ** exponent

    def negate(s, loc, toks):
        return -toks[0]

    def fold(s, loc, toks):
        result = toks[0]
        for op, operand in zip(toks[1::2], toks[2::2]):
            if op == '+':
                result = result + operand
            elif op == '-':
                result = result - operand
            elif op == '*':
                result = result * operand
            else:
                if operand == 0:
                    raise ParseFatalException(s, loc, "division by the constant zero")
                result = result / operand
        return result

    expr = Forward()
    lpar, rpar = Suppress('('), Suppress(')')
    name = Regex(r'[A-Za-z_][A-Za-z_0-9]*')
    num = Regex(r'(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?').set_parse_action(number)
    signed_int = Regex(r'[+-]?\d+')
    func_call = (name + lpar + expr + ZeroOrMore(Suppress(',') + expr) + rpar).set_parse_action(call)
    var = name.copy().set_parse_action(variable)
    atom = num | func_call | var | (lpar + expr + rpar)
    pw = (atom + ZeroOrMore(Suppress('^') + signed_int)).set_parse_action(power)
    unary = Forward()
    unary <<= (Suppress(Literal('-')) + unary).set_parse_action(negate) | pw
    term = (unary + ZeroOrMore(one_of('* /') + unary)).set_parse_action(fold)
    expr <<= (term + ZeroOrMore(one_of('+ -') + term)).set_parse_action(fold)
    return expr + StringEnd()


@lru_cache(maxsize=None)
def _grammar(d: int) -> ParserElement:
    return _make_grammar(d)


def parse_expression(src: str, d: int) -> sympy.Expr:
    """
    :param src: expression text
    :param d: dimension, variables are x1..xd
    :return: sympy expression in the symbols of variables(d)
    """
    if d < 1:
        raise ExpressionError(f"Dimension must be positive, got {d}")
    try:
        result = _grammar(d).parse_string(src, parse_all=True)
    except ParseBaseException as e:
        raise ExpressionError(f"Cannot parse '{src}': {e.msg}", position=e.loc) from None
    return sympy.sympify(result[0])
