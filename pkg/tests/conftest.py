"""Shared fixtures: term parsing shorthand, program sources, random generators."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from nonterm.pattern import PatternTerm, pterm
from nonterm.program import _Parser, parse_program
from nonterm.terms import (
    App,
    Subst,
    Symbol,
    Term,
    Var,
    context_power,
    hole,
    plug,
)

PROGRAMS_DIR = Path(__file__).resolve().parent.parent / "programs"

WHILE_GT_ADD = (PROGRAMS_DIR / "while-gt-add.pl").read_text()
ISLIST_GROW = (PROGRAMS_DIR / "islist-grow.pl").read_text()


def term(src: str) -> Term:
    """Parse a single term; arities are checked within this call only."""
    p = _Parser(src)
    t = p.term()
    assert p._peek() is None, f"trailing input in {src!r}"
    return t


def subst(**bindings: str) -> Subst:
    """Substitution from keyword bindings, e.g. subst(X="s(X)", Y="0")."""
    return Subst({Var(v): term(t) for v, t in bindings.items()})


@pytest.fixture
def ex_program():
    return parse_program(WHILE_GT_ADD, "while-gt-add")


@pytest.fixture
def islist_program():
    return parse_program(ISLIST_GROW, "islist-grow")


@pytest.fixture
def rng():
    return random.Random(20240817)


# --- random generators for property tests ---------------------------------

S = Symbol("s", 1)
F = Symbol("f", 2)
G = Symbol("g", 1)
ZERO = App(Symbol("0", 0), ())
NIL = App(Symbol("nil", 0), ())
VARS = [Var(n) for n in ("X", "Y", "Z", "W")]


def random_term(rng: random.Random, max_depth: int = 3, vars=VARS) -> Term:
    if max_depth == 0 or rng.random() < 0.3:
        return rng.choice([*vars, ZERO, NIL])
    sym = rng.choice([S, F, G])
    return App(sym, tuple(random_term(rng, max_depth - 1, vars) for _ in range(sym.arity)))


def random_ground_term(rng: random.Random, max_depth: int = 3) -> Term:
    if max_depth == 0 or rng.random() < 0.35:
        return rng.choice([ZERO, NIL])
    sym = rng.choice([S, G, F])
    return App(sym, tuple(random_ground_term(rng, max_depth - 1) for _ in range(sym.arity)))


def random_subst(rng: random.Random, max_bindings: int = 3) -> Subst:
    out = {}
    for v in rng.sample(VARS, rng.randint(0, max_bindings)):
        out[v] = random_term(rng)
    return Subst(out)


def random_context(rng: random.Random, max_depth: int = 3) -> Term:
    """A ground 1-context: at least one #1 occurrence, no variables."""
    layer = rng.choice(["s", "g", "f-left", "f-right", "f-both"])
    inner = hole(1) if max_depth <= 1 or rng.random() < 0.5 else random_context(rng, max_depth - 1)
    if layer == "s":
        return App(S, (inner,))
    if layer == "g":
        return App(G, (inner,))
    if layer == "f-left":
        return App(F, (inner, random_ground_term(rng, 1)))
    if layer == "f-right":
        return App(F, (random_ground_term(rng, 1), inner))
    return App(F, (inner, inner))


def random_simple_pattern(
    rng: random.Random, skeleton_vars=None, max_exp: int = 3
) -> PatternTerm:
    """A pattern term that is simple by construction.

    Each skeleton variable is either fixed (mu may send it anywhere) or
    driven by a random ground 1-context with exponents up to max_exp.
    """
    if skeleton_vars is None:
        skeleton_vars = rng.sample(VARS, rng.randint(1, 3))
    skel = random_term(rng, 3, skeleton_vars)
    while not any(v in skeleton_vars for v in _vars_of(skel)):
        skel = random_term(rng, 3, skeleton_vars)
    sigma = {}
    mu = {}
    for v in _vars_of(skel):
        if rng.random() < 0.3:
            if rng.random() < 0.5:
                mu[v] = random_term(rng, 2)
        else:
            c = random_context(rng, rng.randint(1, 3))
            a = rng.randint(1, max_exp)
            b = rng.randint(0, max_exp)
            sigma[v] = plug(context_power(c, a), [v])
            mu[v] = plug(context_power(c, b), [random_term(rng, 1)])
    return pterm(skel, Subst(sigma), Subst(mu))


def random_simple_subst(rng: random.Random) -> Subst:
    """A substitution over power terms whose bindings all stay simple.

    Bindings are decorated with equivalent layering (concrete context
    copies above/below the power node) to exercise normalization.
    """
    from nonterm.powers import PowerSymbol

    out = {}
    for name in ("X", "Y", "Z"):
        roll = rng.random()
        if roll < 0.25:
            continue
        if roll < 0.5:
            out[Var(name)] = random_term(rng, 2)
            continue
        c = random_context(rng, 2)
        a, b = rng.randint(0, 3), rng.randint(0, 3)
        t: Term = random_term(rng, 1)
        if rng.random() < 0.5 and b > 0:
            t = plug(context_power(c, 1), [t])
            b -= 1
        body: Term = App(PowerSymbol(c, a, b), (t,))
        if rng.random() < 0.5:
            body = plug(context_power(c, rng.randint(0, 2)), [body])
        out[Var(name)] = body
    return Subst(out)


def _vars_of(t: Term):
    from nonterm.terms import term_vars

    return sorted(term_vars(t), key=lambda v: v.name)
