"""Context-power terms: expansion, normalization, the pattern unifier."""

import random

from conftest import random_context, random_simple_pattern, random_term, subst, term
from nonterm.pattern import PatternSubstitution, lift, pterm
from nonterm.powers import (
    PowerSymbol,
    expand_at,
    normalize,
    pattern_form,
    pattern_mgu,
    power_form,
    subst_at,
)
from nonterm.terms import (
    App,
    Subst,
    Symbol,
    Var,
    apply,
    context_power,
    hole,
    match,
    mgu,
    plug,
    term_vars,
)

S1 = App(Symbol("s", 1), (hole(1),))  # s(#1)
FC = App(Symbol("f", 3), (hole(1), term("0"), hole(1)))  # f(#1, 0, #1)


def pw(c, a, b, inner):
    return App(PowerSymbol(c, a, b), (inner,))


class TestExpand:
    def test_branching_context_at_one(self):
        u = pw(FC, 1, 1, term("1"))
        assert expand_at(u, 1) == term("f(f(1,0,1),0,f(1,0,1))")

    def test_pure_terms_unchanged(self):
        t = term("while(s(X),0)")
        assert expand_at(t, 3) == t

    def test_offset_only_at_zero(self):
        assert expand_at(pw(S1, 2, 1, Var("X1")), 0) == term("s(X1)")

    def test_substitution_expansion(self):
        theta = Subst({Var("X"): pw(S1, 1, 0, term("0"))})
        assert subst_at(theta, 2) == subst(X="s(s(0))")


class TestNormalize:
    def test_layered_tower_collapses(self):
        # s(  s^{2n+1}( s^{n+2}( s(0) ) ) )  ==  s^{3n+5}(0)
        u = plug(S1, [pw(S1, 2, 1, pw(S1, 1, 2, plug(S1, [term("0")])))])
        assert normalize(u) == pw(S1, 3, 5, term("0"))

    def test_pure_term_is_fixed(self):
        t = term("gt(s(X),0)")
        assert normalize(t) is t

    def test_concrete_layer_below_power(self):
        u = pw(FC, 1, 0, plug(FC, [term("1")]))
        assert normalize(u) == pw(FC, 1, 1, term("1"))

    def test_zero_slope_power_expands(self):
        u = pw(S1, 0, 2, Var("X"))
        assert normalize(u) == term("s(s(X))")

    def test_idempotent(self, rng):
        for _ in range(200):
            u = _random_power_term(rng)
            once = normalize(u)
            assert normalize(once) == once

    def test_preserves_expansion(self, rng):
        for _ in range(200):
            u = _random_power_term(rng)
            nu = normalize(u)
            for n in range(6):
                assert expand_at(nu, n) == expand_at(u, n)


def _random_power_term(rng: random.Random) -> "App":
    """Messy power terms: stacked symbols, stray concrete layers, offsets."""
    c = random_context(rng, 2)
    inner = random_term(rng, 2)
    t = inner
    for _ in range(rng.randint(1, 3)):
        kind = rng.random()
        if kind < 0.4:
            t = pw(c if rng.random() < 0.7 else random_context(rng, 2), rng.randint(0, 2), rng.randint(0, 2), t)
        else:
            t = plug(context_power(c, rng.randint(1, 2)), [t])
    wrap = rng.choice([None, Symbol("g", 1)])
    return App(wrap, (t,)) if wrap else t


class TestPowerForm:
    def test_double_step_binding(self):
        p = pterm(term("f(s(X),Y)"), subst(X="s(s(X))"), subst(X="s(X1)", Y="0"))
        assert power_form(p) == App(
            Symbol("f", 2), (pw(S1, 2, 2, Var("X1")), term("0"))
        )

    def test_lifted_term_is_itself(self):
        v = term("while(X,s(Y))")
        assert power_form(lift(v)) == v

    def test_seed_family_form(self):
        p1 = pterm(term("gt(X,Y)"), subst(X="s(X)", Y="s(Y)"), subst(X="s(X)", Y="0"))
        assert power_form(p1) == App(
            Symbol("gt", 2), (pw(S1, 1, 1, Var("X")), pw(S1, 1, 0, term("0")))
        )

    def test_non_simple_binding_rejected(self):
        p = pterm(term("g(X)"), subst(X="f(X,Y)"), Subst())
        assert power_form(p) is None

    def test_variable_skeleton(self):
        p = pterm(Var("X"), subst(X="s(X)"), subst(X="0"))
        assert power_form(p) == pw(S1, 1, 0, term("0"))


class TestPatternForm:
    def test_mixed_layers_example(self):
        theta = Subst(
            {
                Var("X"): plug(context_power(S1, 2), [term("1")]),
                Var("Y"): plug(S1, [pw(S1, 2, 1, pw(S1, 1, 2, plug(S1, [term("0")])))]),
            }
        )
        got = pattern_form(theta)
        assert got == PatternSubstitution(
            subst(Y="s(s(s(Y)))"), subst(X="s(s(1))", Y="s(s(s(s(s(0)))))")
        )

    def test_pure_substitution(self):
        theta = Subst({Var("X"): term("f(Y,0)")})
        assert pattern_form(theta) == PatternSubstitution(Subst(), theta)

    def test_stacked_foreign_contexts_rejected(self):
        g1 = App(Symbol("g", 1), (hole(1),))
        theta = Subst({Var("X"): pw(S1, 1, 0, pw(g1, 1, 0, term("0")))})
        assert pattern_form(theta) is None

    def test_power_below_alien_symbol_rejected(self):
        theta = Subst({Var("X"): App(Symbol("g", 1), (pw(S1, 1, 1, Var("Y")),))})
        assert pattern_form(theta) is None


class TestPatternMgu:
    def body_and_seeds(self):
        body = [lift(term("gt(X,Y)")), lift(term("add(X,Y,Z)")), lift(term("while(Z,s(Y))"))]
        seeds = [
            pterm(term("gt(X1,Y1)"), subst(X1="s(X1)", Y1="s(Y1)"), subst(X1="s(X1)", Y1="0")),
            pterm(term("add(X2,Y2,Z2)"), subst(Y2="s(Y2)", Z2="s(Z2)"), subst(Y2="0", Z2="X2")),
            lift(term("while(X3,Y3)")),
        ]
        return body, seeds

    def test_loop_unfolding_substitution(self):
        body, seeds = self.body_and_seeds()
        got = pattern_mgu(body, seeds)
        rho = subst(X="s(X)", Y="s(Y)", Z="s(s(Z))", X2="s(X2)", X3="s(s(X3))", Y3="s(Y3)")
        nu = subst(X="s(X1)", Y="0", Z="s(X1)", X2="s(X1)", X3="s(X1)", Y3="s(0)")
        assert got == PatternSubstitution(rho, nu)

    def test_identical_lifted_terms(self):
        t = lift(term("f(X,0)"))
        assert pattern_mgu([t], [t]) == PatternSubstitution(Subst(), Subst())

    def test_incomplete_on_misaligned_periods(self):
        # One side steps by one s-layer, the other by two: a unifier exists
        # but the canonical forms use distinct power symbols and clash.
        p = pterm(term("f(X)"), subst(X="s(X)"), Subst())
        q = pterm(term("f(X)"), subst(X="s(s(X))"), subst(X="Y"))
        assert pattern_mgu([p], [q]) is None
        # ... while the instances do unify at every index:
        for n in range(4):
            assert mgu(p.at(n), q.at(n)) is not None

    def test_length_mismatch(self):
        t = lift(term("f(X,0)"))
        assert pattern_mgu([t], [t, t]) is None

    def test_result_evaluates_to_classical_mgu(self, rng):
        # Whenever the pattern unifier succeeds, its index-n value unifies
        # the index-n sequences and factors through the classical mgu both
        # ways (equal generality).
        body, seeds = self.body_and_seeds()
        cases = [(body, seeds)]
        for _ in range(150):
            p = random_simple_pattern(rng)
            q = random_simple_pattern(rng)
            cases.append(([p], [q]))
        successes = 0
        for left, right in cases:
            got = pattern_mgu(left, right)
            if got is None:
                continue
            successes += 1
            for n in range(4):
                ln = tuple(p.at(n) for p in left)
                rn = tuple(q.at(n) for q in right)
                theta_n = got.at(n)
                assert apply(ln, theta_n) == apply(rn, theta_n)
                classical = mgu(ln, rn)
                assert classical is not None
                vs = sorted(term_vars(ln + rn), key=lambda v: v.name)
                ours = tuple(apply(v, theta_n) for v in vs)
                thelr = tuple(apply(v, classical) for v in vs)
                assert match(thelr, ours) is not None
                assert match(ours, thelr) is not None
        assert successes >= 5


class TestFamilyEquivalences:
    def test_simple_patterns_expand_like_their_power_forms(self, rng):
        for _ in range(300):
            p = random_simple_pattern(rng)
            u = power_form(p)
            assert u is not None
            for n in range(6):
                assert p.at(n) == expand_at(u, n)

    def test_simple_substitutions_round_trip(self, rng):
        from conftest import random_simple_subst

        for _ in range(300):
            theta = random_simple_subst(rng)
            fam = pattern_form(theta)
            assert fam is not None
            for n in range(6):
                assert subst_at(theta, n) == fam.at(n)
