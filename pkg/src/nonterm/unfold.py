"""The pattern-unfolding engine: saturates a set of pattern rules.

One step unfolds a prefix of a program rule's body with already-derived
pattern rules: the first atoms are closed by rules whose right side is
empty, the last consumed atom contributes its right side, and the pattern
unifier of the selected left sides against the lifted body prefix yields
the new rule's substitution family.  Iterating from a seed set of correct
rules keeps every derived rule correct, so a detector can be run on each
insertion.  Saturation rarely terminates on interesting programs; budgets
(wall clock, rounds, rule count) bound every run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterator, Optional, TextIO

from .pattern import (
    EPSILON_PATTERN,
    PatternRule,
    PatternSubstitution,
    PatternTerm,
    lift,
    pattern_rule_key,
    pterm,
)
from .powers import pattern_mgu, power_form
from .program import Program
from .terms import (
    App,
    Subst,
    Term,
    Var,
    apply,
    commutes,
    compose,
    fresh_renaming,
    is_epsilon,
    VarSource,
)


class PatternRuleSet:
    """Pattern rules deduplicated modulo renaming of their power forms.

    Only simple rules (both sides have a power form) may be stored;
    insertion order is preserved so saturation rounds are reproducible.
    """

    def __init__(self, rules=()):
        self._rules: list[PatternRule] = []
        self._keys: set[tuple] = set()
        for r in rules:
            self.add(r)

    def add(self, rule: PatternRule) -> bool:
        if power_form(rule.lhs) is None or power_form(rule.rhs) is None:
            raise ValueError(f"refusing to store a non-simple pattern rule: {rule}")
        key = pattern_rule_key(rule)
        if key in self._keys:
            return False
        self._keys.add(key)
        self._rules.append(rule)
        return True

    def contains_variant(self, rule: PatternRule) -> bool:
        return pattern_rule_key(rule) in self._keys

    def __iter__(self) -> Iterator[PatternRule]:
        return iter(self._rules)

    def __len__(self) -> int:
        return len(self._rules)


@dataclass(frozen=True)
class UnfoldBudget:
    """Resource limits for one saturation run."""

    wall_clock: float = 10.0
    max_iterations: int = 10
    max_rules: int = 100_000


@dataclass
class UnfoldStats:
    generated: int = 0  # distinct unfolded rules, seed set excluded
    iterations: int = 0
    elapsed_ms: float = 0.0
    stop: str = "fixpoint"  # fixpoint | proved | timeout | iteration-cap | rule-cap


def identity_pattern_rules(program: Program) -> list[PatternRule]:
    """One constant-family identity rule per program symbol."""
    out = []
    for sym in program.symbols:
        t = App(sym, tuple(Var(f"X{i + 1}") for i in range(sym.arity)))
        out.append(PatternRule(lift(t), lift(t)))
    return out


def rename_pattern_rule(rule: PatternRule, ren: Subst) -> PatternRule:
    def rename_side(p: PatternTerm) -> PatternTerm:
        def rsub(s: Subst) -> Subst:
            return Subst({ren.lookup(v): apply(t, ren) for v, t in s.items()})

        return PatternTerm(
            apply(p.skeleton, ren),
            PatternSubstitution(rsub(p.subst.sigma), rsub(p.subst.mu)),
        )

    return PatternRule(rename_side(rule.lhs), rename_side(rule.rhs))


def _root(t: Term):
    return t.symbol if isinstance(t, App) else None


def _step_candidates(
    program: Program,
    pool: list[PatternRule],
    patid: list[PatternRule],
    source: VarSource,
) -> Iterator[tuple[PatternRule, tuple]]:
    """All rules derivable in one unfolding step from the given pool.

    Enumeration order is fixed: program rules in order, prefix length
    ascending, selections in pool insertion order (identities last), the
    last slot varying fastest.
    """
    eps_rules = [r for r in pool if r.rhs_is_epsilon()]
    all_rules = [*pool, *patid]
    noneps_rules = [r for r in all_rules if not r.rhs_is_epsilon()]

    def compatible(candidates: list[PatternRule], atom: Term) -> list[PatternRule]:
        want = _root(atom)
        if want is None:
            return candidates
        return [r for r in candidates if _root(r.lhs.skeleton) in (None, want)]

    for rule_idx, rule in enumerate(program.rules):
        m = len(rule.body)
        rule_vars = rule.vars()
        for i in range(1, m + 1):
            slots = [compatible(eps_rules, rule.body[j]) for j in range(i - 1)]
            slots.append(
                compatible(all_rules if i == m else noneps_rules, rule.body[i - 1])
            )
            for combo in product(*slots):
                avoid = set(rule_vars)
                picked: list[PatternRule] = []
                for pr in combo:
                    ren = fresh_renaming(pr.vars(), avoid, source)
                    rr = rename_pattern_rule(pr, ren)
                    picked.append(rr)
                    avoid |= rr.vars()
                theta = pattern_mgu(
                    [p.lhs for p in picked], [lift(b) for b in rule.body[:i]]
                )
                if theta is None:
                    continue
                last_rhs = picked[-1].rhs
                if not (
                    commutes(theta.sigma, last_rhs.subst.sigma)
                    and commutes(theta.sigma, last_rhs.subst.mu)
                ):
                    continue
                lhs = PatternTerm(rule.head, theta)
                if is_epsilon(last_rhs.skeleton):
                    rhs = EPSILON_PATTERN
                else:
                    rhs = pterm(
                        last_rhs.skeleton,
                        compose(last_rhs.subst.sigma, theta.sigma),
                        compose(last_rhs.subst.mu, theta.mu),
                    )
                candidate = PatternRule(lhs, rhs)
                # Compositions can break simplicity; such results are unusable
                # downstream (no power form), so they are dropped, not stored.
                if power_form(lhs) is None or power_form(rhs) is None:
                    continue
                yield candidate, (rule_idx, i, combo)


def step(
    program: Program, base: list[PatternRule], pool: PatternRuleSet
) -> PatternRuleSet:
    """One application of the unfolding operator: the seed set plus every
    rule derivable from the pool in a single step (simple rules only)."""
    out = PatternRuleSet()
    for rule in base:
        out.add(rule)
    source = VarSource()
    patid = identity_pattern_rules(program)
    for candidate, _ in _step_candidates(program, list(pool), patid, source):
        out.add(candidate)
    return out


def saturate(
    program: Program,
    base: list[PatternRule],
    budget: UnfoldBudget = UnfoldBudget(),
    on_rule: Optional[Callable[[PatternRule], bool]] = None,
    trace: Optional[TextIO] = None,
) -> tuple[PatternRuleSet, UnfoldStats]:
    """Iterate the unfolding step to a fixpoint or until the budget trips.

    `on_rule` runs on every newly stored rule (the seed set included) and
    may stop the run by returning True -- used by the prover to short-cut
    on the first rule that witnesses non-termination.  Stats report the
    number of generated rules and the stop reason; exhausting the budget is
    a normal outcome, not an error.
    """
    t0 = time.monotonic()
    deadline = t0 + budget.wall_clock
    stored = PatternRuleSet()
    stats = UnfoldStats()
    source = VarSource()
    patid = identity_pattern_rules(program)

    def finish(reason: str) -> tuple[PatternRuleSet, UnfoldStats]:
        stats.stop = reason
        stats.elapsed_ms = (time.monotonic() - t0) * 1000.0
        return stored, stats

    for rule in base:
        if stored.add(rule):
            if trace:
                trace.write(f"seed: {rule}\n")
            if on_rule and on_rule(rule):
                return finish("proved")

    for round_no in range(1, budget.max_iterations + 1):
        stats.iterations = round_no
        snapshot = list(stored)
        grew = False
        checked = 0
        for candidate, provenance in _step_candidates(program, snapshot, patid, source):
            checked += 1
            if checked % 64 == 0 and time.monotonic() > deadline:
                return finish("timeout")
            if stats.generated >= budget.max_rules:
                return finish("rule-cap")
            if not stored.add(candidate):
                continue
            stats.generated += 1
            grew = True
            if trace:
                rule_idx, i, combo = provenance
                trace.write(
                    f"round {round_no}: rule {rule_idx + 1}, prefix {i}, "
                    f"via {[str(c) for c in combo]}\n    {candidate}\n"
                )
            if on_rule and on_rule(candidate):
                return finish("proved")
            if time.monotonic() > deadline:
                return finish("timeout")
        if not grew:
            return finish("fixpoint")
    return finish("iteration-cap")
