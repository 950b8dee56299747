"""First-order terms, substitutions, unification and ground contexts.

The term language is small: variables and symbol applications.  Values are
immutable and hashable.  Derivations produce very deep terms (number towers
like ``s(s(...s(0)))``), so the hot operations -- equality, substitution
application, unification, variable collection -- are iterative and
short-circuit on ground subterms instead of recursing node by node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence


@dataclass(frozen=True)
class Symbol:
    """A function symbol; identity is the (name, arity) pair."""

    name: str
    arity: int


class Var:
    """A variable, identified by name."""

    __slots__ = ("name", "_hash")
    ground = False

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("var", name))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Var) and self.name == other.name

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return self.name


class App:
    """Application of a symbol to argument terms.

    The hash and the groundness flag are computed once at construction from
    the (already cached) values of the children, so both are O(arity) to
    build and O(1) to use, no matter how deep the term is.
    """

    __slots__ = ("symbol", "args", "ground", "_hash")

    def __init__(self, symbol, args: Sequence["Term"] = ()):
        args = tuple(args)
        if len(args) != symbol.arity:
            raise ValueError(
                f"symbol {symbol.name}/{symbol.arity} applied to {len(args)} arguments"
            )
        self.symbol = symbol
        self.args = args
        # Context holes (#1, #2, ...) are placeholders, not constants: a term
        # containing one must never take the ground fast paths.
        self.ground = not symbol.name.startswith("#") and all(a.ground for a in args)
        self._hash = hash((symbol, *[a._hash for a in args]))

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, App) or self._hash != other._hash:
            return False
        # Plugging a multi-hole context shares subterms, so terms are DAGs;
        # memoizing compared pairs keeps equality proportional to DAG size.
        seen: set[tuple[int, int]] = set()
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if type(a) is not type(b):
                return False
            if isinstance(a, Var):
                if a.name != b.name:
                    return False
                continue
            key = (id(a), id(b))
            if key in seen:
                continue
            seen.add(key)
            if a.symbol != b.symbol or a._hash != b._hash:
                return False
            stack.extend(zip(a.args, b.args))
        return True

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return render(self)


Term = Var | App
Query = tuple[Term, ...]

# Reserved marker for the empty right-hand side of a binary or pattern rule.
# The name is not lexable by the parser, so it can never clash with a program
# symbol and never receives an identity rule.
EPSILON_SYMBOL = Symbol("ε", 0)
EPSILON = App(EPSILON_SYMBOL, ())


def is_epsilon(t: Term) -> bool:
    return isinstance(t, App) and t.symbol == EPSILON_SYMBOL


def term_size(t: Term) -> int:
    n = 0
    stack = [t]
    while stack:
        u = stack.pop()
        n += 1
        if isinstance(u, App):
            stack.extend(u.args)
    return n


def term_vars(t: Term | Query) -> frozenset[Var]:
    """All variables of a term or term sequence (ground subtrees skipped)."""
    out: set[Var] = set()
    seen: set[int] = set()
    stack = list(t) if isinstance(t, tuple) else [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            out.add(u)
        elif not u.ground and id(u) not in seen:
            seen.add(id(u))
            stack.extend(u.args)
    return frozenset(out)


def occurs(v: Var, t: Term) -> bool:
    seen: set[int] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            if u == v:
                return True
        elif not u.ground and id(u) not in seen:
            seen.add(id(u))
            stack.extend(u.args)
    return False


class Subst:
    """A substitution: a finite map from variables to terms.

    Bindings ``x -> x`` are pruned at construction, so ``domain()`` is
    exactly the set of moved variables.
    """

    __slots__ = ("_m", "_hash")

    def __init__(self, mapping: Mapping[Var, Term] | Iterable[tuple[Var, Term]] = ()):
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        self._m: dict[Var, Term] = {v: t for v, t in items if t != v}
        self._hash: Optional[int] = None

    def lookup(self, v: Var) -> Term:
        return self._m.get(v, v)

    def domain(self) -> frozenset[Var]:
        return frozenset(self._m)

    def range_vars(self) -> frozenset[Var]:
        out: set[Var] = set()
        for t in self._m.values():
            out |= term_vars(t)
        return frozenset(out)

    def items(self) -> Iterator[tuple[Var, Term]]:
        return iter(self._m.items())

    def __bool__(self) -> bool:
        return bool(self._m)

    def __len__(self) -> int:
        return len(self._m)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Subst) and self._m == other._m

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._m.items()))
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{v.name} -> {render(t)}" for v, t in sorted(self._m.items(), key=lambda it: it[0].name)
        )
        return "{" + inner + "}"


EMPTY_SUBST = Subst()


def _subst_dict(t: Term, m: Mapping[Var, Term]) -> Term:
    """Apply a raw binding dict to a term, iteratively and with sharing."""
    if not m or (isinstance(t, App) and t.ground):
        return t
    done: dict[int, Term] = {}
    stack = [t]
    while stack:
        n = stack[-1]
        if id(n) in done:
            stack.pop()
            continue
        if isinstance(n, Var):
            done[id(n)] = m.get(n, n)
            stack.pop()
        elif n.ground:
            done[id(n)] = n
            stack.pop()
        else:
            pending = [a for a in n.args if id(a) not in done]
            if pending:
                stack.extend(pending)
            else:
                new_args = tuple(done[id(a)] for a in n.args)
                done[id(n)] = (
                    n if all(x is y for x, y in zip(new_args, n.args)) else App(n.symbol, new_args)
                )
                stack.pop()
    return done[id(t)]


def apply(t, s: Subst):
    """Apply a substitution homomorphically; accepts a term or a sequence."""
    if isinstance(t, tuple):
        return tuple(_subst_dict(u, s._m) for u in t)
    return _subst_dict(t, s._m)


def compose(first: Subst, second: Subst) -> Subst:
    """The substitution applying ``first`` and then ``second``."""
    out = {v: _subst_dict(t, second._m) for v, t in first.items()}
    for v, t in second.items():
        if v not in out:
            out[v] = t
    return Subst(out)


def commutes(a: Subst, b: Subst) -> bool:
    """True iff applying a then b equals applying b then a on every variable."""
    return compose(a, b) == compose(b, a)


def mgu(left, right) -> Optional[Subst]:
    """Most general unifier of two terms or two term sequences.

    Martelli-Montanari style solved-form construction with occurs check.
    Returns an idempotent substitution, or None when not unifiable (clash,
    occurs check, or sequence-length mismatch).
    """
    if isinstance(left, tuple) != isinstance(right, tuple):
        left, right = (
            left if isinstance(left, tuple) else (left,),
            right if isinstance(right, tuple) else (right,),
        )
    if isinstance(left, tuple):
        if len(left) != len(right):
            return None
        eqs = deque(zip(left, right))
    else:
        eqs = deque([(left, right)])

    sol: dict[Var, Term] = {}

    def bind(v: Var, t: Term) -> bool:
        if occurs(v, t):
            return False
        upd = {v: t}
        for w, u in sol.items():
            sol[w] = _subst_dict(u, upd)
        sol[v] = t
        return True

    while eqs:
        a, b = eqs.popleft()
        a = _subst_dict(a, sol)
        b = _subst_dict(b, sol)
        if a is b or a == b:
            continue
        if isinstance(a, Var):
            if not bind(a, b):
                return None
        elif isinstance(b, Var):
            if not bind(b, a):
                return None
        elif a.symbol == b.symbol:
            eqs.extend(zip(a.args, b.args))
        else:
            return None
    return Subst(sol)


def match(pattern, target) -> Optional[Subst]:
    """One-way matching: a substitution s with apply(pattern, s) == target."""
    if isinstance(pattern, tuple) != isinstance(target, tuple):
        return None
    pairs = deque(zip(pattern, target)) if isinstance(pattern, tuple) else deque([(pattern, target)])
    if isinstance(pattern, tuple) and len(pattern) != len(target):
        return None
    binds: dict[Var, Term] = {}
    seen: set[tuple[int, int]] = set()  # matching is per-pair idempotent
    while pairs:
        p, t = pairs.popleft()
        if isinstance(p, Var):
            if p in binds:
                if binds[p] != t:
                    return None
            else:
                binds[p] = t
        elif isinstance(t, Var):
            return None
        elif p.symbol == t.symbol:
            key = (id(p), id(t))
            if key not in seen:
                seen.add(key)
                pairs.extend(zip(p.args, t.args))
        else:
            return None
    return Subst(binds)


class VarSource:
    """Monotone fresh-variable generator, scoped to one proof session.

    Never hands out the same name twice, so consecutively renamed items are
    automatically disjoint from each other; collisions with caller-supplied
    names are dodged via the ``avoid`` set.
    """

    __slots__ = ("_n", "_prefix")

    def __init__(self, prefix: str = "_"):
        self._n = 0
        self._prefix = prefix

    def fresh(self, avoid: frozenset[Var] | set[Var] = frozenset()) -> Var:
        while True:
            v = Var(f"{self._prefix}{self._n}")
            self._n += 1
            if v not in avoid:
                return v


def fresh_renaming(
    vars_to_rename: Iterable[Var], avoid: frozenset[Var] | set[Var], source: VarSource
) -> Subst:
    """A bijective renaming of the given variables to fresh ones."""
    avoid = set(avoid)
    out = {}
    for v in sorted(vars_to_rename, key=lambda w: w.name):
        nv = source.fresh(avoid)
        avoid.add(nv)
        out[v] = nv
    return Subst(out)


# --- Contexts -------------------------------------------------------------
#
# A context is a term over the program signature plus reserved hole symbols
# #1, #2, ...; a 1-context uses only #1.  Ground 1-contexts (no variables)
# are the building blocks of context powers: c^0 = #1, c^(n+1) = c(c^n).

_HOLE_PREFIX = "#"
_hole_cache: dict[int, App] = {}


def hole(i: int = 1) -> App:
    if i not in _hole_cache:
        _hole_cache[i] = App(Symbol(f"{_HOLE_PREFIX}{i}", 0), ())
    return _hole_cache[i]


def is_hole(t: Term) -> bool:
    return isinstance(t, App) and not t.args and t.symbol.name.startswith(_HOLE_PREFIX)


def hole_index(t: App) -> int:
    return int(t.symbol.name[len(_HOLE_PREFIX):])


def context_holes(c: Term) -> set[int]:
    out = set()
    seen: set[int] = set()
    stack = [c]
    while stack:
        u = stack.pop()
        if is_hole(u):
            out.add(hole_index(u))
        elif isinstance(u, App) and not u.ground and id(u) not in seen:
            seen.add(id(u))
            stack.extend(u.args)
    return out


def plug(c: Term, fillers: Sequence[Term]) -> Term:
    """Replace every occurrence of hole #i by fillers[i-1]."""
    present = context_holes(c)
    if present and max(present) > len(fillers):
        raise ValueError(f"context has hole #{max(present)} but only {len(fillers)} fillers")
    if len(fillers) > max(present, default=0):
        raise ValueError(f"{len(fillers)} fillers for a context with holes {sorted(present)}")
    done: dict[int, Term] = {}
    stack = [c]
    while stack:
        n = stack[-1]
        if id(n) in done:
            stack.pop()
            continue
        if is_hole(n):
            done[id(n)] = fillers[hole_index(n) - 1]
            stack.pop()
        elif isinstance(n, Var) or n.ground:
            done[id(n)] = n
            stack.pop()
        else:
            pending = [a for a in n.args if id(a) not in done]
            if pending:
                stack.extend(pending)
            else:
                done[id(n)] = App(n.symbol, tuple(done[id(a)] for a in n.args))
                stack.pop()
    return done[id(c)]


def context_power(c: Term, n: int) -> Term:
    """n-fold self-embedding of a 1-context: c^0 = #1, c^(n+1) = c(c^n)."""
    acc: Term = hole(1)
    for _ in range(n):
        acc = plug(c, [acc])
    return acc


def match_context(c: Term, t: Term) -> Optional[Term]:
    """If t == c(u) for a single filler u at every hole of c, return u."""
    filler: Optional[Term] = None
    stack = [(c, t)]
    while stack:
        cn, tn = stack.pop()
        if is_hole(cn):
            if filler is None:
                filler = tn
            elif filler != tn:
                return None
        elif isinstance(cn, Var) or isinstance(tn, Var):
            return None
        elif cn.symbol == tn.symbol:
            stack.extend(zip(cn.args, tn.args))
        else:
            return None
    return filler


def strip_power(t: Term, c: Term) -> tuple[int, Term]:
    """Maximal k and rest with t = c^k(rest); rest is not of the form c(u)."""
    k = 0
    while (w := match_context(c, t)) is not None:
        k += 1
        t = w
    return k, t


def _first_hole_path(c: Term) -> Optional[list[int]]:
    # Depth-first, leftmost; iterative because contexts can be deep towers.
    stack: list[tuple[Term, list[int]]] = [(c, [])]
    while stack:
        u, path = stack.pop()
        if is_hole(u):
            return path
        if isinstance(u, App):
            for i in range(len(u.args) - 1, -1, -1):
                stack.append((u.args[i], path + [i]))
    return None


def _replace_subterm(t: Term, old: Term, new: Term) -> Term:
    done: dict[int, Term] = {}
    stack = [t]
    while stack:
        n = stack[-1]
        if id(n) in done:
            stack.pop()
            continue
        if n == old:
            done[id(n)] = new
            stack.pop()
        elif isinstance(n, Var):
            done[id(n)] = n
            stack.pop()
        else:
            pending = [a for a in n.args if id(a) not in done]
            if pending:
                stack.extend(pending)
            else:
                done[id(n)] = App(n.symbol, tuple(done[id(a)] for a in n.args))
                stack.pop()
    return done[id(t)]


def primitive_context(c: Term) -> tuple[Term, int]:
    """Factor a ground 1-context as d^k with d of minimal period.

    Minimal period means d itself is not e^j for any j > 1.  Candidates are
    cuts of increasing depth along the path to the first hole; the shallowest
    cut that tiles c exactly is the primitive root.
    """
    path = _first_hole_path(c)
    if path is None:
        raise ValueError("not a context: no hole")
    for depth in range(1, len(path) + 1):
        sub: Term = c
        for i in path[:depth]:
            sub = sub.args[i]
        cand = _replace_subterm(c, sub, hole(1))
        cur: Term = c
        k = 0
        while True:
            if cur == hole(1):
                break
            w = match_context(cand, cur)
            if w is None:
                k = -1
                break
            k += 1
            cur = w
        if k >= 1:
            return cand, k
    return c, 1


def decompose_power(
    t: Term, var: Optional[Var] = None
) -> Optional[tuple[Optional[Term], int, Term]]:
    """Split t as c^a(rest) with c a ground, minimal-period 1-context.

    With ``var`` given, rest must be exactly that variable (every occurrence
    of it sits at a hole position of c^a); this recognizes bindings of the
    form x -> c^a(x).  Without it, rest is the remainder after peeling the
    tower along the leftmost leaf path, maximally, so that rest is not of
    the form c(rest').

    Returns (None, 0, t) when t is the designated variable itself, and None
    when no ground decomposition exists (e.g. the would-be context contains
    another variable).
    """
    if var is not None:
        if t == var:
            return None, 0, t
        if var not in term_vars(t):
            return None
        skel = _subst_dict(t, {var: hole(1)})
        if term_vars(skel):
            return None
        c, a = primitive_context(skel)
        return c, a, var

    # Generic mode: candidate remainders are cuts along the leftmost path.
    path: list[int] = []
    u = t
    while isinstance(u, App) and u.args:
        path.append(0)
        u = u.args[0]
    sub = t
    for depth in range(1, len(path) + 1):
        sub = sub.args[0]
        skel = _replace_subterm(t, sub, hole(1))
        if term_vars(skel):
            continue
        c, a = primitive_context(skel)
        extra, rest = strip_power(sub, c)
        return c, a + extra, rest
    return None


def render(t: Term) -> str:
    """Plain functional rendering, iterative so deep towers cannot overflow."""
    out: list[str] = []
    stack: list[object] = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, str):
            out.append(n)
        elif isinstance(n, Var):
            out.append(n.name)
        elif not n.args:
            out.append(n.symbol.name)
        else:
            out.append(n.symbol.name + "(")
            stack.append(")")
            for i, a in enumerate(reversed(n.args)):
                stack.append(a)
                if i != len(n.args) - 1:
                    stack.append(",")
    return "".join(out)


def render_query(q: Query) -> str:
    return "<" + ", ".join(render(t) for t in q) + ">" if q else "<>"
