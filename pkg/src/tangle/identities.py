"""Symbolic algebra of tanglements (tau), c.m.i.'s (mu) and joint entropies (H).

Listener indices are positive integers; the speaker is the symbol ``E``
(stored internally as index 0). ``tau`` and ``mu`` atoms are always
conditioned on the speaker, optionally on extra listener indices as well:

    tau(1|2|(3,4))      HT(X1 | X2 | (X3,X4) | E)
    mu(1:3 ; 2)         H(X1 : X3 | X2, E)
    H(1,2,E)            joint entropy H(X1, X2, E)
    H(1,2 ; E)          conditional entropy, expands to H(1,2,E) - H(E)

Every expression expands to a signed sum of joint-entropy atoms; two
expressions are formally equal iff their expansions coincide.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import GrammarError, OverlappingBinding, UnboundIndex
from .numkit import DEFAULT_TOL
from .states import EntropyCache, LabeledState, as_collection, cmi, tanglement

SPEAKER = 0
MAX_LISTENERS = 8
KINDS = ("tau", "mu", "H")


def _members(xs: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(int(x) for x in xs)))


@dataclass(frozen=True)
class Atom:
    kind: str
    groups: tuple[tuple[int, ...], ...]
    given: tuple[int, ...] = ()

    @classmethod
    def make(cls, kind: str, groups, given=()) -> "Atom":
        if kind == "H":
            members = _members(m for g in groups for m in g) + ()
            return cls("H", (members,) if members else (), ())
        gs = tuple(sorted(_members(g) for g in groups))
        flat = [m for g in gs for m in g]
        if any(m == SPEAKER for m in flat):
            raise GrammarError("the speaker E cannot be a listener")
        if len(set(flat)) != len(flat):
            raise GrammarError(f"listener groups overlap: {gs}")
        giv = _members(g for g in given if g != SPEAKER)
        if set(giv) & set(flat):
            raise GrammarError("conditioning indices overlap the listeners")
        return cls(kind, gs, giv)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted({m for g in self.groups for m in g} | set(self.given)))

    def sort_key(self):
        if self.kind == "H":
            body = self.groups[0] if self.groups else ()
            idx = tuple(m for m in body if m != SPEAKER)
            return (2, len(idx) if idx else 99, idx, SPEAKER in body)
        return (KINDS.index(self.kind), len(self.groups), self.groups, self.given)

    def render(self) -> str:
        if self.kind == "H":
            body = self.groups[0] if self.groups else ()
            idx = [str(m) for m in body if m != SPEAKER]
            if SPEAKER in body:
                idx.append("E")
            return f"H({','.join(idx)})"
        sep = "|" if self.kind == "tau" else ":"
        parts = []
        for g in self.groups:
            parts.append(str(g[0]) if len(g) == 1 else "(" + ",".join(map(str, g)) + ")")
        tail = f" ; {','.join(map(str, self.given))}" if self.given else ""
        return f"{self.kind}({sep.join(parts)}{tail})"

    def to_json(self) -> dict:
        return {"kind": self.kind, "groups": [list(g) for g in self.groups], "given": list(self.given)}


class EntropyExpr:
    """Immutable signed multiset of atoms, kept in canonical form."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Atom, int] | Iterable[tuple[Atom, int]] = ()):
        acc: dict[Atom, int] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for atom, coef in items:
            if atom.kind == "H" and not atom.groups:
                continue  # H() = 0
            acc[atom] = acc.get(atom, 0) + int(coef)
        self._terms = tuple(sorted(((a, c) for a, c in acc.items() if c), key=lambda ac: ac[0].sort_key()))

    @property
    def terms(self) -> tuple[tuple[Atom, int], ...]:
        return self._terms

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, EntropyExpr) and self._terms == other._terms

    def __hash__(self):
        return hash(self._terms)

    def __add__(self, other: "EntropyExpr") -> "EntropyExpr":
        return EntropyExpr(list(self._terms) + list(other._terms))

    def __neg__(self) -> "EntropyExpr":
        return EntropyExpr((a, -c) for a, c in self._terms)

    def __sub__(self, other: "EntropyExpr") -> "EntropyExpr":
        return self + (-other)

    def __mul__(self, k: int) -> "EntropyExpr":
        return EntropyExpr((a, k * c) for a, c in self._terms)

    __rmul__ = __mul__

    def expand(self) -> "EntropyExpr":
        out: list[tuple[Atom, int]] = []
        for atom, coef in self._terms:
            out += [(a, coef * c) for a, c in _expand_atom(atom)]
        return EntropyExpr(out)

    def render(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for i, (atom, coef) in enumerate(self._terms):
            sign = "-" if coef < 0 else ("+" if i else "")
            mag = abs(coef)
            pieces.append(f"{sign}{'' if mag == 1 else f'{mag}*'}{atom.render()}")
        return "".join(pieces)

    def to_json(self) -> list[dict]:
        return [{"coef": c, **a.to_json()} for a, c in self._terms]

    def __repr__(self):
        return f"EntropyExpr({self.render()!r})"

    def indices(self) -> set[int]:
        return {m for a, _ in self._terms for m in a.indices}


def _single(atom: Atom) -> EntropyExpr:
    return EntropyExpr([(atom, 1)])


def tau(*groups, given=()) -> EntropyExpr:
    return _single(Atom.make("tau", [_as_group(g) for g in groups], given))


def mu(*groups, given=()) -> EntropyExpr:
    return _single(Atom.make("mu", [_as_group(g) for g in groups], given))


def H(*members) -> EntropyExpr:
    return _single(Atom.make("H", [members]))


def _as_group(g) -> tuple[int, ...]:
    return (int(g),) if isinstance(g, int) else tuple(int(x) for x in g)


def _joint(members) -> Atom:
    return Atom.make("H", [tuple(members)])


def _expand_atom(atom: Atom) -> list[tuple[Atom, int]]:
    if atom.kind == "H":
        return [(atom, 1)]
    cond = set(atom.given) | {SPEAKER}
    groups = atom.groups
    m = len(groups)
    if atom.kind == "tau":
        out = [(_joint(set(g) | cond), 1) for g in groups]
        out.append((_joint(set().union(*groups) | cond), -1))
        out.append((_joint(cond), -(m - 1)))
        return out
    out = []
    for size in range(1, m + 1):
        sign = 1 if size % 2 else -1
        for gamma in itertools.combinations(groups, size):
            out.append((_joint(set().union(*gamma) | cond), sign))
    out.append((_joint(cond), -1))
    return out


def _check_n(n: int, low: int = 2) -> None:
    if not low <= n <= MAX_LISTENERS:
        raise ValueError(f"n must be in [{low}, {MAX_LISTENERS}], got {n}")


# ----------------------------------------------------------------- identities


@dataclass(frozen=True)
class Identity:
    """A claimed equality ``lhs == rhs`` between entropy expressions."""

    name: str
    lhs: EntropyExpr
    rhs: EntropyExpr

    @property
    def difference(self) -> EntropyExpr:
        return self.lhs - self.rhs

    def residual_expr(self) -> EntropyExpr:
        return self.difference.expand()

    def holds_formally(self) -> bool:
        return not self.residual_expr()

    def render(self) -> str:
        return f"{self.lhs.render()} = {self.rhs.render()}"


def expand_cmi(n: int, with_speaker: bool = True) -> EntropyExpr:
    """mu(1:...:n) as 2^n signed joint entropies (2^n - 1 without the speaker)."""
    _check_n(n)
    if with_speaker:
        return mu(*range(1, n + 1)).expand()
    out = []
    for size in range(1, n + 1):
        sign = 1 if size % 2 else -1
        out += [(_joint(g), sign) for g in itertools.combinations(range(1, n + 1), size)]
    return EntropyExpr(out)


def _dual_sum(kind: str, n: int) -> EntropyExpr:
    out = []
    for size in range(2, n + 1):
        sign = 1 if size % 2 == 0 else -1
        for gamma in itertools.combinations(range(1, n + 1), size):
            out.append((Atom.make(kind, [(j,) for j in gamma]), sign))
    return EntropyExpr(out)


def tau_to_mu(n: int) -> Identity:
    """tau(1|...|n) = sum_{k=2}^n (-1)^k sum_{|G|=k} mu(:_{j in G} j)."""
    _check_n(n)
    return Identity(f"tau-mu duality, n={n}", tau(*range(1, n + 1)), _dual_sum("mu", n))


def mu_to_tau(n: int) -> Identity:
    """mu(1:...:n) = sum_{k=2}^n (-1)^k sum_{|G|=k} tau(|_{j in G} j)."""
    _check_n(n)
    return Identity(f"mu-tau duality, n={n}", mu(*range(1, n + 1)), _dual_sum("tau", n))


def _relabel(expr: EntropyExpr, groups: Sequence[tuple[int, ...]], given: tuple[int, ...]) -> EntropyExpr:
    """Map singleton index j of a dual sum onto listener group groups[j-1]."""
    out = []
    for atom, coef in expr:
        new_groups = [groups[g[0] - 1] for g in atom.groups]
        out.append((Atom.make(atom.kind, new_groups, given), coef))
    return EntropyExpr(out)


def dualize(expr: EntropyExpr) -> EntropyExpr:
    """Rewrite every tau atom in mu atoms and every mu atom in tau atoms."""
    out = EntropyExpr()
    for atom, coef in expr:
        if atom.kind == "H":
            out = out + EntropyExpr([(atom, coef)])
            continue
        m = len(atom.groups)
        if m < 2:
            # one-listener tau is zero; a one-listener mu is a conditional entropy
            out = out + (EntropyExpr([(atom, coef)]).expand() if atom.kind == "mu" else EntropyExpr())
            continue
        other = "mu" if atom.kind == "tau" else "tau"
        out = out + coef * _relabel(_dual_sum(other, m), atom.groups, atom.given)
    return out


def split_compound(partition: Sequence[Iterable[int]]) -> Identity:
    """tau(G1|...|Gm) = tau(|_{j in union} j) - sum_a tau(|_{j in G_a} j)."""
    groups = [tuple(sorted(int(j) for j in g)) for g in partition]
    if any(not g for g in groups):
        raise ValueError("index sets must be non-empty")
    flat = [j for g in groups for j in g]
    if len(set(flat)) != len(flat):
        raise ValueError("index sets must be disjoint")
    rhs = tau(*sorted(flat))
    for g in groups:
        if len(g) > 1:
            rhs = rhs - tau(*g)
    return Identity("split compound listeners", tau(*groups), rhs)


def merge_delta(n: int) -> Identity:
    """tau(1|...|n|n+1) - tau(1|...|n-1|(n,n+1)) = tau(n|n+1)."""
    _check_n(n)
    head = list(range(1, n))
    lhs = tau(*range(1, n + 2)) - tau(*head, (n, n + 1))
    return Identity(f"merge listeners, n={n}", lhs, tau(n, n + 1))


def prune_delta(n: int) -> Identity:
    """tau(1|...|n-1|(n,n+1)) - tau(1|...|n) = HT[(X1..X_{n-1}) : X_{n+1} | X_n, E]."""
    _check_n(n)
    head = list(range(1, n))
    lhs = tau(*head, (n, n + 1)) - tau(*range(1, n + 1))
    return Identity(f"prune listener, n={n}", lhs, tau(tuple(head), n + 1, given=(n,)))


def remove_delta(n: int) -> Identity:
    """tau(1|...|n|n+1) - tau(1|...|n) = HT[(X1..Xn) : X_{n+1} | E]."""
    _check_n(n)
    lhs = tau(*range(1, n + 2)) - tau(*range(1, n + 1))
    return Identity(f"remove listener, n={n}", lhs, tau(tuple(range(1, n + 1)), n + 1))


def chain_rule(n: int) -> Identity:
    """H[X1 : (X2..Xn) | E] = sum_{k=2}^n H[X1 : Xk | X_{k+1}..X_n, E]."""
    _check_n(n)
    rhs = EntropyExpr()
    for k in range(2, n + 1):
        rhs = rhs + mu(1, k, given=tuple(range(k + 1, n + 1)))
    return Identity(f"chain rule, n={n}", mu(1, tuple(range(2, n + 1))), rhs)


def tanglement_telescope(n: int) -> Identity:
    """tau(1|...|n) = tau(1|2) + tau((1,2)|3) + ... + tau((1..n-1)|n)."""
    _check_n(n)
    rhs = EntropyExpr()
    for k in range(2, n + 1):
        rhs = rhs + tau(tuple(range(1, k)), k)
    return Identity(f"two-listener telescope, n={n}", tau(*range(1, n + 1)), rhs)


def cmi_decomposition(n: int) -> Identity:
    """mu(1:...:n) against its alternating joint-entropy expansion."""
    return Identity(f"c.m.i. decomposition, n={n}", mu(*range(1, n + 1)), expand_cmi(n))


def property_identities(n: int) -> list[Identity]:
    """Every n-listener identity of the tau/mu algebra exercised by the checks."""
    out = [cmi_decomposition(n), tau_to_mu(n), mu_to_tau(n), merge_delta(n), prune_delta(n),
           remove_delta(n), chain_rule(n), tanglement_telescope(n)]
    if n >= 3:
        out.append(split_compound([[1], list(range(2, n + 1))]))
    if n >= 4:
        out.append(split_compound([[1, 2], list(range(3, n + 1))]))
    return out


# ----------------------------------------------------------------- evaluation


def _check_binding(binding: Mapping[int, frozenset[str]], speaker: frozenset[str]) -> None:
    seen: dict[str, str] = {}
    named = [(f"index {k}", v) for k, v in binding.items()] + [("speaker", speaker)]
    for name, coll in named:
        for node in coll:
            if node in seen:
                raise OverlappingBinding(f"node {node!r} bound to both {seen[node]} and {name}")
            seen[node] = name


def _bind(members: Iterable[int], bound: Mapping[int, frozenset[str]], spk: frozenset[str]) -> set[str]:
    nodes: set[str] = set()
    for m in members:
        if m == SPEAKER:
            nodes |= spk
        elif m in bound:
            nodes |= bound[m]
        else:
            raise UnboundIndex(f"index {m} has no node binding")
    return nodes


def _atom_value(atom: Atom, h: EntropyCache, bound, spk) -> float:
    if atom.kind == "H":
        return h(frozenset(_bind(atom.groups[0], bound, spk)))
    groups = [sorted(_bind(g, bound, spk)) for g in atom.groups]
    given = sorted(spk | _bind(atom.given, bound, spk))
    fn = tanglement if atom.kind == "tau" else cmi
    return fn(h.state, groups, speaker=given)


def evaluate(
    expr: EntropyExpr | Identity,
    s: LabeledState,
    binding: Mapping[int, Iterable[str] | str],
    speaker: Iterable[str] | str = (),
    tol: float = DEFAULT_TOL,
    cache: EntropyCache | None = None,
    expand: bool = True,
) -> float:
    """Numeric value of ``expr`` (or an identity's lhs - rhs) on a state.

    With ``expand`` the expression is reduced to joint entropies first, so
    formally equal terms cancel before any numerics. Without it every tau and
    mu atom is evaluated on its own through the state-level tanglement and
    c.m.i., and an identity's two sides are evaluated separately.
    """
    bound = {int(k): as_collection(v) for k, v in binding.items()}
    spk = as_collection(speaker)
    _check_binding(bound, spk)
    h = cache if cache is not None else EntropyCache(s, tol)
    if isinstance(expr, Identity):
        if expand:
            expr = expr.difference
        else:
            lhs = evaluate(expr.lhs, s, binding, speaker, tol, h, expand=False)
            return lhs - evaluate(expr.rhs, s, binding, speaker, tol, h, expand=False)
    if expand:
        expr = expr.expand()
    return float(sum(coef * _atom_value(atom, h, bound, spk) for atom, coef in expr))


# --------------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(tau|mu|H)\b|(\d+)|(E)\b|([()|:,;+\-*=]))")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise GrammarError(f"unexpected input at {pos}: {text[pos:pos + 10]!r}")
        out.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise GrammarError(f"expected {expected or 'a token'}, got {tok!r}")
        self.i += 1
        return tok

    def parse(self) -> EntropyExpr:
        lhs = self.expr()
        if self.peek() == "=":
            self.take("=")
            lhs = lhs - self.expr()
        if self.peek() is not None:
            raise GrammarError(f"trailing input starting at {self.peek()!r}")
        return lhs

    def expr(self) -> EntropyExpr:
        sign = 1
        if self.peek() in ("+", "-"):
            sign = -1 if self.take() == "-" else 1
        out = sign * self.term()
        while self.peek() in ("+", "-"):
            sign = -1 if self.take() == "-" else 1
            out = out + sign * self.term()
        return out

    def term(self) -> EntropyExpr:
        coef = 1
        if self.peek() is not None and self.peek().isdigit():
            coef = int(self.take())
            self.take("*")
        return coef * self.atom()

    def atom(self) -> EntropyExpr:
        kind = self.take()
        if kind not in KINDS:
            raise GrammarError(f"expected tau, mu or H, got {kind!r}")
        self.take("(")
        if kind == "H":
            members = self.members()
            cond = self.members() if self._maybe(";") else []
            self.take(")")
            return H(*members, *cond) - H(*cond)
        sep = "|" if kind == "tau" else ":"
        groups = [self.group()]
        while self.peek() == sep:
            self.take(sep)
            groups.append(self.group())
        given = self.members() if self._maybe(";") else []
        self.take(")")
        try:
            return _single(Atom.make(kind, groups, given))
        except GrammarError:
            raise
        except ValueError as exc:
            raise GrammarError(str(exc)) from None

    def _maybe(self, tok) -> bool:
        if self.peek() == tok:
            self.take(tok)
            return True
        return False

    def index(self) -> int:
        tok = self.take()
        if not tok.isdigit() or int(tok) < 1:
            raise GrammarError(f"expected a listener index, got {tok!r}")
        return int(tok)

    def group(self) -> tuple[int, ...]:
        if self._maybe("("):
            g = [self.index()]
            while self._maybe(","):
                g.append(self.index())
            self.take(")")
            return tuple(g)
        g = [self.index()]
        while self._maybe(","):
            g.append(self.index())
        return tuple(g)

    def members(self) -> list[int]:
        out = [self.member()]
        while self._maybe(","):
            out.append(self.member())
        return out

    def member(self) -> int:
        tok = self.peek()
        if tok == "E":
            self.take()
            return SPEAKER
        return self.index()


def parse(text: str) -> EntropyExpr:
    """Parse the text grammar; ``a = b`` parses as ``a - b``."""
    return _Parser(text).parse()
