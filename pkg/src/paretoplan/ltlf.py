"""Finite-trace temporal logic: parsing, trace semantics, and DFA translation.

Formulas are built from atoms, boolean connectives and the temporal
operators X (next), U (until), F (eventually) and G (globally), all
interpreted over finite, non-empty traces.  ``to_dfa`` translates a formula
into a minimal deterministic finite automaton over the powerset alphabet of
the declared propositions; ``holds`` gives the direct recursive semantics
and serves as the independent oracle for the translation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "LtlfError",
    "LtlfSyntaxError",
    "StateBudgetError",
    "LtlfFormula",
    "Dfa",
    "parse",
    "holds",
    "to_dfa",
    "first_satisfaction_language",
    "symbol_mask",
]

UNARY_KINDS = ("not", "next", "eventually", "globally")
BINARY_KINDS = ("and", "or", "until")
NULLARY_KINDS = ("true", "atom")


class LtlfError(ValueError):
    """Base error for formula handling."""


class LtlfSyntaxError(LtlfError):
    """Parse failure; carries the 0-based position in the input text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class StateBudgetError(LtlfError):
    """DFA translation exceeded the configured state cap."""


@dataclass(frozen=True)
class LtlfFormula:
    """Syntax tree node. ``children`` holds 0-2 subformulas depending on kind."""

    kind: str
    children: tuple["LtlfFormula", ...] = ()
    atom: str | None = None

    def __post_init__(self):
        arity = {"true": 0, "atom": 0, "not": 1, "next": 1, "eventually": 1,
                 "globally": 1, "and": 2, "or": 2, "until": 2}
        if self.kind not in arity:
            raise LtlfError(f"unknown formula kind {self.kind!r}")
        if len(self.children) != arity[self.kind]:
            raise LtlfError(f"kind {self.kind!r} takes {arity[self.kind]} children")
        if (self.atom is not None) != (self.kind == "atom"):
            raise LtlfError("atom name is set exactly for atom nodes")

    def atoms(self) -> set[str]:
        if self.kind == "atom":
            return {self.atom}
        out: set[str] = set()
        for c in self.children:
            out |= c.atoms()
        return out

    def __str__(self) -> str:
        return print_formula(self)


def _true() -> LtlfFormula:
    return LtlfFormula("true")


def _atom(name: str) -> LtlfFormula:
    return LtlfFormula("atom", atom=name)


def _un(kind: str, c: LtlfFormula) -> LtlfFormula:
    return LtlfFormula(kind, (c,))


def _bin(kind: str, l: LtlfFormula, r: LtlfFormula) -> LtlfFormula:
    return LtlfFormula(kind, (l, r))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_OPERATOR_WORDS = {"X": "next", "F": "eventually", "G": "globally", "U": "until"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()!&|":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("->", "->", i))
            i += 2
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "true":
                tokens.append(("true", word, i))
            elif word in _OPERATOR_WORDS:
                tokens.append((word, word, i))
            else:
                tokens.append(("ident", word, i))
            i = j
            continue
        raise LtlfSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, alphabet: frozenset[str]):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.alphabet = alphabet

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind: str):
        tok = self.tokens[self.pos]
        if tok[0] != kind:
            raise LtlfSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> LtlfFormula:
        f = self.implies()
        tok = self.peek()
        if tok[0] != "end":
            raise LtlfSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def implies(self) -> LtlfFormula:
        left = self.disjunct()
        if self.peek()[0] == "->":
            self.take("->")
            right = self.implies()
            # a -> b is sugar for !a | b
            return _bin("or", _un("not", left), right)
        return left

    def disjunct(self) -> LtlfFormula:
        f = self.conjunct()
        while self.peek()[0] == "|":
            self.take("|")
            f = _bin("or", f, self.conjunct())
        return f

    def conjunct(self) -> LtlfFormula:
        f = self.until()
        while self.peek()[0] == "&":
            self.take("&")
            f = _bin("and", f, self.until())
        return f

    def until(self) -> LtlfFormula:
        left = self.unary()
        if self.peek()[0] == "U":
            self.take("U")
            right = self.until()
            return _bin("until", left, right)
        return left

    def unary(self) -> LtlfFormula:
        kind, _, _ = self.peek()
        if kind == "!":
            self.take("!")
            return _un("not", self.unary())
        if kind in ("X", "F", "G"):
            self.take(kind)
            return _un(_OPERATOR_WORDS[kind], self.unary())
        return self.primary()

    def primary(self) -> LtlfFormula:
        kind, value, position = self.peek()
        if kind == "true":
            self.take("true")
            return _true()
        if kind == "ident":
            self.take("ident")
            if value not in self.alphabet:
                raise LtlfSyntaxError(f"unknown atom {value!r}", position)
            return _atom(value)
        if kind == "(":
            self.take("(")
            f = self.implies()
            self.take(")")
            return f
        raise LtlfSyntaxError(f"expected formula, found {value!r}", position)


def parse(text: str, alphabet: Iterable[str]) -> LtlfFormula:
    """Parse ``text`` into a formula whose atoms all lie in ``alphabet``."""
    return _Parser(text, frozenset(alphabet)).parse()


def print_formula(f: LtlfFormula) -> str:
    """Canonical printer; ``parse(print_formula(f), ap)`` reproduces ``f``."""
    if f.kind == "true":
        return "true"
    if f.kind == "atom":
        return f.atom
    if f.kind == "not":
        return "!" + print_formula(f.children[0])
    if f.kind in ("next", "eventually", "globally"):
        op = {"next": "X", "eventually": "F", "globally": "G"}[f.kind]
        return f"{op} {print_formula(f.children[0])}"
    op = {"and": "&", "or": "|", "until": "U"}[f.kind]
    return f"({print_formula(f.children[0])} {op} {print_formula(f.children[1])})"


# ---------------------------------------------------------------------------
# Trace semantics
# ---------------------------------------------------------------------------

def holds(formula: LtlfFormula, trace: Sequence[Iterable[str]]) -> bool:
    """Evaluate ``formula`` on a finite trace of symbols (sets of atoms).

    This is the direct recursive semantics and the ground truth that the
    automaton translation is tested against.
    """
    if len(trace) == 0:
        raise LtlfError("trace must be non-empty")
    symbols = [frozenset(sym) for sym in trace]
    n = len(symbols)
    memo: dict[tuple[int, int], bool] = {}

    def sat(f: LtlfFormula, i: int) -> bool:
        key = (id(f), i)
        if key in memo:
            return memo[key]
        k = f.kind
        if k == "true":
            v = True
        elif k == "atom":
            v = f.atom in symbols[i]
        elif k == "not":
            v = not sat(f.children[0], i)
        elif k == "and":
            v = sat(f.children[0], i) and sat(f.children[1], i)
        elif k == "or":
            v = sat(f.children[0], i) or sat(f.children[1], i)
        elif k == "next":
            v = i + 1 < n and sat(f.children[0], i + 1)
        elif k == "eventually":
            v = any(sat(f.children[0], j) for j in range(i, n))
        elif k == "globally":
            v = all(sat(f.children[0], j) for j in range(i, n))
        else:  # until
            l, r = f.children
            v = False
            for j in range(i, n):
                if sat(r, j):
                    v = True
                    break
                if not sat(l, j):
                    break
        memo[key] = v
        return v

    return sat(formula, 0)


def symbol_mask(symbol: Iterable[str], ap: Sequence[str]) -> int:
    """Encode a set of atoms as a bitmask over the ordered proposition list."""
    index = {name: i for i, name in enumerate(ap)}
    mask = 0
    for name in symbol:
        if name not in index:
            raise LtlfError(f"symbol atom {name!r} not in alphabet {list(ap)}")
        mask |= 1 << index[name]
    return mask


# ---------------------------------------------------------------------------
# DFA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dfa:
    """Deterministic automaton over the powerset alphabet of ``ap``.

    ``delta[state][mask]`` is total: one successor for every state and every
    bitmask-encoded symbol.
    """

    ap: tuple[str, ...]
    n_states: int
    init: int
    delta: tuple[tuple[int, ...], ...]
    accepting: frozenset[int]

    @property
    def n_symbols(self) -> int:
        return 1 << len(self.ap)

    def step(self, state: int, mask: int) -> int:
        return self.delta[state][mask]

    def run(self, trace: Sequence[Iterable[str]]) -> list[int]:
        """States visited after each symbol (length == len(trace))."""
        state = self.init
        out = []
        for symbol in trace:
            state = self.delta[state][symbol_mask(symbol, self.ap)]
            out.append(state)
        return out

    def accepts(self, trace: Sequence[Iterable[str]]) -> bool:
        if len(trace) == 0:
            return self.init in self.accepting
        return self.run(trace)[-1] in self.accepting

    def to_json(self) -> str:
        doc = {
            "states": self.n_states,
            "init": self.init,
            "ap": list(self.ap),
            "delta": [[s, m, self.delta[s][m]]
                      for s in range(self.n_states)
                      for m in range(self.n_symbols)],
            "accepting": sorted(self.accepting),
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Dfa":
        doc = json.loads(text)
        n = int(doc["states"])
        ap = tuple(doc["ap"])
        n_symbols = 1 << len(ap)
        table = [[-1] * n_symbols for _ in range(n)]
        for s, m, t in doc["delta"]:
            table[s][m] = t
        for s in range(n):
            for m in range(n_symbols):
                if table[s][m] < 0 or table[s][m] >= n:
                    raise LtlfError(f"transition table not total at state {s}, symbol {m}")
        return Dfa(ap=ap, n_states=n, init=int(doc["init"]),
                   delta=tuple(tuple(row) for row in table),
                   accepting=frozenset(int(a) for a in doc["accepting"]))


def first_satisfaction_language(dfa: Dfa, trace: Sequence[Iterable[str]]) -> bool:
    """True iff the trace is accepted and no strict non-empty prefix is."""
    if len(trace) == 0:
        raise LtlfError("trace must be non-empty")
    states = dfa.run(trace)
    if states[-1] not in dfa.accepting:
        return False
    return all(s not in dfa.accepting for s in states[:-1])


# ---------------------------------------------------------------------------
# Translation: progression over a negation-normal internal form.
#
# Internal residual formulas are hashable nested tuples:
#   ("true",) ("false",) ("end",)            end == "no symbols remain"
#   ("lit", name, polarity)                  polarity False for negated atom
#   ("and", (args...)) ("or", (args...))     flattened, deduplicated, sorted
#   ("next", f) ("wnext", f)                 strong / weak next
#   ("until", l, r) ("release", l, r)
# ---------------------------------------------------------------------------

_TRUE = ("true",)
_FALSE = ("false",)
_END = ("end",)


def _nnf(f: LtlfFormula, neg: bool = False):
    k = f.kind
    if k == "true":
        return _FALSE if neg else _TRUE
    if k == "atom":
        return ("lit", f.atom, not neg)
    if k == "not":
        return _nnf(f.children[0], not neg)
    if k == "and":
        op = "or" if neg else "and"
        return _mk_nary(op, [_nnf(c, neg) for c in f.children])
    if k == "or":
        op = "and" if neg else "or"
        return _mk_nary(op, [_nnf(c, neg) for c in f.children])
    if k == "next":
        # !X f == weak-next !f on finite traces
        return ("wnext" if neg else "next", _nnf(f.children[0], neg))
    if k == "eventually":
        if neg:
            return ("release", _FALSE, _nnf(f.children[0], True))
        return ("until", _TRUE, _nnf(f.children[0], False))
    if k == "globally":
        if neg:
            return ("until", _TRUE, _nnf(f.children[0], True))
        return ("release", _FALSE, _nnf(f.children[0], False))
    # until
    l, r = f.children
    if neg:
        return ("release", _nnf(l, True), _nnf(r, True))
    return ("until", _nnf(l, False), _nnf(r, False))


def _mk_nary(op: str, args) -> tuple:
    """Flatten, fold constants, deduplicate and sort an and/or node."""
    absorb = _FALSE if op == "and" else _TRUE
    unit = _TRUE if op == "and" else _FALSE
    flat = []
    for a in args:
        if a == absorb:
            return absorb
        if a == unit:
            continue
        if a[0] == op:
            flat.extend(a[1])
        else:
            flat.append(a)
    flat = sorted(set(flat))
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return (op, tuple(flat))


def _progress(f: tuple, symbol: frozenset[str]) -> tuple:
    """Residual obligation on the remaining trace after consuming ``symbol``."""
    k = f[0]
    if k in ("true", "false"):
        return f
    if k == "end":
        # a symbol arrived, so the trace had not ended
        return _FALSE
    if k == "lit":
        return _TRUE if (f[1] in symbol) == f[2] else _FALSE
    if k == "and":
        return _mk_nary("and", [_progress(a, symbol) for a in f[1]])
    if k == "or":
        return _mk_nary("or", [_progress(a, symbol) for a in f[1]])
    if k == "next":
        return f[1]
    if k == "wnext":
        return _mk_nary("or", [f[1], _END])
    if k == "until":
        _, l, r = f
        return _mk_nary("or", [_progress(r, symbol),
                               _mk_nary("and", [_progress(l, symbol), f])])
    if k == "release":
        _, l, r = f
        return _mk_nary("and", [_progress(r, symbol),
                                _mk_nary("or", [_progress(l, symbol), f, _END])])
    raise LtlfError(f"unknown internal node {k!r}")


def _empty_accepts(f: tuple) -> bool:
    """Whether the residual is discharged when no symbols remain."""
    k = f[0]
    if k in ("true", "end"):
        return True
    if k in ("false", "lit", "next", "until"):
        return False
    if k in ("wnext", "release"):
        return True
    if k == "and":
        return all(_empty_accepts(a) for a in f[1])
    if k == "or":
        return any(_empty_accepts(a) for a in f[1])
    raise LtlfError(f"unknown internal node {k!r}")


def to_dfa(formula: LtlfFormula, alphabet: Iterable[str],
           state_budget: int = 100_000) -> Dfa:
    """Translate a formula to a minimal DFA over ``2^alphabet``.

    Translation explores the residuals reachable under formula progression
    (worst-case doubly exponential, hence the loud ``state_budget`` cap)
    and then minimizes with Moore partition refinement.
    """
    ap = tuple(sorted(set(alphabet)))
    extra = formula.atoms() - set(ap)
    if extra:
        raise LtlfError(f"formula atoms {sorted(extra)} not in alphabet {list(ap)}")
    symbols = [frozenset(name for i, name in enumerate(ap) if mask >> i & 1)
               for mask in range(1 << len(ap))]

    root = _nnf(formula)
    index: dict[tuple, int] = {root: 0}
    states = [root]
    delta: list[list[int]] = []
    frontier = [root]
    while frontier:
        nxt = []
        for f in frontier:
            row = []
            for symbol in symbols:
                g = _progress(f, symbol)
                if g not in index:
                    index[g] = len(states)
                    states.append(g)
                    nxt.append(g)
                    if len(states) > state_budget:
                        raise StateBudgetError(
                            f"translation exceeded {state_budget} states")
                row.append(index[g])
            delta.append(row)
        frontier = nxt
    accepting = frozenset(i for i, f in enumerate(states) if _empty_accepts(f))
    return _minimize(Dfa(ap=ap, n_states=len(states), init=0,
                         delta=tuple(tuple(r) for r in delta),
                         accepting=accepting))


def _minimize(dfa: Dfa) -> Dfa:
    """Moore partition refinement; relabels states in BFS discovery order."""
    n = dfa.n_states
    block = [1 if s in dfa.accepting else 0 for s in range(n)]
    n_blocks = 2 if dfa.accepting and len(dfa.accepting) < n else 1
    if n_blocks == 1:
        block = [0] * n
    while True:
        signature = {}
        new_block = [0] * n
        for s in range(n):
            sig = (block[s], tuple(block[t] for t in dfa.delta[s]))
            if sig not in signature:
                signature[sig] = len(signature)
            new_block[s] = signature[sig]
        if len(signature) == n_blocks:
            break
        block = new_block
        n_blocks = len(signature)

    # block-level automaton, renumbered by BFS from the initial block
    order: dict[int, int] = {}
    queue = [block[dfa.init]]
    order[block[dfa.init]] = 0
    rep = {}
    for s in range(n):
        rep.setdefault(block[s], s)
    while queue:
        b = queue.pop(0)
        for m in range(dfa.n_symbols):
            t = block[dfa.delta[rep[b]][m]]
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    new_n = len(order)
    new_delta = [[0] * dfa.n_symbols for _ in range(new_n)]
    new_accepting = set()
    for b, new_id in order.items():
        s = rep[b]
        for m in range(dfa.n_symbols):
            new_delta[new_id][m] = order[block[dfa.delta[s][m]]]
        if s in dfa.accepting:
            new_accepting.add(new_id)
    return Dfa(ap=dfa.ap, n_states=new_n, init=0,
               delta=tuple(tuple(r) for r in new_delta),
               accepting=frozenset(new_accepting))
