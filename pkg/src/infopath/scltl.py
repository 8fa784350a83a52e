"""Syntactically co-safe LTL: parsing, finite-word semantics and DFA translation.

Formulas are immutable trees.  ``And``/``Or`` nodes are n-ary; the parser
produces them flattened, and :func:`normalize` additionally sorts and
deduplicates operands so that equal residual obligations compare equal.
That property is what keeps the progression automaton finite.

Letters are integers used as bitsets over the declared AP order: bit ``i``
is set when ``ap[i]`` holds.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Union


class FormulaError(ValueError):
    """Raised for malformed or non co-safe formulas."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NegAtom:
    name: str

    def __str__(self) -> str:
        return "!" + self.name


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self) -> str:
        return "(" + " & ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self) -> str:
        return "(" + " | ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Next:
    arg: "Formula"

    def __str__(self) -> str:
        return f"X {self.arg}"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"

    def __str__(self) -> str:
        return f"F {self.arg}"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} U {self.right})"


Formula = Union[Const, Atom, NegAtom, And, Or, Next, Eventually, Until]

TRUE = Const(True)
FALSE = Const(False)

KEYWORDS = frozenset({"U", "X", "F", "true", "false"})


def size(f: Formula) -> int:
    """Number of nodes in the tree."""
    if isinstance(f, (And, Or)):
        return 1 + sum(size(a) for a in f.args)
    if isinstance(f, (Next, Eventually)):
        return 1 + size(f.arg)
    if isinstance(f, Until):
        return 1 + size(f.left) + size(f.right)
    return 1


def atoms(f: Formula) -> set[str]:
    if isinstance(f, (Atom, NegAtom)):
        return {f.name}
    if isinstance(f, (And, Or)):
        return set().union(*(atoms(a) for a in f.args))
    if isinstance(f, (Next, Eventually)):
        return atoms(f.arg)
    if isinstance(f, Until):
        return atoms(f.left) | atoms(f.right)
    return set()


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[!&|()]))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaError(f"unexpected character {text[bad]!r}", bad)
        tok = m.group("ident") or m.group("op")
        tokens.append((tok, m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("<eof>", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, ap: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.ap = set(ap)

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def pos(self) -> int:
        return self.tokens[self.i][1]

    def take(self) -> str:
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        if self.peek() != tok:
            raise FormulaError(f"expected {tok!r}, found {self.peek()!r}", self.pos())
        self.take()

    def formula(self) -> Formula:
        args = [self.conj()]
        while self.peek() == "|":
            self.take()
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self) -> Formula:
        args = [self.until()]
        while self.peek() == "&":
            self.take()
            args.append(self.until())
        return args[0] if len(args) == 1 else And(tuple(args))

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.until())
        return left

    def atom(self, name: str, at: int) -> Atom:
        if name not in self.ap:
            raise FormulaError(f"undeclared atomic proposition {name!r}", at)
        return Atom(name)

    def unary(self) -> Formula:
        tok, at = self.peek(), self.pos()
        if tok == "!":
            self.take()
            nxt, nat = self.peek(), self.pos()
            # a declared AP may shadow U/X/F here: only an atom can follow '!'
            keyword = nxt in KEYWORDS and not (nxt in self.ap and nxt not in ("true", "false"))
            if keyword or nxt in "!&|()" or nxt == "<eof>":
                raise FormulaError("negation may only be applied to an atomic proposition", at)
            self.take()
            return NegAtom(self.atom(nxt, nat).name)
        if tok in ("X", "F"):
            self.take()
            arg = self.unary()
            return Next(arg) if tok == "X" else Eventually(arg)
        if tok == "(":
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok == "<eof>":
            raise FormulaError("unexpected end of formula", at)
        if tok == "U" and "U" in self.ap:
            # operand position, so this cannot be the infix operator
            self.take()
            return Atom("U")
        if tok in KEYWORDS or tok in "&|)":
            raise FormulaError(f"unexpected token {tok!r}", at)
        self.take()
        return self.atom(tok, at)


def parse_formula(text: str, ap: Sequence[str]) -> Formula:
    """Parse ``text`` into a formula over the atomic propositions ``ap``.

    Precedence, tightest first: ``!``, ``X``/``F``, ``U`` (right
    associative), ``&``, ``|``.  Raises :class:`FormulaError` with the
    offending character position.
    """
    p = _Parser(text, ap)
    f = p.formula()
    if p.peek() != "<eof>":
        raise FormulaError(f"unexpected token {p.peek()!r}", p.pos())
    return f


# ---------------------------------------------------------------------------
# finite-word semantics

def letter_of(props: Iterable[str], ap: Sequence[str]) -> int:
    """Encode a set of proposition names as a bitset letter."""
    index = {name: i for i, name in enumerate(ap)}
    bits = 0
    for name in props:
        if name not in index:
            raise KeyError(f"{name!r} is not in the AP set {list(ap)}")
        bits |= 1 << index[name]
    return bits


def props_of(letter: int, ap: Sequence[str]) -> frozenset[str]:
    return frozenset(name for i, name in enumerate(ap) if letter >> i & 1)


def _holds(f: Formula, word: Sequence[int], i: int, ap_index: dict[str, int]) -> bool:
    n = len(word)
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return bool(word[i] >> ap_index[f.name] & 1)
    if isinstance(f, NegAtom):
        return not word[i] >> ap_index[f.name] & 1
    if isinstance(f, And):
        return all(_holds(a, word, i, ap_index) for a in f.args)
    if isinstance(f, Or):
        return any(_holds(a, word, i, ap_index) for a in f.args)
    if isinstance(f, Next):
        return i + 1 < n and _holds(f.arg, word, i + 1, ap_index)
    if isinstance(f, Eventually):
        return any(_holds(f.arg, word, j, ap_index) for j in range(i, n))
    if isinstance(f, Until):
        for j in range(i, n):
            if _holds(f.right, word, j, ap_index):
                return True
            if not _holds(f.left, word, j, ap_index):
                return False
        return False
    raise TypeError(f"not a formula: {f!r}")


def word_satisfies(f: Formula, word: Sequence[int], ap: Sequence[str]) -> bool:
    """Evaluate ``f`` at position 0 of a finite word of bitset letters.

    Next is strong: ``X g`` is false at the last position.
    """
    if len(word) == 0:
        raise ValueError("cannot evaluate a formula on the empty word")
    return _holds(f, word, 0, {name: i for i, name in enumerate(ap)})


# ---------------------------------------------------------------------------
# normalization and progression

def _key(f: Formula) -> str:
    return str(f)


def _junction(cls, args: Iterable[Formula]) -> Formula:
    unit, zero = (TRUE, FALSE) if cls is And else (FALSE, TRUE)
    flat: dict[str, Formula] = {}
    for a in args:
        if a == zero:
            return zero
        if a == unit:
            continue
        for b in (a.args if isinstance(a, cls) else (a,)):
            flat[_key(b)] = b
    if not flat:
        return unit
    if len(flat) == 1:
        return next(iter(flat.values()))
    return cls(tuple(flat[k] for k in sorted(flat)))


_DNF_TRUE: frozenset = frozenset({frozenset()})
_DNF_FALSE: frozenset = frozenset()


def _literal(f: Formula) -> Formula:
    """Canonical form of a temporal operator node (may fold to a constant)."""
    if isinstance(f, Next):
        arg = normalize(f.arg)
        return FALSE if arg == FALSE else Next(arg)
    if isinstance(f, Eventually):
        arg = normalize(f.arg)
        # F true is kept: it means "at least one more letter", not true.
        return FALSE if arg == FALSE else Eventually(arg)
    left, right = normalize(f.left), normalize(f.right)
    if right == FALSE:
        return FALSE
    if left == FALSE:
        return right
    if left == TRUE:
        return Eventually(right)
    return Until(left, right)


def _dnf(f: Formula) -> frozenset:
    """Set of clauses; each clause is a frozenset of conjoined literals."""
    if isinstance(f, Const):
        return _DNF_TRUE if f.value else _DNF_FALSE
    if isinstance(f, (Atom, NegAtom)):
        return frozenset({frozenset({f})})
    if isinstance(f, Or):
        return frozenset().union(*(_dnf(a) for a in f.args))
    if isinstance(f, And):
        out = _DNF_TRUE
        for a in f.args:
            out = frozenset(c | d for c in out for d in _dnf(a))
        return out
    lit = _literal(f)
    if isinstance(lit, (Next, Eventually, Until)):
        return frozenset({frozenset({lit})})
    return _dnf(lit)


def _simplify(clauses: frozenset) -> list:
    live = [c for c in clauses
            if not any(isinstance(x, NegAtom) and Atom(x.name) in c for x in c)]
    # absorption: a clause implied by a smaller one adds nothing
    live.sort(key=len)
    kept: list = []
    for c in live:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


def normalize(f: Formula) -> Formula:
    """Canonical disjunctive normal form over literals and temporal nodes.

    Clauses containing ``a`` and ``!a`` are dropped and clauses subsumed by
    a smaller clause are removed; literals and clauses are sorted.  Every
    residual produced by progression is a set of clauses over the finitely
    many canonical subformulas, so translation always terminates.
    """
    kept = _simplify(_dnf(f))
    return _junction(Or, (_junction(And, c) for c in kept))


_NONEMPTY = Eventually(TRUE)


def _progress(f: Formula, letter: int, ap_index: dict[str, int]) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return TRUE if letter >> ap_index[f.name] & 1 else FALSE
    if isinstance(f, NegAtom):
        return FALSE if letter >> ap_index[f.name] & 1 else TRUE
    if isinstance(f, And):
        return _junction(And, (_progress(a, letter, ap_index) for a in f.args))
    if isinstance(f, Or):
        return _junction(Or, (_progress(a, letter, ap_index) for a in f.args))
    if isinstance(f, Next):
        # strong next: the residual must still demand a further letter
        return _NONEMPTY if f.arg == TRUE else f.arg
    if isinstance(f, Eventually):
        return _junction(Or, (_progress(f.arg, letter, ap_index), f))
    if isinstance(f, Until):
        return _junction(Or, (
            _progress(f.right, letter, ap_index),
            _junction(And, (_progress(f.left, letter, ap_index), f)),
        ))
    raise TypeError(f"not a formula: {f!r}")


def progress(f: Formula, letter: int, ap: Sequence[str]) -> Formula:
    """Residual obligation on the rest of the word after reading ``letter``.

    A word is accepted exactly when the residual after its last letter is
    ``true``.
    """
    return normalize(_progress(normalize(f), letter, {name: i for i, name in enumerate(ap)}))


# ---------------------------------------------------------------------------
# automaton

@dataclass(frozen=True)
class Fsa:
    """Complete DFA over the letters ``0 .. 2**len(ap) - 1``.

    ``delta[s][letter]`` is the successor of state ``s``.  ``labels`` holds
    the residual formula each state stands for.
    """

    ap: tuple[str, ...]
    labels: tuple[Formula, ...]
    initial: int
    accepting: frozenset[int]
    delta: tuple[tuple[int, ...], ...]

    @property
    def n_states(self) -> int:
        return len(self.labels)

    @property
    def n_letters(self) -> int:
        return 1 << len(self.ap)

    def step(self, state: int, letter: int) -> int:
        return self.delta[state][letter]

    def run(self, word: Sequence[int], state: int | None = None) -> int:
        s = self.initial if state is None else state
        for letter in word:
            s = self.delta[s][letter]
        return s

    def accepts(self, word: Sequence[int]) -> bool:
        return self.run(word) in self.accepting

    def to_json(self) -> dict:
        return {
            "ap": list(self.ap),
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "states": [str(f) for f in self.labels],
            "delta": [list(row) for row in self.delta],
        }

    def to_dot(self, symbolic: bool = True) -> str:
        lines = ["digraph fsa {", "  rankdir=LR;", '  __start [shape=point];']
        for s, label in enumerate(self.labels):
            shape = "doublecircle" if s in self.accepting else "circle"
            text = str(label).replace('"', '\\"')
            lines.append(f'  s{s} [shape={shape}, label="{s}: {text}"];')
        lines.append(f"  __start -> s{self.initial};")
        for s, row in enumerate(self.delta):
            by_target: dict[int, list[int]] = {}
            for letter, t in enumerate(row):
                by_target.setdefault(t, []).append(letter)
            for t, letters in by_target.items():
                if symbolic:
                    guard = _guard(letters, self.ap)
                else:
                    guard = ",".join(format(x, f"0{len(self.ap)}b") for x in letters)
                lines.append(f'  s{s} -> s{t} [label="{guard}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _guard(letters: list[int], ap: Sequence[str]) -> str:
    if len(letters) == 1 << len(ap):
        return "true"
    terms = []
    for letter in letters:
        lits = [name if letter >> i & 1 else "!" + name for i, name in enumerate(ap)]
        terms.append("&".join(lits) if lits else "true")
    return " | ".join(terms)


def translate(f: Formula, ap: Sequence[str], max_states: int = 10_000) -> Fsa:
    """Build the progression DFA of ``f``.

    States are the normalized residuals reachable from ``f``; every
    accepting residual is ``true``, so there is a single absorbing accepting
    state, and ``false`` is the rejecting sink.
    """
    ap = tuple(ap)
    missing = atoms(f) - set(ap)
    if missing:
        raise FormulaError(f"undeclared atomic propositions {sorted(missing)}")
    ap_index = {name: i for i, name in enumerate(ap)}
    start = normalize(f)
    labels = [start]
    index = {start: 0}
    delta: list[tuple[int, ...]] = []
    i = 0
    while i < len(labels):
        row = []
        for letter in range(1 << len(ap)):
            g = normalize(_progress(labels[i], letter, ap_index))
            if g not in index:
                if len(labels) >= max_states:
                    raise RuntimeError(f"automaton exceeds {max_states} states")
                index[g] = len(labels)
                labels.append(g)
            row.append(index[g])
        delta.append(tuple(row))
        i += 1
    accepting = frozenset(s for s, g in enumerate(labels) if g == TRUE)
    return Fsa(ap, tuple(labels), 0, accepting, tuple(delta))


def all_words(n_letters: int, max_len: int) -> Iterable[tuple[int, ...]]:
    for n in range(1, max_len + 1):
        yield from itertools.product(range(n_letters), repeat=n)


def dump_fsa(fsa: Fsa) -> str:
    return json.dumps(fsa.to_json(), indent=2, sort_keys=True)
