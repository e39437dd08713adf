"""Propositional formulas and their possible-worlds semantics.

Worlds over a vocabulary of ``n`` atoms are encoded as integers in
``[0, 2**n)``: bit ``i`` of the index is the truth value of atom ``i``.
A :class:`WorldSet` is a dense boolean mask over all ``2**n`` worlds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Iterator, Union

import numpy as np

MAX_ATOMS = 20

_IDENT = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*")
_KEYWORDS = frozenset({"true", "false"})


class FormulaError(ValueError):
    """Base class for formula construction and parsing errors."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownAtomError(FormulaError):
    def __init__(self, atom: str, position: int | None = None):
        where = "" if position is None else f" at offset {position}"
        super().__init__(f"unknown atom {atom!r}{where}")
        self.atom = atom
        self.position = position


class VocabularyError(ValueError):
    pass


class Vocabulary:
    """An ordered, duplicate-free list of atom names (at most 20)."""

    __slots__ = ("atoms", "_index")

    def __init__(self, atoms: Iterable[str]):
        atoms = tuple(atoms)
        if not atoms:
            raise VocabularyError("vocabulary must contain at least one atom")
        if len(atoms) > MAX_ATOMS:
            raise VocabularyError(
                f"vocabulary of {len(atoms)} atoms exceeds the cap of {MAX_ATOMS}"
            )
        for name in atoms:
            if not isinstance(name, str) or not _IDENT.fullmatch(name):
                raise VocabularyError(f"invalid atom name {name!r}")
            if name in _KEYWORDS:
                raise VocabularyError(f"{name!r} is reserved")
        if len(set(atoms)) != len(atoms):
            dupes = sorted({a for a in atoms if atoms.count(a) > 1})
            raise VocabularyError(f"duplicate atoms: {', '.join(dupes)}")
        self.atoms = atoms
        self._index = {a: i for i, a in enumerate(atoms)}

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[str]:
        return iter(self.atoms)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        return f"Vocabulary({list(self.atoms)!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownAtomError(name) from None

    @property
    def n_worlds(self) -> int:
        return 1 << len(self.atoms)

    def extend(self, names: Iterable[str]) -> "Vocabulary":
        return Vocabulary(self.atoms + tuple(names))

    def assignment(self, world: int) -> dict[str, bool]:
        """Truth assignment of world index ``world``."""
        if not 0 <= world < self.n_worlds:
            raise ValueError(f"world index {world} out of range")
        return {a: bool(world >> i & 1) for i, a in enumerate(self.atoms)}

    def world_index(self, assignment: dict[str, bool]) -> int:
        return sum(1 << self.index(a) for a, v in assignment.items() if v)


# ---------------------------------------------------------------------------
# Formula AST
# ---------------------------------------------------------------------------

# Binding strength, loosest first. Used by the renderer.
_PREC_IFF, _PREC_IMP, _PREC_OR, _PREC_AND, _PREC_NOT, _PREC_ATOM = range(6)


class Formula:
    __slots__ = ()

    def atoms(self) -> set[str]:
        out: set[str] = set()
        stack = [self]
        while stack:
            f = stack.pop()
            if isinstance(f, Atom):
                out.add(f.name)
            elif isinstance(f, Not):
                stack.append(f.arg)
            elif isinstance(f, _Binary):
                stack.extend((f.left, f.right))
        return out

    def __str__(self) -> str:
        return render(self)

    # Operator sugar for building formulas in code and tests.
    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __rshift__(self, other: "Formula") -> "Formula":
        return Implies(self, other)


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True, slots=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, slots=True)
class _Binary(Formula):
    left: Formula
    right: Formula


class And(_Binary):
    __slots__ = ()


class Or(_Binary):
    __slots__ = ()


class Implies(_Binary):
    __slots__ = ()


class Iff(_Binary):
    __slots__ = ()


TRUE = Const(True)
FALSE = Const(False)

_BINARY_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&"}
_BINARY_PREC = {Iff: _PREC_IFF, Implies: _PREC_IMP, Or: _PREC_OR, And: _PREC_AND}


def conjoin(formulas: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; ``true`` for an empty iterable."""
    formulas = list(formulas)
    if not formulas:
        return TRUE
    return reduce(And, formulas)


def _prec(f: Formula) -> int:
    if isinstance(f, _Binary):
        return _BINARY_PREC[type(f)]
    if isinstance(f, Not):
        return _PREC_NOT
    return _PREC_ATOM


def render(f: Formula) -> str:
    """Canonical text with minimal parentheses.

    ``&``, ``|`` and ``<->`` associate to the left, ``->`` to the right;
    the output re-parses to a structurally equal formula.
    """
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        inner = render(f.arg)
        return "!" + (f"({inner})" if _prec(f.arg) < _PREC_NOT else inner)
    if isinstance(f, _Binary):
        p = _BINARY_PREC[type(f)]
        right_assoc = isinstance(f, Implies)
        lp, rp = _prec(f.left), _prec(f.right)
        left = render(f.left)
        right = render(f.right)
        if lp < p or (right_assoc and lp == p):
            left = f"({left})"
        if rp < p or (not right_assoc and rp == p):
            right = f"({right})"
        return f"{left} {_BINARY_SYMBOL[type(f)]} {right}"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(<->|->|[!&|()])|([a-zA-Z_][a-zA-Z0-9_]*))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise FormulaSyntaxError(f"unexpected character {text[bad]!r}", bad)
        start = m.start(1) if m.group(1) else m.start(2)
        tokens.append((m.group(1) or m.group(2), start))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, vocab: Vocabulary | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.vocab = vocab

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def pos(self) -> int:
        return self.tokens[self.i][1]

    def take(self) -> str:
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek() != "":
            raise FormulaSyntaxError(f"unexpected token {self.peek()!r}", self.pos())
        return f

    def iff(self) -> Formula:
        f = self.imp()
        while self.peek() == "<->":
            self.take()
            f = Iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(f, self.imp())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok, pos = self.tokens[self.i]
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            f = self.iff()
            if self.peek() != ")":
                raise FormulaSyntaxError("expected ')'", self.pos())
            self.take()
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok and _IDENT.fullmatch(tok):
            if self.vocab is not None and tok not in self.vocab:
                raise UnknownAtomError(tok, pos)
            self.take()
            return Atom(tok)
        if tok == "":
            raise FormulaSyntaxError("unexpected end of input", pos)
        raise FormulaSyntaxError(f"unexpected token {tok!r}", pos)


def parse_formula(text: str, vocab: Vocabulary | None = None) -> Formula:
    """Parse ``text`` using precedence ``! > & > | > -> > <->``.

    >>> render(parse_formula("!a & b -> c"))
    '!a & b -> c'
    >>> parse_formula("a -> b")
    Implies(left=Atom(name='a'), right=Atom(name='b'))
    """
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula", 0)
    return _Parser(text, vocab).parse()


# ---------------------------------------------------------------------------
# Worlds
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _atom_columns(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    cols = ((idx[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
    cols.setflags(write=False)
    return cols


class WorldSet:
    """Immutable set of worlds over one vocabulary, stored as a dense mask."""

    __slots__ = ("vocab", "mask")

    def __init__(self, vocab: Vocabulary, mask):
        mask = np.array(mask, dtype=bool)
        if mask.shape != (vocab.n_worlds,):
            raise ValueError(
                f"mask has shape {mask.shape}, expected ({vocab.n_worlds},)"
            )
        mask.setflags(write=False)
        self.vocab = vocab
        self.mask = mask

    @classmethod
    def full(cls, vocab: Vocabulary) -> "WorldSet":
        return cls(vocab, np.ones(vocab.n_worlds, dtype=bool))

    @classmethod
    def empty(cls, vocab: Vocabulary) -> "WorldSet":
        return cls(vocab, np.zeros(vocab.n_worlds, dtype=bool))

    @classmethod
    def from_indices(cls, vocab: Vocabulary, indices: Iterable[int]) -> "WorldSet":
        mask = np.zeros(vocab.n_worlds, dtype=bool)
        mask[list(indices)] = True
        return cls(vocab, mask)

    def _check(self, other: "WorldSet") -> None:
        if not isinstance(other, WorldSet):
            raise TypeError(f"expected WorldSet, got {type(other).__name__}")
        if other.vocab != self.vocab:
            raise ValueError("world sets are over different vocabularies")

    def __len__(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __bool__(self) -> bool:
        return bool(self.mask.any())

    def __contains__(self, world: int) -> bool:
        return 0 <= world < self.mask.size and bool(self.mask[world])

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices().tolist())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __and__(self, other: "WorldSet") -> "WorldSet":
        self._check(other)
        return WorldSet(self.vocab, self.mask & other.mask)

    def __or__(self, other: "WorldSet") -> "WorldSet":
        self._check(other)
        return WorldSet(self.vocab, self.mask | other.mask)

    def __sub__(self, other: "WorldSet") -> "WorldSet":
        self._check(other)
        return WorldSet(self.vocab, self.mask & ~other.mask)

    def complement(self) -> "WorldSet":
        return WorldSet(self.vocab, ~self.mask)

    def issubset(self, other: "WorldSet") -> bool:
        self._check(other)
        return not bool((self.mask & ~other.mask).any())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WorldSet)
            and other.vocab == self.vocab
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self) -> int:
        return hash((self.vocab, self.mask.tobytes()))

    def __repr__(self) -> str:
        return f"WorldSet({len(self)} of {self.vocab.n_worlds} worlds)"

    def assignments(self) -> list[dict[str, bool]]:
        return [self.vocab.assignment(w) for w in self]


def truth_vector(f: Formula, vocab: Vocabulary) -> np.ndarray:
    """Truth value of ``f`` at every world, as a boolean array of length 2**n."""
    cols = _atom_columns(len(vocab))

    def ev(g: Formula) -> np.ndarray:
        if isinstance(g, Atom):
            return cols[vocab.index(g.name)]
        if isinstance(g, Const):
            return np.full(vocab.n_worlds, g.value, dtype=bool)
        if isinstance(g, Not):
            return ~ev(g.arg)
        if isinstance(g, And):
            return ev(g.left) & ev(g.right)
        if isinstance(g, Or):
            return ev(g.left) | ev(g.right)
        if isinstance(g, Implies):
            return ~ev(g.left) | ev(g.right)
        if isinstance(g, Iff):
            return ev(g.left) == ev(g.right)
        raise TypeError(f"not a formula: {g!r}")

    return np.array(ev(f), dtype=bool)


def models(f: Formula, vocab: Vocabulary) -> WorldSet:
    """All worlds over ``vocab`` satisfying ``f``."""
    return WorldSet(vocab, truth_vector(f, vocab))


def count_models(f: Formula, within: WorldSet) -> int:
    return int(np.count_nonzero(truth_vector(f, within.vocab) & within.mask))


def entails(within: WorldSet, f: Formula) -> bool:
    """True iff every world of ``within`` satisfies ``f`` (vacuous when empty)."""
    return not bool((within.mask & ~truth_vector(f, within.vocab)).any())


def consistent(within: WorldSet, f: Formula) -> bool:
    return bool((within.mask & truth_vector(f, within.vocab)).any())


FormulaLike = Union[Formula, str]


def as_formula(f: FormulaLike, vocab: Vocabulary | None = None) -> Formula:
    if isinstance(f, Formula):
        if vocab is not None:
            missing = sorted(f.atoms() - set(vocab.atoms))
            if missing:
                raise UnknownAtomError(missing[0])
        return f
    return parse_formula(f, vocab)
