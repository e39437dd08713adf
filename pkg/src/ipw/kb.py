"""Line-oriented knowledge-base files.

::

    # comment
    atoms a b c d
    axiom d -> !b
    fact c
    default a : b / b
    prob a = 0.8
    prob d given c in [0.9, 1]
    partition { a : 0.8 ; !a : 0.2 }
    expert e1 { a : 0.8 ; b : 0.6 }

Sections may appear in any order; ``atoms`` lines are read first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .credal import CredalConstraint, CredalError, ExpertAssessment
from .defaults import DefaultRule, DefaultTheory, TheoryError
from .logic import (
    TRUE,
    Formula,
    FormulaSyntaxError,
    UnknownAtomError,
    Vocabulary,
    VocabularyError,
    WorldSet,
    conjoin,
    models,
    parse_formula,
)
from .policies import Partition, PartitionError


class KBError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str | None = None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            if source:
                where = f"{source}: {where}"
            where += ": "
        elif source:
            where = f"{source}: "
        super().__init__(where + message)


@dataclass
class KnowledgeBase:
    vocab: Vocabulary
    axioms: list[Formula] = field(default_factory=list)
    facts: list[Formula] = field(default_factory=list)
    partition: Partition | None = None
    constraints: list[CredalConstraint] = field(default_factory=list)
    defaults: list[DefaultRule] = field(default_factory=list)
    experts: list[ExpertAssessment] = field(default_factory=list)

    def worlds(self) -> WorldSet:
        """Worlds consistent with every axiom and fact."""
        return models(conjoin(self.axioms + self.facts), self.vocab)

    def axiom_worlds(self) -> WorldSet:
        return models(conjoin(self.axioms), self.vocab)

    def point_statements(self) -> list[tuple[Formula, float]]:
        """Unconditional point probabilities, including partition cells."""
        out = []
        for c in self.constraints:
            if not c.is_point or c.given != TRUE:
                raise KBError(f"point policy needs unconditional point values, got '{c}'")
            out.append((c.target, c.lo))
        if self.partition is not None:
            out.extend(self.partition.cells)
        return out

    def theory(self) -> DefaultTheory:
        return DefaultTheory(self.vocab, self.facts, self.axioms, self.defaults)


_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_PROB = re.compile(
    rf"^(?P<target>.+?)(?:\s+given\s+(?P<given>.+?))?\s*"
    rf"(?:=\s*(?P<point>{_NUM})|\s+in\s*\[\s*(?P<lo>{_NUM})\s*,\s*(?P<hi>{_NUM})\s*\])\s*$"
)
_BLOCK = re.compile(r"^\{(?P<body>.*)\}\s*$")
_EXPERT = re.compile(r"^(?P<id>[a-zA-Z_][a-zA-Z0-9_]*)\s*(?P<rest>\{.*)$")
_HEAD = re.compile(r"\s*(\S+)\s*(.*?)\s*$")
_KEYWORDS = ("atoms", "axiom", "fact", "default", "prob", "partition", "expert")


class _LineParser:
    def __init__(self, vocab: Vocabulary, lineno: int, source: str | None):
        self.vocab = vocab
        self.lineno = lineno
        self.source = source

    def error(self, message: str, column: int | None = None) -> KBError:
        return KBError(message, self.lineno, column, self.source)

    def formula(self, text: str, col: int) -> Formula:
        """Parse ``text`` that starts at 1-based column ``col``."""
        lead = len(text) - len(text.lstrip())
        stripped = text.strip()
        try:
            return parse_formula(stripped, self.vocab)
        except FormulaSyntaxError as e:
            raise self.error(str(e).rsplit(" at offset", 1)[0], col + lead + e.position) from e
        except UnknownAtomError as e:
            pos = col + lead + (e.position or 0)
            raise self.error(f"unknown atom {e.atom!r}", pos) from e

    def number(self, text: str, col: int) -> float:
        try:
            value = float(text)
        except ValueError:
            raise self.error(f"expected a number, got {text!r}", col) from None
        if not 0.0 <= value <= 1.0:
            raise self.error(f"probability {value:g} is outside [0, 1]", col)
        return value

    def pairs(self, text: str, col: int) -> list[tuple[Formula, float]]:
        m = _BLOCK.match(text)
        if not m:
            raise self.error("expected '{ <formula> : NUM ; ... }'", col)
        body_col = col + m.start("body")
        out = []
        offset = 0
        for item in m.group("body").split(";"):
            item_col = body_col + offset
            offset += len(item) + 1
            if not item.strip():
                raise self.error("empty entry", item_col)
            if ":" not in item:
                raise self.error("expected '<formula> : NUM'", item_col)
            f_text, num = item.rsplit(":", 1)
            num_col = item_col + len(f_text) + 1 + (len(num) - len(num.lstrip()))
            out.append((self.formula(f_text, item_col), self.number(num.strip(), num_col)))
        return out


def parse_kb(text: str, source: str | None = None) -> KnowledgeBase:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _HEAD.match(line)
        lines.append((lineno, m.start(1) + 1, m.group(1), m.group(2), m.start(2) + 1))

    atom_names: list[str] = []
    for lineno, col, word, rest, rest_col in lines:
        if word not in _KEYWORDS:
            raise KBError(f"unknown declaration {word!r}", lineno, col, source)
        if word == "atoms":
            if not rest:
                raise KBError("'atoms' needs at least one name", lineno, col, source)
            atom_names.extend(rest.split())
    if not atom_names:
        raise KBError("missing atoms declaration", source=source)
    try:
        vocab = Vocabulary(atom_names)
    except VocabularyError as e:
        line = next(ln for ln, _, w, _, _ in lines if w == "atoms")
        raise KBError(str(e), line, source=source) from e

    kb = KnowledgeBase(vocab)
    partition_line = None
    for lineno, col, word, rest, rest_col in lines:
        p = _LineParser(vocab, lineno, source)
        if word == "atoms":
            continue
        if not rest:
            raise p.error(f"'{word}' needs an argument", col)
        try:
            if word == "axiom":
                kb.axioms.append(p.formula(rest, rest_col))
            elif word == "fact":
                kb.facts.append(p.formula(rest, rest_col))
            elif word == "default":
                kb.defaults.append(_parse_default(p, rest, rest_col))
            elif word == "prob":
                kb.constraints.append(_parse_prob(p, rest, rest_col))
            elif word == "partition":
                if partition_line is not None:
                    raise p.error(f"duplicate partition (first declared on line {partition_line})", col)
                partition_line = lineno
                kb.partition = Partition(p.pairs(rest, rest_col))
            elif word == "expert":
                m = _EXPERT.match(rest)
                if not m:
                    raise p.error("expected 'expert IDENT { ... }'", rest_col)
                ident = m.group("id")
                if any(e.expert == ident for e in kb.experts):
                    raise p.error(f"duplicate expert {ident!r}", rest_col)
                pairs = p.pairs(m.group("rest"), rest_col + m.start("rest"))
                kb.experts.append(ExpertAssessment(ident, tuple(pairs)))
        except (PartitionError, CredalError, TheoryError) as e:
            raise p.error(str(e), col) from e
    return kb


def _parse_default(p: _LineParser, rest: str, col: int) -> DefaultRule:
    if rest.count(":") != 1 or rest.count("/") != 1 or rest.index(":") > rest.index("/"):
        raise p.error("expected 'default <formula> : <formula> / <formula>'", col)
    pre, tail = rest.split(":")
    just, cons = tail.split("/")
    just_col = col + len(pre) + 1
    cons_col = just_col + len(just) + 1
    return DefaultRule(
        p.formula(pre, col), p.formula(just, just_col), p.formula(cons, cons_col)
    )


def _parse_prob(p: _LineParser, rest: str, col: int) -> CredalConstraint:
    m = _PROB.match(rest)
    if not m:
        raise p.error("expected 'prob <formula> [given <formula>] (= NUM | in [NUM, NUM])'", col)
    target = p.formula(m.group("target"), col + m.start("target"))
    given = TRUE
    if m.group("given"):
        given = p.formula(m.group("given"), col + m.start("given"))
    if m.group("point") is not None:
        v = p.number(m.group("point"), col + m.start("point"))
        return CredalConstraint(target, v, v, given)
    lo = p.number(m.group("lo"), col + m.start("lo"))
    hi = p.number(m.group("hi"), col + m.start("hi"))
    if lo > hi:
        raise p.error(f"interval [{lo:g}, {hi:g}] is reversed", col + m.start("lo"))
    return CredalConstraint(target, lo, hi, given)


def load_kb(path) -> KnowledgeBase:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_kb(text, source=str(path))
