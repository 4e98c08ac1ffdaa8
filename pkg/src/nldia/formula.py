"""Types of the modal Lambek calculus NL<> and their semantic spaces.

Concrete syntax::

    formula := atom | "<>" formula | "[]" formula | "(" formula ")"
             | formula "*" formula | formula "/" formula | formula "\\" formula

Unary operators bind tightest, then ``*``, then the two slashes.  Binary
operators group to the left; a chain mixing ``/`` and ``\\`` must be
parenthesised.  The unicode spellings ``◇``, ``□`` and ``⊗`` are accepted
as aliases.

>>> f = parse_formula(r"(n\\n)/(<>[]np\\s)")
>>> print(f)
(n\\n)/(<>[]np\\s)
>>> interpret_type(f, {"n": ("N", 4), "np": ("N", 4), "s": ("S", 3)}).labels
('N', 'N', 'N', 'S')
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import prod
from typing import Iterator, Mapping, Tuple, Union

__all__ = [
    "Atom", "Diamond", "Box", "Tensor", "Over", "Under", "Formula",
    "FormulaSyntaxError", "SpaceSignature",
    "parse_formula", "print_formula", "interpret_type", "atoms", "count_atoms",
]


class FormulaSyntaxError(ValueError):
    """Raised on malformed type text; ``pos`` is the 0-based offset."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos} in {text!r}")
        self.text = text
        self.pos = pos


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Diamond:
    body: "Formula"

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Box:
    body: "Formula"

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Tensor:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Over:
    """``num/den``: looks for ``den`` to its right."""
    num: "Formula"
    den: "Formula"

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Under:
    """``den\\num``: looks for ``den`` to its left."""
    den: "Formula"
    num: "Formula"

    def __str__(self):
        return print_formula(self)


Formula = Union[Atom, Diamond, Box, Tensor, Over, Under]


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<atom>[a-z][a-z0-9]*)|(?P<op><>|\[\]|[()*/\\◇□⊗]))")
_ALIASES = {"◇": "<>", "□": "[]", "⊗": "*"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(
                f"unknown token {text[start]!r}", text, start)
        if m.group("atom"):
            tokens.append(("atom", m.group("atom"), m.start("atom")))
        else:
            op = m.group("op")
            tokens.append(("op", _ALIASES.get(op, op), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return FormulaSyntaxError(message, self.text, tok[2])

    def parse(self) -> Formula:
        f = self.slashes()
        kind, value, _ = self.peek()
        if kind != "end":
            if value == ")":
                raise self.error("unbalanced parenthesis")
            raise self.error(f"unexpected {value!r}")
        return f

    def slashes(self) -> Formula:
        left = self.product()
        first_op = None
        while self.peek()[:2] in (("op", "/"), ("op", "\\")):
            tok = self.take()
            if first_op is not None and tok[1] != first_op:
                raise self.error("mixed '/' and '\\' need parentheses", tok)
            first_op = tok[1]
            right = self.product()
            left = Over(left, right) if tok[1] == "/" else Under(left, right)
        return left

    def product(self) -> Formula:
        left = self.unary()
        while self.peek()[:2] == ("op", "*"):
            self.take()
            left = Tensor(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, value, _ = tok = self.take()
        if kind == "atom":
            return Atom(value)
        if value == "<>":
            return Diamond(self.unary())
        if value == "[]":
            return Box(self.unary())
        if value == "(":
            inner = self.slashes()
            if self.peek()[:2] != ("op", ")"):
                raise self.error("unbalanced parenthesis", tok)
            self.take()
            return inner
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected {value!r}", tok)


def parse_formula(text: str) -> Formula:
    """Parse the concrete type syntax into a :data:`Formula`.

    >>> parse_formula(r"np\\(np\\s)")
    Under(den=Atom(name='np'), num=Under(den=Atom(name='np'), num=Atom(name='s')))
    """
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------

def _prec(f: Formula) -> int:
    if isinstance(f, (Over, Under)):
        return 1
    if isinstance(f, Tensor):
        return 2
    return 3


def print_formula(f: Formula, unicode: bool = False) -> str:
    """Render ``f`` with the fewest parentheses that parse back to ``f``."""
    dia, box, tensor = ("◇", "□", "⊗") if unicode else ("<>", "[]", "*")

    def wrap(g, needed):
        s = go(g)
        return f"({s})" if needed else s

    def go(g):
        if isinstance(g, Atom):
            return g.name
        if isinstance(g, Diamond):
            return dia + wrap(g.body, _prec(g.body) < 3)
        if isinstance(g, Box):
            return box + wrap(g.body, _prec(g.body) < 3)
        if isinstance(g, Tensor):
            return (wrap(g.left, _prec(g.left) < 2) + tensor
                    + wrap(g.right, _prec(g.right) <= 2))
        if isinstance(g, Over):
            return (wrap(g.num, isinstance(g.num, Under)) + "/"
                    + wrap(g.den, _prec(g.den) <= 1))
        if isinstance(g, Under):
            return (wrap(g.den, isinstance(g.den, Over)) + "\\"
                    + wrap(g.num, _prec(g.num) <= 1))
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


# --------------------------------------------------------------------------
# interpretation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceSignature:
    """Ordered tensor factors of a semantic space; empty means the scalars."""
    labels: Tuple[str, ...] = ()
    dims: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.labels) != len(self.dims):
            raise ValueError("labels and dims differ in length")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dimensions must be positive: {self.dims}")

    def __add__(self, other: "SpaceSignature") -> "SpaceSignature":
        return SpaceSignature(self.labels + other.labels, self.dims + other.dims)

    def __len__(self):
        return len(self.labels)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def __str__(self):
        if not self.labels:
            return "I"
        return "⊗".join(self.labels)


AtomMap = Mapping[str, Tuple[str, int]]


def atoms(f: Formula) -> Iterator[Atom]:
    """Atom occurrences of ``f`` left to right."""
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (Diamond, Box)):
        yield from atoms(f.body)
    elif isinstance(f, Tensor):
        yield from atoms(f.left)
        yield from atoms(f.right)
    elif isinstance(f, Over):
        yield from atoms(f.num)
        yield from atoms(f.den)
    elif isinstance(f, Under):
        yield from atoms(f.den)
        yield from atoms(f.num)
    else:
        raise TypeError(f"not a formula: {f!r}")


def count_atoms(f: Formula) -> int:
    return sum(1 for _ in atoms(f))


def interpret_type(f: Formula, atom_map: AtomMap) -> SpaceSignature:
    """Space signature of ``f``.

    The modalities are transparent and duals are identified with their
    spaces, so every binary connective concatenates its operands' factors
    in written order.
    """
    labels, dims = [], []
    for a in atoms(f):
        try:
            label, dim = atom_map[a.name]
        except KeyError:
            raise KeyError(f"unknown atom {a.name!r}") from None
        labels.append(label)
        dims.append(dim)
    return SpaceSignature(tuple(labels), tuple(dims))
