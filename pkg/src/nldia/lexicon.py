"""Lexicon files: spaces, atoms, and words with their types and tensors.

Format (UTF-8, ``#`` starts a comment)::

    space N 4
    space S 3
    atom np N
    atom n  N
    atom s  S
    word mannen  : n                    = seed 11
    word die     : (n\\n)/(<>[]np\\s)     = recipe relpron
    word poets   : np                   = values [0.1, 0.2, 0.3, 0.4]
    word sleeps  : np\\s                 = ones

Tensor sources:

``seed K``
    Uniform [0, 1) entries from a splitmix64 stream seeded with the 64-bit
    integer K, filled in row-major order.  Each draw takes the top 53 bits
    of the next output and scales by 2**-53.
``values [...]``
    Explicit entries, row-major.
``ones``
    All entries 1.
``recipe relpron [lambda=x]``
    The Frobenius relative pronoun: a diagonal cube over the three noun
    factors times the constant ``lambda`` (default 1) on the sentence factor.

A word may be declared more than once; the readings are kept in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .formula import Formula, FormulaSyntaxError, SpaceSignature, interpret_type, parse_formula
from .tensor import relpron_tensor

__all__ = [
    "LexiconError", "UnknownWord", "SplitMix64", "LexiconEntry", "Lexicon",
    "load_lexicon", "parse_lexicon", "resolve", "demo_path", "RECIPES",
]

MASK64 = (1 << 64) - 1


class LexiconError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownWord(LexiconError, KeyError):
    def __str__(self):
        return self.args[0]


class SplitMix64:
    """Steele, Lea and Flood's splitmix64 stream."""

    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self, n: int) -> np.ndarray:
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(n)])


@dataclass(frozen=True)
class Seeded:
    seed: int


@dataclass(frozen=True)
class Values:
    data: Tuple[float, ...]


@dataclass(frozen=True)
class Ones:
    pass


@dataclass(frozen=True)
class Recipe:
    name: str
    params: Tuple[Tuple[str, float], ...] = ()


Source = Union[Seeded, Values, Ones, Recipe]


def _relpron(sig: SpaceSignature, lam: float = 1.0) -> np.ndarray:
    if len(sig) != 4:
        raise ValueError(f"relpron needs four factors, type gives {sig}")
    labels = list(sig.labels)
    noun = max(set(labels), key=labels.count)
    if labels.count(noun) == 4:
        s_pos = 3
    elif labels.count(noun) == 3:
        s_pos = next(k for k, x in enumerate(labels) if x != noun)
    else:
        raise ValueError(f"relpron needs three noun factors, type gives {sig}")
    n_dim = sig.dims[labels.index(noun)]
    t = relpron_tensor(n_dim, sig.dims[s_pos], lam)
    return np.moveaxis(t, 3, s_pos).copy()


RECIPES = {"relpron": _relpron}


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    formula: Formula
    source: Source
    tensor: np.ndarray = field(compare=False, repr=False)


@dataclass
class Lexicon:
    spaces: Dict[str, int]
    atom_map: Dict[str, Tuple[str, int]]
    entries: Dict[str, List[LexiconEntry]]

    def __contains__(self, word):
        return word in self.entries

    def signature(self, f: Formula) -> SpaceSignature:
        return interpret_type(f, self.atom_map)


def _parse_source(text: str, line: int) -> Source:
    kind, _, rest = text.strip().partition(" ")
    rest = rest.strip()
    if kind == "seed":
        try:
            return Seeded(int(rest, 0))
        except ValueError:
            raise LexiconError(f"bad seed {rest!r}", line) from None
    if kind == "values":
        try:
            data = np.asarray(json.loads(rest), dtype=np.float64).ravel()
        except (ValueError, TypeError):
            raise LexiconError(f"bad values list {rest!r}", line) from None
        return Values(tuple(data.tolist()))
    if kind == "ones" and not rest:
        return Ones()
    if kind == "recipe":
        name, *params = rest.split()
        if name not in RECIPES:
            raise LexiconError(f"unknown recipe {name!r}", line)
        parsed = []
        for p in params:
            key, eq, value = p.partition("=")
            if not eq:
                raise LexiconError(f"bad recipe parameter {p!r}", line)
            try:
                parsed.append((key, float(value)))
            except ValueError:
                raise LexiconError(f"bad recipe parameter {p!r}", line) from None
        return Recipe(name, tuple(parsed))
    raise LexiconError(f"unknown tensor source {text.strip()!r}", line)


def _build(source: Source, sig: SpaceSignature, seed_offset: int,
           line: int) -> np.ndarray:
    shape = sig.dims
    size = sig.total_dim
    if isinstance(source, Seeded):
        rng = SplitMix64((source.seed + seed_offset) & MASK64)
        return rng.uniform(size).reshape(shape)
    if isinstance(source, Values):
        if len(source.data) != size:
            raise LexiconError(f"{len(source.data)} values given, type "
                               f"{sig} needs {size}", line)
        return np.array(source.data, dtype=np.float64).reshape(shape)
    if isinstance(source, Ones):
        return np.ones(shape)
    params = dict(source.params)
    if source.name == "relpron" and set(params) - {"lambda"}:
        raise LexiconError(f"unknown relpron parameters {sorted(set(params) - {'lambda'})}", line)
    try:
        return RECIPES[source.name](sig, params.get("lambda", 1.0))
    except ValueError as exc:
        raise LexiconError(str(exc), line) from None


def parse_lexicon(text: str, dims: Optional[Mapping[str, int]] = None,
                  seed_offset: int = 0) -> Lexicon:
    """Parse lexicon text.  ``dims`` overrides declared space dimensions."""
    spaces: Dict[str, int] = {}
    atom_space: Dict[str, str] = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        parts = rest.split()
        if head == "space":
            if len(parts) != 2:
                raise LexiconError("expected 'space NAME DIM'", lineno)
            try:
                dim = int(parts[1])
            except ValueError:
                raise LexiconError(f"bad dimension {parts[1]!r}", lineno) from None
            if dim < 1:
                raise LexiconError("dimension must be positive", lineno)
            spaces[parts[0]] = dim
        elif head == "atom":
            if len(parts) != 2:
                raise LexiconError("expected 'atom NAME SPACE'", lineno)
            if parts[1] not in spaces:
                raise LexiconError(f"undeclared space {parts[1]!r}", lineno)
            atom_space[parts[0]] = parts[1]
        elif head == "word":
            word, colon, body = rest.partition(":")
            type_text, eq, source_text = body.partition("=")
            word = word.strip()
            if not colon or not eq or not word or " " in word:
                raise LexiconError("expected 'word NAME : TYPE = SOURCE'", lineno)
            try:
                formula = parse_formula(type_text)
            except FormulaSyntaxError as exc:
                raise LexiconError(str(exc), lineno) from None
            pending.append((lineno, word, formula, _parse_source(source_text, lineno)))
        else:
            raise LexiconError(f"unknown directive {head!r}", lineno)

    if dims:
        unknown = set(dims) - set(spaces)
        if unknown:
            raise LexiconError(f"dimension override for undeclared spaces {sorted(unknown)}")
        spaces.update(dims)
    atom_map = {a: (s, spaces[s]) for a, s in atom_space.items()}
    entries: Dict[str, List[LexiconEntry]] = {}
    for lineno, word, formula, source in pending:
        try:
            sig = interpret_type(formula, atom_map)
        except KeyError as exc:
            raise LexiconError(f"{exc.args[0]} in type of {word!r}", lineno) from None
        tensor = _build(source, sig, seed_offset, lineno)
        tensor.setflags(write=False)
        entries.setdefault(word, []).append(LexiconEntry(word, formula, source, tensor))
    return Lexicon(spaces, atom_map, entries)


def demo_path(name: str) -> Path:
    """Path of a bundled demo lexicon (``dutch`` or ``english``)."""
    ref = resources.files("nldia") / "data" / f"{name}.lex"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled lexicon {name!r}")
    return Path(str(ref))


def load_lexicon(path, dims: Optional[Mapping[str, int]] = None,
                 seed_offset: int = 0) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"), dims, seed_offset)


def resolve(lexicon: Lexicon, word: str) -> List[Tuple[Formula, np.ndarray]]:
    """Every reading of ``word`` as ``(type, tensor)``, in file order."""
    try:
        return [(e.formula, e.tensor) for e in lexicon.entries[word]]
    except KeyError:
        raise UnknownWord(f"unknown word {word!r}") from None
