"""Arrows, proofs and cut-free backward proof search for NL<>.

The rule set is residuation (and its inverses) for ``/``, ``\\`` and the
``<>``/``[]`` pair, monotonicity for every connective, and the extraction
postulates in rule form, acting on the antecedent:

=========  ===============================  ===============================
rule       premise                          conclusion
=========  ===============================  ===============================
AlphaL     (<>A*B)*C --> D                  <>A*(B*C) --> D
SigmaL     B*(<>A*C) --> D                  <>A*(B*C) --> D
AlphaR     A*(B*<>C) --> D                  (A*B)*<>C --> D
SigmaR     (A*<>C)*B --> D                  (A*B)*<>C --> D
=========  ===============================  ===============================

Axioms are identities on atoms; identities on complex types are derived
by monotonicity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Iterator, List, Optional, Sequence, Tuple

from .formula import (Atom, Box, Diamond, Formula, Over, Tensor, Under,
                      parse_formula, print_formula)

__all__ = [
    "Arrow", "RuleName", "Proof", "SearchConfig", "SearchResult",
    "POSTULATES", "derive", "check_proof", "format_proof", "parse_proof",
    "right_branching", "bracketings",
]


@dataclass(frozen=True)
class Arrow:
    source: Formula
    target: Formula

    def __str__(self):
        return f"{print_formula(self.source)} --> {print_formula(self.target)}"

    @classmethod
    def parse(cls, text: str) -> "Arrow":
        left, sep, right = text.partition("-->")
        if not sep:
            raise ValueError(f"missing '-->' in arrow {text!r}")
        return cls(parse_formula(left), parse_formula(right))


class RuleName(Enum):
    # definition order is the search order
    Axiom = "1"
    ResUnder = "◁"
    ResUnderInv = "◁⁻¹"
    ResOver = "▷"
    ResOverInv = "▷⁻¹"
    ResDia = "▽"
    ResDiaInv = "▽⁻¹"
    MonDia = "◇"
    MonBox = "□"
    MonTensor = "⊗"
    MonOver = "/"
    MonUnder = "\\"
    AlphaL = "α̂ˡ"
    SigmaL = "σ̂ˡ"
    AlphaR = "α̂ʳ"
    SigmaR = "σ̂ʳ"

    @property
    def arity(self) -> int:
        if self is RuleName.Axiom:
            return 0
        if self in _BINARY:
            return 2
        return 1


_BINARY = frozenset({RuleName.MonTensor, RuleName.MonOver, RuleName.MonUnder})
STRUCTURAL = frozenset({RuleName.AlphaL, RuleName.SigmaL,
                        RuleName.AlphaR, RuleName.SigmaR})

POSTULATES = {
    "none": frozenset(),
    "left": frozenset({RuleName.AlphaL, RuleName.SigmaL}),
    "right": frozenset({RuleName.AlphaR, RuleName.SigmaR}),
    "both": STRUCTURAL,
}


@dataclass(frozen=True)
class Proof:
    rule: RuleName
    conclusion: Arrow
    premises: Tuple["Proof", ...] = ()

    def __str__(self):
        return format_proof(self)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def height(self) -> int:
        return 1 + max((p.height() for p in self.premises), default=0)

    def walk(self) -> Iterator["Proof"]:
        yield self
        for p in self.premises:
            yield from p.walk()


# --------------------------------------------------------------------------
# rule schemas
# --------------------------------------------------------------------------

def _premise_goals(rule: RuleName, goal: Arrow) -> Optional[Tuple[Arrow, ...]]:
    """Premises that ``rule`` needs to conclude ``goal``; None if it cannot.

    Each rule has at most one way to match a given conclusion, which is what
    makes backward search and checking straightforward.
    """
    src, tgt = goal.source, goal.target
    R = RuleName
    if rule is R.Axiom:
        return () if isinstance(src, Atom) and src == tgt else None
    if rule is R.ResUnder:           # B --> A\C  from  A*B --> C
        if isinstance(tgt, Under):
            return (Arrow(Tensor(tgt.den, src), tgt.num),)
    elif rule is R.ResUnderInv:      # A*B --> C  from  B --> A\C
        if isinstance(src, Tensor):
            return (Arrow(src.right, Under(src.left, tgt)),)
    elif rule is R.ResOver:          # A --> C/B  from  A*B --> C
        if isinstance(tgt, Over):
            return (Arrow(Tensor(src, tgt.den), tgt.num),)
    elif rule is R.ResOverInv:       # A*B --> C  from  A --> C/B
        if isinstance(src, Tensor):
            return (Arrow(src.left, Over(tgt, src.right)),)
    elif rule is R.ResDia:           # A --> []B  from  <>A --> B
        if isinstance(tgt, Box):
            return (Arrow(Diamond(src), tgt.body),)
    elif rule is R.ResDiaInv:        # <>A --> B  from  A --> []B
        if isinstance(src, Diamond):
            return (Arrow(src.body, Box(tgt)),)
    elif rule is R.MonDia:
        if isinstance(src, Diamond) and isinstance(tgt, Diamond):
            return (Arrow(src.body, tgt.body),)
    elif rule is R.MonBox:
        if isinstance(src, Box) and isinstance(tgt, Box):
            return (Arrow(src.body, tgt.body),)
    elif rule is R.MonTensor:        # A*C --> B*D  from  A-->B, C-->D
        if isinstance(src, Tensor) and isinstance(tgt, Tensor):
            return (Arrow(src.left, tgt.left), Arrow(src.right, tgt.right))
    elif rule is R.MonOver:          # A/D --> B/C  from  A-->B, C-->D
        if isinstance(src, Over) and isinstance(tgt, Over):
            return (Arrow(src.num, tgt.num), Arrow(tgt.den, src.den))
    elif rule is R.MonUnder:         # B\C --> A\D  from  A-->B, C-->D
        if isinstance(src, Under) and isinstance(tgt, Under):
            return (Arrow(tgt.den, src.den), Arrow(src.num, tgt.num))
    elif rule in (R.AlphaL, R.SigmaL):
        if (isinstance(src, Tensor) and isinstance(src.left, Diamond)
                and isinstance(src.right, Tensor)):
            a, b, c = src.left, src.right.left, src.right.right
            new = Tensor(Tensor(a, b), c) if rule is R.AlphaL else Tensor(b, Tensor(a, c))
            return (Arrow(new, tgt),)
    elif rule in (R.AlphaR, R.SigmaR):
        if (isinstance(src, Tensor) and isinstance(src.left, Tensor)
                and isinstance(src.right, Diamond)):
            a, b, c = src.left.left, src.left.right, src.right
            new = Tensor(a, Tensor(b, c)) if rule is R.AlphaR else Tensor(Tensor(a, c), b)
            return (Arrow(new, tgt),)
    return None


def check_proof(p: Proof) -> bool:
    """True iff every node of ``p`` is an instance of its rule."""
    try:
        for node in p.walk():
            if len(node.premises) != node.rule.arity:
                return False
            expected = _premise_goals(node.rule, node.conclusion)
            if expected is None:
                return False
            if tuple(q.conclusion for q in node.premises) != expected:
                return False
    except (AttributeError, TypeError):
        return False
    return True


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    postulates: FrozenSet[RuleName] = POSTULATES["left"]
    max_depth: int = 40
    max_proofs: Optional[int] = None

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.max_proofs is not None and self.max_proofs < 1:
            raise ValueError("max_proofs must be positive")
        bad = set(self.postulates) - STRUCTURAL
        if bad:
            raise ValueError(f"not structural rules: {sorted(r.name for r in bad)}")


@dataclass
class SearchResult:
    """Proofs found, plus whether the depth or proof budget cut the search."""
    proofs: List[Proof] = field(default_factory=list)
    bound_hit: bool = False

    def __iter__(self):
        return iter(self.proofs)

    def __len__(self):
        return len(self.proofs)

    def __getitem__(self, i):
        return self.proofs[i]


class _Search:
    def __init__(self, config: SearchConfig):
        self.rules = [r for r in RuleName
                      if r not in STRUCTURAL or r in config.postulates]
        self.bound_hit = False
        # Set while exploring a subtree whenever a branch is cut, by the
        # depth bound or by the loop check.
        self.cut = False
        # Goals whose search tree was explored without any cut and yielded
        # nothing: they have no proof at all.
        self.failed: set[Arrow] = set()

    def prove(self, goal: Arrow, ancestors: FrozenSet[Arrow],
              depth: int) -> Iterator[Proof]:
        if goal in self.failed:
            return
        if depth == 0:
            self.bound_hit = self.cut = True
            return
        below = ancestors | {goal}
        cut_before, self.cut = self.cut, False
        found = False
        for rule in self.rules:
            goals = _premise_goals(rule, goal)
            if goals is None:
                continue
            if any(g in below for g in goals):
                self.cut = True
                continue
            if not goals:
                found = True
                yield Proof(rule, goal)
            elif len(goals) == 1:
                for p in self.prove(goals[0], below, depth - 1):
                    found = True
                    yield Proof(rule, goal, (p,))
            else:
                rights = None
                for left in self.prove(goals[0], below, depth - 1):
                    if rights is None:
                        rights = list(self.prove(goals[1], below, depth - 1))
                    for right in rights:
                        found = True
                        yield Proof(rule, goal, (left, right))
        if not found and not self.cut:
            self.failed.add(goal)
        self.cut = self.cut or cut_before


def derive(goal: Arrow, config: SearchConfig = SearchConfig()) -> SearchResult:
    """All cut-free proofs of ``goal`` up to ``config.max_depth``.

    Proofs never revisit a goal on the same branch, which is what keeps
    residuation from cycling.  Results come in rule order (as listed in
    :class:`RuleName`), premises explored left to right.
    """
    search = _Search(config)
    result = SearchResult()
    for p in search.prove(goal, frozenset(), config.max_depth):
        result.proofs.append(p)
        if config.max_proofs is not None and len(result.proofs) >= config.max_proofs:
            result.bound_hit = True
            break
    result.bound_hit = result.bound_hit or search.bound_hit
    return result


# --------------------------------------------------------------------------
# antecedents
# --------------------------------------------------------------------------

def right_branching(types: Sequence[Formula]) -> Formula:
    """``w1 * (w2 * (... * wn))``."""
    if not types:
        raise ValueError("empty antecedent")
    out = types[-1]
    for t in reversed(types[:-1]):
        out = Tensor(t, out)
    return out


def bracketings(types: Sequence[Formula]) -> Iterator[Formula]:
    """Every binary bracketing of ``types``, right-branching first."""
    n = len(types)
    if n == 0:
        raise ValueError("empty antecedent")
    if n == 1:
        yield types[0]
        return
    for split in range(1, n):
        for left in bracketings(types[:split]):
            for right in bracketings(types[split:]):
                yield Tensor(left, right)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def format_proof(p: Proof, indent: Optional[int] = None) -> str:
    """S-expression ``(Rule "A --> B" premise*)``; one line unless ``indent``."""
    def go(node, level):
        head = f'({node.rule.name} "{node.conclusion}"'
        if not node.premises:
            return head + ")"
        if indent is None:
            return head + " " + " ".join(go(q, level) for q in node.premises) + ")"
        pad = "\n" + " " * (indent * (level + 1))
        return head + "".join(pad + go(q, level + 1) for q in node.premises) + ")"
    return go(p, 0)


_SEXP_TOKEN = re.compile(r'\s*(?:(?P<open>\()|(?P<close>\))|"(?P<arrow>[^"]*)"|(?P<rule>[A-Za-z]+))')


def parse_proof(text: str) -> Proof:
    """Inverse of :func:`format_proof`."""
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"bad proof syntax at position {pos}")
        tokens.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()

    def expect(i, kind):
        if i >= len(tokens) or tokens[i][0] != kind:
            raise ValueError(f"bad proof syntax: expected {kind} at token {i}")
        return tokens[i][1]

    def node(i):
        expect(i, "open")
        name = expect(i + 1, "rule")
        try:
            rule = RuleName[name]
        except KeyError:
            raise ValueError(f"unknown rule {name!r}") from None
        conclusion = Arrow.parse(expect(i + 2, "arrow"))
        i += 3
        premises = []
        while i < len(tokens) and tokens[i][0] == "open":
            sub, i = node(i)
            premises.append(sub)
        expect(i, "close")
        return Proof(rule, conclusion, tuple(premises)), i + 1

    out, end = node(0)
    if end != len(tokens):
        raise ValueError("trailing input after proof")
    return out
