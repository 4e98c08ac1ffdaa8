"""Command line: derive phrases, print their readings, check and compare them.

    nldia derive  --lexicon dutch --goal n mannen die vrouwen haten
    nldia check   --lexicon dutch --goal n --dims N=2,S=2 mannen die vrouwen haten
    nldia compare --lexicon dutch --goal n mannen die vrouwen haten

``--lexicon`` takes a file path or the name of a bundled demo lexicon
(``dutch``, ``english``).  Exit codes: 0 success, 2 underivable, 3 input
error, 4 equivalence check failed.

``--format structured`` prints one JSON document::

    {"command": "derive",
     "reports": [{"goal": "...", "words": [...], "proofs_found": 7,
                  "bound_hit": false, "elapsed_s": 0.002,
                  "readings": [{"index": 1, "delta": {...}, "delta_text": "...",
                                "einstein": "...", "proof": "...",
                                "result": {"shape": [4], "data": [...]}}]}]}

``delta`` is the form read by :func:`nldia.delta.delta_from_json`.
"""

from __future__ import annotations

import argparse
import itertools
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .delta import (Delta, canonical_key, delta_of_proof, delta_to_json,
                    distinct_readings, einstein, format_delta)
from .formula import Formula, FormulaSyntaxError, Tensor, parse_formula
from .lexicon import Lexicon, LexiconError, demo_path, load_lexicon, resolve
from .proofs import (POSTULATES, Arrow, Proof, SearchConfig, bracketings, derive,
                     format_proof, right_branching)
from .tensor import DimensionOverflow, categorical_eval, contract, delta_matrix

EXIT_OK, EXIT_UNDERIVABLE, EXIT_INPUT, EXIT_EQUIVALENCE = 0, 2, 3, 4


class InputError(ValueError):
    pass


class Underivable(Exception):
    pass


@dataclass
class Reading:
    index: int
    delta: Delta
    proof: Proof
    einstein: str
    result: np.ndarray = field(repr=False)


@dataclass
class RunReport:
    goal: Arrow
    words: Tuple[str, ...]
    proofs_found: int
    readings: List[Reading]
    elapsed: float
    bound_hit: bool

    def to_json(self) -> dict:
        return {
            "goal": str(self.goal),
            "words": list(self.words),
            "proofs_found": self.proofs_found,
            "bound_hit": self.bound_hit,
            "elapsed_s": self.elapsed,
            "readings": [{
                "index": r.index,
                "delta": delta_to_json(r.delta),
                "delta_text": format_delta(r.delta),
                "einstein": r.einstein,
                "proof": format_proof(r.proof),
                "result": {"shape": list(r.result.shape),
                           "data": r.result.ravel().tolist()},
            } for r in self.readings],
        }


@dataclass
class EquivalenceReport:
    goals: List[Arrow]
    proofs_checked: int
    max_deviation: float
    tolerance: float
    basis: bool
    bound_hit: bool

    @property
    def passed(self) -> bool:
        return self.proofs_checked > 0 and self.max_deviation <= self.tolerance

    def to_json(self) -> dict:
        return {"goals": [str(g) for g in self.goals],
                "proofs_checked": self.proofs_checked,
                "max_deviation": self.max_deviation,
                "tolerance": self.tolerance, "basis": self.basis,
                "bound_hit": self.bound_hit, "passed": self.passed}


@dataclass
class SimilarityReport:
    labels: List[str]
    pairs: List[Tuple[int, int, float]]

    def to_json(self) -> dict:
        return {"readings": self.labels,
                "similarities": [{"a": a, "b": b, "cosine": c} for a, b, c in self.pairs]}


# --------------------------------------------------------------------------
# antecedents
# --------------------------------------------------------------------------

def parse_bracketing(layout: str, words: Sequence[str]):
    """Read ``(w1 (w2 w3))`` into nested pairs of word positions."""
    tokens = re.findall(r"\(|\)|[^\s()]+", layout)
    pos = 0
    leaf = iter(range(len(words)))

    def node():
        nonlocal pos
        if pos >= len(tokens):
            raise InputError(f"bracketing {layout!r} ends early")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            kids = []
            while pos < len(tokens) and tokens[pos] != ")":
                kids.append(node())
            if pos >= len(tokens) or len(kids) != 2:
                raise InputError(f"bracketing {layout!r}: each group needs exactly two parts")
            pos += 1
            return tuple(kids)
        if tok == ")":
            raise InputError(f"bracketing {layout!r}: unexpected ')'")
        k = next(leaf, None)
        if k is None or words[k] != tok:
            raise InputError(f"bracketing {layout!r} does not match the words {' '.join(words)}")
        return k

    tree = node()
    if pos != len(tokens) or next(leaf, None) is not None:
        raise InputError(f"bracketing {layout!r} does not match the words {' '.join(words)}")
    return tree


def _build(tree, types: Sequence[Formula]) -> Formula:
    if isinstance(tree, int):
        return types[tree]
    return Tensor(_build(tree[0], types), _build(tree[1], types))


def antecedents(types: Sequence[Formula], words: Sequence[str],
                bracketing: str = "right") -> Iterator[Formula]:
    if not types:
        raise InputError("no words given")
    if bracketing == "right":
        yield right_branching(types)
    elif bracketing == "all":
        yield from bracketings(types)
    elif bracketing.startswith("explicit:"):
        yield _build(parse_bracketing(bracketing[len("explicit:"):], words), types)
    else:
        raise InputError(f"unknown bracketing {bracketing!r}")


def _candidates(lexicon: Lexicon, words: Sequence[str], goal: Formula,
                bracketing: str):
    """``(arrow, tensors)`` for every homonym choice and bracketing."""
    for choice in itertools.product(*(resolve(lexicon, w) for w in words)):
        types = [f for f, _ in choice]
        tensors = [t for _, t in choice]
        for ante in antecedents(types, words, bracketing):
            yield Arrow(ante, goal), tensors


def _as_goal(goal) -> Formula:
    if isinstance(goal, str):
        try:
            return parse_formula(goal)
        except FormulaSyntaxError as exc:
            raise InputError(str(exc)) from None
    return goal


def _config(postulates: str, max_depth: int) -> SearchConfig:
    if postulates not in POSTULATES:
        raise InputError(f"unknown postulate set {postulates!r}")
    return SearchConfig(POSTULATES[postulates], max_depth)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_derive(lexicon: Lexicon, words: Sequence[str], goal,
               postulates: str = "left", bracketing: str = "right",
               max_depth: int = 40) -> List[RunReport]:
    """One report per antecedent candidate (homonym choice x bracketing)."""
    goal = _as_goal(goal)
    config = _config(postulates, max_depth)
    reports = []
    for arrow, tensors in _candidates(lexicon, words, goal, bracketing):
        start = time.perf_counter()
        found = derive(arrow, config)
        readings = []
        slots = [(w, t.ndim) for w, t in zip(words, tensors)]
        for k, (d, p) in enumerate(distinct_readings(found.proofs, lexicon.atom_map), 1):
            result = contract(d, tensors, lexicon.spaces)
            readings.append(Reading(k, d, p, einstein(d, slots), result))
        reports.append(RunReport(arrow, tuple(words), len(found), readings,
                                 time.perf_counter() - start, found.bound_hit))
    return reports


def _corrupt(d: Delta) -> Delta:
    """Swap two same-space domain slots so the map changes."""
    key = canonical_key(d)
    dom = list(d.domain)
    for a, b in itertools.combinations(range(len(dom)), 2):
        if dom[a].space != dom[b].space:
            continue
        swapped = dom[:]
        swapped[a], swapped[b] = dom[b], dom[a]
        out = d.with_signature(swapped, d.codomain)
        if canonical_key(out) != key:
            return out
    raise ValueError("delta has no corruptible slot pair")


def cmd_check_equivalence(lexicon: Lexicon, words: Sequence[str], goal,
                          tolerance: float = 1e-9, basis: bool = False,
                          postulates: str = "left", bracketing: str = "right",
                          max_depth: int = 40, corrupt: bool = False
                          ) -> EquivalenceReport:
    """Compare the categorical evaluation of every proof with its delta.

    Dimension overrides are applied when loading ``lexicon``.  ``corrupt``
    is a test hook that scrambles each extracted delta before comparing.
    """
    goal = _as_goal(goal)
    config = _config(postulates, max_depth)
    goals, checked, worst, bound_hit = [], 0, 0.0, False
    for arrow, tensors in _candidates(lexicon, words, goal, bracketing):
        found = derive(arrow, config)
        goals.append(arrow)
        bound_hit = bound_hit or found.bound_hit
        x = np.ones(1)
        for t in tensors:
            x = np.kron(x, t.ravel())
        for p in found:
            m = categorical_eval(p, lexicon.atom_map)
            d = delta_of_proof(p, lexicon.atom_map)
            if corrupt:
                d = _corrupt(d)
            direct = contract(d, tensors, lexicon.spaces).ravel()
            worst = max(worst, float(np.max(np.abs(m @ x - direct), initial=0.0)))
            if basis:
                worst = max(worst, float(np.max(np.abs(m - delta_matrix(d, lexicon.spaces)),
                                                initial=0.0)))
            checked += 1
    if not checked:
        raise Underivable(f"no proof of {' '.join(words)} --> {goal}")
    return EquivalenceReport(goals, checked, worst, tolerance, basis, bound_hit)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.ravel(a), np.ravel(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return float("nan")
    return float(np.dot(a, b) / (na * nb))


def cmd_compare(lexicon: Lexicon, words: Sequence[str], goal,
                postulates: str = "left", bracketing: str = "right",
                max_depth: int = 40) -> SimilarityReport:
    """Pairwise cosine similarity between all readings, in derive order."""
    reports = cmd_derive(lexicon, words, goal, postulates, bracketing, max_depth)
    labelled = []
    for n, rep in enumerate(reports, 1):
        for r in rep.readings:
            label = f"reading {r.index}" if len(reports) == 1 else f"candidate {n} reading {r.index}"
            labelled.append((label, r.result))
    if not labelled:
        raise Underivable(f"no proof of {' '.join(words)} --> {goal}")
    if len(labelled) < 2:
        raise InputError("comparison needs at least two readings")
    pairs = [(a, b, cosine(labelled[a][1], labelled[b][1]))
             for a, b in itertools.combinations(range(len(labelled)), 2)]
    return SimilarityReport([lab for lab, _ in labelled], pairs)


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_dims(text: str) -> Dict[str, int]:
    out = {}
    for part in filter(None, text.split(",")):
        name, eq, value = part.partition("=")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise InputError(f"bad --dims entry {part!r}") from None
        if not eq or out[name.strip()] < 1:
            raise InputError(f"bad --dims entry {part!r}")
    return out


def open_lexicon(source: str, dims: Optional[Mapping[str, int]] = None,
                 seed_offset: int = 0) -> Lexicon:
    path = Path(source)
    if not path.exists() and re.fullmatch(r"\w+", source):
        try:
            path = demo_path(source)
        except FileNotFoundError:
            raise InputError(f"no lexicon file or bundled lexicon named {source!r}") from None
    if not path.is_file():
        raise InputError(f"lexicon file {source!r} not found")
    return load_lexicon(path, dims, seed_offset)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("words", nargs="+", help="the phrase, one word per argument")
    common.add_argument("--lexicon", default="dutch",
                        help="lexicon file, or a bundled one: dutch, english (default dutch)")
    common.add_argument("--goal", required=True, help="goal type, e.g. n or s")
    common.add_argument("--postulates", choices=sorted(POSTULATES), default="left")
    common.add_argument("--bracketing", default="right",
                        help="right, all, or explicit:<bracketing> such as "
                             "'explicit:(mannen (die (vrouwen haten)))'")
    common.add_argument("--max-depth", type=int, default=40)
    common.add_argument("--seed-override", type=int, default=0, metavar="K",
                        help="add K to every seed in the lexicon")
    common.add_argument("--dims", default="", help="override space dimensions, e.g. N=2,S=2")
    common.add_argument("--format", choices=("text", "structured"), default="text")

    parser = _Parser(prog="nldia", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("derive", parents=[common], help="derive and evaluate readings")
    check = sub.add_parser("check", parents=[common],
                           help="compare categorical evaluation with delta contraction")
    check.add_argument("--tolerance", type=float, default=1e-9)
    check.add_argument("--basis", action="store_true",
                       help="also compare full matrices on basis tensors")
    check.add_argument("--corrupt-test-hook", action="store_true", help=argparse.SUPPRESS)
    sub.add_parser("compare", parents=[common], help="cosine similarity between readings")
    return parser


def _fmt_array(a: np.ndarray) -> str:
    return np.array2string(a, precision=6, suppress_small=True, separator=", ")


def _print_derive(reports: List[RunReport], out) -> None:
    for rep in reports:
        print(f"goal: {rep.goal}", file=out)
        print(f"proofs: {rep.proofs_found}"
              f"  readings: {len(rep.readings)}  time: {rep.elapsed * 1e3:.1f} ms"
              f"  bound hit: {'yes' if rep.bound_hit else 'no'}", file=out)
        for r in rep.readings:
            print(f"reading {r.index}", file=out)
            print(f"  delta:    {format_delta(r.delta)}", file=out)
            print(f"  einstein: {r.einstein}", file=out)
            print(f"  result:   {_fmt_array(r.result)}", file=out)
        print(file=out)


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    structured = args.format == "structured"
    try:
        lexicon = open_lexicon(args.lexicon, parse_dims(args.dims), args.seed_override)
        flags = dict(postulates=args.postulates, bracketing=args.bracketing,
                     max_depth=args.max_depth)
        if args.command == "derive":
            reports = cmd_derive(lexicon, args.words, args.goal, **flags)
            if structured:
                json.dump({"command": "derive",
                           "reports": [r.to_json() for r in reports]}, out, indent=2)
                print(file=out)
            else:
                _print_derive(reports, out)
            if not any(r.readings for r in reports):
                if not structured:
                    print(f"underivable: {' '.join(args.words)} --> {args.goal}", file=sys.stderr)
                return EXIT_UNDERIVABLE
            return EXIT_OK
        if args.command == "check":
            rep = cmd_check_equivalence(lexicon, args.words, args.goal, args.tolerance,
                                        args.basis, corrupt=args.corrupt_test_hook, **flags)
            if structured:
                json.dump({"command": "check", **rep.to_json()}, out, indent=2)
                print(file=out)
            else:
                print(f"{'PASS' if rep.passed else 'FAIL'}: {rep.proofs_checked} proofs, "
                      f"max deviation {rep.max_deviation:.3g} (tolerance {rep.tolerance:g})",
                      file=out)
            return EXIT_OK if rep.passed else EXIT_EQUIVALENCE
        rep = cmd_compare(lexicon, args.words, args.goal, **flags)
        if structured:
            json.dump({"command": "compare", **rep.to_json()}, out, indent=2)
            print(file=out)
        else:
            for a, b, c in rep.pairs:
                print(f"{rep.labels[a]} vs {rep.labels[b]}: cosine {c:.6f}", file=out)
        return EXIT_OK
    except Underivable as exc:
        print(f"underivable: {exc}", file=sys.stderr)
        return EXIT_UNDERIVABLE
    except (InputError, LexiconError, DimensionOverflow, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
