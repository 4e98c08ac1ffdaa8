"""Generalised Kronecker deltas as the semantics of NL<> proofs.

A :class:`Delta` links index slots pairwise.  Its domain and codomain are
ordered slot lists, one slot per base-space factor.  A pair of two domain
slots contracts its inputs (an inner product), a domain/codomain pair renames
an index, and a pair of two codomain slots emits an identity tensor.

Raw pair lists may mention internal indices twice; :func:`normalize` removes
them with the rewrite ``(a, b), (a, d)  =>  (b, d)`` until every index occurs
once.  A pair ``(x, x)`` that appears along the way is a closed loop, i.e. a
trace, and is kept as a scalar factor in ``Delta.loops``.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from typing import (Dict, Iterable, List, Mapping, Optional, Sequence, Tuple)

from .formula import AtomMap, atoms, count_atoms
from .proofs import Proof, RuleName, check_proof

__all__ = [
    "IndexVar", "Delta", "DeltaError",
    "normalize", "identity", "epsilon", "eta", "compose", "tensor_delta",
    "alpha_equiv", "canonical_key", "delta_of_proof", "distinct_readings",
    "format_delta", "parse_delta", "einstein", "parse_einstein", "delta_to_json",
    "delta_from_json", "letters",
]


class DeltaError(ValueError):
    pass


@dataclass(frozen=True)
class IndexVar:
    id: int
    space: str


Pair = Tuple[IndexVar, IndexVar]


@dataclass(frozen=True)
class Delta:
    """A normal-form generalised Kronecker delta ``domain -> codomain``.

    ``pairs`` keeps the upper/lower orientation it was built with; the
    orientation has no effect on evaluation or equivalence.
    """
    pairs: Tuple[Pair, ...]
    domain: Tuple[IndexVar, ...]
    codomain: Tuple[IndexVar, ...]
    loops: Tuple[str, ...] = ()

    def __post_init__(self):
        slots = self.domain + self.codomain
        ends = [v for p in self.pairs for v in p]
        if len(set(slots)) != len(slots):
            raise DeltaError("a slot index is used twice")
        if sorted(ends, key=_key) != sorted(slots, key=_key):
            raise DeltaError("pair indices are not a permutation of the slots")
        for u, l in self.pairs:
            if u.space != l.space:
                raise DeltaError(f"pair links spaces {u.space} and {l.space}")

    @property
    def domain_spaces(self) -> Tuple[str, ...]:
        return tuple(v.space for v in self.domain)

    @property
    def codomain_spaces(self) -> Tuple[str, ...]:
        return tuple(v.space for v in self.codomain)

    @property
    def upper(self) -> Tuple[IndexVar, ...]:
        return tuple(p[0] for p in self.pairs)

    @property
    def lower(self) -> Tuple[IndexVar, ...]:
        return tuple(p[1] for p in self.pairs)

    def max_id(self) -> int:
        return max((v.id for p in self.pairs for v in p), default=-1)

    def shifted(self, offset: int) -> "Delta":
        """Same delta with every index id moved up by ``offset``."""
        def mv(v):
            return IndexVar(v.id + offset, v.space)
        return Delta(tuple((mv(u), mv(l)) for u, l in self.pairs),
                     tuple(map(mv, self.domain)), tuple(map(mv, self.codomain)),
                     self.loops)

    def with_signature(self, domain: Sequence[IndexVar],
                       codomain: Sequence[IndexVar]) -> "Delta":
        """Same pairs, slots re-partitioned between domain and codomain."""
        return Delta(self.pairs, tuple(domain), tuple(codomain), self.loops)

    def __str__(self):
        return format_delta(self)


def _key(v: IndexVar):
    return (v.id, v.space)


# --------------------------------------------------------------------------
# rewriting
# --------------------------------------------------------------------------

def normalize(pairs: Iterable[Pair], domain: Sequence[IndexVar],
              codomain: Sequence[IndexVar], loops: Sequence[str] = (),
              rng: Optional[random.Random] = None) -> Delta:
    """Rewrite shared indices away and return the normal-form delta.

    Shared indices are rewritten first-come unless ``rng`` is given, in
    which case the next index is picked at random; the result is the same
    up to renaming either way.
    """
    work: List[List[IndexVar]] = []
    for u, l in pairs:
        if u.space != l.space:
            raise DeltaError(f"pair ({u.id}, {l.id}) links spaces "
                             f"{u.space} and {l.space}")
        work.append([u, l])
    loops = list(loops)
    while True:
        where: Dict[IndexVar, List[Tuple[int, int]]] = {}
        for i, pair in enumerate(work):
            for side, v in enumerate(pair):
                where.setdefault(v, []).append((i, side))
        shared = [v for v, occ in where.items() if len(occ) > 1]
        if not shared:
            break
        for v in shared:
            if len(where[v]) > 2:
                raise DeltaError(f"index {v.id} occurs more than twice")
        v = rng.choice(shared) if rng is not None else shared[0]
        (i1, s1), (i2, s2) = where[v]
        if i1 == i2:
            loops.append(v.space)
            del work[i1]
            continue
        work[i2][s2] = work[i1][1 - s1]
        del work[i1]
    return Delta(tuple((u, l) for u, l in work), tuple(domain),
                 tuple(codomain), tuple(sorted(loops)))


# --------------------------------------------------------------------------
# maps of the compact closed structure
# --------------------------------------------------------------------------

def identity(spaces: Sequence[str]) -> Delta:
    n = len(spaces)
    up = [IndexVar(k, s) for k, s in enumerate(spaces)]
    lo = [IndexVar(n + k, s) for k, s in enumerate(spaces)]
    return Delta(tuple(zip(up, lo)), tuple(up), tuple(lo))


def epsilon(spaces: Sequence[str]) -> Delta:
    """``V (x) V -> I``, the inner product."""
    d = identity(spaces)
    return d.with_signature(d.domain + d.codomain, ())


def eta(spaces: Sequence[str]) -> Delta:
    """``I -> V (x) V``, the identity tensor."""
    d = identity(spaces)
    return d.with_signature((), d.domain + d.codomain)


def compose(g: Delta, f: Delta, rng: Optional[random.Random] = None) -> Delta:
    """``g . f``: f's codomain slots are identified with g's domain slots."""
    if f.codomain_spaces != g.domain_spaces:
        raise DeltaError(f"cannot compose: codomain {f.codomain_spaces} "
                         f"vs domain {g.domain_spaces}")
    g = g.shifted(f.max_id() + 1)
    links = list(zip(f.codomain, g.domain))
    return normalize(links + list(f.pairs) + list(g.pairs), f.domain,
                     g.codomain, f.loops + g.loops, rng=rng)


def tensor_delta(f: Delta, g: Delta) -> Delta:
    """Parallel composition: pairs, domains and codomains concatenate."""
    g = g.shifted(f.max_id() + 1)
    return Delta(f.pairs + g.pairs, f.domain + g.domain,
                 f.codomain + g.codomain, tuple(sorted(f.loops + g.loops)))


# --------------------------------------------------------------------------
# equivalence
# --------------------------------------------------------------------------

def canonical_key(d: Delta):
    """Hashable form of ``d`` that forgets index names and orientation."""
    pos = {v: ("d", k) for k, v in enumerate(d.domain)}
    pos.update({v: ("c", k) for k, v in enumerate(d.codomain)})
    links = sorted(tuple(sorted((pos[u], pos[l]))) for u, l in d.pairs)
    return (d.domain_spaces, d.codomain_spaces, tuple(links), d.loops)


def alpha_equiv(d1: Delta, d2: Delta) -> bool:
    """Equal up to a renaming of indices, slots matched by position."""
    return canonical_key(d1) == canonical_key(d2)


# --------------------------------------------------------------------------
# proofs to deltas
# --------------------------------------------------------------------------

def delta_of_proof(p: Proof, atom_map: Optional[AtomMap] = None) -> Delta:
    """The delta labelling the proof ``p``.

    Slot spaces are base-space labels from ``atom_map`` when given, atom
    names otherwise.  Only axioms and the binary monotonicity rules create
    or combine pairs; every other rule re-partitions or permutes slots.
    """
    if not check_proof(p):
        raise DeltaError("invalid proof")
    fresh = itertools.count()

    def space(name):
        return atom_map[name][0] if atom_map is not None else name

    def go(node: Proof) -> Tuple[list, list, list]:
        R = RuleName
        rule = node.rule
        src, tgt = node.conclusion.source, node.conclusion.target
        if rule is R.Axiom:
            up = [IndexVar(next(fresh), space(a.name)) for a in atoms(src)]
            lo = [IndexVar(next(fresh), space(a.name)) for a in atoms(tgt)]
            return list(zip(up, lo)), up, lo
        subs = [go(q) for q in node.premises]
        if rule in (R.MonTensor, R.MonOver, R.MonUnder):
            (fp, fd, fc), (gp, gd, gc) = subs
            pairs = fp + gp
            if rule is R.MonTensor:      # A*C --> B*D
                return pairs, fd + gd, fc + gc
            if rule is R.MonOver:        # A/D --> B/C
                return pairs, fd + gc, fc + gd
            return pairs, fc + gd, fd + gc   # B\C --> A\D
        pairs, dom, cod = subs[0]
        prem = node.premises[0].conclusion
        if rule is R.ResOver:            # A --> C/B  from  A*B --> C
            k = count_atoms(src)
            return pairs, dom[:k], cod + dom[k:]
        if rule is R.ResUnder:           # B --> A\C  from  A*B --> C
            k = count_atoms(tgt.den)
            return pairs, dom[k:], dom[:k] + cod
        if rule is R.ResOverInv:         # A*B --> C  from  A --> C/B
            k = count_atoms(tgt)
            return pairs, dom + cod[k:], cod[:k]
        if rule is R.ResUnderInv:        # A*B --> C  from  B --> A\C
            k = count_atoms(src.left)
            return pairs, cod[:k] + dom, cod[k:]
        if rule is R.SigmaL:             # <>A*(B*C)  from  B*(<>A*C)
            b = count_atoms(prem.source.left)
            a = count_atoms(prem.source.right.left)
            return pairs, dom[b:b + a] + dom[:b] + dom[b + a:], cod
        if rule is R.SigmaR:             # (A*B)*<>C  from  (A*<>C)*B
            a = count_atoms(prem.source.left.left)
            c = count_atoms(prem.source.left.right)
            return pairs, dom[:a] + dom[a + c:] + dom[a:a + c], cod
        # modalities and the associativity postulates leave slots alone
        return pairs, dom, cod

    pairs, dom, cod = go(p)
    return Delta(tuple(pairs), tuple(dom), tuple(cod))


def distinct_readings(proofs: Sequence[Proof],
                      atom_map: Optional[AtomMap] = None
                      ) -> List[Tuple[Delta, Proof]]:
    """One ``(delta, first proof)`` per equivalence class, in found order."""
    if len({q.conclusion for q in proofs}) > 1:
        raise DeltaError("proofs have different conclusions")
    seen = {}
    out = []
    for q in proofs:
        d = delta_of_proof(q, atom_map)
        key = canonical_key(d)
        if key not in seen:
            seen[key] = len(out)
            out.append((d, q))
    return out


# --------------------------------------------------------------------------
# printing and parsing
# --------------------------------------------------------------------------

_ALPHABET = "ijklmnopqrstuvwxyzabcdefgh"


def letters(n: int) -> List[str]:
    """``i, j, k, ...``; past 26, letters get numeric suffixes."""
    out = []
    for k in range(n):
        q, r = divmod(k, len(_ALPHABET))
        out.append(_ALPHABET[r] + (str(q) if q else ""))
    return out


def _index_list(names: Sequence[str], ascii: bool) -> str:
    if ascii:
        return "[" + ",".join(names) + "]"
    if len(names) == 1 and len(names[0]) == 1:
        return "_" + names[0]
    sep = "" if all(len(x) == 1 for x in names) else ","
    return "_{" + sep.join(names) + "}"


def format_delta(d: Delta, ascii: bool = False) -> str:
    """``δ^{i,k}_{j,l} : N_i ⊗ N_j ⊗ S_k → S_l``.

    Slots are lettered alphabetically, domain first, then codomain.
    """
    slots = d.domain + d.codomain
    name = dict(zip(slots, letters(len(slots))))
    up = ",".join(name[u] for u, _ in d.pairs)
    lo = ",".join(name[l] for _, l in d.pairs)
    if ascii:
        head = f"delta^{{{up}}}_{{{lo}}}"
        dom = " (x) ".join(f"{v.space}[{name[v]}]" for v in d.domain) or "I"
        cod = " (x) ".join(f"{v.space}[{name[v]}]" for v in d.codomain) or "I"
        arrow = "->"
    else:
        head = f"δ^{{{up}}}_{{{lo}}}"
        dom = " ⊗ ".join(f"{v.space}_{name[v]}" for v in d.domain) or "I"
        cod = " ⊗ ".join(f"{v.space}_{name[v]}" for v in d.codomain) or "I"
        arrow = "→"
    loops = "".join(f" tr({s})" for s in d.loops)
    return f"{head}{loops} : {dom} {arrow} {cod}"


_DELTA_HEAD = re.compile(
    r"^\s*(?:δ|delta)\^\{(?P<up>[^}]*)\}_\{(?P<lo>[^}]*)\}"
    r"(?P<loops>(?:\s*tr\([^)]*\))*)\s*:\s*(?P<dom>.*?)\s*(?:→|->)\s*(?P<cod>.*?)\s*$")
_SLOT = re.compile(r"^(?P<space>[^\s_\[]+)(?:_(?P<a>\w+)|\[(?P<b>\w+)\])$")


def parse_delta(text: str) -> Delta:
    """Inverse of :func:`format_delta` (either style)."""
    m = _DELTA_HEAD.match(text)
    if m is None:
        raise DeltaError(f"not a delta: {text!r}")

    def slots(side):
        side = side.strip()
        if side == "I":
            return []
        out = []
        for part in re.split(r"\s*(?:⊗|\(x\))\s*", side):
            sm = _SLOT.match(part)
            if sm is None:
                raise DeltaError(f"bad slot {part!r}")
            out.append((sm.group("a") or sm.group("b"), sm.group("space")))
        return out

    dom, cod = slots(m.group("dom")), slots(m.group("cod"))
    var = {}
    for k, (letter, space) in enumerate(dom + cod):
        if letter in var:
            raise DeltaError(f"slot letter {letter!r} used twice")
        var[letter] = IndexVar(k, space)
    up = [x.strip() for x in m.group("up").split(",") if x.strip()]
    lo = [x.strip() for x in m.group("lo").split(",") if x.strip()]
    if len(up) != len(lo):
        raise DeltaError("upper and lower index lists differ in length")
    try:
        pairs = tuple((var[u], var[l]) for u, l in zip(up, lo))
    except KeyError as exc:
        raise DeltaError(f"index {exc.args[0]!r} names no slot") from None
    loops = tuple(re.findall(r"tr\(([^)]*)\)", m.group("loops")))
    return Delta(pairs, tuple(var[x] for x, _ in dom),
                 tuple(var[x] for x, _ in cod), loops)


def einstein(d: Delta, words: Sequence[Tuple[str, int]], output: str = "v",
             ascii: bool = False) -> str:
    """Index-notation equation for ``d`` applied to ``words``.

    ``words`` lists ``(name, number of slots)`` in domain order.  Contracted
    pairs share one letter, letters are handed out in order of first use,
    and identity tensors created in the output appear as explicit deltas::

        v_j = mannen_i ⊗ die_{ijkl} ⊗ vrouwen_m ⊗ haten_{mkl}
    """
    if sum(n for _, n in words) != len(d.domain):
        raise DeltaError("word slots do not cover the domain")
    partner = {}
    for u, l in d.pairs:
        partner[u], partner[l] = l, u
    names: Dict[IndexVar, str] = {}
    supply = iter(letters(2 * len(d.pairs) + len(d.loops) + 1))
    codomain = set(d.codomain)
    for v in d.domain + d.codomain:
        if v in names:
            continue
        names[v] = next(supply)
        other = partner[v]
        if v in codomain and other in codomain:
            names[other] = next(supply)
        else:
            names[other] = names[v]
    factors = []
    slots = iter(d.domain)
    for word, n in words:
        idx = [names[next(slots)] for _ in range(n)]
        factors.append(word + (_index_list(idx, ascii) if idx else ""))
    cod_pos = {v: k for k, v in enumerate(d.codomain)}
    for u, l in d.pairs:
        if u in codomain and l in codomain:
            a, b = sorted((u, l), key=cod_pos.get)
            factors.append(f"delta[{names[a]},{names[b]}]" if ascii
                           else f"δ^{{{names[a]}}}_{{{names[b]}}}")
    for s in d.loops:
        t = next(supply)
        factors.append(f"delta[{t},{t}]" if ascii else f"δ^{{{t}}}_{{{t}}}")
    out_idx = [names[v] for v in d.codomain]
    lhs = output + (_index_list(out_idx, ascii) if out_idx else "")
    return f"{lhs} = " + (" " if ascii else " ⊗ ").join(factors)


_FACTOR = re.compile(
    r"(?P<delta>(?:δ|delta)(?:\^\{(?P<up>[^}]*)\}_\{(?P<lo>[^}]*)\}"
    r"|\[(?P<pair>[^\]]*)\]))"
    r"|(?P<name>[^\s_\[\]{}^⊗=]+)"
    r"(?:_\{(?P<braced>[^}]*)\}|_(?P<single>[A-Za-z0-9])|\[(?P<bracket>[^\]]*)\])?")


def _split_indices(text: str) -> List[str]:
    text = text.strip()
    if "," in text:
        return [t.strip() for t in text.split(",") if t.strip()]
    return list(text)


def _parse_factors(text: str):
    out = []
    pos = 0
    text = text.replace("(x)", " ").replace("⊗", " ")
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            return out
        m = _FACTOR.match(text, pos)
        if m is None or m.end() == pos:
            raise DeltaError(f"cannot parse index expression at {text[pos:]!r}")
        if m.group("delta"):
            if m.group("pair") is not None:
                idx = _split_indices(m.group("pair"))
            else:
                idx = _split_indices(m.group("up")) + _split_indices(m.group("lo"))
            if len(idx) != 2:
                raise DeltaError("explicit deltas take exactly two indices")
            out.append((None, idx))
        else:
            raw = m.group("braced") or m.group("single") or m.group("bracket") or ""
            out.append((m.group("name"), _split_indices(raw)))
        pos = m.end()


def parse_einstein(text: str, output: Optional[Sequence[str]] = None,
                   spaces: Optional[Sequence[str]] = None) -> Delta:
    """Read an index-notation expression back into a :class:`Delta`.

    Accepts what :func:`einstein` prints (either style), with or without the
    ``v_j =`` left-hand side.  Without one, ``output`` names the free
    indices; by default the letters used once, in alphabetical order.
    ``spaces`` labels domain slots then codomain slots (default ``"?"``).
    """
    lhs, eq, rhs = text.partition("=")
    if eq:
        head = _parse_factors(lhs)
        if len(head) != 1 or head[0][0] is None:
            raise DeltaError("left-hand side must be a single indexed name")
        output = head[0][1]
    else:
        rhs = text
    factors = _parse_factors(rhs)
    occurrences: Dict[str, List[int]] = {}
    ids = itertools.count()
    domain_ids = []
    explicit = []
    for name, idx in factors:
        if name is None:
            a, b = next(ids), next(ids)
            occurrences.setdefault(idx[0], []).append(a)
            occurrences.setdefault(idx[1], []).append(b)
            explicit.append((a, b))
            continue
        for letter in idx:
            k = next(ids)
            domain_ids.append(k)
            occurrences.setdefault(letter, []).append(k)
    if output is None:
        output = sorted(x for x, occ in occurrences.items() if len(occ) == 1)
    codomain_ids = []
    for letter in output:
        k = next(ids)
        codomain_ids.append(k)
        occurrences.setdefault(letter, []).append(k)
    n_slots = len(domain_ids) + len(codomain_ids)
    if spaces is None:
        spaces = ["?"] * n_slots
    if len(spaces) != n_slots:
        raise DeltaError(f"expected {n_slots} slot spaces, got {len(spaces)}")
    space_of = dict(zip(domain_ids + codomain_ids, spaces))
    # explicit deltas take their space from whatever they link to
    for a, b in explicit:
        for x in (a, b):
            letter = next(t for t, occ in occurrences.items() if x in occ)
            others = [k for k in occurrences[letter] if k != x]
            if others and others[0] in space_of:
                space_of[x] = space_of[others[0]]
        space_of.setdefault(a, space_of.get(b, "?"))
        space_of.setdefault(b, space_of[a])
    var = {k: IndexVar(k, s) for k, s in space_of.items()}
    raw = [(var[a], var[b]) for a, b in explicit]
    for letter, occ in occurrences.items():
        if len(occ) != 2:
            raise DeltaError(f"index {letter!r} occurs {len(occ)} times")
        raw.append((var[occ[0]], var[occ[1]]))
    return normalize(raw, [var[k] for k in domain_ids],
                     [var[k] for k in codomain_ids])


def delta_to_json(d: Delta) -> dict:
    slots = d.domain + d.codomain
    name = dict(zip(slots, letters(len(slots))))
    return {
        "domain": [[name[v], v.space] for v in d.domain],
        "codomain": [[name[v], v.space] for v in d.codomain],
        "pairs": [[name[u], name[l]] for u, l in d.pairs],
        "loops": list(d.loops),
    }


def delta_from_json(data: Mapping) -> Delta:
    var = {}
    for k, (letter, space) in enumerate(list(data["domain"]) + list(data["codomain"])):
        var[letter] = IndexVar(k, space)
    dom = tuple(var[x] for x, _ in data["domain"])
    cod = tuple(var[x] for x, _ in data["codomain"])
    pairs = tuple((var[u], var[l]) for u, l in data["pairs"])
    return Delta(pairs, dom, cod, tuple(data.get("loops", ())))
