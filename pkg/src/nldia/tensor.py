"""Concrete FVect: dense tensors, delta contraction and the categorical oracle.

Tensors are float64 numpy arrays in row-major (C) order.  A linear map
between flattened spaces is a matrix of shape ``(dim codomain, dim domain)``.

:func:`contract` evaluates a :class:`~nldia.delta.Delta` directly on word
tensors.  :func:`categorical_eval` builds the same map the long way, from
identities, compositions, unit/counit insertions and permutation matrices,
rule by rule over a proof.  The two must agree.
"""

from __future__ import annotations

from math import prod
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .delta import Delta, IndexVar
from .formula import AtomMap, Formula, SpaceSignature, interpret_type
from .proofs import Proof, RuleName, check_proof

__all__ = [
    "as_tensor", "contract", "delta_matrix", "eta", "epsilon_apply",
    "frob_delta_map", "frob_mu", "frob_iota", "frob_zeta",
    "identity_map", "eta_map", "epsilon_map", "mu_map", "zeta_map",
    "permutation_map", "relpron_tensor", "categorical_eval",
    "ew_mul", "mat_apply", "mat_apply_T", "sum_axis", "DimensionOverflow",
]


class DimensionOverflow(ValueError):
    pass


def as_tensor(x) -> np.ndarray:
    """Float64 copy-free view of ``x``; rejects non-finite entries."""
    t = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor has non-finite entries")
    return t


# --------------------------------------------------------------------------
# delta evaluation
# --------------------------------------------------------------------------

def _slot_dims(d: Delta, inputs: Sequence[np.ndarray],
               dims: Optional[Mapping[str, int]]) -> Dict[str, int]:
    known = dict(dims or {})
    slots = iter(d.domain)
    for t in inputs:
        for n in t.shape:
            v = next(slots)
            if known.setdefault(v.space, n) != n:
                raise ValueError(f"space {v.space} has dimension "
                                 f"{known[v.space]}, input axis has {n}")
    for v in d.domain + d.codomain:
        if v.space not in known:
            raise ValueError(f"no dimension known for space {v.space}")
    for s in d.loops:
        if s not in known:
            raise ValueError(f"no dimension known for space {s}")
    return known


def contract(d: Delta, inputs: Sequence, dims: Optional[Mapping[str, int]] = None
             ) -> np.ndarray:
    """Apply ``d`` to ``inputs``, a list of tensors covering its domain slots.

    Inputs take domain slots left to right, one per axis.  Pairs are
    processed in order: a pair of domain slots is contracted, a
    domain/codomain pair renames an axis, and a codomain pair inserts an
    identity matrix.  ``dims`` gives dimensions for spaces that no input
    mentions.  The result has one axis per codomain slot.
    """
    tensors = [as_tensor(t) for t in inputs]
    if sum(t.ndim for t in tensors) != len(d.domain):
        raise ValueError(f"inputs have {sum(t.ndim for t in tensors)} axes, "
                         f"delta domain has {len(d.domain)} slots")
    size = _slot_dims(d, tensors, dims)

    # live tensors with one label (an IndexVar) per axis
    live: List[tuple] = []
    slots = iter(d.domain)
    for t in tensors:
        live.append((t, [next(slots) for _ in range(t.ndim)]))
    scale = 1.0
    for s in d.loops:
        scale *= size[s]

    def owner(v):
        for k, (_, labels) in enumerate(live):
            if v in labels:
                return k
        return None

    codomain = set(d.codomain)
    for u, l in d.pairs:
        ku, kl = owner(u), owner(l)
        if ku is None and kl is None:
            live.append((np.eye(size[u.space]), [u, l]))
        elif ku is None or kl is None:
            # rename the input axis to the output slot
            k, old, new = (kl, l, u) if ku is None else (ku, u, l)
            t, labels = live[k]
            live[k] = (t, [new if x == old else x for x in labels])
        elif ku == kl:
            t, labels = live[ku]
            a, b = labels.index(u), labels.index(l)
            t = np.trace(t, axis1=a, axis2=b)
            live[ku] = (t, [x for x in labels if x not in (u, l)])
        else:
            (t1, lab1), (t2, lab2) = live[ku], live[kl]
            t = np.tensordot(t1, t2, axes=(lab1.index(u), lab2.index(l)))
            labels = [x for x in lab1 if x != u] + [x for x in lab2 if x != l]
            live[min(ku, kl)] = (t, labels)
            del live[max(ku, kl)]

    out = np.array(scale)
    labels: List[IndexVar] = []
    for t, lab in live:
        out = np.tensordot(out, t, axes=0)
        labels += lab
    assert set(labels) == codomain
    return out.transpose([labels.index(v) for v in d.codomain]).copy()


def delta_matrix(d: Delta, dims: Mapping[str, int]) -> np.ndarray:
    """Matrix ``(dim codomain, dim domain)`` of the map ``d`` denotes.

    Every slot is made an output, so the contraction yields the full tensor
    of the map at once; column ``k`` is the image of basis vector ``k``.
    """
    full = contract(d.with_signature((), d.domain + d.codomain), [], dims)
    n_dom = prod(dims[v.space] for v in d.domain)
    return full.reshape(n_dom, -1).T.copy()


# --------------------------------------------------------------------------
# compact closed and Frobenius structure
# --------------------------------------------------------------------------

def eta(space: SpaceSignature) -> np.ndarray:
    """Identity tensor in ``V (x) V``."""
    n = space.total_dim
    return np.eye(n).reshape(space.dims + space.dims)


def epsilon_apply(u, v) -> float:
    """Inner product of two tensors of one shape."""
    u, v = as_tensor(u), as_tensor(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    return float(np.sum(u * v))


def frob_delta_map(v) -> np.ndarray:
    """Copy: a vector onto the diagonal of a square matrix."""
    v = as_tensor(v)
    if v.ndim != 1:
        raise ValueError("expected a vector")
    return np.diag(v)


def frob_mu(m) -> np.ndarray:
    """Merge: the diagonal of a square matrix."""
    m = as_tensor(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return np.diagonal(m).copy()


def frob_iota(v) -> float:
    """Delete: sum of the coefficients."""
    v = as_tensor(v)
    if v.ndim != 1:
        raise ValueError("expected a vector")
    return float(v.sum())


def frob_zeta(dim: int, lam: float = 1.0) -> np.ndarray:
    """Insert: the constant vector ``lam``."""
    return np.full(dim, float(lam))


# The same maps as matrices on flattened spaces, for building composites.

def identity_map(dim: int) -> np.ndarray:
    return np.eye(dim)


def eta_map(dim: int) -> np.ndarray:
    """``I -> V (x) V`` as a ``(dim**2, 1)`` matrix."""
    return np.eye(dim).reshape(dim * dim, 1)


def epsilon_map(dim: int) -> np.ndarray:
    """``V (x) V -> I`` as a ``(1, dim**2)`` matrix."""
    return np.eye(dim).reshape(1, dim * dim)


def mu_map(dim: int) -> np.ndarray:
    m = np.zeros((dim, dim * dim))
    m[np.arange(dim), np.arange(dim) * (dim + 1)] = 1.0
    return m


def zeta_map(dim: int, lam: float = 1.0) -> np.ndarray:
    return frob_zeta(dim, lam).reshape(dim, 1)


def permutation_map(dims: Sequence[int], perm: Sequence[int]) -> sp.csr_matrix:
    """Matrix reordering tensor factors: factor ``perm[k]`` goes to place k."""
    total = prod(dims)
    src = np.arange(total).reshape(tuple(dims)).transpose(tuple(perm)).ravel()
    return sp.csr_matrix((np.ones(total), (np.arange(total), src)),
                         shape=(total, total))


def relpron_tensor(n_dim: int, s_dim: int, lam: float = 1.0) -> np.ndarray:
    """Relative pronoun in ``N (x) N (x) N (x) S``.

    Built as ``(1 (x) mu (x) 1 (x) zeta) . (eta (x) eta)``: a diagonal cube
    in the noun factors times a constant sentence vector.
    """
    if n_dim < 1 or s_dim < 1:
        raise ValueError("dimensions must be positive")
    units = np.kron(eta_map(n_dim), eta_map(n_dim))
    layer = np.kron(np.kron(np.kron(identity_map(n_dim), mu_map(n_dim)),
                            identity_map(n_dim)), zeta_map(s_dim, lam))
    return (layer @ units).reshape(n_dim, n_dim, n_dim, s_dim)


# --------------------------------------------------------------------------
# categorical interpretation of proofs
# --------------------------------------------------------------------------

def categorical_eval(p: Proof, atom_map: AtomMap,
                     max_dim: int = 10**6) -> np.ndarray:
    """Matrix of the linear map interpreting ``p``, built rule by rule.

    Intermediate maps are kept sparse; ``max_dim`` bounds the dimension of
    every intermediate space.
    """
    if not check_proof(p):
        raise ValueError("invalid proof")

    def dim(f: Formula) -> int:
        n = interpret_type(f, atom_map).total_dim
        if n > max_dim:
            raise DimensionOverflow(f"space of {f} has dimension {n} > {max_dim}")
        return n

    def guard(*ns):
        n = prod(ns)
        if n > max_dim:
            raise DimensionOverflow(f"intermediate dimension {n} > {max_dim}")

    def eye(n):
        return sp.identity(n, format="csr")

    def kron(*ms):
        out = ms[0]
        for m in ms[1:]:
            out = sp.kron(out, m, format="csr")
        return out

    def unit(n):
        return sp.csr_matrix(eta_map(n))

    def counit(n):
        return sp.csr_matrix(epsilon_map(n))

    def go(node: Proof):
        R = RuleName
        rule = node.rule
        src, tgt = node.conclusion.source, node.conclusion.target
        if rule is R.Axiom:
            return eye(dim(src))
        subs = [go(q) for q in node.premises]
        f = subs[0]
        prem = node.premises[0].conclusion
        if rule is R.ResOver:            # A --> C/B  from  f: A*B --> C
            a, b = dim(src), dim(tgt.den)
            guard(a, b, b)
            return kron(f, eye(b)) @ kron(eye(a), unit(b))
        if rule is R.ResUnder:           # B --> A\C  from  f: A*B --> C
            a, b = dim(tgt.den), dim(src)
            guard(a, a, b)
            return kron(eye(a), f) @ kron(unit(a), eye(b))
        if rule is R.ResOverInv:         # A*B --> C  from  g: A --> C/B
            b, c = dim(src.right), dim(tgt)
            guard(c, b, b)
            return kron(eye(c), counit(b)) @ kron(f, eye(b))
        if rule is R.ResUnderInv:        # A*B --> C  from  h: B --> A\C
            a, c = dim(src.left), dim(tgt)
            guard(a, a, c)
            return kron(counit(a), eye(c)) @ kron(eye(a), f)
        if rule in (R.ResDia, R.ResDiaInv, R.MonDia, R.MonBox):
            return f
        if rule is R.MonTensor:
            return kron(f, subs[1])
        if rule is R.MonOver:            # A/D --> B/C  from  f: A-->B, g: C-->D
            g = subs[1]
            b, c, d = dim(tgt.num), dim(tgt.den), dim(src.den)
            guard(b, c, c, d)
            guard(b, c, d, d)
            step1 = kron(f, unit(c), eye(d))
            step2 = kron(eye(b * c), g, eye(d))
            step3 = kron(eye(b * c), counit(d))
            return step3 @ step2 @ step1
        if rule is R.MonUnder:           # B\C --> A\D  from  f: A-->B, g: C-->D
            g = subs[1]
            a, b, d = dim(tgt.den), dim(src.den), dim(tgt.num)
            guard(b, a, a, d)
            guard(b, b, a, d)
            step1 = kron(eye(b), unit(a), g)
            step2 = kron(eye(b), f, eye(a * d))
            step3 = kron(counit(b), eye(a * d))
            return step3 @ step2 @ step1
        if rule is R.AlphaL:             # f . alpha
            a, b, c = dim(src.left), dim(src.right.left), dim(src.right.right)
            return f @ permutation_map((a, b, c), (0, 1, 2))
        if rule is R.SigmaL:             # f . alpha^-1 . (sigma (x) 1) . alpha
            a, b, c = dim(src.left), dim(src.right.left), dim(src.right.right)
            alpha = permutation_map((a, b, c), (0, 1, 2))
            sigma = kron(permutation_map((a, b), (1, 0)), eye(c))
            alpha_inv = permutation_map((b, a, c), (0, 1, 2))
            return f @ alpha_inv @ sigma @ alpha
        if rule is R.AlphaR:
            a, b, c = dim(src.left.left), dim(src.left.right), dim(src.right)
            return f @ permutation_map((a, b, c), (0, 1, 2))
        if rule is R.SigmaR:             # f . alpha^-1 . (1 (x) sigma) . alpha
            a, b, c = dim(src.left.left), dim(src.left.right), dim(src.right)
            alpha = permutation_map((a, b, c), (0, 1, 2))
            sigma = kron(eye(a), permutation_map((b, c), (1, 0)))
            alpha_inv = permutation_map((a, c, b), (0, 1, 2))
            return f @ alpha_inv @ sigma @ alpha
        raise AssertionError(rule)

    m = go(p)
    guard(*m.shape)
    return m.toarray()


# --------------------------------------------------------------------------
# helpers for reading off final meanings
# --------------------------------------------------------------------------

def ew_mul(a, b) -> np.ndarray:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def mat_apply(m, v) -> np.ndarray:
    m, v = as_tensor(m), as_tensor(v)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(f"cannot apply {m.shape} matrix to {v.shape} vector")
    return m @ v


def mat_apply_T(m, v) -> np.ndarray:
    """Apply the transpose of ``m``."""
    m, v = as_tensor(m), as_tensor(v)
    if m.ndim != 2 or v.ndim != 1 or m.shape[0] != v.shape[0]:
        raise ValueError(f"cannot apply transpose of {m.shape} to {v.shape}")
    return m.T @ v


def sum_axis(t, axis: int) -> np.ndarray:
    t = as_tensor(t)
    if not -t.ndim <= axis < t.ndim:
        raise ValueError(f"axis {axis} out of range for rank {t.ndim}")
    return t.sum(axis=axis)
