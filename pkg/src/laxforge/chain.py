"""Finite periodic spin chains: monodromy, transfer, and charge extraction.

The transfer matrix is contracted site by site in the auxiliary space (an
MPO-style sweep), which keeps the largest materialized object at the size of
the physical space.  Charges follow the logarithmic-derivative definition
``q_k = d^{k-2}/du^{k-2} (t^{-1} t') |_{u=0}``, evaluated on exact jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .jets import JetAlgebra, JetScalar
from .rmatrix import EMPTY, RModel, as_jet, coproduct_r, eval_r
from .tensor_core import TensorOperator, identity_op


@dataclass(frozen=True)
class ChainSpec:
    L: int
    site_dim: int = 2
    inhomogeneities: tuple = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("chain length must be >= 1")
        if self.inhomogeneities is None:
            object.__setattr__(self, "inhomogeneities", (0,) * self.L)
        if len(self.inhomogeneities) != self.L:
            raise ValueError("need one inhomogeneity per site")


def monodromy(model: RModel, chain: ChainSpec, u) -> TensorOperator:
    """T_a(u) = L_{a,L}(u) ... L_{a,1}(u); auxiliary leg first (leg 1)."""
    u = as_jet(u)
    alg = u.algebra
    total = chain.L + 1
    out = identity_op(total, model.site_dim, alg)
    for n in range(chain.L, 0, -1):
        v = as_jet(chain.inhomogeneities[n - 1], alg)
        if v.algebra != alg:
            v = v.lift(alg)
        out = out * eval_r(model, u, v).embed([1, n + 1], total)
    return out


def _aux_blocks(op: TensorOperator, aux_legs: int):
    """Split an (aux+1)-leg operator into {(alpha, beta): 1-leg operator}."""
    d = op.site_dim
    blocks: dict = {}
    for (r, c), v in op.iter_entries():
        alpha, p = divmod(r, d)
        beta, q = divmod(c, d)
        blocks.setdefault((alpha, beta), {}).setdefault(p, {})[q] = v
    return {
        ab: TensorOperator(1, d, op.algebra, rows)
        for ab, rows in blocks.items()
    }


def mpo_transfer(lax_ops, aux_legs: int) -> TensorOperator:
    """Trace over the auxiliary legs of the ordered product of Lax operators.

    ``lax_ops[n-1]`` acts on (aux group, site n) and is given on
    ``aux_legs + 1`` legs, auxiliary legs first.  Only the physical-space
    operator is materialized.
    """
    partial = None
    for x in lax_ops:
        blocks = _aux_blocks(x, aux_legs)
        if partial is None:
            partial = blocks
            continue
        new: dict = {}
        for (a, b), xop in blocks.items():
            for (b2, g), mop in partial.items():
                if b2 != b:
                    continue
                term = mop.kron(xop)
                prev = new.get((a, g))
                new[(a, g)] = term if prev is None else prev + term
        partial = new
    d = lax_ops[0].site_dim
    legs = len(lax_ops)
    out = TensorOperator.zeros(legs, d, lax_ops[0].algebra)
    for (a, g), mop in partial.items():
        if a == g:
            out = out + mop
    return out


def transfer(model: RModel, chain: ChainSpec, u) -> TensorOperator:
    """t(u) = tr_a T_a(u) on the L physical legs."""
    u = as_jet(u)
    alg = u.algebra
    lax = []
    for n in range(1, chain.L + 1):
        v = as_jet(chain.inhomogeneities[n - 1], alg)
        if v.algebra != alg:
            v = v.lift(alg)
        lax.append(eval_r(model, u, v))
    return mpo_transfer(lax, 1)


def charges_from_transfer_jet(t: TensorOperator, gen: str, k_values):
    """q_k = (k-2)! [gen^{k-2}] (t^{-1} dt/dgen), projected off ``gen``."""
    g = t.inverse() * t.dgen(gen)
    reduced = t.algebra.without(gen)
    out = {}
    for k in k_values:
        out[k] = g.coeff_operator(gen, k - 2).scale(
            math.factorial(k - 2)
        ).project(reduced)
    return out


def extract_charge(model: RModel, chain: ChainSpec, k: int) -> TensorOperator:
    """The k-th charge from the transfer-matrix logarithmic derivative."""
    if k < 2:
        raise ValueError("charges start at k = 2")
    alg = EMPTY.extended("_u", k)
    u = JetScalar.nilpotent(alg, "_u")
    t = transfer(model, chain, u)
    return charges_from_transfer_jet(t, "_u", [k])[k]


def global_charge(density: TensorOperator, L: int) -> TensorOperator:
    """Periodic sum of the density over a length-L chain (indices mod L)."""
    k = density.legs
    if L < k:
        raise ValueError(f"chain of length {L} cannot host a range-{k} density")
    out = TensorOperator.zeros(L, density.site_dim, density.algebra)
    for n in range(L):
        positions = [((n + i) % L) + 1 for i in range(k)]
        out = out + density.embed(positions, L)
    return out


def boost_window(
    density: TensorOperator, n0: int, n1: int, window_chain: ChainSpec
) -> TensorOperator:
    """Finite open-window truncation of the boost sum ``sum_n n q_n``.

    The window occupies absolute sites ``n0..n1`` mapped to legs ``1..L``;
    embeddings never wrap.  An inverted window is empty (zero operator).
    """
    k = density.legs
    L = window_chain.L
    out = TensorOperator.zeros(L, density.site_dim, density.algebra)
    if n1 < n0:
        return out
    if n1 - n0 + 1 != L:
        raise ValueError("window does not match the chain length")
    if L < k:
        raise ValueError("window too short for the density range")
    for n in range(n0, n1 - k + 2):
        pos = [n - n0 + 1 + i for i in range(k)]
        out = out + density.embed(pos, L).scale(n)
    return out


def bilocal_window(
    density_a: TensorOperator,
    density_b: TensorOperator,
    k: int,
    l: int,
    window_chain: ChainSpec,
) -> TensorOperator:
    """Open-window truncation of ``sum_{n<=m} qA_{n+l-k} qB_m``.

    ``density_a`` has range k and sits at ``n+l-k .. n+l-1``; ``density_b``
    has range l and sits at ``m .. m+l-1``.  Terms not fitting the window
    are dropped (they would require sites outside the open chain).
    """
    if density_a.legs != k or density_b.legs != l:
        raise ValueError("densities must match the stated ranges")
    L = window_chain.L
    if L < l:
        raise ValueError("window too short for the density range")
    out = TensorOperator.zeros(L, density_a.site_dim, density_a.algebra)
    for n in range(1, L + 1):
        if n + l - k < 1 or n + l - 1 > L:
            continue
        a = density_a.embed([n + l - k + i for i in range(k)], L)
        for m in range(n, L - l + 2):
            b = density_b.embed([m + i for i in range(l)], L)
            out = out + a * b
    return out


def window_monodromy(
    model: RModel, window_chain: ChainSpec, aux_params
) -> TensorOperator:
    """Open-window monodromy with an auxiliary leg group appended last."""
    L = window_chain.L
    aux = [(L + 1 + i, as_jet(p)) for i, p in enumerate(aux_params)]
    frame = list(range(1, L + 1)) + [l for l, _ in aux]
    sites = [(n, as_jet(window_chain.inhomogeneities[n - 1])) for n in range(1, L + 1)]
    return coproduct_r(model, aux, sites, frame)
