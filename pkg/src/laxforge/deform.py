"""First-order long-range deformations: twists, deformed Lax and R, associator.

Everything works at the level of evaluated matrices.  An
:class:`EvaluatedTuple` is an ordered pair of leg groups: underlined legs
carrying spectral parameters and trivial legs at parameter zero.  Products of
tuples follow the double-crossed rule: the trivial legs of the left factor
braid past the underlined legs of the right factor with an R-conjugation.

The first-order twist ``gamma^(1)`` of each deformation family is evaluated
on standard tuples; the deformed bilinear form is then

    r^gamma(x, y) = R + lam * (gamma^(1)(y, x) R - R gamma^(1)(x, y)),

which specializes to the deformed Lax operator (trivial right tuple) and the
deformed R-matrix (generic right tuple).  With ``lam^2 = 0`` all first-order
identities are exact statements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import charges_from_transfer_jet, mpo_transfer
from .charge_engine import PLAIN, TILDE, conjecture_density, reduced_q
from .jets import LAMBDA, JetAlgebra, JetScalar
from .rmatrix import EMPTY, RModel, as_jet, coproduct_r
from .tensor_core import TensorOperator, identity_op


@dataclass(frozen=True)
class Local:
    k: int
    m: TensorOperator  # the local operator density, k legs

    def __post_init__(self):
        if self.m.legs != self.k:
            raise ValueError("local operator must act on exactly k legs")
        if self.k < 2:
            raise ValueError("local deformations need k >= 2")

    @property
    def trivial_aux(self) -> int:
        return self.k - 1


@dataclass(frozen=True)
class Boost:
    k: int

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("boost deformations need k >= 3")

    @property
    def trivial_aux(self) -> int:
        return self.k - 2


@dataclass(frozen=True)
class Bilocal:
    k: int
    l: int

    def __post_init__(self):
        if not 2 <= self.k < self.l:
            raise ValueError("bilocal deformations need 2 <= k < l")

    @property
    def trivial_aux(self) -> int:
        return self.l - 1


@dataclass(frozen=True)
class EvaluatedTuple:
    """Underlined legs (id, parameter) followed by trivial legs (ids)."""

    underlined: tuple = ()
    trivial: tuple = ()

    def __post_init__(self):
        ids = self.leg_ids()
        if len(set(ids)) != len(ids):
            raise ValueError("leg ids must be unique within a tuple")

    def leg_ids(self):
        return [l for l, _ in self.underlined] + list(self.trivial)


def tuple_product(model: RModel, x: EvaluatedTuple, y: EvaluatedTuple, frame):
    """Double-crossed product: standard form plus the braiding conjugator.

    ``x * y = C^{-1} [std] C`` with ``C`` the coproduct R-matrix between the
    trivial legs of ``x`` and the underlined legs of ``y`` (identity if either
    group is empty).
    """
    std = EvaluatedTuple(
        tuple(x.underlined) + tuple(y.underlined),
        tuple(x.trivial) + tuple(y.trivial),
    )
    conj = None
    if x.trivial and y.underlined:
        conj = coproduct_r(
            model, [(t, 0) for t in x.trivial], y.underlined, frame
        )
    return std, conj


def _group(legs, params=None):
    if params is None:
        return [(l, 0) for l in legs]
    return list(zip(legs, params))


def twist_gamma1(
    model: RModel,
    family,
    left: EvaluatedTuple,
    right: EvaluatedTuple,
    frame=None,
    algebra: JetAlgebra = None,
) -> TensorOperator:
    """First-order twist element on a pair of standard tuples."""
    if frame is None:
        frame = left.leg_ids() + right.leg_ids()
    frame = list(frame)
    if algebra is None:
        algebra = _infer_algebra([left, right])
    combined = list(left.trivial) + list(right.trivial)
    n_left = len(left.trivial)
    total = len(combined)
    zero = TensorOperator.zeros(len(frame), model.site_dim, algebra)

    def triv(i, j):
        """Trivial legs i..j of the combined numbering as a zero-param group."""
        return [(combined[t - 1], 0) for t in range(i, j + 1) if 1 <= t <= total]

    abar = list(left.underlined)
    bbar = list(right.underlined)

    if isinstance(family, Local):
        if not bbar:
            return zero
        k = family.k
        out = zero
        right_conj = coproduct_r(
            model, bbar, triv(n_left + 1, total), frame, algebra
        )
        left_conj = coproduct_r(model, triv(1, n_left), bbar, frame, algebra)
        right_i, left_i = right_conj.inverse(), left_conj.inverse()
        for n in range(1, n_left + 1):
            if n + k - 1 > total:
                continue  # overflow: the density leaves the tuple
            m_emb = family.m.lift(algebra).embed(
                [frame.index(combined[n - 1 + i]) + 1 for i in range(k)],
                len(frame),
            )
            out = out + right_i * m_emb * right_conj - left_i * m_emb * left_conj
        return out

    if isinstance(family, Boost):
        k = family.k
        out = zero
        for n in range(1, n_left + 1):
            rq = reduced_q(
                model,
                k,
                PLAIN,
                triv(n, n),
                bbar,
                triv(n + 1, total),
                frame,
                algebra,
            )
            if rq.is_zero():
                continue
            conj = coproduct_r(model, triv(n + 1, n_left), bbar, frame, algebra)
            out = out + conj.inverse() * rq * conj
        return out

    if isinstance(family, Bilocal):
        blocks = _bilocal_blocks(
            model, family, abar, bbar, combined, n_left, frame, algebra
        )
        if not bbar:
            return blocks
        outer = coproduct_r(model, bbar, triv(n_left + 1, total), frame, algebra)
        return outer.inverse() * blocks * outer

    raise TypeError(f"unknown deformation family {family!r}")


def _bilocal_blocks(model, family, abar, bbar, combined, n_left, frame, algebra):
    """The four summed blocks of the bilocal twist on the reordered argument."""
    k, l = family.k, family.l
    total = len(combined)
    zero = TensorOperator.zeros(len(frame), model.site_dim, algebra)

    def triv(i, j):
        return [(combined[t - 1], 0) for t in range(i, j + 1) if 1 <= t <= total]

    qk_t = _density(model, k, TILDE, algebra)
    ql_p = _density(model, l, PLAIN, algebra)

    def dens(op, i):
        """Density ``op`` at combined trivial positions i .. i+range-1."""
        return op.embed(
            [frame.index(combined[i - 1 + t]) + 1 for t in range(op.legs)],
            len(frame),
        )

    out = zero

    # block 1: boundary product of two reduced densities
    if n_left + l - 1 <= total and n_left + 2 - l >= 1 and abar and bbar:
        ra = coproduct_r(model, abar, triv(1, n_left + l - 2), frame, algebra)
        rqt = reduced_q(
            model, k, TILDE, triv(1, n_left + l - 2), abar,
            triv(n_left + l - 1, n_left + l - 1), frame, algebra,
        )
        rb = coproduct_r(model, bbar, triv(n_left + 3 - l, total), frame, algebra)
        rq = reduced_q(
            model, l, PLAIN, triv(n_left + 2 - l, n_left + 2 - l), bbar,
            triv(n_left + 3 - l, total), frame, algebra,
        )
        out = out + (ra.inverse() * rqt * ra) * (rb * rq * rb.inverse())

    ra_all = (
        coproduct_r(model, abar, triv(1, total), frame, algebra) if abar else None
    )
    rb_all = (
        coproduct_r(model, bbar, triv(1, total), frame, algebra) if bbar else None
    )

    # block 2: commutator cross terms
    if abar and bbar:
        ra_i, rb_i = ra_all.inverse(), rb_all.inverse()
        for n in range(n_left + 2, n_left + l):
            if n - k + 1 < 1 or n > total:
                continue
            qt = dens(qk_t, n - k + 1)
            ca = qt * ra_all - ra_all * qt
            for m in range(max(1, n_left + 2 - l), n - l + 1):
                if m + l - 1 > total:
                    continue
                qp = dens(ql_p, m)
                cb = qp * rb_all - rb_all * qp
                out = out + ra_i * ca * cb * rb_i

    # block 3: left-of-split tilde densities against reduced plain densities
    if bbar:
        for n in range(1, n_left + 1):
            if n + l - k < 1 or n + l - 1 > total:
                continue
            qt = dens(qk_t, n + l - k)
            rbn = coproduct_r(model, bbar, triv(n + 1, total), frame, algebra)
            rq = reduced_q(
                model, l, PLAIN, triv(n, n), bbar, triv(n + 1, total), frame,
                algebra,
            )
            head = (
                ra_all.inverse() * qt * ra_all if abar else qt
            )
            out = out + head * rbn * rq * rbn.inverse()

    # block 4: reduced tilde densities against right-of-split plain densities
    if abar:
        for n in range(n_left + 1, total + 1):
            if n - l + 1 < 1:
                continue
            ra = coproduct_r(model, abar, triv(1, n - 1), frame, algebra)
            rqt = reduced_q(
                model, k, TILDE, triv(1, n - 1), abar, triv(n, n), frame, algebra
            )
            qp = dens(ql_p, n - l + 1)
            tail = rb_all * qp * rb_all.inverse() if bbar else qp
            out = out + ra.inverse() * rqt * ra * tail
    return out


_DENSITY_CACHE: dict = {}


def _density(model, k, variant, algebra):
    key = (model.name, k, variant)
    if key not in _DENSITY_CACHE:
        plain, tilde = conjecture_density(model, k)
        _DENSITY_CACHE[(model.name, k, PLAIN)] = plain
        _DENSITY_CACHE[(model.name, k, TILDE)] = tilde
    op = _DENSITY_CACHE[key]
    return op.lift(algebra) if op.algebra != algebra else op


def _infer_algebra(tuples) -> JetAlgebra:
    for t in tuples:
        for _, p in t.underlined:
            if isinstance(p, JetScalar):
                return p.algebra
    return EMPTY


# -- deformed structures -------------------------------------------------------


def lambda_algebra(base: JetAlgebra = EMPTY) -> JetAlgebra:
    return base if LAMBDA in base.names else base.extended(LAMBDA, 2)


def twisted_rform(
    model: RModel,
    family,
    x: EvaluatedTuple,
    y: EvaluatedTuple,
    frame=None,
    algebra: JetAlgebra = None,
) -> TensorOperator:
    """r^gamma(x, y) to first order in the deformation parameter."""
    if frame is None:
        frame = x.leg_ids() + y.leg_ids()
    frame = list(frame)
    if algebra is None:
        algebra = lambda_algebra(_infer_algebra([x, y]))
    lam = JetScalar.nilpotent(algebra, LAMBDA)
    x_l = _lift_tuple(x, algebra)
    y_l = _lift_tuple(y, algebra)
    r0 = coproduct_r(
        model,
        list(x_l.underlined) + _group(x_l.trivial),
        list(y_l.underlined) + _group(y_l.trivial),
        frame,
        algebra,
    )
    g_xy = twist_gamma1(model, family, x_l, y_l, frame, algebra)
    g_yx = twist_gamma1(model, family, y_l, x_l, frame, algebra)
    return r0 + (g_yx * r0 - r0 * g_xy).scale(lam)


def _lift_tuple(t: EvaluatedTuple, algebra: JetAlgebra) -> EvaluatedTuple:
    underlined = tuple(
        (l, as_jet(p).lift(algebra) if not isinstance(p, JetScalar) else p.lift(algebra))
        for l, p in t.underlined
    )
    return EvaluatedTuple(underlined, tuple(t.trivial))


def aux_tuple(family, u, first_leg: int = 1) -> EvaluatedTuple:
    """The enlarged auxiliary tuple: one underlined leg plus trivial fill."""
    b = family.trivial_aux
    return EvaluatedTuple(
        ((first_leg, u),),
        tuple(range(first_leg + 1, first_leg + 1 + b)),
    )


def deformed_lax(
    model: RModel, family, u, algebra: JetAlgebra = None
) -> TensorOperator:
    """Deformed Lax operator on legs (underlined aux, trivial aux .., site)."""
    if algebra is None:
        algebra = lambda_algebra(
            u.algebra if isinstance(u, JetScalar) else EMPTY
        )
    aux = aux_tuple(family, u)
    phys = EvaluatedTuple((), (len(aux.leg_ids()) + 1,))
    return twisted_rform(model, family, aux, phys, algebra=algebra)


def deformed_rmatrix(
    model: RModel, family, u, v, algebra: JetAlgebra = None
) -> TensorOperator:
    """Deformed R-matrix on two enlarged auxiliary groups."""
    if algebra is None:
        algebra = lambda_algebra(
            u.algebra if isinstance(u, JetScalar) else EMPTY
        )
    width = family.trivial_aux + 1
    g1 = aux_tuple(family, u, 1)
    g2 = aux_tuple(family, v, width + 1)
    return twisted_rform(model, family, g1, g2, algebra=algebra)


def drinfeld_phi1(
    model: RModel,
    family,
    a: EvaluatedTuple,
    b: EvaluatedTuple,
    c: EvaluatedTuple,
    frame=None,
) -> TensorOperator:
    """First-order Drinfeld associator on a triple of tuples.

    phi^(1)(a,b,c) = eps(a) gamma(b,c) + gamma(a, bc) - gamma(ab, c)
                     - gamma(a,b) eps(c), with counit = identity.
    """
    if frame is None:
        frame = a.leg_ids() + b.leg_ids() + c.leg_ids()
    frame = list(frame)
    algebra = _infer_algebra([a, b, c])
    t1 = twist_gamma1(model, family, b, c, frame, algebra)
    bc, conj_bc = tuple_product(model, b, c, frame)
    t2 = twist_gamma1(model, family, a, bc, frame, algebra)
    if conj_bc is not None:
        t2 = conj_bc.inverse() * t2 * conj_bc
    ab, conj_ab = tuple_product(model, a, b, frame)
    t3 = twist_gamma1(model, family, ab, c, frame, algebra)
    if conj_ab is not None:
        t3 = conj_ab.inverse() * t3 * conj_ab
    t4 = twist_gamma1(model, family, a, b, frame, algebra)
    return t1 + t2 - t3 - t4


# -- verification -------------------------------------------------------------


def verify_rll(model: RModel, family, u, v):
    """R^g(u,v) L^g(u) L^g(v) - L^g(v) L^g(u) R^g(u,v), exactly, lam^2 = 0."""
    width = family.trivial_aux + 1
    algebra = lambda_algebra(_infer_scalar_algebra(u, v))
    total = 2 * width + 1
    frame = list(range(1, total + 1))
    g1 = aux_tuple(family, u, 1)
    g2 = aux_tuple(family, v, width + 1)
    phys = EvaluatedTuple((), (total,))
    r = twisted_rform(model, family, g1, g2, frame, algebra)
    l1 = twisted_rform(model, family, g1, phys, frame, algebra)
    l2 = twisted_rform(model, family, g2, phys, frame, algebra)
    resid = r * l1 * l2 - l2 * l1 * r
    return resid.is_zero(), resid


def verify_deformed_ybe(model: RModel, family, u, v, w):
    width = family.trivial_aux + 1
    algebra = lambda_algebra(_infer_scalar_algebra(u, v, w))
    total = 3 * width
    frame = list(range(1, total + 1))
    g1 = aux_tuple(family, u, 1)
    g2 = aux_tuple(family, v, width + 1)
    g3 = aux_tuple(family, w, 2 * width + 1)
    r12 = twisted_rform(model, family, g1, g2, frame, algebra)
    r13 = twisted_rform(model, family, g1, g3, frame, algebra)
    r23 = twisted_rform(model, family, g2, g3, frame, algebra)
    resid = r12 * r13 * r23 - r23 * r13 * r12
    return resid.is_zero(), resid


def _infer_scalar_algebra(*vals) -> JetAlgebra:
    for v in vals:
        if isinstance(v, JetScalar):
            return v.algebra
    return EMPTY


def deformed_monodromy(
    model: RModel, family, L: int, u, algebra: JetAlgebra = None
) -> TensorOperator:
    """Product of deformed Lax operators; aux legs first, then sites 1..L."""
    if algebra is None:
        algebra = lambda_algebra(_infer_scalar_algebra(u))
    width = family.trivial_aux + 1
    lax = deformed_lax(model, family, u, algebra)
    total = width + L
    out = identity_op(total, model.site_dim, algebra)
    for n in range(L, 0, -1):
        out = out * lax.embed(list(range(1, width + 1)) + [width + n], total)
    return out


def deformed_transfer(
    model: RModel, family, L: int, u, algebra: JetAlgebra = None
) -> TensorOperator:
    if algebra is None:
        algebra = lambda_algebra(_infer_scalar_algebra(u))
    width = family.trivial_aux + 1
    lax = deformed_lax(model, family, u, algebra)
    return mpo_transfer([lax] * L, width)


def family_range(family) -> int:
    if isinstance(family, Local):
        return family.k
    if isinstance(family, Boost):
        return family.k + 1
    return family.k + family.l - 1


def deformed_transfer_and_charges(model: RModel, family, L: int, k_max: int):
    """Charges Q_k(lam), k = 2..k_max, of the deformed transfer matrix."""
    if L < family_range(family):
        raise ValueError(
            f"chain of length {L} cannot host the range-{family_range(family)} deformation"
        )
    algebra = lambda_algebra(EMPTY.extended("_u", k_max))
    u = JetScalar.nilpotent(algebra, "_u")
    t = deformed_transfer(model, family, L, u, algebra)
    return charges_from_transfer_jet(t, "_u", range(2, k_max + 1))
