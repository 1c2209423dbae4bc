"""Magnon states and eigenchecks for the boost-deformed XXX chain.

This is the only module that leaves exact rational arithmetic: Bethe roots
are algebraic irrationals, so states and eigenvalue residuals are computed
with high-precision complex scalars (mpmath) at a configurable number of
digits.  All operator ingredients reuse the exact machinery with a complex
coefficient field; nothing is ever evaluated in double precision.

Conventions: the local space is C^2 with basis index 0 the reference
("down") spin; the vacuum is the index-0 basis vector of the chain, the
creation operator is the (1,2) auxiliary block of the monodromy matrix, and
the rapidity map is u = 1/2 + i*uhat with uhat the half-integer-shifted
rapidity entering the Bethe equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

from .chain import ChainSpec, global_charge, monodromy
from .charge_engine import PLAIN, algebraic_q, conjecture_density
from .deform import Boost, EvaluatedTuple, lambda_algebra, twisted_rform
from .jets import COMPLEX, LAMBDA, JetAlgebra, JetScalar
from .rmatrix import EMPTY, RModel, as_jet, coproduct_r, eval_r
from .tensor_core import TensorOperator, identity_op, permutation_op


@dataclass(frozen=True)
class BetheRoots:
    L: int
    N: int
    roots: tuple  # u-convention rapidities, mpmath.mpc
    precision: int

    @property
    def uhats(self):
        # u = 1/2 + i*uhat  <=>  uhat = i/2 - i u
        return tuple(mpmath.mpc(0, 0.5) - mpmath.mpc(0, 1) * u for u in self.roots)


@dataclass
class MagnonState:
    L: int
    roots: BetheRoots
    order0: dict  # basis index -> mpc
    order1: dict


class BetheSolveError(RuntimeError):
    pass


def bethe_residuals(L: int, uhats) -> list:
    out = []
    for n, un in enumerate(uhats):
        lhs = ((un + mpmath.mpc(0, 0.5)) / (un - mpmath.mpc(0, 0.5))) ** L
        rhs = mpmath.mpc(1)
        for m, um in enumerate(uhats):
            if m == n:
                continue
            rhs *= (un - um + 1j) / (un - um - 1j)
        out.append(abs(lhs - rhs))
    return out


def bethe_solve(L: int, N: int, precision: int = 40, modes=None) -> BetheRoots:
    """Roots for N = 0, 1 (closed form) or N = 2 (damped Newton).

    ``modes`` selects the free-magnon momentum numbers (defaults 1, then 2).
    """
    if precision < 30:
        raise ValueError("precision must be at least 30 digits")
    with mpmath.workdps(precision):
        if N == 0:
            return BetheRoots(L, 0, (), precision)
        if modes is None:
            modes = (1,) if N == 1 else (1, 3)
        if N == 1:
            p = 2 * mpmath.pi * modes[0] / L
            uhat = mpmath.cot(p / 2) / 2
            roots = (mpmath.mpc(0.5) + mpmath.mpc(0, 1) * uhat,)
            rr = BetheRoots(L, 1, roots, precision)
            _enforce_residual(rr)
            return rr
        if N != 2:
            raise BetheSolveError("root solving implemented for N <= 2")
        uh = [mpmath.cot(mpmath.pi * m / L) / 2 for m in modes]
        # nudge off the symmetric manifold; Newton is damped below
        uh = [mpmath.mpc(uh[0] + mpmath.mpf(13) / 100), mpmath.mpc(uh[1] - mpmath.mpf(7) / 100)]

        def eqs(x):
            # polynomial form of the Bethe equations: no branch ambiguity
            out = []
            for n in range(2):
                other = x[1 - n]
                lhs = (x[n] + mpmath.mpc(0, 0.5)) ** L * (x[n] - other - 1j)
                rhs = (x[n] - mpmath.mpc(0, 0.5)) ** L * (x[n] - other + 1j)
                out.append(lhs - rhs)
            return out

        x = [mpmath.mpc(v) for v in uh]
        h = mpmath.mpf(10) ** (-precision // 2)
        for _ in range(200):
            f = eqs(x)
            norm = max(abs(v) for v in f)
            if norm < mpmath.mpf(10) ** (-precision + 5):
                break
            jac = mpmath.matrix(2, 2)
            for j in range(2):
                xp = list(x)
                xp[j] = xp[j] + h
                fp = eqs(xp)
                for i in range(2):
                    jac[i, j] = (fp[i] - f[i]) / h
            rhsv = mpmath.matrix([-f[0], -f[1]])
            try:
                delta = mpmath.lu_solve(jac, rhsv)
            except ZeroDivisionError as exc:
                raise BetheSolveError(f"singular Jacobian: {exc}") from exc
            step = 1
            for _ in range(40):
                trial = [x[i] + step * delta[i] for i in range(2)]
                if max(abs(v) for v in eqs(trial)) < norm:
                    x = trial
                    break
                step /= 2
            else:
                raise BetheSolveError(f"Newton stalled at residual {norm}")
        else:
            raise BetheSolveError(f"no convergence; last residual {norm}")
        if abs(x[0] - x[1]) < mpmath.mpf(10) ** (-precision // 2):
            raise BetheSolveError("roots collided; pick different modes")
        roots = tuple(mpmath.mpc(0.5) + mpmath.mpc(0, 1) * v for v in x)
        rr = BetheRoots(L, 2, roots, precision)
        _enforce_residual(rr)
        return rr


def _enforce_residual(roots: BetheRoots):
    res = bethe_residuals(roots.L, roots.uhats)
    bound = mpmath.mpf(10) ** (-roots.precision // 2)
    if any(r >= bound for r in res):
        raise BetheSolveError(f"Bethe residuals {res} exceed {bound}")


# -- the xi operator -----------------------------------------------------------


def xi_apply(
    model: RModel,
    chain: ChainSpec,
    g: TensorOperator,
    n: int,
    m: int,
    site_legs=None,
) -> TensorOperator:
    """xi_{n,m}(g) = (-D_m^2 g + D_n D_m g - [q2_{nm}, g] q2_{nm}) at v = 0.

    ``g`` carries one nilpotent direction ``v{i}`` (order >= 3 on sites n, m)
    per chain site; ``site_legs`` maps chain sites to legs of ``g``.
    """
    if n == m:
        raise ValueError("xi needs two distinct sites")
    if site_legs is None:
        site_legs = list(range(1, chain.L + 1))
    alg = g.algebra
    vnames = [f"v{i}" for i in range(1, chain.L + 1)]
    for site in (n, m):
        if alg.order_of(vnames[site - 1]) < 3:
            raise ValueError(f"site {site} needs a nilpotent of order >= 3")

    def pick(op, powers: dict) -> TensorOperator:
        constraints = {vn: powers.get(vn, 0) for vn in vnames}
        scale = 1
        for p in constraints.values():
            scale *= math.factorial(p)

        def entry(jet: JetScalar) -> JetScalar:
            out = jet
            for gen, p in constraints.items():
                out = out.coeff_jet(gen, p)
            return out * scale

        return op.map_entries(entry)

    vm, vn = vnames[m - 1], vnames[n - 1]
    d2 = pick(g, {vm: 2})
    dnm = pick(g, {vn: 1, vm: 1})
    g0 = pick(g, {})
    q2 = conjecture_density(model, 2)[0].lift(alg)
    q2 = q2.embed([site_legs[n - 1], site_legs[m - 1]], g.legs)
    return -d2 + dnm - q2.commutator(g0) * q2


def site_jet_chain(L: int, base: JetAlgebra = EMPTY, order: int = 3):
    """A chain whose inhomogeneities are per-site nilpotents v1..vL."""
    alg = base
    for i in range(1, L + 1):
        alg = alg.extended(f"v{i}", order)
    inhom = tuple(JetScalar.nilpotent(alg, f"v{i}") for i in range(1, L + 1))
    return ChainSpec(L, 2, inhom), alg


# -- closed-form first-order monodromy ----------------------------------------


def solve_boundary_m(model: RModel, u) -> TensorOperator:
    """The two-leg matrix m with [m_{a b}, R_{(a b)3}] equal to the boundary
    combination of second charge densities; any solution of the linear system
    works, the free coordinates are set to zero."""
    u = as_jet(u)
    alg = u.algebra
    frame = [1, 2, 3]
    d = model.site_dim

    def q2(first, second):
        return algebraic_q(model, 2, PLAIN, [first], [second], frame)

    r13 = coproduct_r(model, [(1, u)], [(3, 0)], frame)
    r12 = coproduct_r(model, [(1, u)], [(2, 0)], frame)
    p23 = permutation_op(3, d, 2, 3, alg)
    lhs = q2((3, 0), (1, u)) * r13 * q2((3, 0), (2, 0)) * p23 - (
        r12.inverse()
        * q2((3, 0), (2, 0))
        * q2((2, 0), (1, u))
        * r12
        * r13
        * p23
    )
    r123 = coproduct_r(model, [(1, u), (2, 0)], [(3, 0)], frame)
    # linear system in the d^4 entries of m
    n2 = d * d
    n3 = d**3
    cols = []
    for a in range(n2):
        for b in range(n2):
            e = TensorOperator.from_entries(2, d, alg, [((a, b), 1)])
            cols.append(e.embed([1, 2], 3).commutator(r123))
    mat = [[col.entry(r, c) for col in cols] for r in range(n3) for c in range(n3)]
    rhs = [lhs.entry(r, c) for r in range(n3) for c in range(n3)]
    sol = _solve_linear_system(mat, rhs, alg)
    entries = []
    for a in range(n2):
        for b in range(n2):
            entries.append(((a, b), sol[a * n2 + b]))
    return TensorOperator.from_entries(2, d, alg, entries)


def _solve_linear_system(mat, rhs, alg: JetAlgebra):
    """Exact Gaussian elimination; free variables set to zero.

    Entries are jets; for our uses they are scalars (no nilpotent content),
    so we work on constant terms.
    """
    rows = [
        [e.constant_term() for e in row] + [rhs[i].constant_term()]
        for i, row in enumerate(mat)
    ]
    ncols = len(mat[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for rr in range(r, len(rows)):
            if rows[rr][c] != 0:
                piv = rr
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][c]
        rows[r] = [x / pv for x in rows[r]]
        for rr in range(len(rows)):
            if rr != r and rows[rr][c] != 0:
                f = rows[rr][c]
                rows[rr] = [x - f * y for x, y in zip(rows[rr], rows[r])]
        pivots.append(c)
        r += 1
    for rr in range(r, len(rows)):
        if rows[rr][-1] != 0:
            raise ValueError("boundary-matrix system is inconsistent")
    sol = [JetScalar.const(alg, 0)] * ncols
    for i, c in enumerate(pivots):
        sol[c] = JetScalar.const(alg, rows[i][-1])
    return sol


def theta_monodromy_first_order(model: RModel, L: int, u):
    """First-order part of the doubled monodromy in closed xi form.

    Legs: underlined auxiliary 1, trivial auxiliary 2, sites 3..L+2.
    Returns ``(first_order, zeroth_order, m)``; exact for rational ``u``.
    """
    if L < 2:
        raise ValueError("the closed form needs L >= 2")
    chain, alg = site_jet_chain(L)
    u = as_jet(u).lift(alg)
    total = L + 2
    t0a = monodromy(model, chain, u).embed([1] + list(range(3, total + 1)), total)
    t0b = identity_op(total, model.site_dim, alg)
    for n in range(L, 0, -1):
        t0b = t0b * permutation_op(total, model.site_dim, 2, n + 2, alg)
    site_legs = list(range(3, total + 1))

    def xi(nn, mm, op):
        return xi_apply(model, chain, op, nn, mm, site_legs)

    first = TensorOperator.zeros(total, model.site_dim, alg)
    for n in range(1, L):
        first = first + xi(n, n + 1, t0a) * t0b
    rab = eval_r(model, u, JetScalar.const(alg, 0)).embed([1, 2], total)
    braided = rab.inverse() * (t0b * xi(L - 1, L, t0a)) * rab
    first = first + braided
    m = solve_boundary_m(model, u.project(EMPTY) if not u.algebra.generators else _const_reproject(u))
    m_l = m.lift(alg) if m.algebra != alg else m
    zero_v = {f"v{i}": 0 for i in range(1, L + 1)}
    t0a_flat = _set_v_zero(t0a, zero_v)
    t0ab = t0a_flat * t0b
    first = first + m_l.embed([1, 2], total).commutator(t0ab)
    # project the v-directions away: the result is v-independent
    out = _set_v_zero(first, zero_v)
    return out.project(_strip_v(alg, L)), t0ab.project(_strip_v(alg, L)), m


def _const_reproject(u: JetScalar) -> JetScalar:
    """Constant rational value of a lifted parameter, over the empty algebra."""
    return JetScalar.const(EMPTY, u.constant_term())


def _set_v_zero(op: TensorOperator, zero_v: dict) -> TensorOperator:
    def entry(jet: JetScalar) -> JetScalar:
        out = jet
        for gen, p in zero_v.items():
            out = out.coeff_jet(gen, p)
        return out

    return op.map_entries(entry)


def _strip_v(alg: JetAlgebra, L: int) -> JetAlgebra:
    out = alg
    for i in range(1, L + 1):
        out = out.without(f"v{i}")
    return out


# -- magnon states --------------------------------------------------------------


def _complex_lambda_algebra() -> JetAlgebra:
    return JetAlgebra(((LAMBDA, 2),), COMPLEX)


def f_factors(roots, sign: int):
    """The boundary weights f_i^{+-}; index 0 is the product over all roots."""
    out = {0: mpmath.mpc(1)}
    for u in roots:
        out[0] *= u / (u + sign)
    n = len(roots)
    for i in range(1, n + 1):
        acc = mpmath.mpc(sign) / roots[i - 1]
        for j in range(i - 1, n):
            acc *= roots[j] / (roots[j] + sign)
        out[i] = acc
    return out


def first_order_root_shifts(L: int, uhats) -> list:
    """First-order on-shell rapidity shifts of the deformed model.

    The boost deformation renormalizes the magnon dispersion; the deformed
    Bethe system keeps the XXX scattering factor but replaces the momentum
    weights by ``uhat +- i/2 - lam / (uhat +- i/2)``.  Linearizing around the
    undeformed roots gives the shifts; for one magnon this reduces to
    ``2 sin p = 2 uhat / (uhat^2 + 1/4)``.  The shifted roots enter the
    state as ``u_n + lam * i * shift_n``.
    """
    n = len(uhats)
    if n == 0:
        return []
    half = mpmath.mpc(0, 1) / 2

    def system(x, lam):
        out = []
        for i in range(n):
            ap = x[i] + half - lam / (x[i] + half)
            am = x[i] - half - lam / (x[i] - half)
            lhs, rhs = ap**L, am**L
            for j in range(n):
                if j == i:
                    continue
                lhs *= x[i] - x[j] - 1j
                rhs *= x[i] - x[j] + 1j
            out.append(lhs - rhs)
        return out

    with mpmath.workprec(mpmath.mp.prec * 2):
        x0 = [mpmath.mpc(u) for u in uhats]
        h = mpmath.mpf(2) ** (-mpmath.mp.prec // 2)
        f0 = system(x0, 0)
        jac = mpmath.matrix(n, n)
        for j in range(n):
            xp = list(x0)
            xp[j] = xp[j] + h
            fp = system(xp, 0)
            for i in range(n):
                jac[i, j] = (fp[i] - f0[i]) / h
        dlam = [(a - b) / h for a, b in zip(system(x0, h), f0)]
        sol = mpmath.lu_solve(jac, mpmath.matrix([-v for v in dlam]))
        return [mpmath.mpc(sol[i]) for i in range(n)]


def _aux_block_index(digits, dim=2) -> int:
    idx = 0
    for d in digits:
        idx = idx * dim + d
    return idx


def build_magnon_state(model: RModel, L: int, roots: BetheRoots) -> MagnonState:
    """The deformed N-magnon state from the doubled-auxiliary monodromy."""
    with mpmath.workdps(roots.precision):
        alg = _complex_lambda_algebra()
        n = roots.N
        if n == 0:
            one = mpmath.mpc(1)
            return MagnonState(L, roots, {0: one}, {})
        f_minus = f_factors(roots.roots, -1)
        f_plus = f_factors(roots.roots, +1)
        if abs(f_plus[0]) == 0:
            raise ValueError("f_0^+ vanishes: root at a pole of the ratio")
        ratio = f_minus[0] / f_plus[0]
        lam = JetScalar.nilpotent(alg, LAMBDA)
        shifts = first_order_root_shifts(L, roots.uhats)
        us = [
            JetScalar.const(alg, u)
            + lam * JetScalar.const(alg, mpmath.mpc(0, 1) * d)
            for u, d in zip(roots.roots, shifts)
        ]
        aux = EvaluatedTuple(
            tuple((i + 1, us[i]) for i in range(n)), (n + 1,)
        )
        phys = EvaluatedTuple((), (n + 2,))
        lax = twisted_rform(model, Boost(3), aux, phys, algebra=alg)
        blocks = _monodromy_blocks(lax, n + 1, L)
        row_b = _aux_block_index((0,) * n + (0,))
        col_b = _aux_block_index((1,) * n + (0,))
        row_d = _aux_block_index((0,) * n + (1,))
        col_d = _aux_block_index((1,) * n + (1,))
        op = blocks.get((row_b, col_b))
        op_d = blocks.get((row_d, col_d))
        if op_d is not None:
            op = op + op_d.scale(JetScalar.const(alg, ratio))
        vec0, vec1 = {}, {}
        for r, row in op.rows.items():
            jet = row.get(0)
            if jet is None:
                continue
            c0 = jet.coeffs.get((0,))
            c1 = jet.coeffs.get((1,))
            if c0 is not None and c0 != 0:
                vec0[r] = c0
            if c1 is not None and c1 != 0:
                vec1[r] = c1
        return MagnonState(L, roots, vec0, vec1)


def _monodromy_blocks(lax: TensorOperator, aux_legs: int, L: int) -> dict:
    """Auxiliary blocks of lax_L ... lax_1 without materializing the product."""
    from .chain import _aux_blocks

    partial = _aux_blocks(lax, aux_legs)
    blocks = partial
    for _ in range(1, L):
        step = _aux_blocks(lax, aux_legs)
        new = {}
        for (a, b), xop in step.items():
            for (b2, g), mop in blocks.items():
                if b2 != b:
                    continue
                term = mop.kron(xop)
                prev = new.get((a, g))
                new[(a, g)] = term if prev is None else prev + term
        blocks = new
    return blocks


def _apply(op: TensorOperator, vec: dict) -> dict:
    out = {}
    for r, row in op.rows.items():
        acc = None
        for c, v in row.items():
            x = vec.get(c)
            if x is None:
                continue
            term = v * x
            acc = term if acc is None else acc + term
        if acc is not None and not acc.is_zero():
            out[r] = acc
    return out


def eigencheck(model: RModel, L: int, roots: BetheRoots, u) -> dict:
    """Residuals of t^lam(u) psi = tau(u) psi per lambda order.

    The eigenvalue is fitted from the largest zeroth-order component; the
    state is normalized to max-abs 1 before taking residuals.
    """
    with mpmath.workdps(roots.precision):
        alg = _complex_lambda_algebra()
        state = build_magnon_state(model, L, roots)
        scale = max(abs(v) for v in state.order0.values())
        psi0 = {r: v / scale for r, v in state.order0.items()}
        psi1 = {r: v / scale for r, v in state.order1.items()}
        psi = {
            r: JetScalar.from_coeffs(
                alg, {(0,): psi0.get(r, 0), (1,): psi1.get(r, 0)}
            )
            for r in set(psi0) | set(psi1)
        }
        uj = JetScalar.const(alg, mpmath.mpc(u))
        from .deform import deformed_transfer

        t = deformed_transfer(model, Boost(3), L, uj, alg)
        y = _apply(t, psi)
        y0 = {r: v.coeffs.get((0,), mpmath.mpc(0)) for r, v in y.items()}
        y1 = {r: v.coeffs.get((1,), mpmath.mpc(0)) for r, v in y.items()}
        istar = max(psi0, key=lambda r: abs(psi0[r]))
        tau0 = y0.get(istar, mpmath.mpc(0)) / psi0[istar]
        tau1 = (
            y1.get(istar, mpmath.mpc(0)) - tau0 * psi1.get(istar, 0)
        ) / psi0[istar]
        res0 = mpmath.mpf(0)
        res1 = mpmath.mpf(0)
        for r in set(y0) | set(psi0) | set(y1) | set(psi1):
            a = y0.get(r, 0) - tau0 * psi0.get(r, 0)
            b = y1.get(r, 0) - tau0 * psi1.get(r, 0) - tau1 * psi0.get(r, 0)
            res0 = max(res0, abs(a))
            res1 = max(res1, abs(b))
        return {
            "eigenvalue": (tau0, tau1),
            "residual_order0": res0,
            "residual_order1": res1,
        }


# -- the unproven boundary identity --------------------------------------------


def _monodromy_block(model, L, u, alg, chain, row, col) -> TensorOperator:
    t = monodromy(model, chain, u)
    d = model.site_dim
    rows = {}
    for (r, c), v in t.iter_entries():
        ar, pr = divmod(r, d**L)
        ac, pc = divmod(c, d**L)
        if ar == row and ac == col:
            rows.setdefault(pr, {})[pc] = v
    return TensorOperator(L, d, alg, rows)


def extra_terms_check(model: RModel, L: int, roots: BetheRoots):
    """Fit the scalar g of the on-shell boundary identity; report the residual.

    The boundary remainder of the first-order state,

        [f_0^- U xi_{L-1,L}(B..B) - xi_{L,1}(B..B)] |0>
        + sum_i B(0) xi_{L-1,L}(B..[f_i^- A(u_i) + r f_i^+ D(u_i)]..B) |0>,

    is compared against ``(-q2_{L,1} Q_2 + g) B..B |0>`` with g fitted from
    the largest component.  The identity has no proof; failures are reported
    through the residual, never suppressed.
    """
    with mpmath.workdps(roots.precision):
        n = roots.N
        if n == 0:
            return mpmath.mpc(0), mpmath.mpf(0)
        base = JetAlgebra(fld=COMPLEX)
        chain, alg = site_jet_chain(L, base)
        us = [JetScalar.const(alg, u) for u in roots.roots]
        f_minus = f_factors(roots.roots, -1)
        f_plus = f_factors(roots.roots, +1)
        ratio = f_minus[0] / f_plus[0]
        b_ops = [_monodromy_block(model, L, u, alg, chain, 0, 1) for u in us]
        a_ops = [_monodromy_block(model, L, u, alg, chain, 0, 0) for u in us]
        d_ops = [_monodromy_block(model, L, u, alg, chain, 1, 1) for u in us]

        def string(ops):
            out = ops[0]
            for op in ops[1:]:
                out = out * op
            return out

        bstr = string(b_ops)
        site_legs = list(range(1, L + 1))
        zero_v = {f"v{i}": 0 for i in range(1, L + 1)}

        def xi(nn, mm, op):
            return xi_apply(model, chain, op, nn, mm, site_legs)

        def column0(op):
            flat = _set_v_zero(op, zero_v)
            return {
                r: row[0].constant_term()
                for r, row in flat.rows.items()
                if 0 in row
            }

        psi0 = column0(bstr)
        shift = _shift_operator(L, alg)
        b_zero = _set_v_zero(
            _monodromy_block(
                model, L, JetScalar.const(alg, 0), alg, chain, 0, 1
            ),
            zero_v,
        )
        extra_op = (
            shift * _set_v_zero(xi(L - 1, L, bstr), zero_v)
        ).scale(JetScalar.const(alg, f_minus[0]))
        extra_op = extra_op - _set_v_zero(xi(L, 1, bstr), zero_v)
        for i in range(1, n + 1):
            weight_a = JetScalar.const(alg, f_minus[i])
            weight_d = JetScalar.const(alg, ratio * f_plus[i])
            mixed = list(b_ops)
            mixed[i - 1] = a_ops[i - 1].scale(weight_a) + d_ops[i - 1].scale(
                weight_d
            )
            extra_op = extra_op + b_zero * _set_v_zero(
                xi(L - 1, L, string(mixed)), zero_v
            )
        extra = {
            r: row[0].constant_term()
            for r, row in extra_op.rows.items()
            if 0 in row
        }
        # reference: (-q2_{L,1} Q_2 + g) psi0
        flat_alg = JetAlgebra(fld=COMPLEX)
        q2 = conjecture_density(model, 2)[0].lift(flat_alg)
        qq = global_charge(q2, L)
        bound = q2.embed([L, 1], L) * qq
        psi0_jets = {r: JetScalar.const(flat_alg, v) for r, v in psi0.items()}
        ref = _apply(bound, psi0_jets)
        istar = max(psi0, key=lambda r: abs(psi0[r]))
        g = (
            extra.get(istar, 0)
            + (ref[istar].constant_term() if istar in ref else 0)
        ) / psi0[istar]
        res = mpmath.mpf(0)
        scale = abs(psi0[istar])
        for r in set(extra) | set(ref) | set(psi0):
            val = (
                extra.get(r, 0)
                + (ref[r].constant_term() if r in ref else 0)
                - g * psi0.get(r, 0)
            )
            res = max(res, abs(val) / scale)
        return g, res


def _shift_operator(L: int, alg: JetAlgebra) -> TensorOperator:
    """U: e_{i_1} .. e_{i_L} -> e_{i_L} e_{i_1} .. e_{i_{L-1}}."""
    rows = {}
    one = JetScalar.const(alg, 1)
    for c in range(2**L):
        from .tensor_core import digits_of, index_of

        d = digits_of(c, L, 2)
        rows.setdefault(index_of((d[-1],) + d[:-1], 2), {})[c] = one
    return TensorOperator(L, 2, alg, rows)
