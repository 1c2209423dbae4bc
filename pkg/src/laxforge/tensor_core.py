"""Operators on tensor powers of the local site space, with exact jet entries.

A :class:`TensorOperator` is a square matrix on ``V^{\\otimes legs}`` with
``dim V = site_dim`` and :class:`~laxforge.jets.JetScalar` entries.  The
index convention is row-major with leg 1 the most significant digit, i.e.
the basis vector ``e_{i_1} (x) ... (x) e_{i_n}`` has index
``((i_1 d + i_2) d + ...) d + i_n`` with 0-based digits.  Storage is sparse
(dict of rows) but the semantics are those of a dense matrix.

All operations are pure; operators are never mutated after construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .jets import (
    COMPLEX,
    RATIONAL,
    AlgebraMismatch,
    JetAlgebra,
    JetScalar,
    coerce_coeff,
)


class SingularOperator(ArithmeticError):
    """Inversion of an operator whose constant part is singular."""


class ShapeMismatch(ValueError):
    """Arithmetic between operators of different shape or algebra."""


def digits_of(index: int, legs: int, dim: int) -> tuple[int, ...]:
    out = [0] * legs
    for i in range(legs - 1, -1, -1):
        index, out[i] = divmod(index, dim)
    return tuple(out)


def index_of(digits, dim: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * dim + d
    return idx


@dataclass
class TensorOperator:
    legs: int
    site_dim: int
    algebra: JetAlgebra
    rows: dict = field(default_factory=dict)  # row -> {col -> JetScalar}

    # -- construction -----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.site_dim**self.legs

    @staticmethod
    def zeros(legs: int, site_dim: int, algebra: JetAlgebra) -> TensorOperator:
        return TensorOperator(legs, site_dim, algebra, {})

    @staticmethod
    def from_entries(legs, site_dim, algebra, entries) -> TensorOperator:
        """``entries``: iterable of ((row, col), value)."""
        rows: dict = {}
        for (r, c), v in entries:
            if not isinstance(v, JetScalar):
                v = JetScalar.const(algebra, v)
            if v.is_zero():
                continue
            row = rows.setdefault(r, {})
            s = row.get(c)
            v = v if s is None else s + v
            if v.is_zero():
                del row[c]
            else:
                row[c] = v
        return TensorOperator(
            legs, site_dim, algebra, {r: row for r, row in rows.items() if row}
        )

    def entry(self, r: int, c: int) -> JetScalar:
        row = self.rows.get(r)
        if row is None or c not in row:
            return JetScalar(self.algebra, {})
        return row[c]

    def iter_entries(self):
        for r, row in self.rows.items():
            for c, v in row.items():
                yield (r, c), v

    def nnz(self) -> int:
        return sum(len(row) for row in self.rows.values())

    # -- elementary checks --------------------------------------------------
    def _check_compatible(self, other: TensorOperator):
        if (
            self.legs != other.legs
            or self.site_dim != other.site_dim
            or self.algebra != other.algebra
        ):
            raise ShapeMismatch(
                f"({self.legs},{self.site_dim}) over {self.algebra} vs "
                f"({other.legs},{other.site_dim}) over {other.algebra}"
            )

    def is_zero(self) -> bool:
        return not self.rows

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorOperator):
            return NotImplemented
        return (
            self.legs == other.legs
            and self.site_dim == other.site_dim
            and self.algebra == other.algebra
            and self.rows == other.rows
        )

    # -- linear structure ----------------------------------------------------
    def __add__(self, other: TensorOperator) -> TensorOperator:
        self._check_compatible(other)
        rows = {r: dict(row) for r, row in self.rows.items()}
        for r, orow in other.rows.items():
            row = rows.setdefault(r, {})
            for c, v in orow.items():
                s = row.get(c)
                v = v if s is None else s + v
                if v.is_zero():
                    row.pop(c, None)
                else:
                    row[c] = v
            if not row:
                del rows[r]
        return TensorOperator(self.legs, self.site_dim, self.algebra, rows)

    def __neg__(self) -> TensorOperator:
        return self.map_entries(lambda v: -v)

    def __sub__(self, other: TensorOperator) -> TensorOperator:
        return self + (-other)

    def scale(self, s) -> TensorOperator:
        if not isinstance(s, JetScalar):
            s = JetScalar.const(self.algebra, s)
        return self.map_entries(lambda v: s * v)

    def map_entries(self, fn) -> TensorOperator:
        rows = {}
        for r, row in self.rows.items():
            new = {}
            for c, v in row.items():
                w = fn(v)
                if not w.is_zero():
                    new[c] = w
            if new:
                rows[r] = new
        return TensorOperator(self.legs, self.site_dim, self.algebra, rows)

    # -- multiplication ---------------------------------------------------
    def __mul__(self, other: TensorOperator) -> TensorOperator:
        self._check_compatible(other)
        orders = self.algebra.orders
        brows = other.rows
        out = {}
        for r, arow in self.rows.items():
            acc: dict = {}
            for k, a in arow.items():
                brow = brows.get(k)
                if not brow:
                    continue
                ac = a.coeffs
                for c, b in brow.items():
                    tgt = acc.get(c)
                    if tgt is None:
                        tgt = acc[c] = {}
                    for da, ca in ac.items():
                        for db, cb in b.coeffs.items():
                            deg = tuple(x + y for x, y in zip(da, db))
                            ok = True
                            for d, o in zip(deg, orders):
                                if d >= o:
                                    ok = False
                                    break
                            if not ok:
                                continue
                            s = tgt.get(deg)
                            tgt[deg] = ca * cb if s is None else s + ca * cb
            row = {}
            for c, tgt in acc.items():
                cleaned = {d: v for d, v in tgt.items() if v != 0}
                if cleaned:
                    row[c] = JetScalar(self.algebra, cleaned)
            if row:
                out[r] = row
        return TensorOperator(self.legs, self.site_dim, self.algebra, out)

    def commutator(self, other: TensorOperator) -> TensorOperator:
        return self * other - other * self

    # -- structural operations ---------------------------------------------
    def embed(self, positions, total_legs: int) -> TensorOperator:
        """Act with ``self`` on the listed 1-based legs of a larger space.

        ``positions[j]`` is the global leg carrying local leg ``j+1``;
        positions need not be sorted or adjacent.
        """
        positions = list(positions)
        if len(positions) != self.legs:
            raise ValueError("one position per operator leg required")
        if len(set(positions)) != len(positions):
            raise ValueError("duplicate embedding positions")
        if any(p < 1 or p > total_legs for p in positions):
            raise ValueError("embedding position out of range")
        d = self.site_dim
        free = [p for p in range(1, total_legs + 1) if p not in positions]
        # enumerate identity fill-ins on the free legs
        fills = [()]
        for _ in free:
            fills = [f + (x,) for f in fills for x in range(d)]
        rows: dict = {}
        for (r, c), v in self.iter_entries():
            dr = digits_of(r, self.legs, d)
            dc = digits_of(c, self.legs, d)
            for fill in fills:
                gr = [0] * total_legs
                gc = [0] * total_legs
                for p, x, y in zip(positions, dr, dc):
                    gr[p - 1] = x
                    gc[p - 1] = y
                for p, x in zip(free, fill):
                    gr[p - 1] = x
                    gc[p - 1] = x
                rows.setdefault(index_of(gr, d), {})[index_of(gc, d)] = v
        return TensorOperator(total_legs, d, self.algebra, rows)

    def partial_trace(self, legs_to_trace) -> TensorOperator:
        traced = sorted(set(legs_to_trace))
        if not traced or any(t < 1 or t > self.legs for t in traced):
            raise ValueError("legs to trace must be a nonempty subset")
        keep = [p for p in range(1, self.legs + 1) if p not in traced]
        if not keep:
            # full trace as a 0-leg (1x1) operator is not used; keep 1 leg min
            raise ValueError("tracing all legs: use trace()")
        d = self.site_dim
        out = TensorOperator.zeros(len(keep), d, self.algebra)
        rows: dict = {}
        for (r, c), v in self.iter_entries():
            dr = digits_of(r, self.legs, d)
            dc = digits_of(c, self.legs, d)
            if any(dr[t - 1] != dc[t - 1] for t in traced):
                continue
            nr = index_of([dr[p - 1] for p in keep], d)
            nc = index_of([dc[p - 1] for p in keep], d)
            row = rows.setdefault(nr, {})
            s = row.get(nc)
            v2 = v if s is None else s + v
            if v2.is_zero():
                row.pop(nc, None)
            else:
                row[nc] = v2
        out.rows = {r: row for r, row in rows.items() if row}
        return out

    def trace(self) -> JetScalar:
        acc = JetScalar(self.algebra, {})
        for r, row in self.rows.items():
            v = row.get(r)
            if v is not None:
                acc = acc + v
        return acc

    def kron(self, other: TensorOperator) -> TensorOperator:
        """Tensor product; ``self`` carries the leading (most significant) legs."""
        if self.site_dim != other.site_dim or self.algebra != other.algebra:
            raise ShapeMismatch("kron requires same site space and algebra")
        od = other.dim
        rows: dict = {}
        for (r1, c1), v1 in self.iter_entries():
            base_r, base_c = r1 * od, c1 * od
            for (r2, c2), v2 in other.iter_entries():
                v = v1 * v2
                if not v.is_zero():
                    rows.setdefault(base_r + r2, {})[base_c + c2] = v
        return TensorOperator(
            self.legs + other.legs, self.site_dim, self.algebra, rows
        )

    # -- jet bookkeeping -----------------------------------------------------
    def coeff_operator(self, gen: str, power: int) -> TensorOperator:
        """Entry-wise coefficient of ``gen**power`` (a jet in the other gens)."""
        return self.map_entries(lambda v: v.coeff_jet(gen, power))

    def dgen(self, gen: str) -> TensorOperator:
        return self.map_entries(lambda v: v.dgen(gen))

    def lift(self, algebra: JetAlgebra) -> TensorOperator:
        out = self.map_entries(lambda v: v.lift(algebra))
        out.algebra = algebra
        return out

    def project(self, algebra: JetAlgebra) -> TensorOperator:
        out = self.map_entries(lambda v: v.project(algebra))
        out.algebra = algebra
        return out

    def constant_matrix(self) -> dict:
        """Jet-constant part as {row: {col: field element}}."""
        zero = self.algebra.zero_degree
        out = {}
        for r, row in self.rows.items():
            new = {}
            for c, v in row.items():
                x = v.coeffs.get(zero)
                if x is not None:
                    new[c] = x
            if new:
                out[r] = new
        return out

    # -- inversion ---------------------------------------------------------
    def inverse(self) -> TensorOperator:
        """Exact two-sided inverse.

        The jet-constant part is inverted by exact Gaussian elimination; the
        nilpotent remainder is handled by the finite Neumann series.
        """
        n = self.dim
        cinv = _invert_field_matrix(
            self.constant_matrix(), n, self.algebra.fld
        )
        c_op = TensorOperator(
            self.legs,
            self.site_dim,
            self.algebra,
            {
                r: {c: JetScalar.const(self.algebra, v) for c, v in row.items()}
                for r, row in cinv.items()
            },
        )
        zero_deg = self.algebra.zero_degree
        nil = self.map_entries(
            lambda v: JetScalar(
                self.algebra,
                {d: x for d, x in v.coeffs.items() if d != zero_deg},
            )
        )
        # Neumann: (C + N)^{-1} = sum_j (-C^{-1} N)^j C^{-1}, finite since N
        # has nilpotent entries
        acc = c_op
        base = -(c_op * nil)
        power = base
        while not power.is_zero():
            acc = acc + power * c_op
            power = base * power
        return acc

    # -- serialization -------------------------------------------------------
    def to_json_obj(self) -> dict:
        if self.algebra.fld != RATIONAL:
            raise ValueError("only rational operators serialize")
        n = self.dim
        entries = [
            [self.entry(r, c).to_obj() for c in range(n)] for r in range(n)
        ]
        return {
            "legs": self.legs,
            "site_dim": self.site_dim,
            "generators": [[name, order] for name, order in self.algebra.generators],
            "entries": entries,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> TensorOperator:
        algebra = JetAlgebra(
            tuple((str(n), int(o)) for n, o in obj["generators"])
        )
        legs, site_dim = int(obj["legs"]), int(obj["site_dim"])
        op = TensorOperator.zeros(legs, site_dim, algebra)
        rows: dict = {}
        for r, row in enumerate(obj["entries"]):
            for c, jet in enumerate(row):
                if jet:
                    rows.setdefault(r, {})[c] = JetScalar.from_obj(algebra, jet)
        op.rows = rows
        return op

    def canonical_json(self) -> str:
        return json.dumps(
            self.to_json_obj(), sort_keys=True, separators=(",", ":")
        )

    def op_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def identity_op(legs: int, site_dim: int, algebra: JetAlgebra) -> TensorOperator:
    if legs < 1:
        raise ValueError("legs must be >= 1")
    one = JetScalar.const(algebra, 1)
    n = site_dim**legs
    return TensorOperator(
        legs, site_dim, algebra, {r: {r: one} for r in range(n)}
    )


def permutation_op(
    legs: int, site_dim: int, i: int, j: int, algebra: JetAlgebra
) -> TensorOperator:
    """Transposition of tensor factors ``i`` and ``j``, identity elsewhere."""
    if not (1 <= i < j <= legs):
        raise ValueError("need 1 <= i < j <= legs")
    one = JetScalar.const(algebra, 1)
    rows: dict = {}
    for c in range(site_dim**legs):
        d = list(digits_of(c, legs, site_dim))
        d[i - 1], d[j - 1] = d[j - 1], d[i - 1]
        rows.setdefault(index_of(d, site_dim), {})[c] = one
    return TensorOperator(legs, site_dim, algebra, rows)


def _invert_field_matrix(rows: dict, n: int, fld: str) -> dict:
    """Exact Gauss-Jordan inverse of a sparse {r: {c: x}} field matrix."""
    zero = coerce_coeff(0, fld)
    one = coerce_coeff(1, fld)
    a = [[rows.get(r, {}).get(c, zero) for c in range(n)] for r in range(n)]
    inv = [[one if r == c else zero for c in range(n)] for r in range(n)]
    for col in range(n):
        piv = None
        if fld == COMPLEX:
            best = -1.0
            for r in range(col, n):
                mag = abs(a[r][col])
                if mag > best and mag != 0:
                    best, piv = mag, r
        else:
            for r in range(col, n):
                if a[r][col] != 0:
                    piv = r
                    break
        if piv is None:
            raise SingularOperator("constant part has no exact inverse")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        p = a[col][col]
        if p != 1:
            pi = 1 / p
            a[col] = [x * pi for x in a[col]]
            inv[col] = [x * pi for x in inv[col]]
        for r in range(n):
            if r == col:
                continue
            f = a[r][col]
            if f == 0:
                continue
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    out: dict = {}
    for r in range(n):
        row = {c: v for c, v in enumerate(inv[r]) if v != 0}
        if row:
            out[r] = row
    return out
