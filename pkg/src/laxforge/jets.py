"""Exact scalar arithmetic in a truncated polynomial algebra over the rationals.

A :class:`JetScalar` is a finite linear combination of monomials in named
nilpotent generators, with exact rational (or, for the magnon routines,
high-precision complex) coefficients.  Each generator carries a truncation
order ``t``: every monomial containing the generator to power ``>= t`` is
dropped.  Derivatives are read off as scaled coefficients, so all spectral
and deformation derivatives in the package are exact.

Coefficients live in one of two fields:

* ``"rational"`` -- :class:`gmpy2.mpq`, exact, the default everywhere;
* ``"complex"`` -- :class:`mpmath.mpc`, used only at the magnon boundary
  where Bethe roots are algebraic irrationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
from gmpy2 import mpq

LAMBDA = "lam"  # the deformation direction; its truncation order is pinned to 2

RATIONAL = "rational"
COMPLEX = "complex"


class PoleAtEvaluationPoint(ArithmeticError):
    """Inversion of a jet whose constant term vanishes (an R-matrix pole)."""


class AlgebraMismatch(ValueError):
    """Arithmetic between jets over different algebras."""


def coerce_coeff(value, fld):
    if fld == RATIONAL:
        if isinstance(value, str):
            num, _, den = value.partition("/")
            return mpq(int(num), int(den)) if den else mpq(int(num))
        return mpq(value)
    return mpmath.mpc(value)


def coeff_str(value) -> str:
    """Canonical ``p/q`` form, q > 0, gcd(p, q) = 1."""
    q = mpq(value)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class JetAlgebra:
    """Descriptor of the ambient truncated algebra: ordered named generators."""

    generators: tuple[tuple[str, int], ...] = ()
    fld: str = RATIONAL

    def __post_init__(self):
        names = [n for n, _ in self.generators]
        if len(set(names)) != len(names):
            raise ValueError("generator names must be unique")
        for n, order in self.generators:
            if order < 1:
                raise ValueError(f"truncation order of {n!r} must be >= 1")
            if n == LAMBDA and order != 2:
                raise ValueError("the deformation generator must square to zero")
        if self.fld not in (RATIONAL, COMPLEX):
            raise ValueError(f"unknown coefficient field {self.fld!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.generators)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(o for _, o in self.generators)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def order_of(self, name: str) -> int:
        return self.generators[self.index(name)][1]

    @property
    def zero_degree(self) -> tuple[int, ...]:
        return (0,) * len(self.generators)

    def extended(self, name: str, order: int) -> JetAlgebra:
        if name in self.names:
            raise ValueError(f"generator {name!r} already present")
        return JetAlgebra(self.generators + ((name, order),), self.fld)

    def without(self, name: str) -> JetAlgebra:
        return JetAlgebra(
            tuple(g for g in self.generators if g[0] != name), self.fld
        )

    def nilpotency_bound(self) -> int:
        """Smallest j such that any product of j generators vanishes."""
        return sum(o - 1 for o in self.orders) + 1


@dataclass(frozen=True)
class JetScalar:
    """Element of a :class:`JetAlgebra`: sparse map multi-degree -> coefficient.

    Stored coefficients are never zero; immutable by convention.
    """

    algebra: JetAlgebra
    coeffs: dict = field(default_factory=dict)

    # -- constructors ---------------------------------------------------
    @staticmethod
    def const(algebra: JetAlgebra, value) -> JetScalar:
        c = coerce_coeff(value, algebra.fld)
        if c == 0:
            return JetScalar(algebra, {})
        return JetScalar(algebra, {algebra.zero_degree: c})

    @staticmethod
    def nilpotent(algebra: JetAlgebra, name: str) -> JetScalar:
        """The bare generator ``name`` (zero if its truncation order is 1)."""
        i = algebra.index(name)
        if algebra.orders[i] < 2:
            return JetScalar(algebra, {})
        deg = tuple(1 if j == i else 0 for j in range(len(algebra.generators)))
        return JetScalar(algebra, {deg: coerce_coeff(1, algebra.fld)})

    @staticmethod
    def from_coeffs(algebra: JetAlgebra, coeffs: dict) -> JetScalar:
        orders = algebra.orders
        clean = {}
        for deg, c in coeffs.items():
            deg = tuple(deg)
            if len(deg) != len(orders) or any(
                d < 0 or d >= o for d, o in zip(deg, orders)
            ):
                raise ValueError(f"degree {deg} violates truncation {orders}")
            c = coerce_coeff(c, algebra.fld)
            if c != 0:
                clean[deg] = c
        return JetScalar(algebra, clean)

    # -- helpers --------------------------------------------------------
    def _coerce(self, other) -> JetScalar:
        if isinstance(other, JetScalar):
            if other.algebra != self.algebra:
                raise AlgebraMismatch(
                    f"jets over {other.algebra} vs {self.algebra}"
                )
            return other
        return JetScalar.const(self.algebra, other)

    def is_zero(self) -> bool:
        return not self.coeffs

    def constant_term(self):
        return self.coeffs.get(
            self.algebra.zero_degree, coerce_coeff(0, self.algebra.fld)
        )

    # -- ring operations -------------------------------------------------
    def __add__(self, other) -> JetScalar:
        other = self._coerce(other)
        out = dict(self.coeffs)
        for deg, c in other.coeffs.items():
            s = out.get(deg)
            if s is None:
                out[deg] = c
            else:
                s = s + c
                if s == 0:
                    del out[deg]
                else:
                    out[deg] = s
        return JetScalar(self.algebra, out)

    __radd__ = __add__

    def __neg__(self) -> JetScalar:
        return JetScalar(self.algebra, {d: -c for d, c in self.coeffs.items()})

    def __sub__(self, other) -> JetScalar:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> JetScalar:
        return self._coerce(other) - self

    def __mul__(self, other) -> JetScalar:
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return JetScalar(self.algebra, {})
        orders = self.algebra.orders
        zero = self.algebra.zero_degree
        # constant factors are by far the most common case
        if len(a) == 1 and zero in a:
            c = a[zero]
            return JetScalar(self.algebra, {d: c * v for d, v in b.items()})
        if len(b) == 1 and zero in b:
            c = b[zero]
            return JetScalar(self.algebra, {d: v * c for d, v in a.items()})
        out = {}
        for da, ca in a.items():
            for db, cb in b.items():
                deg = tuple(x + y for x, y in zip(da, db))
                if any(d >= o for d, o in zip(deg, orders)):
                    continue
                s = out.get(deg)
                out[deg] = ca * cb if s is None else s + ca * cb
        return JetScalar(
            self.algebra, {d: c for d, c in out.items() if c != 0}
        )

    __rmul__ = __mul__

    def inv(self) -> JetScalar:
        """Multiplicative inverse via the finite geometric series.

        Exact: ``a * a.inv() == 1`` whenever the constant term is nonzero.
        """
        c0 = self.constant_term()
        if c0 == 0:
            raise PoleAtEvaluationPoint(
                "inverting a jet with zero constant term"
            )
        inv_c0 = (
            1 / c0 if self.algebra.fld == COMPLEX else mpq(c0.denominator, c0.numerator)
        )
        # a = c0 (1 + n) with n nilpotent
        n = JetScalar(
            self.algebra,
            {
                d: c * inv_c0
                for d, c in self.coeffs.items()
                if d != self.algebra.zero_degree
            },
        )
        acc = JetScalar.const(self.algebra, 1)
        term = JetScalar.const(self.algebra, 1)
        for _ in range(self.algebra.nilpotency_bound()):
            term = -(term * n)
            if term.is_zero():
                break
            acc = acc + term
        return acc * JetScalar.const(self.algebra, inv_c0)

    def __truediv__(self, other) -> JetScalar:
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other) -> JetScalar:
        return self._coerce(other) * self.inv()

    def __pow__(self, n: int) -> JetScalar:
        if n < 0:
            return self.inv() ** (-n)
        out = JetScalar.const(self.algebra, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, JetScalar):
            other = self._coerce(other)
        return self.algebra == other.algebra and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        if not self.coeffs:
            return "Jet(0)"
        names = self.algebra.names
        parts = []
        for deg in sorted(self.coeffs):
            mono = "*".join(
                f"{n}^{d}" if d > 1 else n for n, d in zip(names, deg) if d
            )
            c = self.coeffs[deg]
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return "Jet(" + " + ".join(parts) + ")"

    # -- derivatives ------------------------------------------------------
    def coeff_jet(self, gen: str, power: int) -> JetScalar:
        """Coefficient of ``gen**power`` as a jet in the remaining directions.

        The result lives in the same algebra with degree zero in ``gen``.
        """
        i = self.algebra.index(gen)
        out = {}
        for deg, c in self.coeffs.items():
            if deg[i] == power:
                out[deg[:i] + (0,) + deg[i + 1 :]] = c
        return JetScalar(self.algebra, out)

    def dgen(self, gen: str) -> JetScalar:
        """Formal derivative with respect to ``gen``."""
        i = self.algebra.index(gen)
        out = {}
        for deg, c in self.coeffs.items():
            if deg[i] > 0:
                d = deg[:i] + (deg[i] - 1,) + deg[i + 1 :]
                out[d] = c * deg[i]
        return JetScalar(self.algebra, out)

    # -- algebra embeddings ------------------------------------------------
    def lift(self, target: JetAlgebra) -> JetScalar:
        """Re-express in ``target``, which must contain every generator here.

        Lifting rational jets into a complex algebra converts coefficients at
        the current mpmath precision; the reverse direction is refused.
        """
        if target.fld != self.algebra.fld:
            if self.algebra.fld == RATIONAL and target.fld == COMPLEX:
                conv = JetScalar(
                    JetAlgebra(self.algebra.generators, COMPLEX),
                    {
                        d: mpmath.mpc(
                            mpmath.mpf(int(c.numerator))
                            / mpmath.mpf(int(c.denominator))
                        )
                        for d, c in self.coeffs.items()
                    },
                )
                return conv.lift(target)
            raise AlgebraMismatch("cannot lift complex jets into rationals")
        src_names = self.algebra.names
        pos = [target.index(n) for n in src_names]
        for n in src_names:
            if target.order_of(n) != self.algebra.order_of(n):
                raise AlgebraMismatch(f"truncation of {n!r} differs in target")
        width = len(target.generators)
        out = {}
        for deg, c in self.coeffs.items():
            d = [0] * width
            for p, e in zip(pos, deg):
                d[p] = e
            out[tuple(d)] = c
        return JetScalar(target, out)

    def project(self, target: JetAlgebra) -> JetScalar:
        """Drop generators absent from ``target``; their degrees must be zero."""
        keep = []
        for n in target.names:
            keep.append(self.algebra.index(n))
            if target.order_of(n) != self.algebra.order_of(n):
                raise AlgebraMismatch(f"truncation of {n!r} differs in target")
        dropped = [
            i for i in range(len(self.algebra.generators)) if i not in keep
        ]
        out = {}
        for deg, c in self.coeffs.items():
            if any(deg[i] for i in dropped):
                raise ValueError(
                    "projection would discard a nonzero coefficient"
                )
            out[tuple(deg[i] for i in keep)] = c
        return JetScalar(target, out)

    # -- serialization ------------------------------------------------------
    def to_obj(self) -> dict:
        if self.algebra.fld != RATIONAL:
            raise ValueError("only rational jets serialize")
        return {
            ",".join(map(str, deg)): coeff_str(c)
            for deg, c in sorted(self.coeffs.items())
        }

    @staticmethod
    def from_obj(algebra: JetAlgebra, obj: dict) -> JetScalar:
        coeffs = {}
        for key, val in obj.items():
            deg = tuple(int(x) for x in key.split(",")) if key else ()
            coeffs[deg] = val
        return JetScalar.from_coeffs(algebra, coeffs)


def derivative_coeff(a: JetScalar, gen: str, order: int):
    """The ``order``-th derivative along ``gen`` at the base point.

    Equals ``order!`` times the coefficient of ``gen**order`` with every other
    generator at degree zero; exact.
    """
    i = a.algebra.index(gen)
    if order > a.algebra.orders[i] - 1:
        raise ValueError(
            f"derivative order {order} exceeds truncation of {gen!r}"
        )
    target = tuple(
        order if j == i else 0 for j in range(len(a.algebra.generators))
    )
    c = a.coeffs.get(target)
    if c is None:
        return coerce_coeff(0, a.algebra.fld)
    return c * math.factorial(order)
