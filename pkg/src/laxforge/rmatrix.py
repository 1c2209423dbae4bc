"""R-matrix models: the built-in rational family, model files, and axiom checks.

A model is a generator ``(u, v) -> TensorOperator`` on two legs together with
metadata.  Everything downstream (coproduct R-matrices, Lax operators, charge
densities) is built from pointwise evaluations of this generator at exact jet
arguments, so poles surface as :class:`PoleAtEvaluationPoint` and are never
regularized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from gmpy2 import mpq

from .jets import JetAlgebra, JetScalar, PoleAtEvaluationPoint
from .tensor_core import TensorOperator, identity_op, permutation_op

EMPTY = JetAlgebra()


class ModelValidationError(ValueError):
    """A model file failed regularity or braiding-unitarity validation."""


@dataclass(frozen=True)
class RModel:
    name: str
    site_dim: int
    difference_form: bool
    generator: Callable  # (u: JetScalar, v: JetScalar) -> TensorOperator


def as_jet(value, algebra: JetAlgebra = EMPTY) -> JetScalar:
    if isinstance(value, JetScalar):
        return value
    return JetScalar.const(algebra, value)


def yangian_gl(n: int) -> RModel:
    """R(u, v) = (u - v - P) / (u - v - 1) on C^n (x) C^n."""

    def gen(u: JetScalar, v: JetScalar) -> TensorOperator:
        alg = u.algebra
        d = u - v
        p = permutation_op(2, n, 1, 2, alg)
        num = identity_op(2, n, alg).scale(d) - p
        return num.scale((d - 1).inv())

    return RModel(f"yangian-gl{n}", n, True, gen)


_BUILTINS = {}
for _n in (2, 3, 4):
    _m = yangian_gl(_n)
    _BUILTINS[_m.name] = _m
    _BUILTINS[f"yangian-gl({_n})"] = _m


def builtin_model(name: str) -> RModel:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise KeyError(
            f"unknown built-in model {name!r}; have {sorted(set(m.name for m in _BUILTINS.values()))}"
        ) from None


# -- model files ------------------------------------------------------------


def _tokenize(src: str):
    src = src.replace("−", "-").replace("·", "*")
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            yield ("int", src[i:j])
            i = j
        elif ch in "uv+-*/()":
            yield (ch, ch)
            i += 1
        else:
            raise ValueError(f"unexpected character {ch!r} in entry")
    yield ("end", "")


class _EntryParser:
    """Recursive-descent parser for +, -, *, / over integers and u, v."""

    def __init__(self, src: str):
        self.tokens = list(_tokenize(src))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ValueError(f"expected {kind!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in "+-":
            op = self.take()[0]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek() in "*/":
            op = self.take()[0]
            node = (op, node, self.factor())
        return node

    def factor(self):
        if self.peek() == "-":
            self.take()
            return ("neg", self.factor())
        return self.atom()

    def atom(self):
        kind = self.peek()
        if kind == "int":
            return ("int", int(self.take()[1]))
        if kind in ("u", "v"):
            return (self.take()[0],)
        if kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        raise ValueError(f"unexpected token {self.tokens[self.pos][1]!r}")


def _eval_node(node, u: JetScalar, v: JetScalar) -> JetScalar:
    op = node[0]
    if op == "int":
        return JetScalar.const(u.algebra, node[1])
    if op == "u":
        return u
    if op == "v":
        return v
    if op == "neg":
        return -_eval_node(node[1], u, v)
    a = _eval_node(node[1], u, v)
    b = _eval_node(node[2], u, v)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return a / b  # "/" -- raises PoleAtEvaluationPoint on a zero constant term


def load_model(source, seed: int = 0) -> RModel:
    """Load a model from a JSON file path or a pre-parsed dict.

    Entries are rational-function strings in ``u`` and ``v``.  The model is
    validated at registration: regularity and braiding unitarity must hold
    exactly at five seeded random rational points.
    """
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            obj = json.load(fh)
    else:
        obj = source
    d = int(obj["site_dim"])
    n2 = d * d
    table = obj["entries"]
    if len(table) != n2 or any(len(row) != n2 for row in table):
        raise ModelValidationError(f"entry table must be {n2}x{n2}")
    asts = [[_EntryParser(cell).parse() for cell in row] for row in table]

    def gen(u: JetScalar, v: JetScalar) -> TensorOperator:
        return TensorOperator.from_entries(
            2,
            d,
            u.algebra,
            (
                ((r, c), _eval_node(asts[r][c], u, v))
                for r in range(n2)
                for c in range(n2)
            ),
        )

    model = RModel(str(obj["name"]), d, bool(obj.get("difference_form", False)), gen)
    _validate_model(model, seed)
    return model


def _validate_model(model: RModel, seed: int):
    import random

    rng = random.Random(seed)

    def draw():
        return mpq(rng.randint(-9, 9), rng.randint(1, 9))

    checked = 0
    while checked < 5:
        u, v = draw(), draw()
        try:
            if not check_regularity(model, u):
                raise ModelValidationError(f"regularity fails at u={u}")
            ok, _ = check_unitarity(model, u, v)
            if not ok:
                raise ModelValidationError(
                    f"braiding unitarity fails at (u,v)=({u},{v})"
                )
        except PoleAtEvaluationPoint:
            continue
        checked += 1


# -- evaluation and axiom checks ---------------------------------------------


def eval_r(model: RModel, u, v, algebra: JetAlgebra = EMPTY) -> TensorOperator:
    u, v = as_jet(u, algebra), as_jet(v, algebra)
    return model.generator(u, v)


def r_inverse(model: RModel, u, v, algebra: JetAlgebra = EMPTY) -> TensorOperator:
    """R_{12}(u,v)^{-1} = R_{21}(v,u), with legs swapped back into (1, 2)."""
    u, v = as_jet(u, algebra), as_jet(v, algebra)
    p = permutation_op(2, model.site_dim, 1, 2, u.algebra)
    return p * eval_r(model, v, u) * p


def check_regularity(model: RModel, u, algebra: JetAlgebra = EMPTY) -> bool:
    u = as_jet(u, algebra)
    return eval_r(model, u, u) == permutation_op(
        2, model.site_dim, 1, 2, u.algebra
    )


def check_unitarity(model: RModel, u, v, algebra: JetAlgebra = EMPTY):
    u, v = as_jet(u, algebra), as_jet(v, algebra)
    resid = eval_r(model, u, v) * r_inverse(model, u, v) - identity_op(
        2, model.site_dim, u.algebra
    )
    return resid.is_zero(), resid


def check_ybe(model: RModel, u1, u2, u3, algebra: JetAlgebra = EMPTY):
    """R12 R13 R23 - R23 R13 R12 on three legs; exact zero iff YBE holds."""
    u1, u2, u3 = (as_jet(x, algebra) for x in (u1, u2, u3))
    alg = u1.algebra
    d = model.site_dim

    def emb(op, i, j):
        return op.embed([i, j], 3)

    r12 = emb(eval_r(model, u1, u2), 1, 2)
    r13 = emb(eval_r(model, u1, u3), 1, 3)
    r23 = emb(eval_r(model, u2, u3), 2, 3)
    resid = r12 * r13 * r23 - r23 * r13 * r12
    return resid.is_zero(), resid


# -- coproduct R-matrices ----------------------------------------------------


@dataclass(frozen=True)
class CoproductSpec:
    """Leg groups with parameter assignments, in paper-subscript order."""

    first_legs: tuple
    second_legs: tuple

    def __post_init__(self):
        ids = [l for l, _ in self.first_legs] + [l for l, _ in self.second_legs]
        if len(set(ids)) != len(ids):
            raise ValueError("leg ids must be distinct across both groups")
        if not self.first_legs or not self.second_legs:
            raise ValueError("both groups must be nonempty")


def coproduct_r(
    model: RModel, first, second, frame=None, algebra: JetAlgebra = None
) -> TensorOperator:
    """The ordered double product over all (first, second) leg pairs.

    ``first`` and ``second`` are sequences of ``(leg id, parameter)`` in
    subscript order; the factors follow the arrow convention: the first group
    index ascends in the outer product, the second group index descends in
    the inner one.  The result acts on ``frame`` (ordered leg ids, defaulting
    to first + second as listed).  An empty group yields the identity.
    """
    first, second = list(first), list(second)
    if frame is None:
        frame = [l for l, _ in first] + [l for l, _ in second]
    frame = list(frame)
    pos = {leg: i + 1 for i, leg in enumerate(frame)}
    if algebra is None:
        for _, p in first + second:
            if isinstance(p, JetScalar):
                algebra = p.algebra
                break
    if algebra is None:
        algebra = EMPTY
    out = identity_op(len(frame), model.site_dim, algebra)

    def lift(p):
        p = as_jet(p, algebra)
        return p if p.algebra == algebra else p.lift(algebra)

    for i, ui in first:
        for j, uj in reversed(second):
            factor = eval_r(model, lift(ui), lift(uj))
            out = out * factor.embed([pos[i], pos[j]], len(frame))
    return out


def eval_coproduct_spec(model: RModel, spec: CoproductSpec) -> TensorOperator:
    return coproduct_r(model, spec.first_legs, spec.second_legs)
