"""Explicit Runge-Kutta methods in Butcher and modified Shu-Osher form.

Both representations describe the same update
    Y_i = v_i U_n + sum_j (alpha_ij Y_j + tau beta_ij F(Y_j)),  U_{n+1} = Y_{s+1}
with the Butcher form being the special case alpha = 0.  Coefficients are
stored as nested tuples of plain numbers; exact rationals (Fraction/int) are
preserved through every conversion, floats degrade gracefully.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

#: absolute tolerance for structural validation
VALIDATE_TOL = 1e-13


def _num_to_json(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def _num_from_json(x):
    if isinstance(x, str):
        num, den = x.split("/")
        return Fraction(int(num), int(den))
    if isinstance(x, float) and x.is_integer():
        return x
    return x


def _row_tuple(row):
    return tuple(row)


def _matrix_tuple(rows):
    return tuple(tuple(r) for r in rows)


def _row_sum(row):
    total = 0
    for x in row:
        total = total + x
    return total


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients (A, b, c) of an explicit method, plus order labels."""

    A: tuple
    b: tuple
    c: tuple
    order: int
    b_embedded: tuple | None = None
    order_embedded: int | None = None

    @property
    def s(self) -> int:
        return len(self.b)

    @cached_property
    def A_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.A])

    @cached_property
    def b_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.b])

    @cached_property
    def c_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.c])

    @classmethod
    def from_A_b(cls, A, b, order, b_embedded=None, order_embedded=None):
        """Build a tableau with c derived from row sums of A."""
        A = _matrix_tuple(A)
        c = tuple(_row_sum(row) for row in A)
        return cls(A, _row_tuple(b), c, order,
                   _row_tuple(b_embedded) if b_embedded is not None else None,
                   order_embedded)

    def to_json_dict(self) -> dict:
        out = {
            "s": self.s,
            "A": [[_num_to_json(x) for x in row] for row in self.A],
            "b": [_num_to_json(x) for x in self.b],
            "c": [_num_to_json(x) for x in self.c],
            "order": self.order,
        }
        if self.b_embedded is not None:
            out["b_embedded"] = [_num_to_json(x) for x in self.b_embedded]
            out["order_embedded"] = self.order_embedded
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "ButcherTableau":
        b_emb = d.get("b_embedded")
        return cls(
            A=_matrix_tuple([[_num_from_json(x) for x in row] for row in d["A"]]),
            b=tuple(_num_from_json(x) for x in d["b"]),
            c=tuple(_num_from_json(x) for x in d["c"]),
            order=d["order"],
            b_embedded=tuple(_num_from_json(x) for x in b_emb) if b_emb else None,
            order_embedded=d.get("order_embedded"),
        )


@dataclass(frozen=True)
class ShuOsherForm:
    """Modified Shu-Osher coefficients alpha, beta of shape (s+1) x s.

    Row i < s holds the dependencies of stage Y_{i+1}; the last row is the
    update producing U_{n+1}.  The convex weights v are derived, never stored.
    An optional second update row carries the embedded pair.
    """

    alpha: tuple
    beta: tuple
    order: int
    alpha_embedded: tuple | None = None
    beta_embedded: tuple | None = None
    order_embedded: int | None = None

    @property
    def s(self) -> int:
        return len(self.alpha) - 1

    @cached_property
    def v(self) -> tuple:
        return tuple(1 - _row_sum(row) for row in self.alpha)

    @cached_property
    def alpha_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.alpha])

    @cached_property
    def beta_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.beta])

    @cached_property
    def v_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.v])

    @classmethod
    def from_rows(cls, alpha, beta, order, alpha_embedded=None,
                  beta_embedded=None, order_embedded=None):
        return cls(_matrix_tuple(alpha), _matrix_tuple(beta), order,
                   _row_tuple(alpha_embedded) if alpha_embedded is not None else None,
                   _row_tuple(beta_embedded) if beta_embedded is not None else None,
                   order_embedded)

    def to_json_dict(self) -> dict:
        out = {
            "s": self.s,
            "alpha": [[_num_to_json(x) for x in row] for row in self.alpha],
            "beta": [[_num_to_json(x) for x in row] for row in self.beta],
            "v": [_num_to_json(x) for x in self.v],
            "order": self.order,
        }
        if self.alpha_embedded is not None:
            out["alpha_embedded"] = [_num_to_json(x) for x in self.alpha_embedded]
            out["beta_embedded"] = [_num_to_json(x) for x in self.beta_embedded]
            out["order_embedded"] = self.order_embedded
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "ShuOsherForm":
        a_emb = d.get("alpha_embedded")
        b_emb = d.get("beta_embedded")
        return cls(
            alpha=_matrix_tuple([[_num_from_json(x) for x in row] for row in d["alpha"]]),
            beta=_matrix_tuple([[_num_from_json(x) for x in row] for row in d["beta"]]),
            order=d["order"],
            alpha_embedded=tuple(_num_from_json(x) for x in a_emb) if a_emb else None,
            beta_embedded=tuple(_num_from_json(x) for x in b_emb) if b_emb else None,
            order_embedded=d.get("order_embedded"),
        )


@dataclass(frozen=True)
class ResidualVector:
    """Per-stage perturbations; entry i pairs with stage i+1, the last entry
    with the update."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __len__(self):
        return len(self.entries)


def _apply_row_to_stages(alpha_row, beta_row, A_rows, b_acc=None):
    """Combine already-computed Butcher rows per the Shu-Osher recurrence."""
    s = len(alpha_row)
    out = list(beta_row)
    for j in range(s):
        a = alpha_row[j]
        if a == 0:
            continue
        prev = A_rows[j]
        for k in range(s):
            if prev[k] != 0:
                out[k] = out[k] + a * prev[k]
    return out


def shu_osher_to_butcher(so: ShuOsherForm) -> ButcherTableau:
    """Resolve the stage recursion so stages reference U_n and F-values only.

    Forward substitution against the unit lower triangular I - alpha[1:s];
    no matrix inversion.
    """
    s = so.s
    A_rows = []
    for i in range(s):
        A_rows.append(_apply_row_to_stages(so.alpha[i], so.beta[i], A_rows))
    b = _apply_row_to_stages(so.alpha[s], so.beta[s], A_rows)
    b_emb = None
    if so.beta_embedded is not None:
        b_emb = _apply_row_to_stages(so.alpha_embedded, so.beta_embedded, A_rows)
    c = tuple(_row_sum(row) for row in A_rows)
    return ButcherTableau(_matrix_tuple(A_rows), tuple(b), c, so.order,
                          tuple(b_emb) if b_emb is not None else None,
                          so.order_embedded)


def butcher_to_shu_osher(bt: ButcherTableau) -> ShuOsherForm:
    """Embed a tableau as the Shu-Osher form with alpha = 0."""
    s = bt.s
    zeros = tuple(tuple(0 for _ in range(s)) for _ in range(s + 1))
    beta = tuple(tuple(row) for row in bt.A) + (tuple(bt.b),)
    a_emb = b_emb = None
    if bt.b_embedded is not None:
        a_emb = tuple(0 for _ in range(s))
        b_emb = tuple(bt.b_embedded)
    return ShuOsherForm(zeros, beta, bt.order, a_emb, b_emb, bt.order_embedded)


def residual_butcher_from_shu_osher(so: ShuOsherForm,
                                    r_so: ResidualVector) -> ResidualVector:
    """Map stage residuals of a Shu-Osher implementation to the equivalent
    Butcher-form residuals."""
    s = so.s
    r = r_so.entries
    if len(r) != s + 1:
        raise ValueError(f"residual length {len(r)} != s+1 = {s + 1}")
    w = []
    for i in range(s):
        acc = r[i]
        for j in range(i):
            a = so.alpha[i][j]
            if a != 0:
                acc = acc + a * w[j]
        w.append(acc)
    last = r[s]
    for j in range(s):
        a = so.alpha[s][j]
        if a != 0:
            last = last + a * w[j]
    return ResidualVector(tuple(w) + (last,))


def _validate_butcher(bt: ButcherTableau) -> list[str]:
    issues = []
    s = bt.s
    if len(bt.A) != s or any(len(row) != s for row in bt.A):
        issues.append(f"A must be {s}x{s}")
        return issues
    if len(bt.c) != s:
        issues.append(f"c has length {len(bt.c)}, expected {s}")
        return issues
    for i in range(s):
        for j in range(i, s):
            if bt.A[i][j] != 0:
                issues.append(
                    f"A[{i + 1}][{j + 1}] = {bt.A[i][j]} breaks strict lower "
                    "triangularity (explicit methods only)")
    for i in range(s):
        gap = float(bt.c[i] - _row_sum(bt.A[i]))
        if abs(gap) > VALIDATE_TOL:
            issues.append(
                f"row {i + 1}: c - sum(A row) = {gap:.3e} exceeds {VALIDATE_TOL}")
    if bt.b_embedded is not None and len(bt.b_embedded) != s:
        issues.append("b_embedded length mismatch")
    return issues


def _validate_shu_osher(so: ShuOsherForm) -> list[str]:
    issues = []
    s = so.s
    for name, mat in (("alpha", so.alpha), ("beta", so.beta)):
        if len(mat) != s + 1 or any(len(row) != s for row in mat):
            issues.append(f"{name} must be {s + 1}x{s}")
            return issues
        for i in range(s):
            for j in range(i, s):
                if mat[i][j] != 0:
                    issues.append(
                        f"{name}[{i + 1}][{j + 1}] = {mat[i][j]} breaks strict "
                        "lower triangularity (explicit methods only)")
    for row in (so.alpha_embedded, so.beta_embedded):
        if row is not None and len(row) != s:
            issues.append("embedded row length mismatch")
    return issues


def validate(form) -> list[str]:
    """Return a list of invariant violations; empty means the form is valid."""
    if isinstance(form, ButcherTableau):
        return _validate_butcher(form)
    if isinstance(form, ShuOsherForm):
        return _validate_shu_osher(form)
    if isinstance(form, ResidualVector):
        return []
    raise TypeError(f"cannot validate {type(form).__name__}")
