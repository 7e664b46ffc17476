"""Dense two-phase tableau simplex for the tiny LPs in this package.

Bland's rule is used for both entering and leaving variables, so the solver
always terminates and is bit-deterministic for a given input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .probability import ValidationError

LE = "<="
EQ = "=="
GE = ">="

_EPS = 1e-11


class LpError(RuntimeError):
    pass


class InfeasibleError(LpError):
    """The constraint set is empty."""


class UnboundedError(LpError):
    """The objective decreases without bound on the feasible set."""


@dataclass(frozen=True)
class LpProblem:
    """``min c @ x`` subject to ``rows`` and box ``bounds``.

    Each constraint is ``(coefficients, relation, rhs)`` with relation one of
    ``"<="``, ``"=="`` or ``">="``. Bounds are ``(lo, hi)`` pairs; ``hi`` may be
    ``inf``.
    """

    objective: tuple[float, ...]
    constraints: tuple[tuple[tuple[float, ...], str, float], ...]
    bounds: tuple[tuple[float, float], ...] = field(default=())
    names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        n = len(self.objective)
        for k, (coef, rel, _) in enumerate(self.constraints):
            if len(coef) != n:
                raise ValidationError(f"constraint {k} has {len(coef)} coefficients, expected {n}")
            if rel not in (LE, EQ, GE):
                raise ValidationError(f"constraint {k} has unknown relation {rel!r}")
        if self.bounds and len(self.bounds) != n:
            raise ValidationError("bounds must have one entry per variable")
        for lo, hi in self.bounds:
            if not (np.isfinite(lo) and lo <= hi):
                raise ValidationError(f"invalid bounds ({lo}, {hi})")

    @property
    def n_vars(self) -> int:
        return len(self.objective)


def make_lp(
    objective: Sequence[float],
    constraints: Sequence[tuple[Sequence[float], str, float]],
    bounds: Sequence[tuple[float, float]] | None = None,
    names: Sequence[str] = (),
) -> LpProblem:
    n = len(objective)
    if bounds is None:
        bounds = [(0.0, np.inf)] * n
    return LpProblem(
        objective=tuple(float(c) for c in objective),
        constraints=tuple(
            (tuple(float(a) for a in coef), rel, float(rhs)) for coef, rel, rhs in constraints
        ),
        bounds=tuple((float(lo), float(hi)) for lo, hi in bounds),
        names=tuple(names),
    )


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _run_simplex(tab: np.ndarray, basis: list[int], allowed: np.ndarray) -> None:
    """Minimise the objective held in the last row of ``tab`` (reduced costs)."""
    m = tab.shape[0] - 1
    max_iter = 50_000
    for _ in range(max_iter):
        cost = tab[-1, :-1]
        candidates = np.flatnonzero((cost < -_EPS) & allowed)
        if candidates.size == 0:
            return
        col = int(candidates[0])
        column = tab[:m, col]
        positive = column > _EPS
        if not np.any(positive):
            raise UnboundedError("objective is unbounded below")
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _EPS * max(1.0, abs(best)))
        row = min(ties, key=lambda r: basis[r])
        _pivot(tab, basis, int(row), col)
    raise LpError("simplex iteration limit reached")


def solve_lp(lp: LpProblem) -> tuple[np.ndarray, float]:
    """Solve ``lp`` and return ``(x, objective)``.

    Raises :class:`InfeasibleError` or :class:`UnboundedError`.
    """
    n = lp.n_vars
    bounds = lp.bounds or tuple((0.0, np.inf) for _ in range(n))
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    c = np.array(lp.objective)

    # shift x = lo + z with z >= 0; finite upper bounds become explicit rows
    rows: list[tuple[np.ndarray, str, float]] = []
    for coef, rel, rhs in lp.constraints:
        a = np.array(coef)
        rows.append((a, rel, rhs - float(a @ lo)))
    for j in range(n):
        if np.isfinite(hi[j]):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append((e, LE, hi[j] - lo[j]))

    # normalise to nonnegative right-hand sides
    norm_rows = []
    for a, rel, b in rows:
        if b < 0:
            a, b = -a, -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        norm_rows.append((a, rel, b))

    m = len(norm_rows)
    n_slack = sum(rel != EQ for _, rel, _ in norm_rows)
    n_art = sum(rel != LE for _, rel, _ in norm_rows)
    width = n + n_slack + n_art
    tab = np.zeros((m + 1, width + 1))
    basis: list[int] = [0] * m
    art_cols = []
    s_idx, a_idx = n, n + n_slack
    for r, (a, rel, b) in enumerate(norm_rows):
        tab[r, :n] = a
        tab[r, -1] = b
        if rel == LE:
            tab[r, s_idx] = 1.0
            basis[r] = s_idx
            s_idx += 1
        else:
            if rel == GE:
                tab[r, s_idx] = -1.0
                s_idx += 1
            tab[r, a_idx] = 1.0
            basis[r] = a_idx
            art_cols.append(a_idx)
            a_idx += 1

    is_art = np.zeros(width, dtype=bool)
    is_art[art_cols] = True

    if art_cols:
        # phase 1: minimise the sum of artificials
        tab[-1, :] = 0.0
        for r in range(m):
            if is_art[basis[r]]:
                tab[-1] -= tab[r]
        tab[-1, art_cols] = 0.0
        _run_simplex(tab, basis, np.ones(width, dtype=bool))
        if -tab[-1, -1] > 1e-9:
            raise InfeasibleError("LP has no feasible point")
        # drive remaining artificials out of the basis
        for r in range(m):
            if is_art[basis[r]]:
                nz = np.flatnonzero((np.abs(tab[r, :width]) > _EPS) & ~is_art)
                if nz.size:
                    _pivot(tab, basis, r, int(nz[0]))

    # phase 2
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    for r in range(m):
        j = basis[r]
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[r]
    _run_simplex(tab, basis, ~is_art)

    z = np.zeros(width)
    for r in range(m):
        z[basis[r]] = tab[r, -1]
    x = lo + z[:n]
    return x, float(c @ x)
