"""Conditional-independence tests behind one interface.

Three deciders: a stratified chi-square (or G-squared) test for categorical
columns, a Fisher-z partial-correlation test for continuous columns, and an
exact oracle that answers from a ground-truth DAG.  Tests are pure functions
of (dataset, query) and safe to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, Dataset
from .errors import DegenerateInputError, InputError
from .graph import GraphKind, MixedGraph, d_separated
from .tails import chi2_sf, normal_sf

__all__ = [
    "CiTestResult",
    "chi_square_test",
    "fisher_z_test",
    "CiOracle",
    "oracle_test",
]

PEARSON = "pearson"
GSQUARED = "gsquared"


@dataclass(frozen=True)
class CiTestResult:
    """Outcome of one conditional-independence test."""

    statistic: float
    dof: int
    p_value: float
    independent: bool
    alpha: float


def _crosstab(d: Dataset, x: str, y: str, s: tuple[str, ...]) -> tuple[np.ndarray, int, int]:
    """Counts with shape (n_strata, arity_x, arity_y); strata are joint levels of s."""
    for name in (x, y, *s):
        if d.col(name).kind != CATEGORICAL:
            raise InputError(f"chi-square test needs categorical columns, {name!r} is not")
    cx, cy = d.col(x), d.col(y)
    rx, ry = cx.arity, cy.arity
    stratum = np.zeros(d.n, dtype=np.int64)
    n_strata = 1
    for name in s:
        c = d.col(name)
        stratum = stratum * c.arity + c.values
        n_strata *= c.arity
    flat = (stratum * rx + cx.values) * ry + cy.values
    counts = np.bincount(flat, minlength=n_strata * rx * ry)
    return counts.reshape(n_strata, rx, ry).astype(np.float64), rx, ry


def chi_square_test(
    d: Dataset,
    x: str,
    y: str,
    s=(),
    alpha: float = 0.05,
    variant: str = PEARSON,
) -> CiTestResult:
    """Test x independent of y given the joint strata of s.

    The statistic sums the per-stratum Pearson (or likelihood-ratio) statistic
    over strata; each stratum contributes (r'-1)(c'-1) degrees of freedom,
    where r' and c' count rows/columns with nonzero marginals there, and
    strata with fewer than two nonzero rows or columns contribute nothing.
    Zero total degrees of freedom means the query was uninformative and is
    reported as independent.
    """
    s = tuple(s)
    if x == y:
        raise InputError("x and y must be distinct")
    if x in s or y in s:
        raise InputError("x and y must not appear in the conditioning set")
    if d.n == 0:
        raise InputError("empty dataset")
    if variant not in (PEARSON, GSQUARED):
        raise InputError(f"unknown chi-square variant {variant!r}")
    counts, _, _ = _crosstab(d, x, y, s)

    row = counts.sum(axis=2)  # (strata, rx)
    col = counts.sum(axis=1)  # (strata, ry)
    tot = counts.sum(axis=(1, 2))  # (strata,)
    r_eff = (row > 0).sum(axis=1)
    c_eff = (col > 0).sum(axis=1)
    informative = (r_eff >= 2) & (c_eff >= 2)
    dof = int(((r_eff - 1) * (c_eff - 1))[informative].sum())
    if dof == 0:
        return CiTestResult(0.0, 0, 1.0, True, alpha)

    safe_tot = np.where(tot > 0, tot, 1.0)
    expected = row[:, :, None] * col[:, None, :] / safe_tot[:, None, None]
    expected[~informative] = 0.0
    mask = expected > 0
    if variant == PEARSON:
        diff = np.where(mask, counts - expected, 0.0)
        statistic = float((diff * diff / np.where(mask, expected, 1.0)).sum())
    else:
        pos = mask & (counts > 0)
        ratio = np.where(pos, counts / np.where(pos, expected, 1.0), 1.0)
        statistic = float(2.0 * (counts * np.where(pos, np.log(ratio), 0.0)).sum())
    p = chi2_sf(statistic, dof)
    return CiTestResult(statistic, dof, p, p > alpha, alpha)


def fisher_z_test(d: Dataset, x: str, y: str, s=(), alpha: float = 0.05) -> CiTestResult:
    """Fisher-z test of zero partial correlation for continuous columns.

    The partial correlation comes from inverting the empirical correlation
    submatrix over (x, y, s); the statistic is
    sqrt(n - |s| - 3) * atanh(rho) referred to the standard normal.
    """
    s = tuple(s)
    if x == y:
        raise InputError("x and y must be distinct")
    if x in s or y in s:
        raise InputError("x and y must not appear in the conditioning set")
    for name in (x, y, *s):
        if d.col(name).kind != CONTINUOUS:
            raise InputError(f"fisher-z test needs continuous columns, {name!r} is not")
    if d.n <= len(s) + 3:
        raise InputError(f"need more than |s| + 3 = {len(s) + 3} rows, have {d.n}")

    mat = np.column_stack([d.col(name).values for name in (x, y, *s)])
    sd = mat.std(axis=0)
    if np.any(sd == 0):
        raise DegenerateInputError("constant column in correlation submatrix")
    corr = np.corrcoef(mat, rowvar=False)
    if s:
        try:
            precision = np.linalg.inv(corr)
        except np.linalg.LinAlgError:
            raise DegenerateInputError("singular correlation submatrix") from None
        if not np.isfinite(precision).all() or precision[0, 0] <= 0 or precision[1, 1] <= 0:
            raise DegenerateInputError("singular correlation submatrix")
        rho = -precision[0, 1] / math.sqrt(precision[0, 0] * precision[1, 1])
    else:
        rho = corr[0, 1]
    rho = float(np.clip(rho, -1.0, 1.0))

    scale = math.sqrt(d.n - len(s) - 3)
    if abs(rho) >= 1.0:
        statistic = math.inf
        p = 0.0
    else:
        statistic = abs(scale * 0.5 * math.log((1.0 + rho) / (1.0 - rho)))
        p = 2.0 * normal_sf(statistic)
    # dof records the effective sample size entering the z scale
    return CiTestResult(statistic, d.n - len(s) - 3, p, p > alpha, alpha)


@dataclass(frozen=True)
class CiOracle:
    """Population-limit test: answers queries by d-separation in a true DAG.

    Only ``observed`` nodes may be queried; the rest act as latent variables.
    """

    truth: MixedGraph
    observed: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.truth.kind is not GraphKind.DAG:
            raise InputError("oracle truth must be a DAG")
        object.__setattr__(self, "observed", tuple(self.observed))
        for name in self.observed:
            self.truth.index(name)

    def _check(self, name: str) -> None:
        if name not in self.observed:
            raise InputError(f"{name!r} is not an observed node of the oracle")


def oracle_test(o: CiOracle, x: str, y: str, s=()) -> bool:
    """True iff x and y are d-separated given s in the oracle's truth DAG."""
    s = tuple(s)
    for name in (x, y, *s):
        o._check(name)
    return d_separated(o.truth, x, y, s)
