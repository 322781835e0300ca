"""Box-Cox transformation, interaction expansion, standardization, and
ordinary least squares with full inference."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.special import ndtri, stdtr

from .errors import (
    DegenerateVariance,
    NonPositiveValue,
    NumericalFailure,
    TooFewSamples,
    Underdetermined,
)

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def boxcox_transform(y: np.ndarray, lam: float) -> np.ndarray:
    """(y**lam - 1)/lam, or log(y) when |lam| < 1e-8. Requires y > 0."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise NonPositiveValue("Box-Cox requires strictly positive values")
    if abs(lam) < 1e-8:
        return np.log(y)
    return (np.power(y, lam) - 1.0) / lam


def boxcox_loglik(y: np.ndarray, lam: float) -> float:
    """Profile log-likelihood of the Box-Cox parameter under normal errors."""
    z = boxcox_transform(y, lam)
    var = z.var()
    if var <= 0.0:
        return -np.inf
    n = len(y)
    return float(-0.5 * n * np.log(var) + (lam - 1.0) * np.log(y).sum())


def boxcox_lambda(y: np.ndarray, lo: float = -5.0, hi: float = 5.0,
                  tol: float = 1e-6) -> float:
    """Golden-section maximizer of the profile log-likelihood on [lo, hi]."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise NonPositiveValue("Box-Cox requires strictly positive values")
    if len(y) < 10:
        raise TooFewSamples(f"need at least 10 values, got {len(y)}")
    if np.ptp(y) == 0.0:
        raise DegenerateVariance("constant input: Box-Cox parameter is undefined")
    logy = np.log(y)
    logsum = logy.sum()

    def llf(lam: float) -> float:
        z = logy if abs(lam) < 1e-8 else (np.exp(lam * logy) - 1.0) / lam
        var = z.var()
        if var <= 0.0 or not np.isfinite(var):
            return -np.inf
        return -0.5 * len(y) * np.log(var) + (lam - 1.0) * logsum

    a, b = lo, hi
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = llf(c), llf(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = llf(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = llf(d)
    return 0.5 * (a + b)


def interaction_expand(X: np.ndarray, names: list[str]) -> tuple[np.ndarray, list[str]]:
    """Append all pairwise products x_i * x_j (i < j). Interaction columns are
    named 'a*b' with the two factor names in alphabetical order."""
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    if len(names) != p:
        raise ValueError("names/column mismatch")
    cols = [X]
    new_names = list(names)
    for i in range(p):
        for j in range(i + 1, p):
            cols.append((X[:, i] * X[:, j])[:, None])
            a, b = sorted((names[i], names[j]))
            new_names.append(f"{a}*{b}")
    return np.hstack(cols), new_names


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-column z-scores (population std). Returns (Z, means, stds, constant)
    where constant flags zero-variance columns, which map to all-zeros."""
    X = np.asarray(X, dtype=np.float64)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0.0
    safe = np.where(constant, 1.0, stds)
    Z = (X - means) / safe
    Z[:, constant] = 0.0
    return Z, means, stds, constant


@dataclass
class OlsReport:
    """Least-squares fit artifact with coefficient inference and residual
    diagnostics."""

    names: list[str]           # kept columns, intercept first
    coef: np.ndarray
    stderr: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    r_squared: float
    adj_r_squared: float
    residuals: np.ndarray
    fitted: np.ndarray
    qq_theoretical: np.ndarray
    qq_sample: np.ndarray
    dropped: list[str]         # rank-deficient columns removed from the fit
    n_rows: int
    dof: int
    boxcox_lam: float | None = None

    def by_abs_coef(self, include_intercept: bool = False) -> list[tuple[str, float, float, float, float]]:
        """(name, coef, stderr, t, p) sorted by |coef| descending."""
        rows = [
            (n, float(c), float(s), float(t), float(p))
            for n, c, s, t, p in zip(self.names, self.coef, self.stderr, self.tvalues, self.pvalues)
            if include_intercept or n != "intercept"
        ]
        return sorted(rows, key=lambda r: (-abs(r[1]), r[0]))


def ols_fit(X: np.ndarray, y: np.ndarray, names: list[str] | None = None,
            boxcox_lam: float | None = None) -> OlsReport:
    """OLS with an internal intercept, solved by column-pivoted QR.

    Rank-deficient columns are dropped and listed in the report. Standard
    errors come from sigma^2 (X'X)^-1; p-values are two-sided under the t
    distribution with (rows - kept columns) degrees of freedom.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if names is None:
        names = [f"x{j}" for j in range(p)]
    if n <= p + 1:
        raise Underdetermined(f"{n} rows cannot identify {p} columns plus intercept; "
                              "use more rows or fewer features (e.g. base attributes only)")
    design = np.hstack([np.ones((n, 1)), X])
    all_names = ["intercept", *names]
    try:
        _, R, piv = sla.qr(design, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rtol = max(design.shape) * np.finfo(np.float64).eps
        rank = int(np.sum(diag > rtol * diag[0])) if diag[0] > 0 else 0
        if rank == 0:
            raise NumericalFailure("design matrix is all zeros")
        kept = np.sort(piv[:rank])
        dropped = [all_names[j] for j in np.sort(piv[rank:])]
        Xk = design[:, kept]
        Q2, R2 = np.linalg.qr(Xk)
        coef = sla.solve_triangular(R2, Q2.T @ y)
        rinv = sla.solve_triangular(R2, np.eye(rank))
        xtx_inv_diag = np.sum(rinv * rinv, axis=1)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"least-squares decomposition failed: {e}") from e
    fitted = Xk @ coef
    resid = y - fitted
    rss = float(resid @ resid)
    dof = n - rank
    if dof <= 0:
        raise Underdetermined("no residual degrees of freedom")
    sigma2 = rss / dof
    stderr = np.sqrt(sigma2 * xtx_inv_diag)
    tvals = np.zeros(rank)
    nz = stderr > 0
    tvals[nz] = coef[nz] / stderr[nz]
    exact = ~nz & (coef != 0)  # zero residual variance: infinitely significant
    tvals[exact] = np.sign(coef[exact]) * np.inf
    pvals = 2.0 * stdtr(dof, -np.abs(np.where(np.isfinite(tvals), tvals, np.inf)))
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / dof
    sd = math.sqrt(sigma2) if sigma2 > 0 else 1.0
    std_resid = resid / sd
    qq_theoretical = ndtri((np.arange(n) + 0.5) / n)
    qq_sample = np.sort(std_resid)
    return OlsReport(
        names=[all_names[j] for j in kept],
        coef=coef,
        stderr=stderr,
        tvalues=tvals,
        pvalues=pvals,
        r_squared=r2,
        adj_r_squared=adj,
        residuals=resid,
        fitted=fitted,
        qq_theoretical=qq_theoretical,
        qq_sample=qq_sample,
        dropped=dropped,
        n_rows=n,
        dof=dof,
        boxcox_lam=boxcox_lam,
    )
