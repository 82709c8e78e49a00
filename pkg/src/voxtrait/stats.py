"""Numeric kernel: correlation, correlation-row distance, VIF, OLS, 1-D PCA.

Everything downstream of feature extraction (clustering, multicollinearity
monitoring, cluster representatives) reduces to the five operations here.
All functions are pure and operate on plain numpy arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

#: Condition-number ceiling above which a correlation matrix is treated as
#: singular and VIFs fall back to the per-variable pseudo-inverse route.
SINGULAR_COND = 1e12


class SingularDesignError(ValueError):
    """OLS design matrix is rank-deficient."""


@dataclass
class CorrelationMatrix:
    """Symmetric Pearson correlation matrix with variable names."""

    values: np.ndarray
    names: list[str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        k = self.values.shape[0]
        if self.values.shape != (k, k):
            raise ValueError("correlation matrix must be square")
        if len(self.names) != k:
            raise ValueError("one name per variable required")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass
class VifReport:
    """Per-variable variance inflation factors; +inf marks singular fits."""

    vifs: np.ndarray
    max_vif: float
    names: list[str]


@dataclass
class PrincipalComponent:
    """Leading principal axis of a column cluster.

    loadings has unit L2 norm and its first nonzero entry is positive, so
    the representative is reproducible across runs and platforms.
    """

    loadings: np.ndarray
    explained_variance: float


def correlation(samples: np.ndarray, names: list[str] | None = None) -> CorrelationMatrix:
    """Pearson correlation matrix of the columns of ``samples``.

    Constant columns have undefined correlations; their off-diagonal
    entries are set to 0 with a warning and the diagonal stays 1.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D array with at least 2 rows")
    n, k = X.shape
    if names is None:
        names = [f"x{i}" for i in range(k)]
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    constant = sd == 0.0
    if constant.any():
        bad = [names[i] for i in np.nonzero(constant)[0]]
        warnings.warn(f"constant columns {bad} have undefined correlations, using 0",
                      stacklevel=2)
    safe_sd = np.where(constant, 1.0, sd)
    Z = (X - mean) / safe_sd
    R = (Z.T @ Z) / n
    R = (R + R.T) / 2.0
    R[constant, :] = 0.0
    R[:, constant] = 0.0
    np.fill_diagonal(R, 1.0)
    np.clip(R, -1.0, 1.0, out=R)
    return CorrelationMatrix(R, list(names))


def eq2_distance(R: CorrelationMatrix, u: int, v: int) -> float:
    """Euclidean distance between rows u and v of the |r| matrix.

    The sum runs over every variable, including u and v themselves.
    """
    a = np.abs(R.values[u])
    b = np.abs(R.values[v])
    return float(np.sqrt(np.sum((a - b) ** 2)))


def distance_matrix(R: CorrelationMatrix) -> np.ndarray:
    """All pairwise row distances of the |r| matrix (see eq2_distance)."""
    A = np.abs(R.values)
    diff = A[:, None, :] - A[None, :, :]
    D = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(D, 0.0)
    return (D + D.T) / 2.0


def vif(R: CorrelationMatrix) -> VifReport:
    """Variance inflation factors from a correlation matrix.

    For standardized variables VIF_i = 1/(1 - R_i^2), which equals the
    i-th diagonal entry of the inverse correlation matrix; that identity
    is what we compute. When R is numerically singular the affected
    variables receive the +inf sentinel (their regressions fit exactly),
    via a per-variable pseudo-inverse fallback.
    """
    k = R.dim
    if k < 2:
        raise ValueError("VIF needs at least 2 variables")
    values = R.values
    if np.linalg.cond(values) < SINGULAR_COND:
        vifs = np.diag(np.linalg.inv(values)).copy()
    else:
        vifs = np.empty(k)
        for i in range(k):
            rest = np.delete(np.arange(k), i)
            sub = values[np.ix_(rest, rest)]
            r_i = values[rest, i]
            r2 = float(r_i @ np.linalg.pinv(sub) @ r_i)
            vifs[i] = np.inf if 1.0 - r2 <= 1e-12 else 1.0 / (1.0 - r2)
    return VifReport(vifs=vifs, max_vif=float(np.max(vifs)), names=list(R.names))


def ols(y: np.ndarray, X: np.ndarray, intercept: bool = True) -> tuple[np.ndarray, float]:
    """Ordinary least squares of y on the columns of X.

    Returns (coefficients, R^2); with an intercept the constant is the
    first coefficient and R^2 uses the centered total sum of squares.

    Raises
    ------
    SingularDesignError
        If the design matrix is rank-deficient.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = y.shape[0]
    design = np.column_stack([np.ones(n), X]) if intercept else X
    if n <= design.shape[1] - (1 if intercept else 0):
        raise ValueError("need more observations than predictors")
    coef, _res, rank, _sv = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesignError("design matrix is rank-deficient")
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2)) if intercept else float(y @ y)
    if ss_tot == 0.0:
        raise ValueError("R^2 undefined for a constant response")
    return coef, 1.0 - ss_res / ss_tot


def pca_first_component(samples: np.ndarray) -> tuple[PrincipalComponent, np.ndarray]:
    """Leading principal component of a column cluster.

    Columns are centered, the covariance eigenproblem is solved with a
    deterministic symmetric eigensolver, and the sign is fixed so the
    first nonzero loading is positive. Returns the component together
    with the projection of the centered data onto it.
    """
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError("need at least 2 rows and 2 columns")
    centered = X - X.mean(axis=0)
    cov = (centered.T @ centered) / X.shape[0]
    total = float(np.trace(cov))
    if total <= 0.0:
        raise ValueError("degenerate cluster: all member columns are constant")
    eigvals, eigvecs = np.linalg.eigh(cov)
    lead = eigvecs[:, -1]
    nonzero = np.nonzero(np.abs(lead) > 1e-12)[0]
    if nonzero.size and lead[nonzero[0]] < 0:
        lead = -lead
    lead = lead / np.linalg.norm(lead)
    component = PrincipalComponent(
        loadings=lead,
        explained_variance=float(eigvals[-1] / total),
    )
    return component, centered @ lead
