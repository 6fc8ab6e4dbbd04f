from typing import Any

import numpy as np
from pydantic import Field, field_validator, model_validator
from scipy import linalg, sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from src.core import InputError, SolverStatus
from src.models.base_model import FrozenModel, Vector


SYMMETRY_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-9
# Above this size the smallest eigenvalue comes from ARPACK instead of a dense factorization.
DENSE_PSD_LIMIT = 3000


def _as_csr(m: Any) -> sparse.csr_matrix:
    return sparse.csr_matrix(m, dtype=float)


def _smallest_eigenvalue_ok(P: sparse.csr_matrix, floor: float) -> bool:
    n = P.shape[0]
    if n <= DENSE_PSD_LIMIT:
        try:
            linalg.cholesky(P.toarray() - floor * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError:
            return False
        return True
    try:
        smallest = eigsh(P, k=1, which="SA", tol=1e-6, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        smallest = exc.eigenvalues
    return len(smallest) == 0 or float(np.min(smallest)) >= floor


class ConeBlocks(FrozenModel):
    """Stacked cone blocks ``||M_i x + m_i|| <= r_i' x + s_i``.

    Block i owns ``dims[i]`` consecutive rows of ``M``/``m`` and row i of ``R``/``s``.
    """

    dims: list[int] = Field(default_factory=list)
    M: Any = None
    m: Vector = Field(default_factory=lambda: np.zeros(0))
    R: Any = None
    s: Vector = Field(default_factory=lambda: np.zeros(0))

    @field_validator("M", "R", mode="before")
    @classmethod
    def to_csr(cls, v):
        return None if v is None else _as_csr(v)

    @property
    def count(self) -> int:
        return len(self.dims)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)]).astype(int)


class ConicProblem(FrozenModel):
    """minimize 0.5 x'Px + q'x + r  s.t.  Ax = b, Gx <= h, cone blocks."""

    n: int = Field(..., ge=1)
    P: Any
    q: Vector
    r: float = 0.0
    A: Any = None
    b: Vector = Field(default_factory=lambda: np.zeros(0))
    G: Any = None
    h: Vector = Field(default_factory=lambda: np.zeros(0))
    cones: ConeBlocks = Field(default_factory=ConeBlocks)

    @field_validator("P", "A", "G", mode="before")
    @classmethod
    def to_csr(cls, v):
        return None if v is None else _as_csr(v)

    @model_validator(mode="after")
    def check_dimensions(self) -> "ConicProblem":
        n = self.n
        if self.P.shape != (n, n) or self.q.shape != (n,):
            raise InputError("Objective dimensions do not match n")
        scale = max(1.0, float(abs(self.P).max()) if self.P.nnz else 0.0)
        asymmetry = abs(self.P - self.P.T)
        if asymmetry.nnz and asymmetry.max() > SYMMETRY_TOLERANCE * scale:
            raise InputError("Objective matrix is not symmetric", details={"asymmetry": float(asymmetry.max())})
        if self.P.nnz and not _smallest_eigenvalue_ok(self.P, -PSD_TOLERANCE * scale):
            raise InputError("Objective matrix is not positive semidefinite")
        if self.A is not None and (self.A.shape[1] != n or self.A.shape[0] != self.b.shape[0]):
            raise InputError("Equality rows do not match n")
        if self.G is not None and (self.G.shape[1] != n or self.G.shape[0] != self.h.shape[0]):
            raise InputError("Inequality rows do not match n")
        cones = self.cones
        if cones.count:
            if any(k < 1 for k in cones.dims):
                raise InputError("Cone blocks need at least one row")
            rows = int(sum(cones.dims))
            if cones.M.shape != (rows, n) or cones.m.shape != (rows,):
                raise InputError("Cone rows do not match n")
            if cones.R.shape != (cones.count, n) or cones.s.shape != (cones.count,):
                raise InputError("Cone scalars do not match n")
        return self

    @property
    def n_eq(self) -> int:
        return 0 if self.A is None else int(self.A.shape[0])

    @property
    def n_ineq(self) -> int:
        return 0 if self.G is None else int(self.G.shape[0])

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.P @ x) + self.q @ x + self.r)


class SolverResult(FrozenModel):
    status: SolverStatus
    x: Vector
    objective: float
    stationarity: float
    primal_feasibility: float
    complementarity: float
    iterations: int = 0

    @property
    def accepted(self) -> bool:
        return self.status in (SolverStatus.OPTIMAL, SolverStatus.INACCURATE)
