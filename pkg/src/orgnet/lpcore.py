"""Linear programs in row form and a bounded two-phase revised simplex.

Models are minimisation problems::

    minimize    c @ x
    subject to  A[i] @ x  (<=, =, >=)  b[i]
                lower <= x <= upper

The solver works on an internal standard form (shifted variables, one slack
per inequality row, artificials where no slack can start the basis).  Basis
solves go through an LU factorisation plus a product-form eta file that is
rebuilt every ``REFACTOR_EVERY`` pivots.

When the starting basis is dual feasible (nonnegative costs, as in every
network-design model here) a dual simplex with steepest-edge row selection
finds a feasible optimum directly.  Otherwise a primal phase 1 runs on the
artificials.  The primal simplex then cleans up, pricing by devex (or
Dantzig, or Bland on request).  Degenerate stalls first perturb the rhs and
then, if that is not enough, drop to Bland's rule.

Every returned status carries a certificate: primal/dual vectors for an
optimum, a Farkas pair ``(y, v)`` for infeasibility and an improving ray for
unboundedness.  ``check_solution`` and ``check_farkas`` re-derive the
guarantees directly from the model data.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels

LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)
PRICING_RULES = ("devex", "dantzig", "bland")
_SENSE_ALIASES = {"<=": LE, "<": LE, "L": LE, "=": EQ, "==": EQ, "E": EQ, ">=": GE, ">": GE, "G": GE}

DENSE_NNZ_LIMIT = 10_000
REFACTOR_EVERY = 150
DEGENERATE_RUN = 60
ETA_DROP = 1e-13
DSE_MIN_WEIGHT = 1e-4
DEFAULT_SEED = 20240601

TOL_FEAS = 1e-8
TOL_GAP = 1e-6


class LpInputError(ValueError):
    """Raised for malformed models (shape mismatch, non-finite data)."""


class IterationLimitError(RuntimeError):
    """Raised when the simplex exceeds its pivot budget."""


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def default_iter_cap(n_vars: int, n_constraints: int) -> int:
    env = os.environ.get("ORGNET_ITER_CAP")
    if env:
        return int(env)
    return 50 * (n_vars + n_constraints)


def _as_matrix(A):
    # dense below the nnz limit, CSR rows above it
    if sp.issparse(A):
        A = sp.csr_matrix(A, dtype=float)
        if A.nnz < DENSE_NNZ_LIMIT:
            return A.toarray()
        return A
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise LpInputError("constraint matrix must be 2-D")
    if np.count_nonzero(A) >= DENSE_NNZ_LIMIT:
        return sp.csr_matrix(A)
    return A


@dataclass(frozen=True, eq=False)
class LpModel:
    """A minimisation LP.  ``A`` is a dense array or a CSR matrix."""

    objective: np.ndarray
    A: np.ndarray | sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    col_labels: tuple | None = None
    row_labels: tuple | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        m = len(self.senses)
        if isinstance(self.A, (list, tuple)) and len(self.A) == 0:
            A = np.zeros((0, n))
        else:
            A = _as_matrix(self.A)
        if A.shape != (m, n):
            raise LpInputError(f"constraint matrix has shape {A.shape}, expected {(m, n)}")
        b = np.asarray(self.rhs, dtype=float).ravel()
        if b.size != m:
            raise LpInputError(f"rhs has {b.size} entries for {m} rows")
        try:
            senses = tuple(_SENSE_ALIASES[s] for s in self.senses)
        except KeyError as exc:
            raise LpInputError(f"unknown relation {exc.args[0]!r}") from None
        lo = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        hi = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if lo.size != n or hi.size != n:
            raise LpInputError("bound vectors must have one entry per variable")
        data = A.data if sp.issparse(A) else A
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(data)) and np.all(np.isfinite(b))):
            raise LpInputError("objective, matrix and rhs must be finite")
        if not np.all(np.isfinite(lo)):
            raise LpInputError("lower bounds must be finite")
        if np.any(np.isnan(hi)) or np.any(hi == -np.inf):
            raise LpInputError("upper bounds must be a number or +inf")
        if np.any(lo > hi):
            raise LpInputError("lower bound exceeds upper bound")
        for name, value in (("objective", c), ("A", A), ("senses", senses), ("rhs", b), ("lower", lo), ("upper", hi)):
            object.__setattr__(self, name, value)

    @classmethod
    def from_rows(cls, objective, rows: Iterable, lower=None, upper=None, **labels) -> "LpModel":
        """Build from ``(coefficients, relation, rhs)`` triples.

        Coefficients may be a full-length sequence or a ``{column: value}`` dict.
        """
        c = np.asarray(objective, dtype=float).ravel()
        n = c.size
        rows = list(rows)
        A = np.zeros((len(rows), n))
        senses, rhs = [], []
        for i, (coeffs, sense, value) in enumerate(rows):
            if isinstance(coeffs, dict):
                for j, a in coeffs.items():
                    A[i, j] += a
            else:
                coeffs = np.asarray(coeffs, dtype=float).ravel()
                if coeffs.size != n:
                    raise LpInputError(f"row {i} has {coeffs.size} coefficients for {n} variables")
                A[i] = coeffs
            senses.append(sense)
            rhs.append(value)
        return cls(c, A, tuple(senses), np.asarray(rhs, dtype=float), lower, upper, **labels)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return len(self.senses)

    @property
    def nnz(self) -> int:
        return self.A.nnz if sp.issparse(self.A) else int(np.count_nonzero(self.A))

    def row_activity(self, x) -> np.ndarray:
        return np.asarray(self.A @ np.asarray(x, dtype=float)).ravel()

    def scaled(self, factor: float) -> "LpModel":
        """Copy with the objective multiplied by ``factor``."""
        return LpModel(self.objective * factor, self.A, self.senses, self.rhs, self.lower, self.upper,
                       self.col_labels, self.row_labels)


class LpBuilder:
    """Incremental sparse model assembly with labelled rows and columns."""

    def __init__(self):
        self.costs: list[float] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.col_labels: list = []
        self.row_labels: list = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []

    def add_var(self, label, cost: float = 0.0, lower: float = 0.0, upper: float = math.inf) -> int:
        self.costs.append(cost)
        self.lower.append(lower)
        self.upper.append(upper)
        self.col_labels.append(label)
        return len(self.costs) - 1

    def add_row(self, coeffs: dict[int, float] | Iterable[tuple[int, float]], sense: str, rhs: float, label=None) -> int:
        i = len(self.senses)
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for j, a in items:
            if a != 0:
                self._rows.append(i)
                self._cols.append(j)
                self._vals.append(a)
        self.senses.append(sense)
        self.rhs.append(rhs)
        self.row_labels.append(label)
        return i

    def build(self) -> LpModel:
        n, m = len(self.costs), len(self.senses)
        A = sp.coo_matrix((self._vals, (self._rows, self._cols)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        return LpModel(np.array(self.costs, dtype=float), A, tuple(self.senses), np.array(self.rhs, dtype=float),
                       np.array(self.lower, dtype=float), np.array(self.upper, dtype=float),
                       tuple(self.col_labels), tuple(self.row_labels))


@dataclass
class LpSolution:
    status: Status
    objective: float
    primal: np.ndarray | None = None
    dual: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    certificate: np.ndarray | None = None
    bound_multipliers: np.ndarray | None = None
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# --------------------------------------------------------------------------- #
# basis factorisation


class _Factor:
    """LU of the basis matrix plus an eta file of rank-one updates."""

    def __init__(self, B, dense: bool):
        self.dense = dense
        if dense:
            Bd = B.toarray() if sp.issparse(B) else B
            self._lu = scipy.linalg.lu_factor(Bd, check_finite=False)
            cond = np.abs(np.diag(self._lu[0]))
            if cond.size and cond.min() < 1e-11 * max(1.0, cond.max()):
                raise np.linalg.LinAlgError("singular basis")
            m = Bd.shape[0]
        else:
            try:
                lu = spla.splu(sp.csc_matrix(B), permc_spec="COLAMD")
            except RuntimeError as exc:
                raise np.linalg.LinAlgError(str(exc)) from None
            L, U = lu.L, lu.U
            udiag = _kernels.udiag_positions(U.indptr, U.indices)
            if (udiag < 0).any():
                raise np.linalg.LinAlgError("singular basis")
            diag = np.abs(U.data[udiag])
            if diag.size and diag.min() < 1e-11 * max(1.0, diag.max()):
                raise np.linalg.LinAlgError("singular basis")
            self._lu = (L.indptr, L.indices, L.data, U.indptr, U.indices, U.data, udiag, lu.perm_r, lu.perm_c)
            Lr, Ur = L.tocsr(), U.tocsr()
            self._lu_t = (Lr.indptr, Lr.indices, Lr.data, Ur.indptr, Ur.indices, Ur.data,
                          _kernels.udiag_positions(Ur.indptr, Ur.indices), lu.perm_r, lu.perm_c)
            m = B.shape[0]
        self.n_etas = 0
        self._rows = np.empty(REFACTOR_EVERY + 1, dtype=np.int64)
        self._piv = np.empty(REFACTOR_EVERY + 1)
        self._start = np.zeros(REFACTOR_EVERY + 2, dtype=np.int64)
        self._idx = np.empty(4 * m + 16, dtype=np.int64)
        self._vals = np.empty(4 * m + 16)

    def ftran(self, v):
        if self.dense:
            x = scipy.linalg.lu_solve(self._lu, v, check_finite=False)
        else:
            x = _kernels.lu_solve(*self._lu, np.asarray(v, dtype=float))
        if self.n_etas:
            _kernels.eta_forward(x, self.n_etas, self._rows, self._piv, self._start, self._idx, self._vals)
        return x

    def btran(self, v):
        z = np.array(v, dtype=float)
        if self.n_etas:
            _kernels.eta_backward(z, self.n_etas, self._rows, self._piv, self._start, self._idx, self._vals)
        if self.dense:
            return scipy.linalg.lu_solve(self._lu, z, trans=1, check_finite=False)
        return _kernels.lu_solve_t(*self._lu_t, z)

    def update(self, r: int, alpha: np.ndarray):
        e = self.n_etas
        if e + 1 >= self._rows.size:
            self._rows = np.resize(self._rows, 2 * self._rows.size)
            self._piv = np.resize(self._piv, 2 * self._piv.size)
            self._start = np.resize(self._start, 2 * self._start.size + 1)
        while not _kernels.eta_append(alpha, r, e, self._rows, self._piv, self._start, self._idx, self._vals, ETA_DROP):
            self._idx = np.resize(self._idx, 2 * self._idx.size)
            self._vals = np.resize(self._vals, 2 * self._vals.size)
        self.n_etas = e + 1


# --------------------------------------------------------------------------- #
# the simplex proper


class _Simplex:
    PIVOT_TOL = 1e-7
    PRIMAL_TOL = 1e-9
    DUAL_TOL = 1e-9
    PERTURBATION = 1e-6

    def __init__(self, A: sp.csc_matrix, b: np.ndarray, upper: np.ndarray, basis: np.ndarray,
                 iter_cap: int, pricing: str, debug: bool, seed: int = DEFAULT_SEED):
        self.A = A
        self.AT = A.T.tocsr()
        self.m, self.ntot = A.shape
        self.b = b
        self.upper = upper
        self.basis = basis.copy()
        self.is_basic = np.zeros(self.ntot, dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = np.zeros(self.ntot, dtype=bool)
        self.excluded = np.zeros(self.ntot, dtype=bool)
        self.dense = self.m <= 400
        self.iter_cap = iter_cap
        self.pricing = pricing
        self.iterations = 0
        self.debug = debug
        self.trace: list = []
        self.b_shift = None
        self.careful = 0
        self.banned = -1
        self.weights = None
        self._rng = np.random.default_rng(seed)
        self._refactor()

    # -- linear algebra ---------------------------------------------------- #
    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return col

    def _refactor(self):
        self.factor = _Factor(self.A[:, self.basis], self.dense)
        self._good = (self.basis.copy(), self.at_upper.copy())
        rhs = self.b.copy()
        up = np.flatnonzero(self.at_upper)
        if up.size:
            rhs -= self.A[:, up] @ self.upper[up]
        self.xB = self.factor.ftran(rhs)

    def _duals(self):
        self.y = self.factor.btran(self.cost[self.basis])
        self.d = self.cost - self.AT @ self.y

    def _pivot_row(self, r: int) -> tuple[np.ndarray, np.ndarray]:
        e_r = np.zeros(self.m)
        e_r[r] = 1.0
        rho = self.factor.btran(e_r)
        return rho, self.AT @ rho

    def _pivot(self, q: int, r: int, alpha: np.ndarray, leave_upper: bool, entering_value: float,
               pivot_row=None) -> bool:
        """Swap column q into row r; update duals from the pivot row.

        Returns False (after restoring the last factorised basis) when the
        pivot turns out to be numerically unsafe.
        """
        rho, row = self._pivot_row(r) if pivot_row is None else pivot_row
        if abs(row[q] - alpha[r]) > 1e-9 + 1e-7 * abs(alpha[r]):
            self._recover(q)
            return False
        theta_d = self.d[q] / alpha[r]
        self.d -= theta_d * row
        self.y += theta_d * rho
        leaving = self.basis[r]
        if self.weights is not None:
            w_q = self.weights[q]
            top = _kernels.devex_update(self.weights, row, alpha[r], w_q)
            self.weights[leaving] = max(w_q / (alpha[r] * alpha[r]), 1.0)
            if max(top, self.weights[leaving]) > 1e6:
                self.weights[:] = 1.0
        self.at_upper[leaving] = leave_upper
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.at_upper[q] = False
        self.basis[r] = q
        self.xB[r] = entering_value
        self.d[q] = 0.0
        self.iterations += 1
        self.banned = -1
        if self.careful or self.factor.n_etas >= REFACTOR_EVERY:
            self.careful = max(self.careful - 1, 0)
            try:
                self._refactor()
            except np.linalg.LinAlgError:
                self._recover(q)
                return False
            self._duals()
        else:
            self.factor.update(r, alpha)
        return True

    def _recover(self, q: int):
        """Return to the last factorised basis and refactor every pivot for a while."""
        basis, at_upper = self._good
        self.basis = basis.copy()
        self.at_upper = at_upper.copy()
        self.is_basic[:] = False
        self.is_basic[self.basis] = True
        self._refactor()
        self._duals()
        if self.weights is not None:
            self.weights[:] = 1.0
        self.careful = 2 * REFACTOR_EVERY
        self.banned = q

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = self.xB
        return x

    # -- main loop --------------------------------------------------------- #
    def run(self, cost: np.ndarray) -> str:
        """Iterate to 'optimal', or stop at 'unbounded' with the ray stored."""
        self.cost = cost
        self._duals()
        self.weights = np.ones(self.ntot) if self.pricing == "devex" else None
        degenerate = 0
        bland = self.pricing == "bland"
        perturbed = False
        while True:
            if self.iterations >= self.iter_cap:
                raise IterationLimitError(f"simplex exceeded {self.iter_cap} iterations")
            blocked = self.is_basic | self.excluded
            if self.banned >= 0:
                blocked[self.banned] = True
            if self.debug:
                self.trace.append(self._trace_entry())
            q = -1
            if bland:
                score = np.where(self.at_upper, self.d, -self.d)
                score[blocked] = 0.0
                cand = np.flatnonzero(score > self.DUAL_TOL)
                if cand.size:
                    q = int(cand[0])
            else:
                use_weights = self.weights is not None
                weights = self.weights if use_weights else self.d
                q = int(_kernels.price(self.d, self.at_upper, blocked, weights, use_weights, self.DUAL_TOL))
            if q < 0:
                # guard against drift in the updated duals before declaring optimality
                self.banned = -1
                self._refactor()
                self._duals()
                score = np.where(self.at_upper, self.d, -self.d)
                score[self.is_basic | self.excluded] = 0.0
                if score.max(initial=0.0) > self.DUAL_TOL:
                    continue
                if self.b_shift is not None:
                    self._unperturb()
                    self._dual_cleanup()
                    degenerate = 0
                    continue
                return "optimal"
            direction = -1.0 if self.at_upper[q] else 1.0
            alpha = self.factor.ftran(self._column(q))
            r, theta = self._ratio_test(alpha, direction, bland)
            flip = math.isfinite(self.upper[q]) and self.upper[q] <= theta
            if r < 0 and not flip:
                self.ray_var, self.ray_dir, self.ray_alpha = q, direction, alpha
                return "unbounded"
            step = self.upper[q] if flip else theta
            if step <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN and not bland:
                    if not perturbed:
                        self._perturb()
                        perturbed = True
                        degenerate = 0
                        continue
                    else:
                        bland = True
            else:
                degenerate = 0
                bland = self.pricing == "bland"
            self.xB -= direction * step * alpha
            if flip:
                self.at_upper[q] = not self.at_upper[q]
                self.iterations += 1
                continue
            leaving = self.basis[r]
            entering_value = (self.upper[q] if self.at_upper[q] else 0.0) + direction * step
            leave_upper = bool(direction * alpha[r] < 0 and math.isfinite(self.upper[leaving]))
            self._pivot(q, r, alpha, leave_upper, entering_value)

    def _ratio_test(self, alpha: np.ndarray, direction: float, bland: bool) -> tuple[int, float]:
        if not bland:
            # Harris: relaxed bound first, then the largest pivot within it
            r, theta = _kernels.harris_ratio(alpha, direction, self.xB, self.upper[self.basis],
                                             self.PIVOT_TOL, self.PRIMAL_TOL)
            return int(r), float(theta)
        # Bland: smallest ratio, ties to the lowest basic index
        delta = -direction * alpha
        ub = self.upper[self.basis]
        dec = delta < -self.PIVOT_TOL
        inc = (delta > self.PIVOT_TOL) & np.isfinite(ub)
        if not (dec.any() or inc.any()):
            return -1, math.inf
        xB = self.xB
        ratios = np.full(self.m, np.inf)
        ratios[dec] = np.maximum(xB[dec], 0.0) / -delta[dec]
        ratios[inc] = np.maximum(ub[inc] - xB[inc], 0.0) / delta[inc]
        theta = ratios.min()
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        r = int(ties[np.argmin(self.basis[ties])])
        return r, theta

    # -- degeneracy handling ----------------------------------------------- #
    def _perturb(self):
        """Shift the rhs so every basic variable moves strictly inside its box."""
        ub = self.upper[self.basis]
        eps = self.PERTURBATION * self._rng.uniform(0.5, 1.0, self.m)
        shift = np.where(ub - self.xB >= 4 * eps, eps, np.where(self.xB >= 4 * eps, -eps, 0.0))
        shift[self.excluded[self.basis]] = 0.0
        self.b_shift = self.A[:, self.basis] @ shift
        self.b = self.b + self.b_shift
        self.xB = self.xB + shift

    def _unperturb(self):
        self.b = self.b - self.b_shift
        self.b_shift = None
        self._refactor()
        self._duals()

    def _row_norms(self) -> np.ndarray:
        """Exact dual steepest-edge weights when cheap, else unit reference weights."""
        if self.factor.n_etas == 0 and self._logical_basis():
            return np.ones(self.m)
        if self.m <= 400:
            inv = self.factor.ftran(np.eye(self.m))
            return np.maximum((inv * inv).sum(axis=1), DSE_MIN_WEIGHT)
        return np.ones(self.m)

    def _logical_basis(self) -> bool:
        cols = self.A[:, self.basis]
        return cols.nnz == self.m and bool(np.all(np.abs(cols.data) == 1.0))

    def run_dual(self, cost: np.ndarray) -> str:
        """Dual simplex from a dual-feasible basis: 'optimal' or 'infeasible'.

        Runs on slightly perturbed costs, shifted away from zero in the
        direction that keeps the start dual feasible, so that the many
        zero-cost columns do not tie in the dual ratio test.  The true costs
        are restored on exit; any dual infeasibility this leaves is small and
        is for the primal simplex to clean up.
        """
        eps = self.PERTURBATION * (1.0 + np.abs(cost)) * self._rng.uniform(0.5, 1.0, self.ntot)
        self.cost = cost + np.where(self.at_upper, -eps, eps)
        self._duals()
        try:
            return self._dual_loop()
        finally:
            self.cost = cost
            self._duals()

    def _dual_cleanup(self):
        if self._dual_loop() != "optimal":
            raise np.linalg.LinAlgError("dual cleanup found no entering column")

    def _dual_loop(self) -> str:
        """Bounded dual simplex until primal feasible.

        Returns 'infeasible' when a primal-infeasible row admits no entering
        column; the caller decides how to certify that.
        """
        # dual steepest-edge weights ||e_r^T B^-1||^2, one per basis row
        row_w = self._row_norms()
        while True:
            ub = self.upper[self.basis]
            below = -self.xB
            above = self.xB - ub
            infeas = np.maximum(below, above)
            if infeas.max(initial=0.0) <= self.PRIMAL_TOL:
                return "optimal"
            r = int(np.argmax(np.where(infeas > self.PRIMAL_TOL, infeas * infeas / row_w, 0.0)))
            if self.iterations >= self.iter_cap:
                raise IterationLimitError(f"simplex exceeded {self.iter_cap} iterations")
            to_lower = below[r] > above[r]
            rho, row = self._pivot_row(r)
            # x_B[r] moves by -row[j] * dx_j; pick columns that push it back
            want = -1.0 if to_lower else 1.0
            sign = np.where(self.at_upper, -1.0, 1.0)
            eligible = ~(self.is_basic | self.excluded) & (want * sign * row > self.PIVOT_TOL)
            if self.banned >= 0:
                eligible[self.banned] = False
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return "infeasible"
            # Harris pass on the dual side: widest pivot among near-minimal ratios
            pivots = np.abs(row[cand])
            dj = np.abs(self.d[cand])
            bound = ((dj + self.DUAL_TOL) / pivots).min()
            near = np.flatnonzero(dj / pivots <= bound)
            q = int(cand[near[np.argmax(pivots[near])]])
            alpha = self.factor.ftran(self._column(q))
            target = 0.0 if to_lower else ub[r]
            dx = (self.xB[r] - target) / alpha[r]
            entering_value = (self.upper[q] if self.at_upper[q] else 0.0) + dx
            self.xB -= alpha * dx
            # steepest-edge update needs tau = B^-1 rho under the old basis
            tau = self.factor.ftran(rho)
            w_r = float(rho @ rho)
            if self._pivot(q, r, alpha, not to_lower, entering_value, (rho, row)):
                ratio = alpha / alpha[r]
                row_w += ratio * (ratio * w_r - 2.0 * tau)
                np.maximum(row_w, DSE_MIN_WEIGHT, out=row_w)
                row_w[r] = max(w_r / (alpha[r] * alpha[r]), DSE_MIN_WEIGHT)
            else:
                row_w = self._row_norms()

    def _trace_entry(self):
        x = self.values()
        primal = float(self.cost @ x)
        # Lagrangian bound over the box [0, upper]
        with np.errstate(invalid="ignore"):
            box = np.where(self.d < 0, self.d * self.upper, 0.0)
        lag = float(self.b @ self.y) + float(box[~self.excluded].sum())
        return (self.iterations, primal, lag if np.isfinite(lag) else -math.inf)


@dataclass
class _StandardForm:
    A: sp.csc_matrix
    b: np.ndarray
    upper: np.ndarray
    row_sign: np.ndarray
    n: int
    n_slack: int
    slack_of_row: np.ndarray
    art_rows: np.ndarray
    basis: np.ndarray
    model: LpModel | None = None
    tol_feas: float = TOL_FEAS
    spent: int = 0


def _standard_form(model: LpModel) -> _StandardForm:
    m, n = model.n_constraints, model.n_vars
    A = sp.csr_matrix(model.A) if not sp.issparse(model.A) else model.A
    lo, hi = model.lower, model.upper
    b = model.rhs - (A @ lo if m else np.zeros(0))
    senses = np.array(model.senses, dtype=object)
    ineq = np.flatnonzero(senses != EQ)
    slack_coef = np.where(senses[ineq] == LE, 1.0, -1.0)
    S = sp.csr_matrix((slack_coef, (ineq, np.arange(ineq.size))), shape=(m, ineq.size))
    slack_of_row = np.full(m, -1)
    slack_of_row[ineq] = n + np.arange(ineq.size)
    sign = np.where(b < 0, -1.0, 1.0)
    D = sp.diags(sign)
    AS = D @ sp.hstack([A, S], format="csr")
    bs = sign * b
    # slack starts basic when its flipped coefficient is +1
    basis = np.full(m, -1)
    slack_sign = np.zeros(m)
    slack_sign[ineq] = slack_coef * sign[ineq]
    has_slack = slack_sign > 0
    basis[has_slack] = slack_of_row[has_slack]
    art_rows = np.flatnonzero(~has_slack)
    ncols = n + ineq.size
    art = sp.csr_matrix((np.ones(art_rows.size), (art_rows, np.arange(art_rows.size))), shape=(m, art_rows.size))
    full = sp.hstack([AS, art], format="csc")
    basis[art_rows] = ncols + np.arange(art_rows.size)
    upper = np.concatenate([hi - lo, np.full(ineq.size + art_rows.size, np.inf)])
    return _StandardForm(full, bs, upper, sign, n, ineq.size, slack_of_row, art_rows, basis)


def _primal_phase1(sf: _StandardForm, iter_cap: int, pricing: str, debug: bool, seed: int):
    """Classic phase 1 on the artificials; an infeasible LpSolution on failure."""
    smp = _Simplex(sf.A, sf.b, sf.upper.copy(), sf.basis, iter_cap, pricing, debug, seed)
    ntot = sf.A.shape[1]
    first_art = ntot - sf.art_rows.size
    if first_art == ntot:
        return smp
    phase1_cost = np.zeros(ntot)
    phase1_cost[first_art:] = 1.0
    smp.run(phase1_cost)
    infeas = float(smp.xB[smp.basis >= first_art].sum())
    if infeas > 0.5 * sf.tol_feas:
        y = sf.row_sign * smp.y
        aty = np.asarray(sf.model.A.T @ y).ravel()
        v = np.where(np.isfinite(sf.model.upper), np.maximum(aty, 0.0), 0.0)
        return LpSolution(Status.INFEASIBLE, math.inf, certificate=y, bound_multipliers=v,
                          iterations=smp.iterations + sf.spent, trace=smp.trace)
    smp.upper[first_art:] = 0.0
    smp.excluded[first_art:] = True
    smp.at_upper[first_art:] = False
    smp.iterations += sf.spent
    return smp


def _dual_start(sf: _StandardForm, cost: np.ndarray, iter_cap: int, pricing: str, debug: bool, seed: int):
    """Try the dual simplex from the logical basis with artificials fixed at zero.

    With nonnegative costs (the usual case for network design) that basis is
    dual feasible, and the dual method then needs far fewer pivots than a
    primal phase 1 through the heavily degenerate artificial rows.  Returns
    None when the start is not dual feasible or the dual phase stops on an
    infeasible row; the caller then falls back to the primal method, which
    also produces the Farkas certificate.
    """
    ntot = sf.A.shape[1]
    first_art = ntot - sf.art_rows.size
    upper = sf.upper.copy()
    upper[first_art:] = 0.0
    neg = cost < -_Simplex.DUAL_TOL
    if (neg & ~np.isfinite(upper)).any():
        return None
    smp = _Simplex(sf.A, sf.b, upper, sf.basis, iter_cap, pricing, debug, seed)
    smp.excluded[first_art:] = True
    if neg.any():
        smp.at_upper[neg] = True
        smp._refactor()
    try:
        outcome = smp.run_dual(cost)
    except np.linalg.LinAlgError:
        outcome = "failed"
    if outcome != "optimal":
        sf.spent += smp.iterations
        return None
    return smp


def solve(model: LpModel, tol_feas: float = TOL_FEAS, tol_gap: float = TOL_GAP, *,
          iter_cap: int | None = None, pricing: str = "devex", debug: bool = False,
          seed: int = DEFAULT_SEED) -> LpSolution:
    """Solve ``model`` to a certified optimum or a certified failure status.

    ``seed`` drives the small random perturbations used against degeneracy,
    so a given seed always reproduces the same pivots.
    """
    if pricing not in PRICING_RULES:
        raise ValueError(f"unknown pricing rule {pricing!r}")
    m, n = model.n_constraints, model.n_vars
    if iter_cap is None:
        iter_cap = default_iter_cap(n, m)
    lo = model.lower
    if m == 0:
        return _solve_unconstrained(model)
    sf = _standard_form(model)
    sf.model, sf.tol_feas = model, tol_feas
    ntot = sf.A.shape[1]
    cost = np.zeros(ntot)
    cost[:n] = model.objective
    smp = None
    # the debug trace reports primal-feasible iterates, so it keeps the primal path
    if sf.art_rows.size and pricing != "bland" and not debug:
        smp = _dual_start(sf, cost, iter_cap, pricing, debug, seed)
    if smp is None:
        smp = _primal_phase1(sf, iter_cap, pricing, debug, seed)
        if isinstance(smp, LpSolution):
            return smp
    outcome = smp.run(cost)
    trace = smp.trace
    if outcome == "unbounded":
        ray_full = np.zeros(ntot)
        ray_full[smp.ray_var] = smp.ray_dir
        ray_full[smp.basis] = -smp.ray_dir * smp.ray_alpha
        ray = ray_full[:n]
        return LpSolution(Status.UNBOUNDED, -math.inf, certificate=ray, iterations=smp.iterations, trace=trace)
    smp._refactor()
    x = lo + smp.values()[:n]
    y = sf.row_sign * smp.factor.btran(cost[smp.basis])
    d = model.objective - np.asarray(model.A.T @ y).ravel()
    return LpSolution(Status.OPTIMAL, float(model.objective @ x), primal=x, dual=y, reduced_costs=d,
                      iterations=smp.iterations, trace=trace)


def _solve_unconstrained(model: LpModel) -> LpSolution:
    c, lo, hi = model.objective, model.lower, model.upper
    bad = (c < 0) & ~np.isfinite(hi)
    if bad.any():
        ray = np.where(bad, 1.0, 0.0)
        return LpSolution(Status.UNBOUNDED, -math.inf, certificate=ray)
    x = np.where(c < 0, hi, lo)
    return LpSolution(Status.OPTIMAL, float(c @ x), primal=x, dual=np.zeros(0), reduced_costs=c.copy())


# --------------------------------------------------------------------------- #
# independent checks


@dataclass
class SolutionReport:
    max_residual: float
    violated_rows: list[int]
    violated_bounds: list[int]
    dual_infeasibility: float
    primal_objective: float
    dual_objective: float
    gap: float
    tol_feas: float
    tol_gap: float

    @property
    def ok(self) -> bool:
        return (self.max_residual <= self.tol_feas and self.dual_infeasibility <= self.tol_feas
                and self.gap <= self.tol_gap * (1.0 + abs(self.primal_objective)))


def row_violations(model: LpModel, x) -> np.ndarray:
    """Per-row constraint violation (0 when satisfied)."""
    act = model.row_activity(x)
    s = np.array(model.senses, dtype=object)
    viol = np.zeros(model.n_constraints)
    le, ge, eq = s == LE, s == GE, s == EQ
    viol[le] = np.maximum(act[le] - model.rhs[le], 0.0)
    viol[ge] = np.maximum(model.rhs[ge] - act[ge], 0.0)
    viol[eq] = np.abs(act[eq] - model.rhs[eq])
    return viol


def check_solution(model: LpModel, sol: LpSolution, tol_feas: float = TOL_FEAS, tol_gap: float = TOL_GAP) -> SolutionReport:
    """Re-evaluate primal residuals, dual feasibility and the duality gap."""
    if sol.status is not Status.OPTIMAL:
        raise ValueError("check_solution needs an optimal solution")
    x = np.asarray(sol.primal, dtype=float)
    y = np.asarray(sol.dual, dtype=float)
    rv = row_violations(model, x) if model.n_constraints else np.zeros(0)
    bv = np.maximum(model.lower - x, 0.0) + np.maximum(x - model.upper, 0.0)
    s = np.array(model.senses, dtype=object)
    # min problem: y >= 0 on >= rows, y <= 0 on <= rows
    sign_viol = np.concatenate([np.maximum(-y[s == GE], 0.0), np.maximum(y[s == LE], 0.0), [0.0]])
    d = model.objective - (np.asarray(model.A.T @ y).ravel() if model.n_constraints else 0.0)
    finite_hi = np.isfinite(model.upper)
    unbounded_neg = (d < 0) & ~finite_hi
    dual_infeas = max(float(sign_viol.max()), float(np.max(-d[unbounded_neg], initial=0.0)))
    d_lo = np.maximum(d, 0.0)
    d_hi = np.where(unbounded_neg, 0.0, np.minimum(d, 0.0))
    hi = np.where(finite_hi, model.upper, 0.0)
    dual_obj = float(model.rhs @ y + model.lower @ d_lo + hi @ d_hi)
    primal_obj = float(model.objective @ x)
    residual = max(float(rv.max(initial=0.0)), float(bv.max(initial=0.0)))
    return SolutionReport(
        max_residual=residual,
        violated_rows=[int(i) for i in np.flatnonzero(rv > tol_feas)],
        violated_bounds=[int(j) for j in np.flatnonzero(bv > tol_feas)],
        dual_infeasibility=dual_infeas,
        primal_objective=primal_obj,
        dual_objective=dual_obj,
        gap=abs(primal_obj - dual_obj),
        tol_feas=tol_feas,
        tol_gap=tol_gap,
    )


def check_farkas(model: LpModel, y, v=None, tol: float = TOL_FEAS) -> bool:
    """Verify an infeasibility certificate.

    Requires sign-correct row multipliers ``y`` (>= 0 on >= rows, <= 0 on
    <= rows), bound multipliers ``v >= 0`` with ``A.T @ y <= v`` and
    ``v = 0`` where no upper bound exists, and a strictly positive value
    ``y @ (b - A @ lower) - v @ (upper - lower)``.
    """
    y = np.asarray(y, dtype=float)
    v = np.zeros(model.n_vars) if v is None else np.asarray(v, dtype=float)
    s = np.array(model.senses, dtype=object)
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    if np.any(y[s == GE] < -tol * scale) or np.any(y[s == LE] > tol * scale):
        return False
    if np.any(v < -tol * scale):
        return False
    finite_hi = np.isfinite(model.upper)
    if np.any(np.abs(v[~finite_hi]) > tol * scale):
        return False
    aty = np.asarray(model.A.T @ y).ravel()
    if np.any(aty - v > tol * scale):
        return False
    span = np.where(finite_hi, model.upper - model.lower, 0.0)
    value = float(y @ (model.rhs - model.row_activity(model.lower)) - v @ span)
    return value > tol * scale


def check_ray(model: LpModel, ray, tol: float = TOL_FEAS) -> bool:
    """Verify an unbounded direction: feasible recession direction with c @ r < 0."""
    r = np.asarray(ray, dtype=float)
    scale = max(1.0, float(np.abs(r).max(initial=0.0)))
    act = model.row_activity(r)
    s = np.array(model.senses, dtype=object)
    if np.any(act[s == LE] > tol * scale) or np.any(act[s == GE] < -tol * scale):
        return False
    if np.any(np.abs(act[s == EQ]) > tol * scale):
        return False
    if np.any(r < -tol * scale):
        return False
    if np.any(r[np.isfinite(model.upper)] > tol * scale):
        return False
    return float(model.objective @ r) < -tol * scale


# --------------------------------------------------------------------------- #
# LP text export


def _lp_name(label, prefix: str, i: int) -> str:
    if label is None:
        return f"{prefix}{i}"
    flat = []
    for part in label if isinstance(label, tuple) else (label,):
        flat.extend(part if isinstance(part, tuple) else (part,))
    text = "_".join("".join(ch if ch.isalnum() or ch == "." else "_" for ch in str(p)) for p in flat)
    return f"{prefix}{i}_{text}"[:255]


def _lp_terms(pairs: Sequence[tuple[float, str]]) -> str:
    parts = []
    for a, name in pairs:
        coef = "" if abs(a) == 1.0 else f"{abs(a):.12g} "
        parts.append(("- " if a < 0 else "+ ") + coef + name)
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_format(model: LpModel, name: str = "orgnet") -> str:
    """Render ``model`` in CPLEX LP text format."""
    cols = [_lp_name(model.col_labels[j] if model.col_labels else None, "x", j) for j in range(model.n_vars)]
    rows = [_lp_name(model.row_labels[i] if model.row_labels else None, "c", i) for i in range(model.n_constraints)]
    A = sp.csr_matrix(model.A)
    lines = [f"\\* {name} *\\", "Minimize"]
    obj = [(a, cols[j]) for j, a in enumerate(model.objective) if a != 0]
    lines.append(" obj: " + (_lp_terms(obj) if obj else "0 " + cols[0] if cols else "0"))
    lines.append("Subject To")
    for i in range(model.n_constraints):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        terms = [(a, cols[j]) for j, a in zip(A.indices[lo:hi], A.data[lo:hi])]
        body = _lp_terms(terms) if terms else "0 " + cols[0]
        lines.append(f" {rows[i]}: {body} {model.senses[i]} {model.rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(model.n_vars):
        lo_j, hi_j = model.lower[j], model.upper[j]
        if math.isfinite(hi_j):
            lines.append(f" {lo_j:.12g} <= {cols[j]} <= {hi_j:.12g}")
        elif lo_j != 0:
            lines.append(f" {cols[j]} >= {lo_j:.12g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
