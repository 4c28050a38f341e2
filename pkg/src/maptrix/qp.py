"""Small dense convex quadratic programs.

Solves  min 0.5 x'Qx + c'x  subject to  Ax <= b  with Q positive
semidefinite, via a primal active-set method. Equality constraints are
expressed by callers as opposing inequality pairs (a, b) / (-a, -b); the
solver detects such pairs and keeps them permanently in the working set,
because treating them as two independent inequalities makes every working
set rank-deficient.

An infeasible start is repaired by cyclic projection onto the violated
rows; if the violation plateaus the problem is reported infeasible together
with the index of the worst row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = ["QpProblem", "QpResult", "solve"]

_PAIR_TOL = 1e-12


@dataclass
class QpProblem:
    """Problem data. Q must be symmetric PSD; shapes (n,n), (n,), (m,n), (m,), (n,)."""

    Q: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    x0: np.ndarray

    def __post_init__(self) -> None:
        self.Q = np.asarray(self.Q, dtype=float)
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.size)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        n = self.c.size
        if self.Q.shape != (n, n):
            raise ValidationError(f"Q must be {n}x{n}, got {self.Q.shape}")
        if self.x0.size != n:
            raise ValidationError("x0 length does not match c")
        if self.b.size != self.A.shape[0]:
            raise ValidationError("b length does not match A rows")
        scale = max(1.0, float(np.abs(self.Q).max(initial=0.0)))
        if float(np.abs(self.Q - self.Q.T).max(initial=0.0)) > 1e-12 * scale:
            raise ValidationError("Q must be symmetric")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size

    def objective(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x)


@dataclass
class QpResult:
    x: np.ndarray
    status: str  # "optimal" | "max_iter" | "infeasible"
    iterations: int
    objective: float
    certificate_row: int | None = None
    active_set: tuple[int, ...] = field(default_factory=tuple)


def _find_equality_pairs(A: np.ndarray, b: np.ndarray) -> tuple[list[tuple[int, int]], set[int]]:
    """Detect antiparallel row pairs (a, b) / (-a, -b) encoding equalities.

    Exact negations (the common case: callers emit the second row by
    negating the first) are matched through a hash of the normalized row
    bytes; the leftovers get a tolerant sweep restricted to rows whose b
    values can cancel, found through a sorted window.
    """
    m = A.shape[0]
    scale = np.maximum(np.abs(A).max(axis=1, initial=0.0), 1.0)
    pairs: list[tuple[int, int]] = []
    used: set[int] = set()
    if m == 0:
        return pairs, used
    M = np.hstack([A, b[:, None]]) + 0.0  # +0.0 folds -0.0 into 0.0
    buckets: dict[bytes, list[int]] = {}
    for i in range(m):
        mates = buckets.get((-M[i] + 0.0).tobytes())
        if mates:
            j = mates.pop(0)
            pairs.append((j, i))
            used.add(j)
            used.add(i)
        else:
            buckets.setdefault(M[i].tobytes(), []).append(i)

    rest = [i for i in range(m) if i not in used]
    if len(rest) >= 2:
        # A sorted window keyed on b alone degenerates when many rows share
        # the same bound, so key on a fixed random projection of [A | b]:
        # antiparallel rows cancel in projection, unrelated rows rarely do.
        rest_arr = np.asarray(rest)
        direction = np.random.default_rng(0x5EED).standard_normal(M.shape[1])
        proj = M[rest_arr] @ direction
        sort_idx = np.argsort(proj, kind="stable")
        order = rest_arr[sort_idx]
        proj_sorted = proj[sort_idx]
        window = _PAIR_TOL * float(scale.max()) * float(np.abs(direction).sum())
        for pos, i in enumerate(order):
            if int(i) in used:
                continue
            target = -proj_sorted[pos]
            lo = int(np.searchsorted(proj_sorted, target - window, side="left"))
            hi = int(np.searchsorted(proj_sorted, target + window, side="right"))
            for qos in range(lo, hi):
                j = int(order[qos])
                if j == int(i) or j in used:
                    continue
                a, bb = (int(i), j) if int(i) < j else (j, int(i))
                tol = _PAIR_TOL * max(scale[a], scale[bb])
                if (
                    np.abs(A[a] + A[bb]).max(initial=0.0) <= tol
                    and abs(b[a] + b[bb]) <= tol
                ):
                    pairs.append((a, bb))
                    used.add(a)
                    used.add(bb)
                    break
    pairs.sort()
    return pairs, used


def _project_feasible(
    A: np.ndarray,
    b: np.ndarray,
    x: np.ndarray,
    eq_rows: list[int],
    feas_tol: np.ndarray,
) -> tuple[np.ndarray, int | None]:
    """Move x into {Ax <= b} (equality rows held both ways).

    Each round takes the least-norm step that lands every currently violated
    row (plus all equality rows) exactly on its boundary; for a consistent
    system this converges in a handful of rounds. Returns (point,
    certificate) where certificate is None on success, else the index of the
    row still violated after progress stalled.
    """
    m = A.shape[0]
    if m == 0:
        return x, None
    eq = np.zeros(m, dtype=bool)
    eq[eq_rows] = True
    best = np.inf
    stall = 0
    for _ in range(max(60, 4 * m)):
        resid = A @ x - b
        viol = np.where(eq, np.abs(resid), resid)
        worst = float(viol.max(initial=0.0))
        if np.all(viol <= feas_tol):
            return x, None
        if worst < best * (1.0 - 1e-3):
            best = worst
            stall = 0
        else:
            stall += 1
            if stall >= 8:
                return x, int(np.argmax(viol - feas_tol))
        rows = np.where(eq | (viol > 0.0))[0]
        dx, *_ = np.linalg.lstsq(A[rows], b[rows] - A[rows] @ x, rcond=None)
        x = x + dx
    resid = A @ x - b
    viol = np.where(eq, np.abs(resid), resid)
    if np.all(viol <= feas_tol):
        return x, None
    return x, int(np.argmax(viol - feas_tol))


class _KktSolver:
    """KKT step solver; uses a Schur complement when Q has a positive diagonal."""

    def __init__(self, Q: np.ndarray):
        self.Q = Q
        diag = np.diag(Q)
        self.diag_fast = bool(
            np.count_nonzero(Q - np.diag(diag)) == 0 and np.all(diag > 0.0)
        )
        self.inv_diag = 1.0 / diag if self.diag_fast else None

    def solve(
        self, G: np.ndarray, g: np.ndarray, r: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Solve Qp + G'lam = -g, Gp = r. Returns (p, lam)."""
        n = self.Q.shape[0]
        q = G.shape[0]
        if q == 0:
            if self.diag_fast:
                return -g * self.inv_diag, np.zeros(0)
            p, *_ = np.linalg.lstsq(self.Q, -g, rcond=None)
            return p, np.zeros(0)
        if self.diag_fast:
            Gd = G * self.inv_diag  # G @ Q^-1
            S = Gd @ G.T
            rhs = -(r + Gd @ g)
            try:
                lam = np.linalg.solve(S, rhs)
            except np.linalg.LinAlgError:
                lam, *_ = np.linalg.lstsq(S, rhs, rcond=None)
            if not np.all(np.isfinite(lam)):
                lam, *_ = np.linalg.lstsq(S, rhs, rcond=None)
            p = -(g + G.T @ lam) * self.inv_diag
            return p, lam
        kkt = np.zeros((n + q, n + q))
        kkt[:n, :n] = self.Q
        kkt[:n, n:] = G.T
        kkt[n:, :n] = G
        rhs = np.concatenate([-g, r])
        try:
            sol = np.linalg.solve(kkt, rhs)
            if not np.all(np.isfinite(sol)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        return sol[:n], sol[n:]


def solve(problem: QpProblem, tol: float = 1e-8, max_iter: int | None = None) -> QpResult:
    """Minimize the QP. Statuses: optimal, max_iter, infeasible."""
    Q, c, A, b = problem.Q, problem.c, problem.A, problem.b
    n, m = problem.n, problem.m
    if max_iter is None:
        max_iter = 10 * (n + m)

    feas_tol = tol * (1.0 + np.abs(b))
    pairs, paired_rows = _find_equality_pairs(A, b)
    eq_rows = [i for i, _ in pairs]
    free_rows = [i for i in range(m) if i not in paired_rows]

    x, certificate = _project_feasible(A, b, problem.x0.copy(), eq_rows, feas_tol)
    if certificate is not None:
        return QpResult(
            x=x,
            status="infeasible",
            iterations=0,
            objective=problem.objective(x),
            certificate_row=certificate,
        )

    kkt = _KktSolver(Q)
    E = A[eq_rows] if eq_rows else np.zeros((0, n))
    be = b[eq_rows] if eq_rows else np.zeros(0)

    # start with the working set empty; blocking rows join one at a time
    work: list[int] = []
    free_arr = np.asarray(free_rows, dtype=int)
    A_free = A[free_arr] if free_arr.size else np.zeros((0, n))
    b_free = b[free_arr] if free_arr.size else np.zeros(0)
    in_work = np.zeros(m, dtype=bool)
    x_scale = 1.0 + float(np.abs(x).max(initial=0.0))
    iterations = 0
    zero_steps = 0
    while iterations < max_iter:
        iterations += 1
        g = Q @ x + c
        rows = eq_rows + work
        G = A[rows] if rows else np.zeros((0, n))
        resid = (b[rows] - A[rows] @ x) if rows else np.zeros(0)
        p, lam = kkt.solve(G, g, resid)

        if float(np.abs(p).max(initial=0.0)) <= tol * x_scale:
            lam_work = lam[len(eq_rows):]
            if lam_work.size == 0 or float(lam_work.min()) >= -tol:
                return _finalize(problem, x, lam, eq_rows, work, iterations, tol)
            drop = int(np.argmin(lam_work))
            in_work[work.pop(drop)] = False
            continue

        # ratio test against rows outside the working set
        alpha = 1.0
        blocker = -1
        if free_arr.size:
            ap = A_free @ p
            cand = ~in_work[free_arr] & (ap > 1e-13 * (1.0 + np.abs(ap)))
            if cand.any():
                slack = np.maximum(b_free[cand] - A_free[cand] @ x, 0.0)
                ratios = slack / ap[cand]
                j = int(np.argmin(ratios))
                if ratios[j] < alpha - 1e-15:
                    alpha = float(ratios[j])
                    blocker = int(free_arr[cand][j])
        x = x + alpha * p
        x_scale = 1.0 + float(np.abs(x).max(initial=0.0))
        if blocker >= 0:
            work.append(blocker)
            work.sort()
            in_work[blocker] = True
        if alpha <= 1e-15:
            zero_steps += 1
            if zero_steps > 2 * (m + 1):
                break
        else:
            zero_steps = 0

    return QpResult(
        x=x,
        status="max_iter",
        iterations=iterations,
        objective=problem.objective(x),
        active_set=tuple(sorted(eq_rows + work)),
    )


def _finalize(
    problem: QpProblem,
    x: np.ndarray,
    lam: np.ndarray,
    eq_rows: list[int],
    work: list[int],
    iterations: int,
    tol: float,
) -> QpResult:
    """Polish the candidate optimum with exact KKT re-solves and verify it."""
    Q, c, A, b = problem.Q, problem.c, problem.A, problem.b
    rows = eq_rows + work
    kkt = _KktSolver(Q)
    lam_full = np.zeros(problem.m)
    stat_norm = np.inf
    for _ in range(3):
        G = A[rows] if rows else np.zeros((0, problem.n))
        resid = (b[rows] - G @ x) if rows else np.zeros(0)
        p, lam = kkt.solve(G, Q @ x + c, resid)
        x = x + p
        lam_full[:] = 0.0
        for idx, row in enumerate(rows):
            lam_full[row] = lam[idx] if idx < lam.size else 0.0
        stat = Q @ x + c + (A.T @ lam_full if problem.m else 0.0)
        stat_norm = float(np.abs(stat).max(initial=0.0))
        if stat_norm <= tol:
            break
    feas_tol = tol * (1.0 + np.abs(b))
    resid = A @ x - b if problem.m else np.zeros(0)
    lam_min = min((float(lam_full[r]) for r in work), default=0.0)
    ok = (
        (problem.m == 0 or bool(np.all(resid <= feas_tol)))
        and stat_norm <= tol
        and lam_min >= -100.0 * tol
    )
    return QpResult(
        x=x,
        status="optimal" if ok else "max_iter",
        iterations=iterations,
        objective=problem.objective(x),
        active_set=tuple(sorted(rows)),
    )
