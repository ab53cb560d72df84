"""Adaptive layers on top of the lifted discretization.

Three levels, all sharing the blocked regressor record ``U[n]`` (exact
per-cell integrals of the secondary path's response to the reference):

* the quadratic design problem (Gram matrix + cross vector) whose minimizer
  is the optimal FIR filter over an infinite horizon,
* offline steepest descent on that quadratic,
* the online update, which accumulates a cumulative descent direction from
  fast error samples and blocked regressor integrals and commits one tap
  update per period.

A separate checker verifies the three conditions under which the online
update is a slowly-varying perturbation of steepest descent: uniformly
bounded Gram matrices, step size inside the stability range, and small
per-period Gram increments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .lifting import LiftedDiscretization, fh_step
from .statespace import DimensionError
from .tolerances import TOL

__all__ = [
    "FirFilter",
    "WienerProblem",
    "AdaptiveState",
    "LmsConditionReport",
    "SingularGramError",
    "build_wiener",
    "wiener_solve",
    "gradient",
    "j_value",
    "sd_run",
    "initial_adaptive_state",
    "sdfx_lms_step",
    "check_lms_conditions",
]


class SingularGramError(ValueError):
    """The quadratic problem is singular or too ill-conditioned to solve."""


@dataclass(frozen=True)
class FirFilter:
    """FIR filter given by its tap vector (tap k multiplies x_d[n-k])."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=float).reshape(-1)
        if taps.size == 0:
            raise ValueError("an FIR filter needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValueError("FIR taps must be finite")
        taps = taps.copy()
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return self.taps.size


@dataclass(frozen=True)
class WienerProblem:
    """Finite-horizon quadratic model of the cancellation error.

    J(alpha) = d_energy - 2 beta . alpha + alpha . Phi alpha, where ``Phi``
    is the (symmetric PSD) Gram matrix of lagged regressor blocks and
    ``beta`` the cross vector against the disturbance.
    """

    Phi: np.ndarray
    beta: np.ndarray
    horizon: float
    d_energy: float = 0.0

    def __post_init__(self) -> None:
        Phi = np.asarray(self.Phi, dtype=float)
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        if Phi.ndim != 2 or Phi.shape[0] != Phi.shape[1]:
            raise DimensionError(f"Phi must be square, got shape {Phi.shape}")
        if beta.size != Phi.shape[0]:
            raise DimensionError(
                f"beta length {beta.size} does not match Phi size {Phi.shape[0]}"
            )
        scale = max(float(np.abs(Phi).max()) if Phi.size else 0.0, 1e-300)
        if float(np.abs(Phi - Phi.T).max()) > TOL.matrix_symmetry * scale:
            raise ValueError("Phi must be symmetric")
        lam_min = float(np.linalg.eigvalsh(Phi)[0])
        if lam_min < -TOL.psd_slack * scale:
            raise ValueError(f"Phi must be positive semidefinite, min eigenvalue {lam_min}")
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        Phi = Phi.copy()
        Phi.flags.writeable = False
        beta = beta.copy()
        beta.flags.writeable = False
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "d_energy", float(self.d_energy))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def n_taps(self) -> int:
        return self.beta.size


def _lagged(blocks: np.ndarray, k: int) -> np.ndarray:
    """Block record delayed by k periods, zero prehistory."""
    if k == 0:
        return blocks
    out = np.zeros_like(blocks)
    out[k:] = blocks[:-k]
    return out


def build_wiener(
    u_blocks,
    d_fast,
    n_taps: int,
    horizon: float,
    h: float,
    L: int,
) -> WienerProblem:
    """Assemble the quadratic problem from one recorded run.

    ``u_blocks`` is the (n_steps, L) record of exact per-cell regressor
    integrals; ``d_fast`` the disturbance sampled at cell left endpoints
    (shape (n_steps, L) or flat). The Gram matrix uses the cell means of u
    on both sides (a staircase projection, hence symmetric, positive
    semidefinite, and bounded by the aliased-energy spectrum); the cross
    vector pairs disturbance samples with regressor integrals.
    """
    U = np.asarray(u_blocks, dtype=float)
    if U.ndim != 2:
        raise DimensionError(f"u_blocks must be 2-D (n_steps, L), got shape {U.shape}")
    n_steps = U.shape[0]
    if U.shape[1] != L:
        raise DimensionError(f"u_blocks has {U.shape[1]} cells per row, expected L = {L}")
    D = np.asarray(d_fast, dtype=float).reshape(-1)
    if D.size != n_steps * L:
        raise DimensionError(
            f"d_fast has {D.size} samples, expected n_steps * L = {n_steps * L}"
        )
    D = D.reshape(n_steps, L)
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if not h > 0.0:
        raise ValueError(f"period must be positive, got {h}")
    if abs(horizon - n_steps * h) > 1e-9 * max(h, horizon):
        raise ValueError(
            f"horizon {horizon} is not the record length: {n_steps} periods of {h}"
        )

    lags = [_lagged(U, k) for k in range(n_taps)]
    Phi = np.empty((n_taps, n_taps))
    beta = np.empty(n_taps)
    for k in range(n_taps):
        beta[k] = float(np.sum(D * lags[k]))
        for l in range(k, n_taps):
            Phi[k, l] = Phi[l, k] = (L / h) * float(np.sum(lags[k] * lags[l]))
    d_energy = (h / L) * float(np.sum(D * D))
    return WienerProblem(Phi=Phi, beta=beta, horizon=horizon, d_energy=d_energy)


def wiener_solve(problem: WienerProblem) -> FirFilter:
    """Direct solve of the quadratic problem (Cholesky + one refinement).

    Raises :class:`SingularGramError` when the Gram matrix is singular or
    its condition number exceeds the configured limit.
    """
    lam = np.linalg.eigvalsh(problem.Phi)
    if lam[0] <= 0.0 or lam[-1] / lam[0] > TOL.condition_limit:
        cond = float("inf") if lam[0] <= 0.0 else lam[-1] / lam[0]
        raise SingularGramError(
            f"Gram matrix is singular or ill-conditioned (cond ~ {cond:.3e})"
        )
    factor = cho_factor(problem.Phi, lower=True)
    alpha = cho_solve(factor, problem.beta)
    residual = problem.beta - problem.Phi @ alpha
    alpha = alpha + cho_solve(factor, residual)
    return FirFilter(alpha)


def gradient(problem: WienerProblem, taps) -> np.ndarray:
    """Gradient of J at the given taps: 2 (Phi alpha - beta)."""
    alpha = np.asarray(taps, dtype=float).reshape(-1)
    if alpha.size != problem.n_taps:
        raise DimensionError(
            f"taps length {alpha.size} does not match problem size {problem.n_taps}"
        )
    return 2.0 * (problem.Phi @ alpha - problem.beta)


def j_value(problem: WienerProblem, taps) -> float:
    """Quadratic cost at the given taps."""
    alpha = np.asarray(taps, dtype=float).reshape(-1)
    if alpha.size != problem.n_taps:
        raise DimensionError(
            f"taps length {alpha.size} does not match problem size {problem.n_taps}"
        )
    return float(problem.d_energy - 2.0 * problem.beta @ alpha + alpha @ problem.Phi @ alpha)


def sd_run(
    problem: WienerProblem,
    alpha0,
    mu: float,
    n_steps: int,
    record_every: int = 1,
) -> np.ndarray:
    """Steepest descent alpha <- alpha + mu (beta - Phi alpha).

    Returns the recorded iterates (every ``record_every`` steps, first and
    last always included), shape (n_records, n_taps). ``mu = 0`` freezes the
    iterates; negative step sizes are rejected.
    """
    alpha = np.asarray(alpha0, dtype=float).reshape(-1).copy()
    if alpha.size != problem.n_taps:
        raise DimensionError(
            f"alpha0 length {alpha.size} does not match problem size {problem.n_taps}"
        )
    if mu < 0.0:
        raise ValueError(f"step size must be nonnegative, got {mu}")
    if n_steps < 0:
        raise ValueError(f"step count must be nonnegative, got {n_steps}")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    out = [alpha.copy()]
    for k in range(1, n_steps + 1):
        alpha += mu * (problem.beta - problem.Phi @ alpha)
        if k % record_every == 0 or k == n_steps:
            out.append(alpha.copy())
    return np.asarray(out)


@dataclass(frozen=True)
class AdaptiveState:
    """State of the online update at a period boundary.

    ``alpha`` are the committed taps, ``delta`` the cumulative descent
    direction accumulated through the start of the current period, ``eta``
    the regressor filter state, ``U_hist`` the last n_taps regressor blocks
    (row k is the block from k periods ago), ``xd_hist`` the matching
    reference samples.
    """

    alpha: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    U_hist: np.ndarray
    xd_hist: np.ndarray
    n: int


def initial_adaptive_state(
    lift: LiftedDiscretization,
    n_taps: int,
    alpha0=None,
) -> AdaptiveState:
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if alpha0 is None:
        alpha = np.zeros(n_taps)
    else:
        alpha = np.asarray(alpha0, dtype=float).reshape(-1).copy()
        if alpha.size != n_taps:
            raise DimensionError(f"alpha0 must have {n_taps} entries, got {alpha.size}")
    return AdaptiveState(
        alpha=alpha,
        delta=np.zeros(n_taps),
        eta=np.zeros(lift.nstates),
        U_hist=np.zeros((n_taps, lift.L)),
        xd_hist=np.zeros(n_taps),
        n=0,
    )


def sdfx_lms_step(
    state: AdaptiveState,
    lift: LiftedDiscretization,
    mu: float,
    e_block,
    x_d: float,
) -> AdaptiveState:
    """One period of the online update.

    Order of operations for period n: commit the tap update using the
    direction accumulated through t = n h, fold the new period's blocked
    inner products (fast error samples against lagged regressor integrals)
    into the direction, then advance the regressor filter and delay lines.
    The caller simulates period n under exactly the taps this step commits
    (alpha + mu * delta evaluated before the fold).
    """
    e = np.asarray(e_block, dtype=float).reshape(-1)
    if e.size != lift.L:
        raise DimensionError(f"e_block must have L = {lift.L} samples, got {e.size}")
    if mu < 0.0:
        raise ValueError(f"step size must be nonnegative, got {mu}")

    alpha_next = state.alpha + mu * state.delta
    eta_next, U = fh_step(lift, state.eta, x_d)
    U_hist_next = np.empty_like(state.U_hist)
    U_hist_next[0] = U
    U_hist_next[1:] = state.U_hist[:-1]
    delta_next = state.delta + U_hist_next @ e
    xd_hist_next = np.empty_like(state.xd_hist)
    xd_hist_next[0] = x_d
    xd_hist_next[1:] = state.xd_hist[:-1]
    return AdaptiveState(
        alpha=alpha_next,
        delta=delta_next,
        eta=eta_next,
        U_hist=U_hist_next,
        xd_hist=xd_hist_next,
        n=state.n + 1,
    )


@dataclass(frozen=True)
class LmsConditionReport:
    """Realized values and verdicts for the three online-update conditions.

    ``gamma`` is the largest realized Gram-matrix norm, ``lambda_max`` the
    largest realized Gram eigenvalue (equal for PSD matrices, reported
    separately because they back different conditions), ``eps_realized``
    the largest per-period change ``||mu (Phi[n] - Phi[n-1])||``.
    """

    n_intervals: int
    n_taps: int
    mu: float
    gamma: float
    lambda_max: float
    mu_limit: float
    eps_realized: float
    eps_threshold: float
    degenerate: bool
    bounded_ok: bool
    step_ok: bool
    slow_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.bounded_ok and self.step_ok and self.slow_ok


def check_lms_conditions(
    u_blocks,
    mu: float,
    n_taps: int,
    h: float,
    eps_threshold: float = 0.5,
) -> LmsConditionReport:
    """Evaluate the three convergence conditions on a recorded run.

    Builds the running Gram matrices Phi[n] from the blocked regressor
    record and reports: (1) a uniform norm bound, (2) whether the step size
    lies inside (0, 2 / max eigenvalue), (3) whether the per-period change
    of mu Phi[n] stays below ``eps_threshold``. A record with no regressor
    energy is flagged degenerate (conditions hold vacuously).
    """
    U = np.asarray(u_blocks, dtype=float)
    if U.ndim != 2:
        raise DimensionError(f"u_blocks must be 2-D (n_steps, L), got shape {U.shape}")
    if not np.all(np.isfinite(U)):
        raise ValueError("u_blocks contains non-finite entries")
    if n_taps < 1:
        raise ValueError("need at least one tap")
    if not h > 0.0:
        raise ValueError(f"period must be positive, got {h}")
    if not mu > 0.0:
        raise ValueError(f"step size must be positive, got {mu}")
    n_steps, L = U.shape

    # V_n[j, k] = regressor integral of lag k, cell j, period n;
    # Phi[n] grows by the PSD increment (L/h) V_n^T V_n each period.
    Phi = np.zeros((n_taps, n_taps))
    lam_max = 0.0
    inc_max = 0.0
    for n in range(n_steps):
        V = np.zeros((L, n_taps))
        for k in range(min(n_taps, n + 1)):
            V[:, k] = U[n - k]
        inc = (L / h) * (V.T @ V)
        Phi += inc
        lam_inc = float(np.linalg.eigvalsh(inc)[-1])
        inc_max = max(inc_max, lam_inc)
        lam_max = max(lam_max, float(np.linalg.eigvalsh(Phi)[-1]))

    degenerate = lam_max == 0.0
    gamma = lam_max
    mu_limit = float("inf") if degenerate else 2.0 / lam_max
    eps_realized = mu * inc_max
    return LmsConditionReport(
        n_intervals=n_steps,
        n_taps=n_taps,
        mu=mu,
        gamma=gamma,
        lambda_max=lam_max,
        mu_limit=mu_limit,
        eps_realized=eps_realized,
        eps_threshold=float(eps_threshold),
        degenerate=degenerate,
        bounded_ok=bool(np.isfinite(gamma)),
        step_ok=bool(degenerate or mu < mu_limit),
        slow_ok=bool(eps_realized <= eps_threshold),
    )
