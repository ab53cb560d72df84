"""Textbook discrete-time filtered-x LMS baseline.

Self-contained reference implementation used to cross-check the lifted loop
at fast-sampling ratio one. Everything here is deliberately independent of
the lifting module: discrete models come from SciPy matrix exponentials of
the usual hold-equivalent augmented matrices, the regressor is the
period integral of the secondary path response obtained from an
integrator-augmented model, and the update loop is written in plain
shift-register style. Only autonomous noise generators are supported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .signals import AutonomousGenerator
from .statespace import ContinuousStateSpace

__all__ = ["ConventionalRun", "run_conventional_fxlms"]


@dataclass(frozen=True)
class ConventionalRun:
    """Per-period records of one baseline run (row n describes period n)."""

    x_samples: np.ndarray
    d_samples: np.ndarray
    w_samples: np.ndarray
    e_samples: np.ndarray
    y_samples: np.ndarray
    u_integrals: np.ndarray
    alpha_hist: np.ndarray
    delta_hist: np.ndarray
    final_alpha: np.ndarray
    final_delta: np.ndarray


def _zoh(A: np.ndarray, B: np.ndarray, dt: float):
    """Hold-equivalent (Ad, Bd) via one exponential of [[A, B], [0, 0]] dt."""
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A * dt
    M[:n, n:] = B * dt
    E = scipy.linalg.expm(M)
    return E[:n, :n], E[:n, n:]


def run_conventional_fxlms(
    secondary: ContinuousStateSpace,
    primary: ContinuousStateSpace,
    generator: AutonomousGenerator,
    h: float,
    n_taps: int,
    mu: float,
    n_steps: int,
    alpha0=None,
) -> ConventionalRun:
    """Run the baseline loop for ``n_steps`` periods of length ``h``.

    Period n: sample the reference x, disturbance d and secondary output w
    at t = nh, form e = d - w, apply the taps alpha + mu * delta to the
    reference delay line, accumulate e times the lagged regressor integrals
    into delta, commit the taps, then advance all continuous blocks by one
    period. Matches the blocked algorithm's ordering convention exactly.
    """
    if not isinstance(generator, AutonomousGenerator):
        raise TypeError("the baseline supports autonomous generators only")
    if h <= 0.0 or n_taps < 1 or n_steps < 0 or mu < 0.0:
        raise ValueError("bad run parameters")

    Af, Bf = secondary.A, secondary.B
    cf = secondary.C[0]
    nf = secondary.nstates
    Ad, Bd = _zoh(Af, Bf, h)
    bd = Bd[:, 0]

    # Integrator-augmented secondary model: the extra state q integrates the
    # output, so its one-period increment is the regressor integral.
    Aa = np.zeros((nf + 1, nf + 1))
    Aa[:nf, :nf] = Af
    Aa[nf, :nf] = cf
    Ba = np.vstack([Bf, np.zeros((1, 1))])
    Ada, Bda = _zoh(Aa, Ba, h)
    int_row = Ada[nf, :nf]
    int_feed = float(Bda[nf, 0])

    # Generator and primary path cascade into one autonomous block.
    ng, npr = generator.nstates, primary.nstates
    Aj = np.zeros((ng + npr, ng + npr))
    Aj[:ng, :ng] = generator.A
    Aj[ng:, ng:] = primary.A
    Aj[ng:, :ng] = primary.B @ generator.C.reshape(1, -1)
    Phij = scipy.linalg.expm(Aj * h)
    cg = generator.C
    cp = primary.C[0]

    z = np.concatenate([generator.x0, np.zeros(npr)])
    zeta = np.zeros(nf)
    reg = np.zeros(nf)
    xbuf = np.zeros(n_taps)
    ubuf = np.zeros(n_taps)
    alpha = np.zeros(n_taps) if alpha0 is None else np.asarray(alpha0, dtype=float).copy()
    delta = np.zeros(n_taps)

    xs = np.empty(n_steps)
    ds = np.empty(n_steps)
    ws = np.empty(n_steps)
    es = np.empty(n_steps)
    ys = np.empty(n_steps)
    us = np.empty(n_steps)
    ah = np.empty((n_steps, n_taps))
    dh = np.empty((n_steps + 1, n_taps))

    for n in range(n_steps):
        x = float(cg @ z[:ng])
        d = float(cp @ z[ng:])
        w = float(cf @ zeta)
        e = d - w

        xbuf = np.roll(xbuf, 1)
        xbuf[0] = x
        dh[n] = delta
        taps = alpha + mu * delta
        y = float(taps @ xbuf)

        u_int = float(int_row @ reg) + int_feed * x
        ubuf = np.roll(ubuf, 1)
        ubuf[0] = u_int
        delta = delta + e * ubuf
        alpha = taps

        xs[n], ds[n], ws[n], es[n], ys[n], us[n] = x, d, w, e, y, u_int
        ah[n] = taps

        z = Phij @ z
        zeta = Ad @ zeta + bd * y
        reg = Ad @ reg + bd * x

    dh[n_steps] = delta
    return ConventionalRun(
        x_samples=xs,
        d_samples=ds,
        w_samples=ws,
        e_samples=es,
        y_samples=ys,
        u_integrals=us,
        alpha_hist=ah,
        delta_hist=dh,
        final_alpha=alpha,
        final_delta=delta,
    )
