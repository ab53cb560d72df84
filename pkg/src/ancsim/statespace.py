"""Continuous-time LTI state-space algebra and matrix-exponential integrals.

Everything downstream reduces to four integral families of a plant (A, B, C)
over a horizon t:

* ``Phi(t)    = exp(A t)``
* ``Gamma(t)  = int_0^t exp(A s) B ds``
* ``Lambda(t) = int_0^t C exp(A s) ds``
* ``Theta(t)  = int_0^t int_0^s C exp(A r) B dr ds``

``vanloan`` reads all four off a single exponential of one block-triangular
augmented matrix, so the discretization layer never touches a quadrature
routine. The matrix exponential itself is a scaling-and-squaring Pade
evaluation of fixed maximal degree 13.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ContinuousStateSpace",
    "VanLoanResult",
    "DimensionError",
    "PlantSpecificationError",
    "expm",
    "vanloan",
    "series",
    "parallel",
    "scaled",
    "static_gain",
    "from_second_order_bank",
    "freq_response",
    "freq_response_grid",
]


class DimensionError(ValueError):
    """Matrix dimensions do not line up."""


class PlantSpecificationError(ValueError):
    """Plant specification violates stability or properness requirements."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ContinuousStateSpace:
    """Real state-space model ``dx/dt = A x + B u``, ``y = C x + D u``.

    Matrices are stored as read-only float64 arrays. One-dimensional ``B``
    and ``C`` are promoted to a column and a row respectively. ``D`` may be
    omitted and defaults to zeros. A model with zero states (pure gain) is
    allowed so composition helpers have an identity element.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got shape {A.shape}")
        nu = A.shape[0]

        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if B.ndim != 2 or B.shape[0] != nu:
            raise DimensionError(f"B must have {nu} rows, got shape {B.shape}")

        C = np.asarray(self.C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(1, -1)
        if C.ndim != 2 or C.shape[1] != nu:
            raise DimensionError(f"C must have {nu} columns, got shape {C.shape}")

        m, p = B.shape[1], C.shape[0]
        if self.D is None:
            D = np.zeros((p, m))
        else:
            D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape != (p, m):
            raise DimensionError(f"D must have shape {(p, m)}, got {D.shape}")

        for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
            if mat.size and not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")

        object.__setattr__(self, "A", _freeze(A))
        object.__setattr__(self, "B", _freeze(B))
        object.__setattr__(self, "C", _freeze(C))
        object.__setattr__(self, "D", _freeze(D))

    @property
    def nstates(self) -> int:
        return self.A.shape[0]

    @property
    def ninputs(self) -> int:
        return self.B.shape[1]

    @property
    def noutputs(self) -> int:
        return self.C.shape[0]

    @property
    def poles(self) -> np.ndarray:
        if self.nstates == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A)

    @property
    def is_stable(self) -> bool:
        """True when every pole has a strictly negative real part."""
        return bool(np.all(self.poles.real < 0.0))

    @property
    def is_siso(self) -> bool:
        return self.ninputs == 1 and self.noutputs == 1

    @property
    def is_strictly_proper(self) -> bool:
        return not np.any(self.D)

    def validate_plant(self, name: str = "plant") -> None:
        """Require the shape every plant entering the loop must have.

        Loop plants are SISO, strictly proper (no feedthrough, so sampled
        interconnections are well posed) and exponentially stable.
        """
        if not self.is_siso:
            raise PlantSpecificationError(
                f"{name} must be SISO, got {self.ninputs} inputs / {self.noutputs} outputs"
            )
        if not self.is_strictly_proper:
            raise PlantSpecificationError(f"{name} must be strictly proper (D = 0)")
        if not self.is_stable:
            raise PlantSpecificationError(
                f"{name} is unstable: pole with nonnegative real part"
            )


def static_gain(gain: float, size: int = 1) -> ContinuousStateSpace:
    """Zero-state model y = gain * u; identity element for ``series``."""
    z = np.zeros((0, 0))
    return ContinuousStateSpace(
        z, np.zeros((0, size)), np.zeros((size, 0)), gain * np.eye(size)
    )


def series(first: ContinuousStateSpace, second: ContinuousStateSpace) -> ContinuousStateSpace:
    """Cascade: the signal passes through ``first``, then ``second``."""
    if second.ninputs != first.noutputs:
        raise DimensionError(
            f"cannot cascade: first has {first.noutputs} outputs, "
            f"second expects {second.ninputs} inputs"
        )
    n1, n2 = first.nstates, second.nstates
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = first.A
    A[n1:, n1:] = second.A
    A[n1:, :n1] = second.B @ first.C
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return ContinuousStateSpace(A, B, C, D)


def parallel(first: ContinuousStateSpace, second: ContinuousStateSpace) -> ContinuousStateSpace:
    """Sum of two systems sharing input and output dimensions."""
    if first.ninputs != second.ninputs or first.noutputs != second.noutputs:
        raise DimensionError("parallel systems must share input and output dimensions")
    n1, n2 = first.nstates, second.nstates
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = first.A
    A[n1:, n1:] = second.A
    B = np.vstack([first.B, second.B])
    C = np.hstack([first.C, second.C])
    D = first.D + second.D
    return ContinuousStateSpace(A, B, C, D)


def scaled(sys: ContinuousStateSpace, gain: float) -> ContinuousStateSpace:
    """Output scaled by a real constant."""
    return ContinuousStateSpace(sys.A, sys.B, gain * sys.C, gain * sys.D)


def from_second_order_bank(
    gains,
    dampings,
    frequencies,
    first_order_poles=(),
) -> ContinuousStateSpace:
    """Build a plant as first-order factors in series with a resonant bank.

    The transfer function is::

        H(s) = prod_i 1/(s + p_i) * sum_k g_k w_k^2 / (s^2 + 2 z_k w_k s + w_k^2)

    Each resonant section is realized in controllable canonical form, the
    sections are summed in parallel, and the result is cascaded behind the
    chain of first-order lags (given order). An empty bank (no sections)
    leaves just the lag chain; an empty pole list leaves just the bank.
    """
    gains = np.atleast_1d(np.asarray(gains, dtype=float))
    dampings = np.atleast_1d(np.asarray(dampings, dtype=float))
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    poles = np.atleast_1d(np.asarray(first_order_poles, dtype=float))

    if not (gains.size == dampings.size == frequencies.size):
        raise DimensionError(
            "gains, dampings and frequencies must have equal length, got "
            f"{gains.size}/{dampings.size}/{frequencies.size}"
        )
    if gains.size == 0 and poles.size == 0:
        raise PlantSpecificationError("empty plant specification")
    if np.any(poles <= 0.0):
        raise PlantSpecificationError("first-order poles must be positive (stable lags)")
    if np.any(dampings <= 0.0):
        raise PlantSpecificationError("damping ratios must be positive")
    if np.any(frequencies <= 0.0):
        raise PlantSpecificationError("resonant frequencies must be positive")

    sys: ContinuousStateSpace | None = None
    for p in poles:
        lag = ContinuousStateSpace([[-p]], [[1.0]], [[1.0]])
        sys = lag if sys is None else series(sys, lag)

    if gains.size:
        bank: ContinuousStateSpace | None = None
        for g, z, w in zip(gains, dampings, frequencies):
            section = ContinuousStateSpace(
                [[0.0, 1.0], [-w * w, -2.0 * z * w]],
                [[0.0], [1.0]],
                [[g * w * w, 0.0]],
            )
            bank = section if bank is None else parallel(bank, section)
        sys = bank if sys is None else series(sys, bank)

    assert sys is not None
    return sys


def freq_response(sys: ContinuousStateSpace, omega: float) -> np.ndarray:
    """Transfer matrix ``C (jw I - A)^-1 B + D`` at one real frequency."""
    if sys.nstates == 0:
        return sys.D.astype(complex)
    nu = sys.nstates
    shifted = 1j * omega * np.eye(nu) - sys.A
    return sys.C @ np.linalg.solve(shifted, sys.B) + sys.D


def freq_response_grid(sys: ContinuousStateSpace, omegas) -> np.ndarray:
    """Transfer matrices on a frequency grid, shape (n, p, m).

    Uses a modal decomposition when A diagonalizes well (one eigendecomposition
    for the whole grid); falls back to per-frequency solves for defective or
    badly conditioned eigenvector matrices.
    """
    om = np.asarray(omegas, dtype=float).ravel()
    p, m = sys.noutputs, sys.ninputs
    if sys.nstates == 0:
        return np.broadcast_to(sys.D, (om.size, p, m)).astype(complex).copy()

    lam, V = np.linalg.eig(sys.A)
    use_modal = False
    if np.all(np.isfinite(V)):
        cond = np.linalg.cond(V)
        use_modal = np.isfinite(cond) and cond < 1e9

    if use_modal:
        CV = sys.C @ V
        VB = np.linalg.solve(V, sys.B)
        denom = 1j * om[:, None] - lam[None, :]
        resp = np.einsum("pk,nk,km->npm", CV, 1.0 / denom, VB)
        resp += sys.D
        return resp

    out = np.empty((om.size, p, m), dtype=complex)
    for i, w in enumerate(om):
        out[i] = freq_response(sys, w)
    return out


# Pade numerator coefficients and scaling thresholds for the exponential
# ladder (orders 3/5/7/9 for small norms, scaled order 13 otherwise).
_PADE_B = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_low(M: np.ndarray, order: int) -> np.ndarray:
    b = _PADE_B[order]
    n = M.shape[0]
    ident = np.eye(n)
    M2 = M @ M
    even = ident
    U = b[1] * ident
    V = b[0] * ident
    for k in range(2, order + 1, 2):
        even = even @ M2
        V = V + b[k] * even
        if k + 1 <= order:
            U = U + b[k + 1] * even
    U = M @ U
    return np.linalg.solve(V - U, V + U)


def _pade_13(M: np.ndarray) -> np.ndarray:
    b = _PADE_B[13]
    n = M.shape[0]
    ident = np.eye(n)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M4 @ M2
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * ident)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * ident)
    return np.linalg.solve(V - U, V + U)


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring Pade approximation.

    Degree 13 with power-of-two scaling for large norms; lower diagonal Pade
    orders (3, 5, 7, 9) for norms already inside their accuracy radii.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expm expects a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if not np.all(np.isfinite(M)):
        raise ValueError("expm argument contains non-finite entries")

    norm = np.linalg.norm(M, 1)
    for order in (3, 5, 7, 9):
        if norm <= _PADE_THETA[order]:
            return _pade_low(M, order)

    squarings = max(0, int(np.ceil(np.log2(norm / _PADE_THETA[13]))))
    X = _pade_13(M / (2.0 ** squarings))
    for _ in range(squarings):
        X = X @ X
    return X


@dataclass(frozen=True)
class VanLoanResult:
    """Exponential and integral blocks of one plant over the horizon ``t``.

    * ``Phi``:    exp(A t), shape (nu, nu)
    * ``Gamma``:  int_0^t exp(A s) B ds, shape (nu, m)
    * ``Lambda``: int_0^t C exp(A s) ds, shape (p, nu)
    * ``Theta``:  int_0^t int_0^s C exp(A r) B dr ds, shape (p, m)

    All blocks vanish in the limit t -> 0 except Phi -> I.
    """

    Phi: np.ndarray
    Gamma: np.ndarray
    Lambda: np.ndarray
    Theta: np.ndarray
    t: float


def vanloan(sys: ContinuousStateSpace, t: float) -> VanLoanResult:
    """Compute all four integral blocks from one augmented exponential.

    The augmented matrix ``[[A, I, 0], [0, 0, I], [0, 0, 0]]`` has
    exponential blocks (1,1) = exp(At), (1,2) = int_0^t exp(As) ds and
    (1,3) = int_0^t (t - s) exp(As) ds; the second integral equals the
    iterated integral in ``Theta`` after swapping the order of integration.
    """
    if sys.nstates == 0:
        raise DimensionError("integral blocks require at least one state")
    if not t > 0.0:
        raise ValueError(f"integration horizon must be positive, got {t}")
    nu = sys.nstates
    M = np.zeros((3 * nu, 3 * nu))
    M[:nu, :nu] = sys.A
    M[:nu, nu:2 * nu] = np.eye(nu)
    M[nu:2 * nu, 2 * nu:] = np.eye(nu)
    E = expm(M * t)
    J = E[:nu, nu:2 * nu]
    K = E[:nu, 2 * nu:]
    return VanLoanResult(
        Phi=E[:nu, :nu],
        Gamma=J @ sys.B,
        Lambda=sys.C @ J,
        Theta=sys.C @ K @ sys.B,
        t=float(t),
    )
