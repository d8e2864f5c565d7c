"""Hyperbolic-parabolic system definitions and their shared eigenstructure.

A system is ``u_t + A(u) u_x = eps (B(u) u_x)_x`` on an axis-aligned box of states.
``A`` and ``B`` must commute, so one set of right eigenvectors ``r_i`` diagonalises
both: ``A r_i = lambda_i r_i`` and ``B r_i = mu_i r_i``.

All matrix callables are vectorised: ``A(u)`` with ``u`` of shape ``(..., n)``
returns an array of shape ``(..., n, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CommutationViolation, DegenerateSpectrum, NonReal, OutOfDomain
from .report import EstimateReport

MatrixFn = Callable[[np.ndarray], np.ndarray]

# relative band inside which two eigenvector components count as equally large
_TIE_BAND = 1e-9


@dataclass(frozen=True)
class Tolerances:
    frame_tol: float = 1e-10
    commutation_tol: float = 1e-10
    temple_tol: float = 1e-6
    gap_min: float = 1e-6
    jacobian_tol: float = 1e-6


@dataclass(frozen=True)
class ScalarLaw:
    """One decoupled component ``w_t + f(w)_x = eps (mu(w) w_x)_x``."""

    flux: Callable[[np.ndarray], np.ndarray]
    speed: Callable[[np.ndarray], np.ndarray]
    viscosity: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    name: str
    n: int
    A: MatrixFn
    B: MatrixFn
    lo: np.ndarray
    hi: np.ndarray
    c0: float
    flux: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # constant right-eigenvector matrix (unit columns) of the constant-frame family
    frame_matrix: Optional[np.ndarray] = None
    # per-family scalar laws in w = R^{-1} u coordinates (constant-frame family only)
    laws: Optional[tuple] = None
    description: str = ""
    temple: bool = True
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        lo = np.asarray(self.lo, dtype=float).reshape(self.n)
        hi = np.asarray(self.hi, dtype=float).reshape(self.n)
        if np.any(lo >= hi):
            raise ValueError("domain box must have lo < hi in every coordinate")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.frame_matrix is not None:
            R = np.asarray(self.frame_matrix, dtype=float)
            object.__setattr__(self, "frame_matrix", R)
            object.__setattr__(self, "_frame_inverse", np.linalg.inv(R))

    @property
    def constant_frame(self) -> bool:
        return self.frame_matrix is not None

    @property
    def conservative(self) -> bool:
        return self.flux is not None

    def contains(self, u, slack: float = 0.0) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        pad = slack * (self.hi - self.lo)
        return np.all((u >= self.lo - pad) & (u <= self.hi + pad), axis=-1)

    def require_inside(self, u, what: str = "state") -> None:
        u = np.asarray(u, dtype=float)
        inside = self.contains(u, slack=1e-12)
        if not np.all(inside):
            bad = u.reshape(-1, self.n)[~inside.reshape(-1)][0]
            raise OutOfDomain(f"{what} {bad.tolist()} outside the domain box of {self.name}")

    def to_w(self, u):
        """Coordinates ``w = R^{-1} u`` of the constant-frame family."""
        return np.asarray(u) @ self._frame_inverse.T

    def from_w(self, w):
        return np.asarray(w) @ self.frame_matrix.T


@dataclass(frozen=True)
class EigenFrame:
    u: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    r: np.ndarray  # columns are right eigenvectors
    l: np.ndarray  # rows are left eigenvectors

    def reconstruct(self):
        """Return ``(sum lambda_i r_i l_i, sum mu_i r_i l_i)``."""
        A = self.r @ np.diag(self.lam) @ self.l
        B = self.r @ np.diag(self.mu) @ self.l
        return A, B


# ---------------------------------------------------------------------------
# frames


def _sign_convention(R: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude component is positive.

    Components within a relative band of ``_TIE_BAND`` of the maximum count as
    tied; the first tied component decides.
    """
    absR = np.abs(R)
    top = absR.max(axis=-2, keepdims=True)
    tied = absR >= top * (1.0 - _TIE_BAND)
    idx = np.argmax(tied, axis=-2)  # first True per column
    lead = np.take_along_axis(R, idx[..., None, :], axis=-2)[..., 0, :]
    sign = np.where(lead < 0, -1.0, 1.0)
    return R * sign[..., None, :]


def _align(R: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Flip columns of ``R`` so each has a non-negative dot product with ``ref``."""
    dots = np.einsum("...ki,...ki->...i", R, ref)
    sign = np.where(dots < 0, -1.0, 1.0)
    return R * sign[..., None, :]


def _eig_2x2(A: np.ndarray):
    a, b = A[..., 0, 0], A[..., 0, 1]
    c, d = A[..., 1, 0], A[..., 1, 1]
    half_tr = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    if np.any(disc < 0):
        raise NonReal("complex eigenvalues of A")
    root = np.sqrt(disc)
    lam = np.stack([half_tr - root, half_tr + root], axis=-1)
    cols = []
    for k in range(2):
        lk = lam[..., k]
        v1 = np.stack([b, lk - a], axis=-1)
        v2 = np.stack([lk - d, c], axis=-1)
        n1 = np.linalg.norm(v1, axis=-1)
        n2 = np.linalg.norm(v2, axis=-1)
        use1 = (n1 >= n2)[..., None]
        v = np.where(use1, v1, v2)
        nv = np.where(use1[..., 0], n1, n2)
        # diagonal matrices: eigenvectors are the coordinate axes
        axis = np.zeros_like(v)
        axis[..., k] = 1.0
        small = nv <= 1e-300
        v = np.where(small[..., None], axis, v / np.where(small, 1.0, nv)[..., None])
        cols.append(v)
    R = np.stack(cols, axis=-1)
    return lam, R


def _inv_2x2(R: np.ndarray) -> np.ndarray:
    a, b = R[..., 0, 0], R[..., 0, 1]
    c, d = R[..., 1, 0], R[..., 1, 1]
    det = a * d - b * c
    inv = np.empty_like(R)
    inv[..., 0, 0] = d / det
    inv[..., 0, 1] = -b / det
    inv[..., 1, 0] = -c / det
    inv[..., 1, 1] = a / det
    return inv


def frames(sys: SystemSpec, U, ref: Optional[np.ndarray] = None, check: bool = False):
    """Batched eigenframes at states ``U`` of shape ``(..., n)``.

    Returns ``(lam, mu, R, L)`` with shapes ``(..., n)``, ``(..., n)``,
    ``(..., n, n)`` (columns ``r_i``) and ``(..., n, n)`` (rows ``l_i``).
    With ``ref`` the columns are sign-aligned to ``ref`` instead of following the
    largest-component convention. ``check`` enables the gap and reality checks.
    """
    U = np.asarray(U, dtype=float)
    n = sys.n
    batch = U.shape[:-1]
    if sys.constant_frame and sys.laws is not None:
        # per-family speeds and viscosities are known in closed form
        W = sys.to_w(U)
        lam = np.stack([sys.laws[i].speed(W[..., i]) for i in range(n)], axis=-1)
        mu = np.stack([sys.laws[i].viscosity(W[..., i]) for i in range(n)], axis=-1)
        R = np.broadcast_to(sys.frame_matrix, batch + (n, n))
        L = np.broadcast_to(sys._frame_inverse, batch + (n, n))
        if check and n > 1 and np.any(np.diff(lam, axis=-1) < sys.tol.gap_min):
            raise DegenerateSpectrum("eigenvalue gap below gap_min")
        return lam, mu, R, L
    A = sys.A(U)
    B = sys.B(U)
    if n == 1:
        lam = A[..., 0, :].copy()
        mu = B[..., 0, :].copy()
        R = np.ones(batch + (1, 1))
        L = np.ones(batch + (1, 1))
        return lam, mu, R, L
    if sys.constant_frame:
        R = np.broadcast_to(sys.frame_matrix, batch + (n, n))
        L = np.broadcast_to(sys._frame_inverse, batch + (n, n))
        lam = np.einsum("...ij,...jk,...ki->...i", L, A, R)
    else:
        if n == 2:
            lam, R = _eig_2x2(A)
        else:
            w, V = np.linalg.eig(A)
            if np.any(np.abs(w.imag) > 1e-12 * (1.0 + np.abs(w.real))):
                raise NonReal("complex eigenvalues of A")
            order = np.argsort(w.real, axis=-1)
            lam = np.take_along_axis(w.real, order, axis=-1)
            R = np.take_along_axis(V.real, order[..., None, :], axis=-1)
            R = R / np.linalg.norm(R, axis=-2, keepdims=True)
        R = _sign_convention(R) if ref is None else _align(R, ref)
        L = _inv_2x2(R) if n == 2 else np.linalg.inv(R)
    if check:
        gaps = np.diff(lam, axis=-1)
        if np.any(gaps < sys.tol.gap_min):
            raise DegenerateSpectrum(f"eigenvalue gap {float(gaps.min()):.3e} below gap_min")
    mu = np.einsum("...ij,...jk,...ki->...i", L, B, R)
    return lam, mu, R, L


def compute_frame(sys: SystemSpec, u, ref: Optional[EigenFrame] = None) -> EigenFrame:
    """Validated eigenframe at a single state.

    Eigenvalues come from a dense eigensolver on ``A(u)``; ``mu_i`` is read off as
    ``l_i B r_i`` in that frame rather than by diagonalising ``B`` separately.
    """
    u = np.asarray(u, dtype=float).reshape(sys.n)
    sys.require_inside(u)
    A = np.asarray(sys.A(u), dtype=float)
    B = np.asarray(sys.B(u), dtype=float)
    w, V = np.linalg.eig(A)
    scale = 1.0 + np.max(np.abs(w))
    if np.any(np.abs(w.imag) > 1e-12 * scale):
        raise NonReal(f"A({u.tolist()}) has complex eigenvalues {w.tolist()}")
    order = np.argsort(w.real)
    lam = w.real[order]
    R = V.real[:, order]
    if sys.n > 1 and np.min(np.diff(lam)) < sys.tol.gap_min:
        raise DegenerateSpectrum(f"eigenvalue gap {np.min(np.diff(lam)):.3e} at {u.tolist()}")
    comm = np.linalg.norm(A @ B - B @ A)
    if comm > sys.tol.commutation_tol * max(1.0, np.linalg.norm(A) * np.linalg.norm(B)):
        raise CommutationViolation(f"||AB - BA|| = {comm:.3e} at {u.tolist()}")
    R = R / np.linalg.norm(R, axis=0, keepdims=True)
    R = _sign_convention(R) if ref is None else _align(R, ref.r)
    L = np.linalg.inv(R)
    mu = np.einsum("ij,jk,ki->i", L, B, R) / np.einsum("ij,ji->i", L, R)
    return EigenFrame(u=u, lam=lam, mu=mu, r=R, l=L)


# ---------------------------------------------------------------------------
# directional derivatives

_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


def directional_derivative(g, u, zeta, step: float = 1e-5, order: int = 2,
                           sys: Optional[SystemSpec] = None):
    """Central-difference approximation of ``zeta . grad g(u)``.

    ``g`` may return any array. With ``sys`` the stencil points must lie inside
    the domain box.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    offsets, weights = _STENCILS[order]
    u = np.asarray(u, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if sys is not None:
        for o in (offsets[0], offsets[-1]):
            pt = u + o * step * zeta
            if not np.all(sys.contains(pt, slack=1e-12)):
                raise OutOfDomain(f"stencil point {pt.tolist()} leaves the domain box")
    total = None
    for o, wgt in zip(offsets, weights):
        val = wgt * np.asarray(g(u + o * step * zeta), dtype=float)
        total = val if total is None else total + val
    return total / step


# ---------------------------------------------------------------------------
# sampling and hypothesis checks


def lattice_samples(sys: SystemSpec, count: int, margin: float = 0.02) -> np.ndarray:
    """Deterministic rank-1 lattice of ``count`` states inside the (shrunk) box."""
    if sys.n == 1:
        pts = (np.arange(count) + 0.5) / count
        unit = pts[:, None]
    else:
        # Korobov generator; golden-ratio style powers spread points evenly
        a = max(2, int(round(count * 0.6180339887)))
        gen = np.array([pow(a, k, count) for k in range(sys.n)], dtype=float)
        k = np.arange(count)[:, None]
        unit = np.mod((k * gen + 0.5) / count, 1.0)
    width = sys.hi - sys.lo
    return sys.lo + width * (margin + (1.0 - 2.0 * margin) * unit)


def random_samples(sys: SystemSpec, count: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
    rng = np.random.default_rng(seed)
    unit = rng.random((count, sys.n))
    width = sys.hi - sys.lo
    return sys.lo + width * (margin + (1.0 - 2.0 * margin) * unit)


def temple_residuals(sys: SystemSpec, samples, step: float = 1e-5) -> np.ndarray:
    """``|r_i . grad r_i|`` for every sample and family, shape ``(m, n)``."""
    U = np.atleast_2d(np.asarray(samples, dtype=float))
    _, _, R, _ = frames(sys, U)
    out = np.empty(U.shape)
    for i in range(sys.n):
        ri = R[..., :, i]
        _, _, Rp, _ = frames(sys, U + step * ri, ref=R)
        _, _, Rm, _ = frames(sys, U - step * ri, ref=R)
        out[:, i] = np.linalg.norm((Rp[..., :, i] - Rm[..., :, i]) / (2 * step), axis=-1)
    return out


def check_temple(sys: SystemSpec, samples, step: float = 1e-5) -> EstimateReport:
    res = temple_residuals(sys, samples, step=step)
    worst = float(res.max()) if res.size else 0.0
    return EstimateReport(
        name="temple",
        scalars={"max_residual": worst, "step": step, "samples": int(len(res))},
        threshold={"max_residual": sys.tol.temple_tol},
        passed=worst <= sys.tol.temple_tol,
    )


def check_hypotheses(sys: SystemSpec, samples) -> EstimateReport:
    """Strict hyperbolicity, commutation, viscosity bound and flux consistency."""
    U = np.atleast_2d(np.asarray(samples, dtype=float))
    tol = sys.tol
    A = sys.A(U)
    B = sys.B(U)
    eigA = np.linalg.eigvals(A)
    imagA = float(np.max(np.abs(eigA.imag))) if sys.n > 1 else 0.0
    lam = np.sort(eigA.real, axis=-1)
    gap = float(np.min(np.diff(lam, axis=-1))) if sys.n > 1 else float("inf")
    comm = np.linalg.norm(A @ B - B @ A, axis=(-2, -1))
    eigB = np.linalg.eigvals(B)
    imagB = float(np.max(np.abs(eigB.imag)))
    minB = float(np.min(eigB.real))
    jac_err = 0.0
    if sys.flux is not None:
        h = 1e-6
        J = np.empty_like(A)
        for k in range(sys.n):
            e = np.zeros(sys.n)
            e[k] = h
            J[..., :, k] = (sys.flux(U + e) - sys.flux(U - e)) / (2 * h)
        jac_err = float(np.max(np.abs(J - A)))
    # frame invariants through the batched path
    lamF, muF, R, L = frames(sys, U)
    AR = np.einsum("...ij,...jk->...ik", A, R)
    BR = np.einsum("...ij,...jk->...ik", B, R)
    eig_res = float(max(np.max(np.abs(AR - R * lamF[..., None, :])),
                        np.max(np.abs(BR - R * muF[..., None, :]))))
    bio = float(np.max(np.abs(np.einsum("...ij,...jk->...ik", L, R) - np.eye(sys.n))))
    scalars = {
        "samples": int(len(U)),
        "min_lambda_gap": gap,
        "max_imag_lambda": imagA,
        "max_commutator": float(comm.max()),
        "min_B_eigenvalue": minB,
        "max_imag_B_eigenvalue": imagB,
        "max_jacobian_error": jac_err,
        "max_frame_residual": eig_res,
        "max_biorthogonality_error": bio,
    }
    threshold = {
        "min_lambda_gap": tol.gap_min,
        "max_commutator": tol.commutation_tol,
        "min_B_eigenvalue": sys.c0,
        "max_jacobian_error": tol.jacobian_tol,
        "max_frame_residual": tol.frame_tol,
    }
    checks = {
        "H_A1": gap >= tol.gap_min and imagA <= 1e-12,
        "commutation": comm.max() <= tol.commutation_tol,
        "H_B": minB >= sys.c0 * (1 - 1e-12) and imagB <= 1e-12,
        "flux": jac_err <= tol.jacobian_tol,
        "frame": eig_res <= tol.frame_tol and bio <= tol.frame_tol,
    }
    scalars.update({f"pass_{k}": bool(v) for k, v in checks.items()})
    return EstimateReport(name="hypotheses", scalars=scalars, threshold=threshold,
                          passed=all(checks.values()))


def check_system(sys: SystemSpec, samples: Optional[Sequence] = None, count: int = 100) -> dict:
    """Run every system check; returns ``{check name: EstimateReport}``."""
    if samples is None:
        samples = lattice_samples(sys, count)
    return {
        "hypotheses": check_hypotheses(sys, samples),
        "temple": check_temple(sys, samples),
    }
