"""Bundled reference systems and the name registry.

* ``burgers``  scalar, ``lambda = u``, ``mu = 1 + u^2/4``.
* ``rotated2``, ``rotated3``  constant-frame systems ``A = R Lambda(w) R^{-1}``,
  ``B = R M(w) R^{-1}`` with ``w = R^{-1} u``; each ``lambda_i`` and ``mu_i`` depends
  on ``w_i`` alone, so the system decouples into scalar laws.
* ``langmuir``  two-component Langmuir chromatography with ``B = b A + c(u) I``.
* ``psystem``  isentropic p-system, a genuinely nonlinear negative control.
  It is not part of :func:`bundled_systems`.
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np

from .errors import ConfigError
from .system import ScalarLaw, SystemSpec


def _diag_matrix(vals: np.ndarray) -> np.ndarray:
    n = vals.shape[-1]
    out = np.zeros(vals.shape + (n,))
    idx = np.arange(n)
    out[..., idx, idx] = vals
    return out


def burgers() -> SystemSpec:
    def A(U):
        return np.asarray(U, dtype=float)[..., None].copy()

    def B(U):
        U = np.asarray(U, dtype=float)
        return (1.0 + 0.25 * U * U)[..., None]

    def flux(U):
        U = np.asarray(U, dtype=float)
        return 0.5 * U * U

    law = ScalarLaw(flux=lambda w: 0.5 * w * w, speed=lambda w: w + 0.0,
                    viscosity=lambda w: 1.0 + 0.25 * w * w)
    return SystemSpec(
        name="burgers", n=1, A=A, B=B, lo=[-2.0], hi=[2.0], c0=1.0, flux=flux,
        frame_matrix=np.ones((1, 1)), laws=(law,),
        description="scalar Burgers flux u^2/2 with viscosity 1 + u^2/4",
    )


def constant_frame(name: str, R: np.ndarray, laws: Sequence[ScalarLaw], lo, hi, c0: float,
                   description: str = "") -> SystemSpec:
    """Build ``A = R diag(lambda_i(w_i)) R^{-1}``, ``B = R diag(mu_i(w_i)) R^{-1}``."""
    R = np.asarray(R, dtype=float)
    Rinv = np.linalg.inv(R)
    n = R.shape[0]

    def per_family(attr, U):
        W = np.asarray(U, dtype=float) @ Rinv.T
        return np.stack([getattr(laws[i], attr)(W[..., i]) for i in range(n)], axis=-1)

    def conj(D):
        return R @ D @ Rinv

    def A(U):
        return conj(_diag_matrix(per_family("speed", U)))

    def B(U):
        return conj(_diag_matrix(per_family("viscosity", U)))

    def flux(U):
        return per_family("flux", U) @ R.T

    return SystemSpec(name=name, n=n, A=A, B=B, lo=lo, hi=hi, c0=c0, flux=flux,
                      frame_matrix=R, laws=tuple(laws), description=description)


def rotated2() -> SystemSpec:
    R = np.array([[1.0, -0.6], [0.0, 0.8]])
    laws = [
        ScalarLaw(flux=lambda w: 0.5 * w * w, speed=lambda w: w + 0.0,
                  viscosity=lambda w: 1.0 + 0.25 * w * w),
        ScalarLaw(flux=lambda w: 2.0 * w + 0.5 * w * w, speed=lambda w: 2.0 + w,
                  viscosity=lambda w: 1.5 + 0.5 * w * w),
    ]
    return constant_frame("rotated2", R, laws, lo=[-0.5, -0.5], hi=[0.5, 0.5], c0=1.0,
                          description="constant frame, Lambda = diag(w1, 2 + w2)")


def rotated3() -> SystemSpec:
    R = np.array([[1.0, -0.6, 0.36], [0.0, 0.8, -0.48], [0.0, 0.0, 0.8]])
    laws = [
        ScalarLaw(flux=lambda w: -2.0 * w + 0.5 * w * w, speed=lambda w: -2.0 + w,
                  viscosity=lambda w: 1.0 + 0.25 * w * w),
        ScalarLaw(flux=lambda w: 0.5 * w * w, speed=lambda w: w + 0.0,
                  viscosity=lambda w: 1.5 + 0.5 * w * w),
        ScalarLaw(flux=lambda w: 2.0 * w + 0.5 * w * w, speed=lambda w: 2.0 + w,
                  viscosity=lambda w: 2.0 + 0.25 * w * w),
    ]
    return constant_frame("rotated3", R, laws, lo=[-0.4] * 3, hi=[0.4] * 3, c0=1.0,
                          description="constant frame, Lambda = diag(-2 + w1, w2, 2 + w3)")


LANGMUIR_K = (1.0, 2.0)


def langmuir(k: Sequence[float] = LANGMUIR_K, b: float = 0.5) -> SystemSpec:
    """``f_i = k_i u_i / (1 + u_1 + u_2)`` with ``B = b A + (1 + (u_1 + u_2)/4) I``."""
    k = np.asarray(k, dtype=float)

    def flux(U):
        U = np.asarray(U, dtype=float)
        d = 1.0 + U[..., 0] + U[..., 1]
        return k * U / d[..., None]

    def A(U):
        U = np.asarray(U, dtype=float)
        d = 1.0 + U[..., 0] + U[..., 1]
        J = np.empty(U.shape + (2,))
        for i in range(2):
            for j in range(2):
                J[..., i, j] = k[i] * ((i == j) * d - U[..., i]) / d**2
        return J

    def B(U):
        U = np.asarray(U, dtype=float)
        c = 1.0 + 0.25 * (U[..., 0] + U[..., 1])
        return b * A(U) + c[..., None, None] * np.eye(2)

    return SystemSpec(name="langmuir", n=2, A=A, B=B, lo=[0.0, 0.0], hi=[1.0, 1.0], c0=1.0,
                      flux=flux,
                      description=f"Langmuir isotherm k={k.tolist()}, B = {b} A + (1 + (u1+u2)/4) I")


def psystem(gamma: float = 1.4) -> SystemSpec:
    """``v_t - w_x = 0``, ``w_t + p(v)_x = 0`` with ``p = v^-gamma`` and ``B = I``."""

    def flux(U):
        U = np.asarray(U, dtype=float)
        return np.stack([-U[..., 1], U[..., 0] ** (-gamma)], axis=-1)

    def A(U):
        U = np.asarray(U, dtype=float)
        J = np.zeros(U.shape + (2,))
        J[..., 0, 1] = -1.0
        J[..., 1, 0] = -gamma * U[..., 0] ** (-gamma - 1.0)
        return J

    def B(U):
        U = np.asarray(U, dtype=float)
        return np.broadcast_to(np.eye(2), U.shape[:-1] + (2, 2)).copy()

    return SystemSpec(name="psystem", n=2, A=A, B=B, lo=[0.5, -1.0], hi=[2.0, 1.0], c0=1.0,
                      flux=flux, temple=False,
                      description="p-system p = v^-1.4, genuinely nonlinear (negative control)")


_FACTORIES: Dict[str, Callable[[], SystemSpec]] = {
    "burgers": burgers,
    "rotated2": rotated2,
    "rotated3": rotated3,
    "langmuir": langmuir,
    "psystem": psystem,
}

BUNDLED = ("burgers", "rotated2", "rotated3", "langmuir")


def system_names() -> List[str]:
    return list(_FACTORIES)


def bundled_systems() -> List[SystemSpec]:
    return [_FACTORIES[name]() for name in BUNDLED]


def get_system(name_or_path: str) -> SystemSpec:
    """Resolve a bundled name or a path to a declarative ``.sys`` file."""
    if name_or_path in _FACTORIES:
        return _FACTORIES[name_or_path]()
    path = Path(name_or_path)
    if path.suffix == ".sys" or path.exists():
        if not path.exists():
            raise ConfigError(f"system file not found: {path}")
        from .expr import load_system_file
        return load_system_file(path)
    raise ConfigError(f"unknown system {name_or_path!r}; known: {', '.join(_FACTORIES)}")
