"""Source coefficients of the decomposed gradient equations.

With ``u_x = sum_i v_i r_i`` the components satisfy

    v_{i,t} + (lambda_i v_i)_x - eps (mu_i v_i)_xx = phi_i,
    phi_i = sum p^i_jk v_j v_k + eps (sum q^i_jk v_{j,x} v_k + sum s^i_jkl v_j v_k v_l),

and a first variation ``h = sum h_i r_i`` carries the vector coefficients
``phat, qhat, shat, what``.

Every bullet ``zeta . g`` is assembled from coordinate partials of ``r_i``,
``mu_i``, ``A`` and ``B`` (sixth-order central differences, step ``h``) and the
chain rule, so nested bullets such as ``r_k . (r_j . r_i)`` need second partials
only. Index layout of the raw bullet arrays (batch axis first):

* ``D[m, j, i, c]``       component ``c`` of ``r_j . r_i``
* ``Dmu[m, j, i]``        ``r_j . mu_i``
* ``DD[m, k, j, i, c]``   ``r_k . (r_j . r_i)``
* ``DxD[m, a, b, c, :]``  ``(r_a . r_b) . r_c``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain
from .system import SystemSpec, frames

# sixth-order central stencils for first and second derivatives
_D1 = tuple((o, w / 60.0) for o, w in ((-3.0, -1.0), (-2.0, 9.0), (-1.0, -45.0),
                                        (1.0, 45.0), (2.0, -9.0), (3.0, 1.0)))
_D2 = tuple((o, w / 180.0) for o, w in ((-3.0, 2.0), (-2.0, -27.0), (-1.0, 270.0), (0.0, -490.0),
                                         (1.0, 270.0), (2.0, -27.0), (3.0, 2.0)))
_REACH = 3.0
DEFAULT_STEP = 1.2e-3


@dataclass(frozen=True, eq=False)
class SourceCoefficients:
    u: np.ndarray
    p: np.ndarray      # p[i, j, k] = l_i . p_jk
    q: np.ndarray      # q[i, j, k] = l_i . q_jk
    s: np.ndarray      # s[i, j, k, l] = l_i . s_jkl
    phat: np.ndarray   # phat[i, j, :]
    qhat: np.ndarray   # qhat[i, j, k, :]
    shat: np.ndarray   # shat[i, j, :]
    what: np.ndarray   # what[i, j, :]

    def identity_residuals(self) -> dict:
        """Largest diagonal entries that must vanish for Temple systems."""
        n = self.p.shape[0]
        k = np.arange(n)
        return {
            "p_kk": float(np.abs(self.p[:, k, k]).max()),
            "q_kk": float(np.abs(self.q[:, k, k]).max()),
            "s_kkk": float(np.abs(self.s[:, k, k, k]).max()),
            "phat_kk": float(np.abs(self.phat[k, k]).max()),
            "qhat_kkk": float(np.abs(self.qhat[k, k, k]).max()),
            "shat_kk": float(np.abs(self.shat[k, k]).max()),
            "what_kk": float(np.abs(self.what[k, k]).max()),
        }


@dataclass(frozen=True, eq=False)
class Bullets:
    lam: np.ndarray
    mu: np.ndarray
    R: np.ndarray
    L: np.ndarray
    D: np.ndarray
    Dmu: np.ndarray
    DD: np.ndarray
    DxD: np.ndarray
    DA: np.ndarray      # DA[m, j] = r_j . A   (matrix)
    DB: np.ndarray      # DB[m, j] = r_j . B
    DxDB: np.ndarray    # DxDB[m, a, b] = (r_a . r_b) . B
    D2B: np.ndarray     # D2B[m, j, i] = D^2 B[r_j, r_i]  (matrix)


def _check_stencil(sys: SystemSpec, U: np.ndarray, reach: float) -> None:
    lo = U - reach
    hi = U + reach
    if np.any(lo < sys.lo - 1e-12) or np.any(hi > sys.hi + 1e-12):
        raise OutOfDomain(f"finite-difference stencil of reach {reach:g} leaves the domain box")


def bullets(sys: SystemSpec, U, h: float = DEFAULT_STEP, check_domain: bool = True) -> Bullets:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n = sys.n
    if check_domain:
        _check_stencil(sys, U, _REACH * h)
    lam, mu, R, L = frames(sys, U)
    eye = np.eye(n)

    def ev(shift):
        lam_s, mu_s, R_s, _ = frames(sys, U + shift, ref=R)
        return R_s, mu_s, sys.A(U + shift), sys.B(U + shift)

    # first partials: dX[m, l, ...] = d/du_l X
    samples = {}
    for l in range(n):
        for o, _ in _D1:
            samples[(l, o)] = ev(o * h * eye[l])
    dR = np.stack([sum(w * samples[(l, o)][0] for o, w in _D1) / h for l in range(n)], axis=1)
    dmu = np.stack([sum(w * samples[(l, o)][1] for o, w in _D1) / h for l in range(n)], axis=1)
    dA = np.stack([sum(w * samples[(l, o)][2] for o, w in _D1) / h for l in range(n)], axis=1)
    dB = np.stack([sum(w * samples[(l, o)][3] for o, w in _D1) / h for l in range(n)], axis=1)

    # second partials of R and B: d2X[m, l, p, ...]
    d2R = np.empty((U.shape[0], n, n, n, n))
    d2B = np.empty((U.shape[0], n, n, n, n))
    base = ev(np.zeros(n))
    for l in range(n):
        acc_R = 0.0
        acc_B = 0.0
        for o, w in _D2:
            Rs, _, _, Bs = base if o == 0 else (samples[(l, o)] if (l, o) in samples else ev(o * h * eye[l]))
            acc_R = acc_R + w * Rs
            acc_B = acc_B + w * Bs
        d2R[:, l, l] = acc_R / h**2
        d2B[:, l, l] = acc_B / h**2
        for p in range(l + 1, n):
            acc_R = 0.0
            acc_B = 0.0
            for o1, w1 in _D1:
                for o2, w2 in _D1:
                    Rs, _, _, Bs = ev(o1 * h * eye[l] + o2 * h * eye[p])
                    acc_R = acc_R + w1 * w2 * Rs
                    acc_B = acc_B + w1 * w2 * Bs
            d2R[:, l, p] = d2R[:, p, l] = acc_R / h**2
            d2B[:, l, p] = d2B[:, p, l] = acc_B / h**2

    # r_j . r_i = sum_l R[l, j] dR[l][:, i]
    D = np.einsum("mlj,mlci->mjic", R, dR)
    Dmu = np.einsum("mlj,mli->mji", R, dmu)
    # r_k . (r_j . r_i) = sum_l r_k,l d_l (sum_p r_j,p d_p r_i)
    DD = (np.einsum("mlk,mlpj,mpci->mkjic", R, dR, dR)
          + np.einsum("mlk,mpj,mlpci->mkjic", R, R, d2R))
    # (r_a . r_b) . r_c = sum_l (r_a . r_b)_l d_l r_c
    DxD = np.einsum("mabl,mlxc->mabcx", D, dR)
    DA = np.einsum("mlj,mlxy->mjxy", R, dA)
    DB = np.einsum("mlj,mlxy->mjxy", R, dB)
    DxDB = np.einsum("mabl,mlxy->mabxy", D, dB)
    D2B = np.einsum("mlj,mpi,mlpxy->mjixy", R, R, d2B)
    return Bullets(lam=lam, mu=mu, R=R, L=L, D=D, Dmu=Dmu, DD=DD, DxD=DxD,
                   DA=DA, DB=DB, DxDB=DxDB, D2B=D2B)


def v_coefficients(b: Bullets):
    """Projected ``p[m, i, j, k]``, ``q[m, i, j, k]``, ``s[m, i, j, k, l]``."""
    lam, mu, D = b.lam, b.mu, b.D
    # vector-valued p_ij, q_ij, s_ijk (component axis last)
    Dt = np.swapaxes(D, 1, 2)  # Dt[m, i, j] = D[m, j, i] = r_j . r_i
    p_vec = -lam[:, :, None, None] * (Dt - D)
    # coefficient of v_{i,x} v_j: 2 mu_i r_j.r_i + (mu_j - mu_i) r_i.r_j
    q_vec = 2 * mu[:, :, None, None] * Dt + (mu[:, None, :] - mu[:, :, None])[..., None] * D
    # s_ijk = 2 (r_j.mu_i) r_k.r_i + mu_i (r_k.(r_j.r_i) - (r_k.r_i).r_j) - (r_k.mu_j) r_j.r_i
    t1 = 2 * np.einsum("mji,mkic->mijkc", b.Dmu, D)
    t2 = mu[:, :, None, None, None] * (np.einsum("mkjic->mijkc", b.DD) - np.einsum("mkijc->mijkc", b.DxD))
    t3 = -np.einsum("mkj,mjic->mijkc", b.Dmu, D)
    s_vec = t1 + t2 + t3
    p = np.einsum("mac,mijc->maij", b.L, p_vec)
    q = np.einsum("mac,mijc->maij", b.L, q_vec)
    s = np.einsum("mac,mijkc->maijk", b.L, s_vec)
    return p, q, s


def h_coefficients(b: Bullets):
    """Vector coefficients ``phat[m,i,j,:]``, ``qhat[m,i,j,k,:]``, ``shat``, ``what``."""
    lam, mu, D, R = b.lam, b.mu, b.D, b.R
    Dt = np.swapaxes(D, 1, 2)  # [m, i, j] -> r_j . r_i
    rA = np.einsum("mjxy,myi->mjix", b.DA, R)  # rA[m, j, i] = (r_j . A) r_i
    rB = np.einsum("mjxy,myi->mjix", b.DB, R)  # rB[m, j, i] = (r_j . B) r_i
    phat = (lam[:, None, :] - lam[:, :, None])[..., None] * Dt + np.swapaxes(rA, 1, 2) - rA
    shat = 2 * mu[:, :, None, None] * Dt + rB - np.swapaxes(rB, 1, 2)
    what = (mu[:, :, None] - mu[:, None, :])[..., None] * Dt - np.swapaxes(rB, 1, 2) + rB

    q = -np.einsum("mkj,mjic->mijkc", b.Dmu, D)
    q -= mu[:, None, :, None, None] * np.einsum("mkjic->mijkc", b.DxD)
    q += 2 * np.einsum("mki,mjic->mijkc", b.Dmu, D)
    q += mu[:, :, None, None, None] * np.einsum("mkjic->mijkc", b.DD)
    # ((r_k.r_i).B) r_j - ((r_k.r_j).B) r_i
    q += np.einsum("mkixy,myj->mijkx", b.DxDB, R)
    q -= np.einsum("mkjxy,myi->mijkx", b.DxDB, R)
    # (r_i.B)(r_k.r_j) - (r_j.B)(r_k.r_i)
    q += np.einsum("mixy,mkjy->mijkx", b.DB, D)
    q -= np.einsum("mjxy,mkiy->mijkx", b.DB, D)
    # D^2B[r_j, r_i] r_k - D^2B[r_j, r_k] r_i
    q += np.einsum("mjixy,myk->mijkx", b.D2B, R)
    q -= np.einsum("mjkxy,myi->mijkx", b.D2B, R)
    return phat, q, shat, what


def source_coefficients(sys: SystemSpec, u, h: float = DEFAULT_STEP) -> SourceCoefficients:
    u = np.asarray(u, dtype=float).reshape(1, sys.n)
    b = bullets(sys, u, h=h)
    p, q, s = v_coefficients(b)
    phat, qhat, shat, what = h_coefficients(b)
    return SourceCoefficients(u=u[0], p=p[0], q=q[0], s=s[0], phat=phat[0], qhat=qhat[0],
                              shat=shat[0], what=what[0])


def source_phi(sys: SystemSpec, U, V, Vx, epsilon: float, h: float = DEFAULT_STEP,
               check_domain: bool = False) -> np.ndarray:
    """``phi_i`` at states ``U[m]`` given components ``V[m, i]`` and ``Vx[m, i]``."""
    b = bullets(sys, U, h=h, check_domain=check_domain)
    p, q, s = v_coefficients(b)
    quad = np.einsum("mijk,mj,mk->mi", p, V, V)
    mixed = np.einsum("mijk,mj,mk->mi", q, Vx, V)
    cubic = np.einsum("mijkl,mj,mk,ml->mi", s, V, V, V)
    return quad + epsilon * (mixed + cubic)
