"""Pointwise maps for the regularized p-Dirichlet integrand.

Everything here is a closed-form function of a vector w (and parameters),
vectorized over leading axes: w has shape (..., n) and scalar outputs have
shape (...).  The building block is

    l_eps(w)    = (eps^2 + |w|^2)^(1/2)
    L_eps(w)    = l_eps(w)^p / p
    alpha_s(w)  = l_eps(w)^(s-1) w
    beta(w)     = |w|^(theta-1) w      (inverse of alpha at eps = 0, s = 1/theta)

plus the coercivity constant and integrand lower bound used by the a priori
second-derivative estimate, exposed as checkable value pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PLapParams",
    "l_eps",
    "L_eps",
    "grad_L_eps",
    "hess_L_eps",
    "alpha_s",
    "beta_theta",
    "monotonicity_gap",
    "coercivity_constant",
    "integrand_lower_bound_check",
]


def _norm(w: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.square(w), axis=-1))


def l_eps(w, eps) -> np.ndarray:
    """(eps^2 + |w|^2)^(1/2); satisfies max(eps, |w|) <= l_eps <= eps + |w|."""
    w = np.asarray(w, dtype=float)
    return np.sqrt(np.square(eps) + np.sum(np.square(w), axis=-1))


def L_eps(w, eps, p) -> np.ndarray:
    """l_eps(w)^p / p."""
    return l_eps(w, eps) ** p / p


def grad_L_eps(w, eps, p) -> np.ndarray:
    """Gradient l_eps(w)^(p-2) w, shape (..., n)."""
    w = np.asarray(w, dtype=float)
    return (l_eps(w, eps) ** (np.asarray(p, dtype=float) - 2.0))[..., None] * w


def hess_L_eps(w, eps, p) -> np.ndarray:
    """Hessian l^(p-2) I + (p-2) l^(p-4) w w^T, shape (..., n, n).

    Symmetric positive definite for eps > 0.  The point eps = 0, w = 0 is
    singular when p < 4 (the rank-one factor carries l^(p-4)); that case is
    rejected rather than patched.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[-1]
    l = l_eps(w, eps)
    p_arr = np.asarray(p, dtype=float)
    if np.any((l == 0.0) & (p_arr < 4.0)):
        raise ValueError("hess_L_eps is singular at w = 0 with eps = 0 and p < 4")
    lsafe = np.where(l > 0.0, l, 1.0)
    diag = l ** (p_arr - 2.0)
    rank1 = np.where(l > 0.0, (p_arr - 2.0) * lsafe ** (p_arr - 4.0), 0.0)
    eye = np.eye(n)
    return (
        diag[..., None, None] * eye
        + rank1[..., None, None] * w[..., :, None] * w[..., None, :]
    )


def alpha_s(w, eps, s) -> np.ndarray:
    """Nonlinear gradient transform l_eps(w)^(s-1) w.

    At eps = 0 this is |w|^(s-1) w, extended continuously by 0 at w = 0
    (valid for s > 0), and s-homogeneous: alpha(c w) = c^s alpha(w), c > 0.
    """
    w = np.asarray(w, dtype=float)
    l = l_eps(w, eps)
    lsafe = np.where(l > 0.0, l, 1.0)
    factor = np.where(l > 0.0, lsafe ** (np.asarray(s, dtype=float) - 1.0), 0.0)
    return factor[..., None] * w


def beta_theta(w, theta) -> np.ndarray:
    """|w|^(theta-1) w with 0 mapped to 0.

    Inverse of alpha_s(., 0, 1/theta); theta-Hoelder continuous with
    constant 2 for 0 < theta <= 1.
    """
    w = np.asarray(w, dtype=float)
    return alpha_s(w, 0.0, theta)


def monotonicity_gap(w, v, s) -> np.ndarray:
    """<|w|^(s-1)w - |v|^(s-1)v, w - v> minus (1/2)(|w|^(s-1)+|v|^(s-1))|w-v|^2.

    Nonnegative for s >= 1 up to rounding.
    """
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    d = w - v
    lhs = np.sum((alpha_s(w, 0.0, s) - alpha_s(v, 0.0, s)) * d, axis=-1)
    sm1 = np.asarray(s, dtype=float) - 1.0
    rhs = 0.5 * (_norm(w) ** sm1 + _norm(v) ** sm1) * np.sum(d * d, axis=-1)
    return lhs - rhs


def coercivity_constant(p, q_proof) -> float:
    """min(1, (p-1)(3-q)) for p >= 2 and 2 <= q < 3; strictly positive.

    Equals 1 + (p-q) - (p-2)(q-2) capped at 1, which is why q >= 3 (where
    positivity fails) is rejected.
    """
    p = float(p)
    q = float(q_proof)
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if not 2.0 <= q < 3.0:
        raise ValueError(f"q must lie in [2, 3), got {q}")
    return min(1.0, (p - 1.0) * (3.0 - q))


def integrand_lower_bound_check(H, w, eps, p, q_proof):
    """Value pair (lhs, rhs) for the pointwise second-derivative bound.

    With what = w / l_eps(w),

        lhs = l^(p-q) (|H|_F^2 + (p-q)|H what|^2 - (p-2)(q-2) <H what, what>^2)
        rhs = min(1, (p-1)(3-q)) l^(p-q) |H|_F^2

    and lhs >= rhs holds for symmetric H, p >= 2, 2 <= q < 3.  H has shape
    (..., n, n) and w shape (..., n); eps must be positive so the direction
    what is defined everywhere.
    """
    H = np.asarray(H, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(np.asarray(eps, dtype=float) <= 0.0):
        raise ValueError("eps must be > 0")
    if not np.allclose(H, np.swapaxes(H, -1, -2), rtol=0, atol=1e-12):
        raise ValueError("H must be symmetric")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q_proof, dtype=float)
    if np.any(p < 2) or np.any(q < 2) or np.any(q >= 3):
        raise ValueError("need p >= 2 and q in [2, 3)")
    l = l_eps(w, eps)
    what = w / l[..., None]
    Hw = np.einsum("...ij,...j->...i", H, what)
    frob2 = np.sum(np.square(H), axis=(-2, -1))
    lpq = l ** (p - q)
    lhs = lpq * (
        frob2
        + (p - q) * np.sum(np.square(Hw), axis=-1)
        - (p - 2.0) * (q - 2.0) * np.square(np.sum(Hw * what, axis=-1))
    )
    rhs = np.minimum(1.0, (p - 1.0) * (3.0 - q)) * lpq * frob2
    return lhs, rhs


@dataclass(frozen=True)
class PLapParams:
    """Exponent bundle (p, eps, s, theta, q_nik) with the derived exponents.

    q_proof = p - 2s + 2 and p_prime = p / (p - 1) are derived.  Two
    parameter regimes are distinguished for validation:

      * "thm2":  p >= 3 and (p-1)/2 < s <= p/2, so q_proof lies in [2, 3)
      * "thm3":  2 <= p < 3 and 1 <= s <= p/2

    Construction checks only the basic ranges; call :meth:`require_mode`
    to enforce a regime, or read :attr:`mode` for the auto-classified one.
    """

    p: float
    eps: float = 0.0
    s: float = 1.0
    theta: float = 0.5
    q_nik: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "q_nik", float(self.q_nik))
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.q_nik < 1:
            raise ValueError(f"q_nik must be >= 1, got {self.q_nik}")

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def q_proof(self) -> float:
        return self.p - 2.0 * self.s + 2.0

    @property
    def theta_range(self) -> tuple[float, float]:
        """Admissible half-open theta interval [2/p, 2/(p-1))."""
        return (2.0 / self.p, 2.0 / (self.p - 1.0))

    @property
    def mode(self) -> str:
        """"thm2", "thm3", or "outside" depending on (p, s)."""
        if self.p >= 3.0 and (self.p - 1.0) / 2.0 < self.s <= self.p / 2.0:
            return "thm2"
        if 2.0 <= self.p < 3.0 and 1.0 <= self.s <= self.p / 2.0:
            return "thm3"
        return "outside"

    def require_mode(self, mode: str) -> "PLapParams":
        """Raise unless (p, s) sits in the requested regime; returns self."""
        if mode == "thm2":
            if self.p < 3.0:
                raise ValueError(f"thm2 mode requires p >= 3, got p = {self.p}")
            if not (self.p - 1.0) / 2.0 < self.s <= self.p / 2.0:
                raise ValueError(
                    f"thm2 mode requires (p-1)/2 < s <= p/2, got s = {self.s}"
                )
        elif mode == "thm3":
            if not 2.0 <= self.p < 3.0:
                raise ValueError(f"thm3 mode requires 2 <= p < 3, got p = {self.p}")
            if not 1.0 <= self.s <= self.p / 2.0:
                raise ValueError(f"thm3 mode requires 1 <= s <= p/2, got s = {self.s}")
        elif mode != "auto":
            raise ValueError(f"unknown mode {mode!r}")
        return self

    def validate_theta(self) -> "PLapParams":
        lo, hi = self.theta_range
        if not lo <= self.theta < hi:
            raise ValueError(
                f"theta = {self.theta} outside [2/p, 2/(p-1)) = [{lo}, {hi})"
            )
        return self
