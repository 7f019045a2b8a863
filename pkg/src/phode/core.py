"""Single port-Hamiltonian ODE systems: representation, validation, dynamics.

A system is

    E xdot = (J - R) z(x) + (B - P) u,
    y      = (B + P)^T z(x) + (S - N) u,

with skew structure matrix J, positive semidefinite dissipation R and a
Hamiltonian H whose gradient is compatible with the effort via
grad H(x) = E^T z(x).  Two variants are provided: a linear-constant one
(dense matrices, effort z = L x, H = 1/2 x^T Q x with Q = E^T L) and a
callback one with state-dependent coefficient functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Matrix/vector fields do not conform (a structural defect, not a
    failed structure check)."""


class SingularFlowError(RuntimeError):
    """The flow matrix E is (numerically) singular; the system is a
    descriptor system and cannot be integrated as an ODE."""


#: reciprocal condition number below which E is treated as singular
E_RCOND_MIN = 1e-12


def _as_matrix(a, rows, cols, name):
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.shape != (rows, cols):
        raise DimensionError(f"{name} must be {rows}x{cols}, got {m.shape}")
    return m


def _rcond(mat: np.ndarray) -> float:
    """Reciprocal condition estimate (0 for rank-deficient matrices)."""
    if mat.size == 0:
        return 1.0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


@dataclass(frozen=True)
class LinearPHSystem:
    """Linear-constant port-Hamiltonian ODE system.

    Effort is z = L x and the Hamiltonian is H(x) = 1/2 x^T Q x with
    Q = E^T L (the 1/2 convention makes grad H = Q x exact).
    """

    E: np.ndarray
    J: np.ndarray
    R: np.ndarray
    B: np.ndarray
    L: np.ndarray
    P: np.ndarray = None
    S: np.ndarray = None
    N: np.ndarray = None

    def __post_init__(self):
        n = np.atleast_2d(np.asarray(self.J, dtype=float)).shape[0]
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, -1) if B.size else B.reshape(n, 0)
        m = B.shape[1]
        object.__setattr__(self, "E", _as_matrix(self.E, n, n, "E"))
        object.__setattr__(self, "J", _as_matrix(self.J, n, n, "J"))
        object.__setattr__(self, "R", _as_matrix(self.R, n, n, "R"))
        object.__setattr__(self, "B", _as_matrix(B, n, m, "B"))
        object.__setattr__(self, "L", _as_matrix(self.L, n, n, "L"))
        P = self.P if self.P is not None else np.zeros((n, m))
        S = self.S if self.S is not None else np.zeros((m, m))
        N = self.N if self.N is not None else np.zeros((m, m))
        object.__setattr__(self, "P", _as_matrix(P, n, m, "P"))
        object.__setattr__(self, "S", _as_matrix(S, m, m, "S"))
        object.__setattr__(self, "N", _as_matrix(N, m, m, "N"))
        for a in ("E", "J", "R", "B", "L", "P", "S", "N"):
            getattr(self, a).setflags(write=False)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def Q(self) -> np.ndarray:
        """Hamiltonian matrix Q = E^T L."""
        return self.E.T @ self.L

    @property
    def is_linear(self) -> bool:
        return True

    def effort(self, x) -> np.ndarray:
        return self.L @ np.asarray(x, dtype=float)

    def hamiltonian(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.Q @ x)

    def grad_hamiltonian(self, x) -> np.ndarray:
        return self.Q @ np.asarray(x, dtype=float)

    def coefficients(self, x=None):
        return self.E, self.J, self.R, self.B, self.P, self.S, self.N

    def e_rcond(self) -> float:
        return _rcond(self.E)


@dataclass(frozen=True)
class CallbackPHSystem:
    """Port-Hamiltonian system with state-dependent coefficient callbacks.

    Supports structural validation and monolithic integration; the
    coupling/decoupling algebra operates on :class:`LinearPHSystem` only.
    """

    n: int
    m: int
    E: Callable[[np.ndarray], np.ndarray]
    J: Callable[[np.ndarray], np.ndarray]
    R: Callable[[np.ndarray], np.ndarray]
    B: Callable[[np.ndarray], np.ndarray]
    effort: Callable[[np.ndarray], np.ndarray]
    hamiltonian: Callable[[np.ndarray], float]
    P: Callable[[np.ndarray], np.ndarray] = None
    S: Callable[[np.ndarray], np.ndarray] = None
    N: Callable[[np.ndarray], np.ndarray] = None

    @property
    def is_linear(self) -> bool:
        return False

    def coefficients(self, x):
        x = np.asarray(x, dtype=float)
        n, m = self.n, self.m
        E = _as_matrix(self.E(x), n, n, "E(x)")
        J = _as_matrix(self.J(x), n, n, "J(x)")
        R = _as_matrix(self.R(x), n, n, "R(x)")
        B = _as_matrix(self.B(x), n, m, "B(x)")
        P = _as_matrix(self.P(x), n, m, "P(x)") if self.P else np.zeros((n, m))
        S = _as_matrix(self.S(x), m, m, "S(x)") if self.S else np.zeros((m, m))
        N = _as_matrix(self.N(x), m, m, "N(x)") if self.N else np.zeros((m, m))
        return E, J, R, B, P, S, N

    def grad_hamiltonian(self, x) -> np.ndarray:
        return _fd_gradient(self.hamiltonian, np.asarray(x, dtype=float))


PHSystem = LinearPHSystem | CallbackPHSystem


def _fd_gradient(f, x: np.ndarray) -> np.ndarray:
    """Central finite-difference gradient, step h = cbrt(eps)*(1+|x|)."""
    h = np.cbrt(np.finfo(float).eps) * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


@dataclass(frozen=True)
class StructureReport:
    """Outcome of the structural checks on a single system."""

    skew_ok: bool
    skew_violation: float
    psd_ok: bool
    min_eigenvalue: float
    compat_ok: bool
    compat_residual: float
    e_regular: bool
    e_rcond: float

    @property
    def passed(self) -> bool:
        """True iff all three structural checks pass (E-regularity is
        informational: descriptor systems are structurally valid)."""
        return self.skew_ok and self.psd_ok and self.compat_ok

    def summary(self) -> str:
        rows = [
            ("Gamma skew-symmetric", self.skew_ok, f"max violation {self.skew_violation:.3e}"),
            ("W positive semidefinite", self.psd_ok, f"min eigenvalue {self.min_eigenvalue:.3e}"),
            ("gradient compatibility", self.compat_ok, f"max residual {self.compat_residual:.3e}"),
            ("E regular", self.e_regular, f"rcond {self.e_rcond:.3e}"),
        ]
        return "\n".join(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}" for name, ok, detail in rows)


def _gamma_w(E, J, R, B, P, S, N):
    gamma = np.block([[J, B], [-B.T, N]]) if B.shape[1] else J
    w = np.block([[R, P], [P.T, S]]) if B.shape[1] else R
    return gamma, w


def _skew_violation(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a + a.T)))


def _min_eig_sym(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (a + a.T)).min())


def validate_structure(sys: PHSystem, samples: Sequence[np.ndarray] | None = None,
                       tol: float = 1e-10) -> StructureReport:
    """Check skewness of Gamma, semidefiniteness of W and Hamiltonian
    compatibility; pure, deterministic and idempotent.

    For callback systems the checks are run at every sample state and the
    compatibility residual uses a central finite-difference gradient.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")

    if sys.is_linear:
        states = [np.zeros(sys.n)]
    else:
        if samples is None or len(samples) == 0:
            raise ValueError("callback systems require at least one sample state")
        states = [np.asarray(s, dtype=float) for s in samples]

    skew_viol = 0.0
    min_eig = np.inf
    w_scale = 0.0
    a_scale = 0.0
    for x in states:
        E, J, R, B, P, S, N = sys.coefficients(x)
        gamma, w = _gamma_w(E, J, R, B, P, S, N)
        skew_viol = max(skew_viol, _skew_violation(gamma))
        min_eig = min(min_eig, _min_eig_sym(w))
        w_scale = max(w_scale, np.linalg.norm(w) if w.size else 0.0)
        a_scale = max(a_scale, np.max(np.abs(gamma)) if gamma.size else 0.0)
    if not np.isfinite(min_eig):
        min_eig = 0.0

    skew_ok = skew_viol <= tol * (1.0 + a_scale)
    psd_ok = min_eig >= -tol * (1.0 + w_scale)

    if sys.is_linear:
        # exact identity Q x = E^T L x requires E^T L symmetric
        q = sys.Q
        compat_res = float(np.max(np.abs(q - q.T))) if q.size else 0.0
        compat_ok = compat_res <= tol * (1.0 + np.max(np.abs(q), initial=0.0))
        rc = sys.e_rcond()
    else:
        compat_res = 0.0
        rc = np.inf
        for x in states:
            E = sys.coefficients(x)[0]
            ez = E.T @ np.asarray(sys.effort(x), dtype=float)
            g = _fd_gradient(sys.hamiltonian, x)
            compat_res = max(compat_res,
                             float(np.linalg.norm(g - ez) / (1.0 + np.linalg.norm(ez))))
            rc = min(rc, _rcond(E))
        compat_ok = compat_res <= max(tol, 1e-6)

    return StructureReport(
        skew_ok=skew_ok, skew_violation=skew_viol,
        psd_ok=psd_ok, min_eigenvalue=min_eig,
        compat_ok=compat_ok, compat_residual=compat_res,
        e_regular=rc > E_RCOND_MIN, e_rcond=float(rc),
    )


def _check_input(sys, u):
    if u is None:
        return np.zeros(sys.m)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (sys.m,):
        raise DimensionError(f"input must have length {sys.m}, got {u.shape}")
    return u


def eval_dynamics(sys: PHSystem, x, u=None):
    """Evaluate (xdot, y) at state x and input u.

    Solves E xdot = (J - R) z(x) + (B - P) u and evaluates the output
    y = (B + P)^T z(x) + (S - N) u.  Requires a regular flow matrix.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (sys.n,):
        raise DimensionError(f"state must have length {sys.n}, got {x.shape}")
    u = _check_input(sys, u)
    E, J, R, B, P, S, N = sys.coefficients(x)
    if _rcond(E) <= E_RCOND_MIN:
        raise SingularFlowError("descriptor system: integrate unsupported (singular E)")
    z = np.asarray(sys.effort(x), dtype=float)
    rhs = (J - R) @ z + (B - P) @ u
    xdot = np.linalg.solve(E, rhs)
    y = (B + P).T @ z + (S - N) @ u
    return xdot, y


def power_balance_residual(sys: PHSystem, x, u=None) -> float:
    """Pointwise defect of the dissipation identity

        dH/dt = -[z; u]^T W [z; u] + u^T y,

    evaluated along the vector field; zero in exact arithmetic for every
    valid port-Hamiltonian system.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = _check_input(sys, u)
    xdot, y = eval_dynamics(sys, x, u)
    E, J, R, B, P, S, N = sys.coefficients(x)
    z = np.asarray(sys.effort(x), dtype=float)
    w = _gamma_w(E, J, R, B, P, S, N)[1]
    zu = np.concatenate([z, u])
    supplied = float(u @ y) if u.size else 0.0
    rhs = -float(zu @ w @ zu) + supplied
    lhs = float(sys.grad_hamiltonian(x) @ xdot)
    return abs(lhs - rhs)
