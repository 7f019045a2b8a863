"""Decomposition of a monolithic pH system into coupled subsystems.

After an invertible linear change of state that makes the Hamiltonian
separable, the structure and dissipation matrices are split into diagonal
and off-diagonal parts.  Three cases arise: vanishing off-diagonal
dissipation gives a skew coupling (case 1), otherwise a general linear
port relation (case 2), and user-chosen port matrices are verified
block-by-block against J_ij - R_ij = -Bhat_i C_ij Bhat_j^T (case 3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DimensionError, LinearPHSystem, _rcond
from .coupling import CoupledNetwork, CouplingSpec, LinearPortRelation, _blockdiag


@dataclass(frozen=True)
class Partition:
    """Contiguous split of the state vector into blocks of given sizes."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("all partition sizes must be >= 1")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def s(self) -> int:
        return len(self.sizes)

    @property
    def ranges(self) -> tuple:
        out, k = [], 0
        for ni in self.sizes:
            out.append(slice(k, k + ni))
            k += ni
        return tuple(out)


@dataclass(frozen=True)
class LinearTransform:
    """Invertible linear change of state w = T x."""

    T: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.T, dtype=float))
        if t.shape[0] != t.shape[1]:
            raise DimensionError("transform matrix must be square")
        if _rcond(t) <= 1e-12:
            raise ValueError("transform matrix is singular or too ill-conditioned")
        object.__setattr__(self, "T", t)

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.T)


@dataclass(frozen=True)
class BlockView:
    """Diagonal/off-diagonal split of a system's matrices w.r.t. a partition."""

    partition: Partition
    J_diag: tuple
    R_diag: tuple
    E_diag: tuple
    B_rows: tuple
    L_diag: tuple
    J_offdiag: np.ndarray
    R_offdiag: np.ndarray
    q_separable: bool
    e_blockdiag: bool

    def J_block(self, i: int, j: int) -> np.ndarray:
        r = self.partition.ranges
        if i == j:
            return self.J_diag[i]
        return self.J_offdiag[r[i], r[j]]

    def R_block(self, i: int, j: int) -> np.ndarray:
        r = self.partition.ranges
        if i == j:
            return self.R_diag[i]
        return self.R_offdiag[r[i], r[j]]

    @property
    def r_offdiag_zero(self) -> bool:
        return not np.any(self.R_offdiag)


@dataclass(frozen=True)
class VerificationFailure:
    """A port/coupling choice that does not reproduce the off-diagonal
    blocks; carries the worst residual and the offending block pair."""

    message: str
    residual: np.ndarray
    max_residual: float
    pair: tuple

    def __bool__(self):
        return False


def apply_transform(sys: LinearPHSystem, transform: LinearTransform | np.ndarray) -> LinearPHSystem:
    """Pull a linear-constant system through the change of state w = T x.

    E, J - R and B transform by congruence with T^{-1}; the effort map
    becomes z(w) = T L T^{-1} w, so the transformed Hamiltonian matrix is
    T^{-T} Q T^{-1} and energies match: H(x) = H_tilde(T x).
    """
    if not isinstance(transform, LinearTransform):
        transform = LinearTransform(np.asarray(transform))
    if not sys.is_linear:
        raise TypeError("state transformations are executed on linear-constant systems only")
    ti = transform.inverse
    a = ti.T @ (sys.J - sys.R) @ ti
    j_new = 0.5 * (a - a.T)
    r_new = -0.5 * (a + a.T)
    return LinearPHSystem(
        E=ti.T @ sys.E @ ti,
        J=j_new,
        R=r_new,
        B=ti.T @ sys.B,
        L=transform.T @ sys.L @ ti,
        P=ti.T @ sys.P,
        S=sys.S,
        N=sys.N,
    )


def partition_blocks(sys: LinearPHSystem, partition: Partition | Sequence[int]) -> BlockView:
    """Slice the system matrices into diagonal blocks and off-diagonal
    aggregates; reassembly diag + offdiag is exact.

    Also reports whether the Hamiltonian matrix Q and the flow matrix E
    are block-diagonal w.r.t. the partition (separability conditions).
    """
    if not isinstance(partition, Partition):
        partition = Partition(tuple(partition))
    if partition.n != sys.n:
        raise DimensionError(f"partition sums to {partition.n}, state dimension is {sys.n}")
    r = partition.ranges

    def diag_of(mat):
        return tuple(mat[ri, ri].copy() for ri in r)

    def offdiag_of(mat):
        out = mat.copy()
        for ri in r:
            out[ri, ri] = 0.0
        return out

    q = sys.Q
    q_off = offdiag_of(q)
    e_off = offdiag_of(sys.E)
    return BlockView(
        partition=partition,
        J_diag=diag_of(sys.J),
        R_diag=diag_of(sys.R),
        E_diag=diag_of(sys.E),
        B_rows=tuple(sys.B[ri, :].copy() for ri in r),
        L_diag=diag_of(sys.L),
        J_offdiag=offdiag_of(sys.J),
        R_offdiag=offdiag_of(sys.R),
        q_separable=not np.any(q_off),
        e_blockdiag=not np.any(e_off),
    )


def _require_separable(sys: LinearPHSystem, view: BlockView):
    if not view.q_separable:
        raise ValueError("Hamiltonian not separable: Q has nonzero off-diagonal blocks")
    if not view.e_blockdiag:
        raise ValueError("flow matrix not block-diagonal w.r.t. the partition")
    # with E block-diagonal and regular blocks, L = E^{-T} Q inherits the
    # block structure; guard against descriptor corner cases anyway
    r = view.partition.ranges
    l_off = sys.L.copy()
    for ri in r:
        l_off[ri, ri] = 0.0
    if np.max(np.abs(l_off), initial=0.0) > 1e-12 * (1.0 + np.max(np.abs(sys.L))):
        raise ValueError("effort matrix not block-diagonal w.r.t. the partition")


def _subsystems_from_view(view: BlockView):
    return tuple(
        LinearPHSystem(E=view.E_diag[i], J=view.J_diag[i], R=view.R_diag[i],
                       B=view.B_rows[i], L=view.L_diag[i])
        for i in range(view.partition.s)
    )


def decouple_auto(sys: LinearPHSystem, partition: Partition | Sequence[int]) -> CoupledNetwork:
    """Split a separable monolithic system with identity port matrices.

    Case 1 (no off-diagonal dissipation): skew coupling C = -J_offdiag.
    Case 2 (otherwise): general relation M = I, N = -J_offdiag + R_offdiag.
    Recoupling reproduces the original system exactly.
    """
    view = partition_blocks(sys, partition)
    _require_separable(sys, view)
    subs = _subsystems_from_view(view)
    ports = tuple(np.eye(ni) for ni in view.partition.sizes)
    if view.r_offdiag_zero:
        coupling = CouplingSpec(port_matrices=ports, C=-view.J_offdiag)
    else:
        coupling = LinearPortRelation(port_matrices=ports,
                                      M=np.eye(sys.n),
                                      N=-view.J_offdiag + view.R_offdiag)
    return CoupledNetwork(subsystems=subs, coupling=coupling)


def decouple_with_ports(sys: LinearPHSystem, partition: Partition | Sequence[int],
                        ports: Sequence[np.ndarray], blocks: dict):
    """Split with user-chosen port matrices Bhat_i and coupling blocks
    C_ij (i < j), verifying J_ij - R_ij = -Bhat_i C_ij Bhat_j^T.

    On success returns the coupled network; on failure returns a
    :class:`VerificationFailure` with the worst residual and offending
    block pair.  The skew part of the assembled coupling matrix generates
    structure blocks and the symmetric part dissipation blocks.
    """
    view = partition_blocks(sys, partition)
    _require_separable(sys, view)
    p = view.partition
    ports = [np.atleast_2d(np.asarray(b, dtype=float)) for b in ports]
    if len(ports) != p.s:
        raise DimensionError("one port matrix per partition block required")
    for i, b in enumerate(ports):
        if b.shape[0] != p.sizes[i]:
            raise DimensionError(
                f"port matrix {i} has {b.shape[0]} rows, block size is {p.sizes[i]}")

    cblocks = {}
    for (i, j), cij in blocks.items():
        if not (0 <= i < j < p.s):
            raise DimensionError(f"block pair {(i, j)} must satisfy 0 <= i < j < s")
        cij = np.atleast_2d(np.asarray(cij, dtype=float))
        if cij.shape != (ports[i].shape[1], ports[j].shape[1]):
            raise DimensionError(f"coupling block {(i, j)} has shape {cij.shape}, "
                                 f"expected {(ports[i].shape[1], ports[j].shape[1])}")
        cblocks[(i, j)] = cij

    worst = 0.0
    worst_pair = None
    worst_res = None
    for i in range(p.s):
        for j in range(i + 1, p.s):
            target = view.J_block(i, j) - view.R_block(i, j)
            cij = cblocks.get((i, j), np.zeros((ports[i].shape[1], ports[j].shape[1])))
            # residual = computed product minus the required -(J_ij - R_ij)
            res = ports[i] @ cij @ ports[j].T + target
            mr = float(np.max(np.abs(res), initial=0.0))
            scale = np.max(np.abs(target), initial=0.0) + 1.0
            if mr > 1e-12 * scale and mr > worst:
                worst, worst_pair, worst_res = mr, (i, j), res
    if worst_pair is not None:
        return VerificationFailure(
            message=f"ports do not reproduce off-diagonal block {worst_pair}",
            residual=worst_res, max_residual=worst, pair=worst_pair,
        )

    # assemble the full coupling matrix; with zero off-diagonal dissipation
    # the skew completion C_ji = -C_ij^T is exact, otherwise the lower
    # blocks are recovered from the (j, i) system blocks by least squares
    layout = [b.shape[1] for b in ports]
    offs = np.cumsum([0] + layout)
    mt = offs[-1]
    c_full = np.zeros((mt, mt))
    skew = view.r_offdiag_zero
    for (i, j), cij in cblocks.items():
        c_full[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = cij
        if skew:
            cji = -cij.T
        else:
            target = view.J_block(j, i) - view.R_block(j, i)
            cji = -np.linalg.pinv(ports[j]) @ target @ np.linalg.pinv(ports[i]).T
        c_full[offs[j]:offs[j + 1], offs[i]:offs[i + 1]] = cji
    subs = _subsystems_from_view(view)
    if skew:
        coupling = CouplingSpec(port_matrices=tuple(ports), C=c_full)
    else:
        coupling = LinearPortRelation(port_matrices=tuple(ports),
                                      M=np.eye(mt), N=c_full)
    return CoupledNetwork(subsystems=subs, coupling=coupling)
