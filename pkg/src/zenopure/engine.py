"""Repeated-confirmation dynamics on a bipartite system.

A probe A coupled to a system B evolves under exp(-iHt); confirming the
probe in its initial state |phi> at interval tau compresses the dynamics of
B into the projected propagator V[i,j] = <phi| exp(-iH tau) |phi>[i,j], a
contraction on B alone. Iterating the confirmation drives B toward the
dominant right-eigenvector of V while the cumulative success probability
(the yield) decays like |lambda0|^(2N). This module builds V, runs the
conditional trajectory, and certifies the two efficiency conditions
(|lambda0| close to 1, small magnitude gap ratio |lambda1/lambda0|).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_eigendecompose, top_k_eigenpairs

__all__ = [
    "ExtinctBranch",
    "BipartiteSystem",
    "ProbeState",
    "ProjectedPropagator",
    "DensityMatrix",
    "TrajectoryStep",
    "PurificationTrajectory",
    "ConditionsReport",
    "ZenoScanPoint",
    "build_projected_propagator",
    "evolve_step",
    "survival_probability",
    "run_purification",
    "fidelity",
    "trace_distance",
    "spectral_report",
    "zeno_limit_scan",
]

#: Conditional probabilities below this are treated as a dead measurement
#: branch: the confirmation outcome essentially never occurs.
EXTINCT_THRESHOLD = 1e-14


class ExtinctBranch(RuntimeError):
    """The confirmation success probability fell below threshold."""

    def __init__(self, probability: float):
        super().__init__(
            f"success branch extinct: conditional probability {probability:.3e}"
        )
        self.probability = float(probability)


@dataclass(frozen=True)
class BipartiteSystem:
    """Dimensions of the two factors plus the joint Hamiltonian.

    The composite basis index is a_index * dim_b + b_index (A-major), and the
    Hamiltonian is stored pre-summed; no split into free and interaction
    parts is needed by any algorithm here.
    """

    dim_a: int
    dim_b: int
    hamiltonian: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        d = self.dim_a * self.dim_b
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("dimensions must be positive")
        if h.shape != (d, d):
            raise ValueError(f"hamiltonian must be {d}x{d}, got {h.shape}")
        if not np.isfinite(h).all():
            raise ValueError("hamiltonian contains non-finite entries")
        dev = np.linalg.norm(h - h.conj().T)
        if dev > 1e-9 * max(np.linalg.norm(h), 1e-300):
            raise ValueError(f"hamiltonian is not Hermitian (deviation {dev:.3e})")
        object.__setattr__(self, "hamiltonian", h)


@dataclass(frozen=True)
class ProbeState:
    """Pure state of the probe factor A, unit-normalized."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not np.isfinite(v).all():
            raise ValueError("probe amplitudes contain non-finite entries")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"probe state norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class ProjectedPropagator:
    """The contraction <phi| exp(-iH tau) |phi> acting on system B."""

    matrix: np.ndarray
    tau: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"propagator must be square, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("propagator contains non-finite entries")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        smax = np.linalg.norm(m, ord=2)
        if smax > 1 + 1e-9:
            raise ValueError(
                f"largest singular value {smax!r} exceeds 1: not a contraction"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state of system B."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"state must be square, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("state contains non-finite entries")
        if np.linalg.norm(m - m.conj().T) > 1e-10:
            raise ValueError("state is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"state trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if lo < -1e-9:
            raise ValueError(f"state has negative eigenvalue {lo!r}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TrajectoryStep:
    """One record of the conditional evolution.

    n = 0 is the initial state (conditional probability 1 by convention);
    fidelity is None when no target state was available.
    """

    n: int
    conditional_probability: float
    cumulative_yield: float
    fidelity: float | None
    purity: float
    state: DensityMatrix


@dataclass(frozen=True)
class PurificationTrajectory:
    """Sequence of TrajectoryStep records, n = 0 .. n_max.

    ``truncated`` marks an early stop on an extinct branch.
    """

    steps: tuple[TrajectoryStep, ...]
    truncated: bool


@dataclass(frozen=True)
class ConditionsReport:
    """Spectral certificate for efficient purification.

    condition I: |lambda0| within epsilon of 1, so the yield does not decay.
    condition II: small |lambda1/lambda0|, so convergence is fast. When the
    top-two magnitude structure cannot be certified (no gap), ``degenerate``
    is set, the optional fields are None and both condition flags are off;
    degeneracy is data, not an error.
    """

    lambda0: complex | None
    lambda1: complex | None
    gap_ratio: float | None
    yield_plateau_coefficient: float | None
    condition_i_met: bool
    condition_ii_ratio: float | None
    degenerate: bool
    u0: np.ndarray | None
    v0: np.ndarray | None


@dataclass(frozen=True)
class ZenoScanPoint:
    """One point of the measurement-splitting scan at fixed total time."""

    n: int
    tau: float
    yield_probability: float
    unitarity_defect: float


def build_projected_propagator(sys: BipartiteSystem, phi: ProbeState,
                               tau: float) -> ProjectedPropagator:
    """Contract exp(-iH tau) with the probe state on both sides.

    result[i, j] = sum_{k,l} conj(phi_k) U[k*d_b + i, l*d_b + j] phi_l.
    """
    if phi.dim != sys.dim_a:
        raise ValueError(
            f"probe dimension {phi.dim} does not match dim_a {sys.dim_a}"
        )
    eig = hermitian_eigendecompose(sys.hamiltonian)
    q = eig.eigenvectors
    u = (q * np.exp(-1j * eig.eigenvalues * float(tau))) @ q.conj().T
    v = _project(u, phi.amplitudes, sys.dim_a, sys.dim_b)
    return ProjectedPropagator(matrix=v, tau=float(tau))


def _project(u: np.ndarray, phi: np.ndarray, dim_a: int, dim_b: int) -> np.ndarray:
    blocks = u.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.einsum("k,kilj,l->ij", phi.conj(), blocks, phi)


def evolve_step(rho: DensityMatrix, v: ProjectedPropagator,
                threshold: float = EXTINCT_THRESHOLD) -> tuple[DensityMatrix, float]:
    """One confirmed measurement: rho -> V rho V† / p with p = tr(V rho V†).

    Returns the renormalized post-measurement state and the conditional
    success probability p. Raises ExtinctBranch when p falls below
    ``threshold``, meaning the confirmation outcome never occurs and the
    conditional state is undefined.
    """
    if rho.dim != v.dim:
        raise ValueError(f"state dim {rho.dim} does not match propagator dim {v.dim}")
    m = v.matrix
    out = m @ rho.matrix @ m.conj().T
    p = float(np.trace(out).real)
    if p < threshold:
        raise ExtinctBranch(p)
    p = min(p, 1.0)
    out = (out + out.conj().T) / (2 * p)
    return DensityMatrix(out), p


def survival_probability(rho: DensityMatrix, v: ProjectedPropagator, n: int) -> float:
    """Probability that n consecutive confirmations all succeed.

    Equals tr(V^n rho V†^n); n = 0 gives 1.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if rho.dim != v.dim:
        raise ValueError(f"state dim {rho.dim} does not match propagator dim {v.dim}")
    w = np.linalg.matrix_power(v.matrix, n)
    p = float(np.trace(w @ rho.matrix @ w.conj().T).real)
    return min(max(p, 0.0), 1.0)


def fidelity(rho: DensityMatrix, pure: np.ndarray) -> float:
    """Overlap <pure| rho |pure> with a unit-norm pure state."""
    vec = np.asarray(pure, dtype=complex).reshape(-1)
    if vec.shape[0] != rho.dim:
        raise ValueError(f"vector dim {vec.shape[0]} does not match state dim {rho.dim}")
    if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
        raise ValueError("target state must be unit-norm")
    val = float(np.vdot(vec, rho.matrix @ vec).real)
    return min(max(val, 0.0), 1.0)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the sum of absolute eigenvalues of (rho - sigma)."""
    diff = rho.matrix - sigma.matrix
    diff = (diff + diff.conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def run_purification(rho0: DensityMatrix, v: ProjectedPropagator, n_max: int,
                     target: np.ndarray | None = None,
                     seed: int = 0) -> PurificationTrajectory:
    """Iterate confirmed measurements for n_max steps from rho0.

    Records, for every n in 0..n_max, the conditional success probability,
    the cumulative yield (their running product), the fidelity to ``target``
    and the purity. When no target is supplied the dominant right-eigenvector
    of V is used; if that eigenvector is unavailable (degenerate magnitudes)
    fidelity is recorded as None. Stops early with ``truncated`` set when the
    branch goes extinct.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if target is not None:
        target = np.asarray(target, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(target) - 1.0) > 1e-10:
            raise ValueError("target state must be unit-norm")
    else:
        found = top_k_eigenpairs(v.matrix, 1, seed=seed)
        if found.pairs:
            target = found.pairs[0].right
    steps = [_record(0, 1.0, 1.0, rho0, target)]
    state = rho0
    cumulative = 1.0
    truncated = False
    for n in range(1, n_max + 1):
        try:
            state, p = evolve_step(state, v)
        except ExtinctBranch:
            truncated = True
            break
        cumulative *= p
        steps.append(_record(n, p, cumulative, state, target))
    return PurificationTrajectory(steps=tuple(steps), truncated=truncated)


def _record(n: int, p: float, cumulative: float, state: DensityMatrix,
            target: np.ndarray | None) -> TrajectoryStep:
    fid = None if target is None else fidelity(state, target)
    purity = float(np.trace(state.matrix @ state.matrix).real)
    return TrajectoryStep(
        n=n,
        conditional_probability=p,
        cumulative_yield=cumulative,
        fidelity=fid,
        purity=min(max(purity, 0.0), 1.0),
        state=state,
    )


def spectral_report(v: ProjectedPropagator, rho0: DensityMatrix,
                    epsilon: float = 1e-6, seed: int = 0) -> ConditionsReport:
    """Certify the purification conditions from the top two eigenvalues.

    yield_plateau_coefficient is <v0| rho0 |v0> in the gauge ||u0|| = 1,
    <v0|u0> = 1: the asymptotic value of yield / |lambda0|^(2N).
    """
    found = top_k_eigenpairs(v.matrix, min(2, v.dim), seed=seed)
    pairs = found.pairs
    degenerate = len(pairs) < min(2, v.dim)
    lambda0 = pairs[0].value if len(pairs) >= 1 else None
    lambda1 = pairs[1].value if len(pairs) >= 2 else None
    u0 = pairs[0].right if pairs else None
    v0 = pairs[0].left if pairs else None
    plateau = None
    if pairs:
        plateau = float(np.vdot(v0, rho0.matrix @ v0).real)
    gap = None
    if lambda0 is not None and lambda1 is not None and abs(lambda0) > 0:
        gap = abs(lambda1) / abs(lambda0)
    return ConditionsReport(
        lambda0=lambda0,
        lambda1=lambda1,
        gap_ratio=gap,
        yield_plateau_coefficient=plateau,
        condition_i_met=(not degenerate and lambda0 is not None
                         and abs(abs(lambda0) - 1.0) <= epsilon),
        condition_ii_ratio=gap,
        degenerate=degenerate,
        u0=u0,
        v0=v0,
    )


def zeno_limit_scan(sys: BipartiteSystem, phi: ProbeState, rho0: DensityMatrix,
                    total_time: float, n_values, jobs: int = 1) -> list[ZenoScanPoint]:
    """Split a fixed total time into n confirmations and scan n.

    For each n the propagator V(total_time / n) is built once, W = V^n is
    formed, and the scan records the n-step yield tr(W rho0 W†) together
    with the unitarity defect ||W†W - 1||_F. As n grows the repeated
    projection freezes the leakage out of the probe state and W approaches
    a unitary on B (the frequent-measurement limit).

    Points are independent; ``jobs`` > 1 evaluates them in a thread pool.
    Results are returned in input order regardless of scheduling.
    """
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    n_list = [int(n) for n in n_values]
    if not n_list or any(n < 1 for n in n_list):
        raise ValueError("n_values must be a nonempty sequence of integers >= 1")
    if phi.dim != sys.dim_a:
        raise ValueError(
            f"probe dimension {phi.dim} does not match dim_a {sys.dim_a}"
        )
    if rho0.dim != sys.dim_b:
        raise ValueError(
            f"state dimension {rho0.dim} does not match dim_b {sys.dim_b}"
        )
    eig = hermitian_eigendecompose(sys.hamiltonian)
    q = eig.eigenvectors
    qh = q.conj().T
    eye = np.eye(sys.dim_b)

    def point(n: int) -> ZenoScanPoint:
        tau = total_time / n
        u = (q * np.exp(-1j * eig.eigenvalues * tau)) @ qh
        v = ProjectedPropagator(
            matrix=_project(u, phi.amplitudes, sys.dim_a, sys.dim_b), tau=tau
        )
        w = np.linalg.matrix_power(v.matrix, n)
        prob = float(np.trace(w @ rho0.matrix @ w.conj().T).real)
        defect = float(np.linalg.norm(w.conj().T @ w - eye))
        return ZenoScanPoint(
            n=n,
            tau=tau,
            yield_probability=min(max(prob, 0.0), 1.0),
            unitarity_defect=defect,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(point, n_list))
    return [point(n) for n in n_list]
