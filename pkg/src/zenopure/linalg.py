"""Dense complex linear algebra for contraction spectra.

Tensor products, Hermitian eigendecomposition, unitary exponentials, and
dominant-eigenpair extraction for the non-Hermitian contractions that
repeated-measurement propagators produce. Everything is dense complex128;
desk-scale dimensions are assumed throughout.

The eigenpair routines deliberately use power iteration with a Rayleigh
quotient and rank-1 deflation rather than a full QR spectrum: only the top
few eigenvalues are ever needed, starts are seed-deterministic, and a
magnitude tie is reported as a refusal (NoConvergence) instead of an
arbitrary pick, because downstream purification logic must know when the
dominant eigenvalue is not unique.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NotHermitian",
    "NoConvergence",
    "DimensionLimitExceeded",
    "HermitianEigenDecomposition",
    "EigenPair",
    "TopKResult",
    "tensor_product",
    "adjoint",
    "hermitian_eigendecompose",
    "unitary_exponential",
    "dominant_eigenpair",
    "deflate",
    "top_k_eigenpairs",
]

#: Largest matrix dimension tensor_product will produce. Anything bigger is
#: outside the desk-scale regime this package is written for.
MAX_TENSOR_DIM = 4096

#: Defaults for the iterative eigensolvers.
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

_UNDERFLOW = 1e-300


class NotHermitian(ValueError):
    """Input matrix fails the Hermitian symmetry check."""


class NoConvergence(RuntimeError):
    """Iteration cap reached, or no usable magnitude gap exists.

    For power iteration this is a diagnosis, not necessarily a bug: equal
    dominant-eigenvalue magnitudes (unitary input, defective blocks) make
    the dominant pair ill-defined and the solver refuses rather than pick.
    The best residual seen is attached as ``residual``.
    """

    def __init__(self, message: str, residual: float = np.inf):
        super().__init__(message)
        self.residual = float(residual)


class DimensionLimitExceeded(ValueError):
    """Requested operation would exceed the configured size ceiling."""


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _as_square(m, name: str = "matrix") -> np.ndarray:
    a = _as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class HermitianEigenDecomposition:
    """Spectral factorization M = Q diag(E) Q† of a Hermitian matrix.

    eigenvalues are real and ascending; eigenvectors holds the corresponding
    orthonormal columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue with its right and left eigenvectors.

    Gauge: ``right`` has unit Euclidean norm and ``left`` is scaled so that
    <left|right> = 1. ``residual`` is the achieved ||M right - value right||.
    """

    value: complex
    right: np.ndarray
    left: np.ndarray
    residual: float


@dataclass(frozen=True)
class TopKResult:
    """Eigenpairs sorted by descending magnitude.

    ``truncated`` is set when extraction stopped early because some stage hit
    a magnitude tie or the iteration cap; ``pairs`` then holds fewer entries
    than requested.
    """

    pairs: tuple[EigenPair, ...]
    truncated: bool


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with the left factor major in the composite index.

    Entry ((i*rb + k), (j*cb + l)) equals a[i, j] * b[k, l], so basis order
    is (left index, right index) throughout the package.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[0] * b.shape[0] > MAX_TENSOR_DIM or a.shape[1] * b.shape[1] > MAX_TENSOR_DIM:
        raise DimensionLimitExceeded(
            f"tensor product of shapes {a.shape} x {b.shape} exceeds {MAX_TENSOR_DIM}"
        )
    return np.kron(a, b)


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return _as_matrix(m).conj().T.copy()


def hermitian_eigendecompose(m, tol: float = 1e-9) -> HermitianEigenDecomposition:
    """Eigendecompose a Hermitian matrix into ascending eigenvalues.

    Parameters
    ----------
    m : array_like, square
    tol : relative Frobenius tolerance for the symmetry check
        ||m - m†||_F <= tol * ||m||_F; anything beyond truncation-arithmetic
        noise should be rejected, hence the tight default.

    Raises
    ------
    NotHermitian
        if the symmetry check fails.
    NoConvergence
        if the underlying iteration fails to converge.
    """
    a = _as_square(m)
    scale = np.linalg.norm(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > tol * max(scale, _UNDERFLOW):
        raise NotHermitian(
            f"matrix is not Hermitian: ||m - m†||/||m|| = {dev / max(scale, _UNDERFLOW):.3e}"
        )
    sym = (a + a.conj().T) / 2
    try:
        vals, vecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"Hermitian eigendecomposition failed: {exc}") from exc
    return HermitianEigenDecomposition(eigenvalues=vals, eigenvectors=vecs)


def unitary_exponential(h, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via the spectral decomposition.

    Returns Q diag(exp(-i E t)) Q†, unitary up to rounding.
    """
    eig = hermitian_eigendecompose(h)
    q = eig.eigenvectors
    return (q * np.exp(-1j * eig.eigenvalues * float(t))) @ q.conj().T


def _power_iterate(step: np.ndarray, reference: np.ndarray, tol: float,
                   max_iter: int, rng: np.random.Generator):
    """Power iteration driven by ``step`` but converged against ``reference``.

    The two matrices coincide for a plain dominant-pair call; in a deflation
    chain ``step`` is the deflated matrix while the residual and Rayleigh
    quotient are taken against the original, so returned pairs are pairs of
    the original matrix.

    Returns (eigenvalue, unit vector, residual). Raises NoConvergence when
    the iteration cap is reached.
    """
    n = step.shape[0]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    best = np.inf
    for _ in range(max_iter):
        z = reference @ x
        lam = np.vdot(x, z)
        residual = float(np.linalg.norm(z - lam * x))
        best = min(best, residual)
        if residual <= tol:
            return complex(lam), x, residual
        y = step @ x
        ny = np.linalg.norm(y)
        if ny < _UNDERFLOW:
            # x is annihilated: it sits in the kernel, eigenvalue zero.
            residual = float(np.linalg.norm(reference @ x))
            if residual <= tol:
                return 0.0 + 0.0j, x, residual
            raise NoConvergence(
                "iterate annihilated without meeting the residual tolerance",
                residual,
            )
        step_lam = np.vdot(x, y)
        if float(np.linalg.norm(y - step_lam * x)) <= tol:
            # Locked onto a step eigenvector, but the residual against the
            # reference is floored by the error the deflation chain carried
            # in. Further power steps cannot move x; refine it against the
            # reference directly.
            lam, x, residual = _shifted_refine(reference, x, lam)
            best = min(best, residual)
            if residual <= tol:
                return complex(lam), x, residual
            raise NoConvergence(
                f"refinement stalled at residual {residual:.3e} "
                f"(tolerance {tol:.1e})",
                residual,
            )
        x = y / ny
    raise NoConvergence(
        f"power iteration did not reach residual {tol:.1e} in {max_iter} steps "
        f"(best {best:.3e}); dominant eigenvalue magnitudes may coincide",
        best,
    )


def _shifted_refine(reference: np.ndarray, x: np.ndarray, lam: complex):
    """A few shifted inverse-iteration steps against ``reference``.

    Entered only with x already an eigenvector of the deflated step matrix
    to tolerance, so the Rayleigh shift sits within deflation error of the
    target eigenvalue and inverse iteration sharpens the same pair rather
    than jumping to a neighbor.
    """
    eye = np.eye(reference.shape[0], dtype=complex)
    residual = float(np.linalg.norm(reference @ x - lam * x))
    best = (complex(lam), x, residual)
    for _ in range(4):
        y = None
        # An exact Rayleigh shift can make the LU factorization exactly
        # singular; a relative nudge of the shift restores an invertible
        # system while keeping the inverse-iteration gain enormous.
        for shift in (lam, lam + 1e-12 * max(1.0, abs(lam))):
            try:
                candidate = np.linalg.solve(reference - shift * eye, x)
            except np.linalg.LinAlgError:
                continue
            ny = np.linalg.norm(candidate)
            if np.isfinite(ny) and ny >= _UNDERFLOW:
                y = candidate
                break
        if y is None:
            break
        x = y / ny
        z = reference @ x
        lam = np.vdot(x, z)
        residual = float(np.linalg.norm(z - lam * x))
        if residual < best[2]:
            best = (complex(lam), x, residual)
    return best


def dominant_eigenpair(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       seed: int = 0) -> EigenPair:
    """Largest-magnitude eigenvalue with right and left eigenvectors.

    Power iteration with a Rayleigh-quotient estimate, started from a
    seed-deterministic random vector. The left vector is obtained from the
    adjoint matrix and rescaled so <left|right> = 1 while ||right|| = 1.

    Raises NoConvergence when there is no usable magnitude gap (the refusal
    signals that a unique dominant eigenvalue does not exist, which is
    exactly the condition purification analysis must detect).
    """
    a = _as_square(m)
    rng = np.random.default_rng(seed)
    return _pair_from(a, a, tol, max_iter, rng)


def _pair_from(step: np.ndarray, reference: np.ndarray, tol: float, max_iter: int,
               rng: np.random.Generator) -> EigenPair:
    lam, right, residual = _power_iterate(step, reference, tol, max_iter, rng)
    lam_l, left, _ = _power_iterate(step.conj().T, reference.conj().T, tol, max_iter, rng)
    if abs(np.conj(lam_l) - lam) > max(10 * tol, 1e-8 * abs(lam)):
        raise NoConvergence(
            f"left/right eigenvalue mismatch ({np.conj(lam_l):.6e} vs {lam:.6e})",
            residual,
        )
    overlap = np.vdot(left, right)
    if abs(overlap) < 1e-8:
        # Near-defective: left and right vectors of a genuine simple
        # eigenvalue cannot be orthogonal.
        raise NoConvergence(
            f"left/right vectors nearly orthogonal (|<v|u>| = {abs(overlap):.3e})",
            residual,
        )
    left = left / np.conj(overlap)
    return EigenPair(value=complex(lam), right=right, left=left, residual=residual)


def deflate(m, pair: EigenPair) -> np.ndarray:
    """Remove one eigenpair: m - value * |right><left|.

    On the result, the dominant pair of the remaining spectrum becomes
    reachable by power iteration. The pair must carry the gauge this module
    produces (unit right vector, <left|right> = 1).
    """
    a = _as_square(m)
    right = np.asarray(pair.right, dtype=complex)
    left = np.asarray(pair.left, dtype=complex)
    if right.shape != (a.shape[0],) or left.shape != (a.shape[0],):
        raise ValueError("eigenpair dimension does not match matrix")
    if abs(np.linalg.norm(right) - 1.0) > 1e-12:
        raise ValueError("right vector is not unit-normalized")
    if abs(np.vdot(left, right) - 1.0) > 1e-10:
        raise ValueError("pair violates <left|right> = 1")
    return a - pair.value * np.outer(right, left.conj())


def top_k_eigenpairs(m, k: int, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER, seed: int = 0) -> TopKResult:
    """Top k eigenpairs by magnitude, via repeated deflation.

    Each stage power-iterates the deflated matrix while measuring residuals
    against the original, so every returned pair satisfies the EigenPair
    contract for the input matrix itself. Extraction stops early (truncated
    result, no exception) when a stage finds no magnitude gap.
    """
    a = _as_square(m)
    if not 0 <= k <= a.shape[0]:
        raise ValueError(f"k must be between 0 and {a.shape[0]}, got {k}")
    rng = np.random.default_rng(seed)
    pairs: list[EigenPair] = []
    work = a
    truncated = False
    for _ in range(k):
        try:
            pair = _pair_from(work, a, tol, max_iter, rng)
        except NoConvergence:
            truncated = True
            break
        pairs.append(pair)
        work = work - pair.value * np.outer(pair.right, pair.left.conj())
    pairs.sort(key=lambda p: -abs(p.value))
    return TopKResult(pairs=tuple(pairs), truncated=truncated)
