"""Complex linear-algebra and sampling primitives shared by all modules.

Everything here is a thin, validated layer over numpy's Hermitian
eigensolver plus a few phase utilities.  All functions are pure; random
sampling takes an explicit ``numpy.random.Generator``.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigenDecomposition",
    "hermitian_eig",
    "psd_sqrt",
    "sample_complex_gaussian",
    "phase_of",
    "canonical_global_phase",
]

# Hermitian symmetry is checked elementwise against this absolute tolerance.
HERMITIAN_ATOL = 1e-12

# Eigenvalues above this negative floor are treated as rounding noise and
# clamped to zero when a PSD input is required.
PSD_EIG_FLOOR = -1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigensystem of a Hermitian matrix.

    eigenvalues are sorted ascending; eigenvectors[:, j] is the unit-norm
    eigenvector of eigenvalues[j].
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Return U diag(lambda) U^H."""
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def _as_square_complex(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def require_hermitian(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate Hermitian symmetry and return the matrix as complex ndarray."""
    m = _as_square_complex(m)
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > atol:
        raise ValueError(
            f"matrix is not Hermitian: max |M - M^H| = {dev:.3e} exceeds {atol:.1e}"
        )
    return m


def hermitian_eig(m, atol: float = HERMITIAN_ATOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Deterministic for identical input.  Raises ValueError when the input
    deviates from Hermitian symmetry beyond ``atol``.
    """
    m = require_hermitian(m, atol=atol)
    w, u = np.linalg.eigh(m)
    return EigenDecomposition(eigenvalues=w, eigenvectors=u)


def psd_sqrt(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Hermitian PSD square root S with S @ S = M.

    Eigenvalues below ``PSD_EIG_FLOOR`` are rejected; small negatives above
    the floor are clamped to zero.  Exactly diagonal input short-circuits to
    diag(sqrt(d)) so that diagonal matrices square-root exactly.
    """
    m = require_hermitian(m, atol=atol)
    d = np.diagonal(m)
    if np.count_nonzero(m - np.diag(d)) == 0:
        dr = d.real
        if np.any(dr < PSD_EIG_FLOOR):
            raise ValueError(f"matrix is not PSD: min diagonal {dr.min():.3e}")
        return np.diag(np.sqrt(np.clip(dr, 0.0, None))).astype(complex)
    dec = hermitian_eig(m, atol=atol)
    w = dec.eigenvalues
    if np.any(w < PSD_EIG_FLOOR):
        raise ValueError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    u = dec.eigenvectors
    s = (u * np.sqrt(w)) @ u.conj().T
    # Symmetrize away the last bits of rounding noise.
    return 0.5 * (s + s.conj().T)


def sample_complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. circularly-symmetric complex Gaussians, unit variance per entry.

    Real and imaginary parts each have variance 1/2.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    z = rng.standard_normal(2 * n)
    return (z[:n] + 1j * z[n:]) / np.sqrt(2.0)


def phase_of(x) -> np.ndarray:
    """Entrywise principal argument mapped into [0, 2*pi); angle(0) is 0."""
    x = np.asarray(x, dtype=complex)
    return np.mod(np.angle(x), 2.0 * np.pi)


def canonical_global_phase(v) -> np.ndarray:
    """Rotate a complex vector so its largest-magnitude entry is real positive.

    Eigenvectors are unique only up to a global phase; this fixes one
    deterministically.  Zero vectors are returned unchanged.
    """
    v = np.asarray(v, dtype=complex)
    if v.size == 0:
        return v
    i = int(np.argmax(np.abs(v)))
    if v[i] == 0:
        return v.copy()
    return v * np.exp(-1j * np.angle(v[i]))
