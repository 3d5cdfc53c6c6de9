"""Phase-control strategies for the reflecting surface.

Every strategy produces a PhaseVector: N phases in [0, 2*pi) plus a common
amplitude alpha.  None of the random strategies require the instantaneous
user channels; the coherent configuration and its imperfect-estimate variant
are the CSI-based benchmarks.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import canonical_global_phase, hermitian_eig, phase_of, sample_complex_gaussian

__all__ = [
    "PhaseVector",
    "ImperfectCsiConfig",
    "coherent_phases",
    "random_stationary_phases",
    "uniform_random_phases",
    "deterministic_eigen_design",
    "quantize_phases",
    "imperfect_csi_phases",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseVector:
    """Surface control: per-element phases and a shared amplitude in [0, 1]."""

    thetas: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        thetas = np.mod(np.asarray(self.thetas, dtype=float), TWO_PI)
        object.__setattr__(self, "thetas", thetas)
        if thetas.ndim != 1 or thetas.size < 1:
            raise ValueError("need at least one phase entry")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def n(self) -> int:
        return self.thetas.size

    def values(self) -> np.ndarray:
        """Complex control vector alpha * exp(j*theta)."""
        return self.alpha * np.exp(1j * self.thetas)


@dataclass(frozen=True)
class ImperfectCsiConfig:
    """Channel-estimate quality: epsilon = 0 is perfect, 1 is pure noise."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


def coherent_phases(h1, h2_k, hd_k, alpha: float = 1.0) -> PhaseVector:
    """Phases that rotate every cascaded path onto the direct path's phase.

    theta_n = angle(hd) - angle(h1_n) - angle(h2_n) mod 2*pi, which aligns
    all N+1 terms of the effective channel and maximizes its magnitude.
    """
    h1 = np.asarray(h1, dtype=complex)
    h2_k = np.asarray(h2_k, dtype=complex)
    if h1.shape != h2_k.shape:
        raise ValueError(f"dimension mismatch: h1 {h1.shape}, h2 {h2_k.shape}")
    thetas = phase_of(hd_k) - phase_of(h1) - phase_of(h2_k)
    return PhaseVector(thetas=thetas, alpha=alpha)


def coherent_theta_matrix(h1, h2, hd) -> np.ndarray:
    """Vectorized coherent phases for a batch: h2 (K, N), hd (K,) -> (K, N)."""
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    hd = np.asarray(hd, dtype=complex)
    thetas = phase_of(hd)[:, None] - phase_of(h1)[None, :] - phase_of(h2)
    return np.mod(thetas, TWO_PI)


def random_stationary_phases(rng: np.random.Generator, user_bf_configs) -> PhaseVector:
    """One configuration drawn uniformly from a list of precomputed configs.

    Drawn independently each frame; the index of the draw is never exposed
    to the scheduling side.
    """
    if len(user_bf_configs) == 0:
        raise ValueError("need at least one configuration to sample from")
    idx = int(rng.integers(len(user_bf_configs)))
    return user_bf_configs[idx]


def uniform_random_phases(rng: np.random.Generator, n: int, alpha: float = 1.0) -> PhaseVector:
    """Each phase i.i.d. uniform on [0, 2*pi)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return PhaseVector(thetas=rng.uniform(0.0, TWO_PI, size=n), alpha=alpha)


def deterministic_eigen_design(r_bar, alpha: float = 1.0) -> PhaseVector:
    """Fixed design matched to the dominant eigenvector of the cascade covariance.

    Takes the phases of the top eigenvector of ``r_bar`` (ties in the top
    eigenvalue resolve to the eigenvector returned last in ascending order;
    its global phase is fixed so the largest-magnitude entry is real
    positive).
    """
    dec = hermitian_eig(r_bar)
    u_top = canonical_global_phase(dec.eigenvectors[:, -1])
    return PhaseVector(thetas=phase_of(u_top), alpha=alpha)


def quantize_phases(pv: PhaseVector, bits: int) -> PhaseVector:
    """Snap each phase to the nearest of 2^bits codewords with wraparound.

    Exact midpoints resolve to the smaller codeword value.
    """
    if bits < 1:
        raise ValueError(f"need bits >= 1, got {bits}")
    levels = 2 ** bits
    scaled = np.mod(pv.thetas, TWO_PI) / TWO_PI * levels
    lower = np.floor(scaled)
    d_lower = scaled - lower
    d_upper = 1.0 - d_lower
    m = np.where(d_lower < d_upper, lower, lower + 1)
    tie = d_lower == d_upper
    if np.any(tie):
        m_tie = np.minimum(np.mod(lower, levels), np.mod(lower + 1, levels))
        m = np.where(tie, m_tie, m)
    return PhaseVector(thetas=np.mod(m, levels) * TWO_PI / levels, alpha=pv.alpha)


def imperfect_csi_phases(
    rng: np.random.Generator, h1, h2_k, hd_k, cfg: ImperfectCsiConfig, alpha: float = 1.0
) -> PhaseVector:
    """Coherent configuration computed from a noisy scattered-channel estimate.

    The estimate sqrt(1 - eps^2) h2 + eps * Delta uses a per-user error
    vector Delta ~ CN(0, I) drawn once from ``rng`` (the estimate is as
    static as the slow-fading channel it estimates).  The returned phases
    are meant to be applied to the true channel.
    """
    h2_k = np.asarray(h2_k, dtype=complex)
    delta = sample_complex_gaussian(rng, h2_k.size)
    eps = cfg.epsilon
    h2_hat = np.sqrt(1.0 - eps ** 2) * h2_k + eps * delta
    return coherent_phases(h1, h2_hat, hd_k, alpha=alpha)
