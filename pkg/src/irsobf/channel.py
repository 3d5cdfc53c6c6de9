"""Channel and path-loss model for the reflecting-surface broadcast link.

Generates the line-of-sight feeder vector, the per-user scattered channels,
the distance-based attenuation factors, and composes the end-to-end scalar
channel seen by each user.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import psd_sqrt, sample_complex_gaussian

__all__ = [
    "Geometry",
    "PathLossFactors",
    "FadingRegime",
    "ChannelRealization",
    "los_bs_irs",
    "exp_correlation",
    "path_loss",
    "sample_user_channels",
    "effective_channel",
    "snr",
    "rate_bps",
]


@dataclass(frozen=True)
class Geometry:
    """2-D deployment: base station, reflecting surface, and user positions (m)."""

    bs_position: tuple
    irs_position: tuple
    user_positions: list

    def __post_init__(self):
        pts = [self.bs_position, self.irs_position, *self.user_positions]
        arr = np.asarray(pts, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("geometry contains non-finite coordinates")
        for p in self.user_positions:
            if tuple(p) == tuple(self.bs_position) or tuple(p) == tuple(self.irs_position):
                raise ValueError(f"user at {p} coincides with the BS or IRS position")

    @property
    def n_users(self) -> int:
        return len(self.user_positions)


@dataclass(frozen=True)
class PathLossFactors:
    """Linear power gains of the cascaded and direct links for one user."""

    beta_r: float
    beta_d: float

    def __post_init__(self):
        if self.beta_r <= 0 or self.beta_d <= 0:
            raise ValueError(f"attenuation factors must be positive, got {self}")


@dataclass(frozen=True)
class FadingRegime:
    """slow: user channels frozen for the whole run; fast: redrawn per frame."""

    kind: str = "slow"
    correlation_eta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("slow", "fast"):
            raise ValueError(f"fading kind must be 'slow' or 'fast', got {self.kind!r}")
        if not 0.0 <= self.correlation_eta <= 1.0:
            raise ValueError(f"correlation_eta must be in [0, 1], got {self.correlation_eta}")
        if self.kind == "slow" and self.correlation_eta != 0.0:
            raise ValueError("correlation_eta applies to fast fading only")


@dataclass
class ChannelRealization:
    """One frame's worth of channel coefficients for all users."""

    h1: np.ndarray                      # (N,) unit-modulus feeder entries
    h2: np.ndarray                      # (K, N) per-user scattered channels
    hd: np.ndarray                      # (K,) direct channels
    pl: list = field(default_factory=list)  # K PathLossFactors

    def __post_init__(self):
        if self.h1.size and np.max(np.abs(np.abs(self.h1) - 1.0)) > 1e-12:
            raise ValueError("feeder channel entries must have unit modulus")
        k = self.h2.shape[0]
        if self.hd.shape[0] != k or (self.pl and len(self.pl) != k):
            raise ValueError("inconsistent user counts across channel fields")


def los_bs_irs(n_elements: int, spacing_d: float, los_angles) -> np.ndarray:
    """Line-of-sight feeder vector of a uniform linear array.

    Entry n is exp(j * 2*pi * (n-1) * d * sin(angle_n)).  ``los_angles`` may
    be a scalar (shared by all elements) or a length-N sequence.
    """
    if n_elements < 1:
        raise ValueError(f"need n_elements >= 1, got {n_elements}")
    if spacing_d <= 0:
        raise ValueError(f"element spacing must be positive, got {spacing_d}")
    angles = np.broadcast_to(np.asarray(los_angles, dtype=float), (n_elements,))
    n = np.arange(n_elements)
    return np.exp(1j * 2.0 * np.pi * n * spacing_d * np.sin(angles))


def exp_correlation(n_elements: int, eta: float) -> np.ndarray:
    """Exponential spatial correlation matrix [R]_{ij} = eta^|i-j|."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    idx = np.arange(n_elements)
    return (eta ** np.abs(idx[:, None] - idx[None, :])).astype(complex)


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def path_loss(
    geometry: Geometry,
    exponents=(2.2, 2.8, 3.5),
    penetration_db: float = 10.0,
    element_gain_dbi: float = 5.0,
    reference_pl_db: float = -30.0,
) -> list:
    """Distance-based attenuation factors for every user.

    The cascaded link is the product of two power-law segments, each
    referenced to ``reference_pl_db`` at 1 m, with the element gain applied
    once at each end of the cascade.  The direct link takes one power law,
    one element gain, and the penetration loss.
    """
    exp_bi, exp_iu, exp_d = exponents
    c0 = _db_to_linear(reference_pl_db)
    g_cascade = _db_to_linear(2.0 * element_gain_dbi)
    g_direct = _db_to_linear(element_gain_dbi)
    pen = _db_to_linear(-penetration_db)

    bs = np.asarray(geometry.bs_position, dtype=float)
    irs = np.asarray(geometry.irs_position, dtype=float)
    d_bi = float(np.linalg.norm(irs - bs))
    if d_bi <= 0:
        raise ValueError("BS-IRS distance must be positive")

    out = []
    for pos in geometry.user_positions:
        u = np.asarray(pos, dtype=float)
        d_iu = float(np.linalg.norm(u - irs))
        d_bu = float(np.linalg.norm(u - bs))
        if d_iu <= 0 or d_bu <= 0:
            raise ValueError(f"user at {pos} has a zero-length link")
        beta_r = g_cascade * (c0 * d_bi ** (-exp_bi)) * (c0 * d_iu ** (-exp_iu))
        beta_d = g_direct * c0 * d_bu ** (-exp_d) * pen
        out.append(PathLossFactors(beta_r=beta_r, beta_d=beta_d))
    return out


def sample_user_channels(
    rng: np.random.Generator,
    n_users: int,
    corr: np.ndarray,
    regime: FadingRegime,
):
    """Draw the scattered and direct channels for all users.

    Returns (h2, hd) with h2 of shape (K, N) and hd of shape (K,).  Each
    user's scattered channel is corr^(1/2) applied to an i.i.d. unit-variance
    complex Gaussian vector; the direct channel is a unit-variance complex
    Gaussian scalar.  Draw order is per user (h2 then hd) so that the first
    users of a larger population reuse the same realizations.
    """
    corr = np.asarray(corr, dtype=complex)
    n = corr.shape[0]
    if abs(np.trace(corr).real - n) > 1e-9:
        raise ValueError(f"correlation trace must equal N={n}, got {np.trace(corr).real}")
    sqrt_corr = psd_sqrt(corr)
    is_identity = np.allclose(sqrt_corr, np.eye(n), atol=1e-14)
    h2 = np.empty((n_users, n), dtype=complex)
    hd = np.empty(n_users, dtype=complex)
    for k in range(n_users):
        b = sample_complex_gaussian(rng, n)
        h2[k] = b if is_identity else sqrt_corr @ b
        hd[k] = sample_complex_gaussian(rng, 1)[0]
    return h2, hd


def effective_channel(h1, v, h2, hd, pl: PathLossFactors) -> complex:
    """End-to-end scalar channel: sqrt(beta_r) v^T diag(h1) h2 + sqrt(beta_d) hd.

    ``v`` is the surface control vector (complex entries of magnitude alpha).
    """
    h1 = np.asarray(h1, dtype=complex)
    v = np.asarray(v, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    if not (h1.shape == v.shape == h2.shape):
        raise ValueError(
            f"dimension mismatch: h1 {h1.shape}, v {v.shape}, h2 {h2.shape}"
        )
    cascade = np.sum(v * h1 * h2)
    return np.sqrt(pl.beta_r) * cascade + np.sqrt(pl.beta_d) * hd


def snr(h: complex, power_p: float, noise_var: float) -> float:
    """Received SNR P |h|^2 / sigma^2 (all linear units)."""
    if power_p <= 0 or noise_var <= 0:
        raise ValueError("power and noise variance must be positive")
    return power_p * abs(h) ** 2 / noise_var


def rate_bps(snr_value: float) -> float:
    """Spectral efficiency log2(1 + SNR) in bps/Hz."""
    return float(np.log2(1.0 + snr_value))
