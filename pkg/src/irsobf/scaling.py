"""Closed-form rates and asymptotic laws used as analytic oracles.

Contains the single-user coherent rate, the large-population limit of the
randomly-rotated scheme, the effective array gain zeta of the
eigenvector-matched fixed design, the extreme-value growth point of the
maximum SNR among K users, and an exact finite-K order-statistic oracle.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import exp1

from .numerics import canonical_global_phase, hermitian_eig, phase_of, require_hermitian

__all__ = [
    "LinkBudget",
    "ZetaDecomposition",
    "IntegrationError",
    "coherent_rate",
    "asymptotic_limit",
    "r_bar",
    "zeta",
    "scaling_law",
    "evt_growth",
    "evt_condition",
    "exact_max_expectation",
]


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, noise variance (both watts), surface amplitude, link gains."""

    power_p: float
    noise_var: float
    alpha: float = 1.0
    beta_r: float = 1.0
    beta_d: float = 1.0

    def __post_init__(self):
        if self.power_p <= 0 or self.noise_var <= 0:
            raise ValueError("power and noise variance must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def snr_scale(self) -> float:
        return self.power_p / self.noise_var


@dataclass(frozen=True)
class ZetaDecomposition:
    """Effective array gain and its per-eigenvector contributions.

    zeta = sum of alignment_terms; alignment_terms[j] pairs with
    eigenvalues[j] (ascending), the last term being the dominant-eigenvector
    magnitude term.
    """

    zeta: float
    eigenvalues: np.ndarray
    alignment_terms: np.ndarray


class IntegrationError(RuntimeError):
    """Raised when numerical quadrature cannot certify the requested accuracy."""


def coherent_rate(h1, h2_k, hd_k, lb: LinkBudget) -> float:
    """Maximum single-user rate with all paths phase-aligned.

    log2(1 + (P/sigma^2) (alpha sqrt(beta_r) sum |h1_n||h2_n|
    + sqrt(beta_d) |hd|)^2).
    """
    h1 = np.asarray(h1, dtype=complex)
    h2_k = np.asarray(h2_k, dtype=complex)
    if h1.shape != h2_k.shape:
        raise ValueError(f"dimension mismatch: h1 {h1.shape}, h2 {h2_k.shape}")
    amp = lb.alpha * np.sqrt(lb.beta_r) * np.sum(np.abs(h1) * np.abs(h2_k))
    amp += np.sqrt(lb.beta_d) * abs(hd_k)
    return float(np.log2(1.0 + lb.snr_scale * amp ** 2))


def asymptotic_limit(per_user_bf_rates) -> float:
    """Large-population limit of the average sum-rate: mean of the per-user
    coherent rates."""
    rates = np.asarray(per_user_bf_rates, dtype=float)
    if rates.size == 0:
        raise ValueError("need at least one per-user rate")
    return float(rates.mean())


def r_bar(h1, corr) -> np.ndarray:
    """Cascade covariance diag(h1) R diag(h1)^H; unit-modulus h1 required.

    The transform preserves the trace and the eigenvalues of R.
    """
    h1 = np.asarray(h1, dtype=complex)
    if np.max(np.abs(np.abs(h1) - 1.0)) > 1e-12:
        raise ValueError("feeder entries must have unit modulus")
    corr = require_hermitian(corr)
    return (h1[:, None] * corr) * h1.conj()[None, :]


def zeta(r_bar_matrix) -> ZetaDecomposition:
    """Effective array gain of the dominant-eigenvector phase design.

    With ascending eigenvalues lambda_j and eigenvectors u_j of the cascade
    covariance, the projection vector is p = exp(j * angle(u_N)) and

        zeta = sum_{j<N} lambda_j |p^H u_j|^2 + lambda_N (sum_i |u_N(i)|)^2.

    Equivalently zeta * alpha^2 equals v^H R_bar v at v = alpha * p.  The
    same top-eigenvector tie-break and global-phase convention as the fixed
    design apply.
    """
    dec = hermitian_eig(r_bar_matrix)
    w = dec.eigenvalues
    u = dec.eigenvectors
    u_top = canonical_global_phase(u[:, -1])
    p = np.exp(1j * phase_of(u_top))
    terms = np.empty(w.size, dtype=float)
    for j in range(w.size - 1):
        terms[j] = w[j] * abs(np.vdot(p, u[:, j])) ** 2
    terms[-1] = w[-1] * np.sum(np.abs(u_top)) ** 2
    return ZetaDecomposition(zeta=float(terms.sum()), eigenvalues=w, alignment_terms=terms)


def scaling_law(n_users, zeta_val: float, lb: LinkBudget) -> float:
    """Asymptotic sum-rate log2(1 + (P/sigma^2)(beta_r alpha^2 zeta + beta_d) ln K).

    Natural logarithm of the user count, as dictated by the exponential SNR
    tail.  Requires n_users >= 2 so the logarithm is positive.
    """
    if n_users < 2:
        raise ValueError(f"need n_users >= 2, got {n_users}")
    gain = lb.beta_r * lb.alpha ** 2 * zeta_val + lb.beta_d
    return float(np.log2(1.0 + lb.snr_scale * gain * np.log(n_users)))


def evt_growth(v, r_bar_matrix, lb: LinkBudget, n_users) -> float:
    """Growth point of the maximum of K i.i.d. exponential SNRs.

    l_K = (P/sigma^2)(beta_r v^H R_bar v + beta_d) ln K, the solution of
    F(l_K) = 1 - 1/K for the conditional exponential SNR law given the
    fixed control vector ``v``.
    """
    if n_users < 2:
        raise ValueError(f"need n_users >= 2, got {n_users}")
    vv = np.asarray(v, dtype=complex)
    quad = float(np.real(vv.conj() @ np.asarray(r_bar_matrix, dtype=complex) @ vv))
    mean_snr = lb.snr_scale * (lb.beta_r * quad + lb.beta_d)
    return mean_snr * float(np.log(n_users))


def evt_condition(mean_snr: float) -> float:
    """Tail-ratio constant (1 - F)/f of the exponential SNR law.

    For an exponential with the given mean the ratio is the mean itself at
    every point, which is the positive constant the max-growth lemma needs.
    """
    if mean_snr <= 0:
        raise ValueError(f"mean SNR must be positive, got {mean_snr}")
    return float(mean_snr)


def _log_integrand(x, n_users, mean):
    # K f(x) F(x)^(K-1) log2(1+x) for Exp(mean), vector-safe.
    x = np.asarray(x, dtype=float)
    f = np.exp(-x / mean) / mean
    big_f = -np.expm1(-x / mean)
    return n_users * f * big_f ** (n_users - 1) * np.log2(1.0 + x)


def exact_max_expectation(n_users: int, mean_snr: float, rel_tol: float = 1e-8) -> float:
    """E[log2(1 + max of K i.i.d. exponential SNRs)], by adaptive quadrature.

    Integrates the exact order-statistic density K f F^(K-1) against
    log2(1+x), split at the density's bulk so large K stays accurate.
    Raises IntegrationError if the quadrature error estimate exceeds
    ``rel_tol`` relative to the result.
    """
    if n_users < 1:
        raise ValueError(f"need n_users >= 1, got {n_users}")
    if mean_snr <= 0:
        raise ValueError(f"mean SNR must be positive, got {mean_snr}")
    split = mean_snr * max(np.log(n_users), 1.0)
    v1, e1 = integrate.quad(
        _log_integrand, 0.0, split, args=(n_users, mean_snr), epsabs=0.0, epsrel=1e-10, limit=200
    )
    v2, e2 = integrate.quad(
        _log_integrand, split, np.inf, args=(n_users, mean_snr), epsabs=0.0, epsrel=1e-10, limit=200
    )
    total = v1 + v2
    if total > 0 and (e1 + e2) / total > rel_tol:
        raise IntegrationError(
            f"quadrature error {(e1 + e2):.3e} exceeds relative tolerance on {total:.6e}"
        )
    return float(total)


def expected_log2_one_plus_exponential(mean: float) -> float:
    """Closed form E[log2(1 + X)] for X ~ Exp(mean): e^(1/m) E1(1/m) / ln 2."""
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    inv = 1.0 / mean
    return float(np.exp(inv) * exp1(inv) / np.log(2.0))
