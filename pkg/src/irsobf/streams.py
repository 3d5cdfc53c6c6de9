"""Deterministic RNG stream-splitting for seeded, parallel-safe trials.

Each (master seed, trial index, purpose) triple maps to an independent
PCG64 stream.  Purposes that describe the user population (placement, slow
channels, estimation noise) are shared by every scenario of a sweep, so
curves over K, eta, or strategy are paired on the same users and the same
channel draws.  Construction is stateless, so parallel and sequential trial
execution consume identical streams.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStreams"]

_PLACEMENT = 0
_SLOW_CHANNEL = 1
_PHASE = 2
_FAST_CHANNEL = 3
_CSI_EST = 4


def _generator(master_seed: int, trial: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master_seed), int(trial), int(purpose)])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class RngStreams:
    """Named RNG streams for one trial of one experiment."""

    placement: np.random.Generator
    slow_channel: np.random.Generator
    phase: np.random.Generator
    fast_channel: np.random.Generator
    csi_est: np.random.Generator

    @classmethod
    def from_seed(cls, master_seed: int, trial: int = 0) -> "RngStreams":
        return cls(
            placement=_generator(master_seed, trial, _PLACEMENT),
            slow_channel=_generator(master_seed, trial, _SLOW_CHANNEL),
            phase=_generator(master_seed, trial, _PHASE),
            fast_channel=_generator(master_seed, trial, _FAST_CHANNEL),
            csi_est=_generator(master_seed, trial, _CSI_EST),
        )

    @classmethod
    def from_rng(cls, rng: np.random.Generator) -> "RngStreams":
        """Split an ad-hoc generator into the named streams (for library use)."""
        children = rng.spawn(5)
        return cls(*children)
