"""Per-frame user selection, throughput accounting, and the frame-loop driver.

The scheduling interface is deliberately narrow: schedulers see per-user
SNRs or rates and their own throughput state, never channel vectors or the
surface's phase draw.  The one exception is the genie baseline, which by
construction inspects the current phase configuration.

``run_frames`` drives a full single-trial simulation: user drop, channel
draws per fading regime, phase strategy, SNR feedback, scheduling, and
throughput updates.  Rates are computed in fixed-size frame blocks so large
runs stay within memory while remaining bit-reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from . import scaling
from .channel import Geometry, exp_correlation, los_bs_irs, path_loss, sample_complex_gaussian
from .irs import (
    ImperfectCsiConfig,
    PhaseVector,
    coherent_theta_matrix,
    deterministic_eigen_design,
    imperfect_csi_phases,
    quantize_phases,
)
from .numerics import psd_sqrt
from .scenario import Scenario, draw_user_positions
from .streams import RngStreams

__all__ = [
    "SchedulerState",
    "FrameOutcome",
    "FrameTrace",
    "RunResult",
    "RoundRobinState",
    "opportunistic_schedule",
    "pf_schedule",
    "update_throughput",
    "genie_class_match_schedule",
    "run_frames",
]

TWO_PI = 2.0 * np.pi

# Frames per vectorized block.  Fixed so results never depend on memory
# layout choices.
BLOCK = 4096

PF_INIT = 1e-6            # finite-window throughput bootstrap
GENIE_PHASE_TOL = 1e-9    # per-entry wraparound match tolerance


@dataclass
class SchedulerState:
    """Per-user throughput trackers plus the averaging window.

    t_c is the window length in frames; None means an infinite window
    (cumulative mean).  frame_index counts completed frames.
    """

    throughputs: np.ndarray
    frame_index: int = 0
    t_c: int | None = None

    @classmethod
    def initial(cls, n_users: int, t_c: int | None = None) -> "SchedulerState":
        init = 0.0 if t_c is None else PF_INIT
        return cls(throughputs=np.full(n_users, init, dtype=float), frame_index=0, t_c=t_c)


@dataclass(frozen=True)
class FrameOutcome:
    """Result of one frame: who was served and at what rate."""

    scheduled_user: int | None
    rate: float
    snrs: np.ndarray | None = None


@dataclass
class FrameTrace:
    """Compact per-frame history; index -1 marks a frame with no transmission."""

    scheduled: np.ndarray
    rates: np.ndarray
    snrs: np.ndarray | None = None

    def __len__(self) -> int:
        return self.scheduled.size

    def __getitem__(self, f: int) -> FrameOutcome:
        k = int(self.scheduled[f])
        return FrameOutcome(
            scheduled_user=None if k < 0 else k,
            rate=float(self.rates[f]),
            snrs=None if self.snrs is None else self.snrs[f],
        )


@dataclass
class RunResult:
    """Output of one seeded run: empirical sum-rate, trackers, and diagnostics."""

    sum_rate: float
    throughputs: np.ndarray
    trace: FrameTrace
    positions: np.ndarray | None
    beta_r: np.ndarray
    beta_d: np.ndarray
    bf_rates: np.ndarray | None = None
    direct_rates: np.ndarray | None = None


def opportunistic_schedule(snrs) -> int:
    """Index of the maximum SNR; ties resolve to the lowest index."""
    snrs = np.asarray(snrs, dtype=float)
    if snrs.size == 0:
        raise ValueError("need at least one SNR value")
    return int(np.argmax(snrs))


def _pf_metric(rates: np.ndarray, throughputs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        metric = rates / throughputs
    metric[throughputs == 0.0] = np.inf
    return metric


def pf_schedule(rates, state: SchedulerState) -> int:
    """Proportional-fair pick: argmax rate/throughput, lowest index on ties.

    Users with zero tracked throughput get infinite priority, so everyone is
    served at least once before the ratio rule takes over.  With equal
    trackers the rule reduces to plain max-rate scheduling.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.shape != state.throughputs.shape:
        raise ValueError(
            f"rates shape {rates.shape} does not match throughputs {state.throughputs.shape}"
        )
    return int(np.argmax(_pf_metric(rates, state.throughputs)))


def update_throughput(state: SchedulerState, outcome: FrameOutcome) -> SchedulerState:
    """Advance the throughput trackers by one frame.

    Finite window: T <- (1 - 1/t_c) T + (1/t_c) rate for the served user and
    plain decay for everyone else.  Infinite window: running cumulative mean
    of the delivered per-frame rate (zero in frames a user is not served).
    """
    t = state.frame_index + 1
    thr = state.throughputs.copy()
    if state.t_c is None:
        thr *= (t - 1) / t
        if outcome.scheduled_user is not None:
            thr[outcome.scheduled_user] += outcome.rate / t
    else:
        thr *= 1.0 - 1.0 / state.t_c
        if outcome.scheduled_user is not None:
            thr[outcome.scheduled_user] += outcome.rate / state.t_c
    return SchedulerState(throughputs=thr, frame_index=t, t_c=state.t_c)


@dataclass
class RoundRobinState:
    """Rotation pointers keyed by the matched-user group."""

    counters: dict = field(default_factory=dict)

    def take(self, group: tuple) -> int:
        i = self.counters.get(group, 0)
        self.counters[group] = i + 1
        return group[i % len(group)]


def _phase_match(thetas_a: np.ndarray, thetas_b: np.ndarray, tol: float) -> bool:
    diff = np.mod(thetas_a - thetas_b, TWO_PI)
    return bool(np.all(np.minimum(diff, TWO_PI - diff) <= tol))


def genie_class_match_schedule(
    current_phase: PhaseVector,
    user_bf_configs,
    round_robin_state: RoundRobinState,
    tol: float = GENIE_PHASE_TOL,
) -> int | None:
    """Serve a user only when the surface sits in its own configuration.

    Returns the index of a matching user (round-robin among users whose
    configurations coincide) or None when no configuration matches, meaning
    no transmission this frame.
    """
    matched = tuple(
        k
        for k, cfg in enumerate(user_bf_configs)
        if _phase_match(current_phase.thetas, cfg.thetas, tol)
    )
    if not matched:
        return None
    return round_robin_state.take(matched)


# ---------------------------------------------------------------------------
# run_frames and its helpers
# ---------------------------------------------------------------------------


def _resolve_streams(streams) -> RngStreams:
    if isinstance(streams, RngStreams):
        return streams
    if isinstance(streams, np.random.Generator):
        return RngStreams.from_rng(streams)
    if isinstance(streams, (int, np.integer)):
        return RngStreams.from_seed(int(streams), 0)
    raise TypeError(f"expected RngStreams, Generator, or int seed, got {type(streams)!r}")


def _los_angle(scenario: Scenario) -> float:
    bs = np.asarray(scenario.bs_position, dtype=float)
    irs = np.asarray(scenario.irs_position, dtype=float)
    d = irs - bs
    return float(np.arctan2(d[1], d[0]))


def _user_link_budget(scenario: Scenario, streams: RngStreams):
    """User drop and attenuation factors; positions are None under fixed betas."""
    k = scenario.n_users
    if scenario.fixed_beta is not None:
        br, bd = scenario.fixed_beta
        return None, np.full(k, br), np.full(k, bd)
    positions = draw_user_positions(streams.placement, scenario)
    geometry = Geometry(
        bs_position=tuple(scenario.bs_position),
        irs_position=tuple(scenario.irs_position),
        user_positions=[tuple(p) for p in positions],
    )
    pl = path_loss(
        geometry,
        exponents=scenario.exponents,
        penetration_db=scenario.penetration_db,
        element_gain_dbi=scenario.element_gain_dbi,
        reference_pl_db=scenario.reference_loss_db,
    )
    beta_r = np.array([p.beta_r for p in pl])
    beta_d = np.array([p.beta_d for p in pl])
    return positions, beta_r, beta_d


def _draw_slow_channels(rng: np.random.Generator, n_users: int, n_elements: int):
    """Per-user draw order (h2 then hd) so user populations nest across K."""
    h2 = np.empty((n_users, n_elements), dtype=complex)
    hd = np.empty(n_users, dtype=complex)
    for k in range(n_users):
        if n_elements > 0:
            h2[k] = sample_complex_gaussian(rng, n_elements)
        hd[k] = sample_complex_gaussian(rng, 1)[0]
    return h2, hd


def _rates_from_channels(h_eff: np.ndarray, snr_scale: float):
    snrs = snr_scale * np.abs(h_eff) ** 2
    return snrs, np.log2(1.0 + snrs)


def _theta_to_rates(thetas_block, casc, direct, alpha, snr_scale):
    """SNRs and rates of all users under each frame's phase row.

    thetas_block: (B, N); casc: (K, N) cascade sqrt(beta_r) h1 h2;
    direct: (K,) sqrt(beta_d) hd.
    """
    w = alpha * np.exp(1j * thetas_block)
    h_eff = w @ casc.T + direct[None, :]
    return _rates_from_channels(h_eff, snr_scale)


def _quantize_rows(thetas: np.ndarray, bits: int) -> np.ndarray:
    pv = quantize_phases(PhaseVector(thetas.reshape(-1), 1.0), bits)
    return pv.thetas.reshape(thetas.shape)


class _SlowPlan:
    """Per-frame rate provider for a frozen channel realization."""

    def __init__(self, scenario: Scenario, streams: RngStreams, h1, h2, hd, beta_r, beta_d):
        self.scenario = scenario
        self.streams = streams
        self.snr_scale = scenario.power_w / scenario.noise_var_w
        self.h1 = h1
        self.casc = np.sqrt(beta_r)[:, None] * h1[None, :] * h2
        self.direct = np.sqrt(beta_d) * hd
        self.h2 = h2
        self.hd = hd
        self.constant = None       # (snrs, rates) pair for frame-invariant strategies
        self.config_idx = None     # per-frame configuration index, user_configs mode
        self.user_configs = None   # (K, N) per-user configuration phases
        self.snr_table = None
        self.rate_table = None
        self._prepare()

    def _prepare(self):
        s = self.scenario
        strat = s.strategy
        if strat.kind == "off" or s.n_elements == 0:
            self.constant = self._eval_thetas(np.zeros(s.n_elements), amp=0.0)
        elif strat.kind == "coherent":
            self.constant = self._coherent_rates(quantize_bits=strat.bits)
        elif strat.kind == "imperfect_csi":
            cfg = ImperfectCsiConfig(epsilon=strat.epsilon)
            thetas = np.empty((s.n_users, s.n_elements))
            for k in range(s.n_users):
                pv = imperfect_csi_phases(
                    self.streams.csi_est, self.h1, self.h2[k], self.hd[k], cfg, alpha=s.alpha
                )
                if strat.bits is not None:
                    pv = quantize_phases(pv, strat.bits)
                thetas[k] = pv.thetas
            self.constant = self._eval_own_configs(thetas)
        elif strat.kind == "eigen_deterministic":
            corr = np.eye(s.n_elements, dtype=complex)
            pv = deterministic_eigen_design(scaling.r_bar(self.h1, corr), alpha=s.alpha)
            if strat.bits is not None:
                pv = quantize_phases(pv, strat.bits)
            self.constant = self._eval_thetas(pv.thetas, amp=s.alpha)
        elif strat.kind == "stationary_random" and s.stationary_mode == "user_configs":
            thetas = coherent_theta_matrix(self.h1, self.h2, self.hd)
            if strat.bits is not None:
                thetas = _quantize_rows(thetas, strat.bits)
            self.user_configs = thetas
            self.snr_table, self.rate_table = _theta_to_rates(
                thetas, self.casc, self.direct, s.alpha, self.snr_scale
            )
            self.config_idx = self.streams.phase.integers(s.n_users, size=s.frames)
        # uniform_random and virtual-mode stationary_random draw per block.

    def _eval_thetas(self, thetas, amp):
        """SNRs/rates of every user under one shared phase vector."""
        w = amp * np.exp(1j * thetas)
        h_eff = self.casc @ w + self.direct
        return _rates_from_channels(h_eff, self.snr_scale)

    def _eval_own_configs(self, thetas_per_user):
        """SNRs/rates when the surface applies each user's own row."""
        w = self.scenario.alpha * np.exp(1j * thetas_per_user)
        h_eff = np.sum(w * self.casc, axis=1) + self.direct
        return _rates_from_channels(h_eff, self.snr_scale)

    def _coherent_rates(self, quantize_bits=None):
        s = self.scenario
        if quantize_bits is None:
            amp = s.alpha * np.sum(np.abs(self.casc), axis=1) + np.abs(self.direct)
            snrs = self.snr_scale * amp ** 2
            return snrs, np.log2(1.0 + snrs)
        thetas = _quantize_rows(coherent_theta_matrix(self.h1, self.h2, self.hd), quantize_bits)
        return self._eval_own_configs(thetas)

    def blocks(self):
        """Yield (frame_offset, snrs_block, rates_block) covering all frames."""
        s = self.scenario
        n_frames = s.frames
        if self.constant is not None:
            snrs, rates = self.constant
            for f0 in range(0, n_frames, BLOCK):
                b = min(BLOCK, n_frames - f0)
                yield (
                    f0,
                    np.broadcast_to(snrs, (b, s.n_users)),
                    np.broadcast_to(rates, (b, s.n_users)),
                )
            return
        if self.rate_table is not None:
            for f0 in range(0, n_frames, BLOCK):
                idx = self.config_idx[f0 : f0 + BLOCK]
                yield f0, self.snr_table[idx], self.rate_table[idx]
            return
        strat = s.strategy
        for f0 in range(0, n_frames, BLOCK):
            b = min(BLOCK, n_frames - f0)
            thetas = self._draw_thetas(b)
            if strat.bits is not None:
                thetas = _quantize_rows(thetas, strat.bits)
            snrs, rates = _theta_to_rates(thetas, self.casc, self.direct, s.alpha, self.snr_scale)
            yield f0, snrs, rates

    def _draw_thetas(self, b: int) -> np.ndarray:
        s = self.scenario
        rng = self.streams.phase
        if s.strategy.kind == "uniform_random":
            return rng.uniform(0.0, TWO_PI, size=(b, s.n_elements))
        # stationary_random in virtual mode: apply the configuration of a
        # fresh fading state drawn from the same law as the user channels,
        # realizing the stationary configuration distribution.
        n = s.n_elements
        z = rng.standard_normal((b, 2 * n + 2))
        h2v = (z[:, :n] + 1j * z[:, n : 2 * n]) / np.sqrt(2.0)
        hdv = (z[:, -2] + 1j * z[:, -1]) / np.sqrt(2.0)
        thetas = np.angle(hdv)[:, None] - np.angle(self.h1)[None, :] - np.angle(h2v)
        return np.mod(thetas, TWO_PI)


class _FastPlan:
    """Per-frame rate provider with channels redrawn every frame."""

    def __init__(self, scenario: Scenario, streams: RngStreams, h1, beta_r, beta_d):
        self.scenario = scenario
        self.streams = streams
        self.snr_scale = scenario.power_w / scenario.noise_var_w
        self.h1 = h1
        self.sqrt_beta_r = np.sqrt(beta_r)
        self.sqrt_beta_d = np.sqrt(beta_d)
        n = scenario.n_elements
        if n > 0:
            corr = exp_correlation(n, scenario.fading.correlation_eta)
            sqrt_corr = psd_sqrt(corr)
            self.apply_corr = not np.allclose(sqrt_corr, np.eye(n), atol=1e-14)
            self.sqrt_corr_t = sqrt_corr.T
        else:
            corr = np.zeros((0, 0), dtype=complex)
            self.apply_corr = False
            self.sqrt_corr_t = corr
        self.fixed_w = None
        strat = scenario.strategy
        if strat.kind == "eigen_deterministic":
            pv = deterministic_eigen_design(scaling.r_bar(h1, corr), alpha=scenario.alpha)
            if strat.bits is not None:
                pv = quantize_phases(pv, strat.bits)
            self.fixed_w = pv.values() * h1

    def blocks(self):
        s = self.scenario
        n, k = s.n_elements, s.n_users
        strat = s.strategy
        rng_ch = self.streams.fast_channel
        for f0 in range(0, s.frames, BLOCK):
            b = min(BLOCK, s.frames - f0)
            if n > 0:
                zr = rng_ch.standard_normal((b, k, n))
                zi = rng_ch.standard_normal((b, k, n))
                h2 = (zr + 1j * zi) / np.sqrt(2.0)
                if self.apply_corr:
                    h2 = h2 @ self.sqrt_corr_t
            else:
                h2 = np.zeros((b, k, 0), dtype=complex)
            zdr = rng_ch.standard_normal((b, k))
            zdi = rng_ch.standard_normal((b, k))
            hd = (zdr + 1j * zdi) / np.sqrt(2.0)
            direct = self.sqrt_beta_d[None, :] * hd

            if strat.kind == "off" or n == 0:
                h_eff = direct
            elif strat.kind == "coherent":
                amp = s.alpha * self.sqrt_beta_r[None, :] * np.sum(
                    np.abs(self.h1)[None, None, :] * np.abs(h2), axis=2
                ) + np.abs(direct)
                snrs = self.snr_scale * amp ** 2
                yield f0, snrs, np.log2(1.0 + snrs)
                continue
            elif strat.kind == "eigen_deterministic":
                casc = np.einsum("n,bkn->bk", self.fixed_w, h2)
                h_eff = self.sqrt_beta_r[None, :] * casc + direct
            else:  # uniform_random
                thetas = self.streams.phase.uniform(0.0, TWO_PI, size=(b, n))
                if strat.bits is not None:
                    thetas = _quantize_rows(thetas, strat.bits)
                w = s.alpha * np.exp(1j * thetas) * self.h1[None, :]
                casc = np.einsum("bn,bkn->bk", w, h2)
                h_eff = self.sqrt_beta_r[None, :] * casc + direct
            snrs, rates = _rates_from_channels(h_eff, self.snr_scale)
            yield f0, snrs, rates


def run_frames(scenario: Scenario, streams, record_snrs: bool | None = None) -> RunResult:
    """Simulate one seeded run of the configured number of frames.

    ``streams`` may be an RngStreams bundle, a numpy Generator, or an int
    seed.  Output is bit-identical for identical (scenario, streams).  For
    infinite-window accounting the reported sum-rate is the exact sum of the
    per-user throughput trackers.
    """
    streams = _resolve_streams(streams)
    if record_snrs is None:
        record_snrs = scenario.record_snrs
    k, n, n_frames = scenario.n_users, scenario.n_elements, scenario.frames

    positions, beta_r, beta_d = _user_link_budget(scenario, streams)
    h1 = (
        los_bs_irs(n, scenario.spacing, _los_angle(scenario))
        if n > 0
        else np.zeros(0, dtype=complex)
    )

    bf_rates = None
    direct_rates = None
    snr_scale = scenario.power_w / scenario.noise_var_w
    if scenario.fading.kind == "slow":
        h2, hd = _draw_slow_channels(streams.slow_channel, k, n)
        plan = _SlowPlan(scenario, streams, h1, h2, hd, beta_r, beta_d)
        bf_rates = np.array(
            [
                scaling.coherent_rate(
                    h1,
                    h2[i],
                    hd[i],
                    scaling.LinkBudget(
                        power_p=scenario.power_w,
                        noise_var=scenario.noise_var_w,
                        alpha=scenario.alpha,
                        beta_r=beta_r[i],
                        beta_d=beta_d[i],
                    ),
                )
                for i in range(k)
            ]
        )
        direct_rates = np.log2(1.0 + snr_scale * beta_d * np.abs(hd) ** 2)
    else:
        plan = _FastPlan(scenario, streams, h1, beta_r, beta_d)

    sched = np.empty(n_frames, dtype=np.int64)
    out_rates = np.empty(n_frames, dtype=float)
    all_snrs = np.empty((n_frames, k), dtype=float) if record_snrs else None

    kind = scenario.scheduler.kind
    if kind == "genie":
        throughputs = _drive_genie(plan, sched, out_rates, all_snrs)
    elif kind == "os":
        throughputs = _drive_os(plan, sched, out_rates, all_snrs)
    else:
        t_c = scenario.scheduler.t_c if kind == "pf" else None
        throughputs = _drive_pf(plan, t_c, sched, out_rates, all_snrs)

    if kind == "pf":
        sum_rate = float(out_rates.mean())
    else:
        # Infinite-window trackers partition the empirical mean exactly.
        sum_rate = float(np.sum(throughputs))

    return RunResult(
        sum_rate=sum_rate,
        throughputs=throughputs,
        trace=FrameTrace(scheduled=sched, rates=out_rates, snrs=all_snrs),
        positions=positions,
        beta_r=beta_r,
        beta_d=beta_d,
        bf_rates=bf_rates,
        direct_rates=direct_rates,
    )


def _drive_os(plan, sched, out_rates, all_snrs) -> np.ndarray:
    n_frames = sched.size
    totals = None
    for f0, snrs, rates in plan.blocks():
        if totals is None:
            totals = np.zeros(rates.shape[1])
        pick = np.argmax(snrs, axis=1)
        rows = np.arange(pick.size)
        r = rates[rows, pick]
        sched[f0 : f0 + pick.size] = pick
        out_rates[f0 : f0 + pick.size] = r
        if all_snrs is not None:
            all_snrs[f0 : f0 + pick.size] = snrs
        np.add.at(totals, pick, r)
    return totals / n_frames


def _drive_pf(plan, t_c, sched, out_rates, all_snrs) -> np.ndarray:
    thr = None
    t = 0
    for f0, snrs, rates in plan.blocks():
        if thr is None:
            init = 0.0 if t_c is None else PF_INIT
            thr = np.full(rates.shape[1], init, dtype=float)
        if all_snrs is not None:
            all_snrs[f0 : f0 + rates.shape[0]] = snrs
        for i in range(rates.shape[0]):
            r = rates[i]
            pick = int(np.argmax(_pf_metric(r, thr)))
            rate = r[pick]
            t += 1
            if t_c is None:
                thr *= (t - 1) / t
                thr[pick] += rate / t
            else:
                thr *= 1.0 - 1.0 / t_c
                thr[pick] += rate / t_c
            sched[t - 1] = pick
            out_rates[t - 1] = rate
    return thr


def _drive_genie(plan, sched, out_rates, all_snrs) -> np.ndarray:
    if not isinstance(plan, _SlowPlan) or plan.user_configs is None:
        raise ValueError("genie scheduling needs stationary_random phases in user_configs mode")
    configs = plan.user_configs
    k = configs.shape[0]
    # Users whose configurations coincide share their matched frames.
    groups = [
        tuple(i for i in range(k) if _phase_match(configs[j], configs[i], GENIE_PHASE_TOL))
        for j in range(k)
    ]
    rr = RoundRobinState()
    thr = np.zeros(k)
    t = 0
    for f0, snrs, rates in plan.blocks():
        idx = plan.config_idx[f0 : f0 + rates.shape[0]]
        if all_snrs is not None:
            all_snrs[f0 : f0 + rates.shape[0]] = snrs
        for i in range(rates.shape[0]):
            pick = rr.take(groups[int(idx[i])])
            rate = rates[i, pick]
            t += 1
            thr *= (t - 1) / t
            thr[pick] += rate / t
            sched[t - 1] = pick
            out_rates[t - 1] = rate
    return thr
