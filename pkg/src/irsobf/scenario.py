"""Experiment description and flat key = value config parsing.

A config document is a flat list of ``key = value`` lines ('#' starts a
comment).  The sweepable keys (n_users, n_elements, correlation_eta,
strategy) accept comma-separated lists and expand to the Cartesian product
of scenarios.  Unknown keys are rejected, and every parse produces an
echo of the fully resolved configuration including defaults.
"""

import re
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .channel import FadingRegime

__all__ = [
    "StrategySpec",
    "SchedulerSpec",
    "Scenario",
    "ConfigError",
    "parse_config",
    "parse_scenario",
    "load_preset",
    "preset_text",
    "render_effective_config",
]

STRATEGY_KINDS = (
    "coherent",
    "stationary_random",
    "uniform_random",
    "eigen_deterministic",
    "imperfect_csi",
    "off",
)

DEFAULT_FRAMES = {"slow": 100_000, "fast": 10_000}


class ConfigError(ValueError):
    """Invalid or missing configuration value."""


@dataclass(frozen=True)
class StrategySpec:
    """Phase-control strategy selection with optional parameters."""

    kind: str
    epsilon: float | None = None
    bits: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(
                f"unknown strategy {self.kind!r}; choose one of {', '.join(STRATEGY_KINDS)}"
            )
        if self.kind == "imperfect_csi" and self.epsilon is None:
            raise ConfigError("imperfect_csi needs an epsilon, e.g. imperfect_csi(0.2)")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.bits is not None and self.bits < 1:
            raise ConfigError(f"quantization_bits must be >= 1, got {self.bits}")

    @property
    def label(self) -> str:
        if self.kind == "imperfect_csi":
            base = f"imperfect_csi({self.epsilon:g})"
        elif self.kind == "stationary_random" and self.bits is not None:
            return f"quantized({self.bits})"
        else:
            base = self.kind
        if self.bits is not None:
            return f"{base}+q{self.bits}"
        return base


@dataclass(frozen=True)
class SchedulerSpec:
    """User-selection rule: os, pf(t_c), pf_inf, or genie."""

    kind: str
    t_c: int | None = None

    def __post_init__(self):
        if self.kind not in ("os", "pf", "pf_inf", "genie"):
            raise ConfigError(f"unknown scheduler {self.kind!r}")
        if self.kind == "pf":
            if self.t_c is None or self.t_c < 1:
                raise ConfigError("pf needs a positive window, e.g. pf(100)")
        elif self.t_c is not None:
            raise ConfigError(f"scheduler {self.kind!r} takes no window parameter")

    @property
    def label(self) -> str:
        return f"pf({self.t_c})" if self.kind == "pf" else self.kind


@dataclass(frozen=True)
class Scenario:
    """One fully resolved experiment point."""

    scenario_id: str
    n_users: int
    n_elements: int
    frames: int
    trials: int
    seed: int
    fading: FadingRegime
    strategy: StrategySpec
    scheduler: SchedulerSpec
    power_w: float = 1.0
    noise_dbm: float = -80.0
    alpha: float = 1.0
    spacing: float = 0.5
    bs_position: tuple = (0.0, 0.0)
    irs_position: tuple = (0.0, 50.0)
    user_region: tuple = (-30.0, 30.0, 50.0, 130.0)
    user_positions: tuple | None = None
    exponents: tuple = (2.2, 2.8, 3.5)
    reference_loss_db: float = -30.0
    penetration_db: float = 10.0
    element_gain_dbi: float = 5.0
    fixed_beta: tuple | None = None
    stationary_mode: str = "virtual"
    frame_symbols: int = 1
    record_snrs: bool = False

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigError(f"n_users must be >= 1, got {self.n_users}")
        if self.n_elements < 0:
            raise ConfigError(f"n_elements must be >= 0, got {self.n_elements}")
        if self.frames < 1 or self.trials < 1:
            raise ConfigError("frames and trials must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.power_w <= 0:
            raise ConfigError(f"power_w must be positive, got {self.power_w}")
        if self.spacing <= 0:
            raise ConfigError(f"spacing must be positive, got {self.spacing}")
        if self.stationary_mode not in ("virtual", "user_configs"):
            raise ConfigError(
                f"stationary_mode must be 'virtual' or 'user_configs', got {self.stationary_mode!r}"
            )
        if self.n_elements == 0 and self.strategy.kind != "off":
            raise ConfigError("n_elements = 0 requires strategy = off")
        if self.fading.kind == "fast" and self.strategy.kind in (
            "stationary_random",
            "imperfect_csi",
        ):
            raise ConfigError(
                f"strategy {self.strategy.kind!r} assumes frozen user channels; use fading = slow"
            )
        if self.scheduler.kind == "genie":
            if self.strategy.kind != "stationary_random" or self.stationary_mode != "user_configs":
                raise ConfigError(
                    "the genie scheduler requires strategy = stationary_random "
                    "with stationary_mode = user_configs"
                )
        if self.fixed_beta is not None:
            br, bd = self.fixed_beta
            if br < 0 or bd <= 0:
                raise ConfigError(f"fixed beta values must be positive, got {self.fixed_beta}")
        if self.user_positions is not None and len(self.user_positions) != self.n_users:
            raise ConfigError(
                f"user_positions has {len(self.user_positions)} entries for n_users={self.n_users}"
            )
        if self.frame_symbols < 1:
            raise ConfigError(f"frame_symbols must be >= 1, got {self.frame_symbols}")

    @property
    def noise_var_w(self) -> float:
        return 10.0 ** (self.noise_dbm / 10.0) * 1e-3

    @property
    def eta(self) -> float | None:
        return self.fading.correlation_eta if self.fading.kind == "fast" else None


def parse_strategy(token: str) -> StrategySpec:
    """Parse a strategy token such as coherent, imperfect_csi(0.2), quantized(2)."""
    token = token.strip()
    m = re.fullmatch(r"([a-z_]+)(?:\(([^)]*)\))?", token)
    if not m:
        raise ConfigError(f"cannot parse strategy {token!r}")
    name, arg = m.group(1), m.group(2)
    if name == "quantized":
        if arg is None:
            raise ConfigError("quantized needs a bit count, e.g. quantized(2)")
        return StrategySpec(kind="stationary_random", bits=_to_int("quantized bits", arg))
    if name == "imperfect_csi":
        if arg is None:
            raise ConfigError("imperfect_csi needs an epsilon, e.g. imperfect_csi(0.2)")
        return StrategySpec(kind="imperfect_csi", epsilon=_to_float("epsilon", arg))
    if arg is not None:
        raise ConfigError(f"strategy {name!r} takes no parameter")
    return StrategySpec(kind=name)


def parse_scheduler(token: str) -> SchedulerSpec:
    token = token.strip()
    m = re.fullmatch(r"([a-z_]+)(?:\(([^)]*)\))?", token)
    if not m:
        raise ConfigError(f"cannot parse scheduler {token!r}")
    name, arg = m.group(1), m.group(2)
    if arg is not None:
        return SchedulerSpec(kind=name, t_c=_to_int("scheduler window", arg))
    return SchedulerSpec(kind=name)


def _to_int(key: str, raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _to_float(key: str, raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _to_pair(key: str, raw: str) -> tuple:
    parts = [p for p in raw.split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected 'x, y', got {raw!r}")
    return tuple(_to_float(key, p) for p in parts)


def _to_quad(key: str, raw: str) -> tuple:
    parts = [p for p in raw.split(",") if p.strip()]
    if len(parts) != 4:
        raise ConfigError(f"{key}: expected 'xmin, xmax, ymin, ymax', got {raw!r}")
    return tuple(_to_float(key, p) for p in parts)


# key -> (converter, default).  Sweepable keys are handled separately.
_SCALAR_KEYS = {
    "frames": (_to_int, None),
    "trials": (_to_int, 10),
    "seed": (_to_int, 0),
    "fading": (lambda k, v: v.strip(), "slow"),
    "scheduler": (lambda k, v: v.strip(), "pf_inf"),
    "power_w": (_to_float, 1.0),
    "noise_dbm": (_to_float, -80.0),
    "alpha": (_to_float, 1.0),
    "spacing": (_to_float, 0.5),
    "bs_position": (_to_pair, (0.0, 0.0)),
    "irs_position": (_to_pair, (0.0, 50.0)),
    "user_region": (_to_quad, (-30.0, 30.0, 50.0, 130.0)),
    "exponent_bs_irs": (_to_float, 2.2),
    "exponent_irs_user": (_to_float, 2.8),
    "exponent_direct": (_to_float, 3.5),
    "reference_loss_db": (_to_float, -30.0),
    "penetration_db": (_to_float, 10.0),
    "element_gain_dbi": (_to_float, 5.0),
    "quantization_bits": (_to_int, None),
    "epsilon": (_to_float, None),
    "fixed_beta_r": (_to_float, None),
    "fixed_beta_d": (_to_float, None),
    "stationary_mode": (lambda k, v: v.strip(), "virtual"),
    "frame_symbols": (_to_int, 1),
    "name": (lambda k, v: v.strip(), ""),
}

_SWEEP_KEYS = ("n_users", "n_elements", "correlation_eta", "strategy")
_REQUIRED_KEYS = ("n_users", "n_elements", "strategy")


def _parse_lines(text: str) -> dict:
    entries = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for key {key!r}")
        entries[key] = value
    return entries


def parse_config(text: str, overrides: dict | None = None):
    """Parse a config document into (scenarios, resolved-config mapping).

    ``overrides`` entries replace raw values before validation (used for
    CLI flags such as --trials).  The returned mapping holds every resolved
    key, defaults included, and is the reproducibility echo for the run.
    """
    entries = _parse_lines(text)
    if overrides:
        entries.update({k: str(v) for k, v in overrides.items()})

    known = set(_SCALAR_KEYS) | set(_SWEEP_KEYS)
    for key in entries:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"missing required config key {key!r}")

    scalars = {}
    for key, (conv, default) in _SCALAR_KEYS.items():
        scalars[key] = conv(key, entries[key]) if key in entries else default

    fading_kind = scalars["fading"]
    if fading_kind not in ("slow", "fast"):
        raise ConfigError(f"fading must be 'slow' or 'fast', got {fading_kind!r}")
    if scalars["frames"] is None:
        scalars["frames"] = DEFAULT_FRAMES[fading_kind]

    k_list = [_to_int("n_users", v) for v in entries["n_users"].split(",")]
    n_list = [_to_int("n_elements", v) for v in entries["n_elements"].split(",")]
    strat_tokens = [v.strip() for v in entries["strategy"].split(",")]
    if scalars["epsilon"] is not None:
        # A bare imperfect_csi picks up the scenario-level epsilon.
        strat_tokens = [
            f"imperfect_csi({scalars['epsilon']:g})" if t == "imperfect_csi" else t
            for t in strat_tokens
        ]
    strat_list = [parse_strategy(v) for v in strat_tokens]
    if "correlation_eta" in entries:
        if fading_kind != "fast":
            raise ConfigError("correlation_eta applies to fast fading only")
        eta_list = [_to_float("correlation_eta", v) for v in entries["correlation_eta"].split(",")]
    else:
        eta_list = [0.0]

    scheduler = parse_scheduler(scalars["scheduler"])
    if (scalars["fixed_beta_r"] is None) != (scalars["fixed_beta_d"] is None):
        raise ConfigError("fixed_beta_r and fixed_beta_d must be given together")
    fixed_beta = None
    if scalars["fixed_beta_r"] is not None:
        fixed_beta = (scalars["fixed_beta_r"], scalars["fixed_beta_d"])

    prefix = f"{scalars['name']}/" if scalars["name"] else ""
    scenarios = []
    for strat in strat_list:
        strat = _apply_strategy_defaults(strat, scalars)
        for n in n_list:
            for eta in eta_list:
                for k in k_list:
                    sid = f"{prefix}{strat.label}/N{n}/K{k}"
                    if fading_kind == "fast":
                        sid += f"/eta{eta:g}"
                    scenarios.append(
                        Scenario(
                            scenario_id=sid,
                            n_users=k,
                            n_elements=n,
                            frames=scalars["frames"],
                            trials=scalars["trials"],
                            seed=scalars["seed"],
                            fading=FadingRegime(
                                kind=fading_kind,
                                correlation_eta=eta if fading_kind == "fast" else 0.0,
                            ),
                            strategy=strat,
                            scheduler=scheduler,
                            power_w=scalars["power_w"],
                            noise_dbm=scalars["noise_dbm"],
                            alpha=scalars["alpha"],
                            spacing=scalars["spacing"],
                            bs_position=scalars["bs_position"],
                            irs_position=scalars["irs_position"],
                            user_region=scalars["user_region"],
                            exponents=(
                                scalars["exponent_bs_irs"],
                                scalars["exponent_irs_user"],
                                scalars["exponent_direct"],
                            ),
                            reference_loss_db=scalars["reference_loss_db"],
                            penetration_db=scalars["penetration_db"],
                            element_gain_dbi=scalars["element_gain_dbi"],
                            fixed_beta=fixed_beta,
                            stationary_mode=scalars["stationary_mode"],
                            frame_symbols=scalars["frame_symbols"],
                        )
                    )

    resolved = dict(scalars)
    resolved["n_users"] = ", ".join(str(v) for v in k_list)
    resolved["n_elements"] = ", ".join(str(v) for v in n_list)
    resolved["strategy"] = ", ".join(s.label for s in strat_list)
    resolved["scheduler"] = scheduler.label
    if fading_kind == "fast":
        resolved["correlation_eta"] = ", ".join(f"{v:g}" for v in eta_list)
    return scenarios, resolved


def parse_scenario(text: str, overrides: dict | None = None) -> Scenario:
    """Parse a config that must resolve to exactly one scenario."""
    scenarios, _ = parse_config(text, overrides=overrides)
    if len(scenarios) != 1:
        raise ConfigError(f"config expands to {len(scenarios)} scenarios, expected exactly 1")
    return scenarios[0]


def render_effective_config(resolved: dict) -> str:
    """Render the resolved configuration back as key = value text."""
    lines = []
    for key, value in sorted(resolved.items()):
        if value is None or value == "":
            continue
        if isinstance(value, tuple):
            value = ", ".join(f"{v:g}" for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def preset_text(preset: str) -> str:
    """Return the raw config text of a bundled preset."""
    path = resources.files("irsobf.presets").joinpath(f"{preset}.cfg")
    if not path.is_file():
        raise ConfigError(f"unknown preset {preset!r}")
    return path.read_text()


def load_preset(preset: str, overrides: dict | None = None):
    """Parse a bundled preset into (scenarios, resolved-config mapping)."""
    return parse_config(preset_text(preset), overrides=overrides)


def _apply_strategy_defaults(strat: StrategySpec, scalars: dict) -> StrategySpec:
    if strat.bits is None and scalars["quantization_bits"] is not None:
        strat = replace(strat, bits=scalars["quantization_bits"])
    return strat


def draw_user_positions(rng: np.random.Generator, scenario: Scenario) -> np.ndarray:
    """User drop: explicit positions when given, else uniform over the region.

    Positions are drawn one user at a time so the first users of a larger
    population coincide with a smaller one under the same stream.
    """
    if scenario.user_positions is not None:
        return np.asarray(scenario.user_positions, dtype=float)
    xmin, xmax, ymin, ymax = scenario.user_region
    pos = np.empty((scenario.n_users, 2), dtype=float)
    for k in range(scenario.n_users):
        pos[k, 0] = rng.uniform(xmin, xmax)
        pos[k, 1] = rng.uniform(ymin, ymax)
    return pos
