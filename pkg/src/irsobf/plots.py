"""Render result rows to matplotlib figures next to the delimited output."""

import itertools
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_vs_users", "render_vs_eta", "render_report"]

_MARKERS = ("o", "s", "^", "v", "D", "x", "*", "+")


def _series_key(row):
    return (row.strategy, row.n_elements)


def _grouped(rows, axis):
    """Split rows into {(strategy, N): sorted rows} along the sweep axis."""
    groups = {}
    for row in rows:
        groups.setdefault(_series_key(row), []).append(row)
    for key in groups:
        groups[key].sort(key=axis)
    return groups


def _plot_series(ax, groups, axis):
    markers = itertools.cycle(_MARKERS)
    for (strategy, n), series in sorted(groups.items()):
        x = [axis(r) for r in series]
        y = [r.sum_rate for r in series]
        err = [r.stderr for r in series]
        marker = next(markers)
        line = ax.errorbar(
            x, y, yerr=err, marker=marker, ms=4, lw=1.2, capsize=2,
            label=f"{strategy}, N={n}",
        )
        refs = [(axis(r), r.analytic_ref) for r in series if r.analytic_ref is not None]
        if refs:
            ax.plot(
                [p[0] for p in refs], [p[1] for p in refs],
                ls="--", lw=1.0, color=line.lines[0].get_color(),
                label=f"{strategy}, N={n} (closed form)",
            )
    ax.set_ylabel("average sum-rate (bps/Hz)")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=7)


def render_vs_users(rows, path) -> Path:
    """Sum-rate against the user count, log-scaled x axis."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _plot_series(ax, _grouped(rows, lambda r: r.n_users), lambda r: r.n_users)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("number of users K")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_vs_eta(rows, path) -> Path:
    """Sum-rate against the spatial correlation coefficient."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    _plot_series(ax, _grouped(rows, lambda r: r.eta), lambda r: r.eta)
    ax.set_xlabel("correlation coefficient eta")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_bars(rows, path) -> Path:
    """Fallback for a single point per scenario: labeled bars."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = [r.scenario_id for r in rows]
    ax.bar(range(len(rows)), [r.sum_rate for r in rows], yerr=[r.stderr for r in rows])
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("average sum-rate (bps/Hz)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_report(rows, out_base) -> list:
    """Render the figures implied by the sweep axes present in ``rows``.

    ``out_base`` is the output stem; figures land at <stem>_vs_K.png,
    <stem>_vs_eta.png, or <stem>_bars.png.  Returns the written paths.
    """
    out_base = Path(out_base)
    written = []
    k_values = {r.n_users for r in rows}
    eta_values = {r.eta for r in rows if r.eta is not None}
    if len(k_values) > 1:
        written.append(render_vs_users(rows, out_base.with_name(out_base.name + "_vs_K.png")))
    if len(eta_values) > 1:
        eta_rows = [r for r in rows if r.eta is not None]
        written.append(render_vs_eta(eta_rows, out_base.with_name(out_base.name + "_vs_eta.png")))
    if not written:
        written.append(render_bars(rows, out_base.with_name(out_base.name + "_bars.png")))
    return written
