"""Static figures: phase portraits, r-rho profiles and volume deficits.

Everything renders through matplotlib's non-interactive Agg backend and is
saved as SVG 1.1.  The SVG writer is pinned (fixed hash salt, no date stamp)
so re-running a command reproduces the file byte for byte.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .lomse import LomseParams  # noqa: E402
from .orbit import CrossingEvent, GraphCurve, Orbit  # noqa: E402
from .phase import vector_field  # noqa: E402

__all__ = ["figure_style", "phase_portrait", "profile_plot", "deficit_plot", "save_svg"]

_STYLE = {
    "svg.hashsalt": "locones",
    "svg.fonttype": "path",
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "lines.linewidth": 1.4,
    "figure.dpi": 100,
}


def figure_style():
    """Context manager applying the package's rcParams."""
    return plt.rc_context(_STYLE)


def phase_portrait(params: LomseParams, orbit: Orbit | None = None, ax=None, density: float = 1.2):
    """Streamlines of the reduced field with fixed points and the cone line.

    The distinguished orbit (and its mirror image under the symmetry
    ``s -> -s``) is overlaid when given.
    """
    if ax is None:
        _, ax = plt.subplots(figsize=(6.0, 4.8))
    phi0 = params.phi0
    xr = 1.8 * phi0
    yr = 1.5 * phi0
    if orbit is not None:
        yr = max(yr, 1.15 * float(np.max(np.abs(orbit.psi))))
    x = np.linspace(-xr, xr, 121)
    y = np.linspace(-yr, yr, 101)
    X, Y = np.meshgrid(x, y)
    U, V = vector_field((X, Y), params)
    speed = np.hypot(U, V)
    ax.streamplot(X, Y, U, V, density=density, color=np.log1p(speed), cmap="Greys",
                  linewidth=0.6, arrowsize=0.7)
    ax.axvline(phi0, color="tab:blue", ls="--", lw=0.9, label=r"$\varphi=\varphi_0$")
    if orbit is not None:
        ax.plot(orbit.phi, orbit.psi, color="tab:red", label="orbit from origin")
        ax.plot(-orbit.phi, -orbit.psi, color="tab:red", ls=":", lw=1.0)
    ax.plot([0.0], [0.0], "ks", ms=5)
    ax.plot([phi0, -phi0], [0.0, 0.0], "o", color="tab:blue", ms=5)
    ax.annotate("P", (phi0, 0.0), xytext=(5, 6), textcoords="offset points")
    ax.annotate("-P", (-phi0, 0.0), xytext=(5, 6), textcoords="offset points")
    ax.set_xlim(-xr, xr)
    ax.set_ylim(-yr, yr)
    ax.set_xlabel(r"$\varphi=\rho/r$")
    ax.set_ylabel(r"$\psi=\varphi_t$")
    ax.set_title(f"{params.label()}  $\\varphi_0$={phi0:.6g}")
    ax.legend(loc="lower left")
    return ax


def profile_plot(params: LomseParams, curve: GraphCurve, events: list[CrossingEvent] | None = None,
                 r_max: float | None = None, ax=None):
    """The solution curve and the cone ray in the ``r``-``rho`` plane."""
    if ax is None:
        _, ax = plt.subplots(figsize=(6.0, 4.2))
    events = events or []
    if r_max is None:
        if len(events) >= 2:
            r_max = 1.3 * events[1].r
        elif events:
            r_max = 3.0 * events[0].r
        else:
            near = np.nonzero(curve.rho / curve.r > 0.98 * params.phi0)[0]
            r_max = 2.0 * curve.r[near[0]] if near.size else curve.r[-1]
    keep = curve.r <= r_max
    ax.plot(curve.r[keep], curve.rho[keep], color="tab:red", label="minimal graph profile")
    ax.plot([0.0, r_max], [0.0, params.phi0 * r_max], color="tab:blue", ls="--", label="cone ray")
    shown = [e for e in events if e.r <= r_max]
    if shown:
        ax.plot([e.r for e in shown], [params.phi0 * e.r for e in shown], "o", color="k", ms=4,
                label="crossings")
    ax.set_xlim(0.0, r_max)
    ax.set_ylim(bottom=0.0)
    ax.set_xlabel(r"$r$")
    ax.set_ylabel(r"$\rho$")
    ax.set_title(params.label())
    ax.legend(loc="upper left")
    return ax


def deficit_plot(params: LomseParams, deficits, ax=None):
    """Cone volume minus rescaled-graph volume against the crossing index."""
    if ax is None:
        _, ax = plt.subplots(figsize=(5.0, 3.6))
    idx = np.arange(1, len(deficits) + 1)
    ax.semilogy(idx, [d.value for d in deficits], "o-", color="tab:red", label="deficit")
    ax.semilogy(idx, [max(d.noise, 1e-300) for d in deficits], "x:", color="0.5", label="noise bound")
    ax.set_xticks(idx)
    ax.set_xlabel("crossing index i")
    ax.set_ylabel("vol(cone) - vol(rescaled graph)")
    ax.set_title(params.label())
    ax.legend()
    return ax


def save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
