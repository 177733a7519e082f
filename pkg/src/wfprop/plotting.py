"""PNG figures written next to the CSV/JSON reports (``--figures``).

Figures are a convenience view of data that is always also written as CSV;
nothing downstream reads them.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (5.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_decay_rates(est, path, predicted=None, title: str = "") -> Path:
    """Fitted ``A_hat`` against direction angle (d = 1), singular directions marked."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        th = np.array([p.theta for p in est.profiles])
        ang = np.degrees(np.arctan2(th[:, 1], th[:, 0]))
        A = np.array([p.A_hat if p.reliable else np.nan for p in est.profiles])
        order = np.argsort(ang)
        ax.plot(ang[order], A[order], lw=1.0, color="0.2", label=r"$\hat A(\theta)$")
        sing = est.singular
        if sing.any():
            ax.plot(ang[sing], A[sing], "o", ms=3, color="tab:red", label="singular")
        A_min = est.params.get("A_min")
        if A_min is not None:
            ax.axhline(A_min, ls="--", lw=0.8, color="tab:blue", label=r"$A_{\min}$")
        if predicted is not None:
            for m in predicted.members:
                if m.dim == 1:
                    v = m.B[:, 0]
                    a = np.degrees(np.arctan2(v[1], v[0]))
                    for b in (a, a + 180 if a < 0 else a - 180):
                        ax.axvline(b, lw=0.8, color="tab:green", alpha=0.7)
        ax.set_xlabel("direction angle in the (x, xi) plane [deg]")
        ax.set_ylabel("fitted decay rate")
        ax.set_xlim(-180, 180)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        return _save(fig, path)


def plot_field(f, path, title: str = "") -> Path:
    """Modulus (and real part) of a sampled d = 1 field."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if f.d == 1:
            ax.plot(f.axis, np.abs(f.values), lw=1.0, label="|u|")
            ax.plot(f.axis, f.values.real, lw=0.6, alpha=0.6, label="Re u")
            ax.set_xlabel("x")
            ax.legend(loc="best")
        else:
            im = ax.imshow(np.abs(f.values).T, origin="lower", extent=[-f.L, f.L, -f.L, f.L])
            fig.colorbar(im, ax=ax, label="|u|")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_cones(cones: dict, path, title: str = "") -> Path:
    """Line members of d = 1 exact cones drawn through the origin."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 4.0))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for k, (name, cone) in enumerate(cones.items()):
            c = colors[k % len(colors)]
            for j, m in enumerate(cone.members):
                lab = name if j == 0 else None
                if m.dim == 1:
                    v = m.B[:, 0]
                    ax.plot([-v[0], v[0]], [-v[1], v[1]], color=c, lw=2 - 0.4 * k, label=lab)
                elif m.dim >= 2:
                    ax.fill([-1, 1, 1, -1], [-1, -1, 1, 1], color=c, alpha=0.15, label=lab)
        ax.set_xlim(-1.1, 1.1)
        ax.set_ylim(-1.1, 1.1)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("xi")
        if title:
            ax.set_title(title)
        if cones:
            ax.legend(loc="upper left")
        return _save(fig, path)
