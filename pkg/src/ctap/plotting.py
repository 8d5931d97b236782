"""PNG figures written next to the CSV tables of each command."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps repeated renders byte-stable
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def pulse_sequence(path: Path, t, d_lm, d_mr, j0, j1, theta, flow0) -> Path:
    fig, ax = plt.subplots(4, 1, figsize=(6, 9), sharex=True)
    ax[0].plot(t, d_lm, label=r"$d_{LM}$")
    ax[0].plot(t, d_mr, "--", label=r"$d_{MR}$")
    ax[0].set_ylabel("distance")
    ax[0].legend()
    ax[1].semilogy(t, j0[0], label=r"$J_{LM}$, n=0")
    ax[1].semilogy(t, j0[1], "--", label=r"$J_{MR}$, n=0")
    ax[1].semilogy(t, j1[0], lw=0.8, label=r"$J_{LM}$, n=1")
    ax[1].semilogy(t, j1[1], "--", lw=0.8, label=r"$J_{MR}$, n=1")
    ax[1].set_ylabel("tunneling rate")
    ax[1].legend(fontsize=7)
    ax[2].plot(t, theta)
    ax[2].set_ylabel(r"$\theta_{mix}$")
    ax[2].set_yticks([0, np.pi / 4, np.pi / 2], ["0", r"$\pi/4$", r"$\pi/2$"])
    for k in range(3):
        ax[3].plot(t, flow0[:, k])
    ax[3].set_ylabel("eigenvalues (n=0)")
    ax[3].set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)


def site_energies(path: Path, t, e0, e1) -> Path:
    fig, ax = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax[0].plot(t, e0, label=r"$\epsilon_0$")
    ax[0].plot(t, e1, label=r"$\epsilon_1$")
    ax[0].set_ylabel("energy")
    ax[0].legend()
    ax[1].plot(t, np.asarray(e0) - np.asarray(e1))
    ax[1].axhline(-1.0, color="0.6", lw=0.8)
    ax[1].set_ylabel(r"$\epsilon_0-\epsilon_1$")
    ax[1].set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)


def sweep_tf(path: Path, t_f, lz, predicted, pop_r) -> Path:
    fig, ax = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax[0].plot(t_f, lz, "o-", ms=3, label="grid")
    ax[0].plot(t_f, predicted, "--", label="three-level")
    ax[0].set_ylabel(r"$\langle L_z\rangle$")
    ax[0].set_ylim(-1.1, 1.1)
    ax[0].legend()
    ax[1].plot(t_f, pop_r, "o-", ms=3)
    ax[1].set_ylabel("right population")
    ax[1].set_xlabel(r"$t_f$")
    fig.tight_layout()
    return _save(fig, path)


def sweep_family(path: Path, curves: dict[str, tuple[np.ndarray, np.ndarray]], xlabel: str = r"$t_f$") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in curves.items():
        ax.plot(x, y, label=label)
    ax.set_ylabel(r"$\langle L_z\rangle$")
    ax.set_xlabel(xlabel)
    ax.set_ylim(-1.1, 1.1)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def time_series(path: Path, t, lz, pops) -> Path:
    fig, ax = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax[0].plot(t, lz)
    ax[0].set_ylabel(r"$\langle L_z\rangle$")
    for row, lab in zip(pops, ("left", "middle", "right")):
        ax[1].plot(t, row, label=lab)
    ax[1].set_ylabel("population")
    ax[1].set_xlabel("t")
    ax[1].legend()
    fig.tight_layout()
    return _save(fig, path)


def field_panels(path: Path, x, y, density, phase, title: str = "") -> Path:
    fig, ax = plt.subplots(1, 2, figsize=(8, 3.4))
    ext = [y[0], y[-1], x[0], x[-1]]
    ax[0].imshow(density, origin="lower", extent=ext, aspect="auto")
    ax[0].set_title("density")
    ax[1].imshow(phase, origin="lower", extent=ext, aspect="auto", cmap="twilight", vmin=-np.pi, vmax=np.pi)
    ax[1].set_title("phase")
    for a in ax:
        a.set_xlabel("y")
        a.set_ylabel("x")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)
