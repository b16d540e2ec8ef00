"""Convergence-rate experiments: config, synthetic data, sweeps, slope fits.

The sweep pipeline is deliberately flat: one target per sweep, one dataset
per (n, seed) cell, a regularization schedule tied to the manifold
dimension, and CSV rows as the only inter-stage format.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimator import fit_from_features
from .filters import parse_filter
from .heat_kernel import HeatKernelParams, basis_for_kernel
from .manifolds import Manifold, SpectralBasis, get_manifold, sample_uniform
from .power_space import (
    NoiseModel,
    PowerCoefficients,
    TargetSpec,
    error_norm,
    make_source_target,
    project_estimate,
)

RATE_SWEEP_COLUMNS = (
    "manifold",
    "m",
    "t",
    "filter",
    "beta",
    "gamma",
    "R",
    "sigma",
    "n",
    "seed",
    "lambda",
    "error_sq",
    "status",
    "runtime_ms",
)

_INT_COLUMNS = frozenset({"m", "n", "seed"})
_FLOAT_COLUMNS = frozenset(
    {"t", "beta", "gamma", "R", "sigma", "lambda", "error_sq", "runtime_ms"}
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a convergence sweep needs, in plain scalars.

    The smoothness/error exponents must satisfy 0 <= gamma < beta <= 1: the
    estimator is fit once per cell and its error is measured in the
    gamma-power norm against a target of beta-power radius `radius`.
    """

    manifold: str = "circle"
    t: float = 0.5
    filter: str = "tikhonov"
    beta: float = 0.5
    gamma: float = 0.0
    radius: float = 1.0
    sigma: float = 0.5
    n_grid: tuple[int, ...] = (256, 512, 1024, 2048, 4096, 8192)
    seeds: int = 20
    c: float = 1.0
    target_modes: int = 50
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        get_manifold(self.manifold)
        parse_filter(self.filter)
        if not (self.t > 0 and np.isfinite(self.t)):
            raise ValueError(f"t must be positive and finite, got {self.t!r}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta!r}")
        if not 0 <= self.gamma < self.beta:
            raise ValueError(
                f"gamma must satisfy 0 <= gamma < beta, got gamma={self.gamma!r} beta={self.beta!r}"
            )
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius!r}")
        if not (self.sigma >= 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be nonnegative and finite, got {self.sigma!r}")
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if len(grid) == 0:
            raise ValueError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"n_grid must be strictly ascending, got {grid}")
        if grid[0] < 3:
            raise ValueError(f"n_grid entries must be at least 3, got {grid[0]}")
        if self.seeds < 1:
            raise ValueError(f"seeds must be at least 1, got {self.seeds!r}")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"c must be positive and finite, got {self.c!r}")
        if self.target_modes < 1:
            raise ValueError(f"target_modes must be at least 1, got {self.target_modes!r}")

    @property
    def dim(self) -> int:
        return get_manifold(self.manifold).dim


@dataclass(frozen=True)
class RateFit:
    """Log-log regression summary of a sweep: error^2 against the rate abscissa."""

    slope: float
    intercept: float
    r_squared: float
    cells: int


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


def target_rate_exponent(beta: float, gamma: float) -> float:
    """Exponent of (log n)^(m/2)/n in the squared-error bound."""
    return (beta - gamma) / beta


def lambda_schedule(n, m: int, beta: float, c: float = 1.0) -> float:
    """Regularization level c * ((log n)^(m/2) / n)^(1/beta) for sample size n."""
    if not n >= 3:
        raise ValueError(f"n must be at least 3 for a usable log n, got {n!r}")
    if not 0 < beta <= 1:
        raise ValueError(f"beta must be in (0, 1], got {beta!r}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        raise ValueError(f"m must be a positive integer, got {m!r}")
    return c * (math.log(n) ** (m / 2.0) / n) ** (1.0 / beta)


def generate_dataset(
    target: PowerCoefficients,
    manifold: Manifold,
    basis: SpectralBasis,
    n: int,
    noise: NoiseModel,
    seed,
) -> Dataset:
    """Draw x uniformly and observe the target through centered Gaussian noise.

    The seed covers both the design points and the noise; it is unrelated
    to the seed that generated the target, so resampling data never
    perturbs the regression function.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n!r}")
    if target.size > basis.size:
        raise ValueError(
            f"target uses {target.size} modes but the basis holds {basis.size}"
        )
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss_points, ss_noise = ss.spawn(2)
    x = sample_uniform(manifold, n, seed=np.random.default_rng(ss_points))
    y = basis.evaluate(x)[:, : target.size] @ target.values
    scale = noise.effective_sigma
    if scale > 0:
        y = y + scale * np.random.default_rng(ss_noise).standard_normal(n)
    return Dataset(x, y)


def _sweep_cell(config, man, params, basis, family, target, noise, n, seed_index):
    start = time.perf_counter()
    row = {
        "manifold": config.manifold,
        "m": man.dim,
        "t": config.t,
        "filter": family.label,
        "beta": config.beta,
        "gamma": config.gamma,
        "R": config.radius,
        "sigma": noise.effective_sigma,
        "n": n,
        "seed": seed_index,
    }
    try:
        lam = lambda_schedule(n, man.dim, config.beta, config.c)
        data = generate_dataset(
            target,
            man,
            basis,
            n,
            noise,
            seed=np.random.SeedSequence((config.seed, n, seed_index)),
        )
        estimate = fit_from_features(basis, params, data.points, data.values, family, lam)
        err = error_norm(project_estimate(estimate, basis, params), target, config.gamma)
        row.update({"lambda": lam, "error_sq": err**2, "status": "ok"})
    except Exception as exc:
        row.setdefault("lambda", float("nan"))
        row.update({"error_sq": float("nan"), "status": f"error: {exc}"})
    row["runtime_ms"] = round(1000.0 * (time.perf_counter() - start), 3)
    return row


def run_convergence_sweep(config: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Run every (n, seed) cell of the sweep and return sorted CSV-ready rows.

    One target per sweep, built from config.seed; each cell gets its own
    data seed derived from (config.seed, n, seed index).  A failed cell
    becomes a row with an error status instead of stopping the sweep.
    """
    man = get_manifold(config.manifold)
    params = HeatKernelParams(t=config.t)
    basis = basis_for_kernel(man, params, min_size=config.target_modes)
    family = parse_filter(config.filter)
    target = make_source_target(
        basis, params, TargetSpec(config.beta, config.radius, config.target_modes, config.seed)
    )
    noise = NoiseModel(config.sigma, max(config.sigma, config.radius))
    cells = [(n, r) for n in config.n_grid for r in range(config.seeds)]

    def job(cell):
        n, r = cell
        return _sweep_cell(config, man, params, basis, family, target, noise, n, r)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(job, cells))
    else:
        rows = [job(cell) for cell in cells]
    rows.sort(key=lambda row: (row["n"], row["seed"]))
    return rows


def fit_rate(rows) -> RateFit:
    """Least-squares slope of log median error^2 against log((log n)^(m/2)/n)."""
    ok = [row for row in rows if row["status"] == "ok"]
    if not ok:
        raise ValueError("no successful cells to fit")
    dims = {row["m"] for row in ok}
    if len(dims) != 1:
        raise ValueError(f"rows mix manifold dimensions {sorted(dims)}")
    m = dims.pop()
    by_n: dict[int, list[float]] = {}
    for row in ok:
        by_n.setdefault(row["n"], []).append(row["error_sq"])
    if len(by_n) < 3:
        raise ValueError(f"need at least 3 distinct n levels, got {len(by_n)}")
    ns = sorted(by_n)
    x = np.array([math.log(math.log(n) ** (m / 2.0) / n) for n in ns])
    y = np.array([math.log(float(np.median(by_n[n]))) for n in ns])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 - float(resid @ resid) / total if total > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(r_squared), len(ns))


def _format_cell(value) -> str:
    # repr of a float is the shortest string that round-trips, always with
    # a '.' separator; everything else is already plain text
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rate_csv(rows, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RATE_SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[col]) for col in RATE_SWEEP_COLUMNS])


def read_rate_csv(path) -> list[dict]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RATE_SWEEP_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}: {reader.fieldnames}")
        rows = []
        for record in reader:
            row = {}
            for col in RATE_SWEEP_COLUMNS:
                raw = record[col]
                if col in _INT_COLUMNS:
                    row[col] = int(raw)
                elif col in _FLOAT_COLUMNS:
                    row[col] = float(raw)
                else:
                    row[col] = raw
            rows.append(row)
    return rows


def plot_rate_svg(rows, path) -> None:
    """Log-log chart of per-cell and median squared errors against n."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [row for row in rows if row["status"] == "ok" and row["error_sq"] > 0]
    if not ok:
        raise ValueError("no successful cells to plot")
    ns = sorted({row["n"] for row in ok})
    medians = [
        float(np.median([row["error_sq"] for row in ok if row["n"] == n])) for n in ns
    ]
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot(
        [row["n"] for row in ok],
        [row["error_sq"] for row in ok],
        ".",
        ms=4,
        alpha=0.35,
        color="0.5",
    )
    ax.plot(ns, medians, "o-", color="tab:blue", label="median over seeds")
    try:
        fit = fit_rate(ok)
        ax.set_title(f"slope {fit.slope:.3f}, r^2 {fit.r_squared:.3f}", fontsize=10)
    except ValueError:
        pass
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("squared error")
    ax.legend(fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)


_CONFIG_CASTS = {
    "manifold": str,
    "t": float,
    "filter": str,
    "beta": float,
    "gamma": float,
    "radius": float,
    "sigma": float,
    "n_grid": lambda text: tuple(int(part) for part in text.replace(" ", "").split(",") if part),
    "seeds": int,
    "c": float,
    "target_modes": int,
    "seed": int,
    "output": str,
}


def load_config_file(path) -> dict:
    """Parse a key = value config file into ExperimentConfig keyword arguments.

    Blank lines and #-comments are skipped; keys must be ExperimentConfig
    field names; n_grid is a comma-separated integer list.
    """
    values = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, text = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            if key not in _CONFIG_CASTS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _CONFIG_CASTS[key](text.strip())
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values
