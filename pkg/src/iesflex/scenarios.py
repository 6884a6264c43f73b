"""
Wind scenarios, representative days and forecast-error moments.

Hour indices are 0-based throughout: ``t = 0`` is the first hour of a
representative day.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import KMeans

from .exceptions import (ConfigurationError, DegenerateMomentsError,
                         DimensionError, IngestionError)

logger = logging.getLogger(__name__)

WIND_COLUMNS = ("scenario", "day", "hour", "plant", "MW")
DEMAND_COLUMNS = ("day", "hour", "electric_MW", "heat_MW")


@dataclass(frozen=True)
class ScenarioSet:
    """Wind power samples indexed ``[scenario, day, hour, plant]`` in MW."""

    wind: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.wind, dtype=float)
        if w.ndim != 4:
            raise DimensionError(f"wind tensor must be 4-D, got shape {w.shape}")
        if w.shape[0] == 0:
            raise IngestionError("no scenarios")
        if w.shape[3] < 1:
            raise DimensionError("need at least one wind plant")
        if not np.all(np.isfinite(w)):
            raise IngestionError("non-finite wind power")
        if np.any(w < 0):
            s, r, t, z = np.argwhere(w < 0)[0]
            raise IngestionError(f"negative wind power at scenario={s}, day={r}, hour={t}, plant={z}")
        object.__setattr__(self, "wind", w)

    @property
    def n_scenarios(self):
        return self.wind.shape[0]

    @property
    def n_days(self):
        return self.wind.shape[1]

    @property
    def n_hours(self):
        return self.wind.shape[2]

    @property
    def n_plants(self):
        return self.wind.shape[3]

    @property
    def shape(self):
        return self.wind.shape

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(WIND_COLUMNS)
            for idx in np.ndindex(*self.wind.shape):
                writer.writerow([*idx, repr(float(self.wind[idx]))])


@dataclass(frozen=True)
class RepresentativeDaySet:
    """Hourly electric and heat demand of each representative day (MW)."""

    electric: np.ndarray  # (R, T)
    heat: np.ndarray  # (R, T)
    weights: np.ndarray  # (R,) days per year
    labels: np.ndarray | None = None
    inertia: float = float("nan")
    centroids: np.ndarray | None = None  # (R, channels, T)

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.electric, dtype=float))
        q = np.atleast_2d(np.asarray(self.heat, dtype=float))
        k = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if e.shape != q.shape or e.shape[0] != k.size:
            raise DimensionError(
                f"demand shapes {e.shape}, {q.shape} disagree with {k.size} weights")
        if e.shape[1] < 2:
            raise DimensionError("a representative day needs at least two hours")
        if np.any(k <= 0):
            raise ConfigurationError("day weights must be positive", "weights")
        if np.any(e < 0) or np.any(q < 0):
            raise ConfigurationError("demands must be non-negative", "demand")
        object.__setattr__(self, "electric", e)
        object.__setattr__(self, "heat", q)
        object.__setattr__(self, "weights", k)

    @property
    def n_days(self):
        return self.electric.shape[0]

    @property
    def n_hours(self):
        return self.electric.shape[1]

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["day", "weight", "hour", "electric_MW", "heat_MW"])
            for r in range(self.n_days):
                for t in range(self.n_hours):
                    writer.writerow([r, repr(float(self.weights[r])), t,
                                     repr(float(self.electric[r, t])),
                                     repr(float(self.heat[r, t]))])


@dataclass(frozen=True)
class WindMoments:
    """Forecast mean and error covariances per (day, hour).

    ``cross[r, t]`` is the lag-one block ``E[w_{t-1} w_t^T]``; ``cross[r, 0]``
    is zero.
    """

    mean: np.ndarray  # (R, T, Z)
    cov: np.ndarray  # (R, T, Z, Z)
    cross: np.ndarray  # (R, T, Z, Z)
    n_samples: int = 0
    _sqrt_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        R, T, Z = self.mean.shape
        if self.cov.shape != (R, T, Z, Z) or self.cross.shape != (R, T, Z, Z):
            raise DimensionError("covariance blocks do not match the mean shape")

    @property
    def n_days(self):
        return self.mean.shape[0]

    @property
    def n_hours(self):
        return self.mean.shape[1]

    @property
    def n_plants(self):
        return self.mean.shape[2]

    @property
    def error_mean(self):
        return np.zeros_like(self.mean)

    def aggregate_std(self, r, t):
        """Standard deviation of the aggregate error ``1^T w``."""
        return float(np.sqrt(max(self.cov[r, t].sum(), 0.0)))

    def sqrt_cov(self, r, t):
        key = ("single", r, t)
        if key not in self._sqrt_cache:
            self._sqrt_cache[key] = psd_sqrt(self.cov[r, t])
        return self._sqrt_cache[key]

    def sqrt_joint(self, r, t):
        key = ("joint", r, t)
        if key not in self._sqrt_cache:
            self._sqrt_cache[key] = psd_sqrt(joint_covariance(self, r, t))
        return self._sqrt_cache[key]

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["day", "hour", "row", "col", "mean_MW", "cov_MW2", "cross_MW2"])
            R, T, Z = self.mean.shape
            for r in range(R):
                for t in range(T):
                    for i in range(Z):
                        for j in range(Z):
                            writer.writerow([r, t, i, j, repr(float(self.mean[r, t, i])),
                                             repr(float(self.cov[r, t, i, j])),
                                             repr(float(self.cross[r, t, i, j]))])


def psd_repair(matrix):
    """Symmetrise and clamp negative eigenvalues to zero.

    Returns ``(repaired, clamped)`` where ``clamped`` tells whether any
    eigenvalue had to be raised.
    """
    m = np.asarray(matrix, dtype=float)
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    if vals.min() >= 0:
        return m, False
    vals = np.clip(vals, 0.0, None)
    out = (vecs * vals) @ vecs.T
    return 0.5 * (out + out.T), True


def psd_sqrt(matrix):
    """Symmetric square root of a PSD matrix, eigenvalues clamped at zero."""
    m = np.asarray(matrix, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return 0.5 * (root + root.T)


def _read_rows(path, columns):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestionError(f"cannot open {path}: {exc}") from exc
    with fh:
        lines = [(n, line) for n, line in enumerate(fh, start=1)
                 if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise IngestionError(f"{path}: no scenarios (empty file)")
    reader = csv.reader([line for _, line in lines])
    rows = list(reader)
    header = [c.strip() for c in rows[0]]
    if tuple(header) != tuple(columns):
        raise IngestionError(f"{path} line {lines[0][0]}: expected header {','.join(columns)}")
    out = []
    for (lineno, _), row in zip(lines[1:], rows[1:]):
        if len(row) != len(columns):
            raise IngestionError(
                f"{path} line {lineno}: expected {len(columns)} columns, got {len(row)}")
        out.append((lineno, [c.strip() for c in row]))
    if not out:
        raise IngestionError(f"{path}: no scenarios")
    return out


def _parse_index(value, path, lineno, column):
    try:
        return int(value)
    except ValueError:
        raise IngestionError(f"{path} line {lineno}, column {column}: bad index {value!r}") from None


def _parse_value(value, path, lineno, column):
    try:
        v = float(value)
    except ValueError:
        raise IngestionError(f"{path} line {lineno}, column {column}: bad number {value!r}") from None
    if not np.isfinite(v):
        raise IngestionError(f"{path} line {lineno}, column {column}: non-finite value")
    return v


def ingest_scenarios(path):
    """Read a long-format wind scenario CSV into a :class:`ScenarioSet`.

    Columns are ``scenario, day, hour, plant, MW``; every combination of the
    observed index values must appear exactly once.
    """
    rows = _read_rows(path, WIND_COLUMNS)
    keys, values = [], []
    for lineno, row in rows:
        idx = tuple(_parse_index(row[c], path, lineno, WIND_COLUMNS[c]) for c in range(4))
        v = _parse_value(row[4], path, lineno, "MW")
        if v < 0:
            raise IngestionError(
                f"{path} line {lineno}: negative power {v} at scenario={idx[0]}, "
                f"day={idx[1]}, hour={idx[2]}, plant={idx[3]}")
        keys.append(idx)
        values.append(v)
    axes = [sorted({k[a] for k in keys}) for a in range(4)]
    pos = [{v: i for i, v in enumerate(ax)} for ax in axes]
    shape = tuple(len(ax) for ax in axes)
    wind = np.full(shape, np.nan)
    for (lineno, _), k, v in zip(rows, keys, values):
        ix = tuple(pos[a][k[a]] for a in range(4))
        if not np.isnan(wind[ix]):
            raise IngestionError(f"{path} line {lineno}: duplicate entry {k}")
        wind[ix] = v
    if np.isnan(wind).any():
        miss = np.argwhere(np.isnan(wind))[0]
        coord = dict(zip(WIND_COLUMNS[:4], (axes[a][miss[a]] for a in range(4))))
        raise IngestionError(f"{path}: missing entry {coord}")
    logger.info("ingested wind scenarios with shape %s", shape)
    return ScenarioSet(wind)


def ingest_demand(path):
    """Read a ``day, hour, electric_MW, heat_MW`` CSV into two (days, hours) arrays."""
    rows = _read_rows(path, DEMAND_COLUMNS)
    keys, vals = [], []
    for lineno, row in rows:
        d = _parse_index(row[0], path, lineno, "day")
        h = _parse_index(row[1], path, lineno, "hour")
        e = _parse_value(row[2], path, lineno, "electric_MW")
        q = _parse_value(row[3], path, lineno, "heat_MW")
        if e < 0 or q < 0:
            raise IngestionError(f"{path} line {lineno}: negative demand at day={d}, hour={h}")
        keys.append((d, h))
        vals.append((e, q))
    days = sorted({k[0] for k in keys})
    hours = sorted({k[1] for k in keys})
    dpos = {d: i for i, d in enumerate(days)}
    hpos = {h: i for i, h in enumerate(hours)}
    out = np.full((2, len(days), len(hours)), np.nan)
    for (lineno, _), (d, h), (e, q) in zip(rows, keys, vals):
        if not np.isnan(out[0, dpos[d], hpos[h]]):
            raise IngestionError(f"{path} line {lineno}: duplicate entry day={d}, hour={h}")
        out[:, dpos[d], hpos[h]] = (e, q)
    if np.isnan(out).any():
        _, i, j = np.argwhere(np.isnan(out))[0]
        raise IngestionError(f"{path}: missing entry day={days[i]}, hour={hours[j]}")
    return out[0], out[1]


def write_demand_csv(path, electric, heat, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(DEMAND_COLUMNS)
        for d in range(electric.shape[0]):
            for h in range(electric.shape[1]):
                writer.writerow([d, h, repr(float(electric[d, h])), repr(float(heat[d, h]))])


def _channel_scale(profiles):
    scale = np.abs(profiles).max(axis=(0, 2))
    scale[scale == 0] = 1.0
    return scale


def cluster_representative_days(daily_profiles, k=10, seed=0, n_init=50):
    """Group daily profiles into ``k`` representative days with K-means.

    Parameters
    ----------
    daily_profiles : array of shape (n_days, n_channels, n_hours)
        Channel 0 is electric demand and channel 1 heat demand; further
        channels (e.g. wind forecast) only influence the grouping.  Every
        channel is divided by its maximum before clustering.
    k : int
        Number of representative days.
    seed : int
        Seed for the k-means++ initialisation of all restarts.

    Returns
    -------
    RepresentativeDaySet
        Centroids in original units with weights equal to cluster sizes.
    """
    X = np.asarray(daily_profiles, dtype=float)
    if X.ndim != 3 or X.shape[1] < 2:
        raise DimensionError("daily_profiles must have shape (days, channels>=2, hours)")
    n_days = X.shape[0]
    if not 1 <= k <= n_days:
        raise ConfigurationError(f"k={k} must lie in [1, {n_days}]", "k")
    scale = _channel_scale(X)
    flat = (X / scale[None, :, None]).reshape(n_days, -1)
    km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, algorithm="lloyd",
                tol=0.0, max_iter=1000, random_state=seed)
    labels = km.fit_predict(flat)
    # member means in original units (exactly the rescaled centroids)
    cent = np.stack([X[labels == c].mean(axis=0) for c in range(k)])
    weights = np.bincount(labels, minlength=k).astype(float)
    return RepresentativeDaySet(cent[:, 0], cent[:, 1], weights, labels=labels,
                                inertia=float(km.inertia_), centroids=cent)


def lloyd_assign(daily_profiles, centroids):
    """Nearest-centroid labels on the same normalisation used for clustering."""
    X = np.asarray(daily_profiles, dtype=float)
    scale = _channel_scale(X)
    flat = (X / scale[None, :, None]).reshape(X.shape[0], -1)
    cflat = (np.asarray(centroids) / scale[None, :, None]).reshape(len(centroids), -1)
    d2 = ((flat[:, None, :] - cflat[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def estimate_moments(scenarios):
    """Sample mean, error covariance and lag-one cross-covariance.

    The covariance estimators divide by ``S - 1``.
    """
    w = scenarios.wind
    S = w.shape[0]
    if S < 2:
        raise DegenerateMomentsError("at least two scenarios are needed for an unbiased covariance")
    mean = w.mean(axis=0)
    err = w - mean
    cov = np.einsum("srti,srtj->rtij", err, err) / (S - 1)
    cross = np.zeros_like(cov)
    cross[:, 1:] = np.einsum("srti,srtj->rtij", err[:, :, :-1], err[:, :, 1:]) / (S - 1)
    return WindMoments(mean, cov, cross, n_samples=S)


def forecast_errors(scenarios, moments):
    return scenarios.wind - moments.mean[None]


def joint_covariance(moments, r, t, return_info=False):
    """Covariance of the stacked errors ``[w_{t-1}; w_t]`` (size 2Z).

    The lag-one block enters transposed below the diagonal so the matrix is
    symmetric by construction; the result is then passed through
    :func:`psd_repair`.
    """
    if t < 1 or t >= moments.n_hours:
        raise IndexError(f"joint covariance needs 1 <= t < {moments.n_hours}, got t={t}")
    U = moments.cross[r, t]
    top = np.hstack([moments.cov[r, t - 1], U])
    bottom = np.hstack([U.T, moments.cov[r, t]])
    joint, clamped = psd_repair(np.vstack([top, bottom]))
    if return_info:
        return joint, clamped
    return joint


def bootstrap_resample(scenarios, n, seed=0):
    """Draw ``n`` whole scenarios with replacement."""
    if n <= 0:
        raise ConfigurationError("sample count must be positive", "n")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, scenarios.n_scenarios, size=n)
    return ScenarioSet(scenarios.wind[idx])
