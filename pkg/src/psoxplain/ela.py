"""Exploratory landscape analysis features.

Five families are supported: meta-model fits (``ela_meta``), the value
distribution (``ela_distr``), nearest-better clustering (``nbc``),
dispersion (``disp``) and information content of a fitness sequence
(``ic``).  Every function takes a :class:`~psoxplain.sampling.SampleSet`
(or anything with ``X`` and ``y``) and returns a plain dict keyed by the
canonical feature name.

Problems that make a feature undefined (rank-deficient designs, constant
objective values, ...) produce ``NaN`` and an :class:`ElaWarning`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial.distance import cdist, pdist

FEATURE_NAMES = (
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.cor",
    "nbc.nb_fitness.cor",
    "nbc.dist_ratio.coeff_var",
    "disp.diff_mean_02",
    "disp.diff_mean_05",
    "disp.diff_mean_10",
    "disp.diff_mean_25",
    "disp.ratio_mean_02",
    "disp.ratio_mean_10",
    "ic.h_max",
    "ic.eps_s",
    "ic.eps_max",
    "ic.eps_ratio",
    "ic.m0",
)

DISPERSION_QUANTILES = (0.02, 0.05, 0.10, 0.25)
EPSILON_GRID = np.concatenate(([0.0], 10.0 ** np.linspace(-5.0, 15.0, 1001)))


class ElaWarning(UserWarning):
    pass


def _warn(msg: str) -> None:
    warnings.warn(msg, ElaWarning, stacklevel=3)


def _xy(sample):
    X = np.asarray(sample.X, dtype=float)
    y = np.asarray(sample.y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X, y


@dataclass
class ElaVector:
    values: dict[str, float]
    fid: int = 0
    iid: int = 0
    dim: int = 0
    sample_seed: int = 0
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def as_array(self) -> np.ndarray:
        return np.array([self.values.get(k, np.nan) for k in FEATURE_NAMES])


# --------------------------------------------------------------------------
# meta-model fits


def _adjusted_r2(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    n, m = X.shape
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise np.linalg.LinAlgError("rank-deficient design")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return 1.0 - (1.0 - r2) * (n - 1) / (n - m - 1), coef[1:]


def _abs_ratio(coef: np.ndarray) -> float:
    a = np.abs(coef)
    lo = a.min()
    return float(a.max() / lo) if lo > 0 else math.inf


def ela_meta(sample) -> dict[str, float]:
    X, y = _xy(sample)
    n, d = X.shape
    if n <= 2 * d + 2:
        raise ValueError(f"ela_meta needs more than {2 * d + 2} points, got {n}")
    out = {}
    try:
        adj, slopes = _adjusted_r2(X, y)
        out["ela_meta.lin_simple.adj_r2"] = adj
        out["ela_meta.lin_simple.coef.max_by_min"] = _abs_ratio(slopes)
    except np.linalg.LinAlgError:
        _warn("ela_meta: rank-deficient linear design")
        out["ela_meta.lin_simple.adj_r2"] = np.nan
        out["ela_meta.lin_simple.coef.max_by_min"] = np.nan
    try:
        adj, coef = _adjusted_r2(np.hstack([X, X * X]), y)
        out["ela_meta.quad_simple.adj_r2"] = adj
        out["ela_meta.quad_simple.cond"] = _abs_ratio(coef[d:])
    except np.linalg.LinAlgError:
        _warn("ela_meta: rank-deficient quadratic design")
        out["ela_meta.quad_simple.adj_r2"] = np.nan
        out["ela_meta.quad_simple.cond"] = np.nan
    return out


# --------------------------------------------------------------------------
# value distribution


def kde_peak_count(y: np.ndarray, grid_size: int = 512, min_mass: float = 0.01) -> int:
    """Modes of a Gaussian KDE of ``y`` holding at least ``min_mass`` of the total mass."""
    n = y.size
    sigma = float(np.std(y, ddof=1))
    h = 1.06 * sigma * n ** (-0.2)
    if h <= 0:
        return 1
    grid = np.linspace(y.min() - 3 * h, y.max() + 3 * h, grid_size)
    dens = np.zeros(grid_size)
    for chunk in np.array_split(y, max(1, n // 2000)):
        dens += np.exp(-0.5 * ((grid[:, None] - chunk[None, :]) / h) ** 2).sum(axis=1)
    left = np.r_[-np.inf, dens[:-1]]
    right = np.r_[dens[1:], -np.inf]
    peaks = np.flatnonzero((dens > left) & (dens >= right))
    if peaks.size <= 1:
        return int(peaks.size)
    # split the grid at the lowest point between neighbouring maxima
    cuts = [0]
    for a, b in zip(peaks[:-1], peaks[1:]):
        cuts.append(a + int(np.argmin(dens[a : b + 1])))
    cuts.append(grid_size - 1)
    total = trapezoid(dens, grid)
    masses = [trapezoid(dens[lo : hi + 1], grid[lo : hi + 1]) for lo, hi in zip(cuts[:-1], cuts[1:])]
    return int(sum(m >= min_mass * total for m in masses))


def ela_distr(sample) -> dict[str, float]:
    _, y = _xy(sample)
    if y.size < 4:
        raise ValueError("ela_distr needs at least 4 points")
    c = y - y.mean()
    m2 = float(np.mean(c**2))
    if m2 > 0:
        skew = float(np.mean(c**3)) / m2**1.5
        kurt = float(np.mean(c**4)) / m2**2 - 3.0
    else:
        skew = kurt = 0.0
    return {
        "ela_distr.skewness": skew,
        "ela_distr.kurtosis": kurt,
        "ela_distr.number_of_peaks": float(kde_peak_count(y)),
    }


# --------------------------------------------------------------------------
# nearest-better clustering


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; identical vectors count as perfectly correlated."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2:
        return np.nan
    if np.array_equal(a, b):
        return 1.0
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt(float(da @ da) * float(db @ db))
    if den == 0:
        return np.nan
    return float(da @ db) / den


def nearest_better(X: np.ndarray, y: np.ndarray):
    """Nearest-neighbour distances, nearest-better distances and targets.

    Points without a strictly better point get ``nb = NaN`` and target ``-1``.
    """
    D = cdist(X, X)
    n = len(y)
    np.fill_diagonal(D, np.inf)
    nn = D.min(axis=1)
    better = y[None, :] < y[:, None]
    Db = np.where(better, D, np.inf)
    target = np.argmin(Db, axis=1)
    nb = Db[np.arange(n), target]
    undefined = ~np.isfinite(nb)
    nb[undefined] = np.nan
    target[undefined] = -1
    return nn, nb, target


def nbc(sample) -> dict[str, float]:
    X, y = _xy(sample)
    n = y.size
    if n < 5:
        raise ValueError("nbc needs at least 5 points")
    keys = ("nbc.nn_nb.mean_ratio", "nbc.nn_nb.sd_ratio", "nbc.nn_nb.cor",
            "nbc.nb_fitness.cor", "nbc.dist_ratio.coeff_var")
    nn, nb, target = nearest_better(X, y)
    ok = target >= 0
    if ok.sum() < 2:
        _warn("nbc: fewer than two points have a strictly better neighbour")
        return dict.fromkeys(keys, np.nan)
    nn_d, nb_d = nn[ok], nb[ok]
    sd_nb = float(np.std(nb_d, ddof=1))
    # coincident points have nn = 0, their ratio is undefined
    pos = nn_d > 0
    ratio = nb_d[pos] / nn_d[pos]
    indeg = np.bincount(target[ok], minlength=n).astype(float)
    out = {
        "nbc.nn_nb.mean_ratio": float(nn_d.mean() / nb_d.mean()),
        "nbc.nn_nb.sd_ratio": float(np.std(nn_d, ddof=1) / sd_nb) if sd_nb > 0 else np.nan,
        "nbc.nn_nb.cor": pearson(nn_d, nb_d),
        "nbc.nb_fitness.cor": pearson(y, indeg),
        "nbc.dist_ratio.coeff_var": (
            float(np.std(ratio, ddof=1) / ratio.mean()) if ratio.size >= 2 else np.nan
        ),
    }
    for k, v in out.items():
        if not np.isfinite(v):
            _warn(f"nbc: {k} undefined for this sample")
    return out


# --------------------------------------------------------------------------
# dispersion


def _mean_pairwise(X: np.ndarray) -> float:
    return float(pdist(X).mean()) if len(X) > 1 else 0.0


def dispersion(sample, quantiles=DISPERSION_QUANTILES) -> dict[str, float]:
    X, y = _xy(sample)
    n = y.size
    if n < 50:
        raise ValueError("dispersion needs at least 50 points")
    order = np.argsort(y, kind="stable")
    full = _mean_pairwise(X)
    out = {}
    for q in quantiles:
        m = math.ceil(round(q * n, 9))
        sub = _mean_pairwise(X[order[:m]])
        tag = f"{round(q * 100):02d}"
        out[f"disp.diff_mean_{tag}"] = sub - full
        out[f"disp.ratio_mean_{tag}"] = sub / full if full > 0 else np.nan
    return out


# --------------------------------------------------------------------------
# information content


def nn_tour(X: np.ndarray, start: int) -> np.ndarray:
    """Greedy nearest-neighbour chain through all rows of ``X``."""
    n = len(X)
    visited = np.zeros(n, dtype=bool)
    tour = np.empty(n, dtype=int)
    cur = start
    for i in range(n):
        tour[i] = cur
        visited[cur] = True
        if i == n - 1:
            break
        d = np.sqrt(((X - X[cur]) ** 2).sum(axis=1))
        d[visited] = np.inf
        cur = int(np.argmin(d))
    return tour


def tour_slopes(X: np.ndarray, y: np.ndarray, tour_seed: int) -> np.ndarray:
    # canonical row order keeps the tour independent of input order
    canon = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[canon], y[canon]
    start = int(np.random.default_rng(tour_seed).integers(len(y)))
    tour = nn_tour(X, start)
    dx = np.sqrt((np.diff(X[tour], axis=0) ** 2).sum(axis=1))
    dy = np.diff(y[tour])
    keep = dx > 0
    return dy[keep] / dx[keep]


def symbols(slopes: np.ndarray, eps: float) -> np.ndarray:
    return np.where(slopes > eps, 1, np.where(slopes < -eps, -1, 0))


def entropy(sym: np.ndarray) -> float:
    """Entropy (base 6) of ordered pairs of unequal consecutive symbols."""
    if sym.size < 2:
        return 0.0
    a, b = sym[:-1], sym[1:]
    total = a.size
    h = 0.0
    for s in (-1, 0, 1):
        for t in (-1, 0, 1):
            if s == t:
                continue
            c = int(np.sum((a == s) & (b == t)))
            if c:
                p = c / total
                h -= p * math.log(p, 6)
    return h


def partial_information(sym: np.ndarray) -> float:
    nz = sym[sym != 0]
    if nz.size == 0:
        return 0.0
    runs = 1 + int(np.sum(nz[1:] != nz[:-1]))
    return runs / sym.size


def ic_curves(slopes: np.ndarray, grid=EPSILON_GRID) -> tuple[np.ndarray, np.ndarray]:
    H = np.empty(len(grid))
    M = np.empty(len(grid))
    for i, eps in enumerate(grid):
        sym = symbols(slopes, eps)
        H[i] = entropy(sym)
        M[i] = partial_information(sym)
    return H, M


def info_content(sample, tour_seed: int = 0) -> dict[str, float]:
    X, y = _xy(sample)
    keys = ("ic.h_max", "ic.eps_s", "ic.eps_max", "ic.eps_ratio", "ic.m0")
    if y.size < 10:
        raise ValueError("info_content needs at least 10 points")
    if len(np.unique(X, axis=0)) < 2:
        raise ValueError("info_content needs two distinct points")
    slopes = tour_slopes(X, y, tour_seed)
    if slopes.size < 2:
        _warn("info_content: fewer than two usable tour transitions")
        return dict.fromkeys(keys, np.nan)
    H, M = ic_curves(slopes)
    grid = EPSILON_GRID
    h_max = float(H.max())
    positive = grid > 0

    def first_eps(mask):
        hit = np.flatnonzero(mask & positive)
        return float(np.log10(grid[hit[0]])) if hit.size else np.nan

    m0 = float(M[0])
    return {
        "ic.h_max": h_max,
        "ic.eps_s": first_eps(H < 0.05),
        "ic.eps_max": float(grid[int(np.argmax(H))]),
        "ic.eps_ratio": first_eps(M <= 0.5 * m0),
        "ic.m0": m0,
    }


# --------------------------------------------------------------------------


def compute_features(sample, tour_seed: int | None = None) -> ElaVector:
    """All feature families; a family that cannot run yields NaNs and a warning."""
    seed = getattr(sample, "sample_seed", 0) if tour_seed is None else tour_seed
    values: dict[str, float] = dict.fromkeys(FEATURE_NAMES, np.nan)
    notes: list[str] = []
    families = (ela_meta, ela_distr, nbc, dispersion, lambda s: info_content(s, seed))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ElaWarning)
        for fam in families:
            try:
                values.update(fam(sample))
            except ValueError as exc:
                notes.append(str(exc))
        notes.extend(str(w.message) for w in caught if issubclass(w.category, ElaWarning))
    for msg in notes:
        warnings.warn(msg, ElaWarning, stacklevel=2)
    return ElaVector(
        values,
        fid=getattr(sample, "fid", 0),
        iid=getattr(sample, "iid", 0),
        dim=_xy(sample)[0].shape[1],
        sample_seed=seed,
        warnings=notes,
    )
