"""Noiseless BBOB-style benchmark functions with seeded instances.

Every function is written in *centered* form: the instance transform maps
``x_opt`` to the base function's minimiser, and every base function is 0 at
its minimiser and non-negative everywhere.  ``f_opt`` is therefore always 0
and regret equals the raw objective value.

Instances are cheap to build and fully determined by ``(fid, iid, dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

N_FUNCTIONS = 24
LOWER, UPPER = -5.0, 5.0

GROUPS = {
    "separable": range(1, 6),
    "low_moderate_conditioning": range(6, 10),
    "high_conditioning_unimodal": range(10, 15),
    "multimodal_adequate_structure": range(15, 20),
    "multimodal_weak_structure": range(20, 25),
}

NAMES = {
    1: "sphere",
    2: "ellipsoid_separable",
    3: "rastrigin_separable",
    4: "bueche_rastrigin",
    5: "linear_slope",
    6: "attractive_sector",
    7: "step_ellipsoid",
    8: "rosenbrock",
    9: "rosenbrock_rotated",
    10: "ellipsoid",
    11: "discus",
    12: "bent_cigar",
    13: "sharp_ridge",
    14: "different_powers",
    15: "rastrigin",
    16: "weierstrass",
    17: "schaffers_f7",
    18: "schaffers_f7_ill_conditioned",
    19: "griewank_rosenbrock",
    20: "schwefel",
    21: "gallagher_101",
    22: "gallagher_21",
    23: "katsuura",
    24: "lunacek_bi_rastrigin",
}


def group_of(fid: int) -> str:
    for name, fids in GROUPS.items():
        if fid in fids:
            return name
    raise ValueError(f"fid must be in 1..{N_FUNCTIONS}, got {fid}")


# --------------------------------------------------------------------------
# seeding helpers


def _seed_sequence(fid: int, iid: int, dim: int, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([0x5EED_BB0B, fid, iid, dim, tag])


def _orthogonal(seed: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # sign fix makes the factorisation unique
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


# --------------------------------------------------------------------------
# elementwise transforms (all map 0 -> 0)


def _ramp(dim: int) -> np.ndarray:
    """(i - 1) / (D - 1) for i = 1..D; zeros when D == 1."""
    if dim == 1:
        return np.zeros(1)
    return np.arange(dim) / (dim - 1)


def _lambda(alpha: float, dim: int) -> np.ndarray:
    return alpha ** (0.5 * _ramp(dim))


def t_osz(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        xh = np.where(x != 0, np.log(np.abs(x)), 0.0)
    c1 = np.where(x > 0, 10.0, 5.5)
    c2 = np.where(x > 0, 7.9, 3.1)
    return np.sign(x) * np.exp(xh + 0.049 * (np.sin(c1 * xh) + np.sin(c2 * xh)))


def t_asy(x: np.ndarray, beta: float) -> np.ndarray:
    dim = x.shape[-1]
    pos = np.maximum(x, 0.0)
    expo = 1.0 + beta * _ramp(dim) * np.sqrt(pos)
    return np.where(x > 0, pos**expo, x)


def f_pen(x: np.ndarray) -> np.ndarray:
    return np.sum(np.maximum(0.0, np.abs(x) - UPPER) ** 2, axis=-1)


def _rastrigin_core(z: np.ndarray) -> np.ndarray:
    dim = z.shape[-1]
    return 10.0 * (dim - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z * z, axis=-1)


def _conditioned_weights(dim: int, exponent: float) -> np.ndarray:
    return 10.0 ** (exponent * _ramp(dim))


# Schwefel: maximiser of z*sin(sqrt(z)) on the positive branch
_SCHWEFEL_Z = brentq(lambda s: np.tan(s) + s / 2.0, 6.5 * np.pi + 1e-6, 7 * np.pi - 1e-6) ** 2
_SCHWEFEL_C = _SCHWEFEL_Z * np.sin(np.sqrt(_SCHWEFEL_Z)) / 100.0

_WEIERSTRASS_K = np.arange(12)
_WEIERSTRASS_F0 = float(np.sum(0.5**_WEIERSTRASS_K * np.cos(2 * np.pi * 3.0**_WEIERSTRASS_K * 0.5)))


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class ProblemInstance:
    """One ``(fid, iid, dim)`` problem on the box [-5, 5]^dim."""

    fid: int
    iid: int
    dim: int
    x_opt: np.ndarray = field(repr=False, compare=False)
    f_opt: float = 0.0
    rotation_seeds: tuple[int, int] = (0, 0)

    @property
    def name(self) -> str:
        return NAMES[self.fid]

    @property
    def group(self) -> str:
        return group_of(self.fid)

    @property
    def bounds(self) -> tuple[float, float]:
        return LOWER, UPPER

    @cached_property
    def R(self) -> np.ndarray:
        return _orthogonal(self.rotation_seeds[0], self.dim)

    @cached_property
    def Q(self) -> np.ndarray:
        return _orthogonal(self.rotation_seeds[1], self.dim)

    @cached_property
    def _signs(self) -> np.ndarray:
        rng = np.random.default_rng(_seed_sequence(self.fid, self.iid, self.dim, 3))
        return np.where(rng.random(self.dim) < 0.5, -1.0, 1.0)

    @cached_property
    def _gallagher(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n_peaks = 101 if self.fid == 21 else 21
        top = 1000.0 if self.fid == 21 else 1000.0**2
        rng = np.random.default_rng(_seed_sequence(self.fid, self.iid, self.dim, 4))
        peaks = rng.uniform(-4.9, 4.9, size=(n_peaks, self.dim))
        peaks[0] = self.x_opt
        weights = np.empty(n_peaks)
        weights[0] = 10.0
        weights[1:] = 1.1 + 8.0 * np.arange(n_peaks - 1) / max(n_peaks - 2, 1)
        # conditioning of each peak, diagonal scales are shuffled per peak
        alphas = np.empty(n_peaks)
        alphas[0] = top
        pool = 1000.0 ** (2.0 * np.arange(n_peaks - 1) / max(n_peaks - 2, 1))
        alphas[1:] = rng.permutation(pool)
        scales = np.empty((n_peaks, self.dim))
        for i, a in enumerate(alphas):
            scales[i] = rng.permutation(a ** (0.5 * _ramp(self.dim)) / a**0.25)
        return peaks, weights, scales


def make_instance(fid: int, iid: int, dim: int) -> ProblemInstance:
    if not 1 <= fid <= N_FUNCTIONS:
        raise ValueError(f"fid must be in 1..{N_FUNCTIONS}, got {fid}")
    if iid < 1:
        raise ValueError(f"iid must be >= 1, got {iid}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    ss = _seed_sequence(fid, iid, dim, 0)
    x_opt = np.random.default_rng(ss).uniform(-4.0, 4.0, size=dim)
    x_opt.setflags(write=False)
    s1, s2 = (int(v) for v in _seed_sequence(fid, iid, dim, 1).generate_state(2, dtype=np.uint64))
    return ProblemInstance(fid, iid, dim, x_opt, 0.0, (s1, s2))


# --------------------------------------------------------------------------
# base functions, batched over rows of ``x`` (shape (n, dim))


def _f1(p, x):
    z = x - p.x_opt
    return np.sum(z * z, axis=1)


def _f2(p, x):
    z = t_osz(x - p.x_opt)
    return z * z @ _conditioned_weights(p.dim, 6.0)


def _f3(p, x):
    z = t_asy(t_osz(x - p.x_opt), 0.2) * _lambda(10.0, p.dim)
    return _rastrigin_core(z)


def _f4(p, x):
    z = t_osz(x - p.x_opt)
    s = _conditioned_weights(p.dim, 0.5) * np.ones_like(z)
    odd = (np.arange(p.dim) % 2 == 0)[None, :]
    s = np.where(odd & (z > 0), 10.0 * s, s)
    return _rastrigin_core(s * z) + 100.0 * f_pen(x)


def _f5(p, x):
    # slope towards x_opt, flat beyond it along the slope direction
    sgn = np.where(p.x_opt >= 0, 1.0, -1.0)
    reach = np.abs(p.x_opt)
    along = np.minimum(sgn * x, reach)
    return (reach - along) @ _conditioned_weights(p.dim, 1.0)


def _f6(p, x):
    z = ((x - p.x_opt) @ p.R.T * _lambda(10.0, p.dim)) @ p.Q.T
    s = np.where(z * p.x_opt > 0, 100.0, 1.0)
    return t_osz(np.sum((s * z) ** 2, axis=1)) ** 0.9


def _f7(p, x):
    zh = (x - p.x_opt) @ p.R.T * _lambda(10.0, p.dim)
    zt = np.where(np.abs(zh) > 0.5, np.floor(0.5 + zh), np.floor(0.5 + 10.0 * zh) / 10.0)
    z = zt @ p.Q.T
    body = (z * z) @ _conditioned_weights(p.dim, 2.0)
    return 0.1 * np.maximum(np.abs(zh[:, 0]) / 1e4, body) + f_pen(x)


def _rosenbrock(z):
    if z.shape[1] == 1:
        return (z[:, 0] - 1.0) ** 2
    a, b = z[:, :-1], z[:, 1:]
    return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=1)


def _f8(p, x):
    return _rosenbrock(max(1.0, np.sqrt(p.dim) / 8.0) * (x - p.x_opt) + 1.0)


def _f9(p, x):
    return _rosenbrock(max(1.0, np.sqrt(p.dim) / 8.0) * ((x - p.x_opt) @ p.R.T) + 1.0)


def _f10(p, x):
    z = t_osz((x - p.x_opt) @ p.R.T)
    return (z * z) @ _conditioned_weights(p.dim, 6.0)


def _f11(p, x):
    z = t_osz((x - p.x_opt) @ p.R.T)
    return 1e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)


def _f12(p, x):
    z = t_asy((x - p.x_opt) @ p.R.T, 0.5) @ p.R.T
    return z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=1)


def _f13(p, x):
    z = ((x - p.x_opt) @ p.R.T * _lambda(10.0, p.dim)) @ p.Q.T
    return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))


def _f14(p, x):
    z = (x - p.x_opt) @ p.R.T
    return np.sqrt(np.sum(np.abs(z) ** (2.0 + 4.0 * _ramp(p.dim)), axis=1))


def _f15(p, x):
    z = t_asy(t_osz((x - p.x_opt) @ p.R.T), 0.2) @ p.Q.T
    z = (z * _lambda(10.0, p.dim)) @ p.R.T
    return _rastrigin_core(z)


def _f16(p, x):
    z = t_osz((x - p.x_opt) @ p.R.T) @ p.Q.T
    z = (z * _lambda(0.01, p.dim)) @ p.R.T
    k = _WEIERSTRASS_K
    terms = np.cos(2 * np.pi * 3.0**k * (z[..., None] + 0.5)) @ (0.5**k)
    inner = np.mean(terms, axis=1) - _WEIERSTRASS_F0
    # rounding can push the inner sum a hair below its minimum
    return 10.0 * np.maximum(inner, 0.0) ** 3 + 10.0 / p.dim * f_pen(x)


def _schaffers(p, x, alpha):
    z = t_asy((x - p.x_opt) @ p.R.T, 0.5) @ p.Q.T * _lambda(alpha, p.dim)
    if p.dim == 1:
        s = np.abs(z)
    else:
        s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
    rs = np.sqrt(s)
    return np.mean(rs + rs * np.sin(50.0 * s**0.2) ** 2, axis=1) ** 2 + 10.0 * f_pen(x)


def _f17(p, x):
    return _schaffers(p, x, 10.0)


def _f18(p, x):
    return _schaffers(p, x, 1000.0)


def _f19(p, x):
    z = max(1.0, np.sqrt(p.dim) / 8.0) * ((x - p.x_opt) @ p.R.T) + 1.0
    if p.dim == 1:
        s = (z - 1.0) ** 2
    else:
        a, b = z[:, :-1], z[:, 1:]
        s = 100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2
    return 10.0 * np.mean(s / 4000.0 - np.cos(s), axis=1) + 10.0


def _f20(p, x):
    u = 2.0 * (x - p.x_opt) * p._signs
    zh = u.copy()
    zh[:, 1:] += 0.25 * u[:, :-1]
    z = 100.0 * zh * _lambda(10.0, p.dim) + _SCHWEFEL_Z
    body = -np.mean(z * np.sin(np.sqrt(np.abs(z))), axis=1) / 100.0
    return body + _SCHWEFEL_C + 100.0 * f_pen(z / 100.0)


def _gallagher_f(p, x):
    peaks, weights, scales = p._gallagher
    best = np.zeros(x.shape[0])
    for y, wgt, c in zip(peaks, weights, scales):
        d = (x - y) @ p.R.T
        val = wgt * np.exp(-np.sum(c * d * d, axis=1) / (2.0 * p.dim))
        np.maximum(best, val, out=best)
    # the optimum peak reaches exactly 10 only at x_opt
    return t_osz(np.maximum(10.0 - best, 0.0)) ** 2 + f_pen(x)


def _f23(p, x):
    z = ((x - p.x_opt) @ p.R.T * _lambda(100.0, p.dim)) @ p.Q.T
    j = 2.0 ** np.arange(1, 33)
    zz = z[..., None] * j
    inner = np.sum(np.abs(zz - np.round(zz)) / j, axis=2)
    idx = np.arange(1, p.dim + 1)
    prod = np.prod((1.0 + idx * inner) ** (10.0 / p.dim**1.2), axis=1)
    d2 = 10.0 / p.dim**2
    return np.maximum(d2 * prod - d2, 0.0) + f_pen(x)


def _f24(p, x):
    mu0 = 2.5
    # the depth constant is only defined from D = 2 upwards
    s = 1.0 - 1.0 / (2.0 * np.sqrt(max(p.dim, 2) + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0**2 - 1.0) / s)
    xh = 2.0 * p._signs * (x - p.x_opt) + mu0
    z = ((xh - mu0) @ p.R.T * _lambda(100.0, p.dim)) @ p.Q.T
    first = np.sum((xh - mu0) ** 2, axis=1)
    second = p.dim + s * np.sum((xh - mu1) ** 2, axis=1)
    return (
        np.minimum(first, second)
        + 10.0 * (p.dim - np.sum(np.cos(2 * np.pi * z), axis=1))
        + 1e4 * f_pen(x)
    )


_FUNCS = {
    1: _f1, 2: _f2, 3: _f3, 4: _f4, 5: _f5, 6: _f6, 7: _f7, 8: _f8,
    9: _f9, 10: _f10, 11: _f11, 12: _f12, 13: _f13, 14: _f14, 15: _f15,
    16: _f16, 17: _f17, 18: _f18, 19: _f19, 20: _f20, 21: _gallagher_f,
    22: _gallagher_f, 23: _f23, 24: _f24,
}


def evaluate_batch(instance: ProblemInstance, X) -> np.ndarray:
    """Evaluate every row of ``X`` (shape ``(n, dim)``)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != instance.dim:
        raise ValueError(f"expected shape (n, {instance.dim}), got {X.shape}")
    if np.isnan(X).any():
        raise ValueError("NaN in input point")
    return _FUNCS[instance.fid](instance, X) + instance.f_opt


def evaluate(instance: ProblemInstance, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != instance.dim:
        raise ValueError(f"expected a vector of length {instance.dim}, got shape {x.shape}")
    return float(evaluate_batch(instance, x[None, :])[0])
