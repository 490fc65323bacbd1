"""Diffusion Monte Carlo for the two-electron problem at zero angular coefficient.

When ``omega + branch/2 = 0`` (e.g. ``omega = 1/2``, ``branch = -1``) the
rotating-frame Hamiltonian has no ``L_z`` term and is a real Schrodinger
operator ``-(hbar**2/2) nabla**2 + V``; plain branching DMC then projects onto
its ground state.  Without importance sampling the walker density is
proportional to the ground-state wavefunction itself (not its square).

``hbar`` defaults to 1.  The scaled units are not canonical: for a laboratory
cyclotron frequency ``Oc`` (atomic units) the physical Planck constant in
scaled units is ``|Oc| ** (1/3)`` (:attr:`trojan2e.units.ScaleFactors.hbar`).

The engine in :func:`diffusion_monte_carlo` is generic over the potential and
the walker shape ``(n_particles, dims)``; :func:`run_dmc` wraps it for the
physical model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from . import equilibria as eqm
from . import model
from .errors import InvalidParameterError, PopulationControlError, UnsupportedRegimeError
from .units import FieldParams

__all__ = [
    "DmcConfig",
    "WalkerEnsemble",
    "Histogram2D",
    "DmcResult",
    "GaussianGuide",
    "SlaterGuide",
    "diffusion_monte_carlo",
    "run_dmc",
    "density_histogram",
    "langmuir_lobes",
    "block_error",
]

PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


@dataclass(frozen=True)
class DmcConfig:
    walker_target: int = 10_000
    time_step: float = 0.01
    equilibration_steps: int = 2000
    accumulation_steps: int = 2000
    seed: int = 0
    box_hint: Optional[float] = None
    planes: tuple = ("xz",)
    bins: int = 60
    max_copies: int = 3
    guide_width: Optional[float] = None  # Gaussian guiding function, off by default
    record_every: int = 1
    symmetrize: bool = True  # accumulate over both electron labelings
    hbar: float = 1.0  # effective Planck constant; see ScaleFactors.hbar

    def __post_init__(self):
        if self.walker_target < 100:
            raise InvalidParameterError("walker_target must be >= 100")
        if not self.time_step > 0:
            raise InvalidParameterError("time_step must be > 0")
        if self.equilibration_steps < 0 or self.accumulation_steps < 1:
            raise InvalidParameterError("need equilibration_steps >= 0 and accumulation_steps >= 1")
        for p in self.planes:
            if p not in PLANES:
                raise InvalidParameterError(f"unknown plane {p!r}")
        if self.max_copies < 1:
            raise InvalidParameterError("max_copies must be >= 1")
        if not self.hbar > 0:
            raise InvalidParameterError("hbar must be > 0")


@dataclass
class WalkerEnsemble:
    walkers: np.ndarray  # (n, n_particles, dims)
    reference_energy: float
    generation: int = 0

    def __len__(self) -> int:
        return len(self.walkers)


@dataclass
class Histogram2D:
    counts: np.ndarray  # (bins, bins), axis 0 along the first plane coordinate
    edges_x: np.ndarray
    edges_y: np.ndarray
    plane: str

    @property
    def centers_x(self) -> np.ndarray:
        return 0.5 * (self.edges_x[1:] + self.edges_x[:-1])

    @property
    def centers_y(self) -> np.ndarray:
        return 0.5 * (self.edges_y[1:] + self.edges_y[:-1])

    def __add__(self, other: "Histogram2D") -> "Histogram2D":
        if not (np.array_equal(self.edges_x, other.edges_x)
                and np.array_equal(self.edges_y, other.edges_y)):
            raise ValueError("histograms have different bin edges")
        return Histogram2D(self.counts + other.counts, self.edges_x, self.edges_y, self.plane)


@dataclass
class DmcResult:
    energy: float
    energy_error: float
    growth_energy: float
    energy_trace: np.ndarray  # mixed estimator per generation (equilibration + accumulation)
    reference_trace: np.ndarray
    population_trace: np.ndarray
    density: dict  # plane -> (Histogram2D electron 1, Histogram2D electron 2)
    lobe_centers: list  # per electron: [upper, lower] density maxima (x, y, z)
    lobe_centroids: list  # per electron: [upper, lower] mean positions
    lobe_fractions: np.ndarray  # per electron, fraction of walkers with z > 0
    lobe_fraction_errors: np.ndarray
    ensemble: WalkerEnsemble
    config: DmcConfig
    params: Optional[FieldParams] = None
    matched_root: Optional[dict] = None
    diagnostics: dict = field(default_factory=dict)


def block_error(series: np.ndarray, n_blocks: Optional[int] = None) -> float:
    """Standard error of the mean of a correlated series.

    With ``n_blocks`` given, uses that many contiguous blocks.  Otherwise
    applies Flyvbjerg-Petersen blocking (repeated pairwise averaging) and
    returns the largest error over levels that keep at least 16 blocks, which
    is a conservative plateau estimate for autocorrelated data.
    """
    x = np.asarray(series, dtype=float)
    if n_blocks is not None:
        n_blocks = min(n_blocks, len(x))
        if n_blocks < 2:
            return float("nan")
        usable = len(x) - len(x) % n_blocks
        means = x[:usable].reshape(n_blocks, -1).mean(axis=1)
        return float(means.std(ddof=1) / math.sqrt(n_blocks))
    if len(x) < 2:
        return float("nan")
    best = float(x.std(ddof=1) / math.sqrt(len(x)))
    while len(x) >= 32:
        if len(x) % 2:
            x = x[1:]
        x = 0.5 * (x[0::2] + x[1::2])
        best = max(best, float(x.std(ddof=1) / math.sqrt(len(x))))
    return best


@dataclass
class GaussianGuide:
    """Guiding function ``sum_c exp(-|R - R_c|**2 / (2 w**2))`` over centers ``R_c``.

    Used for importance sampling: walkers drift along ``grad ln psi_G`` and
    branch on the local energy ``-(1/2) lap psi_G / psi_G + V``.
    """

    centers: np.ndarray  # (m, n_particles, dims)
    width: float

    def _parts(self, w):
        diff = w[:, None] - self.centers[None]  # (n, m, P, d)
        d2 = np.sum(diff**2, axis=(2, 3))
        logc = -d2 / (2 * self.width**2)
        shift = logc.max(axis=1, keepdims=True)
        c = np.exp(logc - shift)
        norm = c.sum(axis=1, keepdims=True)
        return diff, d2, c / norm, shift[:, 0] + np.log(norm[:, 0])

    def log_value(self, w):
        return self._parts(w)[3]

    def drift(self, w):
        diff, _, c, _ = self._parts(w)
        return -np.einsum("nm,nmpd->npd", c, diff) / self.width**2

    def kinetic(self, w):
        diff, d2, c, _ = self._parts(w)
        ndof = w.shape[1] * w.shape[2]
        lap_over_psi = np.sum(c * (d2 / self.width**4 - ndof / self.width**2), axis=1)
        return -0.5 * lap_over_psi


@dataclass
class SlaterGuide:
    """Guiding function ``prod_i exp(-alpha r_i)`` about the origin.

    Suited to Coulomb-bound particles; the drift handles the nuclear cusp.
    Any object with ``log_value``, ``drift`` and ``kinetic`` methods of the
    same signatures can serve as a guide.
    """

    alpha: float

    def _r(self, w):
        return np.sqrt(np.sum(w**2, axis=2))

    def log_value(self, w):
        return -self.alpha * self._r(w).sum(axis=1)

    def drift(self, w):
        return -self.alpha * w / self._r(w)[..., None]

    def kinetic(self, w):
        r = self._r(w)
        d = w.shape[2]
        return np.sum(-0.5 * (self.alpha**2 - (d - 1) * self.alpha / r), axis=1)


def diffusion_monte_carlo(potential: Callable[[np.ndarray], np.ndarray], walkers: np.ndarray,
                          cfg: DmcConfig, *, histogram_window=None,
                          guide=None,
                          mirror_axis: int = 2) -> DmcResult:
    """Branching random walk in imaginary time.

    Each generation diffuses every coordinate with variance
    ``hbar**2 * time_step`` (plus the guide drift, if any), weights walkers by
    ``exp(-time_step * ((E_L(old) + E_L(new))/2 - E_T))``, replicates them by
    stochastic rounding (at most ``max_copies``) and resets
    ``E_T = <E_L> - ln(N / N_target) / time_step`` with the ratio clamped to [0.5, 2].

    Parameters
    ----------
    potential
        Vectorized ``V``: ``(n, P, d) -> (n,)``; singular points may return
        ``inf`` (the walker is then removed).
    walkers
        Initial ensemble ``(n, P, d)``.
    histogram_window
        ``{plane: ((x_lo, x_hi), (y_lo, y_hi))}`` ranges for the density
        histograms (required for each plane in ``cfg.planes`` that fits the
        walker dimension).
    guide
        Optional guiding function (importance sampling with Metropolis
        acceptance).  With ``guide=None`` the walker density samples psi.
    mirror_axis
        Coordinate whose sign separates the two lobes in the lobe statistics.
    """
    ss = np.random.SeedSequence(cfg.seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    dt = cfg.time_step
    hb2 = cfg.hbar**2
    sqdt = cfg.hbar * math.sqrt(dt)  # diffusion constant hbar**2 / 2
    target = cfg.walker_target
    w = np.array(walkers, dtype=float)
    n_part, dims = w.shape[1], w.shape[2]
    planes = [p for p in cfg.planes if max(PLANES[p]) < dims]
    window = histogram_window or {}

    def local(wk):
        v = potential(wk)
        if guide is not None:
            v = v + hb2 * guide.kinetic(wk)
        return v

    e_loc = local(w)
    alive = np.isfinite(e_loc)
    w, e_loc = w[alive], e_loc[alive]
    if len(w) == 0:
        raise PopulationControlError("every initial walker sits on a singularity")
    e_t = float(np.mean(e_loc))
    total = cfg.equilibration_steps + cfg.accumulation_steps
    energy_trace = np.empty(total)
    ref_trace = np.empty(total)
    pop_trace = np.empty(total, dtype=np.int64)
    hist_e1 = {p: np.zeros((cfg.bins, cfg.bins)) for p in planes}
    hist_e2 = {p: np.zeros((cfg.bins, cfg.bins)) for p in planes}
    lobe_sum = np.zeros((n_part, 2, dims))
    lobe_cnt = np.zeros((n_part, 2))
    frac_trace = []
    cap_hits = 0
    accepted = attempted = 0

    for step in range(total):
        noise = rng.standard_normal(w.shape)
        if guide is None:
            w_new = w + sqdt * noise
            e_new = local(w_new)
        else:
            f_old = hb2 * dt * guide.drift(w)
            w_new = w + f_old + sqdt * noise
            f_new = hb2 * dt * guide.drift(w_new)
            log_ratio = 2 * (guide.log_value(w_new) - guide.log_value(w))
            fwd = np.sum((w_new - w - f_old) ** 2, axis=(1, 2))
            bwd = np.sum((w - w_new - f_new) ** 2, axis=(1, 2))
            log_ratio += (fwd - bwd) / (2 * hb2 * dt)
            e_new = local(w_new)
            acc = (np.log(rng.random(len(w))) < log_ratio) & np.isfinite(e_new)
            attempted += len(w)
            accepted += int(acc.sum())
            w_new = np.where(acc[:, None, None], w_new, w)
            e_new = np.where(acc, e_new, e_loc)
        with np.errstate(over="ignore", invalid="ignore"):
            weight = np.exp(-dt * (0.5 * (e_loc + e_new) - e_t))
        weight[np.isnan(weight)] = 0.0
        np.minimum(weight, cfg.max_copies + 1.0, out=weight)  # inf included; counted as a cap hit
        copies = np.floor(weight + rng.random(len(w))).astype(np.int64)
        over = copies > cfg.max_copies
        cap_hits += int(over.sum())
        copies[over] = cfg.max_copies
        w = np.repeat(w_new, copies, axis=0)
        e_loc = np.repeat(e_new, copies)
        n = len(w)
        if n == 0:
            raise PopulationControlError(f"population collapsed at generation {step}")
        if n > 20 * target:
            raise PopulationControlError(f"population exploded ({n} walkers) at generation {step}")
        if step >= cfg.equilibration_steps and not 0.5 * target <= n <= 2 * target:
            raise PopulationControlError(
                f"population {n} outside [0.5, 2] x {target} at generation {step}")
        mean_e = float(np.mean(e_loc))
        e_t = mean_e - math.log(min(max(n / target, 0.5), 2.0)) / dt
        energy_trace[step] = mean_e
        ref_trace[step] = e_t
        pop_trace[step] = n
        if step >= cfg.equilibration_steps and (step - cfg.equilibration_steps) % cfg.record_every == 0:
            for p in planes:
                i, j = PLANES[p]
                (xlo, xhi), (ylo, yhi) = window[p]
                h1, _, _ = np.histogram2d(w[:, 0, i], w[:, 0, j], bins=cfg.bins,
                                          range=[[xlo, xhi], [ylo, yhi]])
                hist_e1[p] += h1
                if n_part > 1:
                    h2, _, _ = np.histogram2d(w[:, 1, i], w[:, 1, j], bins=cfg.bins,
                                              range=[[xlo, xhi], [ylo, yhi]])
                    hist_e2[p] += h2
            if mirror_axis < dims:
                up = w[:, :, mirror_axis] > 0  # (n, P)
                for k in range(n_part):
                    lobe_sum[k, 0] += w[up[:, k], k].sum(axis=0)
                    lobe_sum[k, 1] += w[~up[:, k], k].sum(axis=0)
                    lobe_cnt[k, 0] += up[:, k].sum()
                    lobe_cnt[k, 1] += (~up[:, k]).sum()
                frac_trace.append(up.mean(axis=0))

    n_rec = max(1, len(range(0, cfg.accumulation_steps, cfg.record_every)))
    frac = np.array(frac_trace) if frac_trace else np.zeros((1, n_part))
    raw_fractions = frac.mean(axis=0)
    symmetric = cfg.symmetrize and n_part == 2
    if symmetric:
        for p in planes:
            hist_e1[p] = hist_e2[p] = 0.5 * (hist_e1[p] + hist_e2[p])
        lobe_sum[:] = lobe_sum.mean(axis=0)
        lobe_cnt[:] = lobe_cnt.mean(axis=0)
        frac = np.repeat(frac.mean(axis=1, keepdims=True), n_part, axis=1)
    density = {}
    for p in planes:
        (xlo, xhi), (ylo, yhi) = window[p]
        ex = np.linspace(xlo, xhi, cfg.bins + 1)
        ey = np.linspace(ylo, yhi, cfg.bins + 1)
        density[p] = (Histogram2D(hist_e1[p] / n_rec, ex, ey, p),
                      Histogram2D(hist_e2[p] / n_rec, ex, ey, p))
    with np.errstate(invalid="ignore", divide="ignore"):
        centroids = lobe_sum / lobe_cnt[:, :, None]
    acc_slice = slice(cfg.equilibration_steps, total)
    energies = energy_trace[acc_slice]
    result = DmcResult(
        energy=float(np.mean(energies)),
        energy_error=block_error(energies),
        growth_energy=float(np.mean(ref_trace[acc_slice])),
        energy_trace=energy_trace,
        reference_trace=ref_trace,
        population_trace=pop_trace,
        density=density,
        lobe_centers=[],
        lobe_centroids=[[centroids[k, 0], centroids[k, 1]] for k in range(n_part)],
        lobe_fractions=frac.mean(axis=0),
        lobe_fraction_errors=np.array([block_error(frac[:, k]) for k in range(n_part)]),
        ensemble=WalkerEnsemble(w, e_t, total),
        config=cfg,
        diagnostics={"cap_hits": cap_hits,
                     "acceptance": accepted / attempted if attempted else None,
                     "mean_population": float(pop_trace[acc_slice].mean()),
                     "raw_lobe_fractions": raw_fractions.tolist(),
                     "symmetrized": symmetric},
    )
    result.lobe_centers = _lobe_maxima(result, mirror_axis)
    return result


def _smoothed_mode(centers: np.ndarray, weights: np.ndarray, smooth: float,
                   level: float = 0.6) -> float:
    """Maximum of a 1D histogram from a quadratic fit to its top.

    The histogram is smoothed by a Gaussian of ``smooth`` bins; a parabola is
    then fitted to the contiguous run of bins above ``level`` times the peak.
    Broad, flat-topped lobes make the raw argmax jitter by several bins, the
    fitted vertex does not.
    """
    if weights.sum() == 0:
        return float("nan")
    y = gaussian_filter1d(weights.astype(float), smooth, mode="nearest")
    i = int(np.argmax(y))
    lo, hi = i, i
    while lo > 0 and y[lo - 1] >= level * y[i]:
        lo -= 1
    while hi < len(y) - 1 and y[hi + 1] >= level * y[i]:
        hi += 1
    if hi - lo < 2:
        lo, hi = max(i - 1, 0), min(i + 1, len(y) - 1)
        if hi - lo < 2:
            return float(centers[i])
    c2, c1, _ = np.polyfit(centers[lo:hi + 1], y[lo:hi + 1], 2)
    if c2 >= 0:
        return float(centers[i])
    return float(np.clip(-c1 / (2 * c2), centers[lo], centers[hi]))


def _lobe_maxima(result: DmcResult, mirror_axis: int, smooth: float = 1.5):
    """Density maxima of each electron's lobes on either side of the mirror plane.

    The marginal density along each coordinate is taken from an accumulated
    plane that contains it, restricted to the half space, smoothed by a
    Gaussian of ``smooth`` bins and maximized.  Coordinates without an
    accumulated plane fall back to the lobe centroid.
    """
    n_part = len(result.lobe_centroids)
    dims = len(result.lobe_centroids[0][0]) if n_part else 0
    out = []
    for k in range(n_part):
        lobes = []
        for half in (0, 1):
            point = np.array(result.lobe_centroids[k][half], dtype=float)
            for plane, (h1, h2) in result.density.items():
                i, j = PLANES[plane]
                if mirror_axis not in (i, j):
                    continue
                h = (h1, h2)[k]
                cx, cy = h.centers_x, h.centers_y
                if j == mirror_axis:
                    mask = cy > 0 if half == 0 else cy <= 0
                    sub = h.counts[:, mask]
                    point[i] = _smoothed_mode(cx, sub.sum(axis=1), smooth)
                    point[j] = _smoothed_mode(cy[mask], sub.sum(axis=0), smooth)
                else:
                    mask = cx > 0 if half == 0 else cx <= 0
                    sub = h.counts[mask, :]
                    point[j] = _smoothed_mode(cy, sub.sum(axis=0), smooth)
                    point[i] = _smoothed_mode(cx[mask], sub.sum(axis=1), smooth)
            lobes.append(point)
        out.append(lobes)
    return out


def langmuir_lobes(params: FieldParams):
    """Classical Langmuir configurations for every positive cubic root.

    Returns a list of ``(a, config)`` with the electron 1 above the plane.
    """
    return [(e.side_length, e.config) for e in eqm.langmuir_equilibria(params, "outward")]


def _match_root(result: DmcResult, params: FieldParams) -> Optional[dict]:
    roots = eqm.langmuir_cubic(params, "outward")
    if not roots:
        return None
    # average over electrons of |z| and transverse radius of the lobe centroids
    zs, rhos = [], []
    for k in range(len(result.lobe_centers)):
        for c in result.lobe_centers[k]:
            if np.all(np.isfinite(c)):
                zs.append(abs(c[2]))
                rhos.append(math.hypot(c[0], c[1]))
    z_lobe, rho_lobe = float(np.mean(zs)), float(np.mean(rhos))
    best = None
    for idx, a in enumerate(roots):
        err_z = abs(z_lobe - a / 2) / (a / 2)
        err_rho = abs(rho_lobe - math.sqrt(3) * a / 2) / (math.sqrt(3) * a / 2)
        rec = {"root_index": idx, "side_length": a, "lobe_z": z_lobe, "lobe_rho": rho_lobe,
               "predicted_z": a / 2, "predicted_rho": math.sqrt(3) * a / 2,
               "relative_error_z": err_z, "relative_error_rho": err_rho}
        if best is None or max(err_z, err_rho) < max(best["relative_error_z"], best["relative_error_rho"]):
            best = rec
    best["roots"] = roots
    return best


def run_dmc(params: FieldParams, cfg: DmcConfig) -> DmcResult:
    """DMC ground state of the two-electron Hamiltonian at zero angular coefficient.

    Walkers start split evenly over the classical Langmuir configurations of
    every positive cubic root, in both electron assignments, with Gaussian
    noise of width ``box_hint / 10`` (default: a tenth of the lobe
    separation).  The root whose lobes the converged density matches is
    reported in ``result.matched_root``.
    """
    if abs(params.angular) > 1e-12:
        raise UnsupportedRegimeError(
            f"angular coefficient omega + branch/2 = {params.angular:.3g} != 0; a complex "
            "rotating-frame ground state needs fixed-phase DMC, which is not implemented")
    lobes = langmuir_lobes(params) if params.dims == 3 and params.charge == 2 else []
    if not lobes:
        raise UnsupportedRegimeError("no Langmuir configuration to initialize walkers from")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    starts = []
    for _, q in lobes:
        starts.append(q)
        starts.append(q[::-1])
    per = -(-cfg.walker_target // len(starts))
    init = []
    for q in starts:
        a = np.linalg.norm(q[0] - q[1])
        width = (cfg.box_hint if cfg.box_hint else a) / 10.0
        init.append(q[None] + width * rng.standard_normal((per, 2, params.dims)))
    walkers = np.concatenate(init)[: max(cfg.walker_target, len(starts))]

    a_max, q_max = max(lobes, key=lambda t: t[0])
    half = 1.5 * (cfg.box_hint if cfg.box_hint else a_max)
    center = q_max.mean(axis=0)
    window = {}
    for p in cfg.planes:
        i, j = PLANES[p]
        window[p] = ((center[i] - half, center[i] + half), (center[j] - half, center[j] + half))

    guide = None
    if cfg.guide_width:
        centers = np.array([q for _, q in lobes] + [q[::-1] for _, q in lobes])
        guide = GaussianGuide(centers, cfg.guide_width)

    def potential(wk):
        return model.batch_potential(wk, params)

    result = diffusion_monte_carlo(potential, walkers, cfg, histogram_window=window,
                                   guide=guide, mirror_axis=2)
    result.params = params
    result.matched_root = _match_root(result, params)
    result.diagnostics["classical_energies"] = [model.zvs(q, params) for _, q in lobes]
    return result


def density_histogram(source, plane: str = "xz", bins: int = 60, electron="both",
                      window=None) -> Histogram2D:
    """Marginal 2D density of one or both electrons.

    ``source`` is a :class:`DmcResult` (accumulated histograms; ``bins`` and
    ``window`` are fixed by the run) or a :class:`WalkerEnsemble` /
    walker array (histogrammed now over ``window``, default: data range).
    """
    if plane not in PLANES:
        raise InvalidParameterError(f"unknown plane {plane!r}")
    if electron not in (1, 2, "both"):
        raise InvalidParameterError("electron must be 1, 2 or 'both'")
    if isinstance(source, DmcResult):
        if plane not in source.density:
            raise InvalidParameterError(f"plane {plane!r} was not accumulated in this run")
        h1, h2 = source.density[plane]
        if electron == 1:
            return h1
        if electron == 2:
            return h2
        return h1 + h2
    w = source.walkers if isinstance(source, WalkerEnsemble) else np.asarray(source, dtype=float)
    if len(w) == 0:
        raise InvalidParameterError("empty ensemble")
    i, j = PLANES[plane]
    sel: Sequence[int] = [0, 1] if electron == "both" else [electron - 1]
    xs = np.concatenate([w[:, k, i] for k in sel])
    ys = np.concatenate([w[:, k, j] for k in sel])
    if window is None:
        pad = 1e-9 + 1e-9 * max(1.0, float(np.max(np.abs(np.concatenate([xs, ys])))))
        window = ((xs.min() - pad, xs.max() + pad), (ys.min() - pad, ys.max() + pad))
    counts, ex, ey = np.histogram2d(xs, ys, bins=bins, range=[list(window[0]), list(window[1])])
    return Histogram2D(counts, ex, ey, plane)
