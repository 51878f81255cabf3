"""Stochastic simulation of the projective measurement protocol.

A trajectory alternates unitary evolution over a random interval with a
projective probe of the monitored block: with probability equal to the
block population the probe detects (and the trajectory ends), otherwise the
state collapses onto the complement and is renormalized.

Randomness discipline: every trajectory owns a counter-based stream keyed by
``(master_seed, trajectory_index)`` and consumes it in a fixed pattern
(a chunk of interval draws, then a chunk of uniforms, repeated).  A
trajectory's record therefore depends on nothing but its own key, which
makes ensembles reproducible and independent of batching and of the worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic
from .spectral import AllToAllModel
from .states import PROJECTOR_TOL, Projector, SiteWindow, StateVector

#: Random draws fetched per refill of one trajectory's stream.
STREAM_CHUNK = 32

#: Trajectories per batch in the vectorized engine.
BLOCK_SIZE = 8192

#: Slack allowed on failure probabilities before declaring corruption.
PFAIL_TOL = 1e-12

THREADS_ENV_VAR = "QDETECT_THREADS"


class ProtocolCorruptionError(RuntimeError):
    """A probability left [0, 1] beyond tolerance: numerical corruption."""


@dataclass(frozen=True)
class ExponentialIntervals:
    """I.i.d. exponential waiting times between probes (Poissonian protocol)."""

    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")


@dataclass(frozen=True)
class SharpIntervals:
    """Fixed period between probes (stroboscopic protocol)."""

    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")


IntervalLaw = ExponentialIntervals | SharpIntervals


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    """Full specification of one simulation run.

    ``model`` is either an :class:`AllToAllModel` (rank-1 fast path) or an
    explicit Hermitian matrix (diagonalized once, phases applied per step).
    """

    model: AllToAllModel | np.ndarray
    window: SiteWindow
    initial_state: StateVector
    interval_law: IntervalLaw
    n_trajectories: int
    master_seed: int
    max_measurements: int = 1_000_000

    def __post_init__(self):
        dim = model_dim(self.model)
        if dim != self.window.n_sites:
            raise ValueError("model and window dimensions differ")
        if self.initial_state.dim != dim:
            raise ValueError("initial state has the wrong dimension")
        if not self.initial_state.normalized:
            raise ValueError("initial state must be normalized")
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.max_measurements < 1:
            raise ValueError("measurement cap must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must fit in 64 bits")


def model_dim(model: AllToAllModel | np.ndarray) -> int:
    if isinstance(model, AllToAllModel):
        return model.n_sites
    return np.asarray(model).shape[0]


@dataclass(frozen=True)
class TrajectoryRecord:
    """Outcome of a single trajectory.

    For detected trajectories ``first_detection_time`` is the sum of the
    intervals up to and including the successful probe; for censored ones it
    is the time of the last performed probe.
    """

    detected: bool
    first_detection_time: float
    n_measurements: int


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based random stream for one trajectory."""
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _Evolver:
    """Applies the propagator to batches of row states for one model."""

    def __init__(self, model: AllToAllModel | np.ndarray):
        if isinstance(model, AllToAllModel):
            self._closed_form = True
            self._n = model.n_sites
            self._jn = model.coupling * model.n_sites
        else:
            hmat = np.asarray(model, dtype=np.complex128)
            if np.max(np.abs(hmat - hmat.conj().T)) > PROJECTOR_TOL:
                raise ValueError("Hamiltonian is not Hermitian")
            self._closed_form = False
            self._n = hmat.shape[0]
            self._evals, self._evecs = np.linalg.eigh(hmat)

    def advance(self, block: np.ndarray, taus: np.ndarray) -> np.ndarray:
        """Evolve each row ``block[i]`` for its own interval ``taus[i]``."""
        if self._closed_form:
            b = (np.exp(1j * self._jn * taus) - 1.0) / self._n
            return block + b[:, None] * block.sum(axis=1)[:, None]
        coeff = block @ self._evecs.conj()
        coeff *= np.exp(-1j * np.outer(taus, self._evals))
        return coeff @ self._evecs.T


def _fill_chunk(gen, taus_row, us_row, law: IntervalLaw) -> None:
    if isinstance(law, ExponentialIntervals):
        taus_row[:] = gen.standard_exponential(STREAM_CHUNK) * (1.0 / law.rate)
    else:
        taus_row[:] = law.period
    us_row[:] = gen.random(STREAM_CHUNK)


def _run_indices(cfg: ProtocolConfig, indices: np.ndarray):
    """Vectorized protocol over one batch of trajectory indices."""
    n = indices.size
    m = cfg.window.cut
    evolver = _Evolver(cfg.model)
    gens = [trajectory_stream(cfg.master_seed, int(i)) for i in indices]
    taus = np.empty((n, STREAM_CHUNK))
    us = np.empty((n, STREAM_CHUNK))
    for k, gen in enumerate(gens):
        _fill_chunk(gen, taus[k], us[k], cfg.interval_law)
    ptr = np.zeros(n, dtype=np.intp)

    psi = np.tile(cfg.initial_state.amplitudes, (n, 1))
    t_acc = np.zeros(n)
    n_meas = np.zeros(n, dtype=np.int64)
    detected = np.zeros(n, dtype=bool)
    fdt = np.zeros(n)
    alive = np.arange(n)

    while alive.size:
        cursor = ptr[alive]
        exhausted = alive[cursor >= STREAM_CHUNK]
        if exhausted.size:
            for k in exhausted:
                _fill_chunk(gens[k], taus[k], us[k], cfg.interval_law)
            ptr[exhausted] = 0
            cursor = ptr[alive]
        tau = taus[alive, cursor]
        draw = us[alive, cursor]
        ptr[alive] += 1
        t_acc[alive] += tau
        n_meas[alive] += 1

        block = evolver.advance(psi[alive], tau)
        comp = block[:, :m]
        p_fail = np.sum(comp.real**2 + comp.imag**2, axis=1)
        if p_fail.size and (p_fail.max() > 1.0 + PFAIL_TOL or p_fail.min() < -PFAIL_TOL):
            raise ProtocolCorruptionError(
                f"failure probability left [0, 1]: {p_fail.min()}..{p_fail.max()}"
            )
        hit = draw >= p_fail
        hit_idx = alive[hit]
        detected[hit_idx] = True
        fdt[hit_idx] = t_acc[hit_idx]

        survivors = ~hit
        surv_block = block[survivors]
        surv_block[:, m:] = 0.0
        surv_block /= np.sqrt(p_fail[survivors])[:, None]
        alive = alive[survivors]
        psi[alive] = surv_block

        capped = n_meas[alive] >= cfg.max_measurements
        if capped.any():
            censored = alive[capped]
            fdt[censored] = t_acc[censored]
            alive = alive[~capped]
    return detected, fdt, n_meas


def measurement_step(
    psi: StateVector,
    tau: float,
    model: AllToAllModel | np.ndarray,
    p_target: Projector,
    p_complement: Projector,
    uniform_draw: float,
):
    """One evolve-and-probe step of the protocol.

    Evolves ``psi`` for ``tau``, computes the failure probability as the
    complement population of the evolved state, and declares detection when
    ``uniform_draw >= p_fail``.  On failure the collapsed, renormalized state
    is returned.  The two projectors must split the evolved population to
    within ``PFAIL_TOL``; anything else means the pair does not partition
    the space (or the propagator lost unitarity) and is flagged as
    corruption rather than silently renormalized away.

    Returns ``(detected, state_after, p_fail)`` where ``state_after`` is
    ``None`` on detection.
    """
    if tau < 0:
        raise ValueError("interval must be nonnegative")
    evolved = _Evolver(model).advance(
        psi.amplitudes[None, :].copy(), np.array([tau])
    )[0]
    projected = p_complement.apply(evolved)
    p_fail = float(np.vdot(projected, projected).real)
    hit_amp = p_target.apply(evolved)
    p_detect = float(np.vdot(hit_amp, hit_amp).real)
    if p_fail > 1.0 + PFAIL_TOL or p_fail < -PFAIL_TOL:
        raise ProtocolCorruptionError(f"failure probability {p_fail} left [0, 1]")
    if abs(p_fail + p_detect - 1.0) > 1e-10:
        raise ProtocolCorruptionError(
            f"projector pair does not split the population: "
            f"{p_fail} + {p_detect} != 1"
        )
    if uniform_draw >= p_fail:
        return True, None, p_fail
    return False, StateVector(projected / np.sqrt(p_fail)), p_fail


def run_trajectory(cfg: ProtocolConfig, stream_index: int) -> TrajectoryRecord:
    """Run the single trajectory owning stream ``(master_seed, stream_index)``.

    Bit-identical to the corresponding row of a full ensemble: the same
    engine runs on a one-element batch.
    """
    detected, fdt, n_meas = _run_indices(cfg, np.array([stream_index]))
    return TrajectoryRecord(bool(detected[0]), float(fdt[0]), int(n_meas[0]))


def conditional_survival(
    psi0: StateVector,
    taus,
    model: AllToAllModel | np.ndarray,
    p_complement: Projector,
) -> float:
    """Squared norm of the unnormalized amplitude after a fixed probe schedule.

    Applies the non-unitary step (project after evolve) once per listed
    interval; the result is the probability that every one of those probes
    failed.  The empty schedule gives one.
    """
    evolver = _Evolver(model)
    state = psi0.amplitudes[None, :].copy()
    for tau in taus:
        state = evolver.advance(state, np.array([float(tau)]))
        state = (p_complement.matrix @ state[0])[None, :]
    return float(np.vdot(state[0], state[0]).real)


@dataclass(frozen=True, eq=False)
class DetectionEnsemble:
    """Aggregated outcome of many independent trajectories.

    Censored trajectories (those that hit the measurement cap) are counted
    in the survival curve up to their last probe time and excluded from the
    mean first detection time, which is reported over detected trajectories
    only.
    """

    detected: np.ndarray
    first_detection_time: np.ndarray
    n_measurements: np.ndarray
    survival_times: np.ndarray
    survival: np.ndarray
    survival_stderr: np.ndarray
    density_edges: np.ndarray
    density: np.ndarray
    density_stderr: np.ndarray

    @property
    def n_trajectories(self) -> int:
        return self.detected.size

    @property
    def n_censored(self) -> int:
        return int(self.n_trajectories - np.count_nonzero(self.detected))

    @property
    def detected_fraction(self) -> float:
        return float(np.count_nonzero(self.detected) / self.n_trajectories)

    @property
    def mean_fdt(self) -> float:
        times = self.first_detection_time[self.detected]
        return float(times.mean()) if times.size else float("nan")

    @property
    def mean_fdt_stderr(self) -> float:
        times = self.first_detection_time[self.detected]
        if times.size < 2:
            return float("nan")
        return float(times.std(ddof=1) / np.sqrt(times.size))

    def records(self) -> list[TrajectoryRecord]:
        return [
            TrajectoryRecord(bool(d), float(t), int(k))
            for d, t, k in zip(
                self.detected, self.first_detection_time, self.n_measurements
            )
        ]


def _default_horizon(cfg: ProtocolConfig, detected, fdt) -> float:
    """Histogram horizon: the analytic decay time when available, else quantiles."""
    if isinstance(cfg.model, AllToAllModel) and isinstance(
        cfg.interval_law, ExponentialIntervals
    ):
        return 12.0 * analytic.decay_timescale(
            cfg.interval_law.rate, cfg.model, cfg.window
        )
    times = fdt[detected]
    if times.size == 0:
        return float(fdt.max()) if fdt.size else 1.0
    return 1.25 * float(np.quantile(times, 0.999))


def monte_carlo(
    cfg: ProtocolConfig,
    threads: int | None = None,
    bins: int = 400,
    t_max: float | None = None,
) -> DetectionEnsemble:
    """Simulate the full ensemble and aggregate its statistics.

    ``threads`` defaults to the ``QDETECT_THREADS`` environment variable
    (else 1).  Trajectories are partitioned into fixed blocks processed
    independently and reduced in index order, so the result is identical
    for every worker count.
    """
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV_VAR, "1") or "1")
    threads = max(1, threads)
    blocks = [
        np.arange(lo, min(lo + BLOCK_SIZE, cfg.n_trajectories))
        for lo in range(0, cfg.n_trajectories, BLOCK_SIZE)
    ]
    if threads == 1 or len(blocks) == 1:
        results = [_run_indices(cfg, block) for block in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda blk: _run_indices(cfg, blk), blocks))
    detected = np.concatenate([res[0] for res in results])
    fdt = np.concatenate([res[1] for res in results])
    n_meas = np.concatenate([res[2] for res in results])

    horizon = t_max if t_max is not None else _default_horizon(cfg, detected, fdt)
    grid = np.linspace(0.0, horizon, bins + 1)

    # Survival: a censored trajectory is known to survive only up to its
    # last probe, after which it drops out of the risk set.
    n_total = detected.size
    surviving = (fdt[:, None] > grid[None, :]).sum(axis=0)
    censored_gone = (~detected[:, None] & (fdt[:, None] <= grid[None, :])).sum(axis=0)
    at_risk = np.maximum(n_total - censored_gone, 1)
    survival = surviving / at_risk
    survival_err = np.sqrt(np.clip(survival * (1.0 - survival), 0.0, None) / at_risk)

    widths = np.diff(grid)
    counts, _ = np.histogram(fdt[detected], bins=grid)
    density = counts / (n_total * widths)
    density_err = np.sqrt(counts) / (n_total * widths)

    return DetectionEnsemble(
        detected=detected,
        first_detection_time=fdt,
        n_measurements=n_meas,
        survival_times=grid,
        survival=survival,
        survival_stderr=survival_err,
        density_edges=grid,
        density=density,
        density_stderr=density_err,
    )


@dataclass(frozen=True)
class LaplaceEstimate:
    """Numerical Laplace transform with an error budget and a trust flag."""

    value: float
    error: float
    reliable: bool


def numeric_laplace_of_survival(ens: DetectionEnsemble, s: float) -> LaplaceEstimate:
    """Trapezoidal transform of the empirical survival curve.

    The error combines the (coherently summed) statistical uncertainty of
    the curve, a grid-coarsening estimate of the discretization error, and
    the analytic bound on the truncated tail.  The estimate is flagged
    unreliable when the censored fraction exceeds the ``exp(-s t_max)``
    budget within which censoring cannot matter.
    """
    if s <= 0:
        raise ValueError("Laplace variable must be positive")
    t = ens.survival_times
    weight = np.exp(-s * t)
    integrand = weight * ens.survival
    value = float(np.trapezoid(integrand, t))
    coarse = float(np.trapezoid(integrand[::2], t[::2]))
    stat = float(np.trapezoid(weight * ens.survival_stderr, t))
    tail = float(ens.survival[-1] * np.exp(-s * t[-1]) / s)
    error = stat + abs(value - coarse) + tail
    censored_fraction = ens.n_censored / ens.n_trajectories
    reliable = censored_fraction <= np.exp(-s * t[-1])
    return LaplaceEstimate(value, error, reliable)
