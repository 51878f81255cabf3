"""Command-line interface: simulation runs, sweeps, and report files.

Every report command writes locale-independent CSV (17 significant digits
for analytic columns) into the output directory and, unless ``--no-plot`` is
given, a PNG rendering next to each CSV.  Options may come from a flat
``key = value`` config file (``--config``); explicit command-line flags win
over config entries, which win over built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, plotting
from .darkbright import (
    bright_basis_all_to_all,
    decompose,
    eventual_detection_probability,
    is_bright,
    random_bright_state,
    special_state,
)
from .protocol import (
    ExponentialIntervals,
    ProtocolConfig,
    SharpIntervals,
    monte_carlo,
    numeric_laplace_of_survival,
)
from .spectral import (
    AllToAllModel,
    all_ones_eigenvectors,
    closed_form_eigenbasis,
    generic_eigenbasis,
)
from .states import (
    SiteWindow,
    StateVector,
    site_state,
    uniform_state,
    window_projectors,
)

#: Stride used to derive per-run seeds when one invocation launches several
#: Monte Carlo runs (one per rate); keeps the runs decorrelated while still
#: fully determined by the master seed.
SEED_STRIDE = 0x9E3779B97F4A7C15


class CliError(Exception):
    """User-facing configuration error: message without traceback."""


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``lo:hi:n`` or ``lo:hi:n:log`` into a dense grid."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise CliError(f"bad grid '{spec}', expected lo:hi:n[:log]")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise CliError(f"bad grid '{spec}': {exc}") from None
    if count < 2 or hi <= lo:
        raise CliError(f"bad grid '{spec}': need hi > lo and n >= 2")
    if len(parts) == 4:
        if parts[3] != "log":
            raise CliError(f"bad grid '{spec}': unknown mode '{parts[3]}'")
        if lo <= 0:
            raise CliError("log grids need a positive lower edge")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def parse_state(spec: str, window: SiteWindow) -> StateVector:
    """Resolve a state preset or an explicit ``@file`` amplitude list."""
    n = window.n_sites
    spec = spec.strip()
    if spec.startswith("@"):
        raw = np.loadtxt(spec[1:], dtype=np.complex128, ndmin=1)
        state = StateVector(raw)
        if state.dim != n:
            raise CliError(f"state file has {state.dim} amplitudes, expected {n}")
        if not state.normalized:
            raise CliError("explicit state is not normalized")
        return state
    if spec == "special":
        return special_state(window)
    if spec == "uniform":
        return uniform_state(n)
    if spec.startswith("site(") and spec.endswith(")"):
        return site_state(n, int(spec[5:-1]))
    if spec.startswith("eigen(") and spec.endswith(")"):
        inner = spec[6:-1].split(",")
        if len(inner) != 2 or int(inner[0]) != 0:
            raise CliError("eigen presets are eigen(0,l) with l = 1..N-1")
        l = int(inner[1])
        if not 1 <= l <= n - 1:
            raise CliError(f"eigen index {l} outside [1, {n - 1}]")
        return StateVector(all_ones_eigenvectors(n)[:, l])
    if spec.startswith("random-bright(") and spec.endswith(")"):
        return random_bright_state(window, int(spec[14:-1]))
    raise CliError(f"unknown state preset '{spec}'")


def load_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment, blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Options:
    """Merged view of CLI flags, config file entries, and defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if args.config else {}

    def get(self, key: str, cast, default):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        raw = self.config.get(key)
        if raw is not None:
            try:
                return cast(raw)
            except (TypeError, ValueError) as exc:
                raise CliError(f"config key '{key}': {exc}") from None
        return default

    def require(self, key: str, cast):
        value = self.get(key, cast, None)
        if value is None:
            raise CliError(f"missing required option '--{key.replace('_', '-')}'")
        return value


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{raw}'")


def _parse_rates(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _out_dir(opts: _Options) -> Path:
    out = Path(opts.get("out", str, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_window(opts: _Options) -> tuple[AllToAllModel, SiteWindow]:
    n = opts.require("n", int)
    m = opts.require("m", int)
    coupling = opts.get("j", float, 1.0)
    try:
        return AllToAllModel(n, coupling), SiteWindow(n, m)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _interval_law(opts: _Options, rate: float | None):
    protocol = opts.get("protocol", str, "exp")
    if protocol == "exp":
        if rate is None:
            raise CliError("exponential protocol needs --r")
        return ExponentialIntervals(rate)
    if protocol == "sharp":
        period = opts.require("period", float)
        return SharpIntervals(period)
    raise CliError(f"unknown protocol '{protocol}' (use exp or sharp)")


def _plot_enabled(opts: _Options) -> bool:
    if getattr(opts.args, "no_plot", False):
        return False
    return opts.get("plot", _parse_bool, True)


def _single_rate(opts: _Options) -> float:
    rates = opts.get("r", _parse_rates, None)
    if rates is None:
        return None
    if len(rates) != 1:
        raise CliError("this command takes exactly one --r value")
    return rates[0]


def _derived_seed(master: int, index: int) -> int:
    return (master + SEED_STRIDE * (index + 1)) % 2**64


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(opts: _Options) -> int:
    model, window = _model_window(opts)
    state = parse_state(opts.get("state", str, "uniform"), window)
    law = _interval_law(opts, _single_rate(opts))
    cfg = ProtocolConfig(
        model=model,
        window=window,
        initial_state=state,
        interval_law=law,
        n_trajectories=opts.get("trajectories", int, 100_000),
        master_seed=opts.get("seed", int, 0),
        max_measurements=opts.get("max_measurements", int, 1_000_000),
    )
    ens = monte_carlo(cfg, bins=opts.get("bins", int, 400))
    out = _out_dir(opts)

    write_csv(
        out / "trajectories.csv",
        ["index", "detected", "first_detection_time", "n_measurements"],
        (
            (i, ens.detected[i], ens.first_detection_time[i], ens.n_measurements[i])
            for i in range(ens.n_trajectories)
        ),
    )
    write_csv(
        out / "survival.csv",
        ["t", "survival", "stderr"],
        zip(ens.survival_times, ens.survival, ens.survival_stderr),
    )
    centers = 0.5 * (ens.density_edges[1:] + ens.density_edges[:-1])
    write_csv(
        out / "fdp.csv",
        ["t", "density", "stderr"],
        zip(centers, ens.density, ens.density_stderr),
    )

    if ens.n_censored:
        print(
            f"warning: {ens.n_censored} trajectories censored at the "
            f"measurement cap; they are excluded from the mean",
            file=sys.stderr,
        )
    print(f"mean first detection time = {ens.mean_fdt:.6g} +/- {ens.mean_fdt_stderr:.2g}")
    print(f"detected fraction = {ens.detected_fraction:.6g}")

    if _plot_enabled(opts):
        plotting.save_survival_figure(
            out / "survival.png", ens.survival_times, ens.survival, ens.survival_stderr
        )
        overlay_grid = overlay_vals = None
        if isinstance(law, ExponentialIntervals) and is_bright(
            state, bright_basis_all_to_all(window)
        ):
            coeffs = analytic.coefficients(state, window)
            overlay_grid = np.linspace(0.0, ens.density_edges[-1], 500)
            overlay_vals = analytic.first_detection_density(
                coeffs, law.rate, model, window, overlay_grid
            ).values
        plotting.save_density_figure(
            out / "fdp.png", centers, ens.density, ens.density_stderr,
            overlay_grid, overlay_vals,
        )
    return 0


# ---------------------------------------------------------------------------
# mfdt-sweep


def cmd_mfdt_sweep(opts: _Options) -> int:
    model, window = _model_window(opts)
    state = parse_state(opts.get("state", str, "uniform"), window)
    if not is_bright(state, bright_basis_all_to_all(window)):
        raise CliError("mean-detection-time sweeps need a bright initial state")
    rates = opts.require("r_grid", parse_grid)
    if (rates <= 0).any():
        raise CliError("rates must be positive")
    coeffs = analytic.coefficients(state, window)
    mfdt_analytic = np.array(
        [analytic.mfdt(coeffs, r, model, window) for r in rates]
    )
    r_star = analytic.optimal_rate(coeffs, model, window)
    minimum_mark = np.zeros(rates.size, dtype=int)
    minimum_mark[int(np.argmin(mfdt_analytic))] = 1

    n_traj = opts.get("trajectories", int, 0)
    mc_mean = mc_err = None
    if n_traj > 0:
        seed = opts.get("seed", int, 0)
        mc_mean = np.empty(rates.size)
        mc_err = np.empty(rates.size)
        for k, rate in enumerate(rates):
            cfg = ProtocolConfig(
                model=model,
                window=window,
                initial_state=state,
                interval_law=ExponentialIntervals(rate),
                n_trajectories=n_traj,
                master_seed=_derived_seed(seed, k),
                max_measurements=opts.get("max_measurements", int, 1_000_000),
            )
            ens = monte_carlo(cfg)
            mc_mean[k] = ens.mean_fdt
            mc_err[k] = ens.mean_fdt_stderr

    out = _out_dir(opts)
    header = ["r", "mfdt_analytic", "r_star", "at_minimum"]
    columns = [rates, mfdt_analytic, np.full(rates.size, r_star), minimum_mark]
    if mc_mean is not None:
        header += ["mfdt_mc", "mfdt_mc_stderr"]
        columns += [mc_mean, mc_err]
    write_csv(out / "mfdt_sweep.csv", header, zip(*columns))
    if math.isfinite(r_star):
        print(f"optimal rate = {r_star:.8g}")
    else:
        print("optimal rate = none (state has no weight on the complement)")

    if _plot_enabled(opts):
        plotting.save_sweep_figure(
            out / "mfdt_sweep.png", rates, mfdt_analytic,
            r_star if math.isfinite(r_star) else None, mc_mean, mc_err,
        )
    return 0


# ---------------------------------------------------------------------------
# fdp


def cmd_fdp(opts: _Options) -> int:
    model, window = _model_window(opts)
    state = parse_state(opts.get("state", str, "uniform"), window)
    if not is_bright(state, bright_basis_all_to_all(window)):
        raise CliError("exact detection densities need a bright initial state")
    rates = opts.get("r", _parse_rates, None)
    if not rates:
        raise CliError("need at least one --r value")
    grid = opts.require("t_grid", parse_grid)
    if grid.min() < 0:
        raise CliError("time grid must be nonnegative")
    coeffs = analytic.coefficients(state, window)

    curves = {}
    timescale_rows = []
    for rate in rates:
        curve = analytic.first_detection_density(coeffs, rate, model, window, grid)
        roots = analytic.cubic_roots(rate, model, window)
        curves[rate] = curve
        timescale_rows.append(
            (rate, roots.s1, roots.s2_real, roots.s2_imag, curve.decay_timescale)
        )

    out = _out_dir(opts)
    header = ["t"] + [f"F_r={_fmt(rate)}" for rate in rates]
    write_csv(
        out / "fdp.csv",
        header,
        zip(grid, *[curves[rate].values for rate in rates]),
    )
    write_csv(
        out / "timescales.csv",
        ["r", "s1", "s2_real", "s2_imag", "t_m"],
        timescale_rows,
    )

    n_traj = opts.get("trajectories", int, 0)
    mc_columns = {}
    if n_traj > 0:
        seed = opts.get("seed", int, 0)
        for k, rate in enumerate(rates):
            cfg = ProtocolConfig(
                model=model,
                window=window,
                initial_state=state,
                interval_law=ExponentialIntervals(rate),
                n_trajectories=n_traj,
                master_seed=_derived_seed(seed, k),
                max_measurements=opts.get("max_measurements", int, 1_000_000),
            )
            ens = monte_carlo(cfg)
            times = ens.first_detection_time[ens.detected]
            counts, _ = np.histogram(times, bins=grid)
            widths = np.diff(grid)
            mc_columns[rate] = (
                counts / (ens.n_trajectories * widths),
                np.sqrt(counts) / (ens.n_trajectories * widths),
            )
        header = ["bin_left", "bin_right"]
        columns = [grid[:-1], grid[1:]]
        for rate in rates:
            header += [f"F_mc_r={_fmt(rate)}", f"stderr_r={_fmt(rate)}"]
            columns += [mc_columns[rate][0], mc_columns[rate][1]]
        write_csv(out / "fdp_mc.csv", header, zip(*columns))

    for rate, s1, _, _, t_m in timescale_rows:
        print(f"r = {rate:g}: tail decay time = {t_m:.8g} (slow pole {s1:.8g})")

    if _plot_enabled(opts):
        plotting.save_density_curves_figure(
            out / "fdp.png", grid,
            {f"r = {rate:g}": curves[rate].values for rate in rates},
        )
    return 0


# ---------------------------------------------------------------------------
# darkstates


def cmd_darkstates(opts: _Options) -> int:
    hamiltonian_path = opts.get("hamiltonian", str, None)
    if hamiltonian_path:
        hmat = np.loadtxt(hamiltonian_path, dtype=np.complex128, ndmin=2)
        n = hmat.shape[0]
        m = opts.require("m", int)
        try:
            window = SiteWindow(n, m)
            spectrum = generic_eigenbasis(hmat)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        model, window = _model_window(opts)
        spectrum = closed_form_eigenbasis(model)
        n = window.n_sites
    p_target, _ = window_projectors(window)
    dec = decompose(spectrum, p_target)
    state_spec = opts.get("state", str, "uniform")
    state = parse_state(state_spec, window)
    p_det = eventual_detection_probability(state, dec)

    print(f"dark dimension   = {dec.dark_dim}")
    print(f"bright dimension = {dec.bright_dim}")
    print(f"eventual detection probability of '{state_spec}' = {p_det:.12g}")
    for k in range(dec.dark_dim):
        vec = dec.dark_basis[:, k]
        rendered = ", ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in vec)
        print(f"dark vector {k + 1}: [{rendered}]")

    out = _out_dir(opts)
    header = ["site"] + [
        part
        for k in range(dec.dark_dim)
        for part in (f"dark{k + 1}_re", f"dark{k + 1}_im")
    ]
    rows = []
    for site in range(1, n + 1):
        row = [site]
        for k in range(dec.dark_dim):
            z = dec.dark_basis[site - 1, k]
            row += [z.real, z.imag]
        rows.append(row)
    write_csv(out / "darkstates.csv", header, rows)
    if _plot_enabled(opts) and dec.dark_dim:
        plotting.save_basis_figure(
            out / "darkstates.png", dec.dark_basis, "dark basis"
        )
    return 0


# ---------------------------------------------------------------------------
# roots


def cmd_roots(opts: _Options) -> int:
    model, window = _model_window(opts)
    rates = opts.require("r_grid", parse_grid)
    if (rates <= 0).any():
        raise CliError("rates must be positive")
    rows = []
    for rate in rates:
        roots = analytic.cubic_roots(rate, model, window)
        rows.append(
            (
                rate, roots.s1, roots.s2_real, roots.s2_imag, roots.pole_r,
                roots.p, roots.q, roots.discriminant, 1.0 / abs(roots.s1),
            )
        )
    out = _out_dir(opts)
    write_csv(
        out / "roots.csv",
        ["r", "s1", "s2_real", "s2_imag", "pole_r", "p", "q", "discriminant", "t_m"],
        rows,
    )
    if _plot_enabled(opts):
        plotting.save_timescale_figure(
            out / "roots.png", rates, [row[-1] for row in rows]
        )
    return 0


# ---------------------------------------------------------------------------
# validate


def _check(name: str, passed: bool, detail: str, failures: list[str]) -> None:
    print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    if not passed:
        failures.append(name)


def cmd_validate(opts: _Options) -> int:
    model, window = _model_window(opts) if opts.get("n", int, None) else (
        AllToAllModel(6, 1.0), SiteWindow(6, 3)
    )
    n_traj = opts.get("trajectories", int, 20_000)
    seed = opts.get("seed", int, 0)
    tol_scale = opts.get("tol_scale", float, 1.0)
    fault = opts.get("inject_fault", str, None)
    failures: list[str] = []
    rng = np.random.default_rng(seed + 1)

    def state_coeffs(state):
        coeffs = analytic.coefficients(state, window)
        if fault == "a3-sign":
            coeffs = replace(coeffs, a3=-coeffs.a3)
        return coeffs

    def mc_mean(state, rate, run_seed):
        cfg = ProtocolConfig(
            model=model, window=window, initial_state=state,
            interval_law=ExponentialIntervals(rate),
            n_trajectories=n_traj, master_seed=run_seed,
        )
        ens = monte_carlo(cfg)
        return ens, ens.mean_fdt, ens.mean_fdt_stderr

    # 1. Monte Carlo vs exact mean, real state (a3 = 0 here).
    star = special_state(window)
    ens_star, mean, err = mc_mean(star, 1.0, _derived_seed(seed, 0))
    exact = analytic.mfdt(state_coeffs(star), 1.0, model, window)
    _check(
        "mfdt-mc-match-special-state",
        abs(mean - exact) <= 5.0 * err * tol_scale,
        f"mc {mean:.5f} +/- {err:.5f} vs exact {exact:.5f}",
        failures,
    )

    # 2. Same comparison on a strongly complex state (equal mix of the
    # uniform mode and a bright zero mode, in quadrature): the interference
    # functional a3 is large here, so a wrong a3 sign shifts the exact mean
    # far outside the Monte Carlo error.
    vecs = all_ones_eigenvectors(window.n_sites)
    mix = (vecs[:, 0] + 1j * vecs[:, window.cut]) / np.sqrt(2.0)
    complex_state = StateVector(mix)
    _, mean_c, err_c = mc_mean(complex_state, 1.0, _derived_seed(seed, 1))
    exact_c = analytic.mfdt(state_coeffs(complex_state), 1.0, model, window)
    _check(
        "mfdt-mc-match-complex-state",
        abs(mean_c - exact_c) <= 5.0 * err_c * tol_scale,
        f"mc {mean_c:.5f} +/- {err_c:.5f} vs exact {exact_c:.5f}",
        failures,
    )

    # 3. Root certificates over random parameters.
    ok, detail = True, "100 random parameter draws"
    for _ in range(100):
        n_rand = int(rng.integers(2, 31))
        m_rand = int(rng.integers(1, n_rand))
        j_rand = float(10 ** rng.uniform(-1, 1))
        r_rand = float(10 ** rng.uniform(-2, 2))
        try:
            analytic.cubic_roots(
                r_rand, AllToAllModel(n_rand, j_rand), SiteWindow(n_rand, m_rand)
            )
        except analytic.ConsistencyError as exc:
            ok, detail = False, str(exc)
            break
    _check("root-certificates", ok, detail, failures)

    # 4. Overlap sum rules on random states.
    ok, detail = True, "50 random states"
    for _ in range(50):
        vec = rng.normal(size=window.n_sites) + 1j * rng.normal(size=window.n_sites)
        try:
            analytic.bright_overlap_sums(StateVector(vec), window)
        except analytic.ConsistencyError as exc:
            ok, detail = False, str(exc)
            break
    _check("overlap-sum-rules", ok, detail, failures)

    # 5. Density normalization and mean-time consistency.
    coeffs_c = state_coeffs(complex_state)
    curve = analytic.first_detection_density(
        coeffs_c, 2.0, model, window, np.linspace(0, 1, 8)
    )
    mass_gap = abs(curve.total_mass() - 1.0)
    mean_gap = abs(
        curve.mean_time() - analytic.mfdt(coeffs_c, 2.0, model, window)
    ) / analytic.mfdt(coeffs_c, 2.0, model, window)
    _check(
        "density-normalization",
        mass_gap <= 1e-6 * tol_scale and mean_gap <= 1e-5 * tol_scale,
        f"|mass - 1| = {mass_gap:.2e}, mean-time gap = {mean_gap:.2e}",
        failures,
    )

    # 6. Numerical Laplace transform of the empirical survival curve.
    estimate = numeric_laplace_of_survival(ens_star, 1.0)
    exact_transform = analytic.survival_laplace(
        state_coeffs(star), 1.0, 1.0, model, window
    )
    _check(
        "laplace-mc-match",
        abs(estimate.value - exact_transform) <= max(estimate.error, 1e-3) * tol_scale
        and estimate.reliable,
        f"numeric {estimate.value:.5f} +/- {estimate.error:.5f} "
        f"vs exact {exact_transform:.5f}",
        failures,
    )

    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return 1
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdetect",
        description=(
            "Monitored fully-connected lattice: Monte Carlo measurement "
            "protocol and exact first-detection statistics"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, rates: bool = False) -> None:
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--n", type=int, help="number of lattice sites")
        p.add_argument("--m", type=int, help="window cut (complement size)")
        p.add_argument("--j", type=float, help="hopping amplitude (default 1)")
        p.add_argument("--seed", type=int, help="64-bit master seed (default 0)")
        p.add_argument("--out", help="output directory (default .)")
        p.add_argument(
            "--state",
            help="initial state: special | uniform | site(k) | eigen(0,l) | "
            "random-bright(seed) | @amplitude-file",
        )
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
        if rates:
            p.add_argument(
                "--r", action="append", type=float, dest="r",
                help="measurement rate (repeatable where a list is meaningful)",
            )

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo protocol")
    common(p_sim, rates=True)
    p_sim.add_argument("--protocol", choices=("exp", "sharp"),
                       help="interval law (default exp)")
    p_sim.add_argument("--period", type=float, help="period for --protocol sharp")
    p_sim.add_argument("--trajectories", type=int, help="ensemble size (default 1e5)")
    p_sim.add_argument("--bins", type=int, help="histogram bins (default 400)")
    p_sim.add_argument("--max-measurements", type=int, dest="max_measurements",
                       help="censoring cap per trajectory (default 1e6)")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("mfdt-sweep", help="mean detection time over a rate grid")
    common(p_sweep)
    p_sweep.add_argument("--r-grid", dest="r_grid", type=parse_grid,
                         help="rate grid lo:hi:n[:log]")
    p_sweep.add_argument("--trajectories", type=int,
                         help="optional Monte Carlo cross-check per grid point")
    p_sweep.add_argument("--max-measurements", type=int, dest="max_measurements")
    p_sweep.set_defaults(func=cmd_mfdt_sweep)

    p_fdp = sub.add_parser("fdp", help="exact first-detection density curves")
    common(p_fdp, rates=True)
    p_fdp.add_argument("--t-grid", dest="t_grid", type=parse_grid,
                       help="time grid lo:hi:n[:log]")
    p_fdp.add_argument("--trajectories", type=int,
                       help="optional Monte Carlo histogram per rate")
    p_fdp.add_argument("--max-measurements", type=int, dest="max_measurements")
    p_fdp.set_defaults(func=cmd_fdp)

    p_dark = sub.add_parser("darkstates", help="dark/bright decomposition report")
    common(p_dark)
    p_dark.add_argument("--hamiltonian",
                        help="file with an explicit Hermitian matrix "
                        "(overrides the all-to-all model)")
    p_dark.set_defaults(func=cmd_darkstates)

    p_roots = sub.add_parser("roots", help="pole cubic roots over a rate grid")
    common(p_roots)
    p_roots.add_argument("--r-grid", dest="r_grid", type=parse_grid)
    p_roots.set_defaults(func=cmd_roots)

    p_val = sub.add_parser("validate", help="cross-module consistency checks")
    common(p_val)
    p_val.add_argument("--trajectories", type=int,
                       help="Monte Carlo size per check (default 2e4)")
    p_val.add_argument("--tol-scale", dest="tol_scale", type=float,
                       help="multiply every check tolerance (default 1)")
    p_val.add_argument("--inject-fault", dest="inject_fault",
                       help=argparse.SUPPRESS)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(_Options(args))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
