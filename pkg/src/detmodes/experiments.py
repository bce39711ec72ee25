"""
Experiment drivers wiring the solver, diagnostics, and synchronization
modules into the runnable pipelines behind the CLI subcommands.

Every pipeline is deterministic for a fixed spec and seed: initial data,
calibration sweeps, and forcing all derive from the recorded seeds, and
output files are written with repr-exact floats.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np

from .diagnostics import (
    DiagnosticsCollector,
    WavenumberParams,
    default_window,
    fit_scaling_exponent,
    grashof_steady,
)
from .fieldio import (
    read_checkpoint,
    write_checkpoint,
    write_csv,
    write_shell_norm_csv,
    write_spectra_csv,
)
from .grid import Grid, SpectralField, band_noise, l2_norm, zero_field
from .runspec import RunSpec, SpecError, write_manifest
from .shells import calibrate_bernstein, shell_norms
from .solver import (
    FlowState,
    Forcing,
    StepperConfig,
    energy,
    enstrophy,
    enstrophy_balance_residual,
    integrate,
    kolmogorov_amplitude_for_grashof,
    kolmogorov_forcing,
    palinstrophy,
    taylor_green_exact,
    taylor_green_state,
    velocity_from_vorticity,
    zero_forcing,
)
from .sync import SyncConfig, find_critical_q, run_sync


@lru_cache(maxsize=16)
def cached_bernstein_constant(grid: Grid, seed: int, samples: int) -> float:
    return calibrate_bernstein(grid, seed=seed, n_samples=samples).c_b


def build_grid(spec: RunSpec) -> Grid:
    return Grid(n=spec["n"], L=spec["L"])


def build_forcing(spec: RunSpec, grid: Grid) -> Forcing:
    k_f = 2 ** spec["forcing.shell"]
    grashof = spec["forcing.grashof"]
    if grashof is not None:
        amplitude = kolmogorov_amplitude_for_grashof(grid, spec["nu"], grashof, k_f)
    else:
        amplitude = spec["forcing.amplitude"]
    if amplitude == 0.0:
        return zero_forcing(grid)
    return kolmogorov_forcing(grid, amplitude, k_f)


def build_initial_state(spec: RunSpec, grid: Grid, seed: int | None = None) -> FlowState:
    kind = spec["ic.kind"]
    nu = spec["nu"]
    if kind == "zero":
        return FlowState(omega=zero_field(grid), t=0.0, nu=nu)
    if kind == "taylor-green":
        return taylor_green_state(grid, nu, amplitude=spec["ic.amplitude"])
    omega = band_noise(
        grid,
        seed if seed is not None else spec["seed"],
        k_low=spec["ic.k_low"],
        k_high=spec["ic.k_high"],
        target_l2=spec["ic.amplitude"],
    )
    return FlowState(omega=omega, t=0.0, nu=nu)


def resolved_window(spec: RunSpec, grid: Grid) -> float:
    w = spec["window"]
    return w if w is not None else default_window(spec["nu"], grid.L)


def _forcing_dict(spec: RunSpec, forcing: Forcing, nu: float) -> dict:
    return {
        "kind": forcing.kind,
        "shell": spec["forcing.shell"],
        "amplitude": spec["forcing.amplitude"],
        "grashof": grashof_steady(forcing, nu) if forcing.kind == "steady" else None,
    }


# ---------------------------------------------------------------------------
# pipelines


def run_simulate(spec: RunSpec, out_dir: Path) -> None:
    grid = build_grid(spec)
    forcing = build_forcing(spec, grid)
    cfg = StepperConfig(dt=spec["dt"], scheme=spec["scheme"])
    state = build_initial_state(spec, grid)
    if spec["spinup"] > 0:
        state = integrate(state, forcing, cfg, state.t + spec["spinup"])

    history: list[FlowState] = []
    rows: list[list] = []

    def on_sample(s: FlowState) -> None:
        history.append(s)
        rows.append([s.t, enstrophy(s), palinstrophy(s), energy(s)])

    final = integrate(
        state, forcing, cfg, state.t + spec["t_end"],
        sample_every=spec["output.cadence"], on_sample=on_sample,
    )
    write_csv(out_dir / "series.csv", ["t", "enstrophy", "palinstrophy", "energy"], rows,
              header_params={"nu": spec["nu"], "dt": spec["dt"], "scheme": spec["scheme"]})
    residual = enstrophy_balance_residual(history, forcing)
    summary = {
        "t_final": final.t,
        "enstrophy_final": enstrophy(final),
        "balance_residual": residual,
        "grashof": grashof_steady(forcing, spec["nu"]),
    }
    if spec["ic.kind"] == "taylor-green" and spec["forcing.amplitude"] == 0.0 \
            and spec["forcing.grashof"] is None:
        exact = taylor_green_exact(grid, spec["nu"], final.t, amplitude=spec["ic.amplitude"])
        err = l2_norm(SpectralField(grid, final.omega.coeffs - exact.coeffs)) / l2_norm(exact)
        summary["taylor_green_relative_l2_error"] = err
        (out_dir / "tg_error.json").write_text(
            json.dumps({"relative_l2_error": err, "t": final.t}, sort_keys=True, indent=1) + "\n"
        )
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    write_checkpoint(out_dir, "final", final, dt=spec["dt"],
                     forcing_spec=_forcing_dict(spec, forcing, spec["nu"]), seed=spec["seed"])


def run_diagnose(spec: RunSpec, out_dir: Path) -> None:
    grid = build_grid(spec)
    forcing = build_forcing(spec, grid)
    cfg = StepperConfig(dt=spec["dt"], scheme=spec["scheme"])
    params = spec.wavenumber_params()
    window = resolved_window(spec, grid)
    c_b = cached_bernstein_constant(grid, spec["seed"], spec["calibrate.samples"])
    state = build_initial_state(spec, grid)
    if spec["spinup"] > 0:
        state = integrate(state, forcing, cfg, state.t + spec["spinup"])

    collector = DiagnosticsCollector(
        nu=spec["nu"], params=params, c_b=c_b,
        window=window, transient_fraction=spec["transient_fraction"],
    )
    final = integrate(
        state, forcing, cfg, state.t + spec["t_end"],
        sample_every=spec["output.cadence"],
        on_sample=lambda s: collector.observe(s),
    )
    _write_diagnostics_csv(out_dir / "diagnostics.csv", spec, grid, collector)
    summary = collector.summary(forcing=forcing)
    payload = summary.as_dict()
    payload["params"] = params.as_dict()
    (out_dir / "summary.json").write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    write_checkpoint(out_dir, "final", final, dt=spec["dt"],
                     forcing_spec=_forcing_dict(spec, forcing, spec["nu"]), seed=spec["seed"])
    l2 = shell_norms(final.omega, 2)
    linf = shell_norms(final.omega, np.inf)
    write_shell_norm_csv(out_dir / "shells_final.csv", grid, l2, linf,
                         header_params={"t": final.t, "quantity": "vorticity"})


def _write_diagnostics_csv(path: Path, spec: RunSpec, grid: Grid,
                           collector: DiagnosticsCollector) -> None:
    n_bands = grid.q_max + 2
    cols = ["t", "enstrophy", "palinstrophy", "lambda1", "lambda2", "lambda",
            "lambda_q", "lambda_unresolved"]
    for tag in ("omega_l2", "omega_linf", "u_l2", "u_linf", "gradlow_l2", "gradlow_linf"):
        cols += [f"{tag}_q{q}" for q in range(-1, n_bands - 1)]
    rows = []
    for r in collector.records:
        row = [r.t, r.enstrophy, r.palinstrophy,
               r.lambda1.value, r.lambda2.value, r.lambda_.value,
               r.lambda_.q, int(r.lambda_.unresolved)]
        for arr in (r.omega_shell_l2, r.omega_shell_linf, r.u_shell_l2,
                    r.u_shell_linf, r.grad_low_l2, r.grad_low_linf):
            row += [float(x) for x in arr]
        rows.append(row)
    params = collector.params.as_dict()
    params.update({"window": collector.window,
                   "transient_fraction": collector.transient_fraction,
                   "c_b": collector.c_b, "nu": collector.nu})
    write_csv(path, cols, rows, header_params=params)


def _sync_config(spec: RunSpec, grid: Grid, forcing: Forcing, Q: int) -> SyncConfig:
    params = spec.wavenumber_params()
    cfg = StepperConfig(dt=spec["dt"], scheme=spec["scheme"])
    master = build_initial_state(spec, grid, seed=spec["seed"])
    if spec["spinup"] > 0:
        master = integrate(master, forcing, cfg, master.t + spec["spinup"])
    slave_seed = spec["sync.slave_seed"]
    if slave_seed is None:
        slave_seed = spec["seed"] + 1000
    slave_omega = band_noise(
        grid, slave_seed,
        k_low=spec["ic.k_low"], k_high=spec["ic.k_high"], target_l2=spec["ic.amplitude"],
    )
    slave = FlowState(omega=slave_omega, t=master.t, nu=spec["nu"])
    return SyncConfig(
        grid=grid,
        nu=spec["nu"],
        forcing=forcing,
        Q=Q,
        dt=spec["dt"],
        t_end=master.t + spec["t_end"],
        coupling=spec["sync.coupling"],
        mu=spec["sync.mu"],
        scheme=spec["scheme"],
        sample_every=spec["output.cadence"],
        master_ic=master,
        slave_ic=slave,
        params=params,
        window=spec["window"],
        transient_fraction=spec["transient_fraction"],
    )


def _write_sync_series(path: Path, res, header: dict) -> None:
    cols = ["t", "diff_l2_u", "diff_l2_omega", "low_mode_diff", "lambda",
            "I", "rhs", "ratio", "phi", "psi"]
    rows = []
    for i in range(res.times.size):
        rows.append([
            res.times[i], res.diff_u_l2[i], res.diff_omega_l2[i],
            res.low_mode_diff_l2[i], res.lambda_master[i],
            res.flux[i], res.flux_rhs[i], res.flux_ratio[i],
            res.phi[i], res.psi[i],
        ])
    write_csv(path, cols, rows, header_params=header)


def _sync_summary(res) -> dict:
    ratios = res.flux_ratio[np.isfinite(res.flux_ratio)]
    return {
        "verdict": res.verdict,
        "decay_rate": res.decay_rate,
        "lambda_bar": res.lambda_bar,
        "q_bar": res.q_bar,
        "Q": res.Q,
        "coupling": res.coupling,
        "initial_diff": res.initial_diff,
        "final_diff": res.final_diff,
        "max_flux_ratio": float(np.max(ratios)) if ratios.size else 0.0,
        "params": res.params.as_dict(),
    }


def run_sync_experiment(spec: RunSpec, out_dir: Path) -> None:
    grid = build_grid(spec)
    forcing = build_forcing(spec, grid)
    cfg = _sync_config(spec, grid, forcing, spec["sync.q"])
    res = run_sync(cfg)
    header = {"nu": spec["nu"], "Q": res.Q, "coupling": res.coupling}
    header.update(res.params.as_dict())
    _write_sync_series(out_dir / "sync_series.csv", res, header)
    (out_dir / "summary.json").write_text(
        json.dumps(_sync_summary(res), sort_keys=True, indent=1) + "\n"
    )


def run_critical_q(spec: RunSpec, out_dir: Path) -> bool:
    """Sweep cutoffs; returns True when any verdict is inconclusive."""
    grid = build_grid(spec)
    forcing = build_forcing(spec, grid)
    q_values = [int(q) for q in spec["criticalq.q_values"]]
    cfg = _sync_config(spec, grid, forcing, q_values[0])
    result = find_critical_q(cfg, q_values)
    rows = [[r.Q, r.verdict, r.decay_rate, r.initial_diff, r.final_diff, r.lambda_bar]
            for r in result.rows]
    write_csv(out_dir / "critical_q.csv",
              ["Q", "verdict", "decay_rate", "initial_diff", "final_diff", "lambda_bar"],
              rows, header_params={"nu": spec["nu"], "coupling": spec["sync.coupling"]})
    summary = {
        "empirical_q": result.empirical_q,
        "theorem_q": result.theorem_q,
        "lambda_bar": result.lambda_bar,
        "monotone": result.monotone,
        "inconclusive": result.inconclusive,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    return result.inconclusive


def run_scaling(spec: RunSpec, out_dir: Path) -> None:
    grid = build_grid(spec)
    nu = spec["nu"]
    k_f = 2 ** spec["forcing.shell"]
    grashofs = spec["scaling.grashofs"]
    if grashofs is not None:
        amplitudes = [kolmogorov_amplitude_for_grashof(grid, nu, g, k_f) for g in grashofs]
    else:
        amplitudes = [float(a) for a in spec["scaling.amplitudes"]]
    study = scaling_study(spec, grid, amplitudes)
    rows = [[r["amplitude"], r["grashof"], r["d"], r["eta"], r["kappa_eta"],
             r["lambda_bar"], int(r["stationary"])] for r in study["rows"]]
    write_csv(out_dir / "scaling.csv",
              ["amplitude", "grashof", "d", "eta", "kappa_eta", "lambda_bar", "stationary"],
              rows, header_params={"nu": nu, "n": spec["n"], "L": spec["L"]})
    (out_dir / "summary.json").write_text(json.dumps(study["fit"], sort_keys=True, indent=1) + "\n")


def scaling_study(spec: RunSpec, grid: Grid, amplitudes: list[float]) -> dict:
    """Equilibrate one run per amplitude and fit log lambda_bar vs log G."""
    nu = spec["nu"]
    k_f = 2 ** spec["forcing.shell"]
    params = spec.wavenumber_params()
    window = resolved_window(spec, grid)
    c_b = cached_bernstein_constant(grid, spec["seed"], spec["calibrate.samples"])
    cfg = StepperConfig(dt=spec["dt"], scheme=spec["scheme"])
    rows = []
    for amplitude in amplitudes:
        forcing = kolmogorov_forcing(grid, amplitude, k_f) if amplitude > 0 else zero_forcing(grid)
        state = build_initial_state(spec, grid)
        if spec["spinup"] > 0:
            state = integrate(state, forcing, cfg, state.t + spec["spinup"])
        collector = DiagnosticsCollector(
            nu=nu, params=params, c_b=c_b,
            window=window, transient_fraction=spec["transient_fraction"],
        )
        integrate(state, forcing, cfg, state.t + spec["t_end"],
                  sample_every=spec["output.cadence"],
                  on_sample=lambda s: collector.observe(s))
        summary = collector.summary(forcing=forcing)
        rows.append({
            "amplitude": amplitude,
            "grashof": summary.grashof,
            "d": summary.d,
            "eta": summary.eta,
            "kappa_eta": summary.kappa_eta,
            "lambda_bar": summary.lambda_bar,
            "stationary": summary.stationary,
            "avg_palinstrophy": summary.avg_palinstrophy,
        })
    usable = [r for r in rows if r["grashof"] > 0 and r["stationary"]]
    fit: dict = {"n_rows": len(rows), "n_fit": len(usable)}
    if len(usable) >= 2:
        slope, intercept = fit_scaling_exponent(
            [r["grashof"] for r in usable], [r["lambda_bar"] for r in usable]
        )
        d_mean = float(np.mean([r["d"] for r in usable]))
        fit.update({
            "exponent": slope,
            "intercept": intercept,
            "d_mean": d_mean,
            "predicted_exponent": 2.0 / (d_mean + 4.0),
        })
    return {"rows": rows, "fit": fit}


def run_calibrate(spec: RunSpec, out_dir: Path) -> None:
    grid = build_grid(spec)
    cal = calibrate_bernstein(grid, seed=spec["seed"], n_samples=spec["calibrate.samples"])
    payload = {
        "c_b": cal.c_b,
        "max_ratio": cal.max_ratio,
        "per_shell_max": {str(q): v for q, v in sorted(cal.per_shell_max.items())},
        "n_samples": cal.n_samples,
        "n": grid.n,
        "L": grid.L,
    }
    (out_dir / "bernstein.json").write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def export_spectra(checkpoint_dir: str | Path, name: str, out_path: str | Path) -> None:
    """Shell-spectrum CSV (q, lambda_q, u_l2, omega_l2, omega_linf) from a checkpoint."""
    state, meta = read_checkpoint(checkpoint_dir, name)
    omega = state.omega
    grid = omega.grid
    u1, u2 = velocity_from_vorticity(omega)
    from .shells import shell_basis

    basis = shell_basis(grid)
    uw = np.abs(u1.coeffs) ** 2 + np.abs(u2.coeffs) ** 2
    u_l2 = grid.L * np.sqrt(np.einsum("qij,ij->q", basis.bands**2, uw))
    omega_l2 = shell_norms(omega, 2)
    omega_linf = shell_norms(omega, np.inf)
    write_spectra_csv(out_path, grid, u_l2, omega_l2, omega_linf,
                      header_params={"n": grid.n, "L": grid.L, "t": state.t,
                                     "nu": state.nu})


# ---------------------------------------------------------------------------
# top-level dispatch


PIPELINES = {
    "simulate": run_simulate,
    "diagnose": run_diagnose,
    "sync": run_sync_experiment,
    "scaling": run_scaling,
    "calibrate-cb": run_calibrate,
}


def execute(spec: RunSpec, out_dir: str | Path) -> dict:
    """Run the spec's pipeline, then write the manifest last.

    On failure the partial outputs are kept and the manifest records the
    error; the manifest is always the final write.  Returns the manifest
    augmented with an 'inconclusive' flag for cutoff sweeps.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "spec.yaml").write_text(spec.serialize())
    started = datetime.now(timezone.utc).isoformat()
    inconclusive = False
    try:
        if spec.experiment == "critical-q":
            inconclusive = run_critical_q(spec, out_dir)
        else:
            PIPELINES[spec.experiment](spec, out_dir)
    except Exception as exc:  # keep partial outputs, mark failed
        finished = datetime.now(timezone.utc).isoformat()
        manifest = write_manifest(out_dir, spec, "failed", started, finished, error=repr(exc))
        manifest["exception"] = exc
        raise RuntimeError(f"run failed; partial outputs in {out_dir}: {exc}") from exc
    finished = datetime.now(timezone.utc).isoformat()
    manifest = write_manifest(out_dir, spec, "ok", started, finished)
    manifest["inconclusive"] = inconclusive
    return manifest
