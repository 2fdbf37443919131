"""Scenario execution: wiring configuration into runs, reports, and figures.

Every scenario writes delimited output plus rendered figures into the chosen
output directory, together with ``summary.json``, the resolved configuration,
and ``manifest.json``.  The manifest is written even when a run fails, with
the error recorded, so batch drivers can always inspect what happened.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
import time

import numpy as np

from . import adiabatic as adb
from . import interferometry as meas
from . import pde
from . import plots
from .config import ConfigError, RunConfig
from .model import (
    ModelError,
    build_ensemble,
    build_profiles,
    group_velocity,
    mixing_angles,
)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return str(path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        # keep emitted JSON strictly standard: no Infinity/NaN literals
        return float(obj) if math.isfinite(obj) else repr(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def build_boundary(config: RunConfig, profile, params) -> pde.BoundaryInput:
    """Entrance drives from the pulse sections (resolving 'matched' mode)."""
    p1 = config.pulses.eps1
    e1 = pde.gaussian_pulse(p1.amplitude, p1.center, p1.fwhm, p1.phase)
    p2 = config.pulses.eps2
    if p2.mode == "off":
        e2 = lambda t: np.zeros_like(np.asarray(t, dtype=float), dtype=complex)
    elif p2.mode == "explicit":
        e2 = pde.gaussian_pulse(p2.amplitude, p2.center, p2.fwhm, p2.phase)
    else:
        vt0 = mixing_angles(profile, params).vartheta0
        ratio = math.tan(vt0) * complex(math.cos(p2.phase), math.sin(p2.phase))
        e2 = lambda t: ratio * np.asarray(e1(t))
    return pde.BoundaryInput(eps1_in=e1, eps2_in=e2)


def _setup(config: RunConfig):
    params = config.params
    profile = build_profiles(config.profile, params)
    ensemble = build_ensemble(config.ensemble, params)
    return params, profile, ensemble


def _solve(config: RunConfig, stations):
    params, profile, ensemble = _setup(config)
    boundary = build_boundary(config, profile, params)
    solver = pde.TransportSolver(
        params, profile, ensemble, cfl=config.numerics.cfl,
        pump_mode=config.numerics.pump_mode,
        monitor_threshold=config.numerics.monitor_threshold)
    record = solver.run(boundary, config.numerics.horizon, probes=stations,
                        record_every=config.numerics.record_every)
    return record


def _exit_fluxes(record: pde.RunRecord) -> dict:
    """Time-integrated entrance and exit fluxes, species resolved.

    The last probe station is treated as the exit face; keep it at z = L for
    meaningful numbers.
    """
    p = record.params
    ts = record.series["t"]
    zx = float(record.probe_z[-1])
    drive = p.c * (np.abs(record.bc_eps1) ** 2 + np.abs(record.bc_eps2) ** 2)
    input_light = float(np.trapezoid(drive, ts))
    e1 = record.probe_series("eps1", zx)
    e2 = record.probe_series("eps2", zx)
    output_light = float(np.trapezoid(
        p.c * (np.abs(e1) ** 2 + np.abs(e2) ** 2), record.t))
    speeds = record.ensemble.velocities()
    output_matter = 0.0
    for l in range(record.ensemble.nclasses):
        f3 = record.probe_series("phi3", zx, l)
        output_matter += float(speeds[l] * np.trapezoid(np.abs(f3) ** 2,
                                                        record.t))
    eff = output_matter / input_light if input_light > 0 else 0.0
    leak = output_light / input_light if input_light > 0 else 0.0
    return {"exit_z": zx, "input_light": input_light,
            "output_light": output_light, "output_matter": output_matter,
            "transfer_efficiency": eff, "light_leakage": leak}


def _closed_form(config: RunConfig):
    params, profile, _ = _setup(config)
    boundary = build_boundary(config, profile, params)
    seed = adb.entrance_combination(boundary.eps1_in, boundary.eps2_in,
                                    profile, params)
    sol = adb.propagate_polariton(seed, profile, params)
    return params, profile, boundary, sol


# -- scenarios ----------------------------------------------------------------


def _run_pde(config: RunConfig, out: Path):
    stations = list(config.probe_stations())
    L = config.params.L
    if not any(abs(z - L) <= 1e-9 for z in stations):
        stations.append(L)
    record = _solve(config, stations)

    outputs = []
    outputs.append(write_csv(
        out / "fields.csv",
        ["t", "z_probe", "field", "class_index", "re", "im"],
        record.to_rows()))
    s = record.series
    outputs.append(write_csv(
        out / "series.csv",
        ["t", "box_excitation", "flux_in", "flux_out", "monitor"],
        zip(s["t"], s["box"], s["flux_in"], s["flux_out"], s["monitor"])))

    zx = float(record.probe_z[-1])
    matter = np.sqrt(sum(
        np.abs(record.probe_series("phi3", zx, l)) ** 2
        for l in range(record.ensemble.nclasses)))
    curves = {
        "probe 1 entrance": np.abs(record.bc_eps1),
        "probe 1 exit": np.abs(record.probe_series("eps1", zx)),
        "probe 2 exit": np.abs(record.probe_series("eps2", zx)),
        "matter exit": matter,
    }
    # entrance curve rides the full step grid; resample to the record grid
    curves["probe 1 entrance"] = np.interp(record.t, s["t"],
                                           curves["probe 1 entrance"])
    outputs.append(plots.save_waveforms(out / "waveforms.svg", record.t,
                                        curves, xlabel="t",
                                        ylabel="|envelope|"))
    summary = {"meta": record.meta, "warnings": record.warnings,
               "fluxes": _exit_fluxes(record)}
    return outputs, summary


def _run_adiabatic(config: RunConfig, out: Path):
    params, profile, boundary, sol = _closed_form(config)
    angles = mixing_angles(profile, params)
    z = profile.z
    vg = group_velocity(z, profile, params)
    tau = np.array([sol.tau(float(zi)) for zi in z])

    t = np.linspace(0.0, config.numerics.horizon, 2001)
    e12 = sol.eps12(0.0, t)
    f3 = sol.phi3_out(t)

    outputs = []
    outputs.append(write_csv(
        out / "profile.csv",
        ["z", "omega01", "omega02", "vartheta", "theta", "vg", "tau"],
        zip(z, profile.om01, profile.om02, angles.vartheta, angles.theta,
            vg, tau)))
    outputs.append(write_csv(
        out / "adiabatic.csv",
        ["t", "eps12_re", "eps12_im", "phi3_out_re", "phi3_out_im",
         "matter_density"],
        zip(t, e12.real, e12.imag, f3.real, f3.imag, np.abs(f3) ** 2)))
    outputs.append(plots.save_profile(out / "profile.svg", z, profile.om01,
                                      profile.om02, angles.vartheta,
                                      angles.theta))
    outputs.append(plots.save_waveforms(
        out / "output.svg", t,
        {"combined probe (entrance)": np.abs(e12),
         "matter envelope (exit)": np.abs(f3)},
        xlabel="t", ylabel="|envelope|"))

    summary = {
        "tau_L": sol.tau_L,
        "vartheta0": angles.vartheta0,
        "theta_in": float(angles.theta[0]),
        "theta_out": float(angles.theta[-1]),
        "vg_in": float(vg[0]),
        "vg_out": float(vg[-1]),
        "consistency_residual": sol.consistency_residual(),
    }
    try:
        loss = adb.alpha_integrals(profile, params)
        summary["loss"] = {
            "sigma": loss.sigma, "eta": loss.eta, "alpha1": loss.alpha1,
            "alpha2": loss.alpha2, "bound": loss.bound,
            "bound_satisfied": loss.bound_satisfied,
            "attenuation": loss.attenuation,
        }
    except ModelError as exc:
        summary["loss"] = {"note": str(exc)}
    return outputs, summary


def _run_compare(config: RunConfig, out: Path):
    if config.ensemble.nclasses != 1:
        raise ConfigError(
            "compare requires ensemble.nclasses = 1; the closed form tracks "
            "a single velocity class")
    stations = list(config.probe_stations())
    L = config.params.L
    if not any(abs(z - L) <= 1e-9 for z in stations):
        stations.append(L)
    record = _solve(config, stations)
    _, _, _, sol = _closed_form(config)

    zx = float(record.probe_z[-1])
    sim = record.probe_series("phi3", zx, 0)
    ref = sol.phi3_out(record.t)
    denom = float(np.linalg.norm(ref))
    rel_l2 = float(np.linalg.norm(sim - ref)) / denom if denom > 0 else math.inf

    outputs = []
    outputs.append(write_csv(
        out / "compare.csv",
        ["t", "pde_re", "pde_im", "closed_re", "closed_im"],
        zip(record.t, sim.real, sim.imag, ref.real, ref.imag)))
    outputs.append(plots.save_waveforms(
        out / "compare.svg", record.t,
        {"transport solver": np.abs(sim), "closed form": np.abs(ref)},
        xlabel="t", ylabel="|matter envelope| at exit"))
    summary = {"rel_l2_error": rel_l2, "tau_L": sol.tau_L,
               "meta": record.meta, "warnings": record.warnings,
               "fluxes": _exit_fluxes(record)}
    return outputs, summary


def _run_measure(config: RunConfig, out: Path):
    m = config.measurement
    params = config.params
    setup = meas.SplitterSetup(eps0=m.eps0, glass_shift=m.glass_shift,
                               vartheta0=m.vartheta0)
    att = math.exp(-2.0 * m.alpha1)

    phi_axis = np.linspace(0.0, 2.0 * math.pi, m.phi_grid_n)
    ip_axis, im_axis = setup.intensities(phi_axis, params)
    ip_axis, im_axis = att * ip_axis, att * im_axis

    i_plus, i_minus = setup.intensities(m.phi, params)
    i_plus, i_minus = att * i_plus, att * i_minus
    records = []
    for t in range(m.trials):
        rec = meas.sample_counts(i_plus, i_minus, m.k_total,
                                 (config.seed, t))
        records.append(rec)
    hats = np.array([r.phi_hat for r in records])
    target = meas.fold_phase(m.phi)
    mean = float(np.mean(hats))
    rmse = float(np.sqrt(np.mean((hats - target) ** 2)))

    outputs = []
    outputs.append(write_csv(
        out / "intensities.csv",
        ["phi", "i_plus", "i_minus"],
        zip(phi_axis, ip_axis, im_axis)))
    outputs.append(write_csv(
        out / "records.csv",
        ["trial", "k_plus", "k_minus", "phi_hat"],
        ((t, r.k_plus, r.k_minus, r.phi_hat) for t, r in enumerate(records))))
    outputs.append(plots.save_intensity_curve(out / "intensity.svg", phi_axis,
                                              ip_axis, im_axis))
    outputs.append(plots.save_histogram(out / "phase_hats.svg", hats,
                                        xlabel="estimated phase [rad]",
                                        vline=target))
    summary = {
        "phi_true": m.phi, "phi_target_folded": target,
        "k_total": m.k_total, "trials": m.trials,
        "mean_estimate": mean, "bias": mean - target, "rmse": rmse,
        "alpha1": m.alpha1, "attenuation": att,
        "balanced": setup.is_balanced,
    }
    return outputs, summary


def _run_sweep(config: RunConfig, out: Path):
    if config.sweep.kind == "estimator":
        return _run_sweep_estimator(config, out)
    return _run_sweep_loss(config, out)


def _run_sweep_loss(config: RunConfig, out: Path):
    params = config.params
    gamma = params.gamma2
    if gamma <= 0:
        raise ConfigError("sweep.kind=loss needs params.gamma2 > 0")
    profile = build_profiles(config.profile, params)
    values = config.sweep.values()
    if config.sweep.parameter == "sigma":
        deltas = values * params.g1 ** 2 * params.n * params.v0 / (
            gamma * params.c)
    else:
        deltas = values
    rows = []
    for delta in deltas:
        pd = dataclasses.replace(params, delta=float(delta))
        loss = adb.alpha_integrals(profile, pd)
        rows.append((pd.delta, loss.sigma, loss.alpha1, loss.alpha2,
                     loss.bound, int(loss.bound_satisfied),
                     loss.attenuation))
    arr = np.array([r[:5] for r in rows], dtype=float)
    sig, a1, bound = np.abs(arr[:, 1]), arr[:, 2], arr[:, 4]

    outputs = []
    outputs.append(write_csv(
        out / "sweep.csv",
        ["delta", "sigma", "alpha1", "alpha2", "bound", "bound_satisfied",
         "attenuation"],
        rows))
    outputs.append(plots.save_loglog(
        out / "sweep.svg", sig, a1, xlabel="|sigma|",
        ylabel="loss exponent", label="alpha1", guide_slope=2.0,
        extra={"bound": bound}))
    summary = {"kind": "loss", "num": len(rows),
               "all_bounded": bool(np.all(a1 <= bound * (1.0 + 1e-12)))}
    if np.all(a1 > 0) and np.all(sig > 0):
        summary["slope"] = float(np.polyfit(np.log(sig), np.log(a1), 1)[0])
    return outputs, summary


def _run_sweep_estimator(config: RunConfig, out: Path):
    m = config.measurement
    report = meas.estimator_scaling(m.phi, m.k_grid, m.trials, config.seed,
                                    eps0=m.eps0, alpha1=m.alpha1,
                                    params=config.params)
    outputs = []
    outputs.append(write_csv(
        out / "sweep.csv",
        ["k_total", "rmse"],
        zip(report.k_grid, report.rmse)))
    outputs.append(plots.save_loglog(
        out / "sweep.svg", report.k_grid.astype(float), report.rmse,
        xlabel="total counts", ylabel="phase RMSE [rad]",
        label="estimator", guide_slope=-0.5))
    summary = {"kind": "estimator", "phi_true": report.phi_true,
               "trials": report.trials, "slope": report.slope,
               "rmse": report.rmse}
    return outputs, summary


_DISPATCH = {
    "pde": _run_pde,
    "adiabatic": _run_adiabatic,
    "compare": _run_compare,
    "measure": _run_measure,
    "sweep": _run_sweep,
}


def _versions() -> dict:
    import platform

    import matplotlib
    import scipy
    import yaml

    from . import __version__

    return {
        "python": platform.python_version(),
        "lambda_beam": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "pyyaml": yaml.__version__,
    }


def run_scenario(config: RunConfig, out_dir) -> dict:
    """Execute one scenario into ``out_dir`` and return the manifest.

    The manifest is written unconditionally; on failure it carries the error
    and the exception is re-raised for the caller.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "scenario": config.scenario,
        "seed": config.seed,
        "status": "error",
        "outputs": [],
        "error": None,
        "runtime_s": None,
        "versions": _versions(),
        "config": config.to_dict(),
    }
    t0 = time.perf_counter()
    try:
        config.save(out / "config.resolved.yaml")
        outputs, summary = _DISPATCH[config.scenario](config, out)
        with open(out / "summary.json", "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True,
                      allow_nan=False)
            fh.write("\n")
        outputs = ["config.resolved.yaml"] + [Path(p).name for p in outputs]
        outputs.append("summary.json")
        manifest["outputs"] = outputs
        manifest["status"] = "ok"
        return manifest
    except BaseException as exc:
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        manifest["runtime_s"] = time.perf_counter() - t0
        with open(out / "manifest.json", "w") as fh:
            json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True,
                      allow_nan=False)
            fh.write("\n")
