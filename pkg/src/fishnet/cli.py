"""Command line interface: experiments driven by TOML config files.

Conventions shared by all subcommands:

* exit code 0 on success, 2 for configuration problems (unknown keys,
  missing tables, bad flag values), 3 for runtime failures;
* one summary line on stdout, diagnostics on stderr;
* every output directory receives a ``run-manifest.json`` describing the
  run precisely enough to reproduce it bit for bit.  Execution details
  that cannot influence result bytes (worker count, output location) are
  deliberately left out of the manifest, so reruns with a different
  ``--threads`` or ``--out`` stay byte-identical;
* on failure, files created by the failed invocation are removed.

Worker count precedence: ``--threads`` flag, then the ``FISHNET_THREADS``
environment variable, then ``sampling.threads`` from the config file.
"""

from __future__ import annotations

import json
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from csv import writer as _csv_writer
from itertools import product

import click
import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .mc import RunConfig, count_prepeak_failures, run_batch, simulate_one
from .mesh import FishnetGeometry, build_mesh
from .models import (
    ModelParams,
    bundle_series_cdf,
    calibrate_params,
    p_delta,
    sigma_transition,
    three_term_cdf,
    two_term_cdf,
    weakest_link_cdf,
)
from .solver import DamageState, StructuralFailure, solve
from .stats import EmpiricalDistribution, empirical_cdf, histogram, weibull_coords
from . import plotting

__all__ = ["main"]


class _RuntimeFailure(click.ClickException):
    """Runtime (non-config) failure; maps to exit code 3."""

    exit_code = 3


class _OutputTracker:
    """Paths created by the running command, removed again on failure."""

    def __init__(self):
        self._paths = []

    def add(self, path):
        self._paths.append(path)
        return path

    def discard_all(self):
        for path in reversed(self._paths):
            if os.path.isdir(path):
                shutil.rmtree(path, ignore_errors=True)
            elif os.path.exists(path):
                os.unlink(path)


def _load(config_path, command):
    try:
        return load_config(config_path, command)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None


def _effective_threads(flag, sampling):
    if flag is not None:
        if flag < 1:
            raise click.UsageError("--threads must be >= 1")
        return flag
    env = os.environ.get("FISHNET_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise click.UsageError(f"FISHNET_THREADS is not an integer: {env!r}") from None
        if value < 1:
            raise click.UsageError("FISHNET_THREADS must be >= 1")
        return value
    return sampling["threads"] if sampling else 1


def _prepare_outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _cell(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, columns):
    """Write aligned columns; floats via repr so no digits are lost."""
    with open(path, "w", newline="") as fh:
        out = _csv_writer(fh)
        out.writerow(header)
        for row in zip(*columns):
            out.writerow([_cell(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _write_manifest(tracker, outdir, command, config_norm=None, extra=None):
    payload = {"tool": "fishnet", "version": __version__, "command": command}
    if config_norm is not None:
        config = json.loads(json.dumps(config_norm))
        if "sampling" in config:
            config["sampling"].pop("threads", None)
        config.get("outputs", {}).pop("directory", None)
        payload["config"] = config
    if extra:
        payload.update(extra)
    _write_json(tracker.add(os.path.join(outdir, "run-manifest.json")), payload)


def _render_if_requested(cfg, tracker, outdir, csv_paths):
    if not cfg.outputs["svg"]:
        return
    for path in csv_paths:
        tracker.add(plotting.render_file(path, outdir))


def _guard(tracker, fn):
    """Run a command body; on any library error drop partial outputs."""
    try:
        return fn()
    except ConfigError as exc:
        tracker.discard_all()
        raise click.UsageError(str(exc)) from None
    except (StructuralFailure, ValueError, RuntimeError, OSError) as exc:
        tracker.discard_all()
        raise _RuntimeFailure(str(exc)) from None


def _single_model_params(cfg, n_links, mesh, dist):
    """Resolve a ModelParams for simulate: calibrated or explicit, or None."""
    spec = cfg.models
    if spec is None:
        return None
    if spec["calibrate"]:
        return calibrate_params(mesh, dist)
    if not spec["eta_a"]:
        return None
    if len(spec["eta_a"]) != 1 or len(spec["nu1"]) != 1:
        raise ConfigError("simulate expects a single models.eta_a / models.nu1 pair")
    return ModelParams(
        n_links,
        spec["nu1"][0],
        spec["eta_a"][0],
        eta_b=spec["eta_b"],
        nu2=int(spec["nu2"]) if spec["nu2"] is not None else None,
        eta2=spec["eta2"],
    )


@click.group()
@click.version_option(__version__, prog_name="fishnet")
def main():
    """Strength statistics of fishnet-linked fiber networks."""


# ----------------------------------------------------------------------
# simulate


@main.command()
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML experiment file.")
@click.option("--count", type=int, default=None, help="Override sampling.count.")
@click.option("--seed", type=int, default=None, help="Override sampling.seed.")
@click.option("--threads", type=int, default=None,
              help="Worker processes (overrides FISHNET_THREADS and the config).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override outputs.directory.")
def simulate(config_path, count, seed, threads, out_dir):
    """Monte Carlo rupture batch: samples.csv, cdf.csv, hist.csv."""
    cfg = _load(config_path, "simulate")
    sampling = dict(cfg.sampling)
    if count is not None:
        if count < 1:
            raise click.UsageError("--count must be >= 1")
        sampling["count"] = count
    if seed is not None:
        sampling["seed"] = seed
    n_threads = _effective_threads(threads, sampling)
    outdir = _prepare_outdir(out_dir or cfg.outputs["directory"])
    tracker = _OutputTracker()

    def body():
        mesh = build_mesh(cfg.geometry)
        params = _single_model_params(cfg, mesh.n_links, mesh, cfg.dist)
        run = RunConfig(
            geometry=cfg.geometry,
            dist=cfg.dist,
            sample_count=sampling["count"],
            master_seed=sampling["seed"],
            record_curves=sampling["record_curves"],
            samples_path=tracker.add(os.path.join(outdir, "samples.csv")),
            curves_dir=(tracker.add(os.path.join(outdir, "curves"))
                        if sampling["record_curves"] else None),
            threads=n_threads,
        )
        records = run_batch(run)
        emp = EmpiricalDistribution.from_records(records)

        sigma = emp.strengths
        pf_emp = emp.plotting_positions()
        header = ["sigma", "Pf_emp", "Ystar_emp"]
        columns = [sigma, pf_emp, weibull_coords(sigma, pf_emp)[1]]
        header.append("Pf_weakest_link")
        columns.append(weakest_link_cdf(cfg.dist, mesh.n_links, sigma))
        if params is not None:
            header.append("Pf_two_term")
            columns.append(two_term_cdf(cfg.dist, params, sigma))
            if params.eta_b is not None and params.nu2 is not None:
                header.append("Pf_three_term")
                columns.append(three_term_cdf(cfg.dist, params, sigma))
        cdf_path = tracker.add(os.path.join(outdir, "cdf.csv"))
        _write_csv(cdf_path, header, columns)

        centers, density = histogram(emp, sampling["bins"])
        hist_path = tracker.add(os.path.join(outdir, "hist.csv"))
        _write_csv(hist_path, ["bin_center", "density"], [centers, density])

        norm = cfg.normalized()
        norm["sampling"].update(count=sampling["count"], seed=sampling["seed"])
        extra = {"master_seed": sampling["seed"]}
        if params is not None:
            extra["model_params"] = {
                "n_links": params.n_links, "nu1": params.nu1, "eta_a": params.eta_a,
                "eta_b": params.eta_b, "nu2": params.nu2, "eta2": params.eta2,
            }
        _write_manifest(tracker, outdir, "simulate", norm, extra)
        _render_if_requested(cfg, tracker, outdir, [cdf_path, hist_path])

        g = cfg.geometry
        return (f"simulate: {sampling['count']} samples on {g.rows}x{g.cols}, "
                f"mean peak {np.mean(sigma):.6g}, mean r_p "
                f"{count_prepeak_failures(records):.4g} -> {outdir}")

    click.echo(_guard(tracker, body))


# ----------------------------------------------------------------------
# models


@main.command("models")
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML experiment file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override outputs.directory.")
def models_cmd(config_path, out_dir):
    """Analytical failure-probability curves: models.csv, sigma_T.json."""
    cfg = _load(config_path, "models")
    outdir = _prepare_outdir(out_dir or cfg.outputs["directory"])
    tracker = _OutputTracker()

    def body():
        n_links = cfg.geometry.n_links
        dist = cfg.dist
        spec = cfg.models
        lo = spec["sigma_min"] if spec["sigma_min"] is not None else dist.inverse_cdf(1e-12)
        hi = spec["sigma_max"] if spec["sigma_max"] is not None else dist.inverse_cdf(0.95)
        if not lo < hi:
            raise ConfigError("models.sigma_min must be below models.sigma_max")
        grid = np.geomspace(lo, hi, spec["points"])

        header = ["sigma", "P1", "Pf_weakest_link", "Pf_bundle"]
        columns = [grid, dist.cdf(grid), weakest_link_cdf(dist, n_links, grid),
                   bundle_series_cdf(dist, n_links, grid)]
        transitions = []

        for eta_a, nu1 in product(spec["eta_a"], spec["nu1"]):
            params = ModelParams(n_links, nu1, eta_a)
            suffix = f"{eta_a:g}_{nu1}"
            header += [f"Pf_two_term_{suffix}", f"P_delta_{suffix}"]
            columns += [two_term_cdf(dist, params, grid), p_delta(dist, eta_a, nu1, grid)]
            transitions.append({"eta_a": eta_a, "nu1": nu1,
                                "sigma_T": sigma_transition(dist, eta_a, nu1)})

        if spec["calibrate"]:
            mesh = build_mesh(cfg.geometry)
            params = calibrate_params(mesh, dist)
            header += ["Pf_two_term_cal", "Pf_three_term_cal", "P_delta_cal"]
            columns += [two_term_cdf(dist, params, grid),
                        three_term_cdf(dist, params, grid),
                        p_delta(dist, params.eta_a, params.nu1, grid)]
            transitions.append({
                "eta_a": params.eta_a, "nu1": params.nu1,
                "sigma_T": sigma_transition(dist, params.eta_a, params.nu1),
                "calibrated": True, "eta_b": params.eta_b,
                "nu2": params.nu2, "eta2": params.eta2,
            })

        if len(header) == 4:
            raise ConfigError("models command needs models.eta_a/nu1 or models.calibrate")

        models_path = tracker.add(os.path.join(outdir, "models.csv"))
        _write_csv(models_path, header, columns)
        _write_json(tracker.add(os.path.join(outdir, "sigma_T.json")), transitions)
        _write_manifest(tracker, outdir, "models", cfg.normalized())
        _render_if_requested(cfg, tracker, outdir, [models_path])
        return (f"models: {len(transitions)} parameter set(s) on N={n_links}, "
                f"sigma in [{lo:.6g}, {hi:.6g}] -> {outdir}")

    click.echo(_guard(tracker, body))


# ----------------------------------------------------------------------
# eta


def _damage_links(mesh, damage):
    """Translate a damage pattern spec into a list of link ids."""
    m = mesh.geometry.rows
    n = mesh.geometry.cols
    center_gap = n // 2
    if isinstance(damage, list):
        for link in damage:
            if not 0 <= link < mesh.n_links:
                raise ConfigError(f"eta.damage link id {link} outside [0, {mesh.n_links})")
        return list(damage)
    if damage == "none":
        return []
    if damage == "center":
        return [center_gap * m + m // 2]
    k = int(damage.split(":", 1)[1])
    start = m // 2 - k // 2
    if start < 0 or start + k > m:
        raise ConfigError(f"eta.damage slit of {k} links does not fit {m} rows")
    return [center_gap * m + r for r in range(start, start + k)]


@main.command("eta")
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML experiment file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override outputs.directory.")
def eta_cmd(config_path, out_dir):
    """Stress redistribution around a damage pattern: eta.csv, calibration.json."""
    cfg = _load(config_path, "eta")
    outdir = _prepare_outdir(out_dir or cfg.outputs["directory"])
    tracker = _OutputTracker()

    def body():
        mesh = build_mesh(cfg.geometry)
        failed = _damage_links(mesh, cfg.eta["damage"])
        field = solve(mesh, DamageState(frozenset(failed)))

        ids = np.arange(mesh.n_links)
        tail, head = mesh.link_tail, mesh.link_head
        eta_path = tracker.add(os.path.join(outdir, "eta.csv"))
        _write_csv(
            eta_path,
            ["link_id", "tail_i", "tail_j", "head_i", "head_j", "sigma", "eta"],
            [ids, mesh.node_i[tail], mesh.node_j[tail],
             mesh.node_i[head], mesh.node_j[head], field.sigma, field.eta],
        )

        extra = {"damage": sorted(failed)}
        if mesh.geometry.rows >= 16 and mesh.geometry.cols >= 16:
            params = calibrate_params(mesh, cfg.dist)
            _write_json(tracker.add(os.path.join(outdir, "calibration.json")), {
                "n_links": params.n_links, "nu1": params.nu1, "eta_a": params.eta_a,
                "eta_b": params.eta_b, "nu2": params.nu2, "eta2": params.eta2,
            })
        else:
            click.echo("eta: mesh below 16x16, skipping calibration.json", err=True)

        _write_manifest(tracker, outdir, "eta", cfg.normalized(), extra)
        _render_if_requested(cfg, tracker, outdir, [eta_path])
        alive = field.eta[field.sigma > 0]
        return (f"eta: {mesh.geometry.rows}x{mesh.geometry.cols}, {len(failed)} failed "
                f"link(s), max eta {alive.max():.6g} -> {outdir}")

    click.echo(_guard(tracker, body))


# ----------------------------------------------------------------------
# shape-sweep


def _sweep_range(dist, n_total, row_counts, master_seed, start, stop):
    """Peak stresses for samples [start, stop) on every aspect ratio.

    One strength vector is drawn per sample and shared across all shapes
    (common random numbers), so shape comparisons are maximally paired.
    """
    meshes = [build_mesh(FishnetGeometry(m, n_total // m)) for m in row_counts]
    peaks = np.empty((len(meshes), stop - start))
    for idx, i in enumerate(range(start, stop)):
        seq = np.random.SeedSequence(master_seed, spawn_key=(i,))
        rng = np.random.Generator(np.random.Philox(seq))
        strengths = dist.sample(rng, n_total)
        for r, mesh in enumerate(meshes):
            rec = simulate_one(mesh, strengths, record_curve=False)
            peaks[r, idx] = rec.peak_stress
    return peaks


@main.command("shape-sweep")
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML experiment file.")
@click.option("--count", type=int, default=None, help="Override sampling.count.")
@click.option("--seed", type=int, default=None, help="Override sampling.seed.")
@click.option("--threads", type=int, default=None,
              help="Worker processes (overrides FISHNET_THREADS and the config).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override outputs.directory.")
def shape_sweep(config_path, count, seed, threads, out_dir):
    """Chain-to-bundle transition at fixed link count: transition.csv."""
    cfg = _load(config_path, "shape-sweep")
    sampling = dict(cfg.sampling)
    if count is not None:
        if count < 1:
            raise click.UsageError("--count must be >= 1")
        sampling["count"] = count
    if seed is not None:
        sampling["seed"] = seed
    n_threads = _effective_threads(threads, sampling)
    outdir = _prepare_outdir(out_dir or cfg.outputs["directory"])
    tracker = _OutputTracker()

    def body():
        n_total = cfg.sweep["n_total"]
        row_counts = cfg.sweep["rows"]
        total = sampling["count"]
        master_seed = sampling["seed"]

        if n_threads == 1 or total == 1:
            peaks = _sweep_range(cfg.dist, n_total, row_counts, master_seed, 0, total)
        else:
            n_chunks = min(total, n_threads * 4)
            bounds = np.linspace(0, total, n_chunks + 1).astype(int)
            with ProcessPoolExecutor(max_workers=n_threads) as pool:
                futures = [
                    pool.submit(_sweep_range, cfg.dist, n_total, row_counts,
                                master_seed, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])
                ]
                peaks = np.concatenate([f.result() for f in futures], axis=1)

        grid = np.geomspace(peaks.min(), peaks.max(), 200)
        header = ["sigma"]
        columns = [grid]
        for r, m in enumerate(row_counts):
            emp = EmpiricalDistribution(peaks[r])
            header.append(f"Pf_{m}x{n_total // m}")
            columns.append(empirical_cdf(emp, grid))
        header += ["Pf_chain_model", "Pf_bundle_model"]
        columns += [weakest_link_cdf(cfg.dist, n_total, grid),
                    bundle_series_cdf(cfg.dist, n_total, grid)]

        path = tracker.add(os.path.join(outdir, "transition.csv"))
        _write_csv(path, header, columns)
        norm = cfg.normalized()
        norm["sampling"].update(count=total, seed=master_seed)
        _write_manifest(tracker, outdir, "shape-sweep", norm, {"master_seed": master_seed})
        _render_if_requested(cfg, tracker, outdir, [path])
        means = ", ".join(f"{m}x{n_total // m}={peaks[r].mean():.5g}"
                          for r, m in enumerate(row_counts))
        return f"shape-sweep: N={n_total}, {total} samples, mean peaks {means} -> {outdir}"

    click.echo(_guard(tracker, body))


# ----------------------------------------------------------------------
# plot


@main.command("plot")
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
              help="Directory for the SVG files.")
def plot_cmd(inputs, out_dir):
    """Render result CSVs to deterministic SVG figures."""
    outdir = _prepare_outdir(out_dir)
    tracker = _OutputTracker()

    def body():
        rendered = [tracker.add(plotting.render_file(path, outdir)) for path in inputs]
        _write_manifest(tracker, outdir, "plot",
                        extra={"inputs": [os.path.basename(p) for p in inputs]})
        names = ", ".join(os.path.basename(p) for p in rendered)
        return f"plot: {len(rendered)} figure(s): {names} -> {outdir}"

    click.echo(_guard(tracker, body))


# ----------------------------------------------------------------------
# sample-dist


@main.command("sample-dist")
@click.option("-c", "--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="TOML experiment file.")
@click.option("--count", type=int, default=None, help="Override sampling.count.")
@click.option("--seed", type=int, default=None, help="Override sampling.seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override outputs.directory.")
def sample_dist(config_path, count, seed, out_dir):
    """Kolmogorov-Smirnov self-test of the strength sampler: sampler-ks.json."""
    cfg = _load(config_path, "sample-dist")
    sampling = dict(cfg.sampling)
    if count is not None:
        if count < 1:
            raise click.UsageError("--count must be >= 1")
        sampling["count"] = count
    if seed is not None:
        sampling["seed"] = seed
    outdir = _prepare_outdir(out_dir or cfg.outputs["directory"])
    tracker = _OutputTracker()

    def body():
        n = sampling["count"]
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(sampling["seed"])))
        draws = np.sort(cfg.dist.sample(rng, n))
        cdf = cfg.dist.cdf(draws)
        hi = np.arange(1, n + 1) / n
        ks = float(max(np.max(hi - cdf), np.max(cdf - (hi - 1.0 / n))))
        threshold = 1.6276 / np.sqrt(n)  # asymptotic 99% one-sample KS band
        payload = {
            "family": cfg.dist_table["family"],
            "count": n,
            "seed": sampling["seed"],
            "ks": ks,
            "threshold_99": threshold,
            "pass": bool(ks < threshold),
        }
        _write_json(tracker.add(os.path.join(outdir, "sampler-ks.json")), payload)
        norm = cfg.normalized()
        norm["sampling"].update(count=n, seed=sampling["seed"])
        _write_manifest(tracker, outdir, "sample-dist", norm)
        if ks >= threshold:
            raise _RuntimeFailure(
                f"sampler KS statistic {ks:.3e} exceeds 99% band {threshold:.3e}")
        return (f"sample-dist: {cfg.dist_table['family']}, n={n}, "
                f"KS {ks:.3e} < {threshold:.3e} -> {outdir}")

    click.echo(_guard(tracker, body))
