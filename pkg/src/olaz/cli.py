"""Config-driven batch runner: ``olaz --config run.yaml --output out/``.

See README.md for the configuration schema. Exit status is 0 on success, 1
for configuration errors and 2 for failures while running.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
import time
import traceback
from importlib import metadata, resources

import numpy as np
import scipy
import yaml

from . import kernel
from .afcore import AmbiguityZone, ambiguity_surface, isl_oaf, load_sequence, save_sequence
from .baselines import mseq_family, poly_str, rank_family, zc, zc_family, ZcParams
from .channel import FrameConfig, JakesParams, eva_profile, normalized_doppler
from .designer import DesignConfig, design
from .estimator import cr1_deviation
from .experiments import LinkSetup, frame_experiment, midpoint_error_curve, mse_mid_experiment

REFERENCE_OLAZ = "olaz_n128_z32_f0.2.txt"
MODES = ("design", "eval", "baseline", "simulate")


class ConfigError(Exception):
    """Invalid configuration; the message starts with the offending field path."""


def fmt(x) -> str:
    return "" if x is None else repr(float(x))


# --- config access -------------------------------------------------------------

class Section:
    """Typed reads from a config mapping that report ``a.b.c`` paths and reject unknown keys."""

    def __init__(self, data, path: str, allowed):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path or '<root>'}: expected a mapping")
        unknown = sorted(set(data) - set(allowed))
        if unknown:
            raise ConfigError(f"{self._join(path, unknown[0])}: unknown key")
        self.data, self.path = data, path

    @staticmethod
    def _join(path, key):
        return f"{path}.{key}" if path else key

    def _get(self, key, default, kinds, what):
        if key not in self.data or self.data[key] is None:
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, kinds):
            raise ConfigError(f"{self._join(self.path, key)}: expected {what}, got {v!r}")
        return v

    def int(self, key, default, lo=None):
        v = self._get(key, default, int, "an integer")
        if v is not None and lo is not None and v < lo:
            raise ConfigError(f"{self._join(self.path, key)}: must be >= {lo}, got {v}")
        return v

    def float(self, key, default):
        v = self._get(key, default, (int, float), "a number")
        return None if v is None else float(v)

    def str(self, key, default):
        return self._get(key, default, str, "a string")

    def floats(self, key, default):
        v = self._get(key, default, list, "a list of numbers")
        if v is None:
            return None
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ConfigError(f"{self._join(self.path, key)}: expected a list of numbers")
        return [float(x) for x in v]

    def section(self, key, allowed):
        return Section(self.data.get(key), self._join(self.path, key), allowed)

    def field(self, key):
        return self._join(self.path, key)


def zone_from(sec: Section, Z=32, F_r=0.2, f_delta=0.2) -> AmbiguityZone:
    try:
        return AmbiguityZone(sec.int("Z", Z, lo=0), sec.float("F_r", F_r), sec.float("f_delta", f_delta))
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: {exc}") from None


ZONE_KEYS = ("Z", "F_r", "f_delta")


# --- pilots ---------------------------------------------------------------------

def reference_olaz() -> np.ndarray:
    """Shipped O-LAZ pilot (N=128, zone 32 x 0.2) produced by ``configs/olaz128.yaml``."""
    with resources.as_file(resources.files("olaz") / "data" / REFERENCE_OLAZ) as p:
        return load_sequence(p)


def resolve_pilot(spec: str, N: int | None, field: str, base_dir: str) -> np.ndarray:
    """``olaz``, ``zc:<mu>``, ``zc_best``, ``zc_worst`` (ranked on zone 32 x 0.2) or a sequence file.

    ``N`` is required for the ZC forms; when given, the pilot length is checked against it.
    """
    zone = AmbiguityZone(32, 0.2, 0.2)
    if N is None and spec.startswith("zc"):
        raise ConfigError(f"{field}: ZC pilots need an explicit length N")
    if spec == "olaz":
        a = reference_olaz()
    elif spec.startswith("zc:"):
        try:
            a = zc(ZcParams(N, int(spec[3:])))
        except ValueError as exc:
            raise ConfigError(f"{field}: {exc}") from None
    elif spec in ("zc_best", "zc_worst"):
        fam, _ = zc_family(N)
        r = rank_family(fam, AmbiguityZone(min(zone.Z, (N - 1) // 2), zone.F_r, zone.f_delta))
        a = r.best if spec == "zc_best" else r.worst
    else:
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        if not os.path.exists(path):
            raise ConfigError(f"{field}: no such sequence file {spec!r}")
        a = load_sequence(path)
    if N is not None and a.size != N:
        raise ConfigError(f"{field}: pilot {spec!r} has length {a.size}, expected N={N}")
    return a


# --- modes ----------------------------------------------------------------------

def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def surface_summary(a, zone):
    surf = ambiguity_surface(a, zone)
    return surf, {"isl_oaf": isl_oaf(a, zone), "peak_sidelobe_db": surf.peak_sidelobe_db()}


def run_design(cfg: Section, seed: int, out: str, base_dir: str, summary: dict):
    sec = cfg.section("design", ("N", "max_iters", "eps", "power_iters", "power_tol",
                                 "record_every", "initial", "backend") + ZONE_KEYS)
    N = sec.int("N", 128, lo=2)
    zone = zone_from(sec)
    initial = sec.str("initial", "random")
    backend = sec.str("backend", None)
    if backend is not None and backend not in kernel.LOOPS:
        raise ConfigError(f"{sec.field('backend')}: unavailable backend {backend!r}; have {sorted(kernel.LOOPS)}")
    try:
        dc = DesignConfig(N, zone, max_iters=sec.int("max_iters", 100_000, lo=1),
                          eps=sec.float("eps", 1e-16), seed=seed,
                          power_iters=sec.int("power_iters", 500, lo=1),
                          power_tol=sec.float("power_tol", 1e-10),
                          record_every=sec.int("record_every", None, lo=1))
    except ValueError as exc:
        raise ConfigError(f"design: {exc}") from None
    a0 = None if initial == "random" else resolve_pilot(initial, N, sec.field("initial"), base_dir)
    rep = design(dc, initial=a0, backend=backend)
    save_sequence(os.path.join(out, "sequence.txt"), rep.sequence)
    write_rows(os.path.join(out, "trace.csv"), ["iter", "isl"],
               [[i, fmt(v)] for i, v in rep.trace_rows()])
    surf, stats = surface_summary(rep.sequence, zone)
    surf.to_csv(os.path.join(out, "surface.csv"))
    summary.update(stats, initial_isl=rep.initial_isl, iters_run=rep.iters_run,
                   converged=rep.converged, backend=rep.backend, power_failures=rep.power_failures)


def run_eval(cfg: Section, seed: int, out: str, base_dir: str, summary: dict):
    sec = cfg.section("eval", ("sequence", "N", "L") + ZONE_KEYS)
    spec = sec.str("sequence", None)
    if spec is None:
        raise ConfigError(f"{sec.field('sequence')}: required")
    zone = zone_from(sec)
    a = resolve_pilot(spec, sec.int("N", None, lo=2), sec.field("sequence"), base_dir)
    if a.size <= zone.Z:
        raise ConfigError(f"{sec.field('Z')}: zone half-width {zone.Z} needs a sequence longer than it")
    surf, stats = surface_summary(a, zone)
    surf.to_csv(os.path.join(out, "surface.csv"))
    stats["cr1_deviation"] = cr1_deviation(a, min(sec.int("L", 32, lo=1), a.size))
    write_rows(os.path.join(out, "metrics.csv"), ["metric", "value"],
               [[k, fmt(v)] for k, v in stats.items()])
    summary.update(stats)


def run_baseline(cfg: Section, seed: int, out: str, base_dir: str, summary: dict):
    sec = cfg.section("baseline", ("family", "N", "degree") + ZONE_KEYS)
    family = sec.str("family", "zc")
    zone = zone_from(sec)
    if family == "zc":
        fam, params = zc_family(sec.int("N", 128, lo=2))
        labels = [str(mu) for mu in params]
    elif family == "mseq":
        try:
            fam, params = mseq_family(sec.int("degree", 7))
        except ValueError as exc:
            raise ConfigError(f"{sec.field('degree')}: {exc}") from None
        labels = [poly_str(p) for p in params]
    else:
        raise ConfigError(f"{sec.field('family')}: expected 'zc' or 'mseq', got {family!r}")
    if fam[0].size <= zone.Z:
        raise ConfigError(f"{sec.field('Z')}: zone half-width {zone.Z} needs sequences longer than it")
    r = rank_family(fam, zone)
    write_rows(os.path.join(out, "ranking.csv"), ["index", "param", "isl"],
               [[i, labels[i], fmt(v)] for i, v in r.table])
    save_sequence(os.path.join(out, "best.txt"), r.best)
    save_sequence(os.path.join(out, "worst.txt"), r.worst)
    summary.update(members=len(fam), best=labels[r.best_index], worst=labels[r.worst_index],
                   best_isl=r.table[r.best_index][1], worst_isl=r.table[r.worst_index][1])


def link_setup(sec: Section) -> LinkSetup:
    ch = sec.section("channel", ("F_r", "Q", "E0", "v_kmh", "fc_hz", "delta_f_hz"))
    fr = sec.section("frame", ("N", "N_cp", "M_P", "M_D"))
    try:
        frame = FrameConfig(fr.int("N", 128), fr.int("N_cp", 32), fr.int("M_P", 8), fr.int("M_D", 1))
        delta_f = ch.float("delta_f_hz", 15e3)
        F_r = ch.float("F_r", None)
        if F_r is None:
            F_r = normalized_doppler(ch.float("v_kmh", 500.0), ch.float("fc_hz", 3.4e9), delta_f)
        jakes = JakesParams(F_r=F_r, pdp=tuple(eva_profile(frame.N, delta_f)),
                            Q=ch.int("Q", 16), E0=ch.float("E0", 1.0), N=frame.N)
        return LinkSetup(jakes, frame, sec.int("L", frame.N_cp, lo=1))
    except ValueError as exc:
        raise ConfigError(f"{sec.path}: {exc}") from None


def run_simulate(cfg: Section, seed: int, out: str, base_dir: str, summary: dict, threads: int):
    sec = cfg.section("simulate", ("experiment", "pilots", "snr_grid", "trials", "L", "channel",
                                   "frame", "dpss"))
    experiment = sec.str("experiment", "mse_mid")
    if experiment not in ("mse_mid", "frame", "midpoint"):
        raise ConfigError(f"{sec.field('experiment')}: expected mse_mid, frame or midpoint")
    setup = link_setup(sec)
    pil = sec.data.get("pilots") or {"olaz": "olaz", "zc_best": "zc_best", "zc_worst": "zc_worst"}
    if not isinstance(pil, dict) or not pil:
        raise ConfigError(f"{sec.field('pilots')}: expected a nonempty name -> pilot mapping")
    pilots = {}
    for name, spec in pil.items():
        if not isinstance(spec, str):
            raise ConfigError(f"{sec.field('pilots')}.{name}: expected a string")
        pilots[str(name)] = resolve_pilot(spec, setup.frame.N, f"{sec.field('pilots')}.{name}", base_dir)
    trials = sec.int("trials", 100, lo=0)
    snr_grid = sec.floats("snr_grid", None)
    if experiment != "midpoint" and not snr_grid:
        raise ConfigError(f"{sec.field('snr_grid')}: required and nonempty for {experiment}")
    summary.update(trials=trials, F_r=setup.jakes.F_r, L=setup.L)
    if trials == 0:
        return
    if experiment == "mse_mid":
        rows = mse_mid_experiment(pilots, snr_grid, trials, seed, setup, threads)
        write_rows(os.path.join(out, "mse.csv"), ["snr_db", "pilot_name", "mse_mid", "mse_frame", "crlb"],
                   [[fmt(r.snr_db), r.pilot, fmt(r.mse_mid), "", fmt(r.crlb)] for r in rows])
    elif experiment == "frame":
        dp = sec.section("dpss", ("B", "NW"))
        rows = frame_experiment(pilots, snr_grid, trials, seed, setup,
                                dp.int("B", setup.frame.M_P, lo=1), dp.float("NW", 2.02), threads)
        write_rows(os.path.join(out, "mse.csv"), ["snr_db", "pilot_name", "mse_mid", "mse_frame", "crlb"],
                   [[fmt(r.snr_db), r.pilot, "", fmt(r.mse_frame), fmt(r.crlb)] for r in rows])
        write_rows(os.path.join(out, "ber.csv"), ["snr_db", "pilot_name", "ber", "ber_perfect_csi"],
                   [[fmt(r.snr_db), r.pilot, fmt(r.ber), fmt(r.ber_perfect_csi)] for r in rows])
    else:
        for name, a in pilots.items():
            curve = midpoint_error_curve(a, trials, seed, setup, threads)
            write_rows(os.path.join(out, f"midpoint_{name}.csv"), ["n", "mse"],
                       [[n, fmt(v)] for n, v in enumerate(curve)])
            summary[f"argmin_{name}"] = int(np.argmin(curve))


# --- entry point ----------------------------------------------------------------

def versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "pyyaml": yaml.__version__, "package": pkg, "kernel_backend": kernel.BACKEND}


def parse_args(argv):
    p = argparse.ArgumentParser(prog="olaz", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="YAML experiment file")
    p.add_argument("--output", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for Monte-Carlo trials")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides master_seed)")
    return p.parse_args(argv)


def run(config_path: str, output: str | None = None, threads: int = 1, seed: int | None = None) -> int:
    """Execute one configured run; always leaves ``manifest.json`` in the output directory."""
    t0 = time.perf_counter()
    manifest = {"config_path": config_path, "status": "ok", "versions": versions()}
    out = output
    try:
        try:
            with open(config_path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {config_path!r} ({exc.strerror})") from None
        manifest["config_sha256"] = hashlib.sha256(raw).hexdigest()
        try:
            data = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"<root>: not valid YAML ({exc})") from None
        cfg = Section(data, "", ("mode", "master_seed", "output_dir") + MODES)
        mode = cfg.str("mode", None)
        if mode not in MODES:
            raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
        master = cfg.int("master_seed", 0, lo=0) if seed is None else seed
        if master < 0:
            raise ConfigError("--seed: must be nonnegative")
        if threads < 1:
            raise ConfigError("--threads: must be >= 1")
        out = out or cfg.str("output_dir", None)
        if out is None:
            raise ConfigError("output_dir: required (or pass --output)")
        manifest.update(mode=mode, master_seed=master, config=data, threads=threads)
        os.makedirs(out, exist_ok=True)
        base_dir = os.path.dirname(os.path.abspath(config_path))
        summary: dict = {}
        manifest["summary"] = summary
        if mode == "simulate":
            run_simulate(cfg, master, out, base_dir, summary, threads)
        else:
            {"design": run_design, "eval": run_eval, "baseline": run_baseline}[mode](
                cfg, master, out, base_dir, summary)
        status = 0
    except ConfigError as exc:
        manifest.update(status="config_error", error=str(exc))
        status = 1
    except Exception as exc:  # surfaced in the manifest and on stderr
        manifest.update(status="runtime_error", error=f"{type(exc).__name__}: {exc}",
                        traceback=traceback.format_exc())
        status = 2
    manifest["wall_time_s"] = time.perf_counter() - t0
    out = out or "."
    try:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    except OSError as exc:
        print(f"olaz: cannot write manifest: {exc}", file=sys.stderr)
    if status:
        print(f"olaz: {manifest['error']}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    return run(args.config, args.output, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
