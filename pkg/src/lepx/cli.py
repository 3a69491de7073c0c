"""Command-line experiment runner.

Subcommands: firsthit, passright, dimension, oracle, sle-curve.

Config files are flat ``key = value`` text; ``#`` starts a comment and
repeated keys build lists.  Recognised keys:

    shape        triangle | square | disc | half_disc     (repeatable)
    L            scale factor; repeat for the dimension L list
    samples      samples per domain (per L for dimension)
    seed         master seed (unsigned 64-bit)
    workers      worker processes
    raw          true to skip loop erasure
    r_interval   "lo hi" first-hit interval                 (repeatable)
    t_interval   "lo hi" pass-right interval                (repeatable)
    n_theta      size of the theta grid (default 199)
    n_t          t values per pass-right interval (default 21)
    kappa        SLE parameter for sle-curve / overlays     (repeatable)
    z, w, marker "x y" unit-domain anchor overrides
    k            interior size of the oracle toy domain
    threshold    oracle total-variation threshold
    synthetic    "ln_c inv_nu a Delta [rel_noise]" ansatz data for dimension
    block        samples per work block

Command-line flags override the file.  Output goes to fixed file names in
the ``--out`` directory; every CSV starts with a comment line holding the
artifact version, the seed and a hash of the configuration (worker count
and output path excluded, so outputs do not depend on them).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import BLOCK, Observables, run_campaign
from .hexlattice import SHAPES, DomainSpec, build_domain
from .observables import FIRSTHIT_INTERVALS, PASSRIGHT_INTERVALS, T_POINTS, pass_right_function
from .scalingfit import (
    FitError,
    LengthObservation,
    diagnostic_table,
    fit_with_exponent_search,
    synthetic_observations,
)
from .sleformula import schramm_curve, theta_grid
from .stats import cdf, from_fixed, mean_with_error, MomentAccumulator, sup_distance

log = logging.getLogger("lepx")

DEFAULT_DIMENSION_L = (36, 50, 71, 100, 141, 200, 282)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    shapes: tuple = SHAPES
    L: tuple = (100.0,)
    samples: int = 10_000
    seed: int = 1
    workers: int = 1
    raw: bool = False
    r_intervals: tuple = FIRSTHIT_INTERVALS
    t_intervals: tuple = PASSRIGHT_INTERVALS
    n_theta: int = 199
    n_t: int = T_POINTS
    kappas: tuple = ()
    z: complex | None = None
    w: complex | None = None
    marker: complex | None = None
    k: int = 12
    threshold: float = 0.005
    synthetic: tuple | None = None
    block: int = BLOCK
    out: str = "lepx_out"

    def validate(self):
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for s in self.shapes:
            if s not in SHAPES:
                raise ConfigError(f"unknown shape {s!r}")
        for lo, hi in self.r_intervals:
            if not hi > lo > 0:
                raise ConfigError(f"bad r interval [{lo}, {hi}]")
        for lo, hi in self.t_intervals:
            if not 0 < lo < hi < 1:
                raise ConfigError(f"bad t interval [{lo}, {hi}]")
        return self

    def canonical(self) -> str:
        d = {k: v for k, v in self.__dict__.items() if k not in ("workers", "out")}
        return json.dumps(d, sort_keys=True, default=str)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out.setdefault(key, []).append(value)
    return out


def _pair(s: str) -> tuple:
    parts = s.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError(f"expected two numbers, got {s!r}")
    return float(parts[0]), float(parts[1])


def _point(s: str) -> complex:
    x, y = _pair(s)
    return complex(x, y)


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


_SCALAR = {
    "samples": int,
    "seed": int,
    "workers": int,
    "raw": _bool,
    "n_theta": int,
    "n_t": int,
    "k": int,
    "threshold": float,
    "block": int,
    "out": str,
    "z": _point,
    "w": _point,
    "marker": _point,
}


def config_from_mapping(raw: dict, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    upd: dict = {}
    for key, values in raw.items():
        if key == "shape":
            upd["shapes"] = tuple(values)
        elif key == "L":
            upd["L"] = tuple(float(v) for v in values)
        elif key == "r_interval":
            upd["r_intervals"] = tuple(_pair(v) for v in values)
        elif key == "t_interval":
            upd["t_intervals"] = tuple(_pair(v) for v in values)
        elif key == "kappa":
            upd["kappas"] = tuple(float(v) for v in values)
        elif key == "synthetic":
            upd["synthetic"] = tuple(float(v) for v in values[-1].split())
        elif key in _SCALAR:
            upd[key] = _SCALAR[key](values[-1])
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return replace(cfg, **upd)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return config_from_mapping(parse_config_text(Path(path).read_text()))


# --------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _interval_label(iv) -> str:
    return f"{iv[0]:g}-{iv[1]:g}"


def _header(cfg: RunConfig, command: str) -> str:
    return f"# lepx {__version__} command={command} seed={cfg.seed} config={cfg.config_hash}\n"


def write_csv(path: Path, cfg: RunConfig, command: str, columns, rows) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(_header(cfg, command))
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    sys.stdout.flush()


def _spec(cfg: RunConfig, shape: str, L: float) -> DomainSpec:
    return DomainSpec(shape, L, z=cfg.z, w=cfg.w, marker=cfg.marker)


def _progress(label):
    t0 = time.time()

    def report(done, total):
        log.info("%s: block %d/%d (%.0f s)", label, done, total, time.time() - t0)

    return report


def _seed_checksum(seed: int) -> str:
    return hashlib.sha256(str(seed).encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# commands


def _campaigns(cfg: RunConfig, obs: Observables):
    out = {}
    for shape in cfg.shapes:
        spec = _spec(cfg, shape, cfg.L[0])
        res = run_campaign(spec, cfg.samples, cfg.seed, cfg.workers, obs, cfg.block, _progress(shape))
        ratio = res.revealed.mean() / max(1, _interior_count(res))
        log.info("%s: mean revealed hexagons / interior = %.3f", shape, ratio)
        out[shape] = res
    return out


def _interior_count(res) -> int:
    if res.context is not None:
        return res.context.domain.tables.n_interior
    from .hexlattice import build_domain

    return build_domain(res.spec).tables.n_interior


def firsthit_tables(cfg: RunConfig, results: dict, out: Path):
    """Write cdf files and the cross-comparison matrix; returns max distance."""
    cdfs = {}
    for shape, res in results.items():
        for i, iv in enumerate(cfg.r_intervals):
            F = cdf(from_fixed(res.firsthit[:, i]))
            label = f"{shape}_{_interval_label(iv)}"
            cdfs[label] = F
            write_csv(out / f"firsthit_{label}.csv", cfg, "firsthit", ("x", "F"), zip(F.grid, F.values))
            _emit({"command": "firsthit", "domain": shape, "interval": list(iv), "n": F.n, "seed_checksum": _seed_checksum(cfg.seed)})
    labels = list(cdfs)
    D = np.array([[sup_distance(cdfs[a], cdfs[b]) for b in labels] for a in labels])
    write_csv(out / "distances.csv", cfg, "firsthit", ["curve", *labels], ([a, *D[i]] for i, a in enumerate(labels)))
    off = D[~np.eye(len(labels), dtype=bool)]
    dmax = float(off.max()) if off.size else 0.0
    _emit({"command": "firsthit", "max_sup_distance": dmax})
    return dmax, D, labels


def passright_tables(cfg: RunConfig, results: dict, out: Path):
    theta = theta_grid(cfg.n_theta)
    overlays = sorted(set(cfg.kappas) | {8.0 / 3.0} | ({6.0} if cfg.raw else set()))
    sle = {k: schramm_curve(k, theta).probability for k in overlays}
    curves = {}
    for shape, res in results.items():
        ests = pass_right_function(res.passright, res.n_samples, theta, cfg.n_t)
        for iv, est in zip(cfg.t_intervals, ests):
            label = f"{shape}_{_interval_label(iv)}"
            curves[label] = est
            cols = ["theta", "estimate", "stderr", "n_effective", "discard_rate"]
            cols += [f"schramm_kappa_{k:.4g}" for k in overlays]
            rows = (
                [theta[j], est.estimate[j], est.stderr[j], est.n_effective[j], est.discard_rate[j], *(sle[k][j] for k in overlays)]
                for j in range(len(theta))
            )
            write_csv(out / f"passright_{label}.csv", cfg, "passright", cols, rows)
            log.info("%s: max discard rate %.4f", label, float(est.discard_rate.max()))
            _emit({
                "command": "passright", "domain": shape, "interval": list(iv), "n": res.n_samples,
                "max_discard_rate": float(est.discard_rate.max()), "seed_checksum": _seed_checksum(cfg.seed),
            })
    labels = list(curves)
    D = np.array([[float(np.max(np.abs(curves[a].estimate - curves[b].estimate))) for b in labels] for a in labels])
    write_csv(out / "passright_distances.csv", cfg, "passright", ["curve", *labels], ([a, *D[i]] for i, a in enumerate(labels)))
    return curves, D, labels, sle


def cmd_firsthit(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    obs = Observables(firsthit=cfg.r_intervals, passright=(), erase=not cfg.raw)
    results = _campaigns(cfg, obs)
    firsthit_tables(cfg, results, out)
    return 0


def cmd_passright(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    obs = Observables(firsthit=(), passright=cfg.t_intervals, n_theta=cfg.n_theta, n_t=cfg.n_t, erase=not cfg.raw)
    results = _campaigns(cfg, obs)
    passright_tables(cfg, results, out)
    return 0


def dimension_observations(cfg: RunConfig, shape: str = "triangle"):
    """Mean erased step count per L.

    The length in each observation is the lattice distance between the
    explorer's end points, the distance the curve actually travels.  It
    differs from the nominal scale by a rounding of up to a few lattice
    spacings that jumps irregularly with L (the anchors snap to lattice
    vertices), which a smooth correction term cannot absorb.
    """
    obs = []
    for L in cfg.L:
        spec = _spec(cfg, shape, L)
        res = run_campaign(
            spec, cfg.samples, cfg.seed, cfg.workers,
            Observables(firsthit=(), passright=(), erase=not cfg.raw), cfg.block, _progress(f"L={L:g}"),
        )
        acc = MomentAccumulator()
        acc.extend(res.steps.astype(float))
        mean, se = mean_with_error(acc)
        obs.append((L, LengthObservation(build_domain(spec).anchor_distance, mean, se)))
    return obs


def cmd_dimension(cfg: RunConfig) -> int:
    if len(cfg.L) < 4:
        raise ConfigError(
            f"dimension needs at least 4 values of L (got {len(cfg.L)}); add repeated 'L = ...' lines to the config"
        )
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.synthetic:
        ln_c, inv_nu, a, d, *rest = cfg.synthetic
        syn = synthetic_observations(cfg.L, ln_c, inv_nu, a, d, rest[0] if rest else 0.0, cfg.seed)
        rows = [(o.L, o) for o in syn]
    else:
        shape = cfg.shapes[0] if len(cfg.shapes) == 1 else "triangle"
        rows = dimension_observations(cfg, shape)
    obs = [o for _, o in rows]
    write_csv(
        out / "dimension_obs.csv", cfg, "dimension", ("L", "distance", "mean", "stderr"),
        ((L, o.L, o.mean_steps, o.stderr) for L, o in rows),
    )
    try:
        fit = fit_with_exponent_search(obs)
    except FitError as e:
        log.error("fit failed: %s", e)
        return 2
    if fit.at_edge:
        log.warning("optimal Delta %.4f is at the edge of the search bracket; unreliable", fit.corr_exp)
    with open(out / "fit.json", "w") as f:
        json.dump({"version": __version__, "seed": cfg.seed, "config": cfg.config_hash, **fit.to_dict()}, f, indent=2, sort_keys=True)
        f.write("\n")
    write_csv(
        out / "dimension_diagnostic.csv", cfg, "dimension", ("distance", "lnN_minus_4_3_lnD", "fit_minus_4_3_lnD"),
        diagnostic_table(obs, fit),
    )
    _emit({"command": "dimension", **fit.to_dict()})
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    from .oracle import enumerate_erased, enumerate_interfaces, run_oracle, toy_domain

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    shape = cfg.shapes[0] if len(cfg.shapes) == 1 else "square"
    d = toy_domain(cfg.k, shape)
    rep = run_oracle(d, cfg.samples, cfg.seed, cfg.threshold)
    for name, dist in (("raw", enumerate_interfaces(d)), ("erased", enumerate_erased(d))):
        rows = sorted((key.hex(), c, dist.k) for key, c in dist.counts.items())
        write_csv(out / f"oracle_{name}.csv", cfg, "oracle", ("path_key", "count", "k"), rows)
    _emit({
        "command": "oracle", "k": rep.k, "samples": rep.n_samples, "raw_paths": rep.raw_paths,
        "erased_paths": rep.erased_paths, "tv_raw": rep.tv_raw, "tv_erased": rep.tv_erased,
        "threshold": rep.threshold, "pass": rep.passed,
    })
    return 0 if rep.passed else 1


def cmd_sle_curve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    theta = theta_grid(cfg.n_theta)
    for kappa in cfg.kappas or (8.0 / 3.0, 6.0):
        c = schramm_curve(kappa, theta)
        write_csv(out / f"sle_kappa_{kappa:.4g}.csv", cfg, "sle-curve", ("theta", "probability"), zip(c.theta, c.probability))
    return 0


COMMANDS = {
    "firsthit": cmd_firsthit,
    "passright": cmd_passright,
    "dimension": cmd_dimension,
    "oracle": cmd_oracle,
    "sle-curve": cmd_sle_curve,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lepx", description="Loop-erased percolation explorer experiments")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--raw", action="store_true", default=None, help="disable loop erasure")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        if args.command == "dimension" and args.config is None:
            cfg = replace(cfg, L=tuple(float(x) for x in DEFAULT_DIMENSION_L), shapes=("triangle",))
        over = {k: v for k, v in (("seed", args.seed), ("workers", args.workers), ("samples", args.samples), ("raw", args.raw), ("out", args.out)) if v is not None}
        cfg = replace(cfg, **over).validate()
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"lepx: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
