"""Named, reproducible experiments: JSON config in, report.json plus CSV traces out.

Every experiment is a small pipeline over the library and carries one
anchor string naming the statement it exercises.  Verdicts live in the
report; exit codes are reserved for tool failures (see ``cli``).
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import circle as circ
from . import measures as meas
from . import proximal as prox
from .spaces import (
    BinarySeqPoint,
    BinarySeqSpace,
    Grid,
    ProductPoint,
    build_grid,
    interior_points,
    parse_real,
)
from .systems import Iterate, Shift, SystemModel, system_from_json

SCHEMA = "1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_DESCRIPTOR = 4
EXIT_OUTPUT = 5


class ExperimentError(Exception):
    code = EXIT_CONFIG


class ConfigError(ExperimentError):
    """Malformed config or unknown experiment name."""

    code = EXIT_CONFIG


class DescriptorError(ExperimentError):
    """A system or measure descriptor that cannot be built."""

    code = EXIT_DESCRIPTOR


class OutputError(ExperimentError):
    code = EXIT_OUTPUT


class NumericFailure(ExperimentError):
    code = EXIT_NUMERIC


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

HORIZON_KEYS = ("N", "eps", "r", "step", "delta")


@dataclass
class ExperimentConfig:
    experiment: str
    system: dict | None = None
    grid: dict = field(default_factory=dict)
    horizon: dict = field(default_factory=dict)
    measure: dict | None = None
    seed: int = 0
    output: str | None = None
    options: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: Any) -> ExperimentConfig:
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        schema = obj.get("schema", SCHEMA)
        if str(schema) != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        known = {"schema", "experiment", "system", "grid", "horizon", "measure", "seed", "output", "options"}
        extra = sorted(set(obj) - known)
        if extra:
            raise ConfigError(f"unknown config keys {extra}")
        name = obj.get("experiment")
        if not isinstance(name, str):
            raise ConfigError("config needs an experiment name")
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}")
        exp = EXPERIMENTS[name]
        grid = {**exp.defaults.get("grid", {}), **(obj.get("grid") or {})}
        horizon = {**exp.defaults.get("horizon", {}), **(obj.get("horizon") or {})}
        options = {**exp.defaults.get("options", {}), **(obj.get("options") or {})}
        bad = sorted(set(horizon) - set(HORIZON_KEYS))
        if bad:
            raise ConfigError(f"unknown horizon keys {bad}")
        seed = obj.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        cfg = cls(
            experiment=name,
            system=obj.get("system", exp.defaults.get("system")),
            grid=grid,
            horizon=horizon,
            measure=obj.get("measure", exp.defaults.get("measure")),
            seed=seed,
            output=obj.get("output"),
            options=options,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if "h" in self.grid:
            try:
                h = float(parse_real(self.grid["h"]))
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad grid h: {exc}") from None
            if not 0 < h <= 1:
                raise ConfigError("grid h must lie in (0, 1]")
        for key, val in self.horizon.items():
            if val is None:
                continue
            try:
                v = float(parse_real(val))
            except (TypeError, ValueError, ZeroDivisionError):
                raise ConfigError(f"horizon {key} must be a number") from None
            if key == "N" and (v != int(v) or v < 1):
                raise ConfigError("horizon N must be a positive integer")
            if key != "N" and not v > 0:
                raise ConfigError(f"horizon {key} must be positive")
        if self.system is not None:
            build_system(self.system)
        if self.measure is not None and not isinstance(self.measure, dict):
            raise DescriptorError("measure descriptor must be an object")

    @property
    def h(self) -> float:
        return float(parse_real(self.grid["h"]))

    def horizon_params(self) -> prox.HorizonParams:
        kw = {}
        for key, val in self.horizon.items():
            if val is None:
                continue
            v = parse_real(val)
            kw[key] = int(v) if key == "N" else float(v)
        return prox.HorizonParams(**kw)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "experiment": self.experiment,
            "system": self.system,
            "grid": self.grid,
            "horizon": self.horizon,
            "measure": self.measure,
            "seed": self.seed,
            "options": self.options,
        }


def build_system(desc: Any) -> SystemModel:
    try:
        return system_from_json(desc)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise DescriptorError(f"invalid system descriptor {desc!r}: {exc}") from None


def build_measure(desc: dict, system: SystemModel, grid: Grid | None) -> tuple[meas.AtomicMeasure, str]:
    """``lebesgue_grid``, ``atoms`` (points + optional weights) or ``cesaro`` of a base measure."""
    try:
        kind = desc["kind"]
        if kind == "lebesgue_grid":
            if grid is None:
                raise DescriptorError("lebesgue_grid needs a grid")
            return meas.lebesgue_grid(grid), "lebesgue_grid"
        if kind == "atoms":
            pts = [system.space.point_from_json(p) for p in desc["points"]]
            return meas.make_atomic(pts, desc.get("weights"), system.space), "atoms"
        if kind == "cesaro":
            base, name = build_measure(desc["base"], system, grid)
            n = int(desc["n"])
            mu = meas.cesaro(base, system, n, float(desc.get("bin_h", 0.0)))
            return mu, f"cesaro({name},{n})"
    except DescriptorError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise DescriptorError(f"invalid measure descriptor {desc!r}: {exc}") from None
    raise DescriptorError(f"unknown measure kind {desc.get('kind')!r}")


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", s).strip("_")


class Run:
    """Collects sub-reports, verdicts and numbers for one experiment."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.subreports: dict[str, Any] = {}
        self.verdicts: dict[str, dict] = {}
        self.numbers: dict[str, Any] = {}

    def sub(self, name: str, obj: Any) -> str:
        fname = f"{_slug(name)}.json"
        self.subreports[fname] = obj
        return fname

    def verdict(self, key: str, value: Any, source: str) -> None:
        self.verdicts[key] = {"value": value, "source": source}


def csv_tables(subreports: dict[str, Any]) -> dict[str, tuple[list[str], list[list]]]:
    """Plot tables derived from sub-reports: diam traces, per-center masses, rho convergence, masks."""
    out: dict[str, tuple[list[str], list[list]]] = {}
    for fname, obj in sorted(subreports.items()):
        if not isinstance(obj, dict):
            continue
        stem = fname[: -len(".json")]
        if "diam_trace" in obj:
            out[f"{stem}_diam.csv"] = (["n", "diam"], [[n, d] for n, d in obj["diam_trace"]])
        pc = obj.get("per_center")
        if isinstance(pc, dict) and "mass" in pc:
            out[f"{stem}_masses.csv"] = (["center", "mass"], [list(r) for r in zip(pc["center"], pc["mass"])])
        if isinstance(pc, dict) and "interior_count" in pc:
            out[f"{stem}_interior_counts.csv"] = (
                ["center", "cell_size", "interior_count"],
                [list(r) for r in zip(pc["center"], pc["cell_size"], pc["interior_count"])],
            )
        if "rho_trace" in obj:
            out[f"{stem}_rho.csv"] = (
                ["n", "estimate"],
                [[n, float(Fraction(e)) if isinstance(e, str) else e] for n, e in obj["rho_trace"]],
            )
        for key, val in sorted(obj.get("masks", {}).items()):
            out[f"{stem}_{_slug(key)}_mask.csv"] = (["index"], [[i] for i in val])
        if "defect_trace" in obj:
            out[f"{stem}_defect.csv"] = (["n", "defect"], [list(r) for r in obj["defect_trace"]])
    return out


def write_csvs(dest: Path, tables: dict[str, tuple[list[str], list[list]]]) -> list[str]:
    dest.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in tables.items():
        with open(dest / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    return sorted(tables)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _grid(cfg: ExperimentConfig, system: SystemModel) -> Grid:
    return build_grid(system.space, cfg.h)


def _certificate(run: Run, system: SystemModel, grid: Grid, params: prox.HorizonParams, name: str = "certificate"):
    cert = prox.inner_distal_certificate(system, grid, params)
    body = cert.to_json()
    src = run.sub(name, body)
    run.verdict(name, cert.verdict, src)
    run.verdict(f"{name}_ball_route", cert.ball_route["verdict"], src)
    run.verdict(f"{name}_routes_agree", cert.ball_route["agrees"], src)
    run.numbers[f"{name}_interior_total"] = int(sum(cert.interior_counts))
    run.numbers[f"{name}_grid_size"] = grid.size
    if cert.witness is not None:
        run.numbers[f"{name}_witness_component_diam"] = cert.witness["component_diam"]
        run.numbers[f"{name}_witness_interior_point"] = cert.witness["interior_point"]
    return cert


def _interval_circle_certificate(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    grid = _grid(cfg, system)
    params = cfg.horizon_params()
    _certificate(run, system, grid, params)
    o = cfg.options
    a, b = (float(v) for v in o["segment"])
    y0 = system.g.space.point_from_json(o["y0"])
    seg = [ProductPoint(float(x), y0) for x in np.linspace(a, b, int(o["samples"]))]
    probe = prox.cw_distal_probe(system, [seg], params.N, float(o["gamma"]))
    dec = prox.diam_decay(system, seg, params.N, initial="fiber segment")
    probe["diam_trace"] = [[n, d] for n, d in dec.trace]
    probe["segment"] = {"x": [a, b], "y0": o["y0"], "samples": int(o["samples"])}
    src = run.sub("cw_distal", probe)
    run.verdict("cw_distal", probe["verdict"], src)
    run.numbers["cw_min_diam"] = dec.min_diam
    run.numbers["cw_argmin_n"] = dec.argmin_n
    probe_n = int(o["report_n"])
    run.numbers[f"cw_diam_at_n{probe_n}"] = dict(dec.trace)[probe_n]


def _sqrt_interval_refute(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    _certificate(run, system, _grid(cfg, system), cfg.horizon_params())


def _rect(a: float, b: float, w: float, k: int) -> list:
    xs = np.linspace(a, a + w, k)
    ys = np.linspace(b, b + w, k) % 1.0
    return [ProductPoint(float(x), float(y)) for x in xs for y in ys]


def _extension_check(run: Run) -> None:
    cfg = run.config
    o = cfg.options
    g = build_system(cfg.system)
    f = build_system(o["factor_system"])
    wrong = build_system(o["wrong_factor_system"])
    pi = prox.FactorMap(o["factor_map"])
    wrong_pi = prox.FactorMap(o["wrong_factor_map"])
    n = int(o["samples"])
    xs, ys = run.rng.random(n), run.rng.random(n)
    samples = [ProductPoint(float(x), float(y)) for x, y in zip(xs, ys)]
    try:
        hom = prox.check_homomorphism(g, f, pi, samples)
        bad = prox.check_homomorphism(g, wrong, wrong_pi, samples)
    except ValueError as exc:
        raise DescriptorError(str(exc)) from None
    src = run.sub("homomorphism", {"factor": hom, "wrong_factor": bad})
    run.verdict("homomorphism", "PASS" if hom["passed"] else "FAIL", src)
    run.verdict("wrong_factor", "DETECTED" if bad["defect"] > 0 else "MISSED", src)
    run.numbers["factor_defect"] = hom["defect"]
    run.numbers["wrong_factor_defect"] = bad["defect"]

    gridY = _grid(cfg, g)
    gridX = build_grid(pi.codomain(g.space), cfg.h)
    r = cfg.horizon_params().resolved(gridY).r
    w = float(o["rect_side"])
    k = int(round(w / gridY.spacing)) + 1
    corners = run.rng.random((int(o["rectangles"]), 2)) * (1 - w)
    continua = [_rect(float(cx), float(cy), w, k) for cx, cy in corners]
    light = prox.inner_light_probe(pi, continua, gridX, gridY, r)
    collapse = prox.FactorMap("collapse_right", value=0.0)
    dark = prox.inner_light_probe(collapse, continua, gridY, gridY, r)
    src = run.sub("inner_light", {"factor": light, "collapse": dark, "r": r, "rect_side": w})
    run.verdict("inner_light", light["verdict"], src)
    run.verdict("collapse_counterexample", dark["verdict"], src)


def _classify(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    o = cfg.options
    params = circ.ClassifyParams(
        n_rho=int(o["n_rho"]),
        qmax=int(o["qmax"]),
        tol=float(o["tol"]),
        grid_h=cfg.h,
        arc_count=int(o["arc_count"]),
        arc_horizon=int(o["arc_horizon"]),
    )
    try:
        res = circ.classify_circle(system, params)
    except TypeError as exc:
        raise DescriptorError(str(exc)) from None
    body = res.to_json()
    body["rho_trace"] = circ.rho_convergence(system, params.t0, params.n_rho)
    body["masks"] = {"periodic": body["evidence"].pop("periodic_mask", [])}
    src = run.sub("classify", body)
    run.verdict("class", res.cls, src)
    run.numbers["rho"] = body["rho"]
    run.numbers["rho_error"] = res.error
    if res.cls == circ.RATIONAL_WITH_PERIODIC_SET:
        run.numbers["periodic_fraction"] = res.evidence["periodic_count"] / res.evidence["grid_size"]
    if res.witness is not None:
        run.numbers["wandering_arc"] = list(res.witness)


def _near_mask_mass(mu: meas.AtomicMeasure, grid: Grid, mask, r: float) -> float:
    """Mass of atoms within ``r`` of some point of ``mask``."""
    pts = mask.points()
    if not pts:
        return 0.0
    C = grid.space.coords_array(pts)
    d = grid.space.dist_coords(mu.coords()[:, None, :], C[None, :, :]).min(axis=1)
    return float(mu.weights[d <= r].sum())


def _circle_support(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    grid = _grid(cfg, system)
    params = cfg.horizon_params().resolved(grid)
    mu, mid = build_measure(cfg.measure, system, grid)
    o = cfg.options
    tol = float(o["tol"])
    omega = circ.nonwandering_points(system, grid, params.r, params.N)
    rho, err = circ.rotation_number(system, 0.0, int(o["n_rho"]))
    rat = circ.rational_approx(rho, 50, max(1e-6, err))
    per_mask = circ.periodic_points(system, rat.denominator, grid).mask if rat is not None else grid.mask()
    supp = meas.support(mu, float(o["support_tol"]), grid.spacing)
    out_omega = 1.0 - _near_mask_mass(mu, grid, omega, params.r)
    out_per = 1.0 - _near_mask_mass(mu, grid, per_mask, params.r)
    body = {
        "measure": mid,
        "invariance_defect": meas.invariance_defect(mu, system),
        "support": [system.space.point_to_json(p) for p in supp],
        "mass_outside_nonwandering": out_omega,
        "mass_outside_periodic": out_per,
        "rho": rho,
        "rational": rat,
        "r": params.r,
        "tol": tol,
        "masks": {"nonwandering": omega.to_json(), "periodic": per_mask.to_json()},
    }
    src = run.sub("support", body)
    run.verdict("support_in_nonwandering", "PASS" if out_omega <= tol else "FAIL", src)
    run.verdict("support_in_periodic", "PASS" if out_per <= tol else "FAIL", src)
    run.numbers["mass_outside_nonwandering"] = out_omega
    run.numbers["mass_outside_periodic"] = out_per
    run.numbers["invariance_defect"] = body["invariance_defect"]


def _interval_trichotomy(run: Run) -> None:
    cfg = run.config
    params = cfg.horizon_params()
    tol = float(cfg.options["tol"])
    for desc in cfg.options["systems"]:
        system = build_system(desc)
        grid = _grid(cfg, system)
        mu, mid = build_measure(cfg.measure, system, grid)
        rep = meas.inner_distal_measure_test(mu, system, grid, params, tol, mid)
        src = run.sub(f"measure_test_{system.id}", rep.to_json())
        run.verdict(system.id, rep.verdict, src)
        run.numbers[f"{system.id}_max_mass"] = rep.max_mass


def _torus_meagre_and_inner(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    grid = _grid(cfg, system)
    hp = cfg.horizon_params().resolved(grid)
    tol = float(cfg.options["tol"])
    mu, mid = build_measure(cfg.measure, system, grid)
    meagre = meas.meagre_expansive_measure_test(mu, system, grid, hp.delta, hp.N, hp.r, tol, "two_sided", mid)
    inner = meas.inner_distal_measure_test(mu, system, grid, hp, tol, mid)
    src = run.sub("meagre_expansive", meagre.to_json())
    run.verdict("meagre_expansive", meagre.verdict, src)
    src = run.sub("inner_distal_measure", inner.to_json())
    run.verdict("inner_distal_measure", inner.verdict, src)
    run.numbers["meagre_max_mass"] = meagre.max_mass
    run.numbers["inner_max_mass"] = inner.max_mass

    centers = sorted(run.rng.choice(grid.size, int(cfg.options["ball_samples"]), replace=False).tolist())
    balls = []
    for c in centers:
        ball = prox.dynamic_ball(system, grid.point(c), grid, hp.delta, hp.N)
        balls.append({"center_index": c, "size": ball.count, "interior": interior_points(ball, hp.r).count})
    src = run.sub("dynamic_balls", {"delta": hp.delta, "N": hp.N, "r": hp.r, "balls": balls})
    run.verdict("ball_interiors_empty", all(b["interior"] == 0 for b in balls), src)

    factor = system.g
    fgrid = build_grid(factor.space, cfg.h)
    sep = prox.min_separation(factor, fgrid, hp.N)
    bound = float(cfg.options["separation"])
    sep["bound"] = bound
    src = run.sub("separation", sep)
    run.verdict("separation", "PASS" if sep["min_max_distance"] >= bound else "FAIL", src)
    run.numbers["min_max_distance"] = sep["min_max_distance"]


def _krylov_bogolyubov(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    o = cfg.options
    base, _ = build_measure(cfg.measure, system, None)
    trace = []
    mu = None
    for n in o["checkpoints"]:
        mu = meas.cesaro(base, system, int(n))
        trace.append([int(n), meas.invariance_defect(mu, system)])
    target = system.space.point_from_json(o["target"])
    near = float(sum(w for p, w in mu.atoms if system.space.dist(p, target) <= float(o["target_radius"])))
    ctrl = build_system(o["control_system"])
    cmu = meas.cesaro(meas.make_atomic([ctrl.space.point_from_json(o["control_point"])], None, ctrl.space), ctrl, int(o["control_n"]))
    cdef = meas.invariance_defect(cmu, ctrl)
    body = {
        "defect_trace": trace,
        "mass_near_target": near,
        "target": o["target"],
        "control": {"system": ctrl.id, "n": int(o["control_n"]), "defect": cdef, "atoms": cmu.to_json()["atoms"]},
        "tol": float(o["tol"]),
    }
    src = run.sub("cesaro", body)
    final = trace[-1][1]
    run.verdict("invariant_within_tol", "PASS" if final <= float(o["tol"]) else "FAIL", src)
    run.verdict("control_invariant", "PASS" if cdef <= 1e-12 else "FAIL", src)
    run.numbers["final_defect"] = final
    run.numbers["mass_near_target"] = near
    run.numbers["control_defect"] = cdef


def _minimal_rotation(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    grid = _grid(cfg, system)
    params = cfg.horizon_params()
    _certificate(run, system, grid, params)
    mu, mid = build_measure(cfg.measure, system, grid)
    rep = meas.inner_distal_measure_test(mu, system, grid, params, float(cfg.options["tol"]), mid)
    body = rep.to_json()
    body["invariance_defect"] = meas.invariance_defect(mu, system)
    src = run.sub("measure_test", body)
    run.verdict("measure_test", rep.verdict, src)
    run.numbers["measure_max_mass"] = rep.max_mass
    run.numbers["measure_invariance_defect"] = body["invariance_defect"]


def _ap_stable_torus(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    grid = _grid(cfg, system)
    hp = cfg.horizon_params()
    sp = system.space
    o = cfg.options
    ap = sp.point_from_json(o["ap_point"])
    non = sp.point_from_json(o["non_ap_point"])
    ra = prox.return_times(system, ap, hp.eps, hp.N)
    rn = prox.return_times(system, non, hp.eps, hp.N)
    src = run.sub("return_times", {"ap_point": o["ap_point"], "ap": ra, "non_ap_point": o["non_ap_point"], "non_ap": rn})
    run.verdict("ap_point", ra["verdict"], src)
    run.verdict("non_ap_point", rn["verdict"], src)
    run.numbers["ap_max_gap"] = ra["max_gap"]
    run.numbers["non_ap_R"] = rn["R"]

    x = sp.point_from_json(o["stable_point"])
    S = prox.stable_class(system, x, grid, hp.N, hp.eps)
    C = grid.coords
    fiber = sp.right.dist_coords(C[:, 1:], np.array([[float(x.b)]])) <= hp.eps
    cover = float((S.included & fiber).sum() / fiber.sum())
    off = float((S.included & ~fiber).sum() / max(1, (~fiber).sum()))
    body = {
        "point": o["stable_point"],
        "fiber_coverage": cover,
        "off_fiber_fraction": off,
        "masks": {"stable_class": S.to_json()},
    }
    src = run.sub("stable_class", body)
    ok = cover >= float(o["min_coverage"]) and off <= float(o["max_off_fiber"])
    run.verdict("stable_class_matches_fiber", "PASS" if ok else "FAIL", src)
    run.numbers["fiber_coverage"] = cover
    run.numbers["off_fiber_fraction"] = off


def window_pair(k: int) -> tuple[BinarySeqPoint, BinarySeqPoint]:
    """``0^inf`` and the sequence that is 0 exactly on ``1..2k-1``; their proximal gap is ``2^-min(N, k)``."""
    return BinarySeqPoint.constant("0"), BinarySeqPoint("1", "0" * (2 * k - 1), "1", 1)


def _shift_per_interior(run: Run) -> None:
    cfg = run.config
    system = build_system(cfg.system)
    if not isinstance(system, Shift):
        raise DescriptorError("shift_per_interior needs the shift system")
    o = cfg.options
    L = int(o["max_word"])
    rows = []
    all_ok = True
    for m in range(1, L + 1):
        for bits in itertools.product("01", repeat=m):
            w = "".join(bits)
            per, other = prox.cylinder_witnesses(w)
            ok = per.window(0, m - 1) == w and other.window(0, m - 1) == w and per.is_periodic and not other.is_periodic
            all_ok &= ok
            rows.append({"word": w, "periodic": system.space.point_to_json(per), "non_periodic": system.space.point_to_json(other), "ok": ok})
    src = run.sub("cylinders", {"max_word": L, "scale": 2.0 ** -3, "words": rows})
    run.verdict("per_empty_interior", "PASS" if all_ok else "FAIL", src)
    run.numbers["cylinders_checked"] = len(rows)

    pairs = []
    mismatches = 0
    for N in o["pair_horizons"]:
        for k in range(1, int(o["pair_count"]) + 1):
            x, y = window_pair(k)
            got = prox.prox_gap(system, x, y, int(N))
            want = 2.0 ** -min(int(N), k)
            mismatches += got != want
            pairs.append({"N": int(N), "offset": k, "prox_gap": got, "formula": want})
    src = run.sub("prox_gap_pairs", {"pairs": pairs, "mismatches": mismatches})
    run.verdict("prox_gap_formula", "PASS" if mismatches == 0 else "FAIL", src)
    run.numbers["pairs_checked"] = len(pairs)

    grid = _grid(cfg, system)
    _certificate(run, system, grid, cfg.horizon_params(), "spot_certificate")


def _cells_by_center(system, grid, nmin, nmax, eps):
    T = prox.OrbitTable(system, nmin, nmax, grid=grid)
    cache: dict = {}
    return lambda c: prox._cell(T, T, c, eps, cache)


def _inclusion(run: Run, inner_fn, label: str) -> None:
    cfg = run.config
    total_bad = 0
    for desc, h in cfg.options["cases"]:
        system = build_system(desc)
        grid = build_grid(system.space, float(parse_real(h)))
        params = cfg.horizon_params()
        small, big = inner_fn(system, grid, params)
        bad = [c for c in range(grid.size) if not np.isin(small(c), big(c)).all()]
        total_bad += len(bad)
        src = run.sub(f"{label}_{system.id}", {"system": system.id, "h": h, "centers": grid.size, "violations": bad, "params": params.to_json()})
        run.verdict(system.id, "PASS" if not bad else "FAIL", src)
        run.numbers[f"{system.id}_violations"] = len(bad)
    run.numbers["violations"] = total_bad


def _iterate_inclusion(run: Run) -> None:
    def pair(system, grid, p):
        small = _cells_by_center(Iterate(system, 2), grid, -p.N, p.N, p.eps)
        big = _cells_by_center(system, grid, -2 * p.N, 2 * p.N, p.eps)
        return small, big

    _inclusion(run, pair, "iterate")


def _forward_ball_inclusion(run: Run) -> None:
    def pair(system, grid, p):
        T = prox.OrbitTable(system, 0, p.N, grid=grid)
        cache: dict = {}
        small = lambda c: prox._ball(T, T, c, p.delta, cache)  # noqa: E731
        big = _cells_by_center(system, grid, -2 * p.N, 2 * p.N, p.eps)
        return small, big

    _inclusion(run, pair, "forward_ball")


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

SQRT_ROT = {"kind": "product", "f": {"kind": "sqrt_interval"}, "g": {"kind": "rotation"}}


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    pipeline: str
    run: Callable[[Run], None]
    defaults: dict


def _exp(name, anchor, pipeline, fn, **defaults) -> Experiment:
    return Experiment(name, anchor, pipeline, fn, defaults)


_LIST = [
    _exp(
        "example_2_7_certificate",
        'interval x circle example: "Int P_f(x,y)=∅"',
        "inner_distal_certificate + cw_distal_probe on the interval x circle product",
        _interval_circle_certificate,
        system=SQRT_ROT,
        grid={"h": "1/200"},
        horizon={"N": 60, "eps": 1e-3},
        options={"segment": [0.2, 0.8], "y0": 0.0, "samples": 601, "gamma": 1e-2, "report_n": -6},
    ),
    _exp(
        "sqrt_interval_refute",
        'ball-shrinking criterion: "A necessary condition for"',
        "inner_distal_certificate on the square-root interval map",
        _sqrt_interval_refute,
        system={"kind": "sqrt_interval"},
        grid={"h": "1/200"},
        horizon={"N": 60, "eps": 1e-3},
    ),
    _exp(
        "extension_check",
        'extensions: "an inner-distal extension of"',
        "check_homomorphism + inner_light_probe on the first-coordinate projection",
        _extension_check,
        system=SQRT_ROT,
        grid={"h": "1/50"},
        horizon={},
        options={
            "factor_map": "proj_left",
            "factor_system": {"kind": "sqrt_interval"},
            "wrong_factor_map": "proj_right",
            "wrong_factor_system": {"kind": "identity_circle"},
            "samples": 200,
            "rectangles": 5,
            "rect_side": 0.2,
        },
    ),
    _exp(
        "rotation_classify",
        'circle classification: "is either distal or"',
        "classify_circle on a rotation",
        _classify,
        system={"kind": "rotation", "alpha": "1/3"},
        grid={"h": "1/200"},
        options={"n_rho": 100000, "qmax": 50, "tol": 1e-6, "arc_count": 20, "arc_horizon": 50},
    ),
    _exp(
        "denjoy_classify",
        'circle classification: "is either distal or"',
        "classify_circle on a Denjoy map",
        _classify,
        system={"kind": "denjoy", "K": 20, "c": 0.5},
        grid={"h": "1/200"},
        options={"n_rho": 100000, "qmax": 50, "tol": 1e-6, "arc_count": 20, "arc_horizon": 50},
    ),
    _exp(
        "circle_support",
        'support in the nonwandering set: "supp(μ) ⊆ Ω(f)"; rational circle case: "supported in the set of periodic points"',
        "cesaro + support + nonwandering_points comparison",
        _circle_support,
        system={"kind": "sine_circle", "a": 0.1, "shift": 0.0},
        grid={"h": "1/200"},
        horizon={"N": 60},
        measure={"kind": "cesaro", "base": {"kind": "atoms", "points": [0.25]}, "n": 2000},
        options={"tol": 0.01, "support_tol": 1e-3, "n_rho": 10000},
    ),
    _exp(
        "interval_trichotomy",
        'interval classification: "the Pole North-South homeomorphism"',
        "full-support inner_distal_measure_test on identity, north-south and square-root interval maps",
        _interval_trichotomy,
        system=None,
        grid={"h": "1/500"},
        horizon={"N": 60, "eps": 1e-3},
        measure={"kind": "lebesgue_grid"},
        options={
            "tol": 0.01,
            "systems": [{"kind": "identity_interval"}, {"kind": "north_south"}, {"kind": "sqrt_interval"}],
        },
    ),
    _exp(
        "torus_meagre_and_inner",
        'identity x Anosov example: "this map is meagre-expansive"',
        "dynamic_ball + both measure tests on identity x cat map, plus cat map separation",
        _torus_meagre_and_inner,
        system={"kind": "product", "f": {"kind": "identity_circle"}, "g": {"kind": "cat_map"}},
        grid={"h": "1/50"},
        horizon={"N": 30, "delta": 0.05, "eps": 1e-3},
        measure={"kind": "lebesgue_grid"},
        options={"tol": 0.01, "ball_samples": 5, "separation": 0.1},
    ),
    _exp(
        "krylov_bogolyubov",
        'Krylov-Bogolyubov analogue: "has invariant inner-distal measures"',
        "cesaro defect trace",
        _krylov_bogolyubov,
        system={"kind": "sqrt_interval"},
        measure={"kind": "atoms", "points": [0.5]},
        options={
            "checkpoints": [1, 2, 5, 10, 20, 50, 100, 200],
            "target": 1.0,
            "target_radius": 0.05,
            "tol": 0.05,
            "control_system": {"kind": "rotation", "alpha": "1/3"},
            "control_point": 0.0,
            "control_n": 3,
        },
    ),
    _exp(
        "minimal_rotation",
        'minimal systems: "supporting inner-distal measures is inner-distal"',
        "certificate + fully supported invariant measure on an irrational rotation",
        _minimal_rotation,
        system={"kind": "rotation"},
        grid={"h": "1/200"},
        horizon={"N": 60, "eps": 1e-3},
        measure={"kind": "lebesgue_grid"},
        options={"tol": 0.01},
    ),
    _exp(
        "ap_stable_torus",
        'almost periodic points: "AP(f)={1}×S¹"',
        "return_times + stable_class on the square-root circle x rotation torus",
        _ap_stable_torus,
        system={"kind": "product", "f": {"kind": "sqrt_circle"}, "g": {"kind": "rotation"}},
        grid={"h": "1/100"},
        horizon={"N": 200, "eps": 0.1},
        options={
            "ap_point": [0.0, 0.3],
            "non_ap_point": [0.5, 0.3],
            "stable_point": [0.5, 0.3],
            "min_coverage": 0.95,
            "max_off_fiber": 0.05,
        },
    ),
    _exp(
        "shift_per_interior",
        'totally transitive systems: "has empty interior"; shift example: "Int Per(σ)=∅"',
        "periodic and non-periodic witnesses per cylinder, prox_gap formula pairs, certificate spot check",
        _shift_per_interior,
        system={"kind": "shift"},
        grid={"h": 0.25},
        horizon={"N": 8, "eps": 0.125},
        options={"max_word": 7, "pair_horizons": [10, 40], "pair_count": 50},
    ),
    _exp(
        "iterate_inclusion",
        'iterates: "also an inner-distal measure for"',
        "proximal cell of f^2 at N inside the cell of f at 2N, every center",
        _iterate_inclusion,
        system=None,
        horizon={"N": 60, "eps": 1e-3},
        options={"cases": [[SQRT_ROT, "1/50"], [{"kind": "sqrt_interval"}, "1/200"]]},
    ),
    _exp(
        "forward_ball_inclusion",
        'forward dynamic balls: "positively meagre-expansive"',
        "forward dynamic ball at N inside the cell at 2N, every center",
        _forward_ball_inclusion,
        system=None,
        horizon={"N": 60, "eps": 0.05, "delta": 0.05},
        options={"cases": [[SQRT_ROT, "1/50"], [{"kind": "sqrt_interval"}, "1/200"]]},
    ),
]

EXPERIMENTS: dict[str, Experiment] = {e.name: e for e in _LIST}


def default_config(name: str) -> dict:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    d = EXPERIMENTS[name].defaults
    cfg = {"schema": SCHEMA, "experiment": name, "seed": 0}
    for key in ("system", "grid", "horizon", "measure", "options"):
        if d.get(key) is not None:
            cfg[key] = d[key]
    return cfg


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _prepare_output(out: str | os.PathLike) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {str(path)!r} is not writable: {exc}") from None
    return path


def run_experiment(config: ExperimentConfig | dict, out: str | os.PathLike | None = None) -> dict:
    """Run one experiment and write ``report.json``, sub-reports, CSV traces and ``timing.json``."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_json(config)
    target = out if out is not None else cfg.output
    if target is None:
        raise ConfigError("no output directory given")
    path = _prepare_output(target)
    exp = EXPERIMENTS[cfg.experiment]
    run = Run(cfg)
    t0 = time.perf_counter()
    try:
        with np.errstate(invalid="raise", divide="raise"):
            exp.run(run)
    except ExperimentError:
        raise
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericFailure(f"{cfg.experiment}: {exc}") from None
    wall = time.perf_counter() - t0

    files = []
    try:
        for fname, obj in run.subreports.items():
            (path / fname).write_text(dumps(obj))
            files.append(fname)
        files += write_csvs(path, csv_tables(run.subreports))
        report = {
            "schema": SCHEMA,
            "experiment": cfg.experiment,
            "anchor": exp.anchor,
            "pipeline": exp.pipeline,
            "config": cfg.to_json(),
            "verdicts": run.verdicts,
            "numbers": run.numbers,
            "artifacts": sorted(files),
            "timing_file": "timing.json",
        }
        (path / "report.json").write_text(dumps(report))
        (path / "timing.json").write_text(dumps({"experiment": cfg.experiment, "wall_clock_seconds": wall}))
    except OSError as exc:
        raise OutputError(str(exc)) from None
    return jsonable(report)


def emit_plots(report_dir: str | os.PathLike, dest: str | os.PathLike | None = None) -> list[str]:
    """Regenerate the plot CSVs of a finished run into ``dest`` (default ``<report_dir>/plots``)."""
    path = Path(report_dir)
    rep_file = path / "report.json"
    if not rep_file.is_file():
        raise ConfigError(f"no report.json in {str(path)!r}")
    report = json.loads(rep_file.read_text())
    subs = {}
    for fname in report.get("artifacts", []):
        if fname.endswith(".json"):
            subs[fname] = json.loads((path / fname).read_text())
    out = Path(dest) if dest is not None else path / "plots"
    try:
        return write_csvs(out, csv_tables(subs))
    except OSError as exc:
        raise OutputError(str(exc)) from None
