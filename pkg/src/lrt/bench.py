"""Solver comparison harness on synthetic rotated, corrupted textures."""
import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .outer import OuterConfig, RectificationError, default_init_angles, rectify
from .solvers import DivergenceError, get_solver
from .synth import (CorruptionSpec, TextureSpec, deform_and_corrupt, gen_texture,
                    required_margin)

CSV_HEADER = ["instance", "outer", "solver", "iter", "time_s", "rank", "e_l1", "tol"]
DEFAULT_SOLVERS = ("direct", "sgs", "sgs_g")
_KIND_ORDER = ("stripes", "checkerboard", "low_rank_product", "grid_lines")


@dataclass(frozen=True)
class BenchInstance:
    id: int
    texture: TextureSpec
    angle: float
    corruption: CorruptionSpec
    margin: int

    def build(self):
        """Return ``(scene, ground_truth)``; the texture covers the canvas."""
        spec = replace(self.texture, m=self.texture.m + 2 * self.margin,
                       n=self.texture.n + 2 * self.margin)
        return deform_and_corrupt(gen_texture(spec), self.angle, self.corruption,
                                  self.margin)

    @property
    def rank(self):
        return self.texture.rank


def make_instance(idx, kind, size, seed, angle_deg=10.0, fraction=0.05):
    angle = np.deg2rad(angle_deg)
    rank = 3 if kind == "low_rank_product" else None
    return BenchInstance(
        id=idx,
        texture=TextureSpec(kind, size, size, rank_target=rank, seed=seed),
        angle=angle,
        corruption=CorruptionSpec(fraction, seed=seed + 7919),
        margin=required_margin(size, size, angle))


def make_suite(name="default", seed=1):
    """Named instance suites.

    ``tiny``: stripes and checkerboard at 32x32.
    ``default``: the four texture kinds, five variants each, cycling the
    window size 32, 64, 32, 64, 32 (20 instances).
    """
    base = 1000 * seed
    if name == "tiny":
        return [make_instance(i, kind, 32, base + i)
                for i, kind in enumerate(("stripes", "checkerboard"))]
    if name == "default":
        sizes = (32, 64, 32, 64, 32)
        out = []
        for v, size in enumerate(sizes):
            for kind in _KIND_ORDER:
                i = len(out)
                out.append(make_instance(i, kind, size, base + i))
        return out
    raise ValueError(f"unknown suite {name!r}; choose 'tiny' or 'default'")


@dataclass
class BenchRow:
    instance: int
    outer: int
    solver: str
    iter: int
    time_s: float
    rank: int
    e_l1: float
    tol: float
    objective: float = float("nan")
    converged: bool = False
    error: str = ""

    def csv_fields(self):
        return [str(self.instance), str(self.outer), self.solver, str(self.iter),
                f"{self.time_s:.2e}", str(self.rank), f"{self.e_l1:.2e}",
                f"{self.tol:.2e}"]


@dataclass
class Outcome:
    """One rectification of one instance by one solver."""

    instance: BenchInstance
    solver: str
    result: object = None
    error: str = ""

    @property
    def ok(self):
        return self.result is not None

    @property
    def angle_error_deg(self):
        if not self.ok:
            return float("nan")
        got = geo.rotation_angle(self.result.tau_final)
        return float(np.rad2deg(abs(got - (-self.instance.angle))))


@dataclass
class RunReport:
    rows: list
    outcomes: list = field(default_factory=list)
    solvers: tuple = DEFAULT_SOLVERS

    def to_csv(self, include_time=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = CSV_HEADER if include_time else [c for c in CSV_HEADER if c != "time_s"]
        w.writerow(header)
        for row in self.rows:
            f = row.csv_fields()
            if not include_time:
                del f[4]
            w.writerow(f)
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def rows_for(self, solver):
        return [r for r in self.rows if r.solver == solver]

    def all_converged(self, solver=None):
        outs = [o for o in self.outcomes if solver is None or o.solver == solver]
        return bool(outs) and all(o.ok and o.result.converged for o in outs)

    def summary(self):
        """Per solver: median inner iterations and fraction of converged runs."""
        lines = []
        for s in self.solvers:
            its = [r.iter for r in self.rows_for(s) if not r.error]
            outs = [o for o in self.outcomes if o.solver == s]
            conv = sum(o.ok and o.result.converged for o in outs)
            med = float(np.median(its)) if its else float("nan")
            lines.append(f"{s}: median_iter={med:g} converged={conv}/{len(outs)}")
        return lines


def _rows_from_result(inst, solver, result):
    return [BenchRow(instance=inst.id, outer=r.round, solver=solver, iter=r.iterations,
                     time_s=r.wall_time, rank=r.rank, e_l1=r.e_l1, tol=r.eta,
                     objective=r.objective, converged=r.converged)
            for r in result.per_round]


def run_benchmark(suite, solvers=DEFAULT_SOLVERS, cfg=None):
    """Rectify every instance with every solver on identical scenes.

    ``cfg`` is a template; its ``inner_solver`` is overridden per solver.
    Failures are recorded as rows with ``error`` set and the run continues.
    """
    suite = list(suite)
    solvers = tuple(solvers)
    if not suite:
        raise ValueError("benchmark suite is empty")
    if not solvers:
        raise ValueError("no solvers given")
    for s in solvers:
        get_solver(s)
    if cfg is None:
        cfg = OuterConfig(init_angles=default_init_angles())
    rows, outcomes = [], []
    for inst in suite:
        scene, gt = inst.build()
        for s in solvers:
            run_cfg = replace(cfg, inner_solver=s)
            try:
                res = rectify(scene, gt.window, run_cfg)
            except (RectificationError, DivergenceError) as exc:
                outcomes.append(Outcome(inst, s, error=str(exc)))
                nan = float("nan")
                rows.append(BenchRow(inst.id, 0, s, 0, nan, -1, nan, nan, error=str(exc)))
                continue
            outcomes.append(Outcome(inst, s, res))
            rows.extend(_rows_from_result(inst, s, res))
    order = {s: i for i, s in enumerate(solvers)}
    rows.sort(key=lambda r: (r.instance, r.outer, order[r.solver]))
    return RunReport(rows=rows, outcomes=outcomes, solvers=solvers)
