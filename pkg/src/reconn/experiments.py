"""Experiment configurations, model builders and the training loop."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import architectures as arch
from . import losses as L
from . import metrics
from .autodiff import Tape, flat_gradient
from .errors import ConfigError, NumericalFailure
from .geometry import Cutoff, LevelSet, make_rng
from .network import mlp_new, save_params
from .optimizer import LrSchedule, adam_new, adam_step, lr_at
from .problems import Problem, problem_1d, problem_interface, problem_lshape, problem_material_vertex

SQRT10 = math.sqrt(10.0)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    iterations: int = 5000
    n_interior: int = 2500
    n_interface: int = 0
    n_boundary: int = 0
    weights: tuple = (1.0,)
    sizes: tuple = (1, 20, 20, 20, 1)
    angular_sizes: tuple | None = None
    activation: str = "tanh"
    delta1: float = 0.5
    delta2: float = 0.9
    lambda_init: float = 0.5
    lr0: float = 1e-3
    lr_final: float = 1e-6
    stratified: bool = False
    grid_n: int | None = None
    a1: float = 3.584
    out_dir: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; known: {sorted(DEFAULTS)}")
        if self.iterations < 1 or self.n_interior < 1:
            raise ConfigError("iterations and batch sizes must be positive")
        if min(self.n_interface, self.n_boundary) < 0:
            raise ConfigError("batch sizes must be nonnegative")
        kind = DEFAULTS[self.experiment]["kind"]
        if kind in ("pinns-interface", "pinns-material") and min(self.n_interface, self.n_boundary) < 1:
            raise ConfigError("this experiment needs interface and boundary points")
        if kind == "pinns-lshape" and self.n_boundary < 1:
            raise ConfigError("this experiment needs boundary points")
        if not 0 < self.delta1 < self.delta2:
            raise ConfigError("cutoff radii need 0 < delta1 < delta2")
        L.LossWeights(self.weights)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("weights", "sizes", "angular_sizes"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


# kind: which problem/architecture/loss combination the id stands for
DEFAULTS: dict[str, dict] = {
    "1d-h1-tanh": dict(kind="h1-1d-classical", iterations=5000, n_interior=2500, sizes=(1, 20, 20, 20, 1)),
    "1d-h1-relu": dict(kind="h1-1d-classical", iterations=5000, n_interior=2500, sizes=(1, 20, 20, 20, 1),
                       activation="relu"),
    "1d-h1-reconn": dict(kind="h1-1d-reconn", iterations=5000, n_interior=2500, sizes=(1, 20, 20, 20, 2)),
    "1d-pinns": dict(kind="pinns-1d", iterations=5000, n_interior=2500, sizes=(1, 20, 20, 20, 2),
                     weights=(1.0, 1.0, 1.0)),
    "interface-2d": dict(kind="pinns-interface", iterations=50000, n_interior=1000, n_interface=1000,
                         n_boundary=1000, sizes=(2, 30, 30, 30, 2), weights=(1.0, SQRT10, 10.0)),
    "lshape-reconn": dict(kind="pinns-lshape", iterations=50000, n_interior=1000, n_boundary=1000,
                          sizes=(2, 30, 30, 30, 2), angular_sizes=(2, 15, 15, 15, 1),
                          weights=(1.0, 10.0, 1.0)),
    "lshape-classical": dict(kind="pinns-lshape", iterations=50000, n_interior=1000, n_boundary=1000,
                             sizes=(2, 35, 35, 35, 1), weights=(1.0, 10.0)),
    "material-pinns": dict(kind="pinns-material", iterations=50000, n_interior=1000, n_interface=1000,
                           n_boundary=1000, sizes=(2, 30, 30, 30, 6), angular_sizes=(2, 15, 15, 15, 3),
                           weights=(1.0, SQRT10, 10.0, 1.0), stratified=True),
    "material-h1-reconn": dict(kind="h1-material", iterations=50000, n_interior=2500,
                               sizes=(2, 30, 30, 30, 6), angular_sizes=(2, 15, 15, 15, 3)),
    "material-h1-classical": dict(kind="h1-material", iterations=50000, n_interior=2500,
                                  sizes=(2, 36, 36, 36, 1)),
}

EXPERIMENTS = tuple(DEFAULTS)


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}; known: {sorted(DEFAULTS)}")
    base = {k: v for k, v in DEFAULTS[experiment].items() if k != "kind"}
    base.update({k: v for k, v in overrides.items() if v is not None})
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(base) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k in ("weights", "sizes", "angular_sizes"):
        if base.get(k) is not None:
            base[k] = tuple(base[k])
    return ExperimentConfig(experiment=experiment, **base).validate()


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict) or "experiment" not in raw:
        raise ConfigError("config must be a JSON object with an 'experiment' key")
    exp = raw.pop("experiment")
    return default_config(exp, **raw)


# ------------------------------------------------------------------ build


@dataclass
class Model:
    config: ExperimentConfig
    problem: Problem
    field: arch.Field
    loss: Callable
    kind: str


def _net(sizes, activation, seed, k, name):
    return mlp_new(sizes, activation, init_seed=(seed, k), name=name)


def build(cfg: ExperimentConfig) -> Model:
    kind = DEFAULTS[cfg.experiment]["kind"]
    seed = cfg.seed
    cutoff = Cutoff(cfg.delta1, cfg.delta2)
    w = L.LossWeights(cfg.weights)
    if kind.startswith("h1-1d") or kind == "pinns-1d":
        problem = problem_1d()
    elif kind == "pinns-interface":
        problem = problem_interface()
    elif kind == "pinns-lshape":
        problem = problem_lshape()
    else:
        problem = problem_material_vertex(a1=cfg.a1)

    main = _net(cfg.sizes, cfg.activation, seed, 0, "w")
    if kind == "h1-1d-classical":
        fld = arch.ClassicalField(main)
    elif kind in ("h1-1d-reconn", "pinns-1d", "pinns-interface"):
        fld = arch.InterfaceField(main, problem.level_sets)
    elif kind == "pinns-lshape":
        if cfg.angular_sizes is None:
            fld = arch.ClassicalField(main)
        else:
            ang = arch.ClassicalField(_net(cfg.angular_sizes, cfg.activation, seed, 1, "phi"))
            unit = arch.SingularUnit((0.0, 0.0), ang, cutoff, cfg.lambda_init)
            fld = arch.CornerField(main, [unit], cutoff)
    else:
        if cfg.angular_sizes is None:
            fld = arch.ClassicalField(main)
        else:
            ang_ls = (LevelSet("line-x1"), LevelSet("line-x2"))
            ang = arch.InterfaceField(_net(cfg.angular_sizes, cfg.activation, seed, 1, "phi"), ang_ls)
            unit = arch.SingularUnit((0.0, 0.0), ang, cutoff, cfg.lambda_init)
            fld = arch.MaterialVertexField(main, problem.level_sets, [unit], cutoff)

    if kind.startswith("h1"):
        def loss(field_, batch, tape):
            return L.loss_h1_fit(field_, problem, batch.interior, tape)
    else:
        fn = {
            "pinns-1d": L.loss_pinns_1d,
            "pinns-interface": L.loss_pinns_interface,
            "pinns-lshape": L.loss_pinns_lshape,
            "pinns-material": L.loss_pinns_material,
        }[kind]

        def loss(field_, batch, tape):
            return fn(field_, problem, batch, w, tape)

    return Model(cfg, problem, fld, loss, kind)


def make_batch(model: Model, rng) -> L.Batch:
    c = model.config
    return L.make_batch(model.problem, c.n_interior, c.n_interface, c.n_boundary, rng, c.stratified)


# ------------------------------------------------------------------ train


@dataclass
class RunResult:
    model: Model
    history: list = field(default_factory=list)
    columns: list = field(default_factory=list)
    report: metrics.ErrorReport | None = None
    seconds: float = 0.0

    @property
    def lambdas(self) -> list[float]:
        return [u.lambda_value for u in self.model.field.units]


def train(cfg: ExperimentConfig, out_dir=None, log: Callable[[str], None] | None = None,
          log_every: int = 0) -> RunResult:
    """Run the configured training; write artifacts when ``out_dir`` is set."""
    cfg.validate()
    model = build(cfg)
    fld = model.field
    params = fld.params
    rng = make_rng(np.random.SeedSequence([cfg.seed, 7]).generate_state(1)[0])
    state = adam_new(params)
    sched = LrSchedule(cfg.iterations, cfg.lr0, cfg.lr_final)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = RunResult(model)
    names = None
    t0 = time.perf_counter()
    T = cfg.iterations
    for it in range(T):
        batch = make_batch(model, rng)
        tape = Tape()
        res = model.loss(fld, batch, tape)
        total = res.total_value
        if not np.isfinite(total):
            raise NumericalFailure(it)
        g = flat_gradient(params, tape.backward(res.total))
        if not np.all(np.isfinite(g)):
            raise NumericalFailure(it, "non-finite gradient")
        raw = res.values()
        if names is None:
            names = list(raw)
            result.columns = (["iteration", "total"] + names + [f"sqrt_{n}" for n in names] + ["lr"]
                              + [f"lambda_{i}" for i in range(len(fld.units))])
        lr = lr_at(sched, it)
        row = [it, total] + [raw[n] for n in names] + [math.sqrt(raw[n]) for n in names] + [lr]
        row += result.lambdas
        result.history.append(row)
        if log is not None and log_every and (it % log_every == 0 or it == T - 1):
            log(f"iter {it:6d}  loss {total:.6e}  " + "  ".join(f"{n}={raw[n]:.3e}" for n in names))
        adam_step(state, params, g, lr)
        if out is not None and T >= 2 and it + 1 == T // 2:
            metrics.grid_dump(fld, model.problem, out / "grid_mid.csv", cfg.grid_n)
    result.seconds = time.perf_counter() - t0
    result.report = metrics.relative_l2(fld, model.problem, cfg.grid_n)
    if out is not None:
        write_artifacts(result, out)
    return result


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def write_history(result: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(result.columns) + "\n")
        for row in result.history:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def singular_rows(model: Model, n_theta: int = 360):
    """Angular and flux traces of the trained unit next to the exact ones."""
    p = model.problem
    if p.name == "lshape":
        rng = (-0.5 * np.pi, np.pi)

        def sig(th):
            return np.ones_like(th)

        def exact(th):
            return np.sin(2.0 / 3.0 * (th + 0.5 * np.pi)), 2.0 / 3.0 * np.cos(2.0 / 3.0 * (th + 0.5 * np.pi))
    else:
        sol = p.singular
        rng = (0.0, 2 * np.pi)

        def sig(th):
            return np.asarray(sol.sigma)[sol.sector_of(th)]

        def exact(th):
            return sol.phi(th), sig(th) * sol.dphi(th)

    reps = arch.singular_report(model.field, n_theta, rng, sig)
    rows = []
    for k, rep in enumerate(reps):
        ephi, eflux = exact(rep["theta"])
        for t, ph, fl, e1, e2 in zip(rep["theta"], rep["phi"], rep["flux"], ephi, eflux):
            rows.append((k, rep["lambda"], t, ph, fl, e1, e2))
    return rows


def write_artifacts(result: RunResult, out: Path) -> None:
    model = result.model
    cfg = model.config
    write_history(result, out / "loss_history.csv")
    metrics.grid_dump(model.field, model.problem, out / "grid_final.csv", cfg.grid_n)
    header = {"architecture": model.field.describe(), "experiment": cfg.experiment, "seed": cfg.seed}
    save_params(model.field.params, out / "params.bin", header)
    m = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "errors": result.report.to_dict(),
        "param_count": model.field.param_count,
        "iterations": cfg.iterations,
        "final_loss": result.history[-1][1] if result.history else None,
        "seconds": result.seconds,
    }
    if model.field.units:
        m["lambda"] = result.lambdas
        m["lambda_exact"] = model.problem.lambda_star
        with open(out / "singular_report.csv", "w") as fh:
            fh.write("unit,lambda,theta,phi,flux,phi_exact,flux_exact\n")
            for row in singular_rows(model):
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    (out / "metrics.json").write_text(json.dumps(m, indent=2))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw).validate()
