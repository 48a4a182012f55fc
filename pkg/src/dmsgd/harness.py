"""Configuration, CSV trace/bound files, experiment sweeps, and the CLI.

Configs are flat ``section.key = value`` text files (``#`` starts a
comment).  A run writes one trace CSV per seed plus an averaged trace;
``bounds`` evaluates every bound applicable to the configured objective
class; ``check`` verifies a trace against a bounds file; ``sweep`` runs a
small grid and emits a summary CSV.  Exit codes: 0 ok, 1 runtime error,
2 config/usage error, 3 bound violation.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from .objectives import (
    StochasticOracle,
    UnifiedObjective,
    common_optimum,
    load_dataset_csv,
    make_logistic,
    make_pl,
    make_quadratic,
    make_synthetic_dataset,
    partition_iid,
    partition_noniid,
    unified_optimum,
)
from .optimizer import AgentSwarm, HyperParams, run, step
from .topology import build_topology, lambda_cap, load_edge_list, metropolis_mixing, spectrum
from .verify import check_bound_domination

log = logging.getLogger("dmsgd")

TRACE_HEADER = "k,consensus_err_max,consensus_err_stacked,gap,grad_norm_sq,running_avg_grad,step_norm,omega_used"
TRACE_COLUMNS = TRACE_HEADER.split(",")[1:]
BOUNDS_HEADER = "k,bound_name,value"
SWEEP_HEADER = "omega,beta,topology,option,seed,status,final_gap,final_consensus,mean_omega"

# which trace column each bound row dominates, and how the metric transforms
BOUND_METRICS = {
    "consensus": ("consensus_err_max", lambda m: m),
    "displacement_sq": ("step_norm", lambda m: m**2),
    "cor1_gap": ("gap", lambda m: m),
    "thm2_gap": ("gap", lambda m: m),
    "avg_grad_envelope": ("running_avg_grad", lambda m: m),
    "sqrt_step_q": ("running_avg_grad", lambda m: m),
}

PILOT_ITERS = 200
PILOT_INFLATION = 1.05


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


class RuntimeFailure(RuntimeError):
    """Valid config that cannot be executed (CLI exit code 1)."""


# ----------------------------------------------------------------- config


@dataclass
class RunConfig:
    """Flat key/value configuration with typed accessors."""

    items: dict

    def get(self, key, default=None):
        return self.items.get(key, default)

    def require(self, key):
        if key not in self.items:
            raise ConfigError(f"missing config key {key!r}")
        return self.items[key]

    def get_float(self, key, default=None):
        raw = self.items.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from exc

    def get_int(self, key, default=None):
        raw = self.items.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from exc

    def get_bool(self, key, default=False):
        raw = self.items.get(key)
        if raw is None:
            return default
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key} must be a boolean, got {raw!r}")


def parse_config_text(text):
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if key in items:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        items[key] = value
    return RunConfig(items=items)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def serialize_config(cfg):
    """Canonical serialization: sorted keys, one 'key = value' per line."""
    return "".join(f"{k} = {cfg.items[k]}\n" for k in sorted(cfg.items))


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()[:12]


def _parse_vectors(raw, what):
    """'a,b;c,d' -> array of row vectors."""
    try:
        rows = [[float(v) for v in chunk.split(",")] for chunk in raw.split(";") if chunk.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what}: {raw!r}") from exc
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ConfigError(f"ragged rows in {what}: {raw!r}")
    return np.array(rows)


def _parse_scalars(raw, n, what):
    vals = [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if len(vals) == 1:
        return np.full(n, vals[0])
    if len(vals) != n:
        raise ConfigError(f"{what} needs 1 or {n} values, got {len(vals)}")
    return np.array(vals)


# --------------------------------------------------------------- scenario


@dataclass
class Scenario:
    """Everything derived from a config that a run or bound evaluation needs."""

    cfg: RunConfig
    topology: object
    mixing: object
    spectral: object
    suite: object
    oracle: object
    hp: HyperParams
    objective: object
    f_star: float
    omega_bound: float  # the omega used for Lambda/eta in bound inputs

    @property
    def lam(self):
        return lambda_cap(self.omega_bound, self.spectral.lambda2)

    @property
    def eta(self):
        return self.spectral.lambda_min_effective(0.0 if self.hp.omega == "adaptive" else self.omega_bound)


def _build_topology(cfg):
    kind = cfg.require("topology.kind")
    if kind == "custom":
        return load_edge_list(cfg.require("topology.edges"))
    n = cfg.get_int("topology.n")
    if n is None:
        raise ConfigError("missing config key 'topology.n'")
    parts = None
    if kind == "bipartite":
        raw = cfg.get("topology.parts")
        if raw is None:
            p = n // 2
            parts = (p, n - p)
        else:
            p, q = (int(v) for v in raw.split(","))
            parts = (p, q)
    try:
        return build_topology(kind, n, parts=parts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_suite(cfg):
    kind = cfg.require("objective.kind")
    if kind == "quadratic":
        targets = _parse_vectors(cfg.require("objective.targets"), "objective.targets")
        curv = _parse_scalars(cfg.get("objective.curvatures", "1"), len(targets), "objective.curvatures")
        return make_quadratic(targets, curv)
    if kind == "pl":
        n = cfg.get_int("objective.n", 1)
        shifts = _parse_scalars(cfg.get("objective.shifts", "0"), n, "objective.shifts")
        return make_pl(n, shifts=shifts)
    if kind == "logistic":
        path = cfg.get("objective.dataset", "synthetic")
        if path == "synthetic":
            ds = make_synthetic_dataset(
                cfg.get_int("objective.dataset_seed", 0),
                cfg.get_int("objective.samples", 400),
                cfg.get_int("objective.features", 5),
                cfg.get_int("objective.classes", 2),
                separation=cfg.get_float("objective.separation", 4.0),
            )
        else:
            ds = load_dataset_csv(path)
        n_agents = cfg.get_int("objective.agents", 4)
        strategy = cfg.get("objective.partition", "iid")
        if strategy == "iid":
            ds.partitions = partition_iid(ds, n_agents, cfg.get_int("objective.partition_seed", 0))
        elif strategy == "noniid":
            ds.partitions = partition_noniid(ds, n_agents)
        else:
            raise ConfigError(f"unknown partition strategy {strategy!r}")
        return make_logistic(ds, reg=cfg.get_float("objective.reg", 0.0))
    raise ConfigError(f"unknown objective kind {kind!r}")


def _build_oracle(cfg):
    mode = cfg.get("oracle.mode", "additive")
    if mode == "additive":
        return StochasticOracle(mode="additive", sigma=cfg.get_float("oracle.sigma", 0.0))
    if mode == "minibatch":
        raw = cfg.get("oracle.batch", "full")
        if raw == "full":
            # full batch is the exact local gradient
            return StochasticOracle(mode="additive", sigma=0.0)
        return StochasticOracle(mode="minibatch", batch=int(raw))
    raise ConfigError(f"unknown oracle mode {mode!r}")


def _build_hyperparams(cfg):
    omega_raw = cfg.get("hp.omega", "0")
    omega = "adaptive" if omega_raw == "adaptive" else float(omega_raw)
    try:
        return HyperParams(
            option=cfg.get("hp.option", "I"),
            alpha=cfg.get_float("hp.alpha"),
            beta=cfg.get_float("hp.beta", 0.0),
            omega=omega,
            iters=cfg.get_int("hp.iters", 100),
            seed=cfg.get_int("hp.seed", 0),
            schedule=cfg.get("hp.schedule", "constant"),
            schedule_b=cfg.get_float("hp.B"),
            adaptive_scope=cfg.get("hp.adaptive_scope", "agent"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_scenario(cfg):
    topo = _build_topology(cfg)
    mixing = metropolis_mixing(topo, laziness=cfg.get_float("topology.laziness", 0.0))
    spectral = spectrum(mixing)
    suite = _build_suite(cfg)
    if suite.n != topo.n:
        raise ConfigError(f"objective has {suite.n} agents but topology has {topo.n}")
    hp = _build_hyperparams(cfg)
    oracle = _build_oracle(cfg)
    if hp.schedule == "sqrt" and hp.option == "I":
        raise ConfigError(
            "the sqrt(B/k) schedule varies the penalty weight of the option-I "
            "objective every iteration; drive schedule runs through option II"
        )
    if hp.option == "I":
        objective = UnifiedObjective(suite, mixing, hp.alpha)
    else:
        objective = UnifiedObjective(suite, mixing, None)
    if suite.kind == "logistic":
        common_optimum(suite)  # ensure f_star is available for F(xbar) reporting
    _, f_star = unified_optimum(objective)
    omega_bound = 1.0 if hp.omega == "adaptive" else float(hp.omega)
    return Scenario(
        cfg=cfg,
        topology=topo,
        mixing=mixing,
        spectral=spectral,
        suite=suite,
        oracle=oracle,
        hp=hp,
        objective=objective,
        f_star=f_star,
        omega_bound=omega_bound,
    )


# ------------------------------------------------------------- bound inputs


def pilot_measurements(scenario, iters=PILOT_ITERS):
    """Measured gradient bound (and noise level, for minibatch oracles).

    Runs the configured dynamics for a pilot horizon and returns
    1.05 x max ||grad objective|| plus, when the oracle is a minibatch, a
    1.05-inflated estimate of the stacked draw deviation.
    """
    hp = scenario.hp
    pilot_hp = HyperParams(
        option=hp.option, alpha=hp.alpha, beta=hp.beta, omega=hp.omega,
        iters=iters, seed=hp.seed, schedule=hp.schedule, schedule_b=hp.schedule_b,
        adaptive_scope=hp.adaptive_scope,
    )
    trace = run(scenario.mixing, scenario.suite, scenario.oracle, pilot_hp,
                scenario.objective, scenario.f_star, record_draws=True)
    if len(trace) == 0:
        raise RuntimeFailure("pilot run produced no finite iterations; cannot measure a gradient bound")
    grad_bound = PILOT_INFLATION * float(np.sqrt(trace.grad_norm_sq.max()))
    sigma = None
    if scenario.oracle.mode == "minibatch" and trace.gradient_draws is not None:
        devs = _minibatch_deviation(scenario, pilot_hp, trace)
        sigma = PILOT_INFLATION * float(np.sqrt(np.mean(devs))) if devs else 0.0
    return grad_bound, sigma


def _minibatch_deviation(scenario, pilot_hp, trace):
    """Replay the pilot to collect ||draw - exact stacked gradient||^2."""
    suite, mixing = scenario.suite, scenario.mixing
    swarm = AgentSwarm.zeros(mixing, suite.n, suite.d)
    devs = []
    for draws in trace.gradient_draws:
        exact = suite.stacked_grad(swarm.x_cur)
        devs.append(float(np.sum((draws - exact) ** 2)))
        step(pilot_hp.option, swarm, mixing, pilot_hp, draws)
    return devs


def bound_inputs_from_scenario(scenario, grad_bound=None, sigma=None):
    """Assemble the bounds-engine inputs, measuring G (and sigma) if needed."""
    cfg, hp, suite = scenario.cfg, scenario.hp, scenario.suite
    declared = cfg.get("objective.grad_bound", "auto")
    measured_sigma = None
    if grad_bound is None:
        if declared != "auto":
            grad_bound = float(declared)
        else:
            grad_bound, measured_sigma = pilot_measurements(scenario)
    if sigma is None:
        if scenario.oracle.mode == "additive":
            # stacked deviation of N independent per-agent draws
            sigma = scenario.oracle.sigma * np.sqrt(suite.n)
        else:
            sigma = measured_sigma if measured_sigma is not None else 0.0
    eta = scenario.eta
    if eta <= 0.0:
        raise RuntimeFailure(
            f"lambda_min of the blended mixing matrix is {eta:.6g} <= 0 "
            "(blend weight omega too small for this topology); no consensus "
            "bound exists for these inputs"
        )
    alpha = hp.alpha if hp.schedule == "constant" else 1.0  # placeholder for sqrt runs
    zero = np.zeros((suite.n, suite.d))
    gap1 = scenario.objective.value(zero) - scenario.f_star
    return bounds_mod.BoundInputs(
        alpha=alpha,
        beta=hp.beta,
        lam=scenario.lam,
        n_agents=suite.n,
        eta=eta,
        grad_bound=grad_bound,
        sigma=float(sigma),
        smooth=scenario.objective.l_prime(scenario.spectral),
        strong_mu=(scenario.objective.mu_prime(scenario.spectral) if suite.mu_m > 0 else None),
        pl_mu=suite.pl_constant,
        gap1=gap1,
    )


def evaluate_bounds(scenario, bi):
    """Every bound applicable to the scenario's objective class, as rows."""
    hp = scenario.hp
    k_max = hp.iters
    ks = np.arange(1, k_max + 1)
    reports = []
    if hp.schedule == "sqrt":
        q = bounds_mod.simpler_q(bi, hp.schedule_b)
        reports.append(("sqrt_step_q", ks, q / np.sqrt(ks)))
        return reports
    reports.append(("consensus", ks, np.full(k_max, bounds_mod.consensus_bound(bi))))
    reports.append(("displacement_sq", ks, np.array([bounds_mod.displacement_bound(bi, k) for k in ks])))
    reports.append(("avg_grad_envelope", ks, bounds_mod.nonconvex_avg_grad_bound(bi, ks)))
    if bi.strong_mu is not None and bi.strong_mu > 0:
        theta = 2.0 * bi.alpha * bi.strong_mu**2 / bi.smooth
        if 0.0 < theta <= 1.0:
            reports.append(("cor1_gap", ks, bounds_mod.strongly_convex_trajectory(bi, k_max).values))
        else:
            log.info("skipping cor1_gap: alpha outside the admissible strongly convex range")
    if bi.pl_mu is not None and bi.pl_mu > 0:
        if 0.0 < 2.0 * bi.alpha * bi.pl_mu <= 1.0:
            reports.append(("thm2_gap", ks, bounds_mod.pl_trajectory(bi, k_max).values))
        else:
            log.info("skipping thm2_gap: alpha outside the admissible PL range")
    return reports


# -------------------------------------------------------------- CSV files


def _fmt(x):
    return repr(float(x))


def trace_metadata(scenario, seed, status):
    return {
        "config_hash": config_hash(scenario.cfg),
        "seed": str(seed),
        "lambda2": _fmt(scenario.spectral.lambda2),
        "lambdaN": _fmt(scenario.spectral.lambda_n),
        "Lambda": _fmt(scenario.lam),
        "eta": _fmt(scenario.eta),
        "status": status,
    }


def write_trace_csv(path, trace, metadata):
    lines = [f"# {k}={v}" for k, v in metadata.items()]
    lines.append(TRACE_HEADER)
    for i in range(len(trace)):
        row = [str(int(trace.k[i]))] + [
            _fmt(getattr(trace, col)[i]) for col in TRACE_COLUMNS
        ]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv_with_metadata(path):
    meta, rows = {}, []
    with open(path, "r", encoding="utf-8") as fh:
        header = None
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append(line.split(","))
    if header is None:
        raise RuntimeFailure(f"{path} has no header row")
    return meta, header, rows


def read_trace_csv(path):
    meta, header, rows = read_csv_with_metadata(path)
    if header != TRACE_HEADER.split(","):
        raise RuntimeFailure(f"{path} is not a trace file (header {header})")
    data = {col: np.array([float(r[i + 1]) for r in rows]) for i, col in enumerate(TRACE_COLUMNS)}
    data["k"] = np.array([int(r[0]) for r in rows])
    return meta, data


def write_bounds_csv(path, reports, bi, cfg_hash):
    lines = [f"# config_hash={cfg_hash}"]
    for key in ("alpha", "beta", "lam", "eta", "n_agents", "grad_bound", "sigma", "smooth", "strong_mu", "pl_mu", "gap1"):
        lines.append(f"# {key}={getattr(bi, key)}")
    lines.append(BOUNDS_HEADER)
    for name, ks, values in reports:
        for k, v in zip(ks, values):
            lines.append(f"{int(k)},{name},{_fmt(v)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_bounds_csv(path):
    meta, header, rows = read_csv_with_metadata(path)
    if header != BOUNDS_HEADER.split(","):
        raise RuntimeFailure(f"{path} is not a bounds file (header {header})")
    out = {}
    for k, name, value in rows:
        out.setdefault(name, []).append((int(k), float(value)))
    for name, pairs in out.items():
        pairs.sort()
        out[name] = np.array([v for _, v in pairs])
    return meta, out


def averaged_trace_arrays(traces):
    length = min(len(t) for t in traces)
    return {
        col: np.mean([getattr(t, col)[:length] for t in traces], axis=0) for col in TRACE_COLUMNS
    }, np.arange(1, length + 1)


# ------------------------------------------------------------ subcommands


def cmd_run(args):
    cfg = load_config(args.config)
    scenario = build_scenario(cfg)
    out_dir = args.out or cfg.get("output.dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    n_seeds = args.seeds or cfg.get_int("output.seeds", 1)
    base_seed = scenario.hp.seed
    hp = scenario.hp

    def run_seed(seed):
        seeded = HyperParams(
            option=hp.option, alpha=hp.alpha, beta=hp.beta, omega=hp.omega,
            iters=hp.iters, seed=seed, schedule=hp.schedule, schedule_b=hp.schedule_b,
            adaptive_scope=hp.adaptive_scope,
        )
        return seed, run(scenario.mixing, scenario.suite, scenario.oracle, seeded,
                         scenario.objective, scenario.f_star)

    seeds = [base_seed + i for i in range(n_seeds)]
    with ThreadPoolExecutor(max_workers=min(8, max(1, n_seeds))) as pool:
        results = list(pool.map(run_seed, seeds))
    traces = []
    failed = None
    for seed, trace in results:
        path = os.path.join(out_dir, f"trace_seed{seed}.csv")
        write_trace_csv(path, trace, trace_metadata(scenario, seed, trace.status))
        log.info("wrote %s (%d rows, %s)", path, len(trace), trace.status)
        traces.append(trace)
        if trace.status != "completed":
            failed = (seed, trace.aborted_at)
    if failed is not None:
        raise RuntimeFailure(f"run aborted (seed {failed[0]}, iteration {failed[1]}); partial trace flagged")
    if n_seeds > 1:
        cols, ks = averaged_trace_arrays(traces)
        path = os.path.join(out_dir, "trace_avg.csv")
        meta = trace_metadata(scenario, "avg", "completed")
        lines = [f"# {k}={v}" for k, v in meta.items()]
        lines.append(TRACE_HEADER)
        for i in range(len(ks)):
            lines.append(",".join([str(int(ks[i]))] + [_fmt(cols[c][i]) for c in TRACE_COLUMNS]))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        log.info("wrote %s", path)
    if cfg.get_bool("output.emit_bounds", False):
        bi = bound_inputs_from_scenario(scenario)
        write_bounds_csv(os.path.join(out_dir, "bounds.csv"), evaluate_bounds(scenario, bi),
                         bi, config_hash(cfg))
    return 0


def cmd_bounds(args):
    cfg = load_config(args.config)
    scenario = build_scenario(cfg)
    out_dir = args.out or cfg.get("output.dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    bi = bound_inputs_from_scenario(scenario)
    reports = evaluate_bounds(scenario, bi)
    path = os.path.join(out_dir, "bounds.csv")
    write_bounds_csv(path, reports, bi, config_hash(cfg))
    log.info("wrote %s (%d bounds)", path, len(reports))
    return 0


def cmd_check(args):
    trace_meta, trace = read_trace_csv(args.trace)
    bounds_meta, bound_rows = read_bounds_csv(args.bounds)
    if trace_meta.get("config_hash") != bounds_meta.get("config_hash"):
        print(
            f"config hash mismatch: trace {trace_meta.get('config_hash')} vs "
            f"bounds {bounds_meta.get('config_hash')}",
            file=sys.stderr,
        )
        return 2
    n_rows = len(trace["k"])
    for name, values in bound_rows.items():
        if name not in BOUND_METRICS:
            print(f"unknown bound name {name!r} in {args.bounds}", file=sys.stderr)
            return 2
        if len(values) != n_rows:
            print(
                f"length mismatch for {name}: bounds file has {len(values)} rows, trace has {n_rows}",
                file=sys.stderr,
            )
            return 2
    for name, values in bound_rows.items():
        column, transform = BOUND_METRICS[name]
        report = check_bound_domination(transform(trace[column]), values, slack=args.slack)
        if not report.passed:
            print(
                f"VIOLATION {name}: k={report.first_violation} metric="
                f"{report.metric_at_violation:.6g} bound={report.bound_at_violation:.6g}",
            )
            return 3
        print(f"ok {name}: {report.checked} rows, worst ratio {report.worst_ratio:.4f}")
    return 0


def _sweep_cell(cfg, overrides):
    items = dict(cfg.items)
    items.update({k: v for k, v in overrides.items() if v is not None})
    items.pop("output.seeds", None)
    cell_cfg = RunConfig(items=items)
    scenario = build_scenario(cell_cfg)
    trace = run(scenario.mixing, scenario.suite, scenario.oracle, scenario.hp,
                scenario.objective, scenario.f_star)
    suite = scenario.suite
    if trace.status != "completed" or len(trace) == 0:
        return {"status": "diverged", "final_gap": float("inf"),
                "final_consensus": float("inf"), "mean_omega": float("nan")}
    xbar = trace.swarm.x_cur.mean(axis=0)
    final_gap = suite.common_value(xbar) - common_optimum(suite)
    return {
        "status": "completed",
        "final_gap": final_gap,
        "final_consensus": float(trace.consensus_err_max[-1]),
        "mean_omega": float(trace.omega_used.mean()),
    }


def cmd_sweep(args):
    cfg = load_config(args.config)
    out_dir = args.out or cfg.get("output.dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    grid_keys = {
        "omega": ("hp.omega", cfg.get("sweep.omega")),
        "beta": ("hp.beta", cfg.get("sweep.beta")),
        "topology": ("topology.kind", cfg.get("sweep.topology")),
        "option": ("hp.option", cfg.get("sweep.option")),
        "seed": ("hp.seed", cfg.get("sweep.seed")),
    }
    axes = []
    for label, (key, raw) in grid_keys.items():
        values = [v.strip() for v in raw.split(",")] if raw else [None]
        axes.append([(label, key, v) for v in values])
    cells = [[]]
    for axis in axes:
        cells = [cell + [choice] for cell in cells for choice in axis]
    if all(v is None for axis in axes for (_, _, v) in axis):
        cells = []

    def run_cell(cell):
        overrides = {key: val for (_, key, val) in cell}
        labels = {label: (val if val is not None else cfg.get(key, "")) for (label, key, val) in cell}
        try:
            result = _sweep_cell(cfg, overrides)
        except Exception as exc:  # cell failures are recorded, never fatal
            log.warning("sweep cell %s failed: %s", labels, exc)
            result = {"status": "error", "final_gap": float("nan"),
                      "final_consensus": float("nan"), "mean_omega": float("nan")}
        return labels, result

    with ThreadPoolExecutor(max_workers=min(8, max(1, len(cells)))) as pool:
        results = list(pool.map(run_cell, cells)) if cells else []
    path = os.path.join(out_dir, "sweep.csv")
    lines = [f"# config_hash={config_hash(cfg)}", SWEEP_HEADER]
    for labels, result in results:
        lines.append(
            ",".join(
                [
                    str(labels["omega"]),
                    str(labels["beta"]),
                    str(labels["topology"]),
                    str(labels["option"]),
                    str(labels["seed"]),
                    result["status"],
                    _fmt(result["final_gap"]),
                    _fmt(result["final_consensus"]),
                    _fmt(result["mean_omega"]),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    log.info("wrote %s (%d cells)", path, len(results))
    return 0


# -------------------------------------------------------------------- CLI


def _nonnegative_float(raw):
    value = float(raw)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {raw}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="dmsgd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute runs and write trace CSVs")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seeds", type=int, default=None, help="override output.seeds")
    p_run.add_argument("--out", default=None, help="override output.dir")
    p_run.set_defaults(func=cmd_run)

    p_bounds = sub.add_parser("bounds", help="evaluate theoretical bounds for a config")
    p_bounds.add_argument("--config", required=True)
    p_bounds.add_argument("--out", default=None)
    p_bounds.set_defaults(func=cmd_bounds)

    p_check = sub.add_parser("check", help="verify a trace against a bounds file")
    p_check.add_argument("--trace", required=True)
    p_check.add_argument("--bounds", required=True)
    p_check.add_argument("--slack", type=_nonnegative_float, default=0.0)
    p_check.set_defaults(func=cmd_check)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid and summarize")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def _setup_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("DMSGD_LOG", "info"), logging.INFO
    )
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
