"""Configuration-driven scenarios: run, persist, re-analyze, reproduce and sweep.

A scenario config is a JSON object::

    {
      "name": "...",
      "system": {"kind": "integrator", "n": 1} | {"kind": "linear", "A": [[...]], "B": [[...]]},
      "controller": {"kind": "example1-baseline" | "example1-improved"}
                    | {"kind": "linear-feedback", "K": [[...]]} | {"kind": "custom", "name": ...},
      "schedule": {"horizon": T, "segments": [...]}
                  | {"generator": {"seed", "n0", "phi", "targets": [{"theta", "eta"}], "p", "q", "r", "switch_prob"}},
      "x0": [...], "horizon": T, "prior": "x0" | "informed" | {"theta": [...], "eta": [...] | "solve"},
      "outputs": {"trace": "trace.csv", "report": "report.json"},
      "analyses": {"regret", "lyapunov", "input_bound", "summability", "certify", "bounds"}
    }

Every analysis reads only the trajectory and the config, so re-running it on
a persisted trace gives the same report.
"""

import copy
import csv
import json
import os
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .closedloop import Trajectory, rollout, stage_losses
from .controllers import make_controller, spectral_envelope
from .costs import (DwellSpec, check_dwell, generate_admissible_schedule, path_length,
                    schedule_from_dict)
from .dynamics import SystemModel, step, steady_pair
from .errors import ConfigError, DwellTooShortError, NotSummableError, ReglabError
from .metrics import (RateCertificate, certify_rate, classify_summability, dynamic_regret,
                      fit_input_bound, lyapunov_tails, prefix_sum_fn, tracking_sums)

SEED_ENV = "REGLAB_SEED"
SUMMABILITY_HORIZONS = (125, 250, 500, 1000, 2000)
TELESCOPE_TOL = 1e-12
LOSS_TOL = 1e-12
BOUND_TOL = 1e-9

CUSTOM_SYSTEMS = {}


def register_system(name, factory):
    """Make ``factory()`` available to configs as ``{"kind": "custom", "name": name}``."""
    CUSTOM_SYSTEMS[name] = factory
    return factory


def _get(data, key, path, default=None, required=False):
    if key in data:
        return data[key]
    if required:
        raise ConfigError(f"{path}/{key}", "missing required key")
    return default


def system_from_dict(data, path="/system"):
    kind = _get(data, "kind", path, required=True)
    try:
        if kind == "integrator":
            return SystemModel.integrator(data.get("n", 1))
        if kind == "linear":
            return SystemModel.linear(_get(data, "A", path, required=True),
                                      _get(data, "B", path, required=True))
        if kind == "custom":
            return CUSTOM_SYSTEMS[_get(data, "name", path, required=True)]()
    except (ValueError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}/kind", f"unknown system kind {kind!r}")


class ScenarioConfig:
    """Validated view of a scenario config mapping (kept as ``raw``)."""

    def __init__(self, raw):
        self.raw = copy.deepcopy(raw)
        raw = self.raw
        self.name = raw.get("name", "scenario")
        self.system = system_from_dict(_get(raw, "system", "", required=True))
        n = self.system.state_dim
        self.horizon = int(_get(raw, "horizon", "", required=True))
        if self.horizon < 0:
            raise ConfigError("/horizon", "must be nonnegative")
        x0 = np.atleast_1d(np.asarray(_get(raw, "x0", "", required=True), dtype=float))
        if x0.shape != (n,):
            raise ConfigError("/x0", f"expected {n} entries, got {x0.shape[0]}")
        self.x0 = x0
        cspec = _get(raw, "controller", "", required=True)
        try:
            make_controller(cspec)
        except (KeyError, ValueError) as exc:
            raise ConfigError("/controller", str(exc)) from exc
        self.controller_spec = cspec
        self.schedule, self.dwell = self._schedule(_get(raw, "schedule", "", required=True))
        if self.schedule.horizon < self.horizon:
            raise ConfigError("/schedule/horizon", f"covers {self.schedule.horizon} < horizon {self.horizon}")
        self.prior = self._prior(raw.get("prior", "x0"))
        self.outputs = raw.get("outputs", {})
        self.analyses = raw.get("analyses", {"regret": True})

    @classmethod
    def from_file(cls, path):
        """Load a config; relative output paths resolve against its directory."""
        with open(path) as fh:
            cfg = cls(json.load(fh))
        base = Path(path).parent
        cfg.outputs = {k: str(base / v) for k, v in cfg.outputs.items()}
        for key, out in cfg.outputs.items():
            if Path(out).resolve() == Path(path).resolve():
                raise ConfigError(f"/outputs/{key}", "would overwrite the config file")
        return cfg

    def controller(self):
        return make_controller(self.controller_spec)

    def _schedule(self, data):
        if "generator" in data:
            g = data["generator"]
            path = "/schedule/generator"
            seed = int(os.environ.get(SEED_ENV, _get(g, "seed", path, required=True)))
            n0, phi = _get(g, "n0", path, required=True), _get(g, "phi", path, required=True)
            try:
                dwell = DwellSpec(n0, phi)
            except ValueError as exc:
                raise ConfigError(path, str(exc)) from exc
            targets = _get(g, "targets", path, required=True)
            pool = []
            for i, tgt in enumerate(targets):
                try:
                    pool.append(steady_pair(self.system, tgt["theta"], tgt.get("eta", "solve")))
                except (ValueError, KeyError) as exc:
                    raise ConfigError(f"{path}/targets/{i}", str(exc)) from exc
            schedule = generate_admissible_schedule(
                seed, dwell, int(data.get("horizon", self.horizon)), pool, g.get("p", 1),
                g.get("q", 1.0), g.get("r", 1.0), g.get("switch_prob", 0.3))
            return schedule, dwell
        try:
            return schedule_from_dict({"horizon": self.horizon, **data}, self.system), None
        except ReglabError as exc:
            raise ConfigError("/schedule", str(exc)) from exc

    def _prior(self, prior):
        if isinstance(prior, str):
            if prior not in ("x0", "informed"):
                raise ConfigError("/prior", f"unknown prior {prior!r}")
            return prior
        try:
            return steady_pair(self.system, prior["theta"], prior.get("eta", "solve"))
        except (ValueError, KeyError) as exc:
            raise ConfigError("/prior", str(exc)) from exc


# -- trace persistence ------------------------------------------------------

def _fmt(v):
    return format(float(v), ".17g")


def trace_header(n, m):
    return (["t"] + [f"x[{i}]" for i in range(n)] + [f"u[{i}]" for i in range(m)]
            + [f"theta[{i}]" for i in range(n)] + [f"eta[{i}]" for i in range(m)]
            + ["loss", "regret_cum"])


def write_trace(path, traj):
    n, m = traj.x.shape[1], traj.u.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(n, m))
        for t in range(traj.T + 1):
            w.writerow([t] + [_fmt(v) for v in traj.x[t]] + [_fmt(v) for v in traj.u[t]]
                       + [_fmt(v) for v in traj.theta[t]] + [_fmt(v) for v in traj.eta[t]]
                       + [_fmt(traj.loss[t]), _fmt(traj.regret_cum[t])])
        last = traj.T + 1
        w.writerow([last] + [_fmt(v) for v in traj.x[last]] + [""] * (2 * m + n + 2))


def read_trace(path, schedule):
    """Load a trace written by :func:`write_trace`; segment indices come from ``schedule``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(h.startswith("x[") for h in header)
    m = sum(h.startswith("u[") for h in header)
    full = np.array([[float(v) for v in r] for r in body[:-1]])
    T = len(full) - 1
    x = np.vstack([full[:, 1:1 + n], np.array([[float(v) for v in body[-1][1:1 + n]]])])
    u = full[:, 1 + n:1 + n + m]
    theta = full[:, 1 + n + m:1 + 2 * n + m]
    eta = full[:, 1 + 2 * n + m:1 + 2 * n + 2 * m]
    idx, _, _ = schedule.expand(T)
    return Trajectory(x, u, theta, eta, idx, full[:, -2], full[:, -1])


# -- analyses -----------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _opt(analyses, key, default=None):
    val = analyses.get(key, default)
    if val is True:
        return {}
    return val if val else None


def _rate_certificate(cfg, opts):
    rate = opts.get("rate", "declared")
    controller = cfg.controller()
    if isinstance(rate, dict):
        return RateCertificate.from_family(rate["family"], rate.get("k", 1.0), lam=rate.get("lam"))
    if rate == "certify":
        return _certify(cfg, {})
    declared = controller.declared_rate or {}
    family = declared.get("family")
    if family == "spectral":
        c, lam = spectral_envelope(controller.closed_loop_matrix(cfg.system), opts.get("t_max", 200))
        return RateCertificate.from_family("geometric", c, lam=lam)
    if family in ("inverse", "inverse_square"):
        return RateCertificate.from_family(family, declared.get("k", 1.0))
    return _certify(cfg, {})


def _certify(cfg, opts):
    seg = cfg.schedule.segments[0]
    grid = opts.get("grid")
    if grid is None:
        grid = [seg.theta + s * np.eye(cfg.system.state_dim)[0] for s in (0.5, 1.0, 2.0)]
    return certify_rate(cfg.system, cfg.controller(), seg, grid, opts.get("t_max", 200),
                        prior=cfg.prior)


def regret_bound(traj, schedule, dwell, cert, input_bound, cap=bnd.DEFAULT_CAP, radius=None):
    """Regret bound for ``traj`` from a rate certificate and input-bound gains.

    ``dwell`` is the interval-count spec the schedule satisfies. Windows
    opened at a switch count that switch, so the pairwise constants use one
    fewer chattering switch. Raises :class:`NotSummableError` or
    :class:`DwellTooShortError` when no finite bound follows.
    Returns ``(BoundReport, DeltaBar)``.
    """
    n0 = max(dwell.n0 - 1, 0)
    M = bnd.sigma_sum(cert)
    db = bnd.delta_bar(cert.k, cert, n0, dwell.phi, cap, strict=True)
    P = bnd.lemma2_P(cert.k, db.delta, n0)
    k_u, k_zeta = input_bound
    T = traj.T
    if radius is None:
        dev = np.hstack([traj.u - traj.eta, traj.x[:T + 1] - traj.theta])
        radius = max(float(np.max(np.linalg.norm(dev, axis=1))), 1e-300)
    l = schedule.lipschitz(radius)
    pl = path_length(schedule, T)
    rep = bnd.theorem2_bound(l, cert.k, M, db.delta, P, n0, k_u, k_zeta, traj.x[0], traj.x[1],
                             schedule.segments[0].theta, pl.theta, pl.eta)
    return rep, db


def _bounds(cfg, traj, opts, report):
    schedule = cfg.schedule
    dwell = cfg.dwell
    if "n0" in opts or "phi" in opts:
        dwell = DwellSpec(opts.get("n0", dwell.n0 if dwell else 2), opts.get("phi", dwell.phi if dwell else 1.0))
    if dwell is None:
        # with more allowed switches than the schedule holds, any phi is admissible
        dwell = DwellSpec(len(schedule) + 1, float(schedule.horizon + 1))
    report["checks"]["schedule_admissible"] = check_dwell(schedule, dwell).ok
    out = {"n0": dwell.n0, "phi": dwell.phi, "n0_pairwise": max(dwell.n0 - 1, 0)}
    cert = _rate_certificate(cfg, opts)
    out["rate"] = cert.summary()
    if opts.get("input_bound", "declared") == "fit":
        gains = fit_input_bound(traj, schedule)
    else:
        gains = cfg.controller().declared_input_bound or fit_input_bound(traj, schedule)
    try:
        rep, db = regret_bound(traj, schedule, dwell, cert, gains, opts.get("cap", bnd.DEFAULT_CAP),
                               opts.get("radius"))
    except (NotSummableError, DwellTooShortError) as exc:
        out["error"] = str(exc)
        return out
    out.update(rep.to_dict())
    out["exhaustive"] = db.exhaustive
    report["checks"]["regret_within_bound"] = report["regret"] <= rep.total + BOUND_TOL
    return out


def analyze(cfg, traj):
    """Report for ``traj`` under ``cfg``; a pure function of both."""
    schedule, system, T = cfg.schedule, cfg.system, traj.T
    analyses = cfg.analyses
    report = {"name": cfg.name, "horizon": T, "checks": {}}
    checks = report["checks"]

    checks["dynamics_consistent"] = all(
        np.array_equal(step(system, traj.x[t], traj.u[t]), traj.x[t + 1]) for t in range(T + 1))
    recomputed = stage_losses(schedule, traj.x[:T + 1], traj.u, schedule.expand(T)[0])
    checks["loss_consistent"] = bool(np.array_equal(recomputed, traj.loss))
    checks["loss_nonnegative"] = bool(np.min(traj.loss) >= -LOSS_TOL)
    checks["regret_monotone"] = bool(np.all(np.diff(traj.regret_cum) >= 0))

    report["regret"] = dynamic_regret(traj, schedule, T)
    pl = path_length(schedule, T)
    report["path_length"] = {"total": pl.total, "theta": pl.theta, "eta": pl.eta}
    sum_x, sum_u = tracking_sums(traj, schedule, T)
    report["tracking_sums"] = {"x": sum_x, "u": sum_u}
    try:
        l_glob = schedule.lipschitz()
        checks["regret_within_lipschitz_sums"] = report["regret"] <= l_glob * (sum_x + sum_u) + BOUND_TOL
    except ValueError:
        pass

    if analyses.get("input_bound", True):
        try:
            fit = fit_input_bound(traj, schedule)
            report["input_bound"] = {"k_u": fit.k_u, "k_zeta": fit.k_zeta}
        except ReglabError as exc:
            report["input_bound"] = {"error": str(exc)}
            checks["input_bound_finite"] = False

    if analyses.get("lyapunov", True) and schedule.is_constant:
        tails = lyapunov_tails(traj, schedule, T)
        resid = tails[1:] - tails[:-1] + traj.loss
        report["lyapunov"] = {"V0": float(tails[0]), "max_telescoping_residual": float(np.max(np.abs(resid)))}
        checks["telescoping"] = bool(np.max(np.abs(resid)) <= TELESCOPE_TOL)
        checks["lyapunov_nonnegative"] = bool(np.min(tails) >= 0)

    opts = _opt(analyses, "summability")
    if opts is not None:
        horizons = [h for h in opts.get("horizons", SUMMABILITY_HORIZONS) if h <= T]
        if len(horizons) >= 4:
            series = traj.loss if opts.get("series", "regret") == "regret" else \
                np.linalg.norm(traj.x[:T + 1] - traj.theta, axis=1)
            v = classify_summability(prefix_sum_fn(series), horizons)
            report["summability"] = {"verdict": v.verdict, "D": v.D, "horizons": list(v.horizons),
                                     "partial_sums": list(v.partial_sums),
                                     "growth_per_doubling": v.growth_per_doubling}
            if "expect" in opts:
                checks["summability_verdict"] = v.verdict == opts["expect"]

    opts = _opt(analyses, "certify")
    if opts is not None:
        cert = _certify(cfg, opts)
        report["rate_certificate"] = {**cert.summary(), "sigma_head": cert.sigma[:6].tolist()}

    opts = _opt(analyses, "bounds")
    if opts is not None:
        report["bounds"] = _bounds(cfg, traj, opts, report)
        if "error" in report["bounds"] and opts.get("expect_bound", True):
            checks["bound_available"] = False

    report["failed_checks"] = [k for k, ok in checks.items() if not ok]
    report["passed"] = not report["failed_checks"]
    return _jsonable(report)


def report_json(report):
    return json.dumps(report, indent=2, allow_nan=True) + "\n"


def simulate(cfg):
    return rollout(cfg.system, cfg.controller(), cfg.schedule, cfg.x0, cfg.horizon, prior=cfg.prior)


def run_scenario(config, trace_path=None, report_path=None):
    """Roll out, analyze and persist one scenario. Returns ``(report, trajectory)``."""
    cfg = config if isinstance(config, ScenarioConfig) else ScenarioConfig(config)
    traj = simulate(cfg)
    trace_path = trace_path or cfg.outputs.get("trace")
    report_path = report_path or cfg.outputs.get("report")
    if trace_path:
        Path(trace_path).parent.mkdir(parents=True, exist_ok=True)
        write_trace(trace_path, traj)
    report = analyze(cfg, traj)
    if report_path:
        Path(report_path).parent.mkdir(parents=True, exist_ok=True)
        Path(report_path).write_text(report_json(report))
    return report, traj


def reanalyze(config, trace_path):
    cfg = config if isinstance(config, ScenarioConfig) else ScenarioConfig(config)
    return analyze(cfg, read_trace(trace_path, cfg.schedule))


# -- built-in demonstrations --------------------------------------------------

DEFAULT_SEEDS = tuple(range(10))


def example_config(name, T=1000, seed=None):
    """Scenario config for one of the built-in demonstrations."""
    p1 = {"p": 1, "q": 1.0, "r": 1.0}
    integrator = {"kind": "integrator", "n": 1}
    if name == "example1-baseline":
        return {"name": name, "system": integrator, "controller": {"kind": name},
                "schedule": {"segments": [{"start": 0, "theta": [0.0], "eta": [0.0], **p1}]},
                "x0": [1.0], "horizon": T,
                "analyses": {"summability": {"expect": "diverging"},
                             "bounds": {"expect_bound": False}}}
    if name == "example1-improved":
        if seed is None:
            return {"name": name, "system": integrator, "controller": {"kind": name},
                    "schedule": {"segments": [{"start": 0, "theta": [0.0], "eta": [0.0], **p1}]},
                    "x0": [1.0], "horizon": T,
                    "analyses": {"summability": {"expect": "bounded"}, "certify": True, "bounds": True}}
        return {"name": f"{name}-seed{seed}", "system": integrator, "controller": {"kind": name},
                "schedule": {"generator": {"seed": seed, "n0": 2, "phi": 4.0, "switch_prob": 0.2,
                                           "targets": [{"theta": [v], "eta": [0.0]} for v in (-1.0, 0.0, 0.5, 2.0)],
                                           **p1}},
                "x0": [1.0], "horizon": T, "analyses": {"bounds": True}}
    if name == "example2":
        system = {"kind": "linear", "A": [[0.5]], "B": [[1.0]]}
        ctrl = {"kind": "linear-feedback", "K": [[-0.3]]}
        if seed is None:
            return {"name": name, "system": system, "controller": ctrl,
                    "schedule": {"segments": [{"start": 0, "theta": [0.0], "eta": "solve", **p1}]},
                    "x0": [1.0], "horizon": T, "prior": "informed",
                    "analyses": {"certify": True, "bounds": True}}
        return {"name": f"{name}-seed{seed}", "system": system, "controller": ctrl,
                "schedule": {"generator": {"seed": seed, "n0": 2, "phi": 1.0, "switch_prob": 0.3,
                                           "targets": [{"theta": [v]} for v in (-2.0, 0.0, 1.0, 3.0)],
                                           **p1}},
                "x0": [1.0], "horizon": T, "analyses": {"bounds": True}}
    raise ValueError(f"unknown example {name!r}")


def reproduce(name, outdir=None, T=1000, seeds=DEFAULT_SEEDS):
    """Run a built-in demonstration and return ``{"name", "reports", "summary", "passed"}``."""
    outdir = Path(outdir) if outdir else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)

    def run(cfg):
        tag = cfg["name"]
        paths = (outdir / f"{tag}.csv", outdir / f"{tag}.json") if outdir else (None, None)
        return run_scenario(cfg, *paths)[0]

    summary = {}
    if name == "example1-baseline":
        horizon = max(2 * T, SUMMABILITY_HORIZONS[-1])
        report, traj = run_scenario(example_config(name, horizon))
        if outdir:
            write_trace(outdir / f"{name}.csv", traj)
            (outdir / f"{name}.json").write_text(report_json(report))
        reports = [report]
        summary["regret_T"] = float(traj.regret_cum[T])
        summary["regret_2T"] = float(traj.regret_cum[2 * T])
        summary["doubling_increment"] = summary["regret_2T"] - summary["regret_T"]
        summary["verdict"] = report.get("summability", {}).get("verdict")
    elif name in ("example1-improved", "example2"):
        reports = [run(example_config(name, T))]
        reports += [run(example_config(name, T, seed)) for seed in seeds]
        margins = [r["bounds"]["total"] - r["regret"] for r in reports if "total" in r.get("bounds", {})]
        summary["min_margin"] = min(margins) if margins else None
        summary["violations"] = sum(m < -BOUND_TOL for m in margins)
        if name == "example2":
            A_cl = np.array([[0.5 - 0.3]])
            c, lam = spectral_envelope(A_cl)
            summary.update(c=c, lam=lam, min_dwell=bnd.min_dwell_exponential(c, lam, 1.0))
    else:
        raise ValueError(f"unknown example {name!r}")
    passed = all(r["passed"] for r in reports)
    return _jsonable({"name": name, "reports": reports, "summary": summary, "passed": passed})


# -- sweeps -------------------------------------------------------------------------

def _split_path(path):
    parts = path.strip("/").split("/") if path.startswith("/") else path.split(".")
    return [int(p) if p.isdigit() else p for p in parts]


def set_path(data, path, value):
    """Set ``value`` at a dotted or JSON-pointer path inside nested dicts/lists."""
    keys = _split_path(path)
    node = data
    for key in keys[:-1]:
        try:
            if node[key] is True:
                node[key] = {}
            node = node[key]
        except (KeyError, IndexError, TypeError) as exc:
            raise ConfigError("/" + "/".join(map(str, keys)), "path does not resolve") from exc
    node[keys[-1]] = value


def sweep(base, axis, values, outdir=None, aggregate_path=None):
    """One scenario per value of ``axis``; failures are recorded per row."""
    base = base.raw if isinstance(base, ScenarioConfig) else base
    outdir = Path(outdir) if outdir else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
    reports, rows = [], []
    for i, value in enumerate(values):
        cfg = copy.deepcopy(base)
        cfg.pop("outputs", None)
        row = {"value": value, "regret": None, "bound": None, "margin": None, "error": ""}
        try:
            set_path(cfg, axis, value)
            paths = (outdir / f"row{i}.csv", outdir / f"row{i}.json") if outdir else (None, None)
            report, _ = run_scenario(cfg, *paths)
            reports.append(report)
            row["regret"] = report["regret"]
            total = report.get("bounds", {}).get("total")
            if total is not None:
                row["bound"] = total
                row["margin"] = total - report["regret"]
        except Exception as exc:  # a failed row must not stop the sweep
            reports.append(None)
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    if aggregate_path or outdir:
        path = aggregate_path or outdir / "aggregate.csv"
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["value", "regret", "bound", "margin", "error"])
            w.writeheader()
            for row in rows:
                w.writerow({k: (_fmt(v) if isinstance(v, float) else
                                json.dumps(v) if k == "value" else ("" if v is None else v))
                            for k, v in row.items()})
    return reports, rows
