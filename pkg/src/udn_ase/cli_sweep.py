"""Configuration-driven density sweeps over the analytic and Monte Carlo engines.

A config is a JSON document with sections ``model``, ``fading``, ``antenna``,
``quadrature``, ``sim`` and ``sweep``. Every dB quantity is converted to
linear units here; the engines never see dB.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path as FsPath

import numpy as np
import scipy

from .analytic_engine import (AnalysisConfig, Tolerances, area_spectral_efficiency,
                              coverage_probability, db_to_linear, dbm_to_watt)
from .antenna_pattern import AntennaSpec, downtilt_for_density, total_gain
from .asymptotics import CrashDiagnostics, classify_regimes
from .channel_models import model_from_dict, validate
from .fading import FadingModel
from .montecarlo import SimConfig, estimate_ase, estimate_coverage, simulate_sinr

__version__ = "0.1.0"

ENGINES = ("analytic", "montecarlo", "both")
CSV_COLUMNS = ["lambda_bs_per_km2", "L_m", "gamma_db", "p_cov_analytic", "ase_analytic_bps_hz_km2",
               "p_cov_mc", "p_cov_mc_ci", "ase_mc", "ase_mc_ci", "engine", "seed"]
THREADS_ENV = "UDN_ASE_THREADS"

EXIT_PASS, EXIT_TOLERANCE, EXIT_CONVERGENCE = 0, 2, 3
# analytic points whose own error estimate exceeds this are not trusted in verify
VERIFY_MAX_ANALYTIC_ERROR = 1e-3
VERIFY_MAX_REL_TOL = 1e-3


def _grid(g) -> list[float]:
    if isinstance(g, dict):
        lo, hi = math.log10(g["start"]), math.log10(g["stop"])
        n = int(round((hi - lo) * g.get("per_decade", 10))) + 1
        return [float(x) for x in np.logspace(lo, hi, n)]
    return [float(x) for x in g]


@dataclass
class SweepSpec:
    scenario: str
    model: dict
    lambdas: list
    L_m: list = field(default_factory=lambda: [8.5])
    gamma_db: float = 0.0
    gamma0_db: float | None = None
    engine: str = "analytic"
    fading: dict = field(default_factory=dict)
    antenna: dict | None = None
    quadrature: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    link: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None
    verify_pcov_tol: float = 0.02
    verify_ase_rel_tol: float = 0.10

    def __post_init__(self):
        self.lambdas = _grid(self.lambdas)
        if not self.lambdas:
            raise ValueError("density grid is empty")
        lam = np.asarray(self.lambdas)
        if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise ValueError("density grid must be positive and strictly ascending")
        if not self.L_m:
            raise ValueError("need at least one height difference L")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.antenna_spec is not None and self.engine != "montecarlo":
            raise ValueError("the antenna pattern is only supported by the montecarlo engine")
        for L in self.L_m:
            report = validate(self.path_loss(L), points_per_decade=200)
            if not report.prob_range_ok:
                raise ValueError(f"invalid model at L = {L} m")

    @classmethod
    def from_config(cls, cfg: dict, **overrides) -> "SweepSpec":
        sw = dict(cfg.get("sweep", {}))
        sw.update({k: v for k, v in overrides.items() if v is not None})
        if "lambda" in sw:
            sw["lambdas"] = sw.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(sw) - known
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        return cls(model=cfg["model"], fading=cfg.get("fading", {}), antenna=cfg.get("antenna"),
                   quadrature=cfg.get("quadrature", {}), sim=cfg.get("sim", {}),
                   link=cfg.get("link", {}), **sw)

    def to_config(self) -> dict:
        sweep = {k: v for k, v in asdict(self).items()
                 if k not in ("model", "fading", "antenna", "quadrature", "sim", "link", "out_dir")}
        return {"model": self.model, "fading": self.fading, "antenna": self.antenna,
                "quadrature": self.quadrature, "sim": self.sim, "link": self.link, "sweep": sweep}

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_config(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    # -- conversions into engine objects (linear units) --------------------------

    @property
    def gamma(self) -> float:
        return db_to_linear(self.gamma_db)

    @property
    def gamma0(self) -> float:
        return db_to_linear(self.gamma_db if self.gamma0_db is None else self.gamma0_db)

    @property
    def antenna_spec(self) -> AntennaSpec | None:
        return AntennaSpec.from_dict(self.antenna)

    def path_loss(self, L_m: float):
        d = dict(self.model)
        d["L_m"] = L_m
        return model_from_dict(d)

    def analysis(self, L_m: float) -> AnalysisConfig:
        return AnalysisConfig(
            self.path_loss(L_m),
            tx_power=dbm_to_watt(self.link.get("tx_power_dbm", 24.0)),
            noise_power=dbm_to_watt(self.link.get("noise_power_dbm", -95.0)),
            fading=FadingModel.from_dict(self.fading),
            quadrature=Tolerances.from_dict(self.quadrature),
        )

    def sim_config(self, L_m: float, lam: float) -> SimConfig:
        s = self.sim
        return SimConfig(self.analysis(L_m), lam, trials=int(s.get("trials", 10_000)), seed=self.seed,
                         antenna=self.antenna_spec, sim_radius=s.get("sim_radius_km"),
                         min_expected_bs=s.get("min_expected_bs", 100.0),
                         gamma_cap_db=s.get("gamma_cap_db", 60.0))

    @property
    def mc_max_lambda(self) -> float:
        return float(self.sim.get("mc_max_lambda", 1e4))


@dataclass
class ResultRow:
    lam: float
    L_m: float
    gamma_db: float
    engine: str
    seed: int
    p_cov_analytic: float | None = None
    ase_analytic: float | None = None
    analytic_error: float | None = None
    analytic_converged: bool | None = None
    p_cov_mc: float | None = None
    p_cov_mc_ci: float | None = None
    ase_mc: float | None = None
    ase_mc_ci: float | None = None
    resampled_empty: int | None = None
    error: str | None = None
    wall_time: float = field(default=0.0, compare=False)

    def csv_fields(self) -> list:
        return [self.lam, self.L_m, self.gamma_db, self.p_cov_analytic, self.ase_analytic,
                self.p_cov_mc, self.p_cov_mc_ci, self.ase_mc, self.ase_mc_ci, self.engine, self.seed]


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list
    diagnostics: dict


def _run_point(args) -> ResultRow:
    spec, L_m, lam = args
    t0 = time.perf_counter()
    row = ResultRow(lam, L_m, spec.gamma_db, spec.engine, spec.seed)
    errors = []
    if spec.engine in ("analytic", "both"):
        try:
            cfg = spec.analysis(L_m)
            cov = coverage_probability(cfg, lam, spec.gamma)
            ase = area_spectral_efficiency(cfg, lam, spec.gamma0)
            row.p_cov_analytic, row.ase_analytic = cov.p_cov, ase.ase
            row.analytic_error = cov.error
            row.analytic_converged = bool(cov.converged and ase.converged)
        except Exception as exc:  # recorded in-row, the sweep continues
            errors.append(f"analytic: {type(exc).__name__}: {exc}")
    if spec.engine in ("montecarlo", "both"):
        if lam > spec.mc_max_lambda:
            errors.append(f"montecarlo: skipped above mc_max_lambda={spec.mc_max_lambda:g}")
        else:
            try:
                sim = spec.sim_config(L_m, lam)
                sample = simulate_sinr(sim)
                cov = estimate_coverage(sim, spec.gamma, sample)
                ase = estimate_ase(sim, spec.gamma0, sample)
                row.p_cov_mc, row.p_cov_mc_ci = cov.mean, cov.ci_half_width
                row.ase_mc, row.ase_mc_ci = ase.mean, ase.ci_half_width
                row.resampled_empty = sample.resampled_empty
            except Exception as exc:
                errors.append(f"montecarlo: {type(exc).__name__}: {exc}")
    row.error = "; ".join(errors) or None
    row.wall_time = time.perf_counter() - t0
    return row


def _default_threads() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _diagnose(lams, ases) -> CrashDiagnostics | None:
    pts = [(l, a) for l, a in zip(lams, ases) if a is not None and math.isfinite(a)]
    if len(pts) < 5:
        return None
    decades = math.log10(pts[-1][0] / pts[0][0])
    if decades > 0 and (len(pts) - 1) / decades < 4:
        return None
    return classify_regimes(pts)


def run_sweep(spec: SweepSpec, threads: int | None = None) -> SweepResult:
    """Evaluate every (L, lambda) pair; rows follow grid order for any thread count."""
    threads = _default_threads() if threads is None else threads
    jobs = [(spec, L, lam) for L in spec.L_m for lam in spec.lambdas]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(threads) as ex:
            rows = list(ex.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    diagnostics = {}
    for L in spec.L_m:
        sub = [r for r in rows if r.L_m == L]
        lams = [r.lam for r in sub]
        diag = {}
        for key, attr in (("analytic", "ase_analytic"), ("montecarlo", "ase_mc")):
            d = _diagnose(lams, [getattr(r, attr) for r in sub])
            if d is not None:
                diag[key] = d.to_dict()
        diagnostics[f"{L:g}"] = diag
    return SweepResult(spec, rows, diagnostics)


# -- output ----------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metadata(spec: SweepSpec) -> dict:
    return {"scenario": spec.scenario, "spec_hash": spec.spec_hash(),
            "versions": {"artifact": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()}}


def write_table(result: SweepResult, path, fmt: str = "csv") -> FsPath:
    """Write rows as CSV (fixed columns) or JSON (rows, metadata and diagnostics)."""
    if not result.rows:
        raise ValueError("no rows to write")
    path = FsPath(path)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in result.rows:
            w.writerow([_fmt(v) for v in r.csv_fields()])
        text = buf.getvalue()
    elif fmt == "json":
        rows = []
        for r in result.rows:
            d = asdict(r)
            d.pop("wall_time")
            rows.append(d)
        doc = {"metadata": metadata(result.spec), "config": result.spec.to_config(),
               "rows": rows, "diagnostics": result.diagnostics}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    path.write_text(text)
    return path


def read_json_rows(path) -> list[ResultRow]:
    doc = json.loads(FsPath(path).read_text())
    return [ResultRow(**d) for d in doc["rows"]]


# -- analytic vs Monte Carlo comparison --------------------------------------------

@dataclass
class VerifyReport:
    points: list
    passed: bool
    converged: bool

    @property
    def exit_code(self) -> int:
        if not self.converged:
            return EXIT_CONVERGENCE
        return EXIT_PASS if self.passed else EXIT_TOLERANCE

    def to_text(self) -> str:
        lines = [f"{'lambda':>10} {'L_m':>6} {'dp_cov':>9} {'tol':>7} {'dASE':>10} {'tol':>10}  status"]
        for p in self.points:
            if p.get("error"):
                lines.append(f"{p['lambda']:>10.4g} {p['L_m']:>6g}  ERROR {p['error']}")
                continue
            lines.append(f"{p['lambda']:>10.4g} {p['L_m']:>6g} {p['dp_cov']:>9.4f} {p['pcov_tol']:>7.4f} "
                         f"{p['dase']:>10.4g} {p['ase_tol']:>10.4g}  {p['status']}")
        verdict = {EXIT_PASS: "PASS", EXIT_TOLERANCE: "FAIL (tolerance)",
                   EXIT_CONVERGENCE: "FAIL (analytic convergence degraded)"}[self.exit_code]
        lines.append(verdict)
        return "\n".join(lines)


def _tolerances_loose(spec: SweepSpec) -> bool:
    t = Tolerances.from_dict(spec.quadrature)
    rels = [t.inner.rel_tol, t.outer.rel_tol, t.ase.rel_tol, t.rician_outer.rel_tol]
    return max(rels) > VERIFY_MAX_REL_TOL


def compare_rows(spec: SweepSpec, rows) -> VerifyReport:
    points, passed, converged = [], True, not _tolerances_loose(spec)
    for r in rows:
        p = {"lambda": r.lam, "L_m": r.L_m}
        if r.p_cov_analytic is None or r.p_cov_mc is None:
            p["error"] = r.error or "missing engine output"
            passed = False
            points.append(p)
            continue
        dp = abs(r.p_cov_analytic - r.p_cov_mc)
        ptol = max(spec.verify_pcov_tol, 3.0 * r.p_cov_mc_ci)
        da = abs(r.ase_analytic - r.ase_mc)
        atol = max(spec.verify_ase_rel_tol * abs(r.ase_analytic), 3.0 * r.ase_mc_ci)
        ok = dp <= ptol and da <= atol
        trusted = bool(r.analytic_converged) and (r.analytic_error or 0.0) <= VERIFY_MAX_ANALYTIC_ERROR
        p.update(dp_cov=dp, pcov_tol=ptol, dase=da, ase_tol=atol,
                 status=("ok" if ok else "FAIL") + ("" if trusted else " (unconverged)"))
        passed &= ok
        converged &= trusted
        points.append(p)
    return VerifyReport(points, passed, converged)


def verify(spec: SweepSpec, threads: int | None = None) -> VerifyReport:
    """Run both engines and check |analytic - MC| against max(tol, 3 CI)."""
    if spec.engine != "both":
        spec = replace(spec, engine="both")
    return compare_rows(spec, run_sweep(spec, threads).rows)


# -- scenarios and CLI -------------------------------------------------------------

def scenario_names() -> list[str]:
    files = resources.files("udn_ase").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_config(name_or_path: str) -> dict:
    p = FsPath(name_or_path)
    if p.exists():
        return json.loads(p.read_text())
    if name_or_path in scenario_names():
        res = resources.files("udn_ase").joinpath("scenarios", name_or_path + ".json")
        return json.loads(res.read_text())
    raise FileNotFoundError(f"no config file or bundled scenario named {name_or_path!r}")


def _spec_from_args(args) -> SweepSpec:
    cfg = load_config(args.config)
    over = {"seed": args.seed, "engine": getattr(args, "engine", None)}
    if getattr(args, "engine", None) == "mc":
        over["engine"] = "montecarlo"
    if getattr(args, "trials", None):
        cfg.setdefault("sim", {})["trials"] = args.trials
    if getattr(args, "mc_max_lambda", None):
        cfg.setdefault("sim", {})["mc_max_lambda"] = args.mc_max_lambda
    return SweepSpec.from_config(cfg, **over)


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    out = FsPath(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    result = run_sweep(spec, args.threads)
    write_table(result, out / f"{spec.scenario}.csv", "csv")
    write_table(result, out / f"{spec.scenario}.json", "json")
    failed = [r for r in result.rows if r.error]
    for r in failed:
        print(f"lambda={r.lam:g} L={r.L_m:g} m: {r.error}", file=sys.stderr)
    print(f"wrote {len(result.rows)} rows to {out}")
    return EXIT_PASS


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    over = {"seed": args.seed, "engine": "both"}
    if args.trials:
        cfg.setdefault("sim", {})["trials"] = args.trials
    spec = SweepSpec.from_config(cfg, **over)
    report = verify(spec, args.threads)
    print(report.to_text())
    return report.exit_code


def _cmd_scenarios(args) -> int:
    for name in scenario_names():
        cfg = load_config(name)
        print(f"{name:28s} {cfg.get('description', '')}")
    return EXIT_PASS


def _cmd_antenna_table(args) -> int:
    spec = AntennaSpec()
    L = args.L_m * 1e-3
    theta = np.arange(-90.0, 90.01, args.step)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["lambda_bs_per_km2", "theta_tilt_deg", "theta_deg", "gain_db"])
    for lam in args.lambdas:
        tilt = downtilt_for_density(lam, L, spec)
        for th, g in zip(theta, total_gain(0.0, theta, tilt, spec)):
            w.writerow([repr(float(lam)), repr(tilt), repr(float(th)), repr(float(g))])
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="udn-ase", description="Coverage and ASE sweeps for dense cellular networks")
    sub = ap.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run a density sweep and write CSV and JSON tables")
    sw.add_argument("--config", required=True, help="config JSON path or bundled scenario name")
    sw.add_argument("--engine", choices=["analytic", "mc", "montecarlo", "both"])
    sw.add_argument("--out", help="output directory")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--threads", type=int, default=None)
    sw.add_argument("--trials", type=int)
    sw.add_argument("--mc-max-lambda", type=float, help="override the Monte Carlo density cap")
    sw.set_defaults(func=_cmd_sweep)

    vf = sub.add_parser("verify", help="compare analytic and Monte Carlo results")
    vf.add_argument("--config", required=True)
    vf.add_argument("--seed", type=int)
    vf.add_argument("--threads", type=int, default=None)
    vf.add_argument("--trials", type=int)
    vf.set_defaults(func=_cmd_verify)

    sc = sub.add_parser("scenarios", help="bundled scenarios")
    sc.add_argument("action", choices=["list"])
    sc.set_defaults(func=_cmd_scenarios)

    at = sub.add_parser("antenna-table", help="antenna gain vs elevation for a few densities")
    at.add_argument("--L-m", type=float, default=8.5)
    at.add_argument("--step", type=float, default=1.0)
    at.add_argument("--lambdas", type=float, nargs="+", default=[10.0, 1e2, 1e3, 1e4, 1e5])
    at.set_defaults(func=_cmd_antenna_table)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
