"""Command-line entry point: experiment workflows over TOML configs.

Subcommands
-----------
coeffs
    Print all transition-kernel coefficients for the configured
    dynamics as JSON, cross-checked against the quadrature oracle;
    exits nonzero if the check fails.
sample
    Run chains and write recorded states as CSV
    (``step,chain,theta_0,...``; ``--full-state`` appends the p and r
    blocks) plus a JSON run report.
mixing
    Run chains against a quadratic target and write the per-step
    Wasserstein-2 curve as CSV (``step,w2,stderr``).
bias-sweep
    For a list of step sizes, compute the exact stationary
    discretization bias of the configured algorithm on a quadratic
    target (per-mode linear-map fixed points; no sampling noise) and
    fit the log-log slope.
verify
    Evaluate the Lyapunov/contraction certificates over a grid of
    condition numbers and report a JSON table; exits nonzero if any
    check fails.

Every output embeds the resolved config, a SHA-256 of the config file,
and the package version.  With a fixed seed, outputs are byte-identical
across runs and thread counts; timing goes to stderr only.  Failures
produce a structured JSON error object on stdout and a nonzero exit
code (2 usage/config, 1 failed check, 4 numerical).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from . import __version__
from .errors import (ArgumentError, ConvergenceError, Langevin3Error,
                     NumericalError)
from .kernel_coeffs import (DynamicsParams, factor_noise, mean_coeffs,
                            noise_coeffs, quadrature_oracle)
from .metrics import GaussianSummary, mixing_curve, mixing_time, w2_gaussian
from .model import LogisticRegressionPotential, QuadraticPotential
from .sampler import (RunReport, SamplerConfig, run_chain, step_size_exact,
                      step_size_interpolated)

__all__ = ["main"]

_ORACLE_TOL = 1e-9
_DEFAULT_SWEEP_ETAS = (0.2, 0.1, 0.05, 0.025, 0.0125)

_SCHEMA = {
    "potential": {"type", "d", "kappa", "L", "seed", "center", "dataset",
                  "ridge"},
    "dynamics": {"gamma", "xi", "eta", "etas", "schedule", "c", "epsilon",
                 "alpha", "L_alpha", "delta_u"},
    "run": {"algorithm", "steps", "chains", "seed", "thinning", "window",
            "full_state"},
    "verify": {"kappas"},
}


# ---------------------------------------------------------------------------
# config loading and resolution
# ---------------------------------------------------------------------------

def _load_config(path: str):
    try:
        with open(path, "rb") as fh:
            raw_bytes = fh.read()
    except OSError as exc:
        raise ArgumentError(f"cannot read config {path!r}: {exc}") from exc
    try:
        cfg = tomllib.loads(raw_bytes.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ArgumentError(f"malformed config {path!r}: {exc}") from exc
    for section, keys in cfg.items():
        if section not in _SCHEMA:
            raise ArgumentError(f"unknown config section [{section}]")
        if not isinstance(keys, dict):
            raise ArgumentError(
                f"top-level key {section!r} must be a section (table)")
        for key in keys:
            if key not in _SCHEMA[section]:
                raise ArgumentError(
                    f"unknown key {key!r} in section [{section}]")
    digest = hashlib.sha256(raw_bytes).hexdigest()
    return cfg, digest


def _build_potential(cfg):
    sec = cfg.get("potential")
    if sec is None:
        raise ArgumentError("config needs a [potential] section")
    kind = sec.get("type")
    if kind == "quadratic":
        d = int(sec.get("d", 0))
        if d < 1:
            raise ArgumentError("quadratic potential needs d >= 1")
        kappa = float(sec.get("kappa", 1.0))
        L = float(sec.get("L", 1.0))
        if kappa < 1 or L <= 0:
            raise ArgumentError("need kappa >= 1 and L > 0")
        m = L / kappa
        seed = sec.get("seed")
        if seed is None:
            eigs = np.geomspace(m, L, d) if d > 1 else np.array([L])
        else:
            rng = np.random.Generator(np.random.Philox(key=[int(seed), 3]))
            eigs = np.exp(rng.uniform(math.log(m), math.log(L), size=d))
            eigs[0] = m            # pin the extremes so kappa is exact
            eigs[-1] = L
        center = np.asarray(sec.get("center", np.zeros(d)), dtype=float)
        if center.shape != (d,):
            raise ArgumentError(f"center must have length {d}")
        return QuadraticPotential(center=center, eigenvalues=eigs)
    if kind == "logistic":
        path = sec.get("dataset")
        if not path:
            raise ArgumentError("logistic potential needs a dataset path")
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ArgumentError(f"cannot read dataset {path!r}: {exc}") from exc
        if data.shape[1] < 2:
            raise ArgumentError("dataset needs feature columns plus a label")
        X, y = data[:, :-1], data[:, -1]
        labels = np.unique(y)
        if set(labels.tolist()) <= {0.0, 1.0}:
            y = 2.0 * y - 1.0
        elif not set(labels.tolist()) <= {-1.0, 1.0}:
            raise ArgumentError("labels must be in {0,1} or {-1,+1}")
        ridge = float(sec.get("ridge", 1.0))
        return LogisticRegressionPotential(X=X, y=y, ridge=ridge)
    raise ArgumentError(f"unknown potential type {kind!r}")


def _resolve_dynamics(cfg, pot=None):
    """DynamicsParams (and schedule metadata) from the config.

    gamma defaults to the potential's condition number and xi to twice
    that (the tuning under which the contraction certificates hold);
    without a potential section both default as if kappa were 1.
    """
    sec = cfg.get("dynamics", {})
    kappa = pot.bounds.kappa if pot is not None else 1.0
    L = pot.bounds.L if pot is not None else 1.0
    gamma = float(sec.get("gamma", kappa))
    xi = float(sec.get("xi", 2.0 * kappa))
    schedule = sec.get("schedule", "fixed")
    schedule_steps = None
    if schedule == "fixed":
        if "eta" not in sec:
            raise ArgumentError("dynamics.eta required with the fixed schedule")
        eta = float(sec["eta"])
    elif schedule == "exact":
        if pot is None:
            raise ArgumentError("step-size schedules need a [potential] section")
        eps = sec.get("epsilon")
        if eps is None:
            raise ArgumentError("dynamics.epsilon required for schedule='exact'")
        sched = step_size_exact(kappa, pot.dim, L, float(eps),
                                c=float(sec.get("c", 0.1)))
        eta, schedule_steps = sched.eta, sched.steps
    elif schedule == "interpolated":
        if pot is None:
            raise ArgumentError("step-size schedules need a [potential] section")
        eps, alpha, l_alpha = (sec.get("epsilon"), sec.get("alpha"),
                               sec.get("L_alpha"))
        if eps is None or alpha is None or l_alpha is None:
            raise ArgumentError(
                "schedule='interpolated' needs epsilon, alpha and L_alpha")
        eta = step_size_interpolated(kappa, pot.dim, L, float(l_alpha),
                                     int(alpha), float(eps),
                                     c=float(sec.get("c", 0.1)))
    else:
        raise ArgumentError(
            f"unknown schedule {schedule!r} (fixed, exact, interpolated)")
    return DynamicsParams(gamma=gamma, xi=xi, eta=eta, L=L), schedule_steps


def _build_sampler_config(cfg, pot, params, schedule_steps, full_state):
    sec = cfg.get("run", {})
    steps = sec.get("steps", schedule_steps)
    if steps is None:
        raise ArgumentError("run.steps required (no schedule supplied one)")
    dyn = cfg.get("dynamics", {})
    mode = dyn.get("delta_u", "exact")
    alpha = dyn.get("alpha")
    return SamplerConfig(
        potential=pot,
        params=params,
        steps=int(steps),
        seed=int(sec.get("seed", 0)),
        chains=int(sec.get("chains", 1)),
        algorithm=sec.get("algorithm", "third_order"),
        delta_u_mode=mode,
        alpha=int(alpha) if alpha is not None else None,
        record_every=int(sec.get("thinning", 1)),
        record_full_state=full_state,
    )


def _resolved_echo(cfg, pot, params, run_cfg=None):
    echo = {
        "potential": dict(cfg.get("potential", {})),
        "dynamics": {"gamma": params.gamma, "xi": params.xi,
                     "eta": params.eta, "L": params.L},
        "run": dict(cfg.get("run", {})),
    }
    if pot is not None:
        echo["potential"].setdefault("L", pot.bounds.L)
        echo["potential"]["kappa"] = pot.bounds.kappa
        echo["potential"]["d"] = pot.dim
    if run_cfg is not None:
        echo["run"].update(
            algorithm=run_cfg.algorithm, steps=run_cfg.steps,
            chains=run_cfg.chains, seed=run_cfg.seed,
            thinning=run_cfg.record_every, delta_u=run_cfg.delta_u_mode)
    return echo


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")

def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(payload, path=None):
    text = json.dumps(payload, indent=2, sort_keys=True,
                      default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _provenance(digest):
    return {"version": __version__, "config_sha256": digest}


def _run_with_threads(run_cfg: SamplerConfig, threads: int) -> RunReport:
    """Run chains, optionally split over a worker pool.

    Chains are partitioned into contiguous blocks; each block keeps its
    absolute per-chain streams via ``chain_offset``, so the merged
    result is byte-identical to a single-threaded run.
    """
    if threads < 1:
        raise ArgumentError(f"--threads must be >= 1, got {threads}")
    threads = min(threads, run_cfg.chains)
    if threads == 1:
        return run_chain(run_cfg)
    t0 = time.perf_counter()
    bounds = np.linspace(0, run_cfg.chains, threads + 1).astype(int)
    blocks = [
        dataclasses.replace(run_cfg, chains=int(hi - lo),
                            chain_offset=run_cfg.chain_offset + int(lo))
        for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    ]
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        reports = list(pool.map(run_chain, blocks))
    first = reports[0]
    from .sampler import ChainState
    merged_final = ChainState(
        theta=np.concatenate([r.final_state.theta for r in reports]),
        p=np.concatenate([r.final_state.p for r in reports]),
        r=np.concatenate([r.final_state.r for r in reports]))
    elapsed = time.perf_counter() - t0
    return RunReport(
        record_steps=first.record_steps,
        theta=np.concatenate([r.theta for r in reports], axis=1),
        p=(np.concatenate([r.p for r in reports], axis=1)
           if first.p is not None else None),
        r=(np.concatenate([r.r for r in reports], axis=1)
           if first.r is not None else None),
        final_state=merged_final,
        gradient_evals=first.gradient_evals,
        init_gradient_evals=first.init_gradient_evals,
        seconds_per_step=elapsed / max(run_cfg.steps, 1),
        seed=run_cfg.seed,
        config=run_cfg,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_coeffs(args) -> int:
    cfg, digest = _load_config(args.config)
    pot = _build_potential(cfg) if "potential" in cfg else None
    params, _ = _resolve_dynamics(cfg, pot)
    mc = mean_coeffs(params)
    nc = noise_coeffs(params)
    oracle_mc, oracle_nc = quadrature_oracle(params)
    deltas = [abs(getattr(mc, f) - getattr(oracle_mc, f))
              for f in ("mu12", "mu13", "mu22", "mu23", "mu31", "mu32", "mu33")]
    deltas += [abs(getattr(nc, f) - getattr(oracle_nc, f))
               for f in ("s11", "s12", "s13", "s22", "s23", "s33")]
    max_delta = max(deltas)
    ok = max_delta <= _ORACLE_TOL
    payload = {
        **_provenance(digest),
        "config": _resolved_echo(cfg, pot, params),
        "params": {"gamma": params.gamma, "xi": params.xi,
                   "eta": params.eta, "L": params.L},
        "mean": {f: getattr(mc, f) for f in
                 ("mu12", "mu13", "mu22", "mu23", "mu31", "mu32", "mu33")},
        "noise": {f: getattr(nc, f) for f in
                  ("s11", "s12", "s13", "s22", "s23", "s33")},
        "oracle": {"max_abs_delta": max_delta, "tolerance": _ORACLE_TOL,
                   "ok": ok},
    }
    _write_json(payload, args.out)
    return 0 if ok else 1


def _csv_columns(d, full_state):
    cols = ["step", "chain"] + [f"theta_{j}" for j in range(d)]
    if full_state:
        cols += [f"p_{j}" for j in range(d)] + [f"r_{j}" for j in range(d)]
    return cols


def _sample_rows(report: RunReport, full_state: bool):
    n_rec, chains, d = report.theta.shape
    for i in range(n_rec):
        k = int(report.record_steps[i])
        for c in range(chains):
            row = [str(k), str(c)] + [_fmt(v) for v in report.theta[i, c]]
            if full_state:
                row += [_fmt(v) for v in report.p[i, c]]
                row += [_fmt(v) for v in report.r[i, c]]
            yield row


def cmd_sample(args) -> int:
    cfg, digest = _load_config(args.config)
    pot = _build_potential(cfg)
    params, schedule_steps = _resolve_dynamics(cfg, pot)
    full_state = args.full_state or bool(cfg.get("run", {}).get("full_state"))
    run_cfg = _build_sampler_config(cfg, pot, params, schedule_steps,
                                    full_state)
    report = _run_with_threads(run_cfg, args.threads)
    out_csv = args.out or "sample.csv"
    _write_csv(out_csv, _csv_columns(pot.dim, full_state),
               _sample_rows(report, full_state))
    payload = {
        **_provenance(digest),
        "config": _resolved_echo(cfg, pot, params, run_cfg),
        "seed": report.seed,
        "gradient_evals": report.gradient_evals,
        "init_gradient_evals": report.init_gradient_evals,
        "recorded_steps": [int(k) for k in report.record_steps],
        "csv": out_csv,
        "columns": _csv_columns(pot.dim, full_state),
    }
    _write_json(payload, _sidecar(out_csv))
    print(f"sample: {run_cfg.steps} steps x {run_cfg.chains} chains, "
          f"{report.seconds_per_step:.3e} s/step", file=sys.stderr)
    return 0


def _sidecar(csv_path: str) -> str:
    return (csv_path[:-4] if csv_path.endswith(".csv") else csv_path) + ".json"


def _quadratic_target(pot, full_state):
    if not isinstance(pot, QuadraticPotential):
        raise ArgumentError(
            "mixing curves need a quadratic potential (Gaussian target)")
    var_theta = 1.0 / pot.eigenvalues
    mean = pot.center
    if full_state:
        d = pot.dim
        var = np.concatenate([var_theta,
                              np.full(d, 1.0 / pot.bounds.L),
                              np.full(d, 1.0 / pot.bounds.L)])
        mean = np.concatenate([mean, np.zeros(2 * d)])
    else:
        var = var_theta
    cov = np.zeros((mean.size, mean.size))
    if pot.directions is None:
        np.fill_diagonal(cov, var)
    else:
        V = pot.directions
        block = (V * var_theta[: pot.dim]) @ V.T if not full_state else None
        if full_state:
            cov[: pot.dim, : pot.dim] = (V * var_theta) @ V.T
            np.fill_diagonal(cov[pot.dim:, pot.dim:], 1.0 / pot.bounds.L)
        else:
            cov = block
    return GaussianSummary(mean=mean, cov=cov)


def cmd_mixing(args) -> int:
    cfg, digest = _load_config(args.config)
    pot = _build_potential(cfg)
    params, schedule_steps = _resolve_dynamics(cfg, pot)
    full_state = args.full_state or bool(cfg.get("run", {}).get("full_state"))
    run_cfg = _build_sampler_config(cfg, pot, params, schedule_steps,
                                    full_state)
    target = _quadratic_target(pot, full_state)
    report = _run_with_threads(run_cfg, args.threads)
    window = int(cfg.get("run", {}).get("window", 1))
    curve = mixing_curve(report, target, window=window)
    out_csv = args.out or "mixing.csv"
    _write_csv(out_csv, ["step", "w2", "stderr"],
               ([str(int(k)), _fmt(v), _fmt(se)]
                for k, v, se in curve.points))
    payload = {
        **_provenance(digest),
        "config": _resolved_echo(cfg, pot, params, run_cfg),
        "window": window,
        "full_state": full_state,
        "csv": out_csv,
    }
    eps = cfg.get("dynamics", {}).get("epsilon")
    if eps is not None:
        payload["epsilon"] = float(eps)
        payload["mixing_time"] = mixing_time(curve, float(eps))
    _write_json(payload, _sidecar(out_csv))
    print(f"mixing: {run_cfg.steps} steps x {run_cfg.chains} chains, "
          f"{report.seconds_per_step:.3e} s/step", file=sys.stderr)
    return 0


def _stationary_mode_cov(lam, params, algorithm, L):
    """Exact per-mode stationary covariance of the discrete chain.

    Returns the covariance over the algorithm's own state space on one
    quadratic eigendirection: 3x3 for the third-order chain, 2x2 for
    the underdamped baseline, 1x1 for ULA.
    """
    from .reference import discrete_stationary_cov
    from .sampler import _underdamped_moments
    from scipy.linalg import solve_discrete_lyapunov

    if algorithm == "third_order":
        return discrete_stationary_cov(float(lam), params)
    if algorithm == "ula":
        rho = 1.0 - params.eta * lam / L
        if abs(rho) >= 1.0:
            raise NumericalError(
                f"ULA unstable at eta={params.eta}, eigenvalue {lam}")
        return np.array([[(1.0 / lam) / (1.0 - params.eta * lam / (2.0 * L))]])
    l = lam / L                                  # underdamped
    eta, xi = params.eta, params.xi
    E, omE, (l11, l21, l22) = _underdamped_moments(eta, xi)
    A = np.array([[1.0 - (l / xi) * (eta - omE / xi), omE / xi],
                  [-l * omE / xi, E]])
    if np.abs(np.linalg.eigvals(A)).max() >= 1.0:
        raise NumericalError(
            f"underdamped chain unstable at eta={eta}, eigenvalue {lam}")
    Q = np.array([[l11 ** 2, l11 * l21],
                  [l11 * l21, l21 ** 2 + l22 ** 2]]) / L
    C = solve_discrete_lyapunov(A, Q)
    return 0.5 * (C + C.T)


def _stationary_bias(pot, params, algorithm) -> float:
    """Exact W2 between the discrete and true stationary laws.

    Measured on the algorithm's full state space (where the chain's
    convergence guarantees live): position, velocity, and driven block
    for the third-order chain; (position, velocity) for underdamped;
    position only for ULA.  Both laws factor across eigendirections, so
    squared distances add over modes and each mode uses the Gaussian
    closed form.
    """
    L = pot.bounds.L
    total = 0.0
    for lam in pot.eigenvalues:
        C = _stationary_mode_cov(lam, params, algorithm, L)
        target_var = [1.0 / lam] + [1.0 / L] * (C.shape[0] - 1)
        zero = np.zeros(C.shape[0])
        dist = w2_gaussian(GaussianSummary(zero, C),
                           GaussianSummary(zero, np.diag(target_var)))
        total += dist ** 2
    return math.sqrt(total)


def cmd_bias_sweep(args) -> int:
    cfg, digest = _load_config(args.config)
    pot = _build_potential(cfg)
    if not isinstance(pot, QuadraticPotential):
        raise ArgumentError("bias sweeps need a quadratic potential")
    dyn = cfg.get("dynamics", {})
    etas = [float(e) for e in dyn.get("etas", _DEFAULT_SWEEP_ETAS)]
    if len(etas) < 2:
        raise ArgumentError("need at least two step sizes to fit a slope")
    algorithm = cfg.get("run", {}).get("algorithm", "third_order")
    if algorithm not in ("third_order", "ula", "underdamped"):
        raise ArgumentError(f"unknown algorithm {algorithm!r}")
    kappa = pot.bounds.kappa
    biases = []
    for eta in etas:
        params = DynamicsParams(gamma=float(dyn.get("gamma", kappa)),
                                xi=float(dyn.get("xi", 2.0 * kappa)),
                                eta=eta, L=pot.bounds.L)
        biases.append(_stationary_bias(pot, params, algorithm))
    slope = float(np.polyfit(np.log(etas), np.log(biases), 1)[0])
    out_csv = args.out or "bias_sweep.csv"
    _write_csv(out_csv, ["eta", "plateau_bias"],
               ([_fmt(e), _fmt(b)] for e, b in zip(etas, biases)))
    payload = {
        **_provenance(digest),
        "config": {"potential": dict(cfg.get("potential", {})),
                   "dynamics": dict(dyn), "run": dict(cfg.get("run", {}))},
        "algorithm": algorithm,
        "etas": etas,
        "plateau_bias": biases,
        "slope": slope,
        "csv": out_csv,
    }
    _write_json(payload, _sidecar(out_csv))
    return 0


def cmd_verify(args) -> int:
    from .analysis import (check_cubic_certificate, check_gfunction_inequalities,
                           drift_max_eigenvalue)

    cfg, digest = _load_config(args.config) if args.config else ({}, None)
    kappas = cfg.get("verify", {}).get("kappas")
    if kappas is None:
        kappas = np.geomspace(1.0, 1e4, 50).tolist()
    rows = []
    all_ok = True
    for kappa in kappas:
        kappa = float(kappa)
        drift_worst = max(
            drift_max_eigenvalue(kappa, l)
            for l in (1.0 / kappa, 0.5 * (1.0 + 1.0 / kappa), 1.0))
        drift_ok = drift_worst <= -0.2 + 1e-9
        g_report = check_gfunction_inequalities(kappa)
        cubic = check_cubic_certificate(kappa)
        ok = bool(drift_ok and g_report.ok and cubic.ok)
        all_ok &= ok
        rows.append({
            "kappa": kappa,
            "drift_max_eigenvalue": drift_worst,
            "drift_ok": bool(drift_ok),
            "g_inequalities_ok": bool(g_report.ok),
            "eigenvalue_interval_ok": bool(cubic.within_interval),
            "max_root_mismatch": cubic.max_root_mismatch,
            "ok": ok,
        })
    payload = {
        "version": __version__,
        "checks": rows,
        "ok": bool(all_ok),
    }
    if digest is not None:
        payload["config_sha256"] = digest
    _write_json(payload, args.out)
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="langevin3",
        description="Third-order Langevin sampler experiment workflows.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *, config_required=True, threads=False,
            full_state=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=config_required,
                       help="TOML experiment config")
        p.add_argument("--out", default=None,
                       help="output path (CSV commands default to "
                            "<command>.csv; JSON commands default to stdout)")
        if threads:
            p.add_argument("--threads", type=int, default=1,
                           help="worker pool size for chain blocks")
        if full_state:
            p.add_argument("--full-state", action="store_true",
                           dest="full_state",
                           help="record/compare p and r blocks too")
        p.set_defaults(func=func)
        return p

    add("coeffs", cmd_coeffs, "kernel coefficients + oracle cross-check")
    add("sample", cmd_sample, "run chains, write trajectory CSV",
        threads=True, full_state=True)
    add("mixing", cmd_mixing, "Wasserstein-2 mixing curve CSV",
        threads=True, full_state=True)
    add("bias-sweep", cmd_bias_sweep,
        "stationary bias vs step size, with fitted slope")
    add("verify", cmd_verify, "contraction/Lyapunov certificate table",
        config_required=False)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ArgumentError as exc:
        _write_json({"error": {"type": "argument", "message": str(exc)}})
        return 2
    except ConvergenceError as exc:
        _write_json({"error": {"type": "convergence", "message": str(exc)}})
        return 4
    except NumericalError as exc:
        _write_json({"error": {"type": "numerical", "message": str(exc)}})
        return 4
    except Langevin3Error as exc:                # safety net for subclasses
        _write_json({"error": {"type": "internal", "message": str(exc)}})
        return 4
    except OSError as exc:
        _write_json({"error": {"type": "io", "message": str(exc)}})
        return 2


if __name__ == "__main__":
    sys.exit(main())
