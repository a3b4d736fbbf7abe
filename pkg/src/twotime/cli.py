"""Command-line entry point: ``twotime {exact,protocol,bounds-grid,verify}``."""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from .bounds import BoundParams, bounds_grid, combined_bound, matsuta_bound
from .config import ConfigError, RunConfig
from .correlations import (
    CorrelationQuery,
    commutator_norm,
    epsilon_actual,
    exact_two_time,
    modified_correlation_direct,
)
from .ensembles import random_fields
from .hamiltonians import SpinHamiltonian, decouple_site
from .observables import PauliObservable
from .protocols import run_projective_protocol, run_rotation_protocol
from .quantum import BornRuleError, QuantumState

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3
CSV_HEADER = "dt,rho,e_full,e_naive,e_trivial,e_min"


# ------------------------------------------------------------------ output

def atomic_write(path: str | None, text: str) -> None:
    """Write via a sibling temp file and rename; ``None`` means stdout."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def grid_csv(points) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for p in points:
        buf.write(",".join([_num(p.dt), str(p.rho), _num(p.e_full), _num(p.e_naive),
                            _num(p.e_trivial), _num(p.e_min)]) + "\n")
    return buf.getvalue()


def _out_path(cfg: RunConfig) -> str | None:
    return cfg.output.path


def _check_format(cfg: RunConfig, allowed: tuple[str, ...]) -> str:
    fmt = cfg.output.format or allowed[0]
    if fmt not in allowed:
        raise ConfigError(f"output.format must be one of {allowed} for this command")
    return fmt


# ---------------------------------------------------------------- commands

def cmd_exact(cfg: RunConfig) -> int:
    _check_format(cfg, ("json",))
    h = cfgmod.build_hamiltonian(cfg)
    q = cfgmod.build_query(cfg, h)
    hp = cfgmod.build_h_prime(cfg, h)
    c = exact_two_time(q)
    out = {
        "re_c": c.real,
        "im_c": c.imag,
        "c_tilde_modified": modified_correlation_direct(q, hp),
        "epsilon_actual": epsilon_actual(q, hp),
    }
    atomic_write(_out_path(cfg), _json(out))
    return EXIT_OK


def cmd_protocol(cfg: RunConfig) -> int:
    _check_format(cfg, ("json",))
    p = cfg.protocol
    if p.kind not in cfgmod.PROTOCOL_KINDS:
        raise ValueError(f"protocol.kind must be one of {cfgmod.PROTOCOL_KINDS}")
    if p.threads < 1:
        raise ValueError("threads must be >= 1")
    h = cfgmod.build_hamiltonian(cfg)
    q = cfgmod.build_query(cfg, h)
    if p.kind == "rotation":
        res = run_rotation_protocol(q, p.theta, cfgmod.build_noise(cfg), p.shots, p.seed,
                                    p.threads)
    else:
        hp = None if p.kind == "projective" else cfgmod.build_h_prime(cfg, h)
        res = run_projective_protocol(q, p.shots, p.seed, modified=hp,
                                      deferred=p.kind == "deferred", threads=p.threads)
    atomic_write(_out_path(cfg), _json(res.to_dict()))
    return EXIT_OK


def _params(cfg: RunConfig) -> BoundParams:
    return BoundParams(u0=cfg.model.u0, rc=cfg.model.rc, beta_form=cfg.grid.beta_form)


def cmd_bounds_grid(cfg: RunConfig) -> int:
    fmt = _check_format(cfg, ("csv", "json"))
    dts, rhos = cfgmod.grid_axes(cfg)
    points = bounds_grid(dts, rhos, _params(cfg))
    if fmt == "csv":
        text = grid_csv(points)
    else:
        text = _json([vars(p) for p in points])
    atomic_write(_out_path(cfg), text)
    return EXIT_OK


def _verify_ensemble(cfg: RunConfig, h: SpinHamiltonian):
    """Configured model plus random-field variants; configured state plus Haar states."""
    rng = np.random.default_rng(cfg.protocol.seed)
    n = h.n_sites
    chains = [h]
    for _ in range(cfg.verify.n_fields):
        chains.append(replace(h, fields=random_fields(n, rng, cfg.verify.field_scale)))
    states = [cfgmod.build_state(cfg)]
    states += [QuantumState.random(n, rng) for _ in range(cfg.verify.n_states)]
    return chains, states


def cmd_verify(cfg: RunConfig, bound_scale: float = 1.0) -> int:
    _check_format(cfg, ("json",))
    h0 = cfgmod.build_hamiltonian(cfg)
    dts, rhos = cfgmod.grid_axes(cfg)
    params = _params(cfg)
    q = cfg.query
    i, n = q.i, h0.n_sites
    if not 0 <= i < n:
        raise IndexError(f"site {i} outside chain of {n}")
    rhos = [r for r in rhos if i + r < n]
    if not rhos:
        raise cfgmod.GridSpecError("no rho in the grid fits on the chain to the right of i")
    chains, states = _verify_ensemble(cfg, h0)

    def run(job):
        ci, si, h = job
        hp = decouple_site(h, i, keep_onsite=q.keep_onsite)
        rows = []
        for dt in dts:
            for rho in rhos:
                query = CorrelationQuery(states[si], h, PauliObservable(i, q.a),
                                         PauliObservable(i + rho, q.b), q.t1, q.t1 + float(dt))
                eps = epsilon_actual(query, hp)
                e_min = combined_bound(dt, rho, params, h, i).e_min * bound_scale
                comm, lr = 0.0, math.inf
                # The commutator does not depend on the state; check it once per chain.
                if cfg.verify.check_commutator and si == 0:
                    comm = commutator_norm(query)
                    lr = matsuta_bound(float(dt), float(rho), params)
                rows.append((ci, si, float(dt), rho, eps, e_min, comm, lr))
        return rows

    jobs = [(ci, si, h) for ci, h in enumerate(chains) for si in range(len(states))]
    threads = max(1, cfg.protocol.threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = [r for rows in pool.map(run, jobs) for r in rows]

    violations, max_ratio, worst = [], 0.0, None
    for ci, si, dt, rho, eps, e_min, comm, lr in results:
        where = {"chain": ci, "state": si, "dt": dt, "rho": rho}
        if not eps <= e_min:
            violations.append({**where, "check": "epsilon<=e_min", "lhs": eps, "rhs": e_min})
        if not comm <= lr:
            violations.append({**where, "check": "commutator<=lr", "lhs": comm, "rhs": lr})
        if e_min > 0:
            ratio = eps / e_min
        else:
            ratio = 0.0 if eps == 0 else math.inf
        if ratio > max_ratio or worst is None:
            max_ratio, worst = ratio, where
    report = {
        "n_sites": n,
        "site": i,
        "n_chains": len(chains),
        "n_states": len(states),
        "n_points": len(results),
        "max_ratio": max_ratio,
        "max_ratio_at": worst,
        "n_violations": len(violations),
        "violations": violations,
    }
    atomic_write(_out_path(cfg), _json(report))
    return EXIT_VIOLATION if violations else EXIT_OK


COMMANDS = {
    "exact": cmd_exact,
    "protocol": cmd_protocol,
    "bounds-grid": cmd_bounds_grid,
    "verify": cmd_verify,
}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--n-sites", type=int)
    common.add_argument("--u0", type=float)
    common.add_argument("--rc", type=float)

    parser = argparse.ArgumentParser(
        prog="twotime",
        description="Two-time correlation protocols and their error bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("exact", parents=[common], help="exact correlation for one query")

    proto = sub.add_parser("protocol", parents=[common], help="Monte Carlo shot campaign")
    proto.add_argument("--kind", choices=cfgmod.PROTOCOL_KINDS)
    proto.add_argument("--shots", type=int)
    proto.add_argument("--theta", type=float)
    proto.add_argument("--noise-sigma", type=float)
    proto.add_argument("--noise-delta", type=float)

    for name, help_text in (("bounds-grid", "bound grid as CSV"),
                            ("verify", "certify epsilon <= e_min on a finite chain")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--dt-max", type=float)
        p.add_argument("--dt-steps", type=int)
        p.add_argument("--rho-max", type=int)
        p.add_argument("--beta-form", choices=("printed", "integrated"))
    sub.choices["verify"].add_argument("--bound-scale", type=float, default=1.0,
                                       help=argparse.SUPPRESS)
    return parser


def apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    def given(name):
        return getattr(args, name, None) is not None

    if given("out"):
        cfg.output.path = args.out
    if given("seed"):
        cfg.protocol.seed = args.seed
    if given("threads"):
        cfg.protocol.threads = args.threads
    if given("n_sites"):
        cfg.model.n_sites = args.n_sites
    if given("u0"):
        cfg.model.u0 = args.u0
    if given("rc"):
        cfg.model.rc = args.rc
    if given("kind"):
        cfg.protocol.kind = args.kind
    if given("shots"):
        cfg.protocol.shots = args.shots
    if given("theta"):
        cfg.protocol.theta = args.theta
    noise = cfg.protocol.noise
    if given("noise_delta"):
        noise.delta = args.noise_delta
        if noise.kind == "none":
            noise.kind = "systematic"
    if given("noise_sigma"):
        noise.sigma = args.noise_sigma
        noise.kind = "statistical"
    if given("dt_max"):
        cfg.grid.dt_max = args.dt_max
    if given("dt_steps"):
        cfg.grid.dt_steps = args.dt_steps
    if given("rho_max"):
        cfg.grid.rho_max = args.rho_max
    if given("beta_form"):
        cfg.grid.beta_form = args.beta_form
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = apply_overrides(cfgmod.load_config(args.config), args)
        if args.command == "verify":
            return cmd_verify(cfg, bound_scale=args.bound_scale)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"twotime: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, IndexError, TypeError, BornRuleError) as exc:
        print(f"twotime: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
