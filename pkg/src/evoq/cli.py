"""Command-line front end.

    evoq solve    --config FILE --out DIR [--json]
    evoq adjoint  --config FILE --out DIR [--json]
    evoq verify   --config FILE --suite NAME [--out DIR] [--json]
    evoq control  --config FILE [--variant V] [--certify-duality] --out DIR [--json]
    evoq suite    acceptance [--out DIR] [--json] [--fast]

Exit codes: 0 all enabled assertions pass, 1 numerical assertion failure,
2 configuration rejected, 3 I/O failure.  Reports are deterministic for a
fixed config (fixed seed, index-ordered reductions), so reruns produce
bitwise-identical JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_SCHEMA = 2
EXIT_IO = 3


def _numpy_safe(obj):
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(payload: dict, out_dir: str, name: str, echo: bool) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=True,
                      default=_numpy_safe)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
            fh.write("\n")
    if echo:
        print(text)


def _certificate_dict(cert) -> dict:
    return {
        "nu": cert.nu,
        "c_est": cert.c_est,
        "sample_count": cert.sample_count,
        "min_location": cert.min_location,
    }


def _report_dict(report) -> dict:
    out = {
        "residual_rel": report.residual_rel,
        "norm_ratio": report.norm_ratio,
        "wraparound_tolerance": report.wraparound_tolerance,
        "certificate": _certificate_dict(report.certificate),
    }
    if report.causality_leakage is not None:
        out["causality_leakage"] = report.causality_leakage
    if report.amnesia_leakage is not None:
        out["amnesia_leakage"] = report.amnesia_leakage
    return out


def _cmd_solve(cfg, args, direction: str) -> int:
    from .signals import save_signal
    from .solver import EvoProblem, solve_adjoint, solve_forward

    weight = cfg.nu if direction == "forward" else -cfg.nu
    rhs = cfg.build_rhs(weight=weight)
    prob = EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, rhs, direction)
    report = (solve_forward if direction == "forward" else solve_adjoint)(
        prob, cfg.pad_fraction)
    payload = {
        "command": "solve" if direction == "forward" else "adjoint",
        "config": os.path.basename(cfg.source_path or ""),
        "seed": cfg.seed,
        "report": _report_dict(report),
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_signal(report.solution, os.path.join(args.out, "solution"))
        save_signal(rhs, os.path.join(args.out, "rhs"))
    _write_json(payload, args.out, "report.json", args.json)
    ok = report.residual_rel <= cfg.tolerances["algebraic"]
    return EXIT_OK if ok else EXIT_NUMERICAL


def _verify_duality(cfg, rng):
    import numpy as np

    from .signals import nu_product
    from .solver import EvoProblem, solve_adjoint, solve_forward
    from .waveforms import random_signal

    worst = 0.0
    for _ in range(32):
        f = random_signal(cfg.grid, cfg.nu, cfg.m, rng)
        g = random_signal(cfg.grid, -cfg.nu, cfg.m, rng)
        uf = solve_forward(EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, f, "forward"),
                           cfg.pad_fraction)
        vg = solve_adjoint(EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, g, "adjoint"),
                           cfg.pad_fraction)
        gap = abs(nu_product(uf.solution, g) - nu_product(f, vg.solution))
        worst = max(worst, gap / (f.norm * g.norm))
    tol = cfg.tolerances["pairing"]
    return {"suite": "duality", "pairs": 32, "max_relative_gap": worst,
            "tolerance": tol, "passed": worst <= tol}


def _verify_causality(cfg, rng):
    from .signals import WeightedSignal
    from .solver import (EvoProblem, solve_adjoint, solve_forward,
                         timestep_adjoint_oracle, timestep_oracle)

    import numpy as np

    rhs = cfg.build_rhs()
    prob = EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, rhs, "forward")
    rep = solve_forward(prob, cfg.pad_fraction)
    result = {
        "suite": "causality",
        "spectral_leakage": rep.causality_leakage,
        "wraparound_tolerance": rep.wraparound_tolerance,
    }
    ok = rep.causality_leakage <= rep.wraparound_tolerance + 1e-12
    if cfg.law.is_finite_sum and cfg.law.order <= 1:
        u_step = timestep_oracle(prob)
        start = _support_start(rhs.phi)
        mass = float(np.linalg.norm(u_step.phi[:start]))
        total = max(float(np.linalg.norm(u_step.phi)), 1e-300)
        result["stepper_leakage"] = mass / total
        ok = ok and result["stepper_leakage"] < cfg.tolerances["cross_method"]

    back = cfg.build_rhs(weight=-cfg.nu)
    prob_a = EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, back, "adjoint")
    rep_a = solve_adjoint(prob_a, cfg.pad_fraction)
    result["adjoint_spectral_leakage"] = rep_a.amnesia_leakage
    result["adjoint_wraparound_tolerance"] = rep_a.wraparound_tolerance
    ok = ok and rep_a.amnesia_leakage <= rep_a.wraparound_tolerance + 1e-12
    if cfg.law.is_finite_sum and cfg.law.order <= 1 and cfg.grid.symmetric:
        v_step = timestep_adjoint_oracle(prob_a)
        end = _support_end(back.phi)
        mass = float(np.linalg.norm(v_step.phi[end + 1:]))
        total = max(float(np.linalg.norm(v_step.phi)), 1e-300)
        result["adjoint_stepper_leakage"] = mass / total
        ok = ok and result["adjoint_stepper_leakage"] < cfg.tolerances["cross_method"]
    result["passed"] = bool(ok)
    return result


def _support_start(phi) -> int:
    import numpy as np
    nz = np.flatnonzero(np.abs(phi).max(axis=1) > 0)
    return int(nz[0]) if nz.size else phi.shape[0]


def _support_end(phi) -> int:
    import numpy as np
    nz = np.flatnonzero(np.abs(phi).max(axis=1) > 0)
    return int(nz[-1]) if nz.size else -1


def _verify_reversal(cfg, rng):
    from .solver import time_reversal_conjugation_check
    from .waveforms import band_limited_signal

    signals = [band_limited_signal(cfg.grid, -cfg.nu, cfg.m, rng) for _ in range(5)]
    report = time_reversal_conjugation_check(cfg.law, cfg.A, signals)
    tol = cfg.tolerances["conjugation"]
    return {"suite": "reversal", "signals": len(signals),
            "max_discrepancy": report.max_discrepancy, "tolerance": tol,
            "passed": report.max_discrepancy <= tol}


def _verify_nu_independence(cfg, rng):
    import numpy as np

    from .signals import TimeGrid
    from .solver import nu_independence_check
    from .waveforms import smooth_bump

    spec = dict(cfg.rhs_spec)
    component = spec.get("component", 0)
    center = spec.get("center", 0.0)
    width = spec.get("width", 1.0)

    def fn(t):
        values = np.zeros((len(t), cfg.m))
        values[:, component] = smooth_bump(t, center, width)
        return values

    # The probe needs the larger-weight flat bump e^{-2t} f(t) resolved, so
    # the suite refines coarse solve grids instead of comparing alias noise.
    grid = cfg.grid
    if grid.n < 512:
        grid = TimeGrid(grid.t_min, grid.t_max, 512)

    out = {"suite": "nu-independence", "nu1": 1.0, "nu2": 2.0, "samples": grid.n}
    ok = True
    for direction in ("forward", "adjoint"):
        rep = nu_independence_check(cfg.law, cfg.A, fn, grid, 1.0, 2.0,
                                    direction=direction,
                                    pad_fraction=cfg.pad_fraction)
        out[f"{direction}_sup_rel_diff"] = rep.sup_rel_diff
        ok = ok and rep.sup_rel_diff < cfg.tolerances["cross_nu"]
    out["passed"] = bool(ok)
    return out


_VERIFY_SUITES = {
    "duality": _verify_duality,
    "causality": _verify_causality,
    "reversal": _verify_reversal,
    "nu-independence": _verify_nu_independence,
}


def _cmd_verify(cfg, args) -> int:
    import numpy as np

    rng = np.random.default_rng(cfg.seed)
    result = _VERIFY_SUITES[args.suite](cfg, rng)
    result["seed"] = cfg.seed
    _write_json(result, args.out, f"verify_{args.suite}.json", args.json)
    return EXIT_OK if result["passed"] else EXIT_NUMERICAL


def _control_problem(cfg, variant):
    from .config import _build_signal
    from .control import ControlProblem
    from .errors import SchemaError
    from .solver import EvoProblem

    if cfg.control is None:
        raise SchemaError("config has no control section")
    spec = cfg.control
    variant = variant or spec.variant
    if spec.forcing is not None:
        rhs = _build_signal(spec.forcing, cfg.grid, cfg.m, cfg.nu, cfg.source_path)
    else:
        rhs = cfg.build_rhs()
    base = EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A, rhs, "forward")
    if variant == "pointwise":
        return ControlProblem(base=base, B=spec.B, T=spec.T,
                              variant="pointwise", U0=spec.U0)
    return ControlProblem(base=base, B=spec.B, T=spec.T, variant="supported")


def _control_result_dict(res) -> dict:
    return {
        "feasible": res.feasible,
        "terminal_residual": res.terminal_residual,
        "control_norm": res.control_norm,
        "regularization": {
            "rank": res.regularization.rank,
            "cutoff": res.regularization.cutoff,
            "sigma_max": res.regularization.sigma_max,
        },
    }


def _cmd_control(cfg, args) -> int:
    import math

    from .control import (assemble_endmaps, null_control,
                          observability_constant, pointwise_null_control)
    from .signals import save_signal

    cp = _control_problem(cfg, args.variant)

    if args.certify_duality:
        if cp.variant != "supported":
            from .control import pointwise_duality_check
            chk = pointwise_duality_check(cp, rtol=cfg.tolerances["svd_cutoff"],
                                          feasibility_tol=cfg.tolerances["pointwise_feasibility"])
            payload = {
                "command": "control --certify-duality",
                "variant": "pointwise",
                "verdicts": {
                    "feasible_for_basis": chk["feasible_for_basis"],
                    "range_included": chk["range_included"],
                },
                "agree": chk["agree"],
            }
            _write_json(payload, args.out, "duality_table.json", args.json)
            return EXIT_OK if chk["agree"] else EXIT_NUMERICAL
        maps = assemble_endmaps(cp, cfg.pad_fraction)
        verdict_rows = _three_way_verdicts(cfg, cp, maps)
        payload = {"command": "control --certify-duality", "variant": "supported",
                   **verdict_rows}
        _write_json(payload, args.out, "duality_table.json", args.json)
        return EXIT_OK if verdict_rows["agree"] else EXIT_NUMERICAL

    from .material import coercivity

    cert = coercivity(cfg.law, cfg.nu, cfg.grid)

    if cp.variant == "pointwise":
        res = pointwise_null_control(cp, rtol=cfg.tolerances["svd_cutoff"],
                                     feasibility_tol=cfg.tolerances["pointwise_feasibility"])
        payload = {"command": "control", "variant": "pointwise", "seed": cfg.seed,
                   "certificate": _certificate_dict(cert),
                   "result": _control_result_dict(res)}
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_signal(res.G, os.path.join(args.out, "control_G"))
        _write_json(payload, args.out, "control_result.json", args.json)
        return EXIT_OK

    maps = assemble_endmaps(cp, cfg.pad_fraction)
    res = null_control(cp, maps, rtol=cfg.tolerances["svd_cutoff"],
                       feasibility_tol=cfg.tolerances["feasibility"])
    obs = observability_constant(cp, maps, pad_fraction=cfg.pad_fraction,
                                 rtol=cfg.tolerances["svd_cutoff"])
    payload = {"command": "control", "variant": "supported", "seed": cfg.seed,
               "certificate": _certificate_dict(cert),
               "result": _control_result_dict(res)}
    obs_payload = {
        "c_obs": obs.c_obs if math.isfinite(obs.c_obs) else "infinity",
        "method": obs.method,
        "cutoff": obs.cutoff,
    }
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        save_signal(res.G, os.path.join(args.out, "control_G"))
        save_signal(obs.witness, os.path.join(args.out, "observability_witness"))
    _write_json(payload, args.out, "control_result.json", args.json)
    _write_json(obs_payload, args.out, "observability.json", args.json)
    return EXIT_OK


def _three_way_verdicts(cfg, cp, maps) -> dict:
    import math

    import numpy as np

    from .control import (ControlProblem, douglas_check, null_control,
                          observability_constant)
    from .signals import WeightedSignal
    from .solver import EvoProblem

    rng = np.random.default_rng(cfg.seed)
    feasible = []
    for _ in range(max(cfg.m, 3)):
        phi = rng.standard_normal((cfg.grid.n, cfg.m)) \
            + 1j * rng.standard_normal((cfg.grid.n, cfg.m))
        base = EvoProblem(cfg.nu, cfg.grid, cfg.law, cfg.A,
                          WeightedSignal(cfg.grid, cfg.nu, phi), "forward")
        probe = ControlProblem(base=base, B=cp.B, T=cp.T, variant="supported")
        feasible.append(null_control(probe, maps,
                                     rtol=cfg.tolerances["svd_cutoff"],
                                     feasibility_tol=cfg.tolerances["feasibility"]).feasible)
    douglas = douglas_check(maps.L_F, maps.L_G, rtol=cfg.tolerances["svd_cutoff"])
    obs = observability_constant(cp, maps, pad_fraction=cfg.pad_fraction,
                                 rtol=cfg.tolerances["svd_cutoff"],
                                 check_primal=False)
    verdicts = {
        "feasible_for_spanning_set": all(feasible),
        "range_included": douglas.included,
        "observability_finite": math.isfinite(obs.c_obs),
    }
    return {"verdicts": verdicts,
            "agree": len(set(verdicts.values())) == 1}


def _cmd_suite(args) -> int:
    from .acceptance import run_acceptance

    results = run_acceptance(fast=args.fast)
    rows = []
    for res in results:
        rows.append({"criterion": res.cid, "name": res.name,
                     "passed": res.passed, "measured": res.measured})
        status = "PASS" if res.passed else "FAIL"
        print(f"[{status}] criterion {res.cid}: {res.name}")
    payload = {"suite": "acceptance", "results": rows,
               "all_passed": all(r.passed for r in results)}
    _write_json(payload, args.out, "acceptance.json", args.json)
    return EXIT_OK if payload["all_passed"] else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoq",
        description="Solvers and null-controllability tools for evolution "
                    "systems in exponentially weighted L2 spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="instance config (JSON)")
        p.add_argument("--out", default="", help="output directory")
        p.add_argument("--json", action="store_true", help="echo reports to stdout")

    common(sub.add_parser("solve", help="solve the forward system"))
    common(sub.add_parser("adjoint", help="solve the backward system"))
    p_verify = sub.add_parser("verify", help="run a verification suite")
    common(p_verify)
    p_verify.add_argument("--suite", required=True, choices=sorted(_VERIFY_SUITES))
    p_control = sub.add_parser("control", help="null-control synthesis")
    common(p_control)
    p_control.add_argument("--variant", choices=["supported", "pointwise"])
    p_control.add_argument("--certify-duality", action="store_true")
    p_suite = sub.add_parser("suite", help="run a bundled suite")
    p_suite.add_argument("name", choices=["acceptance"])
    p_suite.add_argument("--fast", action="store_true",
                         help="reduced sample counts (smoke run)")
    common(p_suite, needs_config=False)
    return parser


def run(config_path: str, command: str, out_dir: str = "") -> int:
    """Programmatic one-call interface mirroring the CLI."""
    argv = [command, "--config", config_path]
    if out_dir:
        argv += ["--out", out_dir]
    return main(argv)


def suite(name: str, out_dir: str = "") -> int:
    argv = ["suite", name]
    if out_dir:
        argv += ["--out", out_dir]
    return main(argv)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = os.environ.get("EVOQ_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    if args.command == "suite":
        try:
            return _cmd_suite(args)
        except OSError as exc:
            print(f"evoq: I/O failure: {exc}", file=sys.stderr)
            return EXIT_IO

    from .config import load_config
    from .errors import EvoqError, SchemaError

    try:
        cfg = load_config(args.config)
        if args.command == "solve":
            return _cmd_solve(cfg, args, "forward")
        if args.command == "adjoint":
            return _cmd_solve(cfg, args, "adjoint")
        if args.command == "verify":
            return _cmd_verify(cfg, args)
        if args.command == "control":
            return _cmd_control(cfg, args)
        raise AssertionError(f"unhandled command {args.command}")
    except SchemaError as exc:
        print(f"evoq: config rejected: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"evoq: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except EvoqError as exc:
        kind = type(exc).__name__
        if kind in ("NonCoerciveError", "DefinitenessError", "NotSkewError",
                    "PreconditionError", "UnsupportedLawError", "SizeGuardError"):
            print(f"evoq: config rejected ({kind}): {exc}", file=sys.stderr)
            return EXIT_SCHEMA
        print(f"evoq: numerical failure ({kind}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
