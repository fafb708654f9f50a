"""Command-line entry point: gen, solve, certify, bench."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .baseline import kmeanspp_lloyd
from .certify import build_certificate, verify_dual_feasibility
from .instance import (BadInput, InvalidK, Objective, load_instance, normalize_distances,
                       random_points, write_points)
from .jv import delta_preset, make_solution
from .sequence import HorizonExhausted, SweepConfig, bisection_solve, solve_exact_k

EXIT_OK, EXIT_INPUT, EXIT_HORIZON = 0, 1, 2

BENCH_FIELDS = ["instance_id", "n", "m", "k", "method", "cost", "lower_bound",
                "certified_ratio", "wall_ms", "seed", "status"]


def cmd_gen(seed: int, n: int, dims: int, mixture_k: int, spread: float, out) -> None:
    if n < 1:
        raise BadInput("n must be at least 1")
    rng = np.random.default_rng(seed)
    pts = random_points(rng, n, dims, mixture_k, spread)
    write_points(out, pts)


AUTO_LEVELS = 500


def auto_eps_z(inst, k) -> float:
    """Step that reaches the bisection price for k in about AUTO_LEVELS levels."""
    res = bisection_solve(inst, k)
    return max(res.lam, 1e-9) / AUTO_LEVELS


def _eps_z_arg(text: str):
    if text == "auto":
        return text
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("eps-z must be positive or 'auto'")
    return value


def _solve(inst, k, mode, eps, eps_z, paper_faithful, trace, normalized=False):
    if mode == "sequence":
        if eps_z == "auto":
            eps_z = auto_eps_z(inst, k)
        cfg = SweepConfig(eps=eps, eps_z=eps_z, paper_faithful=paper_faithful)
        res = solve_exact_k(inst, k, cfg, trace=trace, normalized=normalized)
        return res.solution, res.certificate
    res = bisection_solve(inst, k)
    return res.solution, res.certificate


def cmd_solve(points, objective: str, k: int, mode: str = "sequence", eps: float = 0.1,
              eps_z: float = 1e-4, paper_faithful: bool = False, normalize: bool = False,
              trace=None, facilities=None, out_dir=".") -> dict:
    inst = load_instance(points, objective, k, facilities)
    work, rec = inst, None
    if normalize:
        work, rec = normalize_distances(inst)
    sol, cert = _solve(work, k, mode, eps, eps_z, paper_faithful, trace,
                       normalized=rec is not None and not rec.already_trivial)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol_json = sol.to_json()
    cert_json = cert.to_json()
    if rec is not None and not rec.already_trivial:
        opened = rec.to_original(sol.opened)
        orig = make_solution(inst, opened)
        sol_json = orig.to_json()
        cert_json["normalized_cost"] = cert.cost
        cert_json["cost"] = orig.cost
        cert_json["flags"].append("lower bound and ratios refer to the normalized instance")
    (out / "solution.json").write_text(json.dumps(sol_json, indent=1), encoding="utf-8")
    (out / "certificate.json").write_text(json.dumps(cert_json, indent=1), encoding="utf-8")
    (out / "dual.json").write_text(json.dumps(cert.dual_json(work), indent=1), encoding="utf-8")
    return {"solution": sol_json, "certificate": cert_json}


def cmd_certify(points, solution_path, objective: str, k: int, dual_path=None,
                facilities=None) -> dict:
    """Recompute cost (and, given a dual, feasibility and bounds) from raw files."""
    inst = load_instance(points, objective, k, facilities)
    sol_json = json.loads(Path(solution_path).read_text(encoding="utf-8"))
    opened = [int(i) for i in sol_json["opened"]]
    sol = make_solution(inst, opened)
    report = {"cost": sol.cost, "reported_cost": sol_json.get("cost"),
              "cost_matches": math.isclose(sol.cost, float(sol_json.get("cost", sol.cost)),
                                           rel_tol=1e-9, abs_tol=1e-12)}
    if dual_path is not None:
        dual_json = json.loads(Path(dual_path).read_text(encoding="utf-8"))
        alpha = np.array(dual_json["alpha"], dtype=float)
        lam = float(dual_json["lambda"])
        _, rho = delta_preset(inst.objective)
        cert = build_certificate(inst, alpha, lam, sol, k, rho)
        report["certificate"] = cert.to_json()
        report["min_slack"] = verify_dual_feasibility(alpha, lam, inst).min_slack
    return report


def _instance_files(directory) -> list[Path]:
    return sorted(p for p in Path(directory).glob("*.csv") if p.is_file())


def cmd_bench(directory, ks, methods, objective: str = "kmeans", eps: float = 0.1,
              eps_z="auto", seed: int = 0, out=None) -> list[dict]:
    rows = []
    for path in _instance_files(directory):
        for k in ks:
            pd_lb = None
            for method in methods:
                row = {"instance_id": path.stem, "k": k, "method": method, "seed": seed}
                t0 = time.perf_counter()
                try:
                    inst = load_instance(path, objective, k)
                    row.update(n=inst.n, m=inst.m)
                    if method == "kmeanspp-lloyd":
                        sol = kmeanspp_lloyd(inst, k, seed)
                        cost = sol.cost
                        lb = pd_lb
                        if lb is None:
                            lb = bisection_solve(inst, k).certificate.best_lower_bound
                    else:
                        mode = "sequence" if method == "pd-sequence" else "bisection"
                        sol, cert = _solve(inst, k, mode, eps, eps_z, False, None)
                        cost = sol.cost
                        lb = cert.best_lower_bound
                        pd_lb = lb if pd_lb is None else max(pd_lb, lb)
                    row.update(cost=cost, lower_bound=lb,
                               certified_ratio=(cost / lb if lb and lb > 0 else ""),
                               status="ok")
                except Exception as exc:  # recorded per row, the run continues
                    row.update(cost="", lower_bound="", certified_ratio="",
                               status=f"{type(exc).__name__}: {exc}")
                row["wall_ms"] = round(1000 * (time.perf_counter() - t0), 3)
                rows.append(row)
    if out is not None:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
            w.writeheader()
            for r in rows:
                w.writerow({f: r.get(f, "") for f in BENCH_FIELDS})
    return rows


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdcluster", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a Gaussian-mixture point cloud as CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--dims", type=int, default=2)
    g.add_argument("--mixture-k", type=int, default=3)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--out", default="-")

    def common(q):
        q.add_argument("points")
        q.add_argument("--objective", choices=[o.value for o in Objective], default="kmeans")
        q.add_argument("--k", type=int, required=True)
        q.add_argument("--facilities", default=None, help="explicit facility CSV")

    s = sub.add_parser("solve", help="open k centers and write solution/certificate JSON")
    common(s)
    s.add_argument("--mode", choices=["sequence", "bisection"], default="sequence")
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--eps-z", type=_eps_z_arg, default=1e-4,
                   help="sequence step (absolute, cost units) or 'auto'")
    s.add_argument("--paper-faithful", action="store_true")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--trace", default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", default=".")

    c = sub.add_parser("certify", help="re-verify a solution (and optional dual) from raw files")
    common(c)
    c.add_argument("--solution", required=True)
    c.add_argument("--dual", default=None)

    b = sub.add_parser("bench", help="compare solvers on a directory of CSV instances")
    b.add_argument("directory")
    b.add_argument("--k", default="3", help="comma-separated list")
    b.add_argument("--methods", default="pd-sequence,pd-bisection,kmeanspp-lloyd")
    b.add_argument("--objective", choices=[o.value for o in Objective], default="kmeans")
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("--eps-z", type=_eps_z_arg, default="auto")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="-")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            out = sys.stdout if args.out == "-" else args.out
            if out is sys.stdout:
                pts = random_points(np.random.default_rng(args.seed), args.n, args.dims,
                                    args.mixture_k, args.spread)
                for row in pts:
                    print(",".join("%.17g" % v for v in row))
            else:
                cmd_gen(args.seed, args.n, args.dims, args.mixture_k, args.spread, out)
        elif args.command == "solve":
            res = cmd_solve(args.points, args.objective, args.k, args.mode, args.eps,
                            args.eps_z, args.paper_faithful, args.normalize, args.trace,
                            args.facilities, args.out_dir)
            cert = res["certificate"]
            print(json.dumps({"cost": cert["cost"], "lower_bound": cert["best_lower_bound"],
                              "ratio": cert["ratio"], "feasible": cert["feasible"]}))
        elif args.command == "certify":
            print(json.dumps(cmd_certify(args.points, args.solution, args.objective, args.k,
                                         args.dual, args.facilities), indent=1))
        elif args.command == "bench":
            ks = [int(x) for x in args.k.split(",") if x.strip()]
            methods = [x.strip() for x in args.methods.split(",") if x.strip()]
            out = None if args.out == "-" else args.out
            rows = cmd_bench(args.directory, ks, methods, args.objective, args.eps, args.eps_z,
                             args.seed, out)
            if out is None:
                w = csv.DictWriter(sys.stdout, fieldnames=BENCH_FIELDS)
                w.writeheader()
                for r in rows:
                    w.writerow({f: r.get(f, "") for f in BENCH_FIELDS})
    except HorizonExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HORIZON
    except (BadInput, InvalidK, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
