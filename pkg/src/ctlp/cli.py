"""Command line interface: ``ctlp solve|converge|perturb|replay``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .disc import FiniteLP, assemble_primal
from .errors import CLPError
from .io import load_instance
from .pipeline import run_convergence, run_perturbation, run_solve
from .simplex import solve


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _write(path, text: str):
    if path:
        Path(path).write_text(text)


def cmd_solve(args) -> int:
    inst = load_instance(args.file)
    rep = run_solve(inst, args.mesh, args.kappa, args.epsilon, args.grid, args.rate)
    print(rep.text())
    _write(args.report, rep.to_csv())
    if args.dump_lp:
        Path(args.dump_lp).write_text(json.dumps({"primal": assemble_primal(rep.data).to_dict()}))
    return 0 if rep.passed else 1


def cmd_converge(args) -> int:
    inst = load_instance(args.file)
    rep = run_convergence(inst, args.meshes, args.kappa, args.grid, args.rate)
    print(rep.text())
    _write(args.report, rep.to_csv())
    return 0 if rep.passed else 1


def cmd_perturb(args) -> int:
    inst = load_instance(args.file)
    table = run_perturbation(inst, args.mesh, args.epsilons, args.kappa)
    text = table.to_csv()
    print(text, end="")
    print(f"monotone: {'yes' if table.monotone else 'NO'}")
    _write(args.report, text)
    return 0 if table.monotone else 1


def cmd_replay(args) -> int:
    data = json.loads(Path(args.file).read_text())
    lp = FiniteLP.from_dict(data.get("primal", data))
    sol = solve(lp)
    print(f"status {sol.status}")
    if sol.optimal:
        print(f"objective {sol.objective!r}")
        print(f"iterations {sol.iterations}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctlp", description="Discretize, solve and verify continuous-time linear programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mesh=True):
        p.add_argument("file", help="instance JSON file")
        if mesh:
            p.add_argument("--mesh", type=int, default=64, help="number of intervals N (default 64)")
        p.add_argument("--kappa", type=float, default=2.0, help="mesh-norm constant (default 2)")
        p.add_argument("--report", help="write a CSV report here")

    s = sub.add_parser("solve", help="solve one discretization and verify it")
    common(s)
    s.add_argument("--epsilon", type=float, default=0.0, help="shift c by this amount")
    s.add_argument("--grid", type=int, default=8, help="check points per interval (default 8)")
    s.add_argument("--rate", choices=("nu", "eta"), default="nu", help="rate constant of the dual bounding curve")
    s.add_argument("--dump-lp", help="write the primal LP as sparse-triplet JSON")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("converge", help="convergence study over several mesh sizes")
    common(c, mesh=False)
    c.add_argument("--meshes", type=_ints, default=[10, 20, 40, 80])
    c.add_argument("--grid", type=int, default=8)
    c.add_argument("--rate", choices=("nu", "eta"), default="nu")
    c.set_defaults(func=cmd_converge)

    p = sub.add_parser("perturb", help="optimal values of the perturbed discretizations")
    common(p)
    p.add_argument("--epsilons", type=_floats, default=[0.0, 0.1, 0.5, 1.0])
    p.set_defaults(func=cmd_perturb)

    r = sub.add_parser("replay", help="re-solve an LP written by --dump-lp")
    r.add_argument("file")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CLPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
