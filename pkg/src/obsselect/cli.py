"""Command-line front end.

Subcommands: gen (write a random instance), solve (run the compiled solver),
exact (brute-force optimum), eval (exact reward of a given subset), compare
(epsilon sweep with the gap-vs-bound check). Exit codes: 0 success, 1 input,
guard, or bound failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from . import boolean, gaussian, oracle
from .generate import generate_instance
from .model import BOOLEAN, GAUSSIAN, Instance, InstanceError, parse_instance, serialize_instance
from .profiles import Plan, plan_from_counts, plan_time
from .solution import FORMAT_VERSION, Solution

BOUND_SLACK = 1e-9
CSV_COLUMNS = ("epsilon", "predicted_reward", "exact_reward", "optimum",
               "gap", "bound", "table_cells_root", "solver_millis")


class CliError(Exception):
    """Input-level failure: exit code 1."""


def _write_output(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_instance(path: str) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    return parse_instance(text)


def _parse_pair(text: str, name: str, cast):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"{name} expects two comma-separated values")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_subset(text: str) -> Plan:
    counts: dict[int, int] = {}
    if text.strip():
        for token in text.split(","):
            try:
                nid = int(token)
            except ValueError as exc:
                raise CliError(f"bad subset entry {token!r}") from exc
            counts[nid] = counts.get(nid, 0) + 1
    return plan_from_counts(counts)


def _float_repr(v: float) -> str:
    return repr(float(v))


def cmd_gen(args) -> int:
    try:
        inst = generate_instance(
            kind=args.kind,
            n=args.nodes,
            branching=args.branching,
            seed=args.seed,
            cost_range=args.cost_range,
            budget_fraction=args.budget_fraction,
            max_obs_per_node=args.max_obs,
            zeta_max=args.zeta_max if args.zeta_max is not None else 0.0,
            reward_range=args.reward_range,
            knapsack=args.knapsack,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    _write_output(serialize_instance(inst), args.output)
    return 0


def _solve_dispatch(inst: Instance, args) -> Solution:
    explicit = [args.eps_p, args.eps_f, args.eps_g, args.eps_r]
    has_explicit = any(v is not None for v in explicit)
    if (args.epsilon is None) == (not has_explicit):
        raise UsageError("give either --epsilon or the explicit --eps-* steps")
    if inst.kind == BOOLEAN:
        if args.epsilon is not None:
            return boolean.solve(inst, epsilon=args.epsilon, threads=args.threads)
        if None in (args.eps_p, args.eps_f, args.eps_g, args.eps_r):
            raise UsageError("boolean instances need --eps-p, --eps-f, --eps-g and --eps-r")
        grids = boolean.BooleanGrids.from_steps(args.eps_p, args.eps_f, args.eps_g, args.eps_r)
        return boolean.solve(inst, grids=grids, threads=args.threads)
    if args.eps_g is not None:
        raise UsageError("--eps-g does not apply to gaussian instances")
    if args.epsilon is not None:
        return gaussian.solve(inst, epsilon=args.epsilon, threads=args.threads)
    if None in (args.eps_p, args.eps_f, args.eps_r):
        raise UsageError("gaussian instances need --eps-p, --eps-f and --eps-r")
    grids = gaussian.GaussianGrids.from_steps(
        args.eps_p, args.eps_f, args.eps_r, inst.reward_range
    )
    return gaussian.solve(inst, grids=grids, threads=args.threads)


class UsageError(Exception):
    """Bad flag combination: exit code 2."""


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    sol = _solve_dispatch(inst, args)
    if args.exact_eval:
        sol.exact_reward = oracle.eval_exact(inst, sol.subset).exact_reward
    _write_output(sol.to_json(), args.output)
    print(f"solved in {sol.solver_millis} ms", file=sys.stderr)
    return 0


def cmd_exact(args) -> int:
    inst = _read_instance(args.instance)
    best = oracle.brute_force_optimum(inst)
    sol = Solution(
        kind=inst.kind,
        subset=best.plan,
        time_used=best.time,
        predicted_reward=best.exact_reward,
        delta_u_bound=0.0,
        grids_used={},
        exact_reward=best.exact_reward,
    )
    _write_output(sol.to_json(), args.output)
    return 0


def cmd_eval(args) -> int:
    inst = _read_instance(args.instance)
    plan = _parse_subset(args.subset)
    for nid, m in plan:
        if not 1 <= nid <= inst.n:
            raise CliError(f"subset references unknown node {nid}")
        if not inst.node(nid).measurable:
            raise CliError(f"subset references non-measurable node {nid}")
        if m > inst.max_obs_per_node:
            raise CliError(f"subset exceeds max_obs_per_node at node {nid}")
    time_used = plan_time(plan, {nd.id: nd.cost for nd in inst.nodes})
    if time_used > inst.budget:
        raise CliError(f"budget exceeded: subset costs {time_used} > {inst.budget}")
    ev = oracle.eval_exact(inst, plan)
    doc = {
        "format_version": FORMAT_VERSION,
        "subset": [[nid, m] for nid, m in ev.plan],
        "time": ev.time,
        "exact_reward": ev.exact_reward,
    }
    _write_output(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_compare(args) -> int:
    inst = _read_instance(args.instance)
    try:
        eps_list = [float(tok) for tok in args.epsilon_list.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --epsilon-list: {exc}") from exc
    if not eps_list:
        raise UsageError("--epsilon-list is empty")

    optimum = oracle.brute_force_optimum(inst).exact_reward
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    violations = []
    for eps in eps_list:
        if inst.kind == BOOLEAN:
            sol = boolean.solve(inst, epsilon=eps, threads=args.threads)
        else:
            sol = gaussian.solve(inst, epsilon=eps, threads=args.threads)
        exact = oracle.eval_exact(inst, sol.subset).exact_reward
        gap = optimum - exact
        row = (
            _float_repr(eps),
            _float_repr(sol.predicted_reward),
            _float_repr(exact),
            _float_repr(optimum),
            _float_repr(gap),
            _float_repr(sol.delta_u_bound),
            str(sol.root_table_entries),
            str(sol.solver_millis),
        )
        out.write(",".join(row) + "\n")
        if gap > sol.delta_u_bound + BOUND_SLACK:
            violations.append((eps, gap, sol.delta_u_bound))
    _write_output(out.getvalue(), args.output)
    if violations:
        for eps, gap, bound in violations:
            print(f"bound violated at epsilon={eps}: gap {gap} > bound {bound}",
                  file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsselect",
        description="Budgeted observation subset selection on tree-shaped Bayesian networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--kind", choices=(BOOLEAN, GAUSSIAN), required=True)
    p_gen.add_argument("--nodes", type=int, required=True)
    p_gen.add_argument("--branching", type=int, default=2)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--cost-range", default=(1, 8),
                       type=lambda s: _parse_pair(s, "--cost-range", int))
    p_gen.add_argument("--budget-fraction", type=float, default=0.5)
    p_gen.add_argument("--max-obs", type=int, default=1)
    p_gen.add_argument("--zeta-max", type=float, default=None)
    p_gen.add_argument("--reward-range", default=None,
                       type=lambda s: _parse_pair(s, "--reward-range", float))
    p_gen.add_argument("--knapsack", action="store_true")
    p_gen.add_argument("-o", "--output", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="run the compiled solver")
    p_solve.add_argument("instance")
    p_solve.add_argument("--epsilon", type=float, default=None)
    p_solve.add_argument("--eps-p", type=float, default=None)
    p_solve.add_argument("--eps-f", type=float, default=None)
    p_solve.add_argument("--eps-g", type=float, default=None)
    p_solve.add_argument("--eps-r", type=float, default=None)
    p_solve.add_argument("--exact-eval", action="store_true")
    p_solve.add_argument("--threads", type=int, default=1)
    p_solve.add_argument("-o", "--output", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_exact = sub.add_parser("exact", help="brute-force optimum")
    p_exact.add_argument("instance")
    p_exact.add_argument("-o", "--output", default=None)
    p_exact.set_defaults(func=cmd_exact)

    p_eval = sub.add_parser("eval", help="exact reward of a given subset")
    p_eval.add_argument("instance")
    p_eval.add_argument("--subset", default="",
                        help="comma-separated node ids; repetition means multiplicity")
    p_eval.add_argument("-o", "--output", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="epsilon sweep CSV with bound check")
    p_cmp.add_argument("instance")
    p_cmp.add_argument("--epsilon-list", required=True)
    p_cmp.add_argument("--threads", type=int, default=1)
    p_cmp.add_argument("-o", "--output", default=None)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    if getattr(args, "nodes", None) is not None and args.nodes < 1:
        print("error: --nodes must be >= 1", file=sys.stderr)
        return 2
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (CliError, InstanceError, oracle.GuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
