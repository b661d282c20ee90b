"""Command-line front end.

One executable, seven subcommands:

  simulate   run a mechanism on an instance; outcome JSON, optional trace CSV
  settle     run truthfully and price the winners; outcome JSON with payments
  opt        offline optimum of an instance; welfare plus witness schedule CSV
  adversary  emit a lower-bound construction (instance JSON + prediction)
  ratio      measure competitive ratios; CSV rows, optional parameter sweep
  check      truthfulness / monotonicity / invariant suites; JSON report
  fuzz       emit seeded random instances

Exit codes: 0 success, 1 anything wrong with the inputs (bad flags, bad
JSON, validation or guard failures), 2 a check found real violations.
All randomness flows from --seed; CLOUDAUCTION_LOG={off,info,debug}
controls diagnostics on stderr and never touches stdout.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .adversarial import FAMILIES, AdversarialInstance
from .engine import run
from .harness import (
    check_dsic,
    check_invariants,
    check_monotone,
    competitive_ratio,
    fuzz_instances,
    measure,
)
from .mechanisms import DPMechanism, GreedyMechanism
from .model import (
    GuardError,
    Instance,
    ValidationError,
    instance_from_dict,
    instance_to_dict,
    instance_to_json,
    outcome_to_dict,
    validate_instance,
)
from .oracle import offline_opt
from .payments import settle
from .priority import parse_priority_spec

log = logging.getLogger("cloudauction.cli")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; here 2 means "violations found",
    so command-line problems are folded into the validation exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _configure_logging() -> None:
    level = {"info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("CLOUDAUCTION_LOG", "off").strip().lower()
    )
    if level is None:
        logging.disable(logging.CRITICAL)
        return
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_instance_doc(path: str) -> tuple[Instance, dict | None]:
    """Read an instance file, accepting either the bare instance format or
    the combined {"instance":…, "prediction":…} document adversary pipes."""
    text = _read_text(path)
    obj = json.loads(text)
    prediction = None
    if isinstance(obj, dict) and "instance" in obj:
        prediction = obj.get("prediction")
        obj = obj["instance"]
    instance = instance_from_dict(obj)
    problems = validate_instance(instance)
    if problems:
        raise ValidationError(
            f"invalid instance ({len(problems)} problems); first: {problems[0]}"
        )
    return instance, prediction


def _build_mechanism(name: str, priority_spec: str | None, chi: float | None, kappa: int):
    if name == "dp":
        return DPMechanism(chi=2.0 if chi is None else chi)
    if name == "greedy":
        return GreedyMechanism(parse_priority_spec(priority_spec or "exp:2.0", kappa))
    raise ValidationError(f"unknown mechanism {name!r}: expected greedy or dp")


def _add_mechanism_flags(sub) -> None:
    sub.add_argument("--mechanism", default="greedy", choices=("greedy", "dp"))
    sub.add_argument(
        "--priority",
        default=None,
        help="greedy priority spec: exp:CHI, lin:A, exp-opt, lin-opt (default exp:2.0)",
    )
    sub.add_argument("--chi", type=float, default=None, help="dp priority base")


def _prediction_dict(adv: AdversarialInstance) -> dict:
    return {
        "family": adv.family,
        "parameters": {k: adv.parameters[k] for k in sorted(adv.parameters)},
        "predicted_opt": adv.predicted_opt,
        "predicted_mech_welfare": adv.predicted_mech_welfare,
        "predicted_mech_winners": sorted(adv.predicted_mech_winners),
        "asymptotic_ratio": adv.asymptotic_ratio,
    }


def _generate(args) -> AdversarialInstance:
    generator = FAMILIES[args.family]
    supplied = {
        "h": args.h,
        "n_max": args.n_max,
        "kappa": args.kappa,
        "chi": args.chi,
        "p": args.p,
        "eps": args.eps,
        "delta": args.delta,
        "mu": args.mu,
        "C": args.capacity,
        "a": args.a,
    }
    accepted = set(inspect.signature(generator).parameters)
    kwargs = {k: v for k, v in supplied.items() if k in accepted and v is not None}
    if args.family == "general":
        if args.priority is None:
            raise ValidationError("--family general requires --priority")
        kwargs["f"] = parse_priority_spec(args.priority, args.kappa or 1)
    if args.family == "linear" and "a" not in kwargs:
        raise ValidationError("--family linear requires --a")
    rejected = [
        k for k, v in supplied.items() if v is not None and k not in accepted
    ]
    if rejected:
        raise ValidationError(
            f"family {args.family!r} does not take: {', '.join(sorted(rejected))}"
        )
    return generator(**kwargs)


def _add_family_flags(sub, *, require_family: bool) -> None:
    sub.add_argument(
        "--family", choices=sorted(FAMILIES), required=require_family, default=None
    )
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--kappa", type=int, default=None)
    sub.add_argument("--chi", type=float, default=None)
    sub.add_argument("--h", type=int, default=None)
    sub.add_argument("--n-max", dest="n_max", type=int, default=None)
    sub.add_argument("--capacity", type=int, default=None, help="C for family nmaxC")
    sub.add_argument("--a", type=float, default=None, help="slope for family linear")
    sub.add_argument(
        "--priority", default=None, help="boost spec for family general"
    )
    sub.add_argument("--eps", type=float, default=None)
    sub.add_argument("--delta", type=float, default=None)
    sub.add_argument("--mu", type=float, default=None)


def _cmd_simulate(args) -> int:
    instance, _ = _load_instance_doc(args.instance)
    mechanism = _build_mechanism(args.mechanism, args.priority, args.chi, instance.kappa)
    started = time.perf_counter()
    trace, outcome = run(
        instance, mechanism, reallocate_on_completion=args.reallocate
    )
    log.info(
        "simulate: %d jobs, welfare %g, %.3fs",
        len(instance.jobs), outcome.welfare, time.perf_counter() - started,
    )
    if args.trace is not None:
        _write_text(args.trace, trace.to_csv())
    _write_text(args.outcome, json.dumps(outcome_to_dict(outcome), indent=2) + "\n")
    return 0


def _cmd_settle(args) -> int:
    instance, _ = _load_instance_doc(args.instance)
    mechanism = _build_mechanism(args.mechanism, args.priority, args.chi, instance.kappa)
    outcome = settle(
        instance,
        mechanism,
        payment_rule=args.rule,
        rel_tol=args.rel_tol,
        jobs=args.jobs,
    )
    _write_text(args.outcome, json.dumps(outcome_to_dict(outcome), indent=2) + "\n")
    return 0


def _cmd_opt(args) -> int:
    instance, _ = _load_instance_doc(args.instance)
    started = time.perf_counter()
    welfare, schedule = offline_opt(instance, grid=args.grid)
    log.info(
        "opt: %d jobs, welfare %g, %.3fs",
        len(instance.jobs), welfare, time.perf_counter() - started,
    )
    out = io.StringIO()
    out.write(f"welfare,{welfare!r}\n")
    out.write("job_id,start\n")
    for job_id, start in schedule:
        out.write(f"{job_id},{start!r}\n")
    _write_text(args.out, out.getvalue())
    return 0


def _cmd_adversary(args) -> int:
    adv = _generate(args)
    problems = validate_instance(adv.instance)
    if problems:
        raise ValidationError(f"generator produced an invalid instance: {problems[0]}")
    prediction = json.dumps(_prediction_dict(adv), indent=2) + "\n"
    if args.out is None:
        combined = {
            "instance": instance_to_dict(adv.instance),
            "prediction": _prediction_dict(adv),
        }
        sys.stdout.write(json.dumps(combined, indent=2) + "\n")
    else:
        out = Path(args.out)
        out.write_text(instance_to_json(adv.instance))
        sidecar = out.with_suffix(".pred.json")
        sidecar.write_text(prediction)
        log.info("adversary: wrote %s and %s", out, sidecar)
    return 0


def _parse_sweep(spec: str) -> tuple[str, list]:
    key, _, rest = spec.partition("=")
    key = key.strip()
    if not rest:
        raise ValidationError(f"bad sweep spec {spec!r}: expected KEY=V1,V2,...")
    raw = [piece.strip() for piece in rest.split(",") if piece.strip()]
    if not raw:
        raise ValidationError(f"bad sweep spec {spec!r}: no values")
    if key in ("p", "h", "n_max", "kappa", "capacity"):
        return key, [int(v) for v in raw]
    return key, [float(v) for v in raw]


def _ratio_csv(rows: list[dict], param_keys: list[str]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["family", *param_keys, "p", "ratio", "asymptotic_ratio"])
    for row in rows:
        params = row["parameters"]
        writer.writerow(
            [
                row["family"],
                *[_csv_number(params.get(k, "")) for k in param_keys],
                _csv_number(row.get("p", "")),
                _csv_number(row["ratio"]),
                _csv_number(row.get("asymptotic_ratio", "")),
            ]
        )
    return out.getvalue()


def _csv_number(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _cmd_ratio(args) -> int:
    rows: list[dict] = []
    if args.family is None:
        path = args.instance if args.instance is not None else "-"
        instance, prediction = _load_instance_doc(path)
        if prediction is not None:
            parameters = dict(prediction["parameters"])
            if prediction["family"] == "general" and args.priority is None:
                raise ValidationError(
                    "a general-family prediction only records f(1); pass the "
                    "original --priority spec to measure it"
                )
            adv_like = AdversarialInstance(
                instance=instance,
                predicted_opt=float(prediction["predicted_opt"]),
                predicted_mech_welfare=float(prediction["predicted_mech_welfare"]),
                predicted_mech_winners=frozenset(
                    prediction["predicted_mech_winners"]
                ),
                asymptotic_ratio=float(prediction["asymptotic_ratio"]),
                family=prediction["family"],
                parameters=parameters,
                priority=(
                    parse_priority_spec(args.priority, instance.kappa)
                    if args.priority is not None
                    else None
                ),
            )
            ratio, w, opt_value = measure(adv_like)
            rows.append(
                {
                    "family": adv_like.family,
                    "parameters": parameters,
                    "p": parameters.get("p", ""),
                    "ratio": ratio,
                    "asymptotic_ratio": adv_like.asymptotic_ratio,
                }
            )
            param_keys = sorted(k for k in parameters if k != "p")
        else:
            mechanism = _build_mechanism(
                args.mechanism, args.priority, args.chi, instance.kappa
            )
            ratio, w, opt_value = competitive_ratio(instance, mechanism)
            rows.append(
                {"family": "custom", "parameters": {}, "p": "", "ratio": ratio}
            )
            param_keys = []
        log.info("ratio: W=%g OPT=%g ratio=%g", w, opt_value, ratio)
    else:
        sweeps: list[tuple[str, object]] = [("", None)]
        if args.sweep is not None:
            key, values = _parse_sweep(args.sweep)
            sweeps = [(key, v) for v in values]
        param_keys = None
        for key, value in sweeps:
            if key:
                setattr(args, "capacity" if key == "capacity" else key, value)
            adv = _generate(args)
            ratio, w, opt_value = measure(adv)
            log.info(
                "ratio: family=%s %s ratio=%g (asymptotic %g)",
                adv.family,
                f"{key}={value}" if key else "",
                ratio,
                adv.asymptotic_ratio,
            )
            if param_keys is None:
                param_keys = sorted(k for k in adv.parameters if k != "p")
            rows.append(
                {
                    "family": adv.family,
                    "parameters": adv.parameters,
                    "p": adv.parameters.get("p", ""),
                    "ratio": ratio,
                    "asymptotic_ratio": adv.asymptotic_ratio,
                }
            )
    _write_text(args.out, _ratio_csv(rows, param_keys or []))
    return 0


def _cmd_check(args) -> int:
    if args.instance is not None:
        sources = [_load_instance_doc(args.instance)[0]]
    else:
        sources = list(fuzz_instances(args.fuzz, args.seed))

    def run_one(index_instance):
        index, instance = index_instance
        mechanism = _build_mechanism(
            args.mechanism, args.priority, args.chi, instance.kappa
        )
        seed = args.seed * 1_000_003 + index
        if args.kind == "dsic":
            return check_dsic(
                instance, mechanism, args.samples, seed,
                payment_rule=args.payment_rule,
            )
        if args.kind == "monotone":
            return check_monotone(instance, mechanism, args.samples, seed)
        return check_invariants(instance, mechanism)

    started = time.perf_counter()
    work = list(enumerate(sources))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(run_one, work))
    else:
        reports = [run_one(item) for item in work]

    violations = []
    for index, report in enumerate(reports):
        for v in report.violations:
            violations.append(
                {
                    "instance": index,
                    "job_id": v.job_id,
                    "kind": v.kind,
                    "detail": v.detail,
                }
            )
    document = {
        "kind": args.kind,
        "mechanism": args.mechanism,
        "instances": len(sources),
        "samples_per_instance": args.samples,
        "violation_count": len(violations),
        "violations": violations,
    }
    log.info(
        "check %s: %d instances, %d violations, %.3fs",
        args.kind, len(sources), len(violations), time.perf_counter() - started,
    )
    _write_text(args.report, json.dumps(document, indent=2) + "\n")
    return 2 if violations else 0


def _cmd_fuzz(args) -> int:
    instances = list(
        fuzz_instances(
            args.count,
            args.seed,
            jobs_range=(args.min_jobs, args.max_jobs),
            capacity_range=(args.min_capacity, args.max_capacity),
            kappa=args.kappa,
            grid=args.grid,
        )
    )
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, instance in enumerate(instances):
            (out_dir / f"instance_{i:04d}.json").write_text(
                instance_to_json(instance)
            )
        log.info("fuzz: wrote %d instances to %s", len(instances), out_dir)
    else:
        payload = [instance_to_dict(instance) for instance in instances]
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cloudauction", description=__doc__.split("\n")[0])
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="run a mechanism on an instance")
    sim.add_argument("--instance", required=True, help="instance JSON path or -")
    _add_mechanism_flags(sim)
    sim.add_argument(
        "--reallocate",
        action="store_true",
        help="also reselect at completion times, not just arrivals",
    )
    sim.add_argument("--trace", default=None, help="trace CSV path or - (optional)")
    sim.add_argument("--outcome", default="-", help="outcome JSON path or -")
    sim.set_defaults(fn=_cmd_simulate)

    st = commands.add_parser("settle", help="run truthfully and price winners")
    st.add_argument("--instance", required=True)
    _add_mechanism_flags(st)
    st.add_argument("--rule", default="critical", choices=("critical", "bid"))
    st.add_argument("--rel-tol", dest="rel_tol", type=float, default=1e-6)
    st.add_argument("--jobs", type=int, default=1, help="parallel pricing replays")
    st.add_argument("--outcome", default="-")
    st.set_defaults(fn=_cmd_settle)

    op = commands.add_parser("opt", help="offline optimum")
    op.add_argument("--instance", required=True)
    op.add_argument("--grid", type=float, default=None, help="explicit time grid")
    op.add_argument("--out", default="-")
    op.set_defaults(fn=_cmd_opt)

    ad = commands.add_parser("adversary", help="emit a lower-bound construction")
    _add_family_flags(ad, require_family=True)
    ad.add_argument(
        "--out",
        default=None,
        help="instance JSON path; prediction goes to the .pred.json sidecar "
        "(default: combined JSON on stdout)",
    )
    ad.set_defaults(fn=_cmd_adversary)

    ra = commands.add_parser("ratio", help="measure competitive ratios as CSV")
    _add_family_flags(ra, require_family=False)
    ra.add_argument(
        "--sweep", default=None, help="KEY=V1,V2,... regenerate per value (e.g. p=4,6,8)"
    )
    ra.add_argument(
        "--instance",
        default=None,
        help="measure one instance file instead of generating (default - when piped)",
    )
    ra.add_argument("--mechanism", default="greedy", choices=("greedy", "dp"))
    ra.add_argument("--out", default="-")
    ra.set_defaults(fn=_cmd_ratio)

    ck = commands.add_parser("check", help="property suites; exit 2 on violations")
    what = ck.add_mutually_exclusive_group(required=True)
    what.add_argument("--dsic", dest="kind", action="store_const", const="dsic")
    what.add_argument(
        "--monotone", dest="kind", action="store_const", const="monotone"
    )
    what.add_argument(
        "--invariants", dest="kind", action="store_const", const="invariants"
    )
    source = ck.add_mutually_exclusive_group(required=True)
    source.add_argument("--instance", default=None)
    source.add_argument(
        "--fuzz", type=int, default=None, help="check N fuzzed instances"
    )
    _add_mechanism_flags(ck)
    ck.add_argument("--samples", type=int, default=1000, help="deviations per instance")
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument(
        "--payment-rule",
        dest="payment_rule",
        default="critical",
        choices=("critical", "bid"),
        help="bid is the pay-your-bid negative control",
    )
    ck.add_argument("--jobs", type=int, default=1, help="parallel instance checks")
    ck.add_argument("--report", default="-", help="JSON report path or -")
    ck.set_defaults(fn=_cmd_check)

    fz = commands.add_parser("fuzz", help="emit seeded random instances")
    fz.add_argument("--count", type=int, required=True)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--min-jobs", type=int, default=1)
    fz.add_argument("--max-jobs", type=int, default=10)
    fz.add_argument("--min-capacity", type=int, default=1)
    fz.add_argument("--max-capacity", type=int, default=6)
    fz.add_argument("--kappa", type=float, default=2.0)
    fz.add_argument("--grid", type=float, default=0.25)
    fz.add_argument(
        "--out-dir", default=None, help="write one JSON file per instance"
    )
    fz.set_defaults(fn=_cmd_fuzz)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except json.JSONDecodeError as exc:
        print(
            f"error: malformed JSON at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}",
            file=sys.stderr,
        )
        return 1
    except (ValidationError, GuardError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
