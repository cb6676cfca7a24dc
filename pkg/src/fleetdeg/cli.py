"""Command-line interface.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .agents import load_checkpoint
from .cycles import dod_histogram, default_bin_edges, rainflow_offline
from .errors import DomainError, InfeasibleActionError, ValidationError
from .fleet import FleetConfig, count_feasible_pairs, count_state_action_pairs
from .harness.config import AgentSpec, load_config
from .harness.runner import (
    compare_policies,
    emit_histogram_csv,
    make_agent,
    run_experiment,
    train_agent,
    write_report_csv,
    write_trajectory_csv,
)
from .signal import RegulationAlphabet, fit_transition_matrix, ingest_trace, read_trace_csv, save_matrix

log = logging.getLogger("fleetdeg")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def split_agent_list(text: str) -> list[str]:
    """Split ``naive,greedy,elm:d=10,activation=relu`` into agent specs.

    A comma-separated item holding ``=`` but no ``:`` is an option of the previous agent.
    """
    items: list[str] = []
    for tok in (t.strip() for t in text.replace(";", ",").split(",")):
        if not tok:
            continue
        if "=" in tok and ":" not in tok and items:
            items[-1] += "," + tok
        else:
            items.append(tok)
    return items


def cmd_train(args) -> None:
    config = load_config(args.config)
    if config.agent.kind != "elm":
        raise ValidationError("train writes ELM checkpoints; set [agent] kind = elm")
    agent = make_agent(config.agent, config)
    info = train_agent(config, agent)
    agent.save(args.out)
    log.info("trained %d steps, %d updates -> %s", info["steps"], info["updates"], args.out)


def cmd_evaluate(args) -> None:
    config = load_config(args.config)
    agent = load_checkpoint(args.checkpoint, config.seeds.exploration)
    if agent.norm.p != 3 * config.fleet.n + 2:
        raise ValidationError("checkpoint does not match the configured fleet")
    report = run_experiment(config, config.agent, agent=agent)
    write_report_csv([report], args.out)
    if args.histogram:
        emit_histogram_csv(report, args.histogram)
    if args.trajectory or config.persist_trajectory:
        write_trajectory_csv(report, args.trajectory or Path(args.out).with_suffix(".trajectory.csv"))


def cmd_compare(args) -> None:
    config = load_config(args.config)
    specs = [AgentSpec.parse(text, config.agent) for text in split_agent_list(args.agents)]
    reports = compare_policies(config, specs, jobs=args.jobs)
    write_report_csv(reports, args.out)
    if args.histogram_dir:
        out = Path(args.histogram_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            emit_histogram_csv(r, out / f"{r.agent}_hist.csv")
            if config.persist_trajectory:
                write_trajectory_csv(r, out / f"{r.agent}_trajectory.csv")


def cmd_rainflow(args) -> None:
    with open(args.trace, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "soc" not in reader.fieldnames:
            raise ValidationError(f"{args.trace}: expected columns t,soc")
        try:
            socs = [int(row["soc"]) for row in reader]
        except ValueError as exc:
            raise ValidationError(f"{args.trace}: {exc}") from None
    if any(not 0 <= s <= args.capacity for s in socs):
        raise ValidationError(f"SoC values must lie in [0, {args.capacity}]")
    ledger = rainflow_offline(socs, args.capacity, residual_half_weight=args.half_weight)
    with open(args.ledger, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["completed_at", "kind", "depth"])
        for rec in ledger.records:
            w.writerow([rec.completed_at, rec.kind, repr(rec.depth)])
    if args.histogram:
        edges = default_bin_edges(args.bins)
        counts, overflow = dod_histogram(ledger, edges)
        if overflow:
            log.warning("%s cycle mass fell outside the histogram bins", overflow)
        with open(args.histogram, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(c))])


def cmd_enumerate(args) -> None:
    if args.config:
        config = load_config(args.config)
        fleet, alphabet = config.fleet, config.env_config().alphabet
    else:
        if args.capacity is None or args.max_charge is None:
            raise ValidationError("give --config or both --capacity and --max-charge")
        fleet = FleetConfig.from_lists(args.capacity, args.max_charge, args.max_discharge)
        alphabet = RegulationAlphabet.of(args.alphabet)
    if args.feasible:
        print(count_feasible_pairs(fleet, alphabet))
    else:
        print(count_state_action_pairs(fleet, alphabet))


def cmd_fit_signal(args) -> None:
    raw = read_trace_csv(args.trace)
    trace = ingest_trace(raw, args.capacity, args.resolution)
    if trace.clamped:
        log.warning("%d samples outside [-1, 1] were clamped", trace.clamped)
    model = fit_transition_matrix(trace)
    save_matrix(model, args.out)
    log.info("fitted %d-state chain from %d samples -> %s", len(model.alphabet), len(trace), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fleetdeg", description="Degradation-aware battery fleet dispatch.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("train", help="train an ELM agent and write a checkpoint")
    s.add_argument("config")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="evaluate a checkpoint and write a report CSV")
    s.add_argument("config")
    s.add_argument("checkpoint")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--histogram")
    s.add_argument("--trajectory")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("compare", help="compare several agents on one signal realization")
    s.add_argument("config")
    s.add_argument("--agents", default="naive,greedy,elm",
                   help="comma-separated agents, e.g. 'naive,greedy,elm:d=10'")
    s.add_argument("-o", "--out", required=True)
    s.add_argument("--histogram-dir")
    s.add_argument("-j", "--jobs", type=int, default=1)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("rainflow", help="rainflow-count an SoC trace CSV (columns t,soc)")
    s.add_argument("trace")
    s.add_argument("--capacity", type=int, required=True)
    s.add_argument("--ledger", required=True)
    s.add_argument("--histogram")
    s.add_argument("--bins", type=int, default=10)
    s.add_argument("--half-weight", type=float, default=0.5)
    s.set_defaults(func=cmd_rainflow)

    s = sub.add_parser("enumerate", help="count state-action pairs of a fleet")
    s.add_argument("--config")
    s.add_argument("--capacity", type=_int_list)
    s.add_argument("--max-charge", type=_int_list)
    s.add_argument("--max-discharge", type=_int_list)
    s.add_argument("--alphabet", type=_int_list, default=[-4, -1, 1, 5])
    s.add_argument("--feasible", action="store_true",
                   help="count only admissible pairs, summed over SoC and regulation values")
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("fit-signal", help="fit a Markov transition matrix to a regulation trace")
    s.add_argument("trace")
    s.add_argument("--capacity", type=int, default=10)
    s.add_argument("--resolution", default="0.1")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_fit_signal)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValidationError, DomainError, InfeasibleActionError) as exc:
        print(f"fleetdeg: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"fleetdeg: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
