"""Command line entry points: repl, serve, simulate, inspect, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent import (
    Agent,
    Answer,
    Apology,
    AskRephrase,
    AskSlot,
    AwaitOptionChoice,
    AwaitSideAnswer,
    AwaitSlot,
    ExecuteResult,
    Options,
)
from .commands import pattern_text
from .config import (
    CONFIG_ENV_VAR,
    DomainConfig,
    default_config_path,
    demo_config,
    load_config,
)
from .persistence import load_snapshot, restore_agent, save_snapshot
from .simulator import load_scenario, run_scenario


def _resolve_config(path: str | None) -> DomainConfig:
    path = path or default_config_path()
    if path is None:
        return demo_config()
    return load_config(path)


def _build_agent(config_path: str | None, snapshot_path: str | None) -> Agent:
    config = _resolve_config(config_path)
    if snapshot_path and Path(snapshot_path).exists():
        state = load_snapshot(snapshot_path)
        return restore_agent(
            state,
            kb_template=config.build_kb(),
            world=config.build_world(),
            settings=config.settings,
            relevance_keywords=config.relevance_keywords,
        )
    return config.build_agent()


# -- repl -------------------------------------------------------------------


def cmd_repl(args) -> int:
    agent = _build_agent(args.config, args.snapshot)
    session = agent.new_session(args.user)
    print(f"session {session.id} for {args.user}; /help for commands")
    while True:
        try:
            line = input("> ").strip()
        except (EOFError, KeyboardInterrupt):
            print()
            break
        if not line:
            continue
        if line == "/quit":
            break
        if line == "/help":
            print("/store  /facts  /save <path>  /quit")
            continue
        if line == "/store":
            for sc in agent.store:
                print(f"  [{sc.id}] {pattern_text(sc.pattern)} -> {sc.action_id}"
                      f" ({sc.provenance.kind})")
            continue
        if line == "/facts":
            for fact in agent.kb.facts:
                print(f"  [{fact.id}] {fact.text()} [{fact.status}]")
            continue
        if line.startswith("/save"):
            target = line.split(maxsplit=1)[1] if " " in line else "snapshot.jsonl"
            header = save_snapshot(agent, target)
            print(f"saved {header['counts']} to {target}")
            continue
        _repl_turn(agent, session, line)
    if args.snapshot:
        save_snapshot(agent, args.snapshot)
        print(f"state saved to {args.snapshot}")
    return 0


def _repl_turn(agent: Agent, session, line: str) -> None:
    phase = session.phase
    if isinstance(phase, AwaitOptionChoice):
        if line.lower() in ("none", "n"):
            reply = agent.on_option_choice(session, None)
        elif line.isdigit():
            reply = agent.on_option_choice(session, int(line))
        else:
            print("pick an option number or 'none'")
            return
    elif isinstance(phase, AwaitSlot):
        reply = agent.on_slot_answer(session, phase.pending[0], line)
    elif isinstance(phase, AwaitSideAnswer):
        if phase.side.kind == "verify":
            if line.lower() not in ("yes", "no"):
                print("please answer yes or no")
                return
            reply = agent.on_side_answer(session, vote=line.lower())
        else:
            reply = agent.on_side_answer(session, answer=line)
    else:
        reply = agent.utterance(session, line)
    _print_reply(reply)


def _print_reply(reply) -> None:
    if isinstance(reply, Options):
        print(reply.prompt)
        for i, option in enumerate(reply.options, start=1):
            print(f"  option-{i}. {option}")
        print("  (answer with a number or 'none')")
    elif isinstance(reply, AskSlot):
        print(reply.prompt)
    elif isinstance(reply, (AskRephrase, Apology, Answer, ExecuteResult)):
        print(reply.text)
        side = getattr(reply, "side", None)
        if side is not None:
            print(side.question)
    else:
        print(reply)


# -- serve ---------------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    agent = _build_agent(args.config, args.snapshot)
    app = create_app(agent, snapshot_path=args.snapshot, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- simulate ---------------------------------------------------------------------


def cmd_simulate(args) -> int:
    config = _resolve_config(args.config)
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario, config, master_seed=args.seed)
    text = result.metrics.to_jsonl()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(result.metrics.records)} episode records to {args.out}")
    else:
        sys.stdout.write(text)
    if args.snapshot_out:
        save_snapshot(result.agent, args.snapshot_out)
        print(f"final agent state saved to {args.snapshot_out}")
    rate = result.metrics.grounding_rate(window=50)
    print(f"first-try grounding rate (last 50 intents): {rate:.3f}", file=sys.stderr)
    return 0


# -- inspect ----------------------------------------------------------------------


def cmd_inspect(args) -> int:
    state = load_snapshot(args.snapshot)
    print(f"seed commands ({len(state.seed_commands)}):")
    for sc in state.seed_commands:
        elicit = f" elicit={sorted(sc.always_elicit)}" if sc.always_elicit else ""
        print(
            f"  [{sc.id:>3}] {pattern_text(sc.pattern):<45} -> {sc.action_id}"
            f" ({sc.provenance.kind}{elicit})"
        )
    print(f"facts ({len(state.facts)}):")
    for fact in state.facts:
        votes = f" +{len(fact.yes_voters)}/-{len(fact.no_voters)}"
        print(f"  [{fact.id:>3}] {fact.text():<45} [{fact.status}{votes}]")
    open_questions = [q for q in state.questions if q.status == "open"]
    print(f"open questions ({len(open_questions)}):")
    for q in open_questions:
        print(f"  [{q.id:>3}] {' '.join(q.question_tokens)}")
    print(f"metrics points: {len(state.metrics)}")
    return 0


# -- report --------------------------------------------------------------------------


def cmd_report(args) -> int:
    lines = Path(args.metrics).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    if header.get("formatVersion") != 1:
        print(f"unsupported metrics format: {header.get('formatVersion')}")
        return 1
    records = [json.loads(line) for line in lines[1:]]
    intents = [r for r in records if r["kind"] == "intent"]
    print(f"{len(records)} episodes ({len(intents)} intents), "
          f"seed {header.get('masterSeed')}")
    window = args.window
    print(f"{'episodes':>12}  {'grounded first try':>18}  {'questions':>9}  {'store':>5}")
    for start in range(0, len(intents), window):
        chunk = intents[start : start + window]
        rate = sum(1 for r in chunk if r["first_try"]) / len(chunk)
        questions = sum(r["questions"] for r in chunk)
        print(
            f"{start:>5}-{start + len(chunk) - 1:<6} {rate:>18.3f}  "
            f"{questions:>9}  {chunk[-1]['store_size']:>5}"
        )
    if args.plot:
        _write_plot(intents, args.plot, window)
        print(f"learning curve written to {args.plot}")
    return 0


def _write_plot(intents: list[dict], path: str, window: int) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; run pip install grounder[plot]", file=sys.stderr)
        raise SystemExit(1)
    rates = []
    for i in range(len(intents)):
        chunk = intents[max(0, i - window + 1) : i + 1]
        rates.append(sum(1 for r in chunk if r["first_try"]) / len(chunk))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(range(len(rates)), rates)
    ax.set_xlabel("intent episode")
    ax.set_ylabel(f"first-try grounding rate (window {window})")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path)


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grounder",
        description="Teachable natural-language command agent.",
        epilog=f"Set {CONFIG_ENV_VAR} to change the default domain config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    repl = sub.add_parser("repl", help="interactive terminal teaching loop")
    repl.add_argument("--config", help="domain config JSON (default: built-in demo)")
    repl.add_argument("--snapshot", help="load and save agent state here")
    repl.add_argument("--user", default="local", help="user id for this session")
    repl.set_defaults(func=cmd_repl)

    serve = sub.add_parser("serve", help="run the HTTP session API")
    serve.add_argument("--config", help="domain config JSON (default: built-in demo)")
    serve.add_argument("--snapshot", help="load and persist agent state here")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui", help="serve a built web client from this directory")
    serve.set_defaults(func=cmd_serve)

    simulate = sub.add_parser("simulate", help="run a scripted multi-user scenario")
    simulate.add_argument("--scenario", required=True)
    simulate.add_argument("--config", help="domain config JSON (default: built-in demo)")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", help="metrics JSONL output path")
    simulate.add_argument("--snapshot-out", help="save the final agent state here")
    simulate.set_defaults(func=cmd_simulate)

    inspect = sub.add_parser("inspect", help="print tables from a snapshot")
    inspect.add_argument("--snapshot", required=True)
    inspect.set_defaults(func=cmd_inspect)

    report = sub.add_parser("report", help="learning-curve table from metrics")
    report.add_argument("--metrics", required=True)
    report.add_argument("--window", type=int, default=20)
    report.add_argument("--plot", help="write a learning-curve plot to this file")
    report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
