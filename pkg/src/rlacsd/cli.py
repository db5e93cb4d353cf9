"""Command-line interface.

Subcommands: plan, seed, sample, audit (init|round|enter|finalize|status),
figures, case-study, convert-csd, serve.  Validation failures exit with
status 2 and a machine-readable JSON error on stderr; ``--format json``
switches stdout to structured output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import model, studies
from .engine import (
    AuditConfig,
    Interpretation,
    audit_status,
    finalize_round,
    plan_round,
    record_interpretation,
)
from .errors import AuditError
from .formulas import GAMMA_DEFAULT, S4Params, s4_sample_size
from .sampling import assign_numbers, assignment_to_csv, consistent_sample, retrieval_list
from .session import Session, real_str


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit(args, payload: dict, human: str) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def cmd_plan(args) -> int:
    params = S4Params(alpha=args.alpha, gamma=args.gamma, overstatement_rate=args.rate)
    n = s4_sample_size(params, args.margin)
    _emit(args, {"sample_size": n, "alpha": args.alpha, "margin": args.margin,
                 "rate": args.rate, "gamma": args.gamma}, str(n))
    return 0


def cmd_seed(args) -> int:
    if not args.value.isdigit():
        raise AuditError("seed must be a decimal digit string")
    payload = {"seed": args.value}
    _write(args.out, json.dumps(payload, sort_keys=True) + "\n")
    _emit(args, {**payload, "path": args.out}, f"seed recorded in {args.out}")
    return 0


def cmd_sample(args) -> int:
    manifest = model.parse_manifest(_read(args.manifest))
    contest_ids = None
    if args.contests:
        contest_ids = [c.id for c in model.parse_contests(_read(args.contests))]
    csd = model.parse_csd(_read(args.csd), manifest, contest_ids)
    assignment = assign_numbers(args.seed, sorted({cid for cid, style in csd.styles.items()
                                                   if style}))
    if args.dump_assignment:
        _write(args.dump_assignment, assignment_to_csv(assignment))
    sample = consistent_sample(assignment, csd, args.contest, args.size)
    refs = retrieval_list([sample], manifest)
    payload = {
        "contest": args.contest,
        "size": sample.size,
        "threshold": real_str(sample.threshold),
        "cards": [c.card_id for c in refs],
    }
    _emit(args, payload, "\n".join(c.card_id for c in refs))
    return 0


def cmd_figures(args) -> int:
    rows = studies.figure_grid(args.id)
    text = studies.rows_to_csv(rows)
    if args.out:
        _write(args.out, text)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_case_study(args) -> int:
    report = studies.case_study(args.name, use_published_asn=not args.first_principles)
    payload = report.to_dict()
    lines = [
        f"case study: {report.name}",
        f"  comparison: without CSD {report.comparison_without}, "
        f"with CSD {report.comparison_with:.1f} "
        f"(reduction {report.comparison_reduction_pct:.1f}%)",
        f"  polling:    without CSD {report.polling_without.expected_draws:.0f}, "
        f"with CSD {report.polling_with.expected_draws:.0f} "
        f"(reduction {report.polling_reduction_pct:.1f}%)",
    ]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_convert_csd(args) -> int:
    """Wide yes/no CSD (one column per contest) to the long list form."""
    reader = csv.reader(io.StringIO(_read(args.wide)))
    header = next(reader)
    if [h.strip().lower() for h in header[:3]] != ["cart", "tray", "position"]:
        raise AuditError(f"wide CSD must start with cart,tray,position, got {header[:3]}")
    contests = [h.strip() for h in header[3:]]
    out = [",".join(model.CSD_HEADER)]
    for row in reader:
        if not row:
            continue
        present = [contests[i] for i, v in enumerate(row[3:])
                   if v.strip().lower() == "yes"]
        out.append(",".join(row[:3]) + "," + "|".join(present))
    _write(args.out, "\n".join(out) + "\n")
    print(f"wrote {args.out}")
    return 0


# -- audit session commands --------------------------------------------------


def cmd_audit_init(args) -> int:
    config = AuditConfig.from_dict(json.loads(_read(args.config)))
    session = Session.create(
        config,
        manifest_csv=_read(args.manifest),
        csd_csv=_read(args.csd),
        cvrs_jsonl=_read(args.cvrs) if args.cvrs else "",
        contests_json=_read(args.contests),
    )
    session.save(args.session)
    _emit(args, session.envelope(),
          f"session {session.session_id} written to {args.session}")
    return 0


def cmd_audit_round(args) -> int:
    session = Session.load(args.session)
    rnd = plan_round(session.state)
    session.save(args.session)
    payload = {
        "round": rnd.number,
        "sizes": rnd.sizes,
        "full_count": rnd.new_full_count,
        "cards": [{"card_id": c.card_id, "is_phantom": c.is_phantom,
                   "contests": sorted(session.state.csd.styles.get(c.card_id, ()))}
                  for c in rnd.retrieval],
    }
    human = [f"round {rnd.number}: sizes {rnd.sizes}"]
    human += [c.card_id for c in rnd.retrieval]
    _emit(args, payload, "\n".join(human))
    return 0


def cmd_audit_enter(args) -> int:
    session = Session.load(args.session)
    records = []
    if args.json:
        records.append(json.loads(args.json))
    if args.file:
        for line in _read(args.file).splitlines():
            if line.strip():
                records.append(json.loads(line))
    if not records:
        raise AuditError("nothing to record: pass --json or --file")
    for rec in records:
        record_interpretation(session.state, Interpretation.from_dict(rec))
    session.save(args.session)
    _emit(args, {"recorded": [r["card_id"] for r in records]},
          f"recorded {len(records)} interpretation(s)")
    return 0


def cmd_audit_finalize(args) -> int:
    session = Session.load(args.session)
    result = finalize_round(session.state)
    session.save(args.session)
    payload = {k: {**v, "risk": real_str(v["risk"])} for k, v in sorted(result.items())}
    human = [f"{k}: risk {real_str(v['risk'])} -> {v['status']}"
             for k, v in sorted(result.items())]
    _emit(args, payload, "\n".join(human))
    return 0


def cmd_audit_status(args) -> int:
    session = Session.load(args.session)
    status = audit_status(session.state)
    for entry in status["contests"].values():
        entry["measured_risk"] = real_str(entry["measured_risk"])
        entry["governing_margin"] = real_str(entry["governing_margin"])
    human = [f"complete: {status['complete']} after {status['rounds']} round(s), "
             f"{status['cards_inspected']} cards inspected"]
    for k, v in status["contests"].items():
        human.append(f"  {k}: {v['status']} risk {v['measured_risk']} "
                     f"(limit {v['risk_limit']}) draws {v['draws']}")
    _emit(args, status, "\n".join(human))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir, token=os.environ.get("RLA_API_TOKEN"),
                     ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rla", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("plan", help="comparison-audit sample size")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--rate", type=float, default=0.001,
                   help="anticipated 1-vote overstatement rate")
    p.add_argument("--margin", type=float, required=True,
                   help="fully diluted margin")
    p.add_argument("--gamma", type=float, default=GAMMA_DEFAULT)
    add_format(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("seed", help="record the public audit seed")
    p.add_argument("--value", required=True)
    p.add_argument("--out", default="seed.json")
    add_format(p)
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("sample", help="draw a consistent sample for one contest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--csd", required=True)
    p.add_argument("--contests", help="contest definitions (validates ids)")
    p.add_argument("--seed", required=True)
    p.add_argument("--contest", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--dump-assignment", help="write card_id,number CSV here")
    add_format(p)
    p.set_defaults(func=cmd_sample)

    audit = sub.add_parser("audit", help="run a multi-round audit session")
    asub = audit.add_subparsers(dest="audit_command", required=True)

    p = asub.add_parser("init")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--csd", required=True)
    p.add_argument("--cvrs")
    p.add_argument("--contests", required=True)
    p.add_argument("--session", required=True, help="session file to create")
    add_format(p)
    p.set_defaults(func=cmd_audit_init)

    p = asub.add_parser("round")
    p.add_argument("--session", required=True)
    add_format(p)
    p.set_defaults(func=cmd_audit_round)

    p = asub.add_parser("enter")
    p.add_argument("--session", required=True)
    p.add_argument("--json", help="one interpretation as JSON")
    p.add_argument("--file", help="JSON-lines file of interpretations")
    add_format(p)
    p.set_defaults(func=cmd_audit_enter)

    p = asub.add_parser("finalize")
    p.add_argument("--session", required=True)
    add_format(p)
    p.set_defaults(func=cmd_audit_finalize)

    p = asub.add_parser("status")
    p.add_argument("--session", required=True)
    add_format(p)
    p.set_defaults(func=cmd_audit_status)

    p = sub.add_parser("figures", help="emit a figure data grid as CSV")
    p.add_argument("--id", required=True, choices=["F3", "F4", "F5", "F6"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("case-study", help="county case-study workloads")
    p.add_argument("--name", required=True)
    p.add_argument("--first-principles", action="store_true",
                   help="recompute polling ASN instead of published bases")
    add_format(p)
    p.set_defaults(func=cmd_case_study)

    p = sub.add_parser("convert-csd", help="wide yes/no CSD to long form")
    p.add_argument("--wide", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert_csd)

    p = sub.add_parser("serve", help="run the HTTP session API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--data-dir", default=os.environ.get("RLA_DATA_DIR", "./audit-data"))
    p.add_argument("--ui", help="directory of built UI assets to serve at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AuditError as exc:
        sys.stderr.write(json.dumps(exc.to_json()) + "\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(json.dumps({"error": "FILE_NOT_FOUND", "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
