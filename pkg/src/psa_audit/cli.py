"""Command-line entry point orchestrating the pipeline end to end.

Exit codes: 0 success; 2 schema/config/usage failure; 3 the run finished
but some rows failed and were skipped; 4 the run finished but produced an
empty result set.  Every command writes a ``run_manifest.json`` next to
its outputs with everything needed to re-execute it byte-identically.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import __version__
from .counterfactual import (
    AuditPair,
    DispositionPolicy,
    booking_charges,
    build_audit_pairs,
    counterfactual_assess,
)
from .engine import EngineConfig, SupervisionLevel, assess, load_engine_config
from .errors import ConfigError, PsaAuditError, SchemaError
from .io import (
    PSA_COLUMNS,
    SCHEMA_DOC,
    RowIssue,
    join_charges,
    read_court_cases,
    read_psa_records,
    write_csv,
)
from .linkage import MatchResult, deduplicate, filter_complete, link_records
from .stats import (
    DEFAULT_ALPHA,
    initial_distribution,
    proportion_affected,
    race_consistency,
    rate_table,
)
from .synth import GeneratorConfig, generate, write_dataset

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_PARTIAL = 3
EXIT_EMPTY = 4


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        print(SCHEMA_DOC, end="")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_help()
        return EXIT_SCHEMA
    try:
        if args.command == "rerun":
            return _cmd_rerun(args)
        opts = _collect_options(args)
        out_dir = Path(args.out)
        return _dispatch(args.command, opts, out_dir)
    except PsaAuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


def _dispatch(command: str, opts: dict, out_dir: Path) -> int:
    handler = {
        "score": cmd_score,
        "audit": cmd_audit,
        "simulate": cmd_simulate,
        "consistency": cmd_consistency,
        "validate": cmd_validate,
        "dedupe": cmd_dedupe,
        "link": cmd_link,
    }[command]
    out_dir.mkdir(parents=True, exist_ok=True)
    code = handler(opts, out_dir)
    _write_manifest(out_dir, command, opts)
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psa-audit",
        description="Reproduce a charge-driven pre-trial assessment and audit "
        "how booking charges that never convict move its recommendations.",
    )
    parser.add_argument("--schema", action="store_true", help="print the file schemas and exit")
    parser.add_argument("--version", action="version", version=f"psa-audit {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p, *, needs_config=True):
        p.add_argument("--out", required=True, help="output directory")
        if needs_config:
            p.add_argument("--config-dir", help="directory with charge_catalog.yaml, dmf.yaml, weights.yaml")
            p.add_argument("--catalog", help="charge catalog file (overrides --config-dir)")
            p.add_argument("--dmf", help="decision matrix file (overrides --config-dir)")
            p.add_argument("--weights", help="weight config file (overrides --config-dir)")

    p = sub.add_parser("score", help="score each assessment record over its booked charges")
    p.add_argument("--psa", required=True, help="assessment records file")
    add_common(p)

    p = sub.add_parser("audit", help="full booking-vs-conviction audit pipeline")
    p.add_argument("--psa", required=True)
    p.add_argument("--court", required=True)
    p.add_argument("--group-by", choices=["race-b", "none"], default="race-b")
    p.add_argument("--sensitivity", action="store_true",
                   help="also emit tables excluding records whose only plea points outside the case")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--conviction-threshold", type=int, default=159)
    p.add_argument("--plea-to-other-code", type=int, default=72)
    p.add_argument("--no-companion-zero", action="store_true")
    add_common(p)

    p = sub.add_parser("simulate", help="generate a synthetic dataset with planted ground truth")
    p.add_argument("--n", type=int, default=2450)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--overbooking-rate", type=float)
    p.add_argument("--saturation-share", type=float)
    p.add_argument("--duplicate-rate", type=float)
    p.add_argument("--incomplete-rate", type=float)
    p.add_argument("--disposed-rate", type=float)
    p.add_argument("--plea-other-rate", type=float)
    p.add_argument("--unmatched-rate", type=float)
    p.add_argument("--gen-config", help="YAML file of generator settings (flags override it)")
    add_common(p)

    p = sub.add_parser("consistency", help="race-designation consistency matrix from court data")
    p.add_argument("--court", required=True)
    add_common(p, needs_config=False)

    p = sub.add_parser("validate", help="agreement of engine outputs with recorded form columns")
    p.add_argument("--psa", required=True)
    p.add_argument("--court", required=True)
    add_common(p)

    p = sub.add_parser("dedupe", help="completeness filter and de-duplication only")
    p.add_argument("--psa", required=True)
    add_common(p, needs_config=False)

    p = sub.add_parser("link", help="de-duplicate and link records to court cases")
    p.add_argument("--psa", required=True)
    p.add_argument("--court", required=True)
    add_common(p, needs_config=False)

    p = sub.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("manifest", help="path to a run_manifest.json")
    p.add_argument("--out", required=True, help="output directory for the re-run")
    return parser


def _collect_options(args: argparse.Namespace) -> dict:
    skip = {"command", "schema", "out"}
    opts = {}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        opts[key] = str(Path(value).resolve()) if key in ("psa", "court", "config_dir", "catalog", "dmf", "weights", "gen_config") else value
    return opts


def _write_manifest(out_dir: Path, command: str, opts: dict) -> None:
    manifest = {
        "tool": "psa-audit",
        "version": __version__,
        "subcommand": command,
        "options": {k: opts[k] for k in sorted(opts)},
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _cmd_rerun(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    if not path.exists():
        raise SchemaError(f"{path}: manifest not found")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
        command = manifest["subcommand"]
        opts = manifest["options"]
    except (json.JSONDecodeError, KeyError) as exc:
        raise SchemaError(f"{path}: not a valid run manifest: {exc}") from None
    if command not in ("score", "audit", "simulate", "consistency", "validate", "dedupe", "link"):
        raise SchemaError(f"{path}: unknown subcommand {command!r}")
    return _dispatch(command, opts, Path(args.out))


def _engine_config(opts: dict) -> EngineConfig:
    return load_engine_config(
        opts.get("config_dir"),
        catalog_path=opts.get("catalog"),
        dmf_path=opts.get("dmf"),
        weights_path=opts.get("weights"),
    )


def _policy(opts: dict) -> DispositionPolicy:
    return DispositionPolicy(
        conviction_threshold=opts.get("conviction_threshold", 159),
        plea_to_other_code=opts.get("plea_to_other_code", 72),
        companion_zero_rule=not opts.get("no_companion_zero", False),
    )


def _write_issues(path: Path, issues) -> None:
    write_csv(path, ("row", "record_id", "message"),
              [{"row": i.row, "record_id": i.record_id, "message": i.message} for i in issues])


def _hard_issues(issues):
    return [i for i in issues if not i.message.startswith("warning:")]


# ---------------------------------------------------------------------------
# score


def cmd_score(opts: dict, out_dir: Path) -> int:
    config = _engine_config(opts)
    records, issues = read_psa_records(opts["psa"], config.catalog.derivative_prefixes)
    rows, row_errors = [], list(issues)
    for rec in records:
        subs = rec.subscores
        if subs is None:
            row_errors.append(RowIssue(row=0, record_id=rec.record_id, message="missing sub-scores"))
            continue
        res = assess(subs, rec.booking_charges, False, config.dmf, config.catalog)
        rows.append({
            "record_id": rec.record_id,
            "fta": subs.fta,
            "nca": subs.nca,
            "nvca_flag": subs.nvca_flag,
            "exclusion": res.exclusion,
            "exclusion_reason": res.exclusion_reason,
            "bumpup": res.bumpup,
            "bumpup_reason": res.bumpup_reason,
            "initial": res.initial,
            "final": res.final,
        })
    write_csv(out_dir / "score_results.csv", (
        "record_id", "fta", "nca", "nvca_flag", "exclusion", "exclusion_reason",
        "bumpup", "bumpup_reason", "initial", "final"), rows)
    _write_issues(out_dir / "score_errors.csv", row_errors)
    print(f"scored {len(rows)} records, {len(_hard_issues(row_errors))} row errors")
    if not rows:
        return EXIT_EMPTY
    if _hard_issues(row_errors):
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit


def _group_labels(matches: list[MatchResult], cases, group_by: str) -> dict[str, str] | None:
    """Race partition for disaggregation, resolved per individual: a person
    designated B on any of their court cases is group B for all of their
    records; everything else (missing designations included) is non-B."""
    if group_by == "none":
        return None
    b_people = {c.sfid for c in cases if c.race == "B"}
    return {
        m.psa.record_id: ("B" if m.psa.sfid in b_people else "non-B") for m in matches
    }


def _write_rate_tables(path: Path, tables) -> None:
    if not isinstance(tables, dict):
        tables = {"all": tables}
    rows = []
    for scope in tables:
        t = tables[scope]
        for r in t.rows:
            rows.append({
                "scope": scope, "n": t.n, "component": r.component,
                "booking": r.booking, "conviction": r.conviction, "difference": r.difference,
                "statistic": r.statistic, "p_value": r.p_value,
                "significant": "" if r.significant is None else r.significant,
            })
    write_csv(path, ("scope", "n", "component", "booking", "conviction",
                     "difference", "statistic", "p_value", "significant"), rows)


def _write_affected_tables(path: Path, tables) -> None:
    if not isinstance(tables, dict):
        tables = {"all": tables}
    rows = []
    for scope in tables:
        t = tables[scope]
        for r in t.rows:
            rows.append({"scope": scope, "n": t.n, "component": r.component,
                         "count": r.count, "fraction": r.fraction})
    write_csv(path, ("scope", "n", "component", "count", "fraction"), rows)


def _write_summary(path: Path, counts: dict, tables, affected, alpha: float) -> None:
    lines = ["# audit summary", ""]
    for key, value in counts.items():
        lines.append(f"{key}: {value}")
    lines.append(f"alpha: {format(alpha, '.10g')} (Bonferroni-corrected within each table)")
    lines.append("")
    if isinstance(tables, dict):
        scopes = tables
    else:
        scopes = {"all": tables}
    for scope, t in scopes.items():
        lines.append(f"[rates {scope}] n={t.n}")
        for r in t.rows:
            stat = "n/a" if r.statistic is None else format(r.statistic, ".6g")
            p = "n/a" if r.p_value is None else format(r.p_value, ".6g")
            sig = "n/a" if r.significant is None else ("*" if r.significant else "ns")
            lines.append(
                f"  {r.component}: booking={r.booking:.6g} conviction={r.conviction:.6g} "
                f"difference={r.difference:.6g} statistic={stat} p={p} {sig}"
            )
    if isinstance(affected, dict):
        aff_scopes = affected
    else:
        aff_scopes = {"all": affected}
    for scope, t in aff_scopes.items():
        lines.append(f"[affected {scope}] n={t.n}")
        for r in t.rows:
            lines.append(f"  {r.component}: count={r.count} fraction={r.fraction:.6g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_matches(path: Path, report) -> None:
    rows = []
    for m in report.all_results:
        rows.append({
            "record_id": m.psa.record_id,
            "sfid": m.psa.sfid,
            "status": m.status.value,
            "court_numbers": ";".join(c.court_number for c in m.matched_cases),
        })
    write_csv(path, ("record_id", "sfid", "status", "court_numbers"), rows)


def _write_review(path: Path, unresolved) -> None:
    rows = []
    for m in unresolved:
        r = m.psa
        rows.append({
            "record_id": r.record_id,
            "sfid": r.sfid,
            "name": r.name,
            "arrest_date": r.arrest_date,
            "psa_date": r.psa_date,
            "booking_charges": join_charges(r.booking_charges),
            "reason": m.note or "no-candidates",
        })
    write_csv(path, ("record_id", "sfid", "name", "arrest_date", "psa_date",
                     "booking_charges", "reason"), rows)


def _write_pairs(path: Path, pairs: list[AuditPair], groups) -> None:
    rows = []
    for p in pairs:
        b, c = p.booking_result, p.conviction_result
        rows.append({
            "record_id": p.record_id,
            "group": (groups or {}).get(p.record_id, ""),
            "booking_nvca": b.subscores.nvca_flag,
            "booking_exclusion": b.exclusion,
            "booking_exclusion_reason": b.exclusion_reason,
            "booking_bumpup": b.bumpup,
            "booking_bumpup_reason": b.bumpup_reason,
            "booking_initial": b.initial,
            "booking_final": b.final,
            "conviction_nvca": c.subscores.nvca_flag,
            "conviction_exclusion": c.exclusion,
            "conviction_exclusion_reason": c.exclusion_reason,
            "conviction_bumpup": c.bumpup,
            "conviction_bumpup_reason": c.bumpup_reason,
            "conviction_initial": c.initial,
            "conviction_final": c.final,
            "exclusion_lost": p.exclusion_lost,
            "bumpup_lost": p.bumpup_lost,
            "nvca_lost": p.nvca_lost,
            "recommendation_delta": p.recommendation_delta,
            "excluded_by_sensitivity": p.excluded_by_sensitivity,
        })
    write_csv(path, (
        "record_id", "group",
        "booking_nvca", "booking_exclusion", "booking_exclusion_reason",
        "booking_bumpup", "booking_bumpup_reason", "booking_initial", "booking_final",
        "conviction_nvca", "conviction_exclusion", "conviction_exclusion_reason",
        "conviction_bumpup", "conviction_bumpup_reason", "conviction_initial", "conviction_final",
        "exclusion_lost", "bumpup_lost", "nvca_lost", "recommendation_delta",
        "excluded_by_sensitivity"), rows)


def _write_distribution(path: Path, hists) -> None:
    rows = []
    for scope in hists:
        h = hists[scope]
        for level in SupervisionLevel:
            rows.append({
                "scope": scope,
                "n": h.n,
                "level_rank": int(level),
                "level": level.label,
                "count": h.counts[int(level) - 1],
                "fraction": h.fractions[int(level) - 1],
                "empty_group": h.empty,
            })
    write_csv(path, ("scope", "n", "level_rank", "level", "count", "fraction", "empty_group"), rows)


def cmd_audit(opts: dict, out_dir: Path) -> int:
    config = _engine_config(opts)
    policy = _policy(opts)
    alpha = opts.get("alpha", DEFAULT_ALPHA)
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"--alpha must be in (0, 1), got {alpha}")

    records, psa_issues = read_psa_records(opts["psa"], config.catalog.derivative_prefixes)
    cases, court_issues = read_court_cases(opts["court"], config.catalog.derivative_prefixes)
    issues = list(psa_issues) + list(court_issues)
    _write_issues(out_dir / "input_errors.csv", issues)

    report = link_records(records, cases)
    _write_matches(out_dir / "matches.csv", report)
    _write_review(out_dir / "review_unresolved.csv", report.unresolved)

    pairs, skipped = build_audit_pairs(report.matched, policy, config)
    groups = _group_labels(report.matched, cases, opts.get("group_by", "race-b"))

    counts = {
        "psa_input_rows": len(records) + len(_hard_issues(psa_issues)),
        "court_input_rows": len(cases) + len(_hard_issues(court_issues)),
        "row_errors": len(_hard_issues(issues)),
        "records_parsed": len(records),
        "dropped_incomplete": len(report.dropped_incomplete),
        "dropped_duplicates": len(report.dropped_duplicates),
        "unresolved": len(report.unresolved),
        "matched": len(report.matched),
        "not_fully_disposed": len(skipped),
        "analyzed_pairs": len(pairs),
        "sensitivity_excluded": sum(p.excluded_by_sensitivity for p in pairs),
    }
    write_csv(out_dir / "counts_summary.csv", ("stage", "count"),
              [{"stage": k, "count": v} for k, v in counts.items()])
    for key, value in counts.items():
        print(f"{key}: {value}")

    _write_pairs(out_dir / "audit_pairs.csv", pairs, groups)

    if pairs:
        tables = rate_table(pairs, groups, alpha=alpha)
        affected = proportion_affected(pairs, groups)
        hists = initial_distribution(pairs, groups, expected_groups=("B", "non-B") if groups else ())
        _write_rate_tables(out_dir / "rate_table.csv", tables)
        _write_affected_tables(out_dir / "affected_table.csv", affected)
        _write_distribution(out_dir / "initial_distribution.csv", hists)
        _write_summary(out_dir / "test_summary.txt", counts, tables, affected, alpha)
        if opts.get("sensitivity"):
            keep = [p for p in pairs if not p.excluded_by_sensitivity]
            if keep:
                sub_groups = {k: v for k, v in (groups or {}).items()} or None
                _write_rate_tables(out_dir / "rate_table_sensitivity.csv",
                                   rate_table(keep, sub_groups, alpha=alpha))
                _write_affected_tables(out_dir / "affected_table_sensitivity.csv",
                                       proportion_affected(keep, sub_groups))
    else:
        _write_rate_tables(out_dir / "rate_table.csv", {})
        _write_affected_tables(out_dir / "affected_table.csv", {})
        _write_distribution(out_dir / "initial_distribution.csv", {})
        _write_summary(out_dir / "test_summary.txt", counts, {}, {}, alpha)

    if not pairs:
        return EXIT_EMPTY
    if _hard_issues(issues):
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


_SIMULATE_RATE_FLAGS = (
    "overbooking_rate",
    "saturation_share",
    "duplicate_rate",
    "incomplete_rate",
    "disposed_rate",
    "plea_other_rate",
    "unmatched_rate",
)


def cmd_simulate(opts: dict, out_dir: Path) -> int:
    if "resolved_generator" in opts:
        gen_config = GeneratorConfig.from_dict(opts["resolved_generator"])
    else:
        doc = {}
        if opts.get("gen_config"):
            loaded = yaml.safe_load(Path(opts["gen_config"]).read_text(encoding="utf-8"))
            if not isinstance(loaded, dict):
                raise ConfigError(f"{opts['gen_config']}: must contain a mapping")
            doc.update(loaded)
        doc["n_records"] = opts.get("n", doc.get("n_records", 2450))
        doc["seed"] = opts.get("seed", doc.get("seed", 0))
        for flag in _SIMULATE_RATE_FLAGS:
            if flag in opts:
                doc[flag] = opts[flag]
        gen_config = GeneratorConfig.from_dict(doc)
        # freeze the fully resolved generator settings into the manifest
        # options so a rerun reproduces this dataset even if defaults change
        for flag in ("n", "seed", "gen_config") + _SIMULATE_RATE_FLAGS:
            opts.pop(flag, None)
        opts["resolved_generator"] = gen_config.to_dict()
    config = _engine_config(opts)
    dataset = generate(gen_config, config)
    write_dataset(dataset, out_dir)
    counts = dataset.planted_counts()
    write_csv(out_dir / "planted_counts.csv", ("quantity", "count"),
              [{"quantity": k, "count": v} for k, v in counts.items()])
    for key, value in counts.items():
        print(f"{key}: {value}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# consistency / validate / dedupe / link


def cmd_consistency(opts: dict, out_dir: Path) -> int:
    cases, issues = read_court_cases(opts["court"])
    _write_issues(out_dir / "input_errors.csv", issues)
    matrix = race_consistency(cases)
    rows = []
    for cat in matrix.rows:
        row = {"designation": cat, "n_individuals": matrix.individuals[cat]}
        row.update({c: matrix.rows[cat][j] for j, c in enumerate(matrix.categories)})
        rows.append(row)
    write_csv(out_dir / "race_consistency.csv",
              ("designation", "n_individuals") + matrix.categories, rows)
    print(f"consistency rows: {len(rows)} (multi-record individuals only)")
    if not rows:
        return EXIT_EMPTY
    if _hard_issues(issues):
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_validate(opts: dict, out_dir: Path) -> int:
    config = _engine_config(opts)
    records, psa_issues = read_psa_records(opts["psa"], config.catalog.derivative_prefixes)
    cases, court_issues = read_court_cases(opts["court"], config.catalog.derivative_prefixes)
    issues = list(psa_issues) + list(court_issues)
    _write_issues(out_dir / "input_errors.csv", issues)

    report = link_records(records, cases)
    comparisons = {"nvca_flag": [], "exclusion": [], "bumpup": [], "recommendation": []}
    mismatches = []
    for m in report.matched:
        rec = m.psa
        if rec.fta is None or rec.nca is None:
            continue
        res = counterfactual_assess(rec, booking_charges(m), config)
        checks = [
            ("nvca_flag", res.subscores.nvca_flag, rec.nvca_flag, True),
            ("exclusion", res.exclusion, rec.recorded_exclusion, True),
            # the form skips the bump-up determination once an exclusion is
            # recorded, so compare only non-excluded rows
            ("bumpup", res.bumpup, rec.recorded_bumpup, rec.recorded_exclusion is False),
            ("recommendation", res.final, rec.recorded_recommendation, True),
        ]
        for component, engine_value, recorded, in_mask in checks:
            if recorded is None or not in_mask:
                continue
            comparisons[component].append((engine_value, recorded))
            if engine_value != recorded:
                mismatches.append({
                    "record_id": rec.record_id,
                    "component": component,
                    "engine": engine_value,
                    "recorded": recorded,
                })

    rows = []
    for component, pairs in comparisons.items():
        n = len(pairs)
        agree = sum(1 for e, r in pairs if e == r)
        rows.append({
            "component": component,
            "n": n,
            "agree": agree,
            "agreement_rate": (agree / n) if n else "",
        })
    write_csv(out_dir / "validation_report.csv", ("component", "n", "agree", "agreement_rate"), rows)
    write_csv(out_dir / "validation_mismatches.csv", ("record_id", "component", "engine", "recorded"),
              mismatches)
    for r in rows:
        rate = r["agreement_rate"]
        print(f"{r['component']}: {r['agree']}/{r['n']}"
              + (f" = {rate:.6g}" if rate != "" else " (no comparable rows)"))
    if all(r["n"] == 0 for r in rows):
        return EXIT_EMPTY
    if _hard_issues(issues):
        return EXIT_PARTIAL
    return EXIT_OK


def _psa_record_row(rec) -> dict:
    return {
        "record_id": rec.record_id,
        "sfid": rec.sfid,
        "name": rec.name,
        "dob": rec.dob,
        "arrest_date": rec.arrest_date,
        "psa_date": rec.psa_date,
        "fta": rec.fta,
        "nca": rec.nca,
        "nvca_flag": rec.nvca_flag,
        "booking_charges": join_charges(rec.booking_charges),
        "age_at_arrest": rec.age_at_arrest,
        "prior_conviction": rec.prior_conviction,
        "prior_violent_convictions": rec.prior_violent_convictions,
        "recorded_exclusion": rec.recorded_exclusion,
        "recorded_bumpup": rec.recorded_bumpup,
        "recorded_recommendation": rec.recorded_recommendation,
    }


def cmd_dedupe(opts: dict, out_dir: Path) -> int:
    records, issues = read_psa_records(opts["psa"])
    _write_issues(out_dir / "input_errors.csv", issues)
    complete, incomplete = filter_complete(records)
    unique, duplicates = deduplicate(complete)
    write_csv(out_dir / "deduped_records.csv", PSA_COLUMNS, [_psa_record_row(r) for r in unique])
    dropped = [{"record_id": r.record_id, "reason": "incomplete"} for r in incomplete]
    dropped += [{"record_id": r.record_id, "reason": "duplicate"} for r in duplicates]
    write_csv(out_dir / "dedupe_dropped.csv", ("record_id", "reason"), dropped)
    print(f"kept {len(unique)}, dropped {len(incomplete)} incomplete, {len(duplicates)} duplicates")
    if not unique:
        return EXIT_EMPTY
    if _hard_issues(issues):
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_link(opts: dict, out_dir: Path) -> int:
    records, psa_issues = read_psa_records(opts["psa"])
    cases, court_issues = read_court_cases(opts["court"])
    issues = list(psa_issues) + list(court_issues)
    _write_issues(out_dir / "input_errors.csv", issues)
    report = link_records(records, cases)
    _write_matches(out_dir / "matches.csv", report)
    _write_review(out_dir / "review_unresolved.csv", report.unresolved)
    counts = report.counts()
    write_csv(out_dir / "counts_summary.csv", ("stage", "count"),
              [{"stage": k, "count": v} for k, v in counts.items()])
    for key, value in counts.items():
        print(f"{key}: {value}")
    if not report.matched:
        return EXIT_EMPTY
    if _hard_issues(issues):
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
