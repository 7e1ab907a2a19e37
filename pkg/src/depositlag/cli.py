"""Command-line entry point: ``depositlag <subcommand>``.

Exit codes: 0 success, 1 data-validation failure, 2 I/O failure, 3 network failure.
Logs go to stderr as one JSON object per line; data goes to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from depositlag import analytics as an
from depositlag import dataio
from depositlag.harvest import HarvestLedger, harvest_endpoints
from depositlag.linkage import filter_registry, filter_repository, validate_links_by_doi
from depositlag.pipeline import (
    EXIT_DATA,
    EXIT_IO,
    EXIT_NETWORK,
    EXIT_OK,
    PipelineConfig,
    run_pipeline,
)
from depositlag.reports import ReportOptions, build_reports
from depositlag.synth import SynthConfig, config_to_json, generate

log = logging.getLogger("depositlag")

_STD_ATTRS = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        payload.update({k: v for k, v in vars(record).items() if k not in _STD_ATTRS})
        return json.dumps(payload, default=str, sort_keys=True)


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(JsonLineFormatter())
    root = logging.getLogger("depositlag")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False


# flag -> PipelineConfig key
_CONFIG_FLAGS = {
    "registry": "registry",
    "repository": "repository",
    "repositories": "repositories",
    "reader_profiles": "reader_profiles",
    "panel_mapping": "panel_mapping",
    "ledger": "ledger",
    "scraped": "scraped",
    "out": "output_dir",
    "cutoff_days": "cutoff_days",
    "cap_days": "caps",
    "min_repo_count": "min_repo_count",
    "exclude_years": "excluded_years",
    "bin_width": "histogram_widths",
    "endpoint": "harvest_endpoints",
    "harvest_set": "harvest_set",
    "harvest_from": "harvest_from",
    "polite_delay_ms": "polite_delay_ms",
    "jobs": "jobs",
    "ddof": "ddof",
}


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--registry", help="registry records (JSON lines)")
    p.add_argument("--repository", help="repository records (JSON lines)")
    p.add_argument("--repositories", help="repository registry (JSON)")
    p.add_argument("--reader-profiles", help="reader-count profiles (JSON lines)")
    p.add_argument("--panel-mapping", help="subject,panel CSV (default: bundled REF 2021 table)")
    p.add_argument("--ledger", help="harvest ledger (JSON lines)")
    p.add_argument("--scraped", help="scraped deposit dates CSV (record_id,deposit_date)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cutoff-days", help="compliance cutoff in days (default 90)")
    p.add_argument("--cap-days", help="comma-separated lag caps (default 365,730)")
    p.add_argument("--min-repo-count", help="repositories need more than this many publications (default 100)")
    p.add_argument("--exclude-years", help="comma-separated years left out of capped reports")
    p.add_argument("--bin-width", help="comma-separated histogram widths in days (default 7,30)")
    p.add_argument("--endpoint", action="append", help="OAI-PMH base URL (repeatable)")
    p.add_argument("--harvest-set", help="OAI-PMH set")
    p.add_argument("--harvest-from", help="OAI-PMH from date")
    p.add_argument("--polite-delay-ms", help="delay between OAI-PMH requests")
    p.add_argument("--jobs", help="worker count within a stage")
    p.add_argument("--ddof", help="0 for population, 1 for sample standard deviation")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    for flag, key in _CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(value)
        cfg.set(key, value)
    if getattr(args, "force", False):
        cfg.force = True
    return cfg


def _write(path: Path, text: str, force: bool) -> None:
    if path.exists() and not force:
        raise FileExistsError(f"refusing to overwrite {path} (use --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_ingest(args, cfg: PipelineConfig) -> int:
    repos = dataio.load_repositories(cfg.repositories)
    registry, reg_rej = filter_registry(dataio.iter_jsonl(cfg.registry))
    repository, repo_rej = filter_repository(dataio.iter_jsonl(cfg.repository), repos)
    out = Path(cfg.output_dir)
    _write(out / "registry_kept.jsonl", dataio.jsonl_text(r.to_json() for r in registry), cfg.force)
    _write(
        out / "repository_kept.jsonl",
        dataio.jsonl_text(
            {
                "record_id": r.record_id,
                "repo_id": r.repository.repo_id,
                "title": r.title,
                "authors": [a.to_json() for a in r.authors],
                "year": r.year,
                "doi": r.doi,
                "deposit_date": r.deposit_date.isoformat() if r.deposit_date else None,
            }
            for r in repository
        ),
        cfg.force,
    )
    _write(out / "rejections.csv", dataio.rejections_csv(reg_rej + repo_rej), cfg.force)
    log.info("ingested", extra={"registry_kept": len(registry), "repository_kept": len(repository)})
    if not registry or not repository:
        log.error("nothing left after filtering")
        return EXIT_DATA
    return EXIT_OK


def cmd_harvest(args, cfg: PipelineConfig) -> int:
    if not cfg.harvest_endpoints:
        log.error("no harvest endpoints configured")
        return EXIT_DATA
    ledger_path = Path(cfg.ledger) if cfg.ledger else Path(cfg.output_dir) / "ledger.jsonl"
    ledger = HarvestLedger.load(ledger_path)
    reports = harvest_endpoints(
        list(cfg.harvest_endpoints),
        ledger,
        jobs=max(1, cfg.jobs),
        set_spec=cfg.harvest_set,
        from_date=cfg.harvest_from,
        polite_delay=cfg.polite_delay_ms / 1000.0,
    )
    ledger_path.parent.mkdir(parents=True, exist_ok=True)
    ledger.save(ledger_path)
    report_path = Path(cfg.output_dir) / "harvest_report.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps([r.to_json() for r in reports], indent=2) + "\n", encoding="utf-8")
    for r in reports:
        log.info("harvested", extra=r.to_json())
    if any(r.network_failure for r in reports):
        return EXIT_NETWORK
    if any(not r.completed for r in reports):
        return EXIT_DATA
    return EXIT_OK


def cmd_link(args, cfg: PipelineConfig) -> int:
    code, _ = run_pipeline(cfg, until="tag-subjects")
    return code


def cmd_report(args, cfg: PipelineConfig) -> int:
    code, _ = run_pipeline(cfg)
    if code == EXIT_OK and args.stdout:
        path = Path(cfg.output_dir) / args.stdout
        if not path.exists():
            log.error("no such report", extra={"report": args.stdout})
            return EXIT_DATA
        sys.stdout.write(path.read_text(encoding="utf-8"))
    return code


def cmd_validate_doi(args, cfg: PipelineConfig) -> int:
    links = args.links or Path(cfg.output_dir) / "links.csv"
    report = validate_links_by_doi(dataio.load_links(links))
    text = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if args.stdout:
        sys.stdout.write(text)
    else:
        _write(Path(cfg.output_dir) / "accuracy.json", text, cfg.force)
    return EXIT_OK


def cmd_analyze(args, cfg: PipelineConfig) -> int:
    linked = args.linked or Path(cfg.output_dir) / "linked.jsonl"
    pubs = dataio.load_linked(linked)
    if not pubs:
        log.error("no linked publications", extra={"path": str(linked)})
        return EXIT_DATA
    repos = dataio.load_repositories(cfg.repositories) if cfg.repositories else {}
    opts = ReportOptions(
        cutoff_days=cfg.cutoff_days,
        caps=cfg.caps,
        min_repo_count=cfg.min_repo_count,
        excluded_years=cfg.excluded_years,
        histogram_widths=cfg.histogram_widths,
        ddof=cfg.ddof,
        repositories=repos,
    )
    reports = build_reports(pubs, opts)
    if args.stdout:
        if args.stdout not in reports:
            log.error("no such report", extra={"report": args.stdout, "available": sorted(reports)})
            return EXIT_DATA
        sys.stdout.write(reports[args.stdout])
        return EXIT_OK
    out = Path(cfg.output_dir)
    clash = [n for n in reports if (out / n).exists()]
    if clash and not cfg.force:
        raise FileExistsError(f"refusing to overwrite {', '.join(sorted(clash))} (use --force)")
    for name, text in reports.items():
        _write(out / name, text, True)
    return EXIT_OK


def cmd_audit_acceptance(args, cfg: PipelineConfig) -> int:
    registry, _ = filter_registry(dataio.iter_jsonl(cfg.registry))
    audit = an.audit_acceptance_dates(registry)
    text = json.dumps(asdict(audit), indent=2, sort_keys=True) + "\n"
    if args.stdout:
        sys.stdout.write(text)
    else:
        _write(Path(cfg.output_dir) / "acceptance_audit.json", text, cfg.force)
    return EXIT_OK


def cmd_synth(args, cfg: PipelineConfig) -> int:
    sc = SynthConfig(n_publications=args.n, seed=args.seed)
    for name in ("p_missing_repo_doi", "p_doi_suffix_noise", "p_doi_truncation", "p_accent_noise", "p_no_issn"):
        value = getattr(args, name)
        if value is not None:
            setattr(sc, name, value)
    if args.noiseless:
        sc = sc.noiseless()
    corpus = generate(sc)
    out = Path(cfg.output_dir)
    names = ("registry.jsonl", "repository.jsonl", "repositories.json", "reader_profiles.jsonl", "ground_truth.csv")
    clash = [n for n in names if (out / n).exists()]
    if clash and not cfg.force:
        raise FileExistsError(f"refusing to overwrite {', '.join(clash)} (use --force)")
    corpus.write(out)
    (out / "synth_config.json").write_text(json.dumps(config_to_json(sc), indent=2, sort_keys=True, default=str) + "\n")
    log.info("generated", extra={"publications": len(corpus.registry), "repository_records": len(corpus.repository)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="depositlag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[parent], help="filter registry and repository records").set_defaults(func=cmd_ingest)
    sub.add_parser("harvest", parents=[parent], help="harvest OAI-PMH endpoints into the ledger").set_defaults(
        func=cmd_harvest
    )
    sub.add_parser("link", parents=[parent], help="filter, link, resolve dates and group by DOI").set_defaults(
        func=cmd_link
    )

    p = sub.add_parser("validate-doi", parents=[parent], help="DOI-based accuracy estimate for links.csv")
    p.add_argument("--links", type=Path)
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_validate_doi)

    p = sub.add_parser("analyze", parents=[parent], help="analytics tables from linked.jsonl")
    p.add_argument("--linked", type=Path)
    p.add_argument("--stdout", metavar="REPORT", help="print one report (e.g. lag_country.csv) instead of writing files")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[parent], help="run the whole pipeline and write a manifest")
    p.add_argument("--stdout", metavar="REPORT", help="also print one report to stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit-acceptance", parents=[parent], help="compare acceptance and publication dates")
    p.add_argument("--stdout", action="store_true")
    p.set_defaults(func=cmd_audit_acceptance)

    p = sub.add_parser("synth", parents=[parent], help="generate a synthetic corpus with ground truth")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--p-missing-repo-doi", type=float)
    p.add_argument("--p-doi-suffix-noise", type=float)
    p.add_argument("--p-doi-truncation", type=float)
    p.add_argument("--p-accent-noise", type=float)
    p.add_argument("--p-no-issn", type=float)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        cfg = _config(args)
        cfg.validate()
        return args.func(args, cfg)
    except FileExistsError as exc:
        log.error("output exists", extra={"error": str(exc)})
        return EXIT_IO
    except OSError as exc:
        log.error("I/O failure", extra={"error": str(exc)})
        return EXIT_IO
    except Exception as exc:  # data problems surface as ValueError/KeyError from the parsers
        code = getattr(exc, "exit_code", EXIT_DATA)
        log.error("failed", extra={"error": f"{type(exc).__name__}: {exc}"})
        return code


if __name__ == "__main__":
    sys.exit(main())
