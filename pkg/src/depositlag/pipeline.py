"""End-to-end pipeline: filter, link, resolve dates, group, tag, analyze, report."""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from depositlag import analytics as an
from depositlag import dataio
from depositlag.harvest import HarvestLedger, resolve_deposit_dates
from depositlag.linkage import filter_registry, filter_repository, group_by_doi, link, validate_links_by_doi
from depositlag.reports import ReportOptions, build_reports, fmt_count
from depositlag.subjects import PanelMapping, fractional_counts, load_profiles, tag_publications

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_IO = 2
EXIT_NETWORK = 3


class PipelineError(Exception):
    exit_code = EXIT_DATA

    def __init__(self, message: str, stage: str = ""):
        super().__init__(message)
        self.stage = stage


class DataValidationError(PipelineError):
    exit_code = EXIT_DATA


class OutputIOError(PipelineError):
    exit_code = EXIT_IO


class NetworkError(PipelineError):
    exit_code = EXIT_NETWORK


_PATH_KEYS = ("registry", "repository", "repositories", "reader_profiles", "panel_mapping", "ledger", "scraped", "output_dir")
_LIST_INT_KEYS = ("caps", "excluded_years", "histogram_widths")


@dataclass
class PipelineConfig:
    registry: Optional[Path] = None
    repository: Optional[Path] = None
    repositories: Optional[Path] = None
    reader_profiles: Optional[Path] = None
    panel_mapping: Optional[Path] = None
    ledger: Optional[Path] = None
    scraped: Optional[Path] = None
    output_dir: Path = Path("out")
    cutoff_days: int = an.DEFAULT_CUTOFF_DAYS
    caps: tuple[int, ...] = (365, 730)
    min_repo_count: int = 100
    excluded_years: tuple[int, ...] = ()
    histogram_widths: tuple[int, ...] = (7, 30)
    harvest_endpoints: tuple[str, ...] = ()
    harvest_set: Optional[str] = None
    harvest_from: Optional[str] = None
    polite_delay_ms: int = 0
    jobs: int = 1
    ddof: int = 0
    force: bool = False

    def validate(self) -> None:
        if self.cutoff_days <= 0:
            raise DataValidationError("cutoff_days must be positive", "config")
        if any(c <= 0 for c in self.caps):
            raise DataValidationError("caps must be positive", "config")
        if any(w <= 0 for w in self.histogram_widths):
            raise DataValidationError("histogram widths must be positive", "config")
        if self.ddof not in (0, 1):
            raise DataValidationError("ddof must be 0 (population) or 1 (sample)", "config")

    def set(self, key: str, value) -> None:
        """Set a field from a config-file or command-line string."""
        if key not in {f.name for f in fields(self)}:
            raise DataValidationError(f"unknown config key {key!r}", "config")
        if value is None:
            return
        if isinstance(value, str):
            value = value.strip()
            if key in _PATH_KEYS:
                value = Path(value) if value else None
            elif key in _LIST_INT_KEYS:
                value = tuple(int(v) for v in value.replace(";", ",").split(",") if v.strip())
            elif key == "harvest_endpoints":
                value = tuple(v.strip() for v in value.replace(";", ",").split(",") if v.strip())
            elif key == "force":
                value = value.lower() in ("1", "true", "yes", "on")
            elif key in ("cutoff_days", "min_repo_count", "polite_delay_ms", "jobs", "ddof"):
                value = int(value)
            else:
                value = value or None
        elif key in _LIST_INT_KEYS or key == "harvest_endpoints":
            value = tuple(value)
        setattr(self, key, value)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        """Read a flat ``key = value`` file; ``#`` starts a comment, lists are comma-separated.

        Relative paths are taken relative to the config file's directory.
        """
        path = Path(path)
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.read_string("[config]\n" + path.read_text(encoding="utf-8"))
        cfg = cls()
        for key, value in parser["config"].items():
            cfg.set(key, value)
            if key in _PATH_KEYS and getattr(cfg, key) is not None and not getattr(cfg, key).is_absolute():
                setattr(cfg, key, path.parent / getattr(cfg, key))
        return cfg

    def parameters(self) -> dict:
        """Settings that shape the outputs; paths and run flags are left out so digests are portable."""
        skip = set(_PATH_KEYS) | {"force", "jobs", "harvest_endpoints", "polite_delay_ms"}
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items() if k not in skip}


@dataclass
class Manifest:
    status: str = "ok"
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    files: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    digest: str = ""

    def compute_digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.parameters, sort_keys=True).encode())
        for f in sorted(self.files, key=lambda f: f["path"]):
            h.update(f"{f['path']}\0{f['sha256']}\0".encode())
        return h.hexdigest()

    def to_json(self) -> dict:
        return asdict(self)


def _rows(name: str, text: str) -> int:
    lines = [line for line in text.splitlines() if line.strip()]
    if name.endswith(".csv"):
        return max(len(lines) - 1, 0)
    if name.endswith(".jsonl"):
        return len(lines)
    return 1


class _Writer:
    def __init__(self, outdir: Path, force: bool):
        self.outdir = outdir
        self.force = force
        self.written: list[tuple[str, str]] = []

    def check(self, names) -> None:
        if self.force:
            return
        clash = [n for n in names if (self.outdir / n).exists()]
        if clash:
            raise OutputIOError(f"refusing to overwrite {', '.join(sorted(clash))} (use --force)", "output")

    def write(self, name: str, text: str) -> None:
        path = self.outdir / name
        if path.exists() and not self.force:
            raise OutputIOError(f"refusing to overwrite {path} (use --force)", "output")
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OutputIOError(f"cannot write {path}: {exc}", "output") from exc
        self.written.append((name, text))

    def entries(self, suffix: str = "") -> list[dict]:
        return [
            {"path": name + suffix, "rows": _rows(name, text), "sha256": hashlib.sha256(text.encode()).hexdigest()}
            for name, text in self.written
        ]

    def mark_partial(self) -> None:
        for name, _ in self.written:
            src = self.outdir / name
            if src.exists():
                src.replace(self.outdir / (name + ".partial"))


def _require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise DataValidationError(f"no {what} input configured", "config")
    if not Path(path).exists():
        raise OutputIOError(f"{what} input {path} does not exist", "input")
    return Path(path)


def _read(stage: str, fn, *args):
    try:
        return fn(*args)
    except OSError as exc:
        raise OutputIOError(str(exc), stage) from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise DataValidationError(f"{type(exc).__name__}: {exc}", stage) from exc


STAGES = ("filter", "link", "validate-doi", "resolve-dates", "group", "tag-subjects", "analyze", "report")


def run_pipeline(config: PipelineConfig, until: str = "report") -> tuple[int, Manifest]:
    """Run the stages up to and including ``until`` and write their artifacts plus ``manifest.json``.

    On failure the files written so far are renamed with a ``.partial``
    suffix and the manifest records the failing stage.
    """
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    outdir = Path(config.output_dir)
    manifest = Manifest(parameters=config.parameters())
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory", extra={"path": str(outdir), "error": str(exc)})
        manifest.status, manifest.failed_stage, manifest.error = "failed", "output", str(exc)
        return EXIT_IO, manifest
    writer = _Writer(outdir, config.force)
    stage = "config"
    try:
        config.validate()
        writer.check(["manifest.json"])
        stage = "filter"
        repos = _read(stage, dataio.load_repositories, _require(config.repositories, "repository registry"))
        registry, reg_rej = _read(stage, lambda p: filter_registry(dataio.iter_jsonl(p)), _require(config.registry, "registry"))
        repository, repo_rej = _read(
            stage, lambda p: filter_repository(dataio.iter_jsonl(p), repos), _require(config.repository, "repository")
        )
        writer.write("rejections.csv", dataio.rejections_csv(reg_rej + repo_rej))
        log.info("filtered", extra={"registry_kept": len(registry), "repository_kept": len(repository)})
        if not registry:
            raise DataValidationError("no registry records survive filtering", stage)
        if not repository:
            raise DataValidationError("no repository records survive filtering", stage)

        stage = "link"
        result = link(registry, repository, jobs=config.jobs)
        writer.write("links.csv", dataio.links_csv(result.pairs))
        writer.write("ambiguous_keys.csv", dataio.ambiguous_csv(result.ambiguous))
        if not result.pairs:
            raise DataValidationError("no links between registry and repository records", stage)

        stage = "validate-doi"
        accuracy = validate_links_by_doi(result.pairs)
        writer.write("accuracy.json", json.dumps(accuracy.to_json(), indent=2, sort_keys=True) + "\n")

        stage = "resolve-dates"
        linked_ids = {p.repository_record_id for p in result.pairs}
        ledger = _read(stage, HarvestLedger.load, config.ledger) if config.ledger else None
        scraped = _read(stage, dataio.load_scraped, config.scraped) if config.scraped else None
        resolved = resolve_deposit_dates((r for r in repository if r.record_id in linked_ids), ledger, scraped)
        writer.write(
            "deposit_provenance.csv",
            dataio.csv_text(
                ("record_id", "deposit_date", "provenance"),
                sorted(
                    [(r.record_id, r.deposit_date.isoformat(), resolved.provenance[r.record_id].value) for r in resolved.records]
                    + [(rid, "", "DROPPED_NO_DATE") for rid in resolved.dropped]
                ),
            ),
        )
        dated = {r.record_id for r in resolved.records}
        pairs = [p for p in result.pairs if p.repository_record_id in dated]

        stage = "group"
        publications = group_by_doi(pairs, registry, resolved.records)
        if not publications:
            raise DataValidationError("no publications with a dated deposit", stage)

        stage = "tag-subjects"
        mapping = _read(stage, PanelMapping.load, config.panel_mapping)
        tagging = None
        if config.reader_profiles:
            profiles = _read(stage, load_profiles, _require(config.reader_profiles, "reader profile"))
            tagging = tag_publications(publications, profiles, mapping)
            counts = fractional_counts(p.subjects for p in publications if p.subjects)
            writer.write(
                "subject_counts.csv",
                dataio.csv_text(("subject", "panel", "fractional_count"), ((s, mapping.map(s), fmt_count(round(c, 6))) for s, c in counts.items())),
            )
        writer.write("linked.jsonl", dataio.jsonl_text(p.to_json() for p in publications))
        if STAGES.index(until) <= STAGES.index(stage):
            return _finish(outdir, manifest, writer)

        stage = "analyze"
        opts = ReportOptions(
            cutoff_days=config.cutoff_days,
            caps=config.caps,
            min_repo_count=config.min_repo_count,
            excluded_years=config.excluded_years,
            histogram_widths=config.histogram_widths,
            ddof=config.ddof,
            repositories=repos,
        )
        reports = build_reports(publications, opts)
        audit = an.audit_acceptance_dates(p.registry for p in publications)

        stage = "report"
        for name, text in reports.items():
            writer.write(name, text)
        writer.write("acceptance_audit.json", json.dumps(asdict(audit), indent=2, sort_keys=True) + "\n")
        summary = {
            "registry_kept": len(registry),
            "registry_rejected": len(reg_rej),
            "repository_kept": len(repository),
            "repository_rejected": len(repo_rej),
            "link_pairs": len(result.pairs),
            "ambiguous_keys": len(result.ambiguous),
            "unmatched_repository_records": result.unmatched_repository,
            "deposits_without_date": len(resolved.dropped),
            "publications": len(publications),
            "publications_without_issn": sum(1 for p in publications if not p.has_issn),
            "subject_tagged": tagging.tagged if tagging else 0,
            "subject_no_profile": tagging.no_profile if tagging else len(publications),
            "subject_untaggable": tagging.untaggable if tagging else 0,
            "histogram_marker_days": config.cutoff_days,
        }
        writer.write("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
        manifest.summary = summary
    except PipelineError as exc:
        exc.stage = exc.stage or stage
        log.error("pipeline failed", extra={"stage": exc.stage, "error": str(exc)})
        writer.mark_partial()
        manifest.status, manifest.failed_stage, manifest.error = "failed", exc.stage, str(exc)
        manifest.files = writer.entries(".partial")
        manifest.digest = manifest.compute_digest()
        _write_manifest(outdir, manifest)
        return exc.exit_code, manifest

    return _finish(outdir, manifest, writer)


def _finish(outdir: Path, manifest: Manifest, writer: _Writer) -> tuple[int, Manifest]:
    manifest.files = writer.entries()
    manifest.digest = manifest.compute_digest()
    _write_manifest(outdir, manifest)
    log.info("pipeline finished", extra={"files": len(manifest.files), "digest": manifest.digest})
    return EXIT_OK, manifest


def _write_manifest(outdir: Path, manifest: Manifest) -> None:
    name = "manifest.json" if manifest.status == "ok" else "manifest.partial.json"
    (outdir / name).write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
