"""Command-line surface wiring all modules into runnable workflows.

Exit codes: 0 full success, 1 configuration error (before any work),
2 partial per-sentence failures (failed ids listed in the manifest).

Translation record schema (one JSON object per output line)::

    {
      "id": str, "src": str, "ref": str (present only when the corpus has one),
      "pair": {"src", "tgt", "src_name", "tgt_name"},
      "draft": str,
      "candidates":       [{"surface", "score", "origin", "anchored"}, ...],
      "selected":         [{"surface", "score", "origin", "anchored"}, ...],
      "interpretations":  [{"word", "gloss", "status", "removed_at_step"}, ...],
      "iqc_trace":        [{"i", "word", "s_hat", "s_bar", "accepted"}, ...],
      "final": str,
      "final_qe": {"scorer", "value", "convention", "lo", "hi"} | null
    }

Every run also writes a manifest JSON (config snapshot, backend and
scorer ids, per-tag LLM call counts, timing, failed ids).
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import click

from . import bench as bench_mod
from .core import (
    ConfigError,
    CorpusError,
    DemonstrationSets,
    LangPair,
    PipelineConfig,
    SentencePair,
    TranslationRecord,
    config_from_dict,
    load_corpus,
    record_to_line,
    validate_config,
)
from .demos import assemble_sets, load_demos, save_demos, synthesize
from .detection import DetectionResult, detect_external, detect_intrinsic, draft_translate
from .llm import LlmGateway, OpenAICompatBackend, ScriptedBackend
from .prompts import render
from .qe import KNOWN_SCORERS, HttpQe, StubQe, rerank_best
from .refine import guided_translate, interpret, iqc

DEFAULT_TAU_GRID = "0.10,0.13,0.15,0.17,0.19"

LLM_CALL_TAGS = ("mt", "diff", "interp", "interp-translate", "igt", "demo-synth")


def translate_one(
    sp: SentencePair,
    pair: LangPair,
    cfg: PipelineConfig,
    demosets: DemonstrationSets,
    gateway: LlmGateway,
    qe,
    without_draft: bool = False,
    without_iqc: bool = False,
) -> TranslationRecord:
    """Run the full per-sentence pipeline: draft, detect, interpret, refine."""
    draft = "" if without_draft else draft_translate(sp.src, pair, demosets, gateway)
    if cfg.mode == "duat-i":
        words = tuple(detect_intrinsic(sp.src, draft, pair, demosets, gateway))
        det = DetectionResult(
            draft=draft, candidates=words, selected=words, mode="duat-i", tau=None
        )
    else:
        det = detect_external(
            sp.src,
            draft,
            pair,
            demosets,
            gateway,
            qe,
            cfg.sample_count,
            cfg.sample_temperature,
            cfg.difficulty_threshold,
        )

    if not det.selected:
        # No difficult words: fall back to the plain in-context translation.
        interps: tuple = ()
        trace: tuple = ()
        final = draft
    else:
        found = interpret(
            sp.src, det.selected, pair, demosets, gateway, cfg.interpretation_language
        )
        if without_iqc:
            final = guided_translate(sp.src, draft, found, pair, demosets, gateway)
            interps = tuple(replace(a, status="kept") for a in found)
            trace = ()
        else:
            result = iqc(sp.src, draft, found, pair, demosets, gateway, qe.score_sentence)
            final = result.final
            interps = result.interpretations
            trace = result.trace

    final_qe = qe.score_sentence(sp.src, final) if final else None
    return TranslationRecord(
        pair=pair,
        input=sp,
        draft=draft,
        candidates=det.candidates,
        selected=det.selected,
        interpretations=interps,
        iqc_trace=trace,
        final=final,
        final_qe=final_qe,
    )


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _pick(flag, config: dict, key: str, default=None):
    # Flags win over the config file; the file wins over defaults.
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _build_pipeline_config(conf: dict, mode, tau, k_samples, temperature, shots, interp_lang) -> PipelineConfig:
    values: dict = {}
    mapping = [
        ("mode", mode, "mode"),
        ("difficulty_threshold", tau, "tau"),
        ("sample_count", k_samples, "k_samples"),
        ("sample_temperature", temperature, "temperature"),
        ("shots", shots, "shots"),
        ("interpretation_language", interp_lang, "interp_lang"),
    ]
    for field_name, flag, key in mapping:
        value = _pick(flag, conf, key)
        if value is not None:
            values[field_name] = value
    for key in ("qe_sentence_scorer", "qe_token_scorer", "llm_backend", "max_retries", "retry_backoff_s"):
        if key in conf:
            values[key] = conf[key]
    return config_from_dict(values)


def _build_pair(conf: dict, src_lang, tgt_lang, src_name, tgt_name) -> LangPair:
    src = _pick(src_lang, conf, "src_lang")
    tgt = _pick(tgt_lang, conf, "tgt_lang")
    if not src or not tgt:
        raise ConfigError("--src-lang and --tgt-lang are required")
    return LangPair.from_codes(
        src, tgt, _pick(src_name, conf, "src_name"), _pick(tgt_name, conf, "tgt_name")
    )


def _build_backend(conf: dict, llm_playbook, llm_endpoint, cfg: PipelineConfig):
    playbook = _pick(llm_playbook, conf, "llm_playbook")
    endpoint = _pick(llm_endpoint, conf, "llm_endpoint")
    if playbook:
        backend = ScriptedBackend.from_playbook(playbook)
        return backend, f"scripted:{Path(playbook).name}"
    try:
        backend = OpenAICompatBackend(endpoint=endpoint)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return backend, f"openai-compat:{backend.endpoint}"


def _build_qe(conf: dict, qe_stub, qe_endpoint, cfg: PipelineConfig):
    stub = _pick(qe_stub, conf, "qe_stub", default=False)
    endpoint = _pick(qe_endpoint, conf, "qe_endpoint")
    if stub:
        client = StubQe()
        ids = client.health()["scorers"]
        return client, {"sentence": "stub-chrf3", "token": "stub-lcs", "stub": True}, frozenset(ids) | KNOWN_SCORERS
    if not endpoint:
        raise ConfigError("one of --qe-stub or --qe-endpoint is required")
    client = HttpQe(
        endpoint,
        sentence_scorer=cfg.qe_sentence_scorer,
        token_scorer=cfg.qe_token_scorer,
        retries=cfg.max_retries,
        backoff_s=cfg.retry_backoff_s,
    )
    served = frozenset(client.health().get("scorers", []))
    return (
        client,
        {"sentence": cfg.qe_sentence_scorer, "token": cfg.qe_token_scorer, "stub": False},
        served | KNOWN_SCORERS,
    )


def _manifest_path(manifest: str | None, out: str) -> Path:
    return Path(manifest) if manifest else Path(out + ".manifest.json")


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def _call_counts(gateway: LlmGateway | None) -> dict:
    if gateway is None:
        return {tag: 0 for tag in LLM_CALL_TAGS}
    return {tag: gateway.calls_tagged(tag) for tag in LLM_CALL_TAGS}


def _run_batch(pairs, worker, jobs: int, out_handle):
    """Run per-sentence workers, streaming lines in input order."""
    failed: list[tuple[str, str]] = []

    def safe(sp):
        try:
            return sp.id, worker(sp), None
        except Exception as exc:  # per-sentence isolation, batch continues
            return sp.id, None, f"{type(exc).__name__}: {exc}"

    if jobs <= 1:
        outcomes = (safe(sp) for sp in pairs)
        for sid, line, error in outcomes:
            if error is None:
                out_handle.write(line + "\n")
                out_handle.flush()
            else:
                failed.append((sid, error))
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(safe, sp) for sp in pairs]
            for future in futures:
                sid, line, error = future.result()
                if error is None:
                    out_handle.write(line + "\n")
                    out_handle.flush()
                else:
                    failed.append((sid, error))
    return failed


def _corpus_format(path: str, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "tsv" if path.endswith((".tsv", ".tab")) else "jsonl"


@click.group()
def cli() -> None:
    """Difficult-word aligned translation pipeline."""


def _translate_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file mirroring the flags; flags win."),
        click.option("--src-lang", default=None),
        click.option("--tgt-lang", default=None),
        click.option("--src-name", default=None, help="Display name when the code is not built in."),
        click.option("--tgt-name", default=None),
        click.option("--mode", type=click.Choice(["duat-i", "duat-e"]), default=None),
        click.option("--tau", type=float, default=None, help="Difficulty threshold."),
        click.option("--k-samples", type=int, default=None, help="Sampled detection passes."),
        click.option("--temperature", type=float, default=None, help="Detection sampling temperature."),
        click.option("--shots", type=int, default=None, help="Demonstrations per prompt."),
        click.option("--interp-lang", type=click.Choice(["target", "source", "source-then-translate"]), default=None),
        click.option("--demos", "demos_path", type=click.Path(exists=True), default=None, help="Synthesized demonstrations JSONL."),
        click.option("--llm-endpoint", default=None),
        click.option("--llm-playbook", type=click.Path(exists=True), default=None),
        click.option("--qe-endpoint", default=None),
        click.option("--qe-stub", is_flag=True, default=None, help="Use the deterministic local scorers."),
        click.option("--seed", type=int, default=None, help="Demonstration selection seed."),
        click.option("--format", "corpus_fmt", type=click.Choice(["jsonl", "tsv"]), default=None),
        click.option("--out", required=True, type=click.Path(), help="Output records JSONL."),
        click.option("--manifest", default=None, type=click.Path(), help="Run manifest path (default: <out>.manifest.json)."),
        click.option("--jobs", type=int, default=1, help="Concurrent sentences."),
        click.option("--dry-run", is_flag=True, default=False, help="Render prompts, issue nothing."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _setup_translate(
    config_path, src_lang, tgt_lang, src_name, tgt_name, mode, tau, k_samples,
    temperature, shots, interp_lang, demos_path, llm_endpoint, llm_playbook,
    qe_endpoint, qe_stub, seed, corpus, corpus_fmt, dry_run,
):
    """Shared setup for translate-family commands; ConfigError on bad input."""
    conf = _load_config_file(config_path)
    cfg = _build_pipeline_config(conf, mode, tau, k_samples, temperature, shots, interp_lang)
    pair = _build_pair(conf, src_lang, tgt_lang, src_name, tgt_name)

    gateway, backend_id, qe, scorer_meta = None, None, None, {}
    if not dry_run:
        backend, backend_id = _build_backend(conf, llm_playbook, llm_endpoint, cfg)
        qe, scorer_meta, known = _build_qe(conf, qe_stub, qe_endpoint, cfg)
        cfg = validate_config(cfg, known_scorers=known)
        gateway = LlmGateway(backend, max_retries=cfg.max_retries, backoff_s=cfg.retry_backoff_s)
    else:
        cfg = validate_config(cfg)

    demos_file = _pick(demos_path, conf, "demos")
    run_seed = _pick(seed, conf, "seed", default=0)
    if cfg.shots > 0:
        if not demos_file:
            raise ConfigError(f"shots={cfg.shots} requires --demos")
        demosets = assemble_sets(load_demos(demos_file), cfg.shots, run_seed)
    else:
        demosets = DemonstrationSets.empty()

    pairs = load_corpus(corpus, _corpus_format(corpus, _pick(corpus_fmt, conf, "format")))
    manifest = {
        "command": None,
        "config": asdict(cfg),
        "pair": {"src": pair.src, "tgt": pair.tgt},
        "corpus": str(corpus),
        "backend": backend_id,
        "scorers": scorer_meta,
        "demos": demos_file,
        "seed": run_seed,
        "dry_run": dry_run,
    }
    return cfg, pair, pairs, demosets, gateway, qe, manifest


def _finish_run(ctx, manifest, manifest_path, gateway, failed, total, started):
    manifest["sentences"] = total
    manifest["failed"] = len(failed)
    manifest["succeeded"] = total - len(failed)
    manifest["failed_ids"] = [sid for sid, _ in failed]
    manifest["failures"] = [{"id": sid, "error": err} for sid, err in failed]
    manifest["llm_calls"] = _call_counts(gateway)
    manifest["duration_s"] = round(time.monotonic() - started, 3)
    _write_manifest(manifest_path, manifest)
    if failed:
        ctx.exit(2)


def _run_translate_command(ctx, command_name, corpus, out, manifest_opt, jobs, dry_run, setup_args, without_draft=False, without_iqc=False):
    started = time.monotonic()
    try:
        cfg, pair, pairs, demosets, gateway, qe, manifest = _setup_translate(*setup_args)
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    manifest["command"] = command_name
    if without_draft or without_iqc:
        manifest["ablation"] = {"without_draft": without_draft, "without_iqc": without_iqc}
    manifest_path = _manifest_path(manifest_opt, out)

    if dry_run:
        def worker(sp):
            prompts = {}
            if without_draft:
                prompts["diff"] = render("diff_detect", pair, demosets, {"source": sp.src, "draft": ""})
            else:
                prompts["mt"] = render("mt", pair, demosets, {"source": sp.src})
            return json.dumps({"id": sp.id, "dry_run": True, "prompts": prompts}, ensure_ascii=False)
    else:
        def worker(sp):
            record = translate_one(
                sp, pair, cfg, demosets, gateway, qe,
                without_draft=without_draft, without_iqc=without_iqc,
            )
            return record_to_line(record)

    with open(out, "w", encoding="utf-8") as out_handle:
        failed = _run_batch(pairs, worker, jobs, out_handle)
    _finish_run(ctx, manifest, manifest_path, gateway, failed, len(pairs), started)


@cli.command()
@click.argument("corpus", type=click.Path(exists=True))
@_translate_options
@click.pass_context
def translate(ctx, corpus, config_path, src_lang, tgt_lang, src_name, tgt_name, mode,
              tau, k_samples, temperature, shots, interp_lang, demos_path, llm_endpoint,
              llm_playbook, qe_endpoint, qe_stub, seed, corpus_fmt, out, manifest, jobs, dry_run):
    """Translate CORPUS end to end, streaming one record per sentence."""
    setup_args = (config_path, src_lang, tgt_lang, src_name, tgt_name, mode, tau,
                  k_samples, temperature, shots, interp_lang, demos_path, llm_endpoint,
                  llm_playbook, qe_endpoint, qe_stub, seed, corpus, corpus_fmt, dry_run)
    _run_translate_command(ctx, "translate", corpus, out, manifest, jobs, dry_run, setup_args)


@cli.command()
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--without-draft", is_flag=True, default=False, help="Detect difficult words without a draft translation.")
@click.option("--without-iqc", is_flag=True, default=False, help="Keep all interpretations; skip quality control.")
@_translate_options
@click.pass_context
def ablate(ctx, corpus, without_draft, without_iqc, config_path, src_lang, tgt_lang,
           src_name, tgt_name, mode, tau, k_samples, temperature, shots, interp_lang,
           demos_path, llm_endpoint, llm_playbook, qe_endpoint, qe_stub, seed,
           corpus_fmt, out, manifest, jobs, dry_run):
    """Run the pipeline with one component removed."""
    if not (without_draft or without_iqc):
        raise click.ClickException("pick at least one of --without-draft / --without-iqc")
    setup_args = (config_path, src_lang, tgt_lang, src_name, tgt_name, mode, tau,
                  k_samples, temperature, shots, interp_lang, demos_path, llm_endpoint,
                  llm_playbook, qe_endpoint, qe_stub, seed, corpus, corpus_fmt, dry_run)
    _run_translate_command(ctx, "ablate", corpus, out, manifest, jobs, dry_run, setup_args,
                           without_draft=without_draft, without_iqc=without_iqc)


@cli.command("sweep-tau")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--tau-grid", default=DEFAULT_TAU_GRID, show_default=True, help="Comma-separated thresholds.")
@_translate_options
@click.pass_context
def sweep_tau(ctx, corpus, tau_grid, config_path, src_lang, tgt_lang, src_name, tgt_name,
              mode, tau, k_samples, temperature, shots, interp_lang, demos_path,
              llm_endpoint, llm_playbook, qe_endpoint, qe_stub, seed, corpus_fmt,
              out, manifest, jobs, dry_run):
    """Repeat translation over a threshold grid, summarizing each run."""
    started = time.monotonic()
    try:
        grid = [float(v) for v in tau_grid.split(",") if v.strip()]
        if not grid:
            raise ConfigError("empty --tau-grid")
        setup_args = (config_path, src_lang, tgt_lang, src_name, tgt_name, mode, tau,
                      k_samples, temperature, shots, interp_lang, demos_path, llm_endpoint,
                      llm_playbook, qe_endpoint, qe_stub, seed, corpus, corpus_fmt, dry_run)
        cfg, pair, pairs, demosets, gateway, qe, run_manifest = _setup_translate(*setup_args)
        for value in grid:
            validate_config(replace(cfg, difficulty_threshold=value))
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc
    run_manifest["command"] = "sweep-tau"
    run_manifest["tau_grid"] = grid
    manifest_path = _manifest_path(manifest, out)

    failed_total: list[tuple[str, str]] = []
    with open(out, "w", encoding="utf-8") as out_handle:
        for value in grid:
            if dry_run:
                out_handle.write(json.dumps({"tau": value, "dry_run": True}) + "\n")
                out_handle.flush()
                continue
            point_cfg = replace(cfg, difficulty_threshold=value)
            selected_counts: list[int] = []
            qe_values: list[float] = []

            def worker(sp):
                record = translate_one(sp, pair, point_cfg, demosets, gateway, qe)
                selected_counts.append(len(record.selected))
                if record.final_qe is not None:
                    qe_values.append(record.final_qe.value)
                return record

            point_failed = []
            for sp in pairs:
                try:
                    worker(sp)
                except Exception as exc:
                    point_failed.append((sp.id, f"{type(exc).__name__}: {exc}"))
            failed_total.extend(point_failed)
            summary = {
                "tau": value,
                "sentences": len(pairs),
                "failed": len(point_failed),
                "selected_total": sum(selected_counts),
                "selected_mean": (sum(selected_counts) / len(selected_counts)) if selected_counts else 0.0,
                "final_qe_mean": (sum(qe_values) / len(qe_values)) if qe_values else None,
            }
            out_handle.write(json.dumps(summary, ensure_ascii=False) + "\n")
            out_handle.flush()
    _finish_run(ctx, run_manifest, manifest_path, gateway, failed_total, len(pairs) * len(grid), started)


@cli.command("synth-demos")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--src-lang", default=None)
@click.option("--tgt-lang", default=None)
@click.option("--src-name", default=None)
@click.option("--tgt-name", default=None)
@click.option("--llm-endpoint", default=None)
@click.option("--llm-playbook", type=click.Path(exists=True), default=None)
@click.option("--qe-endpoint", default=None)
@click.option("--qe-stub", is_flag=True, default=None)
@click.option("--limit", type=int, default=None, help="Synthesize from at most this many pairs.")
@click.option("--min-ref-chars", type=int, default=0, help="Skip pairs with references shorter than this.")
@click.option("--format", "corpus_fmt", type=click.Choice(["jsonl", "tsv"]), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--manifest", default=None, type=click.Path())
@click.option("--dry-run", is_flag=True, default=False)
@click.pass_context
def synth_demos(ctx, corpus, config_path, src_lang, tgt_lang, src_name, tgt_name,
                llm_endpoint, llm_playbook, qe_endpoint, qe_stub, limit, min_ref_chars,
                corpus_fmt, out, manifest, dry_run):
    """Synthesize demonstration exemplars from a parallel CORPUS."""
    started = time.monotonic()
    try:
        conf = _load_config_file(config_path)
        cfg = _build_pipeline_config(conf, None, None, None, None, None, None)
        pair = _build_pair(conf, src_lang, tgt_lang, src_name, tgt_name)
        pairs = load_corpus(corpus, _corpus_format(corpus, _pick(corpus_fmt, conf, "format")))
        gateway, backend_id, qe = None, None, None
        if not dry_run:
            backend, backend_id = _build_backend(conf, llm_playbook, llm_endpoint, cfg)
            qe, scorer_meta, known = _build_qe(conf, qe_stub, qe_endpoint, cfg)
            validate_config(cfg, known_scorers=known)
            gateway = LlmGateway(backend, max_retries=cfg.max_retries, backoff_s=cfg.retry_backoff_s)
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from exc

    eligible = [p for p in pairs if p.ref is not None and len(p.ref) >= min_ref_chars]
    if limit is not None:
        eligible = eligible[:limit]

    run_manifest = {
        "command": "synth-demos",
        "config": asdict(cfg),
        "pair": {"src": pair.src, "tgt": pair.tgt},
        "corpus": str(corpus),
        "backend": backend_id,
        "limit": limit,
        "min_ref_chars": min_ref_chars,
        "dry_run": dry_run,
    }
    manifest_path = _manifest_path(manifest, out)

    if dry_run:
        with open(out, "w", encoding="utf-8") as out_handle:
            for sp in eligible:
                prompts = {
                    "mt": render("mt", pair, DemonstrationSets.empty(), {"source": sp.src}),
                    "demo_synth": render(
                        "demo_synth", pair, DemonstrationSets.empty(),
                        {"source": sp.src, "target": sp.ref},
                    ),
                }
                out_handle.write(json.dumps({"id": sp.id, "dry_run": True, "prompts": prompts}, ensure_ascii=False) + "\n")
        _finish_run(ctx, run_manifest, manifest_path, gateway, [], len(eligible), started)
        return

    synthesized, skips = synthesize(eligible, pair, gateway, qe)
    save_demos(synthesized, out)
    run_manifest["skipped"] = [{"id": s.pair_id, "reason": s.reason} for s in skips]
    failed = [(s.pair_id, s.reason) for s in skips]
    _finish_run(ctx, run_manifest, manifest_path, gateway, failed, len(eligible), started)


@cli.command("build-bench")
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--scores", "scores_specs", multiple=True, required=True,
              help="SYSTEM=PATH score file (repeatable; at least two systems).")
@click.option("--rho", "rho_specs", multiple=True, help="SYSTEM=FRACTION override (repeatable).")
@click.option("--rho-default", type=float, default=0.3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--src-lang", default="en", show_default=True, help="Length-convention language for the stats report.")
@click.option("--tgt-lang", default="en", show_default=True)
@click.option("--format", "corpus_fmt", type=click.Choice(["jsonl", "tsv"]), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--manifest", default=None, type=click.Path())
@click.option("--dry-run", is_flag=True, default=False)
@click.pass_context
def build_bench(ctx, corpus, scores_specs, rho_specs, rho_default, seed, src_lang,
                tgt_lang, corpus_fmt, out, manifest, dry_run):
    """Build a hard-sample benchmark from per-system score files."""
    try:
        pairs = load_corpus(corpus, _corpus_format(corpus, corpus_fmt))
        rho_by_system = {}
        for spec in rho_specs:
            name, _, value = spec.partition("=")
            if not value:
                raise ConfigError(f"--rho expects SYSTEM=FRACTION, got {spec!r}")
            rho_by_system[name] = float(value)
        systems = []
        for spec in scores_specs:
            name, _, path = spec.partition("=")
            if not path:
                raise ConfigError(f"--scores expects SYSTEM=PATH, got {spec!r}")
            systems.append(
                bench_mod.load_system_scores(path, name, rho_by_system.get(name, rho_default))
            )
        rows, bench_manifest = bench_mod.build_benchmark(pairs, systems, seed)
    except (ConfigError, CorpusError, bench_mod.BenchError, OSError, ValueError) as exc:
        raise click.ClickException(str(exc)) from exc

    bench_manifest["command"] = "build-bench"
    bench_manifest["corpus"] = str(corpus)
    bench_manifest["stats"] = bench_mod.corpus_stats(pairs, src_lang, tgt_lang)
    if dry_run:
        click.echo(json.dumps(bench_manifest, ensure_ascii=False, indent=2))
        return
    with open(out, "w", encoding="utf-8") as out_handle:
        for row in rows:
            out_handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    _write_manifest(_manifest_path(manifest, out), bench_manifest)


@cli.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--qe-endpoint", default=None)
@click.option("--qe-stub", is_flag=True, default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--manifest", default=None, type=click.Path())
@click.option("--dry-run", is_flag=True, default=False)
@click.pass_context
def rerank(ctx, inputs, qe_endpoint, qe_stub, out, manifest, dry_run):
    """Pick the best final translation per sentence across several run outputs."""
    started = time.monotonic()
    try:
        if len(inputs) < 2:
            raise ConfigError("rerank needs at least two run outputs")
        runs = []
        for path in inputs:
            records = {}
            with open(path, encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        obj = json.loads(line)
                        records[obj["id"]] = obj
            runs.append(records)
        qe, scorer_meta = None, {}
        if not dry_run:
            qe, scorer_meta, _ = _build_qe({}, qe_stub, qe_endpoint, PipelineConfig())
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        raise click.ClickException(str(exc)) from exc

    run_manifest = {
        "command": "rerank",
        "inputs": [str(p) for p in inputs],
        "scorers": scorer_meta,
        "dry_run": dry_run,
    }
    skipped: list[tuple[str, str]] = []
    first_order = list(runs[0])
    total = len(first_order)
    with open(out, "w", encoding="utf-8") as out_handle:
        for sample_id in first_order:
            if not all(sample_id in run for run in runs):
                skipped.append((sample_id, "missing from some runs"))
                continue
            src = runs[0][sample_id]["src"]
            candidates = [run[sample_id]["final"] for run in runs]
            if dry_run:
                requests_body = [
                    {"src": src, "cand": cand, "scorer": "stub-chrf3" if qe_stub else "wmt21-comet-qe-da"}
                    for cand in candidates
                ]
                out_handle.write(json.dumps({"id": sample_id, "dry_run": True, "requests": requests_body}, ensure_ascii=False) + "\n")
                continue
            index, score = rerank_best(src, candidates, qe)
            out_handle.write(
                json.dumps(
                    {
                        "id": sample_id,
                        "src": src,
                        "best_index": index,
                        "best_of": len(candidates),
                        "final": candidates[index],
                        "qe": {"scorer": score.scorer, "value": score.value, "convention": score.convention},
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            out_handle.flush()
    _finish_run(ctx, run_manifest, _manifest_path(manifest, out), None, skipped, total, started)


def main(argv: list[str] | None = None) -> None:
    """Entry point mapping click's exits onto the documented codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)


if __name__ == "__main__":
    main()
