# Copyright 2024 voiceprivacy developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command-line entry point: `voiceprivacy <subcommand> ...`."""

import asyncio
import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click

from voiceprivacy.anonymization import McAdamsAnonymizer, McAdamsParams, PoolAnonymizer, PoolSelectionParams
from voiceprivacy.anonymization.embedding import Embedding
from voiceprivacy.anonymization.mcadams import SYNTHESIS_MODES, failed_entries
from voiceprivacy.constants.defaults import (
    ALL_GENDERS,
    CONDITIONS,
    DEFAULT_ALPHA,
    DEFAULT_ASR_SYSTEM,
    DEFAULT_FRAME_MS,
    DEFAULT_HOP_MS,
    DEFAULT_LPC_ORDER,
    DEFAULT_N_FARTHEST,
    DEFAULT_N_SUBSET,
    DEFAULT_SEED,
    DEFAULT_STABILITY_CLAMP,
    DEFAULT_WINDOW,
    SEED_ENVVAR,
    SUBSET_TAGS,
    SUPPORTED_WINDOWS,
)
from voiceprivacy.metrics import RecognitionMetrics, VerificationMetrics
from voiceprivacy.protocol import (
    AsvRow,
    ResultsTable,
    WerRow,
    emit_results,
    load_expected_counts,
    load_mapping,
    load_metadata,
    load_trials,
    reconcile_counts,
    score_trials,
    validate_pseudo_mapping,
)
from voiceprivacy.utils.dataloader import (
    load_embedding_rows,
    load_key_value,
    load_manifest,
    load_score_rows,
    load_transcripts,
    write_embedding_rows,
)
from voiceprivacy.utils.exceptions import (
    ConfigurationError,
    NumericalError,
    ParseError,
    ReconciliationError,
    VoicePrivacyError,
)

logger = logging.getLogger(__name__)
# resolved parameters of every run, shown at the default verbosity
run_logger = logging.getLogger(f"{__name__}.run")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = [logging.WARNING, logging.INFO, logging.DEBUG]

seed_option = click.option(
    "--seed",
    type=int,
    default=DEFAULT_SEED,
    show_default=True,
    envvar=SEED_ENVVAR,
    show_envvar=True,
    help="Seed of all random draws.",
)


def _fail(err: Exception, code: int) -> None:
    click.echo(f"Error: {err}", err=True)
    sys.exit(code)


def handle_errors(func: Callable) -> Callable:
    """Maps library errors to exit codes: 1 for data mismatches and numerical failures, 2 otherwise."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ReconciliationError, NumericalError) as err:
            _fail(err, 1)
        except (VoicePrivacyError, OSError) as err:
            _fail(err, 2)

    return wrapper


def _log_params(command: str, params: Dict[str, Any]) -> None:
    for name, value in params.items():
        run_logger.info("%s: %s = %r", command, name, value)


def _write_json(data: Any, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def _emit(table: ResultsTable, latex: bool) -> None:
    click.echo(emit_results(table, "latex" if latex else "plain"), nl=False)


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output (-v info, -vv debug).")
def main(verbose: int) -> None:
    """Speech and speaker-embedding anonymization with privacy and utility evaluation."""
    level = LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)]
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)
    run_logger.setLevel(min(level, logging.INFO))


################################################################################
# anonymize
################################################################################
@main.command()
@click.option("--manifest", required=True, type=click.Path(path_type=Path), help="`<utterance-id> <wav-path>` lines.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--alpha", type=float, default=DEFAULT_ALPHA, show_default=True, help="McAdams coefficient.")
@click.option("--alpha-range", type=(float, float), default=None, help="Draw alpha uniformly from [LOW, HIGH].")
@click.option("--alpha-per", type=click.Choice(["utterance", "speaker"]), default="utterance", show_default=True)
@click.option("--utt2spk", type=click.Path(path_type=Path), default=None, help="Needed with --alpha-per speaker.")
@click.option("--lpc-order", type=int, default=DEFAULT_LPC_ORDER, show_default=True)
@click.option("--frame-ms", type=float, default=DEFAULT_FRAME_MS, show_default=True)
@click.option("--hop-ms", type=float, default=DEFAULT_HOP_MS, show_default=True)
@click.option("--window", type=click.Choice(SUPPORTED_WINDOWS), default=DEFAULT_WINDOW, show_default=True)
@click.option("--clamp", "--stability-clamp", "stability_clamp", type=float, default=DEFAULT_STABILITY_CLAMP,
              show_default=True, help="Largest pole modulus kept after the angle warp.")
@click.option("--synthesis", type=click.Choice(SYNTHESIS_MODES), default="ola", show_default=True)
@click.option("--pre-emphasis/--no-pre-emphasis", default=False, show_default=True)
@seed_option
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Files processed concurrently.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSON run report. Defaults to OUT/report.json.")
@click.option("--progress/--no-progress", default=False)
@handle_errors
def anonymize(
    manifest: Path,
    out_dir: Path,
    alpha: float,
    alpha_range: Optional[Tuple[float, float]],
    alpha_per: str,
    utt2spk: Optional[Path],
    lpc_order: int,
    frame_ms: float,
    hop_ms: float,
    window: str,
    stability_clamp: float,
    synthesis: str,
    pre_emphasis: bool,
    seed: int,
    jobs: int,
    report_path: Optional[Path],
    progress: bool,
) -> None:
    """Anonymize the WAV files of a manifest with the McAdams coefficient."""
    params = McAdamsParams(
        alpha=alpha,
        lpc_order=lpc_order,
        frame_ms=frame_ms,
        hop_ms=hop_ms,
        window=window,
        stability_clamp=stability_clamp,
        rng_seed=seed,
        alpha_range=alpha_range,
        pre_emphasis=pre_emphasis,
        synthesis=synthesis,
    )
    _log_params("anonymize", {"manifest": manifest, "out": out_dir, **params.to_dict(), "jobs": jobs,
                              "alpha_per": alpha_per, "utt2spk": utt2spk, "report": report_path})
    speaker_map = None
    if alpha_per == "speaker":
        if utt2spk is None:
            raise ConfigurationError("--alpha-per speaker requires --utt2spk")
        speaker_map = load_key_value(utt2spk)
    entries = load_manifest(manifest)
    anonymizer = McAdamsAnonymizer(params=params, jobs=jobs, speaker_map=speaker_map, show_progress=progress)
    report = asyncio.run(anonymizer.anonymize_corpus(entries, out_dir))
    _write_json(report, report_path or out_dir / "report.json")

    failed = failed_entries(report)
    meta = report["metadata"]
    click.echo(f"processed {meta['processed']}/{meta['total']} files, {meta['failed']} failed, {meta['clipped']} samples clipped")
    for entry in failed:
        click.echo(f"failed {entry['utterance_id']}: {entry['error']}", err=True)
    if failed:
        sys.exit(1)


################################################################################
# anon-embed
################################################################################
@main.command("anon-embed")
@click.option("--embeddings", required=True, type=click.Path(path_type=Path),
              help="`<utterance-id> <speaker-id> <v1> ... <vD>` lines to anonymize.")
@click.option("--pool", required=True, type=click.Path(path_type=Path), help="External pool, same format.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--tag", "tags", multiple=True, type=click.Choice(SUBSET_TAGS), help="Subset tags; defaults to all.")
@click.option("--n-farthest", type=int, default=DEFAULT_N_FARTHEST, show_default=True)
@click.option("--n-subset", type=int, default=DEFAULT_N_SUBSET, show_default=True)
@click.option("--length-norm/--no-length-norm", default=False, show_default=True)
@seed_option
@handle_errors
def anon_embed(
    embeddings: Path,
    pool: Path,
    out_dir: Path,
    tags: Tuple[str, ...],
    n_farthest: int,
    n_subset: int,
    length_norm: bool,
    seed: int,
) -> None:
    """Anonymize speaker embeddings by averaging farthest candidates of an external pool."""
    tags = list(tags) or list(SUBSET_TAGS)
    params = PoolSelectionParams(n_farthest=n_farthest, n_subset=n_subset, rng_seed=seed, length_norm=length_norm)
    _log_params("anon-embed", {"embeddings": embeddings, "pool": pool, "out": out_dir, "n_farthest": n_farthest,
                               "n_subset": n_subset, "rng_seed": seed,
                               "length_norm": length_norm, "distance": params.distance, "tags": tags})
    sources = [Embedding(vector=v, speaker_id=s, utterance_id=u) for u, s, v in load_embedding_rows(embeddings)]
    pool_entries = [Embedding(vector=v, speaker_id=s, utterance_id=u) for u, s, v in load_embedding_rows(pool)]
    if not sources:
        raise ConfigurationError(f"no embeddings in {embeddings}")

    assignment, outputs = PoolAnonymizer(pool_entries, params).anonymize(sources, tags=tags)
    out_dir.mkdir(parents=True, exist_ok=True)
    for tag, rows in outputs.items():
        write_embedding_rows([(e.utterance_id, e.speaker_id, e.vector) for e in rows], out_dir / f"pseudo_{tag}.txt")

    grouped: Dict[str, List[Embedding]] = {}
    for e in sources:
        grouped.setdefault(e.speaker_id, []).append(e)
    with open(out_dir / "mapping.txt", "w", encoding="utf-8") as f:
        for record in assignment.mapping_records(grouped):
            f.write(" ".join(record) + "\n")
    _write_json({"params": {"n_farthest": n_farthest, "n_subset": n_subset, "length_norm": length_norm},
                 **assignment.to_audit()}, out_dir / "audit.json")
    click.echo(f"assigned {len(assignment)} pseudo-speakers for {len(grouped)} speakers")


################################################################################
# eval-asv
################################################################################
@main.command("eval-asv")
@click.option("--scores", required=True, type=click.Path(path_type=Path),
              help="`<enrollment-id> <test-utterance-id> <score>` lines.")
@click.option("--trials", required=True, type=click.Path(path_type=Path),
              help="`<enrollment-id> <test-utterance-id> target|nontarget` lines.")
@click.option("--metadata", type=click.Path(path_type=Path), default=None, help="`<speaker-id> <gender>` lines.")
@click.option("--expected-counts", type=click.Path(path_type=Path), default=None)
@click.option("--dataset", default="dataset", show_default=True)
@click.option("--enr", type=click.Choice(CONDITIONS), default="o", show_default=True)
@click.option("--trl", type=click.Choice(CONDITIONS), default="o", show_default=True)
@click.option("--results-json", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--latex", is_flag=True, help="Emit LaTeX table rows.")
@handle_errors
def eval_asv(
    scores: Path,
    trials: Path,
    metadata: Optional[Path],
    expected_counts: Optional[Path],
    dataset: str,
    enr: str,
    trl: str,
    results_json: Optional[Path],
    latex: bool,
) -> None:
    """Compute EER, Cllr-min and Cllr of verification scores."""
    _log_params("eval-asv", {"scores": scores, "trials": trials, "metadata": metadata,
                             "expected_counts": expected_counts,
                             "dataset": dataset, "enr": enr, "trl": trl, "results_json": results_json, "latex": latex})
    trial_list = load_trials(trials)
    rows = load_score_rows(scores)
    score_trials(rows, trial_list)
    spk2gender = load_metadata(metadata) if metadata is not None else None

    partitions = {ALL_GENDERS: trial_list} if spk2gender is None else trial_list.partition_by_gender(spk2gender)
    evaluator = VerificationMetrics(["EER", "Cllr min", "Cllr"])
    table = ResultsTable()
    for gender, part in partitions.items():
        keys = set(part.keys())
        values = evaluator.evaluate(score_trials([r for r in rows if (r[0], r[1]) in keys], part))["metrics"]
        table.add_asv(AsvRow(dataset, enr, trl, gender, values["EER"], values["Cllr min"], values["Cllr"],
                             source=str(scores)))
    _emit(table, latex)
    if results_json is not None:
        _write_json(table.to_dict(), results_json)

    if expected_counts is not None:
        discrepancies = reconcile_counts(trial_list, load_expected_counts(expected_counts), spk2gender)
        for item in discrepancies:
            click.echo(f"count mismatch {item.key}: expected {item.expected}, observed {item.observed}", err=True)
        if discrepancies:
            sys.exit(1)


################################################################################
# eval-asr
################################################################################
@main.command("eval-asr")
@click.option("--ref", "ref_path", required=True, type=click.Path(path_type=Path))
@click.option("--hyp", "hyp_path", required=True, type=click.Path(path_type=Path))
@click.option("--dataset", default="dataset", show_default=True)
@click.option("--condition", type=click.Choice(CONDITIONS), default="o", show_default=True)
@click.option("--system", default=DEFAULT_ASR_SYSTEM, show_default=True, help="ASR system label for the table.")
@click.option("--results-json", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--per-utterance", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="JSON dump of per-utterance breakdowns.")
@click.option("--latex", is_flag=True, help="Emit LaTeX table rows.")
@handle_errors
def eval_asr(
    ref_path: Path,
    hyp_path: Path,
    dataset: str,
    condition: str,
    system: str,
    results_json: Optional[Path],
    per_utterance: Optional[Path],
    latex: bool,
) -> None:
    """Compute corpus word error rate of recognized transcripts."""
    _log_params("eval-asr", {"ref": ref_path, "hyp": hyp_path, "dataset": dataset, "condition": condition,
                             "system": system, "results_json": results_json, "per_utterance": per_utterance,
                             "latex": latex})
    references = load_transcripts(ref_path)
    if not references:
        raise ConfigurationError(f"reference file {ref_path} has no utterances")
    hypotheses = load_transcripts(hyp_path)
    result = RecognitionMetrics().evaluate(references, hypotheses, return_data=per_utterance is not None)
    values = result["metrics"]

    table = ResultsTable(wer_rows=[WerRow(dataset, condition, system, values["WER"], source=str(hyp_path))])
    _emit(table, latex)
    click.echo(
        f"errors: {values['Substitutions']} sub, {values['Deletions']} del, {values['Insertions']} ins"
        f" over {values['Reference words']} words"
    )
    if results_json is not None:
        _write_json(table.to_dict(), results_json)
    if per_utterance is not None:
        _write_json(result["data"], per_utterance)


################################################################################
# validate
################################################################################
@main.command()
@click.option("--mapping", required=True, type=click.Path(path_type=Path),
              help="`<utterance-id> <speaker-id> <tag> <pseudo-id>` lines.")
@click.option("--json", "json_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def validate(mapping: Path, json_path: Optional[Path]) -> None:
    """Check the pseudo-speaker consistency rules of an anonymized evaluation set."""
    _log_params("validate", {"mapping": mapping, "json": json_path})
    report = validate_pseudo_mapping(load_mapping(mapping))
    if json_path is not None:
        _write_json(report.to_dict(), json_path)
    if report.ok:
        click.echo("OK: mapping satisfies all pseudo-speaker rules")
        return
    for violation in report.violations:
        click.echo(f"rule {violation.rule}: {violation.message}")
    sys.exit(1)


################################################################################
# report
################################################################################
@main.command()
@click.argument("results", nargs=-1, required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--latex", is_flag=True, help="Emit LaTeX table rows.")
@handle_errors
def report(results: Tuple[Path, ...], latex: bool) -> None:
    """Merge JSON result files written by eval-asv/eval-asr into one table."""
    _log_params("report", {"results": list(results), "latex": latex})
    table = ResultsTable()
    for path in results:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"not a JSON document: {e}", path=path)
        table = table.merge(ResultsTable.from_dict(data))
    _emit(table, latex)
