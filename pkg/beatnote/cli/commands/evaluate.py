"""The `beatnote eval` command."""

from pathlib import Path

import click

from beatnote.cli.output import error, output_json_raw, print_table, success
from beatnote.exceptions import BeatNoteError, InputError
from beatnote.files import read_beats, read_decode, read_manifest, read_onsets, write_score_csv
from beatnote.metrics import (
    BEAT_TOLERANCE,
    ONSET_TOLERANCE,
    SCORE_COLUMNS,
    aggregate,
    recording_row,
    score_recording,
)


@click.command("eval")
@click.option(
    "--manifest",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Manifest with reference onsets/beats and decode results.",
)
@click.option(
    "--results-dir",
    type=click.Path(exists=True, file_okay=False),
    default=None,
    help="Directory of <name>.json decode results (overrides the manifest's result paths).",
)
@click.option(
    "--onset-tolerance", type=float, default=ONSET_TOLERANCE, show_default=True, help="Seconds."
)
@click.option(
    "--beat-tolerance", type=float, default=BEAT_TOLERANCE, show_default=True, help="Seconds."
)
@click.option("--per-recording", is_flag=True, help="Also list every recording's scores.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Score CSV.")
@click.pass_context
def evaluate(ctx, manifest, results_dir, onset_tolerance, beat_tolerance, per_recording, output):
    """Score decoded onsets and beats against references, averaged per meter.

    \b
    Examples:
      beatnote eval --manifest decoded/manifest.json -o scores.csv
      beatnote eval --manifest corpus/manifest.json --results-dir decoded --per-recording
    """
    try:
        scores = []
        for entry in read_manifest(manifest):
            result = Path(results_dir) / f"{entry.name}.json" if results_dir else entry.result
            if result is None or entry.onsets is None:
                raise InputError(
                    f"Recording {entry.name} needs a decode result and reference onsets",
                    source=manifest,
                )
            beats, onsets = read_decode(result)
            reference_beats = read_beats(entry.beats) if entry.beats is not None else None
            scores.append(
                score_recording(
                    entry.name,
                    entry.meter or "unknown",
                    onsets,
                    read_onsets(entry.onsets),
                    beats=[b.time for b in beats] if beats is not None else None,
                    reference_beats=(
                        [b.time for b in reference_beats] if reference_beats is not None else None
                    ),
                    onset_tolerance=onset_tolerance,
                    beat_tolerance=beat_tolerance,
                )
            )
        rows = aggregate(scores)
        recordings = [recording_row(s) for s in scores] if per_recording else []
        if output:
            columns = (["name"] if per_recording else []) + list(SCORE_COLUMNS)
            write_score_csv(output, recordings + rows, columns)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    if ctx.obj.get("json"):
        output_json_raw({"recordings": recordings, "summary": rows})
        return
    if per_recording:
        print_table(recordings, ["name"] + list(SCORE_COLUMNS))
        click.echo()
    print_table(rows, list(SCORE_COLUMNS))
    if output:
        success(f"Scores for {len(scores)} recordings -> {output}", ctx.obj.get("quiet"))
