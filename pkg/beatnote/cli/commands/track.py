"""The `beatnote track`, `track-annotated` and `track-notes` commands."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from beatnote.cli.config import decode_settings, max_states
from beatnote.cli.output import error, info, success, to_json
from beatnote.cli.parsing import parse_pitch_range, resolve_meter
from beatnote.decode import estimate_memory, viterbi_full, viterbi_notes, viterbi_reduced
from beatnote.exceptions import BeatNoteError, InputError, human_size
from beatnote.files import (
    BEAT_UNAWARE_COMMAND,
    RecordingEntry,
    read_beats,
    read_features,
    read_manifest,
    read_pattern,
    write_decode,
    write_manifest,
)
from beatnote.model import JointModel
from beatnote.models import DecodeResult, Weighting
from beatnote.statespace import DEFAULT_MIN_PITCH, DEFAULT_PITCH_COUNT, build_note_space
from beatnote.transition import NoteTransitionConfig

DecodeOne = Callable[[RecordingEntry], Tuple[DecodeResult, Dict[str, Any]]]


def input_options(f):
    """--features for one recording or --manifest/--out-dir for a batch."""
    f = click.option(
        "--out-dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Batch output directory (with --manifest).",
    )(f)
    f = click.option(
        "--manifest",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Decode every recording of a manifest.",
    )(f)
    f = click.option(
        "--output",
        "-o",
        type=click.Path(dir_okay=False),
        default=None,
        help="Output JSON file (default: stdout).",
    )(f)
    f = click.option(
        "--features",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Feature CSV of one recording.",
    )(f)
    return f


def note_options(default_weighting: Optional[str] = None):
    """Options of the note automaton, plus the beat weighting when a default is given."""

    def decorator(f):
        weighting_options = [
            click.option(
                "--weighting",
                type=click.Choice(Weighting.ALL),
                default=default_weighting,
                show_default=True,
                help="How beats modulate NonVocal to Attack transitions.",
            ),
            click.option("--w", "w", type=float, default=None, help="Weighting exponent (1.0)."),
            click.option(
                "--sigma", type=float, default=None, help="Weighting width in seconds (0.03)."
            ),
        ]
        options = [
            click.option("--c-attack", type=float, default=None, help="Attack self-loop (0.9)."),
            click.option("--c-stable", type=float, default=None, help="Stable self-loop (0.99)."),
            click.option(
                "--c-nonvocal", type=float, default=None, help="NonVocal self-loop (0.9999)."
            ),
            click.option(
                "--pitch-range",
                default=None,
                help=f"MIDI pitches LOW:HIGH of the note states "
                f"({DEFAULT_MIN_PITCH}:{DEFAULT_MIN_PITCH + DEFAULT_PITCH_COUNT - 1}).",
            ),
        ]
        if default_weighting is not None:
            options = weighting_options + options
        for option in reversed(options):
            f = option(f)
        return f

    return decorator


def decode_options(f):
    f = click.option(
        "--beam",
        type=float,
        default=None,
        help="Prune states this far (log) below the frame's best. Off by default.",
    )(f)
    f = click.option(
        "--spill",
        is_flag=True,
        help="Keep backpointers on disk when they exceed the memory cap.",
    )(f)
    return f


def note_config(
    weighting: str,
    w: Optional[float],
    sigma: Optional[float],
    c_attack: Optional[float],
    c_stable: Optional[float],
    c_nonvocal: Optional[float],
) -> NoteTransitionConfig:
    given = {
        "weighting": weighting,
        "w": w,
        "sigma": sigma,
        "c_attack": c_attack,
        "c_stable": c_stable,
        "c_nonvocal": c_nonvocal,
    }
    return NoteTransitionConfig(**{k: v for k, v in given.items() if v is not None})


def _pitch_space(pitch_range: Optional[str]) -> Tuple[int, int]:
    if pitch_range is None:
        return DEFAULT_MIN_PITCH, DEFAULT_PITCH_COUNT
    return parse_pitch_range(pitch_range)


def run_decodes(
    ctx: click.Context,
    features: Optional[str],
    output: Optional[str],
    manifest: Optional[str],
    out_dir: Optional[str],
    decode_one: DecodeOne,
    beats: Optional[str] = None,
) -> None:
    """Decode one recording or a manifest batch, writing decode JSON."""
    quiet = ctx.obj.get("quiet")
    try:
        if (features is None) == (manifest is None):
            raise InputError("Give exactly one of --features or --manifest")

        if features is not None:
            entry = RecordingEntry(
                name=Path(features).stem,
                features=Path(features),
                beats=Path(beats) if beats else None,
            )
            result, config = decode_one(entry)
            if output:
                write_decode(output, result, config)
                success(
                    f"{len(result.beats)} beats, {len(result.onsets)} onsets -> {output}", quiet
                )
            else:
                click.echo(to_json(result.to_dict(config)), nl=False)
            return

        if out_dir is None:
            raise InputError("--manifest needs --out-dir")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        entries = read_manifest(manifest)  # type: ignore[arg-type]
        for entry in entries:
            result, config = decode_one(entry)
            entry.result = out / f"{entry.name}.json"
            write_decode(entry.result, result, config)
            info(f"{entry.name}: {len(result.beats)} beats, {len(result.onsets)} onsets", quiet)
        write_manifest(out / "manifest.json", entries)
        success(f"Decoded {len(entries)} recordings -> {out / 'manifest.json'}", quiet)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)


@click.command("track")
@input_options
@click.option(
    "--pattern",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Trained rhythmic pattern JSON.",
)
@click.option("--meter", default="4/4", show_default=True, help="Meter id or meter JSON file.")
@click.option("--onset-prior", default=None, help="Comma-separated onset prior per beat.")
@click.option(
    "--tempo", type=float, default=None, help="Tempo in bpm (required unless in manifest)."
)
@click.option(
    "--tempo-margin", type=float, default=10.0, show_default=True, help="Tempo range +/- bpm."
)
@note_options(Weighting.SIMPLE)
@decode_options
@click.pass_context
def track(
    ctx,
    features,
    output,
    manifest,
    out_dir,
    pattern,
    meter,
    onset_prior,
    tempo,
    tempo_margin,
    weighting,
    w,
    sigma,
    c_attack,
    c_stable,
    c_nonvocal,
    pitch_range,
    spill,
    beam,
):
    """Decode beats and vocal note onsets jointly with the full model.

    \b
    Examples:
      beatnote track --features f.csv --pattern p.json --meter 4/4 --tempo 96 \\
          --weighting simple --w 1.1 --sigma 0.045
      beatnote --memory-cap 16GiB track --manifest m.json --out-dir decoded \\
          --pattern p.json --spill
    """
    quiet = ctx.obj.get("quiet")
    try:
        meter_cfg = resolve_meter(meter, onset_prior)
        trained = read_pattern(pattern)
        cfg = note_config(weighting, w, sigma, c_attack, c_stable, c_nonvocal)
        min_pitch, pitch_count = _pitch_space(pitch_range)
        settings = decode_settings(ctx, spill=spill, beam=beam)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    def decode_one(entry: RecordingEntry) -> Tuple[DecodeResult, Dict[str, Any]]:
        bpm = tempo if tempo is not None else entry.tempo
        if bpm is None:
            raise InputError(f"No tempo for {entry.name}: pass --tempo")
        feats = read_features(entry.features)
        if feats.hop is None:
            raise InputError(
                "Need at least two frames to infer the hop", source=str(entry.features)
            )
        model = JointModel.build(
            meter_cfg,
            trained,
            tempo=bpm,
            frame_hop=feats.hop,
            tempo_margin=tempo_margin,
            note_cfg=cfg,
            pitch_model=None,
            min_pitch=min_pitch,
            pitch_count=pitch_count,
            max_states=max_states(ctx),
        )
        required = estimate_memory(model.size, len(feats))
        info(
            f"{entry.name}: {model.size:,} states x {len(feats):,} frames, backpointers need "
            f"{human_size(required, 'bytes')} (cap {human_size(settings.memory_cap, 'bytes')})",
            quiet,
        )
        result = viterbi_full(model, feats, settings)
        config: Dict[str, Any] = {
            "command": "track",
            "features": str(entry.features),
            "pattern": pattern,
        }
        config.update(model.describe())
        if beam is not None:
            config["beam"] = beam
        return result, config

    run_decodes(ctx, features, output, manifest, out_dir, decode_one)


@click.command("track-annotated")
@input_options
@click.option(
    "--beats",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Annotated beats (time<TAB>index) for --features.",
)
@click.option("--meter", default="4/4", show_default=True, help="Meter id or meter JSON file.")
@click.option("--onset-prior", default=None, help="Comma-separated onset prior per beat.")
@note_options(Weighting.TIME_WINDOW)
@decode_options
@click.pass_context
def track_annotated(
    ctx,
    features,
    output,
    manifest,
    out_dir,
    beats,
    meter,
    onset_prior,
    weighting,
    w,
    sigma,
    c_attack,
    c_stable,
    c_nonvocal,
    pitch_range,
    spill,
    beam,
):
    """Decode vocal note onsets given annotated beats.

    \b
    Examples:
      beatnote track-annotated --features f.csv --beats f.beats.txt --w 1.2 --sigma 0.030
      beatnote track-annotated --manifest m.json --out-dir decoded --weighting simple
    """
    try:
        meter_cfg = resolve_meter(meter, onset_prior)
        cfg = note_config(weighting, w, sigma, c_attack, c_stable, c_nonvocal)
        notes = build_note_space(*_pitch_space(pitch_range))
        settings = decode_settings(ctx, spill=spill, beam=beam)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    def decode_one(entry: RecordingEntry) -> Tuple[DecodeResult, Dict[str, Any]]:
        if entry.beats is None:
            raise InputError(f"No beat annotations for {entry.name}: pass --beats")
        feats = read_features(entry.features)
        annotated = read_beats(entry.beats)
        result = viterbi_reduced(feats, annotated, meter_cfg, cfg, notes=notes, settings=settings)
        config = {
            "command": "track-annotated",
            "features": str(entry.features),
            "beats": str(entry.beats),
            "meter": meter_cfg.to_dict(),
            "note_transitions": cfg.to_dict(),
            "min_pitch": notes.min_pitch,
            "pitch_count": notes.pitch_count,
        }
        return result, config

    run_decodes(ctx, features, output, manifest, out_dir, decode_one, beats=beats)


@click.command("track-notes")
@input_options
@note_options()
@decode_options
@click.pass_context
def track_notes(
    ctx,
    features,
    output,
    manifest,
    out_dir,
    c_attack,
    c_stable,
    c_nonvocal,
    pitch_range,
    spill,
    beam,
):
    """Decode vocal note onsets with the beat-unaware note model.

    \b
    Examples:
      beatnote track-notes --features f.csv -o f.notes.json
    """
    try:
        cfg = note_config(Weighting.NONE, None, None, c_attack, c_stable, c_nonvocal)
        notes = build_note_space(*_pitch_space(pitch_range))
        settings = decode_settings(ctx, spill=spill, beam=beam)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    def decode_one(entry: RecordingEntry) -> Tuple[DecodeResult, Dict[str, Any]]:
        feats = read_features(entry.features)
        result = viterbi_notes(feats, cfg, notes=notes, settings=settings)
        config = {
            "command": BEAT_UNAWARE_COMMAND,
            "features": str(entry.features),
            "note_transitions": cfg.to_dict(),
            "min_pitch": notes.min_pitch,
            "pitch_count": notes.pitch_count,
        }
        return result, config

    run_decodes(ctx, features, output, manifest, out_dir, decode_one)
