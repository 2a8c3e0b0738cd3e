"""The `beatnote synth` command."""

from dataclasses import replace

import click

from beatnote.cli.output import error, success
from beatnote.cli.parsing import parse_pitch_range, resolve_meter
from beatnote.exceptions import BeatNoteError
from beatnote.files import read_pattern
from beatnote.models import Weighting
from beatnote.synth import SynthConfig, make_corpus
from beatnote.transition import TempoTransitionConfig


@click.command("synth")
@click.option(
    "--out-dir", type=click.Path(file_okay=False), required=True, help="Corpus directory."
)
@click.option("--count", type=int, default=5, show_default=True, help="Number of recordings.")
@click.option("--seed", type=int, default=0, show_default=True, help="Corpus seed.")
@click.option("--meter", default="4/4", show_default=True, help="Meter id or meter JSON file.")
@click.option("--onset-prior", default=None, help="Comma-separated onset prior per beat.")
@click.option("--tempo", type=float, default=120.0, show_default=True, help="Tempo in bpm.")
@click.option(
    "--tempo-margin", type=float, default=0.0, show_default=True, help="Tempo range +/- bpm."
)
@click.option(
    "--tempo-change",
    type=float,
    default=0.02,
    show_default=True,
    help="Tempo change probability at beats.",
)
@click.option("--hop", type=float, default=0.02, show_default=True, help="Frame hop in seconds.")
@click.option(
    "--duration", type=float, default=60.0, show_default=True, help="Seconds per recording."
)
@click.option("--noise", type=float, default=0.1, show_default=True, help="Emission noise scale.")
@click.option(
    "--voicing-confidence",
    type=float,
    default=1.0,
    show_default=True,
    help="Voicing of vocal frames; 1.0 gives binary voicing.",
)
@click.option("--pitch-range", default=None, help="MIDI pitches LOW:HIGH (52:86).")
@click.option(
    "--pattern",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Accent pattern to sample from (default: beat-aligned peaks).",
)
@click.option(
    "--weighting",
    type=click.Choice(Weighting.ALL),
    default=Weighting.TIME_WINDOW,
    show_default=True,
    help="Beat weighting of the generating note model.",
)
@click.option("--w", "w", type=float, default=None, help="Weighting exponent.")
@click.option("--sigma", type=float, default=None, help="Weighting width in seconds.")
@click.option("--c-attack", type=float, default=None, help="Attack self-loop.")
@click.option("--c-stable", type=float, default=None, help="Stable self-loop.")
@click.option("--c-nonvocal", type=float, default=None, help="NonVocal self-loop.")
@click.pass_context
def synth(
    ctx,
    out_dir,
    count,
    seed,
    meter,
    onset_prior,
    tempo,
    tempo_margin,
    tempo_change,
    hop,
    duration,
    noise,
    voicing_confidence,
    pitch_range,
    pattern,
    weighting,
    w,
    sigma,
    c_attack,
    c_stable,
    c_nonvocal,
):
    """Sample an annotated synthetic corpus from the joint model.

    Writes features, beats and onsets per recording, the sampling pattern and
    a manifest. Unset note parameters keep the corpus defaults.

    \b
    Examples:
      beatnote synth --out-dir synth --count 10 --seed 1
      beatnote synth --out-dir soft --voicing-confidence 0.8 --weighting simple --w 1.1
    """
    try:
        defaults = SynthConfig()
        given = dict(
            weighting=weighting,
            w=w,
            sigma=sigma,
            c_attack=c_attack,
            c_stable=c_stable,
            c_nonvocal=c_nonvocal,
        )
        note_cfg = replace(defaults.note_cfg, **{k: v for k, v in given.items() if v is not None})
        min_pitch, pitch_count = (
            parse_pitch_range(pitch_range)
            if pitch_range
            else (defaults.min_pitch, defaults.pitch_count)
        )
        config = SynthConfig(
            meter=resolve_meter(meter, onset_prior),
            tempo=tempo,
            tempo_margin=tempo_margin,
            frame_hop=hop,
            duration=duration,
            min_pitch=min_pitch,
            pitch_count=pitch_count,
            noise_scale=noise,
            voicing_confidence=voicing_confidence,
            note_cfg=note_cfg,
            tempo_cfg=TempoTransitionConfig(tempo_change),
        )
        entries = make_corpus(
            config,
            count,
            out_dir,
            seed=seed,
            pattern=read_pattern(pattern) if pattern else None,
        )
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    success(f"{len(entries)} recordings -> {out_dir}", ctx.obj.get("quiet"))
