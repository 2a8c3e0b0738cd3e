"""The `beatnote train` command."""

import click

from beatnote.cli.output import error, info, output_json_raw, success
from beatnote.cli.parsing import resolve_meter
from beatnote.exceptions import BeatNoteError, InputError
from beatnote.features import DEFAULT_SMOOTHING
from beatnote.files import read_beats, read_features, read_manifest, write_pattern
from beatnote.train import train_pattern


@click.command("train")
@click.option(
    "--manifest",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Manifest of recordings with features and annotated beats.",
)
@click.option("--meter", default="4/4", show_default=True, help="Meter id or meter JSON file.")
@click.option("--components", type=int, default=2, show_default=True, help="Mixture components.")
@click.option(
    "--seed", type=int, default=0, show_default=True, help="Seed of the EM initialization."
)
@click.option(
    "--smoothing",
    type=int,
    default=DEFAULT_SMOOTHING,
    show_default=True,
    help="Moving-average window (frames) of the flux normalization.",
)
@click.option(
    "--output", "-o", type=click.Path(dir_okay=False), required=True, help="Pattern JSON."
)
@click.pass_context
def train(ctx, manifest, meter, components, seed, smoothing, output):
    """Train a rhythmic pattern from beat-annotated recordings.

    Recordings whose manifest meter differs from --meter are skipped.

    \b
    Examples:
      beatnote train --manifest corpus/manifest.json --meter 4/4 -o pattern.json
      beatnote train --manifest aksak.json --meter meters/aksak.json --seed 3 -o aksak.json
    """
    quiet = ctx.obj.get("quiet")
    try:
        meter_cfg = resolve_meter(meter)
        recordings = []
        for entry in read_manifest(manifest):
            if entry.meter and entry.meter != meter_cfg.meter_id:
                info(f"Skipping {entry.name} (meter {entry.meter})", quiet)
                continue
            if entry.beats is None:
                raise InputError(f"Recording {entry.name} has no beat annotations", source=manifest)
            recordings.append((read_features(entry.features), read_beats(entry.beats)))
        info(f"Training {meter_cfg.meter_id} pattern on {len(recordings)} recordings", quiet)
        pattern = train_pattern(
            recordings, meter_cfg, components=components, seed=seed, smoothing=smoothing
        )
        write_pattern(output, pattern)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    if ctx.obj.get("json"):
        output_json_raw(pattern)
    else:
        success(f"Pattern with {pattern.num_bins} bins -> {output}", quiet)
