"""The `beatnote extract` command."""

from pathlib import Path

import click
import numpy as np

from beatnote.cli.output import error, success
from beatnote.exceptions import BeatNoteError
from beatnote.features import DEFAULT_HOP, DEFAULT_WINDOW, align_melody, extract_flux
from beatnote.files import read_audio, read_melody, read_vocal_segments, write_features
from beatnote.models import FeatureSequence


@click.command("extract")
@click.option(
    "--audio", type=click.Path(exists=True, dir_okay=False), required=True, help="WAV file."
)
@click.option(
    "--melody",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Melody track: time,pitch[,voicing] per line.",
)
@click.option("--hz", is_flag=True, help="Melody pitch is in Hz rather than MIDI.")
@click.option(
    "--vocal-segments",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Annotated singing segments (start<TAB>end); v=0 elsewhere.",
)
@click.option("--hop", type=float, default=DEFAULT_HOP, show_default=True, help="Seconds.")
@click.option("--window", type=float, default=DEFAULT_WINDOW, show_default=True, help="Seconds.")
@click.option("--bands", type=int, default=2, show_default=True, help="Flux dimensions.")
@click.option(
    "--output", "-o", type=click.Path(dir_okay=False), required=True, help="Feature CSV."
)
@click.pass_context
def extract(ctx, audio, melody, hz, vocal_segments, hop, window, bands, output):
    """Compute band-wise spectral flux and attach the melody track.

    \b
    Examples:
      beatnote extract --audio song.wav --melody song.f0.csv --hz -o song.features.csv
      beatnote extract --audio song.wav --melody song.f0.csv --vocal-segments song.vocal.txt \\
          -o song.features.csv
    """
    try:
        samples, rate = read_audio(audio)
        flux = extract_flux(samples, rate, hop=hop, bands=bands, window=window)
        # frames sit on whole samples
        frame_hop = max(1, int(round(hop * rate))) / rate
        times = np.arange(len(flux)) * frame_hop
        melody_times, pitch, voicing = read_melody(melody, in_hz=hz)
        segments = read_vocal_segments(vocal_segments) if vocal_segments else None
        pitch, voicing = align_melody(times, melody_times, pitch, voicing, segments)
        features = FeatureSequence(
            times=times,
            flux=flux,
            pitch=pitch,
            voicing=voicing,
            hop=frame_hop,
            name=Path(audio).stem,
        )
        write_features(output, features)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)

    success(f"{len(features)} frames x {bands} bands -> {output}", ctx.obj.get("quiet"))
