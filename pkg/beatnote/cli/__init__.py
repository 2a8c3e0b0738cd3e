"""
beatnote CLI
~~~~~~~~~~~~

Track beats and vocal note onsets from the command line.

    $ beatnote extract --audio song.wav --melody song.pitch.csv -o song.features.csv
    $ beatnote train --manifest corpus/manifest.json --meter 4/4 -o pattern.json
    $ beatnote track --features song.features.csv --pattern pattern.json --tempo 96
    $ beatnote track-annotated --features song.features.csv --beats song.beats.txt
    $ beatnote synth --out-dir synth --count 10 --seed 1
    $ beatnote eval --manifest decoded/manifest.json -o scores.csv
"""

import logging

import click

from beatnote.cli.commands.evaluate import evaluate
from beatnote.cli.commands.extract import extract
from beatnote.cli.commands.settings import config
from beatnote.cli.commands.synth import synth
from beatnote.cli.commands.track import track, track_annotated, track_notes
from beatnote.cli.commands.train import train
from beatnote.cli.config import resolve_settings
from beatnote.cli.output import error
from beatnote.exceptions import BeatNoteError

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])


@click.group(context_settings=CONTEXT_SETTINGS)
@click.option(
    "--memory-cap",
    default=None,
    help="Backpointer memory cap, e.g. 4GiB (or set BEATNOTE_MEMORY_CAP).",
)
@click.option(
    "--max-states",
    default=None,
    help="Largest joint state space (or set BEATNOTE_MAX_STATES).",
)
@click.option("--json", "output_json", is_flag=True, help="Output raw JSON.")
@click.option("--quiet", "-q", is_flag=True, help="Suppress non-essential output.")
@click.option("--verbose", "-v", is_flag=True, help="Log debug details.")
@click.version_option(package_name="beatnote")
@click.pass_context
def cli(ctx, memory_cap, max_states, output_json, quiet, verbose):
    """beatnote: joint beat and vocal note-onset tracking."""
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("beatnote").setLevel(level)

    ctx.ensure_object(dict)
    try:
        ctx.obj["settings"] = resolve_settings(
            {"memory_cap": memory_cap, "max_states": max_states}
        )
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)
    ctx.obj["json"] = output_json
    ctx.obj["quiet"] = quiet


# Register commands
cli.add_command(extract)
cli.add_command(train)
cli.add_command(track)
cli.add_command(track_annotated)
cli.add_command(track_notes)
cli.add_command(synth)
cli.add_command(evaluate)
cli.add_command(config)


def main():
    cli()


if __name__ == "__main__":
    main()
