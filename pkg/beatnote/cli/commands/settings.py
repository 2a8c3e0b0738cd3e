"""The `beatnote config` command group."""

import click

from beatnote.cli.config import SETTINGS, config_path, save_setting
from beatnote.cli.output import error, output_json_raw, print_table, success
from beatnote.exceptions import BeatNoteError, human_size


@click.group()
def config():
    """Show and persist CLI settings."""
    pass


@config.command("show")
@click.pass_context
def config_show(ctx):
    """Show every setting, its resolved value and where it came from.

    \b
    Examples:
      beatnote config show
      BEATNOTE_MEMORY_CAP=16GiB beatnote config show --json
    """
    resolved = ctx.obj["settings"]
    if ctx.obj.get("json"):
        output_json_raw(
            {
                "config_file": str(config_path()),
                "settings": {k: {"value": v, "source": s} for k, (v, s) in resolved.items()},
            }
        )
        return

    rows = []
    for key, (value, source) in resolved.items():
        shown = human_size(value, "bytes") if key == "memory_cap" else value
        rows.append({"key": key, "value": shown, "source": source, "env": SETTINGS[key].env})
    print_table(rows, ["key", "value", "source", "env"], ["Key", "Value", "Source", "Env Var"])
    click.echo(click.style(f"\nConfig file: {config_path()}", dim=True))


@config.command("set")
@click.argument("key", type=click.Choice(sorted(SETTINGS)))
@click.argument("value")
@click.pass_context
def config_set(ctx, key, value):
    """Persist a setting to the user config file.

    \b
    Examples:
      beatnote config set memory_cap 16GiB
      beatnote config set spill_dir /scratch/beatnote
    """
    try:
        parsed = save_setting(key, value)
    except BeatNoteError as e:
        error(str(e))
        ctx.exit(e.exit_code)
    success(f"{key} = {parsed} saved to {config_path()}")
