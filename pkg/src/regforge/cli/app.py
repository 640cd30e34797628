"""regforge command line: design, simulate, verify, freqresp, schema."""

from typing import Annotated, Optional

import typer
from dotenv import load_dotenv

from regforge import __version__
from regforge.cli.design import design
from regforge.cli.freqresp import freqresp
from regforge.cli.schema import schema
from regforge.cli.simulate import simulate
from regforge.cli.verify import verify
from regforge.utils.logging import set_quiet, set_verbose, setup_logging

app = typer.Typer(
    name="regforge",
    help="Internal-model output regulation for 1D reaction-diffusion plants.",
    no_args_is_help=True,
    pretty_exceptions_show_locals=False,
)


def _print_version(value: bool) -> None:
    if not value:
        return
    typer.echo(f"regforge {__version__}")
    raise typer.Exit()


@app.callback()
def main(
    version: Annotated[
        Optional[bool],
        typer.Option("--version", "-V", callback=_print_version, is_eager=True, help="Print the version."),
    ] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log solver and stage details.")] = False,
    quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Log warnings and errors only.")] = False,
) -> None:
    """Design, simulate and verify robust regulating controllers."""
    if verbose and quiet:
        raise typer.BadParameter("--verbose and --quiet exclude each other")
    # REGFORGE_* settings may come from .env; load before any settings are read.
    load_dotenv(override=False)
    setup_logging()
    if verbose:
        set_verbose(True)
    if quiet:
        set_quiet(True)


app.command("design")(design)
app.command("simulate")(simulate)
app.command("verify")(verify)
app.command("freqresp")(freqresp)
app.command("schema")(schema)
