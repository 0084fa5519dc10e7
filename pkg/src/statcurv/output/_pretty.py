"""Rich (pretty) output formatting."""

from typing import TextIO

from rich.console import Console, Group
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from .. import service
from ._common import (
    format_array,
    format_number,
    format_wall_time,
    residual_status,
    split_values,
)

_STATUS_STYLE = {"ok": "green", "FAIL": "red", "skipped": "dim"}


class PrettyOutput:
    def __init__(self, file: TextIO | None = None):
        self.console = Console(file=file)

    def print_report(self, report: service.RunReport) -> None:
        verdict = "[green]passed[/green]" if report.passed else "[red]failed[/red]"
        content = f"""[bold]Spec:[/bold] {escape(report.spec)}
[bold]Fingerprint:[/bold] {report.fingerprint}
[bold]Seed:[/bold] {report.seed}
[bold]Plan:[/bold] {report.plan.points} points x {report.plan.trials} trials
[bold]Result:[/bold] {verdict}"""
        if wall_time := format_wall_time(report):
            content += f"\n[bold]Wall time:[/bold] {wall_time}"
        for name, value in report.verdicts.items():
            content += f"\n[bold]{escape(name)}:[/bold] {escape(value)}"

        renderables: list = [content]
        if report.residuals:
            table = Table(show_header=True, header_style="bold")
            table.add_column("Check")
            table.add_column("Residual", justify="right")
            table.add_column("Tolerance", justify="right")
            table.add_column("Status")
            for name, residual in report.residuals.items():
                status = residual_status(residual)
                table.add_row(
                    name,
                    format_number(residual.value),
                    format_number(residual.tolerance),
                    f"[{_STATUS_STYLE[status]}]{status}[/{_STATUS_STYLE[status]}]",
                )
            renderables.append(table)

        scalars, arrays = split_values(report.values)
        for name, value in scalars.items():
            renderables.append(f"[bold]{escape(name)}:[/bold] {value}")
        for name, value in arrays.items():
            renderables.append(f"[bold]{escape(name)}:[/bold]\n{format_array(value)}")
        for note in report.notes:
            renderables.append(f"[yellow]note:[/yellow] {escape(note)}")

        command = " ".join(report.command) or "statcurv"
        panel = Panel(
            Group(*renderables),
            title=f"[bold]{escape(command)}[/bold]",
            border_style="green" if report.passed else "red",
        )
        self.console.print(panel)

    def print_gallery(self, listings: list[service.GalleryListing]) -> None:
        table = Table(show_header=True, header_style="bold")
        table.add_column("Name")
        table.add_column("Family")
        table.add_column("n", justify="right")
        table.add_column("K", justify="right")
        table.add_column("σ", justify="right")
        table.add_column("Flatness")
        for listing in listings:
            expected = listing.expected
            table.add_row(
                listing.name,
                listing.family,
                str(listing.dimension),
                _optional(expected.K if expected else None),
                _optional(expected.sigma if expected else None),
                expected.flat_verdict if expected and expected.flat_verdict else "",
            )
        self.console.print(table)


def _optional(value: float | None) -> str:
    return "" if value is None else f"{value:g}"
