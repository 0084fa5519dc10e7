"""Markdown output formatting."""

import sys
from typing import TextIO

from tabulate import tabulate

from .. import service
from ._common import (
    format_array,
    format_number,
    format_wall_time,
    residual_status,
    split_values,
)


class MarkdownOutput:
    def __init__(self, file: TextIO | None = None):
        self.file = file or sys.stdout

    def _print(self, text: str = "") -> None:
        print(text, file=self.file)

    def print_report(self, report: service.RunReport) -> None:
        command = " ".join(report.command) or "statcurv"
        self._print(f"## `{command}`")
        self._print()
        self._print(f"- **Spec:** {report.spec}")
        self._print(f"- **Fingerprint:** {report.fingerprint}")
        self._print(f"- **Seed:** {report.seed}")
        self._print(
            f"- **Plan:** {report.plan.points} points x {report.plan.trials} trials"
        )
        self._print(f"- **Result:** {'passed' if report.passed else 'failed'}")
        if wall_time := format_wall_time(report):
            self._print(f"- **Wall time:** {wall_time}")
        for name, value in report.verdicts.items():
            self._print(f"- **{name}:** {value}")

        if report.residuals:
            rows = [
                [
                    name,
                    format_number(residual.value),
                    format_number(residual.tolerance),
                    residual_status(residual),
                ]
                for name, residual in report.residuals.items()
            ]
            self._print()
            self._print(
                tabulate(
                    rows,
                    headers=["Check", "Residual", "Tolerance", "Status"],
                    tablefmt="github",
                )
            )

        scalars, arrays = split_values(report.values)
        if scalars:
            self._print()
            self._print(
                tabulate(
                    list(scalars.items()), headers=["Value", ""], tablefmt="github"
                )
            )
        for name, value in arrays.items():
            self._print()
            self._print(f"**{name}**")
            self._print()
            self._print("```")
            self._print(format_array(value))
            self._print("```")
        if report.notes:
            self._print()
            for note in report.notes:
                self._print(f"> {note}")

    def print_gallery(self, listings: list[service.GalleryListing]) -> None:
        rows = []
        for listing in listings:
            expected = listing.expected
            rows.append(
                [
                    listing.name,
                    listing.family,
                    listing.dimension,
                    expected.K if expected else None,
                    expected.sigma if expected else None,
                    expected.flat_verdict if expected else None,
                ]
            )
        self._print(
            tabulate(
                rows,
                headers=["Name", "Family", "n", "K", "σ", "Flatness"],
                tablefmt="github",
                missingval="",
            )
        )
