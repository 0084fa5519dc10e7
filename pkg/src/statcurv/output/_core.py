import enum
from typing import Protocol, TextIO

from .. import service


class OutputFormat(enum.StrEnum):
    json = "json"
    pretty = "pretty"
    markdown = "markdown"


class Output(Protocol):
    def print_report(self, report: service.RunReport) -> None: ...

    def print_gallery(self, listings: list[service.GalleryListing]) -> None: ...


def get_output(output_format: OutputFormat, file: TextIO | None = None) -> Output:
    match output_format:
        case OutputFormat.json:
            from ._json import JsonOutput

            return JsonOutput(file)
        case OutputFormat.pretty:
            from ._pretty import PrettyOutput

            return PrettyOutput(file)
        case OutputFormat.markdown:
            from ._markdown import MarkdownOutput

            return MarkdownOutput(file)
