"""JSON output: the stable, machine-readable report format."""

import sys
from typing import TextIO

import pydantic

from .. import service

_LISTINGS = pydantic.TypeAdapter(list[service.GalleryListing])


class JsonOutput:
    def __init__(self, file: TextIO | None = None):
        self.file = file or sys.stdout

    def print_report(self, report: service.RunReport) -> None:
        self.file.write(report.model_dump_json(indent=2) + "\n")

    def print_gallery(self, listings: list[service.GalleryListing]) -> None:
        self.file.write(_LISTINGS.dump_json(listings, indent=2).decode() + "\n")
