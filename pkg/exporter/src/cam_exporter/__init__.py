"""One-shot description-to-embedding exporter for the CAM engine."""

from .export import DescriptionTable, clean_text, export

__all__ = ["DescriptionTable", "clean_text", "export"]
