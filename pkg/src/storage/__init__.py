"""JSON-indexed run storage."""

from .run_archive import MANIFEST_NAME, RunArchive, load_manifest

__all__ = ["MANIFEST_NAME", "RunArchive", "load_manifest"]
