"""APK to App Bundle extraction: dex, manifest and signing facts."""

__version__ = "0.1.0"

from .extract import ExtractorConfig, UnreadableApk, dump_document, extract

__all__ = ["ExtractorConfig", "UnreadableApk", "dump_document", "extract"]
