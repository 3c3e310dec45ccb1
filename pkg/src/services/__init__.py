"""Services package: config, checkpoint, image and export services"""
from .checkpoint_service import CheckpointService, FileCheckpointService
from .config_service import ConfigService, TextConfigService
from .export_service import CsvExportService, ExportService
from .image_service import ImageService, PpmImageService

__all__ = [
    "CheckpointService",
    "FileCheckpointService",
    "ConfigService",
    "TextConfigService",
    "CsvExportService",
    "ExportService",
    "ImageService",
    "PpmImageService",
]
