"""PPM image and panel emission service.

Callers hand over channel-first (3, h, w) arrays, the layout used by the
networks and datasets; files are written as P6 PPM.
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

import numpy as np

from src.utils.errors import ContractError, DataError
from src.utils.logger import get_logger
from src.utils.ppm import chw_to_hwc, compose_panel, encode_ppm, hwc_to_chw, read_ppm


class ImageService(ABC):
    """Abstract image writer/reader"""

    @abstractmethod
    def write_ppm(self, path: Path, image: np.ndarray) -> Path:
        pass

    @abstractmethod
    def write_panel(self, path: Path, images: Sequence[np.ndarray], rows: int, cols: int, pad: int) -> Path:
        pass

    @abstractmethod
    def read(self, path: Path) -> np.ndarray:
        pass


class PpmImageService(ImageService):
    """P6 PPM files on disk"""

    def __init__(self):
        self.logger = get_logger("image_service")

    def _write(self, path: Path, data: bytes) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as e:
            self.logger.error(f"Image write failed: {e}")
            raise DataError(f"cannot write image: {e}", path) from e
        return path

    def write_ppm(self, path: Path, image: np.ndarray) -> Path:
        """Write one (3, h, w) image with values in [0, 1]"""
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[0] != 3:
            raise ContractError(f"expected a (3, h, w) image, got {image.shape}")
        # encoding validates every value before anything touches the file
        data = encode_ppm(chw_to_hwc(image))
        return self._write(path, data)

    def write_panel(self, path: Path, images: Sequence[np.ndarray], rows: int, cols: int, pad: int = 2) -> Path:
        """Tile (3, h, w) images row-major with white padding"""
        panel = compose_panel([chw_to_hwc(np.asarray(image)) for image in images], rows, cols, pad)
        self._write(path, encode_ppm(panel))
        self.logger.info(f"Wrote {rows}x{cols} panel of {len(images)} images to {path}")
        return Path(path)

    def write_batch(self, directory: Path, images: Sequence[np.ndarray], prefix: str = "sample") -> list[Path]:
        """One file per image, named `<prefix>_<index>.ppm` with zero padding"""
        width = max(4, len(str(max(len(images) - 1, 0))))
        paths = [self.write_ppm(Path(directory) / f"{prefix}_{i:0{width}d}.ppm", image) for i, image in enumerate(images)]
        self.logger.info(f"Wrote {len(paths)} images to {directory}")
        return paths

    def read(self, path: Path) -> np.ndarray:
        """Read a P6 file as a (3, h, w) float64 image in [0, 1]"""
        return hwc_to_chw(read_ppm(Path(path)))
