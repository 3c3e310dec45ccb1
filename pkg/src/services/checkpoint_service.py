"""Checkpoint persistence service"""
from abc import ABC, abstractmethod
from pathlib import Path

from src.core.checkpoint import Checkpoint
from src.utils.errors import CheckpointError, DataError
from src.utils.logger import get_logger


class CheckpointService(ABC):
    """Abstract checkpoint store"""

    @abstractmethod
    def save(self, path: Path, checkpoint: Checkpoint) -> Path:
        """Write a checkpoint file"""
        pass

    @abstractmethod
    def load(self, path: Path) -> Checkpoint:
        """Read and validate a checkpoint file"""
        pass


class FileCheckpointService(CheckpointService):
    """Checkpoints as single binary files"""

    def __init__(self):
        self.logger = get_logger("checkpoint_service")

    def save(self, path: Path, checkpoint: Checkpoint) -> Path:
        path = Path(path)
        data = checkpoint.to_bytes()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        except OSError as e:
            self.logger.error(f"Checkpoint write failed: {e}")
            raise DataError(f"cannot write checkpoint: {e}", path) from e

        self.logger.info(
            f"Saved checkpoint {path} ({len(data)} bytes, networks: {', '.join(checkpoint.networks)})"
        )
        return path

    def load(self, path: Path) -> Checkpoint:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as e:
            self.logger.error(f"Checkpoint read failed: {e}")
            raise DataError(f"cannot read checkpoint: {e}", path) from e

        try:
            checkpoint = Checkpoint.from_bytes(data)
        except CheckpointError as e:
            self.logger.error(f"Invalid checkpoint {path}: {e}")
            raise

        self.logger.debug(f"Loaded checkpoint {path} (version {checkpoint.version})")
        return checkpoint
