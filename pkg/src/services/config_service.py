"""Run-config loading service"""
from abc import ABC, abstractmethod
from pathlib import Path

from src.config.run_config import load_config, parse_config, render_config
from src.models.config import TrainConfig
from src.utils.errors import ConfigError
from src.utils.logger import get_logger


class ConfigService(ABC):
    """Abstract run-config source"""

    @abstractmethod
    def load(self, path: Path) -> TrainConfig:
        pass

    @abstractmethod
    def parse(self, text: str) -> TrainConfig:
        pass

    @abstractmethod
    def render(self, cfg: TrainConfig) -> str:
        pass


class TextConfigService(ConfigService):
    """`key = value` config files"""

    def __init__(self):
        self.logger = get_logger("config_service")

    def load(self, path: Path) -> TrainConfig:
        try:
            cfg = load_config(Path(path))
        except ConfigError as e:
            self.logger.error(f"Config {path} rejected: {e}")
            raise
        self.logger.info(f"Loaded config {path}: objective={cfg.objective.value}, dataset={cfg.dataset.kind.value}")
        return cfg

    def parse(self, text: str) -> TrainConfig:
        return parse_config(text)

    def render(self, cfg: TrainConfig) -> str:
        return render_config(cfg)
