"""Workflows behind the CLI commands, wired from injected services"""
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from src.config.dependencies import inject
from src.config.run_config import parse_config
from src.config.settings import Settings
from src.core.checkpoint import Checkpoint
from src.core.datasets import Dataset, image_files, load_image_dir, make_dataset
from src.core.evaluation import EVAL_CHUNK, evaluate, generate, morph_grid, reconstruct
from src.core.priors import Rng
from src.core.trainer import Trainer
from src.core.verification import run_suite
from src.models.base import DatasetKind
from src.models.config import TrainConfig
from src.models.outputs import EpochRecord, GradCheckResult, MetricReport, RunSummary, StepRecord
from src.models.specs import DatasetSpec
from src.services.checkpoint_service import CheckpointService
from src.services.config_service import ConfigService
from src.services.export_service import ExportService
from src.services.image_service import ImageService
from src.utils.errors import ConfigError, ContractError
from src.utils.logger import get_logger

PANEL_SAMPLES = 16
PANEL_RECONSTRUCTIONS = 8


class ToolkitRunner:
    """Train, reconstruct, generate, morph, evaluate and verify"""

    @inject
    def __init__(
        self,
        settings: Settings,
        config_service: ConfigService,
        checkpoint_service: CheckpointService,
        image_service: ImageService,
        export_service: ExportService,
    ):
        self.settings = settings
        self.config_service = config_service
        self.checkpoint_service = checkpoint_service
        self.image_service = image_service
        self.export_service = export_service
        self.logger = get_logger("runner")

    # -- training -----------------------------------------------------------
    def train(self, config_path: Path, output_directory: Optional[Path] = None) -> RunSummary:
        """Run one training config and write checkpoint, metrics and panels"""
        cfg = self.config_service.load(config_path)
        out = Path(output_directory) if output_directory is not None else self.settings.output_directory
        self.logger.info(f"Starting run from {config_path} into {out}")

        trainer = Trainer(cfg, config_text=self.config_service.render(cfg))
        result = trainer.run()
        checkpoint = trainer.checkpoint()

        ckpt_path = self.checkpoint_service.save(out / self.settings.checkpoint_filename, checkpoint)
        artifacts = [
            self.export_service.export_records(
                result.trace, out / self.settings.metrics_filename, list(StepRecord.model_fields)
            ),
            self.export_service.export_records(
                result.epochs, out / self.settings.epoch_metrics_filename, list(EpochRecord.model_fields)
            ),
        ]
        artifacts += self._training_panels(checkpoint, cfg, trainer.dataset, out)

        summary = RunSummary(
            output_directory=str(out),
            checkpoint_path=str(ckpt_path),
            steps=result.steps,
            epochs=len(result.epochs),
            final_epoch=result.epochs[-1] if result.epochs else None,
            artifacts=[str(p) for p in [ckpt_path, *artifacts]],
        )
        self.logger.info(f"Run finished: {summary.steps} steps, {len(summary.artifacts)} artifacts in {out}")
        return summary

    def _training_panels(self, checkpoint: Checkpoint, cfg: TrainConfig, dataset: Dataset, out: Path) -> list[Path]:
        """Generated-sample and reconstruction panels for images, a point set for 2D data"""
        G, E = checkpoint.generator, checkpoint.encoder
        rng = Rng(cfg.seed).derive("panel")
        samples = generate(G, PANEL_SAMPLES, rng)
        if len(dataset.sample_shape) == 1:
            return [self.export_service.export_points(samples, out / "samples.csv")] if samples.shape[1] == 2 else []

        side = int(np.ceil(np.sqrt(PANEL_SAMPLES)))
        pad = self.settings.panel_pad
        originals = dataset.samples[:PANEL_RECONSTRUCTIONS]
        recon = reconstruct(E, G, originals)
        return [
            self.image_service.write_panel(out / "generated.ppm", list(samples), side, side, pad),
            self.image_service.write_panel(
                out / "reconstructions.ppm", list(originals) + list(recon), 2, len(originals), pad
            ),
        ]

    # -- post-training pipelines ---------------------------------------------
    def reconstruct_directory(self, ckpt_path: Path, input_directory: Path, output_directory: Path) -> list[Path]:
        """G(E(x)) for every image of a directory, written under the same file names"""
        checkpoint = self.checkpoint_service.load(ckpt_path)
        E, G = checkpoint.encoder, checkpoint.generator
        files = image_files(input_directory)
        images = load_image_dir(input_directory, E.input_shape).samples
        outputs = np.concatenate(
            [reconstruct(E, G, images[i : i + EVAL_CHUNK]) for i in range(0, len(images), EVAL_CHUNK)]
        )
        paths = [self.image_service.write_ppm(Path(output_directory) / f.name, image) for f, image in zip(files, outputs)]
        self.logger.info(f"Reconstructed {len(paths)} images into {output_directory}")
        return paths

    def generate(self, ckpt_path: Path, count: int, output_directory: Path, seed: int = 0) -> list[Path]:
        """`count` samples from the prior: PPM files for images, samples.csv for 2D data"""
        if count < 1:
            raise ContractError(f"count must be >= 1, got {count}")
        checkpoint = self.checkpoint_service.load(ckpt_path)
        G = checkpoint.generator
        samples = generate(G, count, Rng(seed).derive("generate"))
        out = Path(output_directory)
        if len(G.output_shape) == 3:
            return self.image_service.write_batch(out, list(samples))
        if G.output_shape == (2,):
            return [self.export_service.export_points(samples, out / "samples.csv")]
        rows = [{f"x{i}": float(v) for i, v in enumerate(row)} for row in samples]
        return [self.export_service.export_csv(rows, out / "samples.csv", [f"x{i}" for i in range(G.output_shape[0])])]

    def morph(self, ckpt_path: Path, corners: Sequence[Path], grid_n: int, output_path: Path) -> Path:
        """Morph panel over the latent codes of four corner images"""
        if len(corners) != 4:
            raise ContractError(f"morph needs exactly 4 corner images, got {len(corners)}")
        if grid_n < 2:
            raise ContractError(f"grid must be >= 2, got {grid_n}")
        checkpoint = self.checkpoint_service.load(ckpt_path)
        E, G = checkpoint.encoder, checkpoint.generator
        images = np.stack([self.image_service.read(path) for path in corners])
        if images.shape[1:] != E.input_shape:
            raise ContractError(f"corner images of shape {images.shape[1:]} do not match encoder input {E.input_shape}")
        cells = morph_grid(E, G, images, grid_n)
        return self.image_service.write_panel(output_path, list(cells), grid_n, grid_n, self.settings.panel_pad)

    def evaluate(
        self,
        ckpt_path: Path,
        output_path: Path,
        dataset: Optional[str] = None,
        count: Optional[int] = None,
    ) -> MetricReport:
        """Metrics of a checkpoint on its training dataset, or on `dataset`
        (a dataset kind or an image directory), written as one CSV row"""
        checkpoint = self.checkpoint_service.load(ckpt_path)
        cfg = parse_config(checkpoint.config_text)
        data = self._eval_dataset(cfg, dataset)
        report = evaluate(
            checkpoint.encoder,
            checkpoint.generator,
            checkpoint.discriminator,
            data,
            count or self.settings.eval_count,
            Rng(cfg.seed).derive("eval"),
        )
        self.export_service.export_records([report], output_path)
        self.logger.info(
            f"Evaluation: recon_mse={report.recon_mse:.5f} reenc_mse={report.reenc_mse:.5f} "
            f"disc_accuracy={report.disc_accuracy:.3f} coverage={report.mode_coverage}/{report.modes}"
        )
        return report

    def _eval_dataset(self, cfg: TrainConfig, dataset: Optional[str]) -> Dataset:
        spec = cfg.dataset
        if dataset is not None:
            if Path(dataset).is_dir():
                update: dict[str, object] = {"kind": DatasetKind.IMAGE_DIR, "path": Path(dataset)}
            else:
                update = {"kind": dataset}
            try:
                spec = DatasetSpec.model_validate({**spec.model_dump(), **update})
            except ValidationError as e:
                raise ConfigError(
                    f"'{dataset}' is neither a directory nor a usable dataset kind "
                    f"({', '.join(k.value for k in DatasetKind)}): {e.errors()[0]['msg']}",
                    key="dataset",
                ) from e
        return make_dataset(spec, Rng(cfg.seed).derive("data"))

    # -- verification ---------------------------------------------------------
    def gradcheck(self, ops: Optional[Sequence[str]] = None, instances: Optional[int] = None) -> list[GradCheckResult]:
        results = run_suite(
            ops,
            instances or self.settings.gradcheck_instances,
            self.settings.gradcheck_eps,
            self.settings.gradcheck_tolerance,
        )
        failed = [r.op for r in results if not r.passed]
        if failed:
            self.logger.error(f"Gradient check failed for: {', '.join(failed)}")
        else:
            self.logger.info(f"Gradient check passed for {len(results)} op kinds")
        return results
