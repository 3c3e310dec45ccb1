"""Image and export services"""
import numpy as np
import pytest

from src.core.priors import Rng
from src.models.outputs import MetricReport, StepRecord
from src.services.export_service import CsvExportService
from src.services.image_service import PpmImageService
from src.utils.errors import ContractError, DataError


class TestPpmImageService:
    def test_black_pixel_file(self, tmp_path):
        path = PpmImageService().write_ppm(tmp_path / "black.ppm", np.zeros((3, 1, 1)))
        data = path.read_bytes()
        assert data.startswith(b"P6")
        assert data[-3:] == b"\x00\x00\x00"

    def test_round_trip(self, tmp_path):
        service = PpmImageService()
        image = Rng(1).uniform_array((3, 5, 4))
        restored = service.read(service.write_ppm(tmp_path / "img.ppm", image))
        assert restored.shape == (3, 5, 4)
        assert np.abs(restored - image).max() <= 1.0 / 255

    def test_out_of_range_writes_nothing(self, tmp_path):
        path = tmp_path / "bad.ppm"
        with pytest.raises(ContractError):
            PpmImageService().write_ppm(path, np.full((3, 2, 2), -0.1))
        assert not path.exists()

    def test_channel_first_required(self, tmp_path):
        with pytest.raises(ContractError):
            PpmImageService().write_ppm(tmp_path / "x.ppm", np.zeros((2, 2, 3)))

    def test_panel_dimensions(self, tmp_path):
        service = PpmImageService()
        images = [np.zeros((3, 4, 6)) for _ in range(6)]
        panel = service.read(service.write_panel(tmp_path / "panel.ppm", images, 2, 3, pad=1))
        assert panel.shape == (3, 2 * 4 + 3, 3 * 6 + 4)

    def test_batch_names(self, tmp_path):
        paths = PpmImageService().write_batch(tmp_path / "out", [np.zeros((3, 2, 2))] * 3)
        assert [p.name for p in paths] == ["sample_0000.ppm", "sample_0001.ppm", "sample_0002.ppm"]

    def test_read_missing(self, tmp_path):
        with pytest.raises(DataError):
            PpmImageService().read(tmp_path / "nothing.ppm")


class TestCsvExportService:
    def test_records_in_field_order(self, tmp_path):
        records = [
            StepRecord(step=0, epoch=0, adv_d=-1.5, adv_g=0.7, recon_or_reenc=0.25, alpha=30.0, lr_g_t=3e-4, lr_d_t=1e-3)
        ]
        path = CsvExportService().export_records(records, tmp_path / "metrics.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "step,epoch,adv_d,adv_g,recon_or_reenc,alpha,lr_g_t,lr_d_t"
        assert lines[1] == "0,0,-1.5,0.7,0.25,30.0,0.0003,0.001"

    def test_optional_values_are_blank(self, tmp_path):
        report = MetricReport(recon_mse=0.5, reenc_mse=0.25, disc_accuracy=0.75, samples_evaluated=10)
        path = CsvExportService().export_records([report], tmp_path / "eval.csv")
        assert path.read_text(encoding="utf-8").splitlines()[1] == "0.5,0.25,0.75,,,10"

    def test_points(self, tmp_path):
        path = CsvExportService().export_points(np.array([[1.0, -2.0], [0.5, 0.25]]), tmp_path / "pts.csv")
        assert path.read_text(encoding="utf-8") == "x,y\n1.0,-2.0\n0.5,0.25\n"

    def test_points_need_two_columns(self, tmp_path):
        with pytest.raises(DataError):
            CsvExportService().export_points(np.zeros((3, 3)), tmp_path / "pts.csv")

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(DataError):
            CsvExportService().export_csv([], blocker / "out.csv", ["a"])
