import numpy as np
import pytest

from embed_exporter import cli
from embed_exporter.export import ExportJob, export, read_texts
from embed_exporter.model import EmbeddingModel, ModelLoadError
from embed_exporter.store import write_store


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestReadTexts:
    def test_unique_lines_first_seen_order(self, tmp_path):
        path = tmp_path / "texts.txt"
        write_lines(path, ["weed", "sad", "weed", "rain", "sad"])
        assert read_texts(path) == ["weed", "sad", "rain"]

    def test_blank_lines_dropped(self, tmp_path):
        path = tmp_path / "texts.txt"
        path.write_text("weed\n\n   \nsad\n", encoding="utf-8")
        assert read_texts(path) == ["weed", "sad"]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "texts.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ValueError, match="no texts"):
            read_texts(path)


class TestModel:
    def test_dim_is_hidden_size(self, mean_model):
        assert mean_model.dim == 32

    def test_embed_shape_and_order(self, mean_model):
        vectors = mean_model.embed(["weed", "sad", "rain city"])
        assert vectors.shape == (3, 32)
        assert vectors.dtype == np.float32

    def test_deterministic(self, mean_model):
        a = mean_model.embed(["weed blunt", "gloom"])
        b = mean_model.embed(["weed blunt", "gloom"])
        np.testing.assert_array_equal(a, b)

    def test_batching_matches_single(self, mean_model):
        texts = ["weed", "sad", "rain", "city night", "coffee"]
        batched = mean_model.embed(texts, batch_size=2)
        singles = np.vstack([mean_model.embed([t]) for t in texts])
        np.testing.assert_allclose(batched, singles, atol=1e-5)

    def test_pooling_modes_differ(self, tiny_model_dir, mean_model):
        first = EmbeddingModel(tiny_model_dir, pooling="first")
        texts = ["weed blunt pot"]
        assert not np.allclose(mean_model.embed(texts), first.embed(texts))

    def test_empty_texts_rejected(self, mean_model):
        with pytest.raises(ValueError, match="no texts"):
            mean_model.embed([])
        with pytest.raises(ValueError, match="empty"):
            mean_model.embed(["weed", "  "])

    def test_bad_pooling_rejected(self, tiny_model_dir):
        with pytest.raises(ValueError, match="pooling"):
            EmbeddingModel(tiny_model_dir, pooling="max")

    def test_missing_model_raises_load_error(self, tmp_path):
        with pytest.raises(ModelLoadError):
            EmbeddingModel(str(tmp_path / "nope"))


class TestExport:
    def test_count_equals_unique_lines(self, tmp_path, tiny_model_dir, mean_model):
        path = tmp_path / "texts.txt"
        write_lines(path, ["weed", "sad", "weed", "rain"])
        out = tmp_path / "out.embv"
        job = ExportJob(str(path), tiny_model_dir, str(out))
        assert export(job, model=mean_model) == 3
        assert out.exists()

    def test_deterministic_bytes(self, tmp_path, tiny_model_dir, mean_model):
        path = tmp_path / "texts.txt"
        write_lines(path, ["weed", "sad", "rain city"])
        a, b = tmp_path / "a.embv", tmp_path / "b.embv"
        export(ExportJob(str(path), tiny_model_dir, str(a)), model=mean_model)
        export(ExportJob(str(path), tiny_model_dir, str(b)), model=mean_model)
        assert a.read_bytes() == b.read_bytes()

    def test_job_validation(self, tmp_path):
        with pytest.raises(ValueError, match="pooling"):
            ExportJob("x", "m", "y", pooling="max")
        with pytest.raises(ValueError, match="batch_size"):
            ExportJob("x", "m", "y", batch_size=0)


class TestStoreWriter:
    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            write_store(tmp_path / "x.embv", {})

    def test_mixed_dims_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="mixed"):
            write_store(tmp_path / "x.embv", {"a": np.ones(4), "b": np.ones(8)})


class TestCli:
    def test_export_command(self, tmp_path, tiny_model_dir, capsys):
        path = tmp_path / "texts.txt"
        write_lines(path, ["weed", "sad"])
        out = tmp_path / "out.embv"
        code = cli.main(
            [
                "export",
                "--model", tiny_model_dir,
                "--input", str(path),
                "--output", str(out),
            ]
        )
        assert code == 0
        assert "wrote 2 vectors" in capsys.readouterr().out
        assert out.exists()

    def test_export_bad_model_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "texts.txt"
        write_lines(path, ["weed"])
        code = cli.main(
            [
                "export",
                "--model", str(tmp_path / "nope"),
                "--input", str(path),
                "--output", str(tmp_path / "out.embv"),
            ]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err
