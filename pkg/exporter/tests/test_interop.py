"""Interop acceptance: stores and the HTTP service must satisfy the
consumer toolkit (kirelex) exactly — its reader, its cosine kernel, and
its HTTP client."""
import threading

import numpy as np
import pytest

from kirelex.embedding import HttpProvider, cosine_similarity, read_store

from embed_exporter.export import ExportJob, export
from embed_exporter.service import create_server


@pytest.fixture(scope="module")
def exported(tmp_path_factory, tiny_model_dir, mean_model):
    root = tmp_path_factory.mktemp("interop")
    texts_path = root / "texts.txt"
    texts = ["weed", "sad gloom", "rain city night"]
    texts_path.write_text("\n".join(texts) + "\n", encoding="utf-8")
    out = root / "export.embv"
    export(ExportJob(str(texts_path), tiny_model_dir, str(out)), model=mean_model)
    return {"texts": texts, "path": out}


class TestStoreInterop:
    def test_primary_reader_accepts_export(self, exported, mean_model):
        store = read_store(exported["path"])
        assert store.dim == mean_model.dim == 32
        assert len(store) == len(exported["texts"])
        assert sorted(store.vectors) == sorted(exported["texts"])

    def test_self_cosine_is_one(self, exported):
        store = read_store(exported["path"])
        vec = store.vectors["weed"]
        assert cosine_similarity(vec, vec) == 1.0

    def test_vectors_match_model_within_f32(self, exported, mean_model):
        store = read_store(exported["path"])
        for text in exported["texts"]:
            expected = mean_model.embed([text])[0].astype(np.float64)
            np.testing.assert_allclose(store.vectors[text], expected, atol=1e-6)


class TestHttpInterop:
    def test_primary_client_matches_export(self, exported, mean_model):
        server = create_server(mean_model, port=0)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}"
            provider = HttpProvider(url, dim=mean_model.dim)
            store = read_store(exported["path"])
            for text in exported["texts"]:
                served = provider.embed(text)
                # store holds f32; the service sends f32 values as JSON
                np.testing.assert_allclose(served, store.vectors[text], atol=1e-6)
        finally:
            server.shutdown()
            server.server_close()
