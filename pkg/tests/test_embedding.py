import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirelex.embedding import (
    EmbeddingError,
    EmbeddingStore,
    HashProvider,
    HttpProvider,
    StoreFormatError,
    StoreProvider,
    cosine_similarity,
    read_store,
    write_store,
)

finite_vec = st.lists(
    st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), min_size=4, max_size=4
).filter(lambda v: np.linalg.norm(v) > 1e-6)


class TestCosineSimilarity:
    def test_identical(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_45_degrees(self):
        got = cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert got == pytest.approx(0.7071067811865475, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_zero_norm(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine_similarity(np.zeros(3), np.ones(3))

    def test_result_clamped(self):
        v = np.full(50, 0.1)
        assert -1.0 <= cosine_similarity(v, v) <= 1.0

    @given(finite_vec, finite_vec)
    @settings(max_examples=200, deadline=None)
    def test_symmetry_exact(self, u, v):
        u, v = np.array(u), np.array(v)
        assert cosine_similarity(u, v) == cosine_similarity(v, u)

    @given(finite_vec, finite_vec, st.floats(0.01, 100), st.floats(0.01, 100))
    @settings(max_examples=200, deadline=None)
    def test_scale_invariance(self, u, v, a, b):
        u, v = np.array(u), np.array(v)
        assert cosine_similarity(a * u, b * v) == pytest.approx(
            cosine_similarity(u, v), abs=1e-12
        )


class TestHashProvider:
    def test_deterministic_and_unit_norm(self):
        provider = HashProvider(dim=64, seed=0)
        first = provider.embed("weed")
        second = HashProvider(dim=64, seed=0).embed("weed")
        np.testing.assert_array_equal(first, second)
        assert np.linalg.norm(first) == pytest.approx(1.0, abs=1e-12)

    def test_memoized_identity(self):
        provider = HashProvider(dim=32, seed=1)
        assert provider.embed("blunt") is provider.embed("blunt")

    def test_seed_changes_vectors(self):
        a = HashProvider(dim=64, seed=0).embed("weed")
        b = HashProvider(dim=64, seed=1).embed("weed")
        assert not np.array_equal(a, b)

    def test_shared_tokens_raise_similarity(self):
        provider = HashProvider(dim=64, seed=0)
        overlap = cosine_similarity(
            provider.embed("weed makes rain"), provider.embed("weed makes sun")
        )
        disjoint = cosine_similarity(
            provider.embed("weed makes rain"), provider.embed("boats sail far")
        )
        assert overlap > disjoint

    def test_distinct_texts_never_collide(self):
        provider = HashProvider(dim=64, seed=0)
        rng = np.random.default_rng(7)
        words = [f"tok{i}" for i in range(500)]
        for _ in range(1000):
            a, b = rng.choice(len(words), size=2, replace=False)
            sim = cosine_similarity(provider.embed(words[a]), provider.embed(words[b]))
            assert sim < 1.0

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            HashProvider(dim=8).embed("")

    def test_vectors_read_only(self):
        vec = HashProvider(dim=8).embed("weed")
        with pytest.raises(ValueError):
            vec[0] = 5.0

    def test_bad_dim_rejected(self):
        with pytest.raises(ValueError):
            HashProvider(dim=0)


class TestStoreRoundTrip:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        entries = {f"k{i}": rng.standard_normal(16).astype(np.float32) for i in range(20)}
        path = tmp_path / "vectors.embv"
        write_store(path, entries)
        store = read_store(path)
        assert store.dim == 16
        assert len(store) == 20
        for key, vec in entries.items():
            np.testing.assert_array_equal(store.vectors[key], vec.astype(np.float64))

    def test_read_promotes_to_float64(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"a": np.ones(4, dtype=np.float32)})
        assert read_store(path).vectors["a"].dtype == np.float64

    def test_mixed_dims_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="mixed or invalid"):
            write_store(tmp_path / "v.embv", {"a": np.ones(4), "b": np.ones(8)})

    def test_corrupt_magic_rejected(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"a": np.ones(4)})
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(StoreFormatError, match="not an EMBV store"):
            read_store(path)

    def test_bad_version_rejected(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"a": np.ones(4)})
        data = bytearray(path.read_bytes())
        data[4] = 9
        path.write_bytes(bytes(data))
        with pytest.raises(StoreFormatError, match="unsupported store version"):
            read_store(path)

    def test_truncation_rejected(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"a": np.ones(4)})
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(StoreFormatError, match="truncated"):
            read_store(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"a": np.ones(4)})
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(StoreFormatError, match="trailing bytes"):
            read_store(path)

    def test_empty_store_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty store"):
            write_store(tmp_path / "v.embv", {})

    def test_unicode_keys(self, tmp_path):
        path = tmp_path / "v.embv"
        write_store(path, {"émotionnellement déprimé": np.ones(4)})
        assert "émotionnellement déprimé" in read_store(path).vectors


class TestStoreProvider:
    def test_serves_vectors(self):
        store = EmbeddingStore(dim=4, vectors={"weed": np.arange(4.0)})
        provider = StoreProvider(store)
        np.testing.assert_array_equal(provider.embed("weed"), np.arange(4.0))

    def test_miss_is_error(self):
        provider = StoreProvider(EmbeddingStore(dim=4, vectors={"weed": np.ones(4)}))
        with pytest.raises(KeyError, match="zzz"):
            provider.embed("zzz")


class _EmbedHandler(BaseHTTPRequestHandler):
    fail_first = 0
    bad_dim = False
    requests_seen = 0

    def do_POST(self):
        cls = type(self)
        cls.requests_seen += 1
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if cls.fail_first > 0:
            cls.fail_first -= 1
            self.send_response(500)
            self.end_headers()
            return
        dim = 3 if cls.bad_dim else 4
        vectors = [[float(len(t)), 1.0, 2.0, 3.0][:dim] for t in body["texts"]]
        payload = json.dumps({"dim": dim, "vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def embed_server():
    _EmbedHandler.fail_first = 0
    _EmbedHandler.bad_dim = False
    _EmbedHandler.requests_seen = 0
    server = HTTPServer(("127.0.0.1", 0), _EmbedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join()


class TestHttpProvider:
    def test_basic_fetch(self, embed_server):
        provider = HttpProvider(url=embed_server, dim=4, backoff=0.01)
        np.testing.assert_array_equal(provider.embed("weed"), [4.0, 1.0, 2.0, 3.0])

    def test_retry_recovers(self, embed_server):
        _EmbedHandler.fail_first = 2
        provider = HttpProvider(url=embed_server, dim=4, retries=3, backoff=0.01)
        np.testing.assert_array_equal(provider.embed("ab"), [2.0, 1.0, 2.0, 3.0])
        assert _EmbedHandler.requests_seen == 3

    def test_retry_budget_exhausted(self, embed_server):
        _EmbedHandler.fail_first = 5
        provider = HttpProvider(url=embed_server, dim=4, retries=3, backoff=0.01)
        with pytest.raises(EmbeddingError, match="after 3 attempts"):
            provider.embed("weed")

    def test_dim_mismatch(self, embed_server):
        _EmbedHandler.bad_dim = True
        provider = HttpProvider(url=embed_server, dim=4, retries=1, backoff=0.01)
        with pytest.raises(EmbeddingError):
            provider.embed("weed")

    def test_memoized_single_request(self, embed_server):
        provider = HttpProvider(url=embed_server, dim=4, backoff=0.01)
        provider.embed("weed")
        provider.embed("weed")
        assert _EmbedHandler.requests_seen == 1
