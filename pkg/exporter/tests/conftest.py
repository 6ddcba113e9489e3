"""Shared fixtures: a tiny randomly initialized BERT saved to a tmp dir.

No network or model hub is needed; the model is built from a config and a
hand-written wordpiece vocabulary, which is plenty for exercising pooling,
the store format, and the HTTP protocol.
"""
import pytest

WORDS = [
    "weed", "blunt", "pot", "grass", "herb",
    "sad", "gloom", "low", "numb", "blue",
    "rain", "city", "night", "coffee", "music",
]
SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    root = tmp_path_factory.mktemp("tiny-bert")
    vocab = SPECIALS + WORDS + list("abcdefghijklmnopqrstuvwxyz")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)

    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    out = root / "model"
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def mean_model(tiny_model_dir):
    from embed_exporter.model import EmbeddingModel

    return EmbeddingModel(tiny_model_dir, pooling="mean")
