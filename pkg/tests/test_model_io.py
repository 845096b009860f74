"""Student model serialization: SMD1 container round trips and corruption."""

import struct

import pytest
import torch

from bitextmine.distill.encoder import EncoderConfig, build_student, encode
from bitextmine.distill.model_io import MAGIC, VERSION, load_student, save_student
from bitextmine.distill.vocab import train_vocab
from bitextmine.errors import BadMagic, IOFailure, TruncatedFile


@pytest.fixture(scope="module")
def trained():
    vocab = train_vocab(["save me to disk", "load me back"], 40)
    cfg = EncoderConfig(vocab_size=vocab.size, layers=1, width=8, heads=2, max_len=10)
    return build_student(cfg, seed=4), vocab


def _saved(trained, tmp_path, meta=None):
    model, vocab = trained
    path = tmp_path / "student.smd"
    save_student(path, model, vocab, meta)
    return path, model, vocab


class TestRoundTrip:
    def test_weights_bit_exact(self, trained, tmp_path):
        path, model, _ = _saved(trained, tmp_path)
        loaded, _, _ = load_student(path)
        for k, v in model.state_dict().items():
            assert torch.equal(loaded.state_dict()[k], v), k

    def test_encodings_bit_exact(self, trained, tmp_path):
        path, model, vocab = _saved(trained, tmp_path)
        loaded, lvocab, _ = load_student(path)
        ids = vocab.tokenize("save me")
        assert lvocab.tokenize("save me") == ids
        assert encode(ids, loaded).tobytes() == encode(ids, model).tobytes()

    def test_vocab_and_config_preserved(self, trained, tmp_path):
        path, model, vocab = _saved(trained, tmp_path)
        loaded, lvocab, _ = load_student(path)
        assert loaded.cfg == model.cfg
        assert lvocab.pieces == vocab.pieces
        assert lvocab.merges == vocab.merges

    def test_meta_round_trip(self, trained, tmp_path):
        meta = {"steps": 123, "note": "fixture"}
        path, _, _ = _saved(trained, tmp_path, meta)
        _, _, got = load_student(path)
        assert got == meta

    def test_meta_defaults_empty(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        _, _, got = load_student(path)
        assert got == {}

    def test_deterministic_bytes(self, trained, tmp_path):
        model, vocab = trained
        a = tmp_path / "a.smd"
        b = tmp_path / "b.smd"
        save_student(a, model, vocab)
        save_student(b, model, vocab)
        assert a.read_bytes() == b.read_bytes()

    def test_magic_prefix(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        raw = path.read_bytes()
        magic, version, _ = struct.unpack_from("<4sII", raw)
        assert magic == MAGIC == b"SMD1"
        assert version == VERSION == 1


class TestCorruption:
    def test_bad_magic(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"SMD9"
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            load_student(path)

    def test_bad_version(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 99)
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagic):
            load_student(path)

    def test_truncated_prefix(self, tmp_path):
        p = tmp_path / "x.smd"
        p.write_bytes(b"SMD1\x01")
        with pytest.raises(TruncatedFile):
            load_student(p)

    def test_truncated_header(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[: struct.calcsize("<4sII") + 5])
        with pytest.raises(TruncatedFile):
            load_student(path)

    def test_truncated_blob(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-3])
        with pytest.raises(TruncatedFile):
            load_student(path)

    def test_trailing_bytes_rejected(self, trained, tmp_path):
        path, _, _ = _saved(trained, tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
        with pytest.raises(TruncatedFile):
            load_student(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IOFailure):
            load_student(tmp_path / "absent.smd")

    def test_unwritable_path(self, trained, tmp_path):
        model, vocab = trained
        with pytest.raises(IOFailure):
            save_student(tmp_path / "no" / "dir" / "x.smd", model, vocab)
