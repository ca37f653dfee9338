import numpy as np
import pytest
from hypothesis import given, strategies as st

from xlingsim.corpus import (
    AlignedCorpus,
    AlignmentError,
    CorpusError,
    Granularity,
    TextUnit,
    load_corpus,
    load_manifest,
    normalize_c3g,
    sample_units,
    tokenize_words,
)

META = {"src_lang": "en", "tgt_lang": "fr", "granularity": "sentence", "subcorpus": "t"}


def _write(tmp_path, name, lines, trailing=True):
    p = tmp_path / name
    p.write_text("\n".join(lines) + ("\n" if trailing else ""), encoding="utf-8")
    return p


class TestLoadCorpus:
    def test_single_line(self, tmp_path):
        c = load_corpus(_write(tmp_path, "s", ["the house"]),
                        _write(tmp_path, "t", ["la maison"], trailing=False), META)
        assert len(c) == 1
        assert (c.src_lang, c.tgt_lang) == ("en", "fr")
        assert c.pairs[0].source.raw == "the house"
        assert c.pairs[0].target.raw == "la maison"
        assert c.pairs[0].source.pair_id == c.pairs[0].target.pair_id

    def test_line_count_mismatch(self, tmp_path):
        with pytest.raises(AlignmentError, match="3 vs 2"):
            load_corpus(_write(tmp_path, "s", ["a", "b", "c"]),
                        _write(tmp_path, "t", ["x", "y"]), META)

    def test_blank_pairs_dropped(self, tmp_path):
        c = load_corpus(_write(tmp_path, "s", ["a", "", "c"]),
                        _write(tmp_path, "t", ["x", "", "z"]), META)
        assert len(c) == 2 and c.dropped == 1
        assert [p.source.raw for p in c.pairs] == ["a", "c"]

    def test_one_sided_blank_drops_pair(self, tmp_path):
        c = load_corpus(_write(tmp_path, "s", ["a", "b"]), _write(tmp_path, "t", ["x", " "]), META)
        assert len(c) + c.dropped == 2 and c.dropped == 1

    def test_unreadable_file_names_path(self, tmp_path):
        missing = tmp_path / "nope.txt"
        with pytest.raises(OSError, match="nope.txt"):
            load_corpus(missing, _write(tmp_path, "t", ["x"]), META)

    def test_crlf_lines(self, tmp_path):
        s = tmp_path / "s"
        s.write_bytes(b"one\r\ntwo\r\n")
        t = tmp_path / "t"
        t.write_bytes(b"un\r\ndeux\r\n")
        c = load_corpus(s, t, META)
        assert [p.target.raw for p in c.pairs] == ["un", "deux"]

    def test_manifest(self, tmp_path):
        _write(tmp_path, "a.en", ["hello", "world"])
        _write(tmp_path, "a.fr", ["bonjour", "monde"])
        m = tmp_path / "a.manifest"
        m.write_text("# jrc slice\nsrc_lang = EN\ntgt_lang = fr\ngranularity = chunk\n"
                     "subcorpus = JRC\nsrc_file = a.en\ntgt_file = a.fr\n")
        c = load_manifest(m)
        assert (c.src_lang, c.gran, c.subcorpus, len(c)) == ("en", Granularity.CHUNK, "JRC", 2)

    def test_manifest_missing_key(self, tmp_path):
        m = tmp_path / "x.manifest"
        m.write_text("src_lang = en\n")
        with pytest.raises(CorpusError, match="tgt_lang"):
            load_manifest(m)

    @given(st.lists(st.tuples(st.sampled_from(["", " ", "a", "b c"]),
                              st.sampled_from(["", "x", "y z"])), max_size=30))
    def test_lossless_modulo_dropping(self, rows):
        c = AlignedCorpus.from_texts([r[0] for r in rows], [r[1] for r in rows],
                                     src_lang="en", tgt_lang="fr")
        assert len(c) + c.dropped == len(rows)


class TestTypes:
    def test_blank_unit_rejected(self):
        with pytest.raises(CorpusError):
            TextUnit("u", "en", Granularity.SENTENCE, "   ")

    def test_char_len(self):
        assert TextUnit("u", "fr", Granularity.SENTENCE, "Écoute !").char_len == 8

    def test_same_language_pair_rejected(self):
        with pytest.raises(CorpusError):
            AlignedCorpus.from_texts(["a"], ["b"], src_lang="en", tgt_lang="EN")

    def test_language_case_insensitive(self):
        c = AlignedCorpus.from_texts(["a"], ["b"], src_lang="EN", tgt_lang="Fr")
        assert (c.src_lang, c.tgt_lang) == ("en", "fr")

    def test_reversed(self):
        c = AlignedCorpus.from_texts(["a", "b"], ["x", "y"], src_lang="en", tgt_lang="fr")
        r = c.reversed()
        assert (r.src_lang, r.tgt_lang) == ("fr", "en")
        assert [u.raw for u in r.sources] == ["x", "y"]


class TestSampling:
    def _corpus(self, n):
        return AlignedCorpus.from_texts([f"s{i}" for i in range(n)], [f"t{i}" for i in range(n)],
                                        src_lang="en", tgt_lang="fr")

    def test_m_one(self):
        assert len(sample_units(self._corpus(5), 1, 0)) == 0

    def test_single_candidate(self):
        assert sample_units(self._corpus(1), 4, 123).tolist() == [0, 0, 0]

    def test_deterministic(self):
        c = self._corpus(50)
        a = sample_units(c, 1000, 42)
        b = sample_units(c, 1000, 42)
        assert np.array_equal(a, b) and len(a) == 999
        assert not np.array_equal(a, sample_units(c, 1000, 43))

    def test_uniform_range(self):
        idx = sample_units(self._corpus(7), 20001, 3)
        assert idx.min() == 0 and idx.max() == 6
        counts = np.bincount(idx, minlength=7)
        assert np.all(np.abs(counts / 20000 - 1 / 7) < 0.01)

    def test_empty_corpus(self):
        empty = AlignedCorpus((), "en", "fr", Granularity.SENTENCE, "x")
        with pytest.raises(CorpusError):
            sample_units(empty, 3, 0)


class TestNormalizeC3G:
    @pytest.mark.parametrize("text,expected", [
        ("The CAT!", "the cat"),
        ("a---b  c", "ab c"),
        ("Écoute", "coute"),
        ("  l'été 2017 ", "lt 2017"),
        ("tab\there", "tabhere"),
        ("", ""),
    ])
    def test_examples(self, text, expected):
        assert normalize_c3g(text) == expected

    @given(st.text())
    def test_idempotent(self, text):
        once = normalize_c3g(text)
        assert normalize_c3g(once) == once
        assert set(once) <= set("abcdefghijklmnopqrstuvwxyz0123456789 ")
        assert "  " not in once and once == once.strip()


class TestTokenize:
    @pytest.mark.parametrize("text,expected", [
        ("La maison, rouge.", ["la", "maison", "rouge"]),
        ("", []),
        ("don't stop", ["don't", "stop"]),
        ("« peut-être »  ...", ["peut-être"]),
        ("(x) y!", ["x", "y"]),
    ])
    def test_examples(self, text, expected):
        assert tokenize_words(text) == expected

    @given(st.text())
    def test_word_view_idempotent(self, text):
        toks = tokenize_words(text)
        assert tokenize_words(" ".join(toks)) == toks
        assert all(toks)
