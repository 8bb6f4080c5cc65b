import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stackner import corpus
from stackner.errors import (
    MalformedAnnotation,
    MalformedConll,
    OffsetOutOfRange,
    OverlappingEntities,
    SurfaceMismatch,
)

FIG_TEXT = "tratamiento amoxicilina - clavulánico oral"
FIG_TOKENS = ["tratamiento", "amoxicilina", "-", "clavulánico", "oral"]


# parse_brat

def test_parse_brat_single_entity():
    doc = corpus.parse_brat("tratamiento amoxicilina",
                            "T1\tNORMALIZABLES 12 23\tamoxicilina")
    assert len(doc.entities) == 1
    ent = doc.entities[0]
    assert (ent.start, ent.end, ent.label) == (12, 23, "NORMALIZABLES")
    assert ent.surface == "amoxicilina"


def test_parse_brat_empty_ann():
    doc = corpus.parse_brat("whatever text", "")
    assert doc.entities == []


def test_parse_brat_offset_out_of_range():
    with pytest.raises(OffsetOutOfRange):
        corpus.parse_brat("0123456789", "T1\tX 2 99\tfoo")


def test_parse_brat_surface_mismatch():
    with pytest.raises(SurfaceMismatch):
        corpus.parse_brat("tratamiento amoxicilina", "T1\tX 12 23\tparacetamol")


def test_parse_brat_malformed_line():
    with pytest.raises(MalformedAnnotation):
        corpus.parse_brat("text", "T1 no tabs here")
    with pytest.raises(MalformedAnnotation):
        corpus.parse_brat("text", "T1\tLAB 0\ttext")


def test_parse_brat_skips_non_textbound():
    ann = "T1\tX 0 4\ttext\nR1\tRel Arg1:T1 Arg2:T1\n#1\tAnnotatorNotes T1\tnote\n"
    doc = corpus.parse_brat("text", ann)
    assert len(doc.entities) == 1


def test_parse_brat_sorted_by_start():
    ann = "T2\tX 5 9\ttext\nT1\tY 0 4\tmore\n"
    doc = corpus.parse_brat("more text", ann)
    assert [e.ann_id for e in doc.entities] == ["T1", "T2"]


# tokenize

def test_tokenize_figure_sentence():
    assert [t.surface for t in corpus.tokenize(FIG_TEXT)] == FIG_TOKENS


def test_tokenize_splits_non_alnum():
    assert [t.surface for t in corpus.tokenize("pH7,4")] == ["pH7", ",", "4"]


def test_tokenize_empty():
    assert corpus.tokenize("") == []


def test_tokenize_offsets_slice_back():
    text = "dosis: 40 mg/día (v.o.)"
    for tok in corpus.tokenize(text):
        assert text[tok.start:tok.end] == tok.surface


@settings(max_examples=200)
@given(st.text(alphabet=string.ascii_letters + "áéíóúñ0123456789 .,-/()\t\n", max_size=80))
def test_tokenize_totality(text):
    """Every non-whitespace character lands in exactly one token."""
    toks = corpus.tokenize(text)
    covered = []
    for tok in toks:
        assert text[tok.start:tok.end] == tok.surface
        assert not any(c.isspace() for c in tok.surface)
        covered.extend(range(tok.start, tok.end))
    expected = [i for i, c in enumerate(text) if not c.isspace()]
    assert covered == expected


# align_bio

def _figure_doc():
    ann = f"T1\tNORM 12 37\t{FIG_TEXT[12:37]}"
    return corpus.parse_brat(FIG_TEXT, ann)


def test_align_figure_sentence():
    doc = _figure_doc()
    sents, warnings = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    assert sents[0].tags == ["O", "B-NORM", "I-NORM", "I-NORM", "O"]
    assert warnings == []


def test_align_no_entities_all_o():
    doc = corpus.parse_brat(FIG_TEXT, "")
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    assert sents[0].tags == ["O"] * 5


def test_align_boundary_mismatch_warns():
    text = "tratamiento amoxicilina"
    doc = corpus.parse_brat(text, f"T1\tX 13 16\t{text[13:16]}")
    sents, warnings = corpus.align_bio(doc, [corpus.tokenize(text)])
    assert sents[0].tags == ["O", "B-X"]
    assert len(warnings) == 1
    assert (warnings[0].entity_start, warnings[0].entity_end) == (13, 16)
    assert (warnings[0].token_start, warnings[0].token_end) == (12, 23)


def test_align_overlapping_entities_raise():
    text = "uno dos tres"
    ann = "T1\tA 0 7\tuno dos\nT2\tB 4 12\tdos tres\n"
    doc = corpus.parse_brat(text, ann)
    with pytest.raises(OverlappingEntities):
        corpus.align_bio(doc, [corpus.tokenize(text)])


def test_align_keep_longest_drops_shorter():
    text = "uno dos tres"
    ann = "T1\tA 0 7\tuno dos\nT2\tB 4 12\tdos tres\n"
    doc = corpus.parse_brat(text, ann)
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(text)], keep_longest=True)
    assert sents[0].tags == ["O", "B-B", "I-B"]


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_align_bio_validity_random_entities(data):
    """BIO validity holds for arbitrary (non-overlapping) entity placements."""
    words = data.draw(st.lists(
        st.text(alphabet=string.ascii_lowercase, min_size=1, max_size=6),
        min_size=1, max_size=20))
    text = " ".join(words)
    n = len(text)
    n_ents = data.draw(st.integers(0, 4))
    spans = []
    cursor = 0
    for _ in range(n_ents):
        if cursor >= n - 1:
            break
        s = data.draw(st.integers(cursor, n - 1))
        e = data.draw(st.integers(s + 1, n))
        if text[s:e].strip():
            spans.append((s, e))
            cursor = e
    ann = "\n".join(f"T{i+1}\tX {s} {e}\t{text[s:e]}" for i, (s, e) in enumerate(spans))
    doc = corpus.parse_brat(text, ann)
    # random sentence split: cut token list in two
    tokens = corpus.tokenize(text)
    cut = data.draw(st.integers(0, len(tokens)))
    groups = [g for g in (tokens[:cut], tokens[cut:]) if g]
    sents, _ = corpus.align_bio(doc, groups)
    for sent in sents:
        assert corpus.check_bio(sent.tags), sent.tags


# decode_bio

def test_decode_figure_sentence():
    doc = _figure_doc()
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    mentions = corpus.decode_bio(sents[0], "doc")
    assert len(mentions) == 1
    assert (mentions[0].start, mentions[0].end, mentions[0].label) == (12, 37, "NORM")


def test_decode_all_o_empty():
    sent = corpus.TaggedSentence(corpus.tokenize("uno dos"), ["O", "O"])
    assert corpus.decode_bio(sent) == []


def test_decode_repairs_leading_i():
    sent = corpus.TaggedSentence(corpus.tokenize("uno dos"), ["O", "I-NORM"])
    mentions = corpus.decode_bio(sent, "d")
    assert len(mentions) == 1
    assert (mentions[0].start, mentions[0].end, mentions[0].label) == (4, 7, "NORM")


def test_decode_label_change_starts_new_mention():
    sent = corpus.TaggedSentence(corpus.tokenize("uno dos tres"),
                                 ["B-A", "I-B", "I-B"])
    mentions = corpus.decode_bio(sent, "d")
    assert [(m.start, m.end, m.label) for m in mentions] == [(0, 3, "A"), (4, 12, "B")]


def test_round_trip_on_token_boundaries():
    """decode(align(x)) is the identity for token-aligned entities."""
    text = "El paciente tomó ibuprofeno y después naproxeno sódico cada día"
    tokens = corpus.tokenize(text)
    ents = [(tokens[3].start, tokens[3].end, "NORM"),
            (tokens[6].start, tokens[7].end, "NORM")]
    ann = "\n".join(f"T{i+1}\tNORM {s} {e}\t{text[s:e]}"
                    for i, (s, e, _) in enumerate(ents))
    doc = corpus.parse_brat(text, ann)
    sents, warnings = corpus.align_bio(doc, [tokens])
    assert warnings == []
    mentions = corpus.document_mentions(sents, "doc")
    assert [(m.start, m.end, m.label) for m in mentions] == ents


# CoNLL io

def test_write_conll_figure_rows():
    doc = _figure_doc()
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    out = corpus.write_conll(sents)
    lines = out.split("\n")
    assert lines[:5] == ["tratamiento O", "amoxicilina B-NORM", "- I-NORM",
                         "clavulánico I-NORM", "oral O"]
    assert lines[5] == ""  # blank-line terminator
    assert "-DOCSTART-" not in out


def test_write_conll_empty():
    assert corpus.write_conll([]) == ""


def test_read_conll_round_trip_with_offsets():
    doc = _figure_doc()
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    back = corpus.read_conll(corpus.write_conll(sents), corpus.write_offsets(sents))
    assert back == sents


def test_read_conll_without_offsets_keeps_tokens_and_tags():
    doc = _figure_doc()
    sents, _ = corpus.align_bio(doc, [corpus.tokenize(FIG_TEXT)])
    back = corpus.read_conll(corpus.write_conll(sents))
    assert [t.surface for t in back[0].tokens] == FIG_TOKENS
    assert back[0].tags == sents[0].tags


def test_read_conll_wrong_columns():
    with pytest.raises(MalformedConll):
        corpus.read_conll("onlyonecolumn\n")
    with pytest.raises(MalformedConll):
        corpus.read_conll("three columns here\n")


def test_read_conll_offsets_structure_mismatch():
    with pytest.raises(MalformedConll):
        corpus.read_conll("a O\nb O\n", "0 1\n")


def test_write_ann_exact_surface():
    text = "toma ibuprofeno ahora"
    sent = corpus.TaggedSentence(corpus.tokenize(text), ["O", "B-NORM", "O"])
    mentions = corpus.decode_bio(sent, "d")
    ann = corpus.write_ann(mentions, text=text)
    assert ann == "T1\tNORM 5 15\tibuprofeno\n"
    reparsed = corpus.parse_ann_mentions(ann, "d")
    assert reparsed == mentions


def test_write_ann_reconstructed_surface():
    text = "toma amoxicilina - clavulánico ya"
    sent = corpus.TaggedSentence(corpus.tokenize(text),
                                 ["O", "B-NORM", "I-NORM", "I-NORM", "O"])
    mentions = corpus.decode_bio(sent, "d")
    ann = corpus.write_ann(mentions, sentences=[sent])
    assert "amoxicilina - clavulánico" in ann


def test_label_inventory_from_data():
    sents = [corpus.TaggedSentence(corpus.tokenize("a b"), ["B-X", "O"]),
             corpus.TaggedSentence(corpus.tokenize("c"), ["B-A"])]
    assert corpus.label_inventory(sents) == ["A", "X"]
