"""brat standoff and CoNLL corpus machinery.

Documents are raw character strings; every offset in this module indexes
Unicode scalar values of that exact string. Conversion to the two-column
CoNLL format is lossy on offsets, so a sidecar ".offsets" file (same
line/blank-line structure, one "start end" pair per token) accompanies
every CoNLL file and makes predictions mappable back to brat offsets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    MalformedAnnotation,
    MalformedConll,
    OffsetOutOfRange,
    OverlappingEntities,
    SurfaceMismatch,
)
from .evaluation import EntityMention


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str


@dataclass(frozen=True)
class EntityAnnotation:
    ann_id: str
    label: str
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass
class TaggedSentence:
    tokens: list[Token]
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")


@dataclass
class AnnotatedDocument:
    doc: RawDocument
    entities: list[EntityAnnotation]
    sentences: list[TaggedSentence] = field(default_factory=list)


@dataclass(frozen=True)
class AlignmentWarning:
    """An entity edge fell strictly inside a token (or no token at all)."""
    doc_id: str
    ann_id: str
    entity_start: int
    entity_end: int
    token_start: int
    token_end: int


def parse_brat(txt_content: str, ann_content: str, doc_id: str = "doc") -> AnnotatedDocument:
    """Parse a brat .txt/.ann pair into entity annotations.

    Only text-bound lines (id starting with "T") are read; relations,
    events and attributes are skipped. Entities come back sorted by
    (start, end).
    """
    entities = []
    for raw in ann_content.splitlines():
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if not line.startswith("T"):
            continue
        parts = line.split("\t", 2)
        if len(parts) != 3:
            raise MalformedAnnotation(f"{doc_id}: bad text-bound line: {line!r}")
        ann_id, span_part, surface = parts
        fields = span_part.split(" ")
        if len(fields) != 3:
            raise MalformedAnnotation(f"{doc_id}: bad span field: {span_part!r}")
        label = fields[0]
        try:
            start, end = int(fields[1]), int(fields[2])
        except ValueError as exc:
            raise MalformedAnnotation(f"{doc_id}: non-integer offsets: {span_part!r}") from exc
        if start < 0 or start >= end or end > len(txt_content):
            raise OffsetOutOfRange(
                f"{doc_id}/{ann_id}: span ({start}, {end}) outside text of length {len(txt_content)}")
        if txt_content[start:end] != surface:
            raise SurfaceMismatch(
                f"{doc_id}/{ann_id}: annotation surface {surface!r} != text slice "
                f"{txt_content[start:end]!r}")
        entities.append(EntityAnnotation(ann_id, label, start, end, surface))
    entities.sort(key=lambda e: (e.start, e.end))
    return AnnotatedDocument(RawDocument(doc_id, txt_content), entities)


def parse_ann_mentions(ann_content: str, doc_id: str) -> list[EntityMention]:
    """Mention tuples from an .ann file alone (no surface verification)."""
    mentions = []
    for line in ann_content.splitlines():
        if not line.strip() or not line.startswith("T"):
            continue
        parts = line.split("\t", 2)
        if len(parts) < 2:
            raise MalformedAnnotation(f"{doc_id}: bad text-bound line: {line!r}")
        fields = parts[1].split(" ")
        if len(fields) != 3:
            raise MalformedAnnotation(f"{doc_id}: bad span field: {parts[1]!r}")
        mentions.append(EntityMention(doc_id, int(fields[1]), int(fields[2]), fields[0]))
    return mentions


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization refined by splitting on non-alphanumerics.

    Every maximal run of alphanumeric characters (Unicode letters and
    digits, so accented Spanish characters stay intact) becomes one
    token and every single other non-whitespace character becomes its
    own token.
    """
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(Token(text[i:j], i, j))
            i = j
        else:
            tokens.append(Token(ch, i, i + 1))
            i += 1
    return tokens


def tokenize_spans(text: str, spans: list[tuple[int, int]]) -> list[list[Token]]:
    """Tokenize each (start, end) sentence span, keeping document offsets."""
    out = []
    for s, e in spans:
        toks = [Token(t.surface, t.start + s, t.end + s) for t in tokenize(text[s:e])]
        if toks:
            out.append(toks)
    return out


def _resolve_overlaps(entities: list[EntityAnnotation], keep_longest: bool,
                      doc_id: str) -> list[EntityAnnotation]:
    kept: list[EntityAnnotation] = []
    for ent in sorted(entities, key=lambda e: (e.start, e.end)):
        if kept and ent.start < kept[-1].end:
            if not keep_longest:
                raise OverlappingEntities(
                    f"{doc_id}: {kept[-1].ann_id} ({kept[-1].start}, {kept[-1].end}) overlaps "
                    f"{ent.ann_id} ({ent.start}, {ent.end})")
            if (ent.end - ent.start) > (kept[-1].end - kept[-1].start):
                kept[-1] = ent
            continue
        kept.append(ent)
    return kept


def align_bio(doc: AnnotatedDocument, sentence_tokens: list[list[Token]],
              keep_longest: bool = False):
    """Turn character-offset entities into per-sentence BIO tags.

    A token is tagged B-/I-label iff its span overlaps an entity span;
    the first overlapping token of an entity (within a sentence) gets
    B-, later ones I-. Entity edges strictly inside a token are tagged
    by the same overlap rule and reported. Returns
    (sentences, warnings).
    """
    entities = _resolve_overlaps(doc.entities, keep_longest, doc.doc.doc_id)
    warnings: list[AlignmentWarning] = []
    covered = [False] * len(entities)
    sentences = []
    ei = 0
    for tokens in sentence_tokens:
        tags = []
        open_idx = None  # entity index emitted for the previous token
        for tok in tokens:
            while ei < len(entities) and entities[ei].end <= tok.start:
                ei += 1
            hit = None
            for k in range(ei, len(entities)):
                if entities[k].start >= tok.end:
                    break
                if entities[k].end > tok.start:
                    hit = k
                    break
            if hit is None:
                tags.append("O")
                open_idx = None
                continue
            ent = entities[hit]
            covered[hit] = True
            if (tok.start < ent.start < tok.end) or (tok.start < ent.end < tok.end):
                warnings.append(AlignmentWarning(
                    doc.doc.doc_id, ent.ann_id, ent.start, ent.end, tok.start, tok.end))
            tags.append(("I-" if hit == open_idx else "B-") + ent.label)
            open_idx = hit
        sentences.append(TaggedSentence(tokens, tags))
    for k, ent in enumerate(entities):
        if not covered[k]:
            warnings.append(AlignmentWarning(
                doc.doc.doc_id, ent.ann_id, ent.start, ent.end, -1, -1))
    return sentences, warnings


def decode_bio(sentence: TaggedSentence, doc_id: str = "") -> list[EntityMention]:
    """Maximal tagged spans as offset mentions, with BIO repair.

    Repair rule: a leading I-X (after O or at sentence start) is treated
    as B-X; a label change inside an I-run starts a new mention.
    """
    mentions = []
    cur_label = None
    cur_start = cur_end = 0
    for tok, tag in zip(sentence.tokens, sentence.tags):
        if tag == "O":
            prefix, label = "O", None
        elif len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
            prefix, label = tag[0], tag[2:]
        else:
            prefix, label = "O", None  # unparseable tag treated as O
        starts_new = label is not None and (prefix == "B" or label != cur_label)
        if cur_label is not None and (label is None or starts_new):
            mentions.append(EntityMention(doc_id, cur_start, cur_end, cur_label))
            cur_label = None
        if starts_new:
            cur_label, cur_start = label, tok.start
        if cur_label is not None:
            cur_end = tok.end
    if cur_label is not None:
        mentions.append(EntityMention(doc_id, cur_start, cur_end, cur_label))
    return mentions


def document_mentions(sentences: list[TaggedSentence], doc_id: str = "") -> list[EntityMention]:
    out = []
    for sent in sentences:
        out.extend(decode_bio(sent, doc_id))
    return out


def check_bio(tags: list[str]) -> bool:
    """True iff every I-X follows a B-X or I-X with the same X."""
    prev = "O"
    for tag in tags:
        if tag.startswith("I-"):
            if not (prev == "B-" + tag[2:] or prev == "I-" + tag[2:]):
                return False
        prev = tag
    return True


def write_conll(sentences: list[TaggedSentence]) -> str:
    """Two columns "token tag", blank line after every sentence."""
    lines = []
    for sent in sentences:
        for tok, tag in zip(sent.tokens, sent.tags):
            lines.append(f"{tok.surface} {tag}")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def write_offsets(sentences: list[TaggedSentence]) -> str:
    lines = []
    for sent in sentences:
        for tok in sent.tokens:
            lines.append(f"{tok.start} {tok.end}")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def _blocks(content: str) -> list[list[str]]:
    blocks, cur = [], []
    for line in content.splitlines():
        if line.strip():
            cur.append(line)
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    return blocks


def read_conll(content: str, offsets_content: str | None = None) -> list[TaggedSentence]:
    """Parse CoNLL text, with real offsets when the sidecar is given.

    Without a sidecar, offsets are synthesized from a single-space join
    of the tokens (one document-wide running position, sentences
    separated by one newline); they are consistent but not the original
    document offsets.
    """
    token_blocks = []
    for block in _blocks(content):
        rows = []
        for line in block:
            cols = line.split()
            if len(cols) != 2:
                raise MalformedConll(f"expected 2 columns, got {len(cols)}: {line!r}")
            rows.append((cols[0], cols[1]))
        token_blocks.append(rows)

    offset_blocks = None
    if offsets_content is not None:
        offset_blocks = []
        for block in _blocks(offsets_content):
            rows = []
            for line in block:
                cols = line.split()
                if len(cols) != 2:
                    raise MalformedConll(f"expected 2 offset columns: {line!r}")
                rows.append((int(cols[0]), int(cols[1])))
            offset_blocks.append(rows)
        if [len(b) for b in offset_blocks] != [len(b) for b in token_blocks]:
            raise MalformedConll("offsets sidecar structure does not match CoNLL file")

    sentences = []
    pos = 0
    for si, rows in enumerate(token_blocks):
        tokens = []
        tags = []
        for ti, (surface, tag) in enumerate(rows):
            if offset_blocks is not None:
                start, end = offset_blocks[si][ti]
            else:
                start, end = pos, pos + len(surface)
                pos = end + 1  # synthetic single-space gap
            tokens.append(Token(surface, start, end))
            tags.append(tag)
        sentences.append(TaggedSentence(tokens, tags))
    return sentences


def write_ann(mentions: list[EntityMention], text: str | None = None,
              sentences: list[TaggedSentence] | None = None) -> str:
    """Render mentions as brat text-bound lines.

    The surface column is the exact text slice when `text` is given;
    otherwise it is reconstructed from token surfaces with space-filled
    gaps (requires `sentences` with real offsets).
    """
    by_pos = sorted(mentions, key=lambda m: (m.start, m.end, m.label))
    token_index = []
    if text is None and sentences is not None:
        for sent in sentences:
            token_index.extend(sent.tokens)
        token_index.sort(key=lambda t: t.start)
    lines = []
    for i, m in enumerate(by_pos, start=1):
        if text is not None:
            surface = text[m.start:m.end]
        else:
            parts = []
            prev_end = None
            for tok in token_index:
                if tok.end <= m.start or tok.start >= m.end:
                    continue
                if prev_end is not None and tok.start > prev_end:
                    parts.append(" " * (tok.start - prev_end))
                parts.append(tok.surface)
                prev_end = tok.end
            surface = "".join(parts)
        lines.append(f"T{i}\t{m.label} {m.start} {m.end}\t{surface}")
    return "\n".join(lines) + ("\n" if lines else "")


def label_inventory(sentences: list[TaggedSentence]) -> list[str]:
    """Sorted entity labels observed in the data (never hard-coded)."""
    labels = set()
    for sent in sentences:
        for tag in sent.tags:
            if tag != "O":
                labels.add(tag[2:])
    return sorted(labels)
