"""Exception types shared across the toolkit."""


class StacknerError(Exception):
    """Base class for all toolkit errors."""


# corpus / brat / CoNLL

class MalformedAnnotation(StacknerError):
    """A brat annotation line could not be parsed."""


class OffsetOutOfRange(StacknerError):
    """An annotation offset points outside the document text."""


class SurfaceMismatch(StacknerError):
    """The surface recorded in an annotation disagrees with the text slice."""


class OverlappingEntities(StacknerError):
    """Two entity annotations overlap on the character level."""


class MalformedConll(StacknerError):
    """A CoNLL line does not have exactly two columns."""


# embeddings

class EmptyVocab(StacknerError):
    """Training was requested on an empty vocabulary."""


class EmptyCorpus(StacknerError):
    """BPE learning was requested on an empty frequency map."""


class MalformedEmbeddingFile(StacknerError):
    """A word2vec text file is inconsistent with its own header."""


class OovAllUnknownWarning(UserWarning):
    """Every subword of an out-of-vocabulary word is unknown; the
    composed vector is zero."""


# models / training

class InsufficientData(StacknerError):
    """Not enough data to train the requested model."""


class DimensionMismatch(StacknerError):
    """An embedder returned a vector of unexpected length."""


class InvalidTagIndex(StacknerError):
    """A gold tag index lies outside the label inventory."""


class EmptyDataset(StacknerError):
    """Training was requested on an empty dataset."""


class EmptySpace(StacknerError):
    """A hyperparameter search space contains no candidate."""


class ModelMissingComponent(StacknerError):
    """A model bundle lacks a component required for inference."""


# evaluation

class DuplicateMention(StacknerError):
    """The same mention tuple occurs twice within one input set."""
